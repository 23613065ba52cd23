#pragma once

// Deterministic text formats.
//
//   Snapshot (one file per field):
//     line 1: "ks2d-snapshot-v1"
//     line 2: nx ny lx ly t            (numbers in %.17g)
//     then ny lines of nx values       (%.17g, space separated, row-major)
//
//   Series CSV: fixed header
//     t,mass,linf_u,linf_v,min_motility,F,E,hminus1,weighted_l2
//   with %.17g values, flushed after every row so a killed run leaves a
//   valid prefix.
//
//   Manifest: a single JSON document per experiment (resolved config echo,
//   artifact version, outcome summary, thresholds). wall_clock_s is null
//   unless timings were explicitly requested, so reruns of the same config
//   are byte-identical.
//
// %.17g round-trips IEEE doubles exactly, which is what makes read(write(x))
// bitwise on every platform with a correct strtod.

#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ks2d/grid.hpp"
#include "ks2d/solver.hpp"

namespace ks2d {

inline constexpr const char* kArtifactName = "ks2d";
inline constexpr const char* kArtifactVersion = "1.0.0";

// %.17g formatting used by every writer.
std::string format_g17(double x);

struct SnapshotMeta {
  double t = 0.0;
};

void write_snapshot(const Field& f, const SnapshotMeta& meta, const std::string& path);
std::pair<Field, SnapshotMeta> read_snapshot(const std::string& path);

class SeriesWriter {
 public:
  explicit SeriesWriter(const std::string& path);
  void append(const SampleRow& row);  // flushes
  long rows_written() const { return rows_; }

 private:
  std::ofstream out_;
  std::string path_;
  long rows_ = 0;
};

struct ManifestInfo {
  std::string experiment;                  // subcommand kind
  std::string config_text;                 // raw config file contents
  nlohmann::ordered_json resolved;         // fully resolved parameters
  nlohmann::ordered_json summary;          // outcome, thresholds hit, key numbers
  std::optional<double> wall_clock_s;      // absent => null (deterministic reruns)
};

void write_manifest(const ManifestInfo& info, const std::string& path);
nlohmann::ordered_json read_manifest(const std::string& path);

}  // namespace ks2d
