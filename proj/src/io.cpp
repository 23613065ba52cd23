#include "ks2d/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>

namespace ks2d {

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

constexpr const char* kSnapshotMagic = "ks2d-snapshot-v1";

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
  throw IoError(path + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& tok, const std::string& path, int line) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    parse_fail(path, line, "expected a number, got '" + tok + "'");
  }
  return v;
}

}  // namespace

void write_snapshot(const Field& f, const SnapshotMeta& meta, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("write_snapshot: cannot open " + path);
  const Grid& g = f.grid();
  out << kSnapshotMagic << "\n";
  out << g.nx << " " << g.ny << " " << format_g17(g.lx) << " " << format_g17(g.ly)
      << " " << format_g17(meta.t) << "\n";
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      if (ix) out << " ";
      out << format_g17(f(ix, iy));
    }
    out << "\n";
  }
  if (!out) throw IoError("write_snapshot: write failed for " + path);
}

std::pair<Field, SnapshotMeta> read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_snapshot: cannot open " + path);
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line)) parse_fail(path, lineno, "empty file");
  if (line != kSnapshotMagic) {
    parse_fail(path, lineno, "bad magic, expected '" + std::string(kSnapshotMagic) + "'");
  }
  ++lineno;
  if (!std::getline(in, line)) parse_fail(path, lineno, "missing header line");
  std::istringstream hdr(line);
  long nx = 0, ny = 0;
  std::string slx, sly, st;
  if (!(hdr >> nx >> ny >> slx >> sly >> st)) {
    parse_fail(path, lineno, "header must be: nx ny lx ly t");
  }
  if (nx < 2 || ny < 2) parse_fail(path, lineno, "cell counts must be >= 2");
  SnapshotMeta meta;
  const double lx = parse_double(slx, path, lineno);
  const double ly = parse_double(sly, path, lineno);
  meta.t = parse_double(st, path, lineno);
  Grid g = build_grid(static_cast<int>(nx), static_cast<int>(ny), lx, ly);

  Field f(g);
  for (int iy = 0; iy < g.ny; ++iy) {
    ++lineno;
    if (!std::getline(in, line)) {
      parse_fail(path, lineno, "truncated: expected " + std::to_string(g.ny) +
                                   " data rows, got " + std::to_string(iy));
    }
    std::istringstream row(line);
    std::string tok;
    for (int ix = 0; ix < g.nx; ++ix) {
      if (!(row >> tok)) {
        parse_fail(path, lineno, "row has fewer than " + std::to_string(g.nx) + " values");
      }
      f(ix, iy) = parse_double(tok, path, lineno);
    }
    if (row >> tok) {
      parse_fail(path, lineno, "row has more than " + std::to_string(g.nx) + " values");
    }
  }
  return {std::move(f), meta};
}

SeriesWriter::SeriesWriter(const std::string& path) : out_(path), path_(path) {
  if (!out_) throw IoError("SeriesWriter: cannot open " + path);
  out_ << "t,mass,linf_u,linf_v,min_motility,F,E,hminus1,weighted_l2\n";
  out_.flush();
}

void SeriesWriter::append(const SampleRow& row) {
  out_ << format_g17(row.t) << ',' << format_g17(row.mass) << ','
       << format_g17(row.linf_u) << ',' << format_g17(row.linf_v) << ','
       << format_g17(row.min_motility) << ',' << format_g17(row.f_total) << ','
       << format_g17(row.e_total) << ',' << format_g17(row.hminus1) << ','
       << format_g17(row.weighted_l2) << '\n';
  out_.flush();
  if (!out_) throw IoError("SeriesWriter: write failed for " + path_);
  ++rows_;
}

void write_manifest(const ManifestInfo& info, const std::string& path) {
  nlohmann::ordered_json j;
  j["artifact"] = kArtifactName;
  j["version"] = kArtifactVersion;
  j["experiment"] = info.experiment;
  j["resolved"] = info.resolved;
  j["summary"] = info.summary;
  if (info.wall_clock_s) {
    j["wall_clock_s"] = *info.wall_clock_s;
  } else {
    j["wall_clock_s"] = nullptr;
  }
  j["config_text"] = info.config_text;
  std::ofstream out(path);
  if (!out) throw IoError("write_manifest: cannot open " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write_manifest: write failed for " + path);
}

nlohmann::ordered_json read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_manifest: cannot open " + path);
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("read_manifest: " + path + ": " + e.what());
  }
  return j;
}

}  // namespace ks2d
