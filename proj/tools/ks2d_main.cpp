#include "ks2d/experiments.hpp"

int main(int argc, char** argv) { return ks2d::cli_main(argc, argv); }
