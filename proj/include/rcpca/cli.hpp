#pragma once

#include "rcpca/deflation.hpp"
#include "rcpca/error.hpp"
#include "rcpca/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rcpca {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitData = 2,
  kExitSolver = 3,
  kExitInternal = 4,
};

int exit_code_for(ErrorKind kind);

struct RunConfig {
  std::vector<std::filesystem::path> blocks;
  std::vector<std::string> ids;
  std::optional<std::string> preset;
  std::optional<double> m;
  std::optional<std::vector<double>> tau;
  std::optional<double> tau_super;
  std::string scale = "none";
  char delimiter = ',';
  bool row_ids = false;
  double epsilon = 1e-10;
  int max_iter = 10000;
  std::string init = "eigen";
  std::optional<std::filesystem::path> init_file;
  std::uint64_t seed = 0;
  int starts = 1;
  std::string assert_level = "cheap";
  std::string deflate = "own";
  int components = 1;
  std::filesystem::path out = "rcpca_out";
  bool strict = false;

  // Checks option consistency; throws Error with kind Config or Io.
  void validate() const;
};

struct RunSummary {
  MultiSolution result;
  std::string method;
  double m = 2.0;
  ModeSelector modes;
};

// Loads the blocks, runs the analysis and writes all result files.
RunSummary run(const RunConfig& config);

// Prints the catalog entry, the guide for a mode pair, or everything when
// args is empty. Returns an exit code.
int explain(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Full command-line entry point.
int cli_main(int argc, char** argv);

// Fixed 12-significant-digit rendering used in every output file.
std::string format_number(double value);

}  // namespace rcpca
