#include "rcpca/cli.hpp"

#include "rcpca/dataset.hpp"
#include "rcpca/methods.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace rcpca {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument:
    case ErrorKind::Config:
    case ErrorKind::Catalog:
    case ErrorKind::UnsupportedVerification:
      return kExitConfig;
    case ErrorKind::Io:
    case ErrorKind::Parse:
    case ErrorKind::Dimension:
    case ErrorKind::DegenerateColumn:
    case ErrorKind::ModeBInfeasible:
    case ErrorKind::NonContributingBlock:
      return kExitData;
    case ErrorKind::SingularGradient:
    case ErrorKind::BadStart:
    case ErrorKind::UndefinedContributions:
    case ErrorKind::NonConvergence:
      return kExitSolver;
    case ErrorKind::Internal:
      return kExitInternal;
  }
  return kExitInternal;
}

std::string format_number(double value) {
  if (value == 0.0) value = 0.0;  // drop the sign of negative zero
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.12g", value);
  return buffer;
}

namespace {

double rounded(double value) { return std::stod(format_number(value)); }

void RequireConfig(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::Config, message);
}

}  // namespace

void RunConfig::validate() const {
  RequireConfig(!blocks.empty(), "at least one block file is required (--blocks)");
  RequireConfig(ids.empty() || ids.size() == blocks.size(),
                "--ids must list one label per block file");
  if (preset) {
    rcpca::preset(*preset);
    RequireConfig(!tau && !tau_super, "--preset and explicit --tau/--tau-super are mutually exclusive");
    if (m) {
      const MethodPreset p = rcpca::preset(*preset);
      RequireConfig(p.m_free, "--preset " + *preset + " fixes m; --preset and --m are mutually exclusive");
    }
  } else {
    RequireConfig(m.has_value(), "either --preset or an explicit --m is required");
  }
  if (tau) {
    RequireConfig(tau->size() == 1 || tau->size() == blocks.size(),
                  "--tau takes one value or one value per block");
  }
  RequireConfig(scale == "none" || scale == "unit", "--scale must be none or unit");
  RequireConfig(init == "eigen" || init == "random" || init == "file", "--init must be eigen, random or file");
  RequireConfig(init != "file" || init_file.has_value(), "--init file needs --init-file");
  RequireConfig(assert_level == "off" || assert_level == "cheap" || assert_level == "full",
                "--assert must be off, cheap or full");
  RequireConfig(components >= 1, "--components must be >= 1");
  RequireConfig(starts >= 1, "--starts must be >= 1");
  RequireConfig(max_iter >= 1, "--max-iter must be >= 1");
  RequireConfig(epsilon > 0.0, "--epsilon must be > 0");
  parse_deflation(deflate);

  for (const auto& path : blocks) {
    if (!fs::exists(path)) throw Error(ErrorKind::Io, "block file not found: " + path.string());
  }
  if (init_file && !fs::exists(*init_file)) {
    throw Error(ErrorKind::Io, "init file not found: " + init_file->string());
  }
}

namespace {

VectorXd read_vector(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    for (auto& c : token) {
      if (c == ',') c = ' ';
    }
    std::istringstream cells(token);
    double x;
    while (cells >> x) values.push_back(x);
  }
  return Eigen::Map<VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

class CsvWriter {
 public:
  explicit CsvWriter(const fs::path& path) : out_(path) {
    if (!out_) throw Error(ErrorKind::Io, "cannot write " + path.string());
  }
  template <typename... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }

  std::ofstream out_;
};

void write_rank(const fs::path& dir, const BlockSet& original, const Solution& sol, int rank) {
  fs::create_directories(dir);
  const auto n = original.n();
  std::vector<std::string> row_ids;
  if (original.row_ids()) {
    row_ids = *original.row_ids();
  } else {
    for (Eigen::Index i = 0; i < n; ++i) row_ids.push_back(std::to_string(i + 1));
  }

  for (std::size_t b = 0; b < original.size(); ++b) {
    const Block& block = original.block(b);
    CsvWriter w(dir / ("weights_" + block.id + ".csv"));
    w.row("variable", "weight");
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
      w.row(block.column_names[static_cast<std::size_t>(j)], sol.w_blocks[b](j));
    }
  }
  {
    CsvWriter w(dir / "weights_superblock.csv");
    w.row("block", "variable", "weight");
    for (std::size_t b = 0; b < original.size(); ++b) {
      const Block& block = original.block(b);
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        w.row(block.id, block.column_names[static_cast<std::size_t>(j)],
              sol.w_super(original.offset(b) + j));
      }
    }
  }
  {
    std::ofstream out(dir / "components.csv");
    if (!out) throw Error(ErrorKind::Io, "cannot write components.csv");
    out << "row_id";
    for (const auto& block : original.blocks()) out << ',' << block.id;
    out << ",superblock\n";
    for (Eigen::Index i = 0; i < n; ++i) {
      out << row_ids[static_cast<std::size_t>(i)];
      for (Eigen::Index b = 0; b < sol.y_blocks.cols(); ++b) out << ',' << format_number(sol.y_blocks(i, b));
      out << ',' << format_number(sol.y_super(i)) << '\n';
    }
  }
  {
    CsvWriter w(dir / "blocks.csv");
    w.row("block", "cov", "cor", "contribution");
    for (std::size_t b = 0; b < original.size(); ++b) {
      const auto col = static_cast<Eigen::Index>(b);
      w.row(original.block(b).id, sol.covs(col), sample_cor(sol.y_blocks.col(col), sol.y_super),
            sol.contributions(col));
    }
  }
  {
    CsvWriter w(dir / "variable_correlations.csv");
    w.row("block", "variable", "cor");
    for (const auto& block : original.blocks()) {
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        w.row(block.id, block.column_names[static_cast<std::size_t>(j)],
              sample_cor(block.matrix.col(j), sol.y_super));
      }
    }
  }
  {
    std::ofstream out(dir / "trace.csv");
    if (!out) throw Error(ErrorKind::Io, "cannot write trace.csv");
    out << "iteration,psi,step_norm,bound\n";
    const auto& t = sol.trace;
    out << 0 << ',' << format_number(t.psi.front()) << ",,\n";
    for (std::size_t s = 0; s < t.step_norm.size(); ++s) {
      out << s + 1 << ',' << format_number(t.psi[s + 1]) << ',' << format_number(t.step_norm[s]) << ','
          << format_number(t.bound[s]) << '\n';
    }
  }
  (void)rank;
}

AssertLevel parse_assert(const std::string& level) {
  if (level == "off") return AssertLevel::Off;
  if (level == "full") return AssertLevel::Full;
  return AssertLevel::Cheap;
}

}  // namespace

RunSummary run(const RunConfig& config) {
  config.validate();

  PreprocessOptions options;
  options.delimiter = config.delimiter;
  options.has_row_ids = config.row_ids;
  options.unit_variance = config.scale == "unit";

  std::vector<Block> blocks;
  for (std::size_t b = 0; b < config.blocks.size(); ++b) {
    const std::string id = config.ids.empty() ? config.blocks[b].stem().string() : config.ids[b];
    blocks.push_back(load_block(config.blocks[b], id, options));
  }
  const BlockSet set = build_blockset(std::move(blocks));

  RunSummary summary;
  if (config.preset) {
    const MethodPreset p = preset(*config.preset);
    summary.method = p.name;
    summary.m = config.m.value_or(p.m);
    summary.modes = p.modes(set.size());
  } else {
    summary.method = "custom";
    summary.m = *config.m;
    const auto& taus = config.tau.value_or(std::vector<double>{1.0});
    summary.modes.block_tau = taus.size() == 1 ? std::vector<double>(set.size(), taus.front()) : taus;
    summary.modes.superblock_tau = config.tau_super.value_or(1.0);
  }

  SolverConfig solver;
  solver.m = summary.m;
  solver.epsilon = config.epsilon;
  solver.max_iter = config.max_iter;
  solver.seed = config.seed;
  solver.n_starts = config.starts;
  solver.assert_level = parse_assert(config.assert_level);
  if (config.init == "random") {
    solver.init = RandomStart{config.seed};
  } else if (config.init == "file") {
    solver.init = GivenStart{read_vector(*config.init_file)};
  }

  const DeflationStrategy strategy = parse_deflation(config.deflate);
  summary.result = extract(set, summary.modes, solver, static_cast<std::size_t>(config.components), strategy);

  fs::create_directories(config.out);
  ordered_json manifest;
  manifest["method"] = summary.method;
  manifest["m"] = summary.m;
  manifest["tau_blocks"] = summary.modes.block_tau;
  manifest["tau_superblock"] = summary.modes.superblock_tau;
  manifest["scale"] = config.scale;
  manifest["epsilon"] = config.epsilon;
  manifest["max_iter"] = config.max_iter;
  manifest["init"] = config.init;
  manifest["seed"] = config.seed;
  manifest["starts"] = config.starts;
  manifest["deflation"] = to_string(strategy);
  manifest["requested_rank"] = config.components;
  manifest["achieved_rank"] = summary.result.rank();
  manifest["n"] = set.n();
  ordered_json block_list = ordered_json::array();
  for (std::size_t b = 0; b < set.size(); ++b) {
    block_list.push_back({{"id", set.block(b).id},
                          {"file", config.blocks[b].filename().string()},
                          {"columns", set.block(b).cols()}});
  }
  manifest["blocks"] = block_list;

  bool all_converged = true;
  std::vector<std::string> warnings = summary.result.warnings;
  ordered_json ranks = ordered_json::array();
  for (std::size_t r = 0; r < summary.result.rank(); ++r) {
    const Solution& sol = summary.result.ranks[r];
    const std::string dir = "rank_" + std::to_string(r + 1);
    write_rank(config.out / dir, set, sol, static_cast<int>(r + 1));
    all_converged = all_converged && sol.trace.converged;
    ranks.push_back({{"rank", r + 1},
                     {"directory", dir},
                     {"psi_final", rounded(sol.psi_final)},
                     {"fixed_point_residual", rounded(sol.fixed_point_residual)},
                     {"iterations", sol.trace.iterations},
                     {"converged", sol.trace.converged},
                     {"start_index", sol.start_index}});
    for (const auto& w : sol.warnings) warnings.push_back("rank " + std::to_string(r + 1) + ": " + w);
  }
  manifest["ranks"] = ranks;
  manifest["converged"] = all_converged;
  const auto& orth = summary.result.orthogonality;
  manifest["orthogonality"] = {{"max_within_block_cor", rounded(orth.max_within_block())},
                               {"max_superblock_cor", rounded(orth.max_superblock())}};
  manifest["warnings"] = warnings;

  std::ofstream out(config.out / "manifest.json");
  if (!out) throw Error(ErrorKind::Io, "cannot write manifest.json");
  out << manifest.dump(2) << '\n';

  if (config.strict && !all_converged) {
    throw Error(ErrorKind::NonConvergence, "solver did not converge (see manifest.json)");
  }
  return summary;
}

namespace {

void print_preset(const MethodPreset& p, std::ostream& out) {
  out << p.name << "\n  m = " << format_number(p.m) << (p.m_free ? " (default; may be set with --m)" : "")
      << "\n  block tau = " << format_number(p.tau_blocks);
  if (p.form == StationaryForm::MixedCarroll) {
    out << " (blocks 1.." << p.correlation_blocks << " use tau = 0)";
  }
  out << ", superblock tau = " << format_number(p.tau_superblock) << '\n';
  if (!p.citation.empty()) out << "  reference: " << p.citation << '\n';
  if (!p.description.empty()) out << "  " << p.description << '\n';
}

void print_guide(std::ostream& out) {
  out << "Mode guide (blocks / superblock):\n";
  for (Mode b : {Mode::A, Mode::B}) {
    for (Mode s : {Mode::A, Mode::B}) {
      const GuideEntry e = guide(b, s);
      out << "  " << (b == Mode::A ? 'A' : 'B') << " / " << (s == Mode::A ? 'A' : 'B') << ": "
          << e.generalization << "\n      " << e.objective << '\n';
    }
  }
}

std::optional<Mode> parse_mode(const std::string& s) {
  if (s == "A" || s == "a") return Mode::A;
  if (s == "B" || s == "b") return Mode::B;
  return std::nullopt;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Expands "run --config FILE" into flags read from FILE. A file entry is
// dropped when the same flag also appears on the command line.
std::vector<std::string> with_config_file(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) file = args[i].substr(9);
  }
  if (!file || args.empty() || args.front() != "run") return args;

  std::ifstream in(*file);
  if (!in) throw Error(ErrorKind::Config, "cannot read config file " + *file);
  auto given = [&](const std::string& flag) {
    for (const auto& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  std::vector<std::string> expanded;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, *file + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    const std::string flag = "--" + key;
    if (key == "config" || given(flag)) continue;
    if (key == "row-ids" || key == "strict") {
      if (value == "true" || value == "1" || value == "yes") expanded.push_back(flag);
      continue;
    }
    expanded.push_back(flag);
    expanded.push_back(value);
  }
  args.insert(args.begin() + 1, expanded.begin(), expanded.end());
  return args;
}

}  // namespace

int explain(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    out << "Method presets:\n";
    for (const auto& p : catalog()) print_preset(p, out);
    out << '\n';
    print_guide(out);
    out << "\nMethods with a stationary equation but no known criterion (not available as presets):\n";
    for (const auto& d : documented_only_methods()) {
      out << "  " << d.number << ". " << d.name << "\n      " << d.stationary_equation << '\n';
    }
    return kExitOk;
  }
  if (args.size() == 2) {
    auto blocks = parse_mode(args[0]);
    auto super = parse_mode(args[1]);
    if (!blocks || !super) {
      err << "modes must be A or B\n";
      return kExitConfig;
    }
    const GuideEntry e = guide(*blocks, *super);
    out << "Blocks Mode " << args[0] << ", superblock Mode " << args[1] << '\n'
        << "Generalization of: " << e.generalization << '\n'
        << "Objective: " << e.objective << '\n';
    return kExitOk;
  }
  if (args.size() == 1) {
    try {
      const MethodPreset p = preset(args[0]);
      print_preset(p, out);
      const Mode b = p.tau_blocks == 1.0 ? Mode::A : Mode::B;
      const Mode s = p.tau_superblock == 1.0 ? Mode::A : Mode::B;
      if (p.form != StationaryForm::MixedCarroll) {
        out << "  Mode " << (b == Mode::A ? 'A' : 'B') << " blocks, Mode " << (s == Mode::A ? 'A' : 'B')
            << " superblock: " << guide(b, s).generalization << '\n';
      }
      return kExitOk;
    } catch (const Error& e) {
      err << e.what() << '\n';
      return kExitConfig;
    }
  }
  err << "explain takes a preset name or two modes (A|B A|B)\n";
  return kExitConfig;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Multiblock component analysis with shrinkage metrics"};
  app.require_subcommand(1);

  RunConfig config;
  std::vector<std::string> block_files;
  std::optional<double> m;
  std::optional<std::vector<double>> tau;
  std::optional<double> tau_super;
  std::optional<std::string> preset_name;
  std::string delimiter = ",";
  std::string init_file;

  CLI::App* run_cmd = app.add_subcommand("run", "Run an analysis and write result files");
  std::string config_path;
  run_cmd->add_option("--config", config_path, "Read options from a key = value file; flags override it");
  run_cmd->add_option("--blocks", block_files, "Block files, comma separated")->delimiter(',');
  run_cmd->add_option("--ids", config.ids, "Block labels, comma separated")->delimiter(',');
  run_cmd->add_option("--preset", preset_name, "Named method preset");
  run_cmd->add_option("--m", m, "Exponent m >= 1");
  run_cmd->add_option("--tau", tau, "Block shrinkage constants (one or one per block)")->delimiter(',');
  run_cmd->add_option("--tau-super", tau_super, "Superblock shrinkage constant");
  run_cmd->add_option("--scale", config.scale, "none|unit");
  run_cmd->add_option("--delimiter", delimiter, "Field delimiter (',' or 'tab')");
  run_cmd->add_flag("--row-ids", config.row_ids, "First column holds row IDs");
  run_cmd->add_option("--epsilon", config.epsilon, "Stop when the criterion gains at most this");
  run_cmd->add_option("--max-iter", config.max_iter, "Iteration cap per start");
  run_cmd->add_option("--init", config.init, "eigen|random|file");
  run_cmd->add_option("--init-file", init_file, "Start vector file for --init file");
  run_cmd->add_option("--seed", config.seed, "Seed for random starts");
  run_cmd->add_option("--starts", config.starts, "Number of starts; the best criterion wins");
  run_cmd->add_option("--assert", config.assert_level, "off|cheap|full runtime checks");
  run_cmd->add_option("--deflate", config.deflate, "global|block|loading|own");
  run_cmd->add_option("--components", config.components, "Number of components R");
  run_cmd->add_option("--out", config.out, "Output directory");
  run_cmd->add_flag("--strict", config.strict, "Exit 3 when the solver does not converge");

  std::vector<std::string> explain_args;
  CLI::App* explain_cmd = app.add_subcommand("explain", "Describe a preset, a mode pair, or list everything");
  explain_cmd->add_option("what", explain_args, "Preset name, or two modes such as A B");
  CLI::App* guide_cmd = app.add_subcommand("guide", "Print the preset catalog and the mode guide");

  std::vector<std::string> args;
  try {
    args = with_config_file(argc, argv);
  } catch (const Error& e) {
    std::cerr << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  }
  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*guide_cmd) return explain({}, std::cout, std::cerr);
  if (*explain_cmd) return explain(explain_args, std::cout, std::cerr);

  try {
    for (const auto& f : block_files) config.blocks.emplace_back(f);
    config.m = m;
    config.tau = tau;
    config.tau_super = tau_super;
    config.preset = preset_name;
    if (!init_file.empty()) config.init_file = init_file;
    if (delimiter == "tab" || delimiter == "\\t" || delimiter == "\t") {
      config.delimiter = '\t';
    } else if (delimiter.size() == 1) {
      config.delimiter = delimiter.front();
    } else {
      throw Error(ErrorKind::Config, "--delimiter must be a single character or 'tab'");
    }
    const RunSummary summary = run(config);
    std::cout << "method " << summary.method << ", m = " << format_number(summary.m) << ", rank "
              << summary.result.rank() << " written to " << config.out.string() << '\n';
    for (const auto& w : summary.result.warnings) std::cerr << "warning: " << w << '\n';
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace rcpca
