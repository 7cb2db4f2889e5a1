#include "rcpca/methods.hpp"

#include "rcpca/error.hpp"

#include <cmath>
#include <sstream>

namespace rcpca {

namespace {

struct RowSpec {
  int row;
  double m;
  Mode blocks;
  Mode superblock;
  const char* equation;
};

// Stationary equations of the ten basic combinations; m = 2 with A/B has none listed.
constexpr RowSpec kRows[] = {
    {1, 1.0, Mode::A, Mode::A, "y ∝ X X' sum_b ||X_b'y||^-1 X_b X_b' y"},
    {2, 1.0, Mode::A, Mode::B, "y ∝ sum_b ||X_b'y||^-1 X_b X_b' y"},
    {3, 1.0, Mode::B, Mode::A, "y ∝ X X' sum_b H_b y / ||H_b y||"},
    {4, 1.0, Mode::B, Mode::B, "y ∝ sum_b H_b y / ||H_b y||"},
    {5, 2.0, Mode::A, Mode::A, "y ∝ X X' y"},
    {6, 2.0, Mode::A, Mode::B, ""},
    {7, 2.0, Mode::B, Mode::A, "y ∝ X X' sum_b H_b y"},
    {8, 2.0, Mode::B, Mode::B, "y ∝ sum_b H_b y"},
    {9, 4.0, Mode::A, Mode::A, "y ∝ X X' sum_b ||X_b'y||^2 X_b X_b' y"},
    {10, 4.0, Mode::A, Mode::B, "y ∝ sum_b ||X_b'y||^2 X_b X_b' y"},
};

const RowSpec& row_spec(int row) {
  for (const auto& spec : kRows) {
    if (spec.row == row) return spec;
  }
  throw Error(ErrorKind::Catalog, "no such basic combination: " + std::to_string(row));
}

std::optional<int> row_for(double m, Mode blocks, Mode superblock) {
  for (const auto& spec : kRows) {
    if (spec.m == m && spec.blocks == blocks && spec.superblock == superblock) return spec.row;
  }
  return std::nullopt;
}

const char* mode_name(Mode mode) { return mode == Mode::A ? "A" : "B"; }

std::string basic_name(const RowSpec& spec) {
  return "basic_m" + std::to_string(static_cast<int>(spec.m)) + "_" + mode_name(spec.blocks) + mode_name(spec.superblock);
}

MethodPreset table_preset(const RowSpec& spec) {
  MethodPreset p;
  p.name = basic_name(spec);
  p.m = spec.m;
  p.tau_blocks = tau_of(spec.blocks);
  p.tau_superblock = tau_of(spec.superblock);
  p.basic_row = spec.row;
  p.form = StationaryForm::Basic;
  std::ostringstream os;
  os << "m = " << spec.m << ", Mode " << mode_name(spec.blocks) << " for the blocks, Mode "
     << mode_name(spec.superblock) << " for the superblock";
  p.description = os.str();
  return p;
}

std::vector<MethodPreset> make_catalog() {
  std::vector<MethodPreset> presets;
  auto add = [&](MethodPreset p) { presets.push_back(std::move(p)); };

  MethodPreset p;
  p = {};
  p.name = "consensus_pca";
  p.m = 2.0;
  p.tau_blocks = 1.0;
  p.tau_superblock = 1.0;
  p.citation = "Westerhuis, Kourti and MacGregor (1998); covariance criterion of Carroll (1968b)";
  p.description =
      "Consensus PCA. The superblock component is the first principal component of the superblock "
      "and of the block components.";
  p.basic_row = 5;
  p.form = StationaryForm::Basic;
  add(p);

  p = {};
  p.name = "gcca_carroll";
  p.m = 2.0;
  p.tau_blocks = 0.0;
  p.tau_superblock = 0.0;
  p.citation = "Carroll (1968a)";
  p.description = "Generalized canonical correlation analysis: sum of squared correlations with the superblock component.";
  p.basic_row = 8;
  p.form = StationaryForm::Basic;
  add(p);

  p = {};
  p.name = "maxvar";
  p.m = 2.0;
  p.tau_blocks = 0.0;
  p.tau_superblock = 0.0;
  p.citation = "Horst (1961b, 1965)";
  p.description = "MAXVAR: the superblock component is the first principal component of the standardized block components.";
  p.basic_row = 8;
  p.form = StationaryForm::Basic;
  add(p);

  p = {};
  p.name = "hierarchical_pca";
  p.m = 4.0;
  p.tau_blocks = 1.0;
  p.tau_superblock = 0.0;
  p.citation = "Smilde, Westerhuis and de Jong (2003)";
  p.description =
      "Hierarchical PCA: fourth powers of covariances, unit-norm block weights and a "
      "unit-variance superblock component.";
  p.basic_row = 10;
  p.form = StationaryForm::Basic;
  add(p);

  p = {};
  p.name = "sumcor";
  p.m = 1.0;
  p.tau_blocks = 0.0;
  p.tau_superblock = 0.0;
  p.citation = "Horst (1961a,b, 1965)";
  p.description =
      "SUMCOR: maximizes the sum of all pairwise correlations between standardized block "
      "components; the superblock component is proportional to their sum.";
  p.basic_row = 4;
  p.form = StationaryForm::Basic;
  add(p);

  p = {};
  p.name = "redundancy_blocks";
  p.m = 2.0;
  p.m_free = true;
  p.tau_blocks = 1.0;
  p.tau_superblock = 0.0;
  p.citation = "generalizes redundancy analysis, Van den Wollenberg (1977)";
  p.description =
      "Generalized redundancy analysis of the blocks with respect to the superblock: block "
      "components explain their own blocks and correlate with the superblock component.";
  p.form = StationaryForm::FreeExponent;
  add(p);

  p = {};
  p.name = "redundancy_superblock";
  p.m = 2.0;
  p.m_free = true;
  p.tau_blocks = 0.0;
  p.tau_superblock = 1.0;
  p.citation = "generalizes redundancy analysis, Van den Wollenberg (1977)";
  p.description =
      "Generalized redundancy analysis of the superblock with respect to the blocks: the "
      "superblock component explains the superblock and correlates with the block components.";
  p.form = StationaryForm::FreeExponent;
  add(p);

  p = {};
  p.name = "mixed_carroll";
  p.m = 2.0;
  p.tau_blocks = 1.0;
  p.tau_superblock = 0.0;
  p.correlation_blocks = 1;
  p.citation = "Carroll (1968b), unweighted case";
  p.description =
      "Mixed correlation and covariance criterion: correlations for the first K blocks, "
      "covariances for the others. Select K with mixed_carroll:K.";
  p.form = StationaryForm::MixedCarroll;
  add(p);

  for (const auto& spec : kRows) add(table_preset(spec));
  return presets;
}

double angular_residual(const VectorXd& y, const VectorXd& image) {
  const double ny = y.norm();
  const double ni = image.norm();
  if (!(ny > 0.0) || !(ni > 0.0)) return std::sqrt(2.0);
  return (y / ny - image / ni).norm();
}

double power(double x, double e) { return e == 0.0 ? 1.0 : std::pow(x, e); }

// sum_b ||X_b'y||^{m-2} X_b X_b' y
VectorXd mode_a_sum(const BlockSet& set, const VectorXd& y, double m) {
  VectorXd s = VectorXd::Zero(set.n());
  for (const auto& block : set.blocks()) {
    const VectorXd xty = block.matrix.transpose() * y;
    s.noalias() += power(xty.norm(), m - 2.0) * (block.matrix * xty);
  }
  return s;
}

// sum_b ||H_b y||^{m-2} H_b y with H_b the projector onto the block's column space
VectorXd mode_b_sum(const BlockSet& set, const VectorXd& y, double m) {
  VectorXd s = VectorXd::Zero(set.n());
  for (const auto& block : set.blocks()) {
    const VectorXd hy = projection_operator(block.matrix).apply(y);
    s.noalias() += power(hy.norm(), m - 2.0) * hy;
  }
  return s;
}

VectorXd basic_image(int row, const BlockSet& set, const VectorXd& y) {
  const RowSpec& spec = row_spec(row);
  const MatrixXd& x = set.superblock();
  if (row == 5) return x * (x.transpose() * y);
  VectorXd s = spec.blocks == Mode::A ? mode_a_sum(set, y, spec.m) : mode_b_sum(set, y, spec.m);
  if (spec.superblock == Mode::A) return x * (x.transpose() * s);
  return s;
}

// Right side of the generic superblock-component recurrence, from y alone.
VectorXd generic_image(const BlockSet& set, const MetricSet& metrics, const VectorXd& y, double m) {
  VectorXd z = VectorXd::Zero(set.n());
  for (std::size_t b = 0; b < set.size(); ++b) {
    const auto& x = set.block(b).matrix;
    const VectorXd xty = x.transpose() * y;
    const double norm = (metrics.blocks[b].inv_sqrt * xty).norm();
    z.noalias() += power(norm, m - 2.0) * (x * (metrics.blocks[b].inv * xty));
  }
  const VectorXd t = set.superblock().transpose() * z;
  return set.superblock() * (metrics.superblock.inv * t);
}

}  // namespace

ModeSelector MethodPreset::modes(std::size_t blocks) const {
  ModeSelector selector = ModeSelector::uniform(blocks, tau_blocks, tau_superblock);
  if (form == StationaryForm::MixedCarroll) {
    if (correlation_blocks > blocks) {
      std::ostringstream os;
      os << name << ": " << correlation_blocks << " correlation blocks requested but only " << blocks
         << " blocks given";
      throw Error(ErrorKind::Argument, os.str());
    }
    for (std::size_t b = 0; b < correlation_blocks; ++b) selector.block_tau[b] = 0.0;
  }
  return selector;
}

const std::vector<MethodPreset>& catalog() {
  static const std::vector<MethodPreset> presets = make_catalog();
  return presets;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& p : catalog()) names.push_back(p.name);
  return names;
}

MethodPreset preset(const std::string& name) {
  std::string base = name;
  std::optional<std::size_t> split;
  if (auto colon = name.find(':'); colon != std::string::npos) {
    base = name.substr(0, colon);
    const std::string count = name.substr(colon + 1);
    try {
      std::size_t used = 0;
      const long k = std::stol(count, &used);
      if (used != count.size() || k < 0) throw std::invalid_argument(count);
      split = static_cast<std::size_t>(k);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Catalog, "bad block count in preset name '" + name + "'");
    }
  }
  for (const auto& p : catalog()) {
    if (p.name != base) continue;
    MethodPreset out = p;
    if (split) {
      if (out.form != StationaryForm::MixedCarroll) {
        throw Error(ErrorKind::Catalog, "preset '" + base + "' takes no block count");
      }
      out.correlation_blocks = *split;
      out.name = name;
    }
    return out;
  }
  std::ostringstream os;
  os << "unknown preset '" << name << "'; available:";
  for (const auto& p : catalog()) os << ' ' << p.name;
  throw Error(ErrorKind::Catalog, os.str());
}

StationaryReport verify_stationary(const MethodPreset& preset, const VectorXd& y_super,
                                   const BlockSet& set, double m) {
  if (y_super.size() != set.n()) {
    throw Error(ErrorKind::Dimension, "superblock component has the wrong length");
  }
  StationaryReport report;
  std::optional<int> row;
  switch (preset.form) {
    case StationaryForm::None:
      throw Error(ErrorKind::UnsupportedVerification,
                  "preset '" + preset.name + "' has no published stationary equation");
    case StationaryForm::Basic:
      row = preset.basic_row;
      break;
    case StationaryForm::FreeExponent: {
      const Mode blocks = preset.tau_blocks == 1.0 ? Mode::A : Mode::B;
      const Mode super = preset.tau_superblock == 1.0 ? Mode::A : Mode::B;
      row = row_for(m, blocks, super);
      if (!row) {
        std::ostringstream os;
        os << "preset '" << preset.name << "' has no published stationary equation for m = " << m;
        throw Error(ErrorKind::UnsupportedVerification, os.str());
      }
      break;
    }
    case StationaryForm::MixedCarroll: {
      if (m != 2.0) {
        throw Error(ErrorKind::UnsupportedVerification, "mixed criterion is only listed for m = 2");
      }
      VectorXd image = VectorXd::Zero(set.n());
      const double n = static_cast<double>(set.n());
      for (std::size_t b = 0; b < set.size(); ++b) {
        const auto& x = set.block(b).matrix;
        if (b < preset.correlation_blocks) {
          image.noalias() += n * projection_operator(x).apply(y_super);
        } else {
          image.noalias() += x * (x.transpose() * y_super);
        }
      }
      report.equation = "y ∝ (sum_{b<=K} X_b((1/n)X_b'X_b)^-1 X_b' + sum_{b>K} X_b X_b') y";
      report.residual = angular_residual(y_super, image);
      report.image = std::move(image);
      return report;
    }
  }

  const RowSpec& spec = row_spec(*row);
  if (spec.m != m) {
    std::ostringstream os;
    os << "preset '" << preset.name << "' is listed for m = " << spec.m << ", solution used m = " << m;
    throw Error(ErrorKind::Argument, os.str());
  }
  if (*row == 6) {
    // No listed form; fall back on the generic superblock-component recurrence.
    const MetricSet metrics = build_metrics(set, preset.modes(set.size()));
    report.equation = "y ∝ X M^-1 X' sum_b ||M_b^-1/2 X_b'y||^(m-2) X_b M_b^-1 X_b' y (generic)";
    report.image = generic_image(set, metrics, y_super, m);
  } else {
    report.equation = spec.equation;
    report.image = basic_image(*row, set, y_super);
  }
  report.residual = angular_residual(y_super, report.image);
  return report;
}

StationaryReport verify_stationary(const MethodPreset& preset, const Solution& solution,
                                   const BlockSet& set) {
  return verify_stationary(preset, solution.y_super, set, solution.m);
}

GuideEntry guide(Mode blocks, Mode superblock) {
  if (blocks == Mode::A && superblock == Mode::A) {
    return {blocks, superblock, "Tucker's inter-battery factor analysis",
            "Compromise between block and superblock components well explaining their own blocks "
            "and as correlated as possible."};
  }
  if (blocks == Mode::A && superblock == Mode::B) {
    return {blocks, superblock, "Redundancy analysis of a block with respect to the superblock",
            "Compromise between block components well explaining their own blocks and as "
            "correlated as possible to the superblock component."};
  }
  if (blocks == Mode::B && superblock == Mode::A) {
    return {blocks, superblock, "Redundancy analysis of the superblock with respect to a block",
            "Compromise between a superblock component well explaining the superblock and as "
            "correlated as possible to the block components."};
  }
  return {blocks, superblock, "Canonical correlation analysis",
          "Block and superblock components as correlated as possible."};
}

const std::vector<DocumentedMethod>& documented_only_methods() {
  static const std::vector<DocumentedMethod> methods = {
      {5, "PLS path modeling on the consensus model, Mode A blocks, Mode B superblock, centroid scheme (Wold, 1982)",
       "y ∝ sum_b ||X_b X_b' y||^-1 X_b X_b' y"},
      {6, "PLS path modeling, Mode A blocks, Mode B superblock, factorial scheme (Lohmöller, 1989); hierarchical PCA-W",
       "y ∝ sum_b (||X_b'y||^2 / ||X_b X_b' y||^2) X_b X_b' y"},
      {7, "PLS path modeling, Mode A blocks and superblock, centroid scheme (Wold, 1982)",
       "y ∝ X X' sum_b ||X_b X_b' y||^-1 X_b X_b' y"},
      {8, "PLS path modeling, Mode A blocks and superblock, factorial scheme (Lohmöller, 1989)",
       "y ∝ X X' sum_b (||X_b'y||^2 / ||X_b X_b' y||^2) X_b X_b' y"},
      {9, "Original consensus PCA (Wold, Hellberg, Lundstedt, Sjöström and Wold, 1987)",
       "y ∝ sum_b ||X_b'y||^-2 X_b X_b' y"},
  };
  return methods;
}

}  // namespace rcpca
