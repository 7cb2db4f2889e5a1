#include "rcpca/solver.hpp"

#include "rcpca/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace rcpca {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Roundoff scale of one criterion evaluation.
double roundoff(double psi) { return 64.0 * kEps * std::abs(psi); }

double pow_m(double x, double m) {
  if (m == 1.0) return x;
  if (m == 2.0) return x * x;
  if (x == 0.0) return 0.0;
  return std::exp(m * std::log(x));
}

void check_unit(const VectorXd& v, Eigen::Index dim, const char* what) {
  if (v.size() != dim) {
    std::ostringstream os;
    os << what << ": expected a vector of length " << dim << ", got " << v.size();
    throw Error(ErrorKind::Dimension, os.str());
  }
}

std::string block_label(const TransformedProblem& problem, std::size_t b) {
  if (b < problem.labels.size()) return "block '" + problem.labels[b] + "'";
  return "block " + std::to_string(b + 1);
}

VectorXd sqrt_apply(const ShrinkageMetric& metric, const VectorXd& w) {
  if (metric.tau == 1.0) return w;
  VectorXd coords = metric.eigenvectors.transpose() * w;
  for (Eigen::Index k = 0; k < coords.size(); ++k) {
    const bool in_range = !metric.pseudo || k < metric.rank;
    coords(k) *= in_range ? std::sqrt(std::max(metric.eigenvalues(k), 0.0)) : 0.0;
  }
  return metric.eigenvectors * coords;
}

}  // namespace

TransformedProblem TransformedProblem::from_q(std::vector<MatrixXd> q, double m) {
  if (q.empty()) throw Error(ErrorKind::Argument, "problem needs at least one Q matrix");
  if (!(m >= 1.0)) throw Error(ErrorKind::Argument, "exponent m must be >= 1");
  const auto cols = q.front().cols();
  for (const auto& qb : q) {
    if (qb.cols() != cols) throw Error(ErrorKind::Dimension, "Q matrices disagree on column count");
  }
  TransformedProblem problem;
  problem.q = std::move(q);
  problem.m = m;
  return problem;
}

TransformedProblem TransformedProblem::scaled(double factor) const {
  TransformedProblem out = *this;
  for (auto& qb : out.q) qb *= factor;
  return out;
}

TransformedProblem transform(const BlockSet& set, const MetricSet& metrics, double m) {
  if (!(m >= 1.0)) throw Error(ErrorKind::Argument, "exponent m must be >= 1");
  if (metrics.blocks.size() != set.size()) {
    throw Error(ErrorKind::Dimension, "one metric per block is required");
  }
  TransformedProblem problem;
  problem.m = m;
  for (std::size_t b = 0; b < set.size(); ++b) {
    const auto& block = set.block(b);
    if (metrics.blocks[b].dim() != block.cols()) {
      throw Error(ErrorKind::Dimension, "metric of block '" + block.id + "' has the wrong size");
    }
    problem.p.push_back(block.matrix * metrics.blocks[b].inv_sqrt);
    problem.labels.push_back(block.id);
  }
  if (metrics.superblock.dim() != set.superblock().cols()) {
    throw Error(ErrorKind::Dimension, "superblock metric has the wrong size");
  }
  problem.p.push_back(set.superblock() * metrics.superblock.inv_sqrt);

  const MatrixXd& p_super = problem.p.back();
  for (std::size_t b = 0; b < set.size(); ++b) {
    MatrixXd qb = problem.p[b].transpose() * p_super;
    const double scale = problem.p[b].norm() * p_super.norm();
    if (!(qb.norm() > 1e-12 * scale)) {
      throw Error(ErrorKind::NonContributingBlock,
                  "block '" + set.block(b).id +
                      "' is uncorrelated with the superblock (Q_b = 0) and does not contribute; "
                      "drop it from the analysis");
    }
    problem.q.push_back(std::move(qb));
  }
  return problem;
}

TransformedProblem auxiliary_problem(const BlockSet& set, const std::vector<ShrinkageMetric>& block_metrics,
                                     double m) {
  if (!(m >= 1.0)) throw Error(ErrorKind::Argument, "exponent m must be >= 1");
  if (block_metrics.size() != set.size()) {
    throw Error(ErrorKind::Dimension, "one metric per block is required");
  }
  TransformedProblem problem;
  problem.m = m;
  const double root_n = std::sqrt(static_cast<double>(set.n()));
  for (std::size_t b = 0; b < set.size(); ++b) {
    const auto& block = set.block(b);
    problem.q.push_back(block_metrics[b].inv_sqrt * block.matrix.transpose() / root_n);
    problem.labels.push_back(block.id);
  }
  return problem;
}

double criterion(const TransformedProblem& problem, const VectorXd& v) {
  check_unit(v, problem.dim(), "criterion");
  double psi = 0.0;
  for (const auto& qb : problem.q) psi += pow_m((qb * v).norm(), problem.m);
  return psi;
}

VectorXd gradient(const TransformedProblem& problem, const VectorXd& v) {
  check_unit(v, problem.dim(), "gradient");
  const double m = problem.m;
  VectorXd grad = VectorXd::Zero(v.size());
  for (std::size_t b = 0; b < problem.q.size(); ++b) {
    const auto& qb = problem.q[b];
    const VectorXd qv = qb * v;
    const double norm = qv.norm();
    double weight;
    if (m == 2.0) {
      weight = 1.0;
    } else if (m < 2.0) {
      if (!(norm > 64.0 * kEps * qb.norm() * v.norm())) {
        throw Error(ErrorKind::SingularGradient,
                    block_label(problem, b) +
                        ": ||Q_b v|| = 0 with m < 2; the gradient is undefined at this point");
      }
      weight = std::exp((m - 2.0) * std::log(norm));
    } else {
      weight = norm == 0.0 ? 0.0 : std::exp((m - 2.0) * std::log(norm));
    }
    grad.noalias() += weight * (qb.transpose() * qv);
  }
  return m * grad;
}

VectorXd iterate(const TransformedProblem& problem, const VectorXd& v) {
  VectorXd g = gradient(problem, v);
  const double norm = g.norm();
  if (!(norm > 0.0)) {
    throw Error(ErrorKind::SingularGradient, "gradient vanishes; Psi(v) = 0 at this point");
  }
  return g / norm;
}

VectorXd random_unit_vector(Eigen::Index dim, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd v(dim);
  do {
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(engine);
  } while (!(v.norm() > 0.0));
  return v.normalized();
}

VectorXd init_v(const TransformedProblem& problem, const InitSpec& init, std::string* warning) {
  const auto dim = problem.dim();
  if (dim == 0) throw Error(ErrorKind::Dimension, "empty problem");

  if (std::holds_alternative<GivenStart>(init)) {
    const VectorXd& given = std::get<GivenStart>(init).v;
    check_unit(given, dim, "init_v");
    if (!(given.norm() > 0.0)) throw Error(ErrorKind::BadStart, "given start vector is zero");
    VectorXd v = given.normalized();
    if (!(criterion(problem, v) > 0.0)) {
      throw Error(ErrorKind::BadStart, "given start vector has Psi(v0) = 0");
    }
    return v;
  }

  if (std::holds_alternative<RandomStart>(init)) {
    std::mt19937_64 engine(std::get<RandomStart>(init).seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd v(dim);
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(engine);
      if (!(v.norm() > 0.0)) continue;
      v.normalize();
      if (criterion(problem, v) > 0.0) return v;
    }
    throw Error(ErrorKind::BadStart, "no random start with Psi(v0) > 0 after 100 draws");
  }

  MatrixXd k = MatrixXd::Zero(dim, dim);
  for (const auto& qb : problem.q) k.noalias() += qb.transpose() * qb;
  k = 0.5 * (k + k.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(k);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::Internal, "eigendecomposition of sum Q_b'Q_b failed");
  }
  const auto& values = eig.eigenvalues();
  VectorXd v = eig.eigenvectors().col(dim - 1);
  if (dim > 1 && warning != nullptr) {
    const double top = values(dim - 1);
    if (top - values(dim - 2) <= 1e-10 * std::abs(top)) {
      *warning = "top eigenvalue of sum Q_b'Q_b is numerically repeated; the start vector is not unique";
    }
  }
  if (!(criterion(problem, v) > 0.0)) {
    throw Error(ErrorKind::BadStart, "eigenvector start has Psi(v0) = 0");
  }
  return v;
}

void SolverConfig::validate() const {
  if (!(m >= 1.0)) throw Error(ErrorKind::Argument, "exponent m must be >= 1");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::Argument, "epsilon must be > 0");
  if (max_iter < 1) throw Error(ErrorKind::Argument, "max_iter must be >= 1");
  if (n_starts < 1) throw Error(ErrorKind::Argument, "n_starts must be >= 1");
}

SphereResult sphere_maximize(const GradientOracle& oracle, const VectorXd& start,
                             const SolverConfig& config) {
  config.validate();
  check_unit(start, oracle.dim(), "sphere_maximize");
  if (!(start.norm() > 0.0)) throw Error(ErrorKind::BadStart, "start vector is zero");

  const auto degree = oracle.homogeneity();
  const bool cheap = config.assert_level != AssertLevel::Off;
  const bool full = config.assert_level == AssertLevel::Full;

  SphereResult result;
  SolverTrace& trace = result.trace;
  VectorXd v = start.normalized();
  double psi = oracle.value(v);
  const double psi0 = psi;
  if (degree && !(psi0 > 0.0)) {
    throw Error(ErrorKind::BadStart, "start vector has Psi(v0) = 0");
  }
  trace.psi.push_back(psi);

  double delta = degree ? *degree * psi0 : std::numeric_limits<double>::infinity();
  for (int s = 0; s < config.max_iter; ++s) {
    const VectorXd grad = oracle.gradient(v);
    const double grad_norm = grad.norm();
    if (!(grad_norm > 0.0) || !std::isfinite(grad_norm)) {
      throw Error(ErrorKind::SingularGradient, "gradient vanished or overflowed during iteration");
    }
    if (!degree) delta = std::min(delta, grad_norm);

    VectorXd next = grad / grad_norm;
    const double psi_next = oracle.value(next);
    const double gain = psi_next - psi;
    const double step = (next - v).norm();
    const double bound = 2.0 * gain / delta;
    const double slack = roundoff(std::max(std::abs(psi), std::abs(psi_next)));

    trace.psi.push_back(psi_next);
    trace.step_norm.push_back(step);
    trace.bound.push_back(bound);
    trace.delta.push_back(delta);
    const bool step_ok = step * step <= 2.0 * (gain + slack) / delta;
    trace.step_bound_ok.push_back(step_ok);

    if (cheap && gain < -std::max(1e-12, slack)) {
      std::ostringstream os;
      os << "criterion decreased at iteration " << s << " by " << -gain;
      throw Error(ErrorKind::Internal, os.str());
    }
    if (cheap && !step_ok) {
      std::ostringstream os;
      os << "step-norm bound violated at iteration " << s << ": ||dv||^2 = " << step * step
         << " > " << bound;
      throw Error(ErrorKind::Internal, os.str());
    }
    if (full) {
      const double g_value = psi + grad.dot(next - v);
      const double low = g_value - psi;
      const double high = psi_next - g_value;
      const double tol = std::max(1e-12, slack);
      const bool ok = low >= -tol && high >= -tol;
      trace.sandwich_low.push_back(low);
      trace.sandwich_high.push_back(high);
      trace.sandwich_ok.push_back(ok);
      if (!ok) {
        std::ostringstream os;
        os << "sandwich inequality violated at iteration " << s << " (" << low << ", " << high << ")";
        throw Error(ErrorKind::Internal, os.str());
      }
    }

    v = std::move(next);
    psi = psi_next;
    trace.iterations = s + 1;
    if (gain <= config.epsilon) {
      trace.epsilon_reached = true;
      break;
    }
  }

  const VectorXd grad = oracle.gradient(v);
  result.fixed_point_residual = (grad / grad.norm() - v).norm();
  if (!degree) delta = std::min(delta, grad.norm());
  const double threshold = std::sqrt(2.0 * config.epsilon / delta);
  trace.converged = trace.epsilon_reached && result.fixed_point_residual <= threshold;
  if (!trace.epsilon_reached) {
    trace.warnings.push_back("max_iter reached before the criterion stabilized");
  } else if (!trace.converged) {
    std::ostringstream os;
    os << "criterion stabilized but the fixed-point residual " << result.fixed_point_residual
       << " exceeds " << threshold;
    trace.warnings.push_back(os.str());
  }
  result.v = std::move(v);
  return result;
}

namespace {

Solution assemble(const BlockSet& set, const MetricSet& metrics, VectorXd v, SolverTrace trace, double fixed_point_residual, double m) {
  Eigen::Index pivot = 0;
  (metrics.superblock.inv_sqrt * v).cwiseAbs().maxCoeff(&pivot);
  if ((metrics.superblock.inv_sqrt * v)(pivot) < 0.0) v = -v;

  const double n = static_cast<double>(set.n());
  Solution sol;
  sol.m = m;
  sol.v_super = v;
  sol.w_super = metrics.superblock.inv_sqrt * v;
  sol.y_super = set.superblock() * sol.w_super;
  sol.y_blocks.resize(set.n(), static_cast<Eigen::Index>(set.size()));
  sol.covs.resize(static_cast<Eigen::Index>(set.size()));
  for (std::size_t b = 0; b < set.size(); ++b) {
    const auto& x = set.block(b).matrix;
    const auto& metric = metrics.blocks[b];
    const VectorXd a = metric.inv_sqrt * (x.transpose() * sol.y_super);
    const double norm = a.norm();
    const auto col = static_cast<Eigen::Index>(b);
    if (norm > 0.0) {
      sol.w_blocks.push_back(metric.inv_sqrt * a / norm);
    } else {
      sol.w_blocks.push_back(VectorXd::Zero(x.cols()));
      sol.warnings.push_back("block '" + set.block(b).id + "' has zero covariance with the superblock component");
    }
    sol.y_blocks.col(col) = x * sol.w_blocks.back();
    sol.covs(col) = norm / n;
  }
  sol.psi_final = 0.0;
  for (Eigen::Index b = 0; b < sol.covs.size(); ++b) sol.psi_final += pow_m(sol.covs(b), m);
  sol.contributions = contributions(sol.covs, m);
  sol.fixed_point_residual = fixed_point_residual;
  sol.trace = std::move(trace);
  return sol;
}

}  // namespace

Solution solve(const BlockSet& set, const ModeSelector& modes, const SolverConfig& config) {
  config.validate();
  return solve(set, build_metrics(set, modes, config.rank_tolerance), config);
}

Solution solve(const BlockSet& set, const MetricSet& metrics, const SolverConfig& config) {
  config.validate();
  const TransformedProblem problem = transform(set, metrics, config.m);
  // Covariance scale: Psi = sum_b cov(y_b, y_{B+1})^m. The recurrence is
  // invariant to this rescaling of Q.
  const TransformedProblem scaled = problem.scaled(1.0 / static_cast<double>(set.n()));
  const CriterionOracle oracle(scaled);

  std::optional<SphereResult> best;
  int best_index = -1;
  std::string start_warning;
  std::string last_failure;
  for (int k = 0; k < config.n_starts; ++k) {
    const InitSpec init = k == 0 ? config.init : InitSpec(RandomStart{config.seed + static_cast<std::uint64_t>(k)});
    try {
      std::string warning;
      VectorXd v0 = init_v(scaled, init, &warning);
      SphereResult run = sphere_maximize(oracle, v0, config);
      if (k == 0 && !warning.empty()) start_warning = warning;
      if (!best || run.trace.psi.back() > best->trace.psi.back()) {
        best = std::move(run);
        best_index = k;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BadStart && e.kind() != ErrorKind::SingularGradient) throw;
      last_failure = e.what();
    }
  }
  if (!best) {
    throw Error(ErrorKind::BadStart, "all starts failed: " + last_failure);
  }

  SolverTrace trace = std::move(best->trace);
  if (!start_warning.empty() && best_index == 0) trace.warnings.push_back(start_warning);
  Solution sol = assemble(set, metrics, std::move(best->v), std::move(trace),
                          best->fixed_point_residual, config.m);
  sol.start_index = best_index;
  for (const auto& metric : metrics.blocks) {
    sol.warnings.insert(sol.warnings.end(), metric.warnings.begin(), metric.warnings.end());
  }
  sol.warnings.insert(sol.warnings.end(), metrics.superblock.warnings.begin(),
                      metrics.superblock.warnings.end());
  if (metrics.superblock.tau == 0.0 && metrics.superblock.pseudo) {
    sol.warnings.push_back(
        "superblock is rank-deficient under Mode B: the reported superblock weights are the "
        "least-norm solution and are not unique; interpret cor(y_b, y_super) and variable correlations instead");
  }
  sol.warnings.insert(sol.warnings.end(), sol.trace.warnings.begin(), sol.trace.warnings.end());
  return sol;
}

OriginalResidual stationary_residual_original(const VectorXd& w_super, const BlockSet& set,
                                              const MetricSet& metrics, double m) {
  const auto& super = metrics.superblock;
  if (w_super.size() != set.superblock().cols()) {
    throw Error(ErrorKind::Dimension, "superblock weight has the wrong length");
  }
  const VectorXd root_w = sqrt_apply(super, w_super);
  if (!(root_w.norm() > 0.0)) throw Error(ErrorKind::Argument, "superblock weight has zero metric norm");
  const VectorXd w = w_super / root_w.norm();
  const VectorXd y = set.superblock() * w;

  VectorXd z = VectorXd::Zero(set.n());
  for (std::size_t b = 0; b < set.size(); ++b) {
    const auto& x = set.block(b).matrix;
    const auto& metric = metrics.blocks[b];
    const VectorXd xty = x.transpose() * y;
    const double norm = (metric.inv_sqrt * xty).norm();
    double weight = 1.0;
    if (m != 2.0) {
      if (norm == 0.0) {
        if (m < 2.0) throw Error(ErrorKind::SingularGradient, "block term vanishes with m < 2");
        weight = 0.0;
      } else {
        weight = std::pow(norm, m - 2.0);
      }
    }
    z.noalias() += weight * (x * (metric.inv * xty));
  }
  const VectorXd t = set.superblock().transpose() * z;
  const VectorXd root_t = super.inv_sqrt * t;
  if (!(root_t.norm() > 0.0)) throw Error(ErrorKind::SingularGradient, "stationary image vanishes");

  OriginalResidual out;
  out.w_image = super.inv * t / root_t.norm();
  out.y_image = set.superblock() * out.w_image;
  out.residual = (root_t / root_t.norm() - sqrt_apply(super, w)).norm();
  return out;
}

OriginalResidual fixed_point_residual_original(const Solution& solution, const BlockSet& set,
                                               const MetricSet& metrics, double m) {
  return stationary_residual_original(solution.w_super, set, metrics, m);
}

VectorXd superblock_from_block_components(const Solution& solution, const BlockSet& set,
                                          const MetricSet& metrics, double m) {
  VectorXd s = VectorXd::Zero(set.n());
  for (Eigen::Index b = 0; b < solution.y_blocks.cols(); ++b) {
    const double cov = solution.covs(b);
    const double weight = m == 1.0 ? 1.0 : std::pow(cov, m - 1.0);
    s.noalias() += weight * solution.y_blocks.col(b);
  }
  if (metrics.superblock.tau == 0.0) {
    const double sd = std::sqrt(sample_var(s));
    if (!(sd > 0.0)) throw Error(ErrorKind::SingularGradient, "sum of block components vanishes");
    return s / sd;
  }
  const VectorXd t = set.superblock().transpose() * s;
  const VectorXd root_t = metrics.superblock.inv_sqrt * t;
  if (!(root_t.norm() > 0.0)) throw Error(ErrorKind::SingularGradient, "superblock image vanishes");
  return set.superblock() * (metrics.superblock.inv * t) / root_t.norm();
}

VectorXd contributions(const VectorXd& covs, double m) {
  if (covs.size() == 0) throw Error(ErrorKind::Argument, "no covariances given");
  for (Eigen::Index b = 0; b < covs.size(); ++b) {
    if (!(covs(b) >= 0.0)) {
      throw Error(ErrorKind::Argument, "covariances must be non-negative");
    }
  }
  const double top = covs.maxCoeff();
  if (!(top > 0.0)) {
    throw Error(ErrorKind::UndefinedContributions, "all block covariances are zero");
  }
  VectorXd c(covs.size());
  for (Eigen::Index b = 0; b < covs.size(); ++b) c(b) = pow_m(covs(b) / top, m);
  return c / c.sum();
}

AuxiliarySolution solve_auxiliary(const BlockSet& set, const std::vector<ShrinkageMetric>& block_metrics,
                                  const SolverConfig& config) {
  config.validate();
  const TransformedProblem problem = auxiliary_problem(set, block_metrics, config.m);
  const CriterionOracle oracle(problem);
  const VectorXd u0 = init_v(problem, config.init);
  SphereResult run = sphere_maximize(oracle, u0, config);

  const double n = static_cast<double>(set.n());
  AuxiliarySolution out;
  out.y_super = std::sqrt(n) * run.v;
  Eigen::Index pivot = 0;
  out.y_super.cwiseAbs().maxCoeff(&pivot);
  if (out.y_super(pivot) < 0.0) out.y_super = -out.y_super;
  out.y_blocks.resize(set.n(), static_cast<Eigen::Index>(set.size()));
  out.covs.resize(static_cast<Eigen::Index>(set.size()));
  out.psi_final = 0.0;
  for (std::size_t b = 0; b < set.size(); ++b) {
    const auto& x = set.block(b).matrix;
    const VectorXd a = block_metrics[b].inv_sqrt * (x.transpose() * out.y_super);
    const double norm = a.norm();
    const auto col = static_cast<Eigen::Index>(b);
    out.y_blocks.col(col) = norm > 0.0 ? VectorXd(x * (block_metrics[b].inv_sqrt * a) / norm)
                                       : VectorXd::Zero(set.n());
    out.covs(col) = norm / n;
    out.psi_final += pow_m(out.covs(col), config.m);
  }
  out.trace = std::move(run.trace);
  return out;
}

}  // namespace rcpca
