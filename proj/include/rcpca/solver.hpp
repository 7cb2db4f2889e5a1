#pragma once

#include "rcpca/dataset.hpp"
#include "rcpca/metrics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rcpca {

// Psi(v) = sum_b ||Q_b v||^m on the unit sphere, with Q_b = P_b' P_{B+1} and
// P_b = X_b M_b^{-1/2}. p holds B+1 matrices (superblock last) when the problem
// comes from data; problems built straight from Q matrices leave it empty.
struct TransformedProblem {
  std::vector<MatrixXd> p;
  std::vector<MatrixXd> q;
  double m = 2.0;
  std::vector<std::string> labels;

  static TransformedProblem from_q(std::vector<MatrixXd> q, double m);

  std::size_t blocks() const { return q.size(); }
  Eigen::Index dim() const { return q.empty() ? 0 : q.front().cols(); }
  TransformedProblem scaled(double factor) const;
};

TransformedProblem transform(const BlockSet& set, const MetricSet& metrics, double m);

// Transformed form of the auxiliary-variable problem: the unknown is the unit
// n-vector u with y_{B+1} = sqrt(n) u, and Q_b = M_b^{-1/2} X_b' / sqrt(n). Its
// fixed points are the projector-form stationary equation of a Mode B superblock.
TransformedProblem auxiliary_problem(const BlockSet& set, const std::vector<ShrinkageMetric>& block_metrics,
                                     double m);

double criterion(const TransformedProblem& problem, const VectorXd& v);
VectorXd gradient(const TransformedProblem& problem, const VectorXd& v);
// One step of the recurrence: grad(v) / ||grad(v)||.
VectorXd iterate(const TransformedProblem& problem, const VectorXd& v);

struct DominantEigenvectorStart {};
struct RandomStart {
  std::uint64_t seed = 0;
};
struct GivenStart {
  VectorXd v;
};
using InitSpec = std::variant<DominantEigenvectorStart, RandomStart, GivenStart>;

// Unit start vector with Psi > 0. The warning slot receives a note when the
// top eigenvalue of sum Q_b'Q_b is numerically repeated.
VectorXd init_v(const TransformedProblem& problem, const InitSpec& init,
                std::string* warning = nullptr);

// Uniform draw on the unit sphere; identical for identical seeds.
VectorXd random_unit_vector(Eigen::Index dim, std::uint64_t seed);

enum class AssertLevel { Off, Cheap, Full };

struct SolverConfig {
  double m = 2.0;
  double epsilon = 1e-10;
  int max_iter = 10000;
  InitSpec init = DominantEigenvectorStart{};
  std::uint64_t seed = 0;
  int n_starts = 1;
  AssertLevel assert_level = AssertLevel::Cheap;
  double rank_tolerance = kDefaultRankTolerance;

  void validate() const;
};

struct SolverTrace {
  std::vector<double> psi;        // psi[0] at the start, psi[s + 1] after step s
  std::vector<double> step_norm;  // ||v^{s+1} - v^s||
  std::vector<double> bound;      // 2 (Psi^{s+1} - Psi^s) / delta
  std::vector<double> delta;      // m Psi(v^0), or min ||grad|| for non-homogeneous Psi
  std::vector<bool> step_bound_ok;
  std::vector<double> sandwich_low;   // G(f(v), v) - Psi(v), full assert level only
  std::vector<double> sandwich_high;  // Psi(f(v)) - G(f(v), v)
  std::vector<bool> sandwich_ok;
  int iterations = 0;
  bool epsilon_reached = false;
  bool converged = false;
  std::vector<std::string> warnings;
};

// A convex, continuously differentiable function on the unit sphere.
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;
  virtual Eigen::Index dim() const = 0;
  virtual double value(const VectorXd& v) const = 0;
  virtual VectorXd gradient(const VectorXd& v) const = 0;
  // Degree of positive homogeneity when Psi is homogeneous; enables the
  // m Psi(v^0) lower bound on gradient norms.
  virtual std::optional<double> homogeneity() const { return std::nullopt; }
};

class CriterionOracle final : public GradientOracle {
 public:
  explicit CriterionOracle(const TransformedProblem& problem) : problem_(problem) {}
  Eigen::Index dim() const override { return problem_.dim(); }
  double value(const VectorXd& v) const override { return criterion(problem_, v); }
  VectorXd gradient(const VectorXd& v) const override { return rcpca::gradient(problem_, v); }
  std::optional<double> homogeneity() const override { return problem_.m; }

 private:
  const TransformedProblem& problem_;
};

struct SphereResult {
  VectorXd v;
  SolverTrace trace;
  double fixed_point_residual = 0.0;
};

// Iterates v <- grad(v) / ||grad(v)|| until the criterion gains at most epsilon.
// Reaching max_iter is reported through trace.converged, not thrown.
SphereResult sphere_maximize(const GradientOracle& oracle, const VectorXd& start,
                             const SolverConfig& config);

struct Solution {
  double m = 2.0;
  VectorXd v_super;
  VectorXd w_super;
  VectorXd y_super;
  std::vector<VectorXd> w_blocks;
  MatrixXd y_blocks;  // n x B, column b is y_b
  VectorXd covs;
  VectorXd contributions;
  double psi_final = 0.0;  // sum_b cov(y_b, y_{B+1})^m
  double fixed_point_residual = 0.0;
  int start_index = 0;
  SolverTrace trace;
  std::vector<std::string> warnings;
};

Solution solve(const BlockSet& set, const ModeSelector& modes, const SolverConfig& config);
Solution solve(const BlockSet& set, const MetricSet& metrics, const SolverConfig& config);

struct OriginalResidual {
  VectorXd w_image;  // right side of the superblock weight recurrence
  VectorXd y_image;  // right side of the superblock component recurrence
  double residual = 0.0;  // ||M^{1/2}(w_image - w)||, equal to ||f(v) - v||
};

OriginalResidual fixed_point_residual_original(const Solution& solution, const BlockSet& set,
                                               const MetricSet& metrics, double m);
// Same check for an arbitrary superblock weight (normalized to w'Mw = 1 first).
OriginalResidual stationary_residual_original(const VectorXd& w_super, const BlockSet& set,
                                              const MetricSet& metrics, double m);

// y_{B+1} rebuilt from the block components and their covariances.
VectorXd superblock_from_block_components(const Solution& solution, const BlockSet& set,
                                          const MetricSet& metrics, double m);

VectorXd contributions(const VectorXd& covs, double m);

// Result of iterating the projector-form equation directly in R^n.
struct AuxiliarySolution {
  VectorXd y_super;   // var = 1
  MatrixXd y_blocks;  // n x B
  VectorXd covs;
  double psi_final = 0.0;
  SolverTrace trace;
};

AuxiliarySolution solve_auxiliary(const BlockSet& set, const std::vector<ShrinkageMetric>& block_metrics,
                                  const SolverConfig& config);

}  // namespace rcpca
