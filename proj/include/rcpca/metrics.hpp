#pragma once

#include "rcpca/dataset.hpp"

#include <string>
#include <vector>

namespace rcpca {

inline constexpr double kDefaultRankTolerance = 1e-10;

// M = tau I + (1 - tau) (1/n) X'X together with the matrix functions the
// solver needs. At tau = 0 eigenvalues below rank_tolerance * lambda_max are
// treated as zero and inv / inv_sqrt become pseudo-inverses on the range.
struct ShrinkageMetric {
  double tau = 1.0;
  MatrixXd m_matrix;
  VectorXd eigenvalues;   // descending
  MatrixXd eigenvectors;  // columns match eigenvalues
  MatrixXd inv;
  MatrixXd inv_sqrt;
  double rank_tolerance = kDefaultRankTolerance;
  Eigen::Index rank = 0;  // numerical rank of M
  bool pseudo = false;    // inverse restricted to the range
  std::vector<std::string> warnings;

  Eigen::Index dim() const { return m_matrix.rows(); }
};

ShrinkageMetric build_metric(const MatrixXd& x, double tau,
                             double rank_tolerance = kDefaultRankTolerance,
                             const std::string& label = "block");
ShrinkageMetric build_metric(const Block& block, double tau,
                             double rank_tolerance = kDefaultRankTolerance);

// M^{-1/2} W through the cached eigendecomposition.
MatrixXd inv_sqrt_apply(const ShrinkageMetric& metric, const MatrixXd& w);

// Per-block tau plus the superblock tau. tau = 1 is Mode A, tau = 0 Mode B.
struct ModeSelector {
  std::vector<double> block_tau;
  double superblock_tau = 1.0;

  static ModeSelector uniform(std::size_t blocks, double tau_blocks, double tau_superblock);
  void validate(std::size_t blocks) const;
};

enum class Mode { A, B };
inline double tau_of(Mode mode) { return mode == Mode::A ? 1.0 : 0.0; }

struct MetricSet {
  std::vector<ShrinkageMetric> blocks;
  ShrinkageMetric superblock;
};

MetricSet build_metrics(const BlockSet& set, const ModeSelector& modes,
                        double rank_tolerance = kDefaultRankTolerance);

// Orthogonal projector X (X'X)^+ X' onto the column space of X, held as an
// orthonormal basis of that space.
class ProjectionOperator {
 public:
  explicit ProjectionOperator(MatrixXd basis) : basis_(std::move(basis)) {}

  VectorXd apply(const VectorXd& y) const { return basis_ * (basis_.transpose() * y); }
  MatrixXd apply(const MatrixXd& y) const { return basis_ * (basis_.transpose() * y); }
  MatrixXd matrix() const { return basis_ * basis_.transpose(); }
  Eigen::Index rank() const { return basis_.cols(); }
  const MatrixXd& basis() const { return basis_; }

 private:
  MatrixXd basis_;
};

// Block form rejects rank(X) = n, where Mode B carries no information.
ProjectionOperator projection_operator(const Block& block,
                                       double rank_tolerance = kDefaultRankTolerance);
ProjectionOperator projection_operator(const MatrixXd& x,
                                       double rank_tolerance = kDefaultRankTolerance);

}  // namespace rcpca
