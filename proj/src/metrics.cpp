#include "rcpca/metrics.hpp"

#include "rcpca/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace rcpca {

ShrinkageMetric build_metric(const MatrixXd& x, double tau, double rank_tolerance,
                             const std::string& label) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    std::ostringstream os;
    os << label << ": shrinkage constant tau = " << tau << " is outside [0, 1]";
    throw Error(ErrorKind::Argument, os.str());
  }
  if (!(rank_tolerance >= 0.0)) {
    throw Error(ErrorKind::Argument, label + ": rank tolerance must be non-negative");
  }
  const auto n = static_cast<double>(x.rows());
  const auto J = x.cols();

  ShrinkageMetric metric;
  metric.tau = tau;
  metric.rank_tolerance = rank_tolerance;

  if (tau == 1.0) {
    metric.m_matrix = MatrixXd::Identity(J, J);
    metric.eigenvalues = VectorXd::Ones(J);
    metric.eigenvectors = MatrixXd::Identity(J, J);
    metric.inv = metric.m_matrix;
    metric.inv_sqrt = metric.m_matrix;
    metric.rank = J;
    return metric;
  }

  MatrixXd cov = x.transpose() * x / n;
  cov = 0.5 * (cov + cov.transpose());
  metric.m_matrix = tau * MatrixXd::Identity(J, J) + (1.0 - tau) * cov;

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(metric.m_matrix);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::Internal, label + ": eigendecomposition of the metric failed");
  }
  metric.eigenvalues = eig.eigenvalues().reverse();
  metric.eigenvectors = eig.eigenvectors().rowwise().reverse();

  const double lambda_max = std::max(metric.eigenvalues(0), 0.0);
  const double cutoff = tau == 0.0 ? rank_tolerance * lambda_max : 0.0;
  VectorXd inv_vals(J);
  VectorXd inv_sqrt_vals(J);
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < J; ++k) {
    const double lambda = metric.eigenvalues(k);
    if (lambda > cutoff && lambda > 0.0) {
      inv_vals(k) = 1.0 / lambda;
      inv_sqrt_vals(k) = 1.0 / std::sqrt(lambda);
      ++rank;
    } else {
      inv_vals(k) = 0.0;
      inv_sqrt_vals(k) = 0.0;
    }
  }
  metric.rank = rank;
  if (rank == 0) {
    throw Error(ErrorKind::DegenerateColumn, label + ": block matrix is numerically zero");
  }

  if (tau == 0.0) {
    if (rank >= x.rows()) {
      std::ostringstream os;
      os << label << ": rank(X) = n = " << x.rows()
         << ", so Mode B (tau = 0) is meaningless; use a shrinkage constant tau > 0";
      throw Error(ErrorKind::ModeBInfeasible, os.str());
    }
    if (rank < J) {
      metric.pseudo = true;
      std::ostringstream os;
      os << label << ": Mode B on a rank-deficient matrix (rank " << rank << " < " << J
         << " columns); using the Moore-Penrose inverse";
      metric.warnings.push_back(os.str());
    }
  }

  const auto& V = metric.eigenvectors;
  metric.inv = V * inv_vals.asDiagonal() * V.transpose();
  metric.inv_sqrt = V * inv_sqrt_vals.asDiagonal() * V.transpose();
  return metric;
}

ShrinkageMetric build_metric(const Block& block, double tau, double rank_tolerance) {
  return build_metric(block.matrix, tau, rank_tolerance, "block '" + block.id + "'");
}

MatrixXd inv_sqrt_apply(const ShrinkageMetric& metric, const MatrixXd& w) {
  if (w.rows() != metric.dim()) {
    std::ostringstream os;
    os << "inv_sqrt_apply: expected " << metric.dim() << " rows, got " << w.rows();
    throw Error(ErrorKind::Dimension, os.str());
  }
  return metric.inv_sqrt * w;
}

ModeSelector ModeSelector::uniform(std::size_t blocks, double tau_blocks, double tau_superblock) {
  ModeSelector modes;
  modes.block_tau.assign(blocks, tau_blocks);
  modes.superblock_tau = tau_superblock;
  return modes;
}

void ModeSelector::validate(std::size_t blocks) const {
  if (block_tau.size() != blocks) {
    std::ostringstream os;
    os << "expected " << blocks << " block shrinkage constants, got " << block_tau.size();
    throw Error(ErrorKind::Argument, os.str());
  }
  auto check = [](double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
      std::ostringstream os;
      os << "shrinkage constant " << tau << " is outside [0, 1]";
      throw Error(ErrorKind::Argument, os.str());
    }
  };
  for (double tau : block_tau) check(tau);
  check(superblock_tau);
}

MetricSet build_metrics(const BlockSet& set, const ModeSelector& modes, double rank_tolerance) {
  modes.validate(set.size());
  MetricSet metrics;
  for (std::size_t b = 0; b < set.size(); ++b) {
    metrics.blocks.push_back(build_metric(set.block(b), modes.block_tau[b], rank_tolerance));
  }
  metrics.superblock = build_metric(set.superblock(), modes.superblock_tau, rank_tolerance,
                                    "superblock");
  return metrics;
}

ProjectionOperator projection_operator(const MatrixXd& x, double rank_tolerance) {
  Eigen::BDCSVD<MatrixXd> svd(x, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  const double cutoff = std::sqrt(rank_tolerance) * (s.size() > 0 ? s(0) : 0.0);
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) > cutoff && s(k) > 0.0) ++rank;
  }
  return ProjectionOperator(svd.matrixU().leftCols(rank));
}

ProjectionOperator projection_operator(const Block& block, double rank_tolerance) {
  ProjectionOperator op = projection_operator(block.matrix, rank_tolerance);
  if (op.rank() >= block.rows()) {
    throw Error(ErrorKind::ModeBInfeasible,
                "block '" + block.id +
                    "': rank(X) = n, the projector is the identity; use a shrinkage constant tau > 0");
  }
  return op;
}

}  // namespace rcpca
