#pragma once

// Reference computations used by the tests. They avoid the library's own
// numerical routines so that agreement is meaningful.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct EigenPairs {
  VectorXd values;   // descending
  MatrixXd vectors;  // columns
};

// Cyclic Jacobi rotations on a symmetric matrix.
inline EigenPairs jacobi_eigen(MatrixXd a) {
  const Eigen::Index n = a.rows();
  MatrixXd v = MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-32 * std::max(1e-300, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
  EigenPairs out{VectorXd(n), MatrixXd(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

// Symmetric matrix function through Jacobi; eigenvalues at or below cutoff map to 0.
inline MatrixXd matrix_function(const MatrixXd& a, const std::function<double(double)>& f, double cutoff = 0.0) {
  const EigenPairs e = jacobi_eigen(a);
  VectorXd d(e.values.size());
  for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = e.values(k) > cutoff ? f(e.values(k)) : 0.0;
  return e.vectors * d.asDiagonal() * e.vectors.transpose();
}

inline MatrixXd centered(MatrixXd x) {
  x.rowwise() -= x.colwise().mean();
  return x;
}

inline MatrixXd shrinkage(const MatrixXd& x, double tau) {
  const double n = static_cast<double>(x.rows());
  return tau * MatrixXd::Identity(x.cols(), x.cols()) + (1.0 - tau) * x.transpose() * x / n;
}

inline MatrixXd inv_sqrt(const MatrixXd& m) {
  return matrix_function(m, [](double l) { return 1.0 / std::sqrt(l); }, 1e-10 * m.norm());
}

// Q_b = (X_b M_b^{-1/2})' X_sup M_sup^{-1/2} / n on the covariance scale.
inline std::vector<MatrixXd> q_matrices(const std::vector<MatrixXd>& blocks, const std::vector<double>& tau,
                                        double tau_super) {
  Eigen::Index cols = 0;
  for (const auto& x : blocks) cols += x.cols();
  MatrixXd sup(blocks.front().rows(), cols);
  Eigen::Index off = 0;
  for (const auto& x : blocks) {
    sup.middleCols(off, x.cols()) = x;
    off += x.cols();
  }
  const double n = static_cast<double>(sup.rows());
  const MatrixXd p_sup = sup * inv_sqrt(shrinkage(sup, tau_super));
  std::vector<MatrixXd> q;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    q.push_back((blocks[b] * inv_sqrt(shrinkage(blocks[b], tau[b]))).transpose() * p_sup / n);
  }
  return q;
}

inline double psi(const std::vector<MatrixXd>& q, const VectorXd& v, double m) {
  double s = 0.0;
  for (const auto& qb : q) s += std::pow((qb * v).norm(), m);
  return s;
}

inline VectorXd central_difference(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                                   double h = 1e-6) {
  VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    VectorXd up = x, down = x;
    up(i) += h;
    down(i) -= h;
    g(i) = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

inline double mean(const VectorXd& x) { return x.mean(); }
inline double cov(const VectorXd& x, const VectorXd& y) {
  return ((x.array() - x.mean()) * (y.array() - y.mean())).sum() / static_cast<double>(x.size());
}
inline double cor(const VectorXd& x, const VectorXd& y) { return cov(x, y) / std::sqrt(cov(x, x) * cov(y, y)); }

// Rayleigh quotient residual ||A y - mu y|| / mu with mu = y'Ay / y'y.
inline double eigen_residual(const MatrixXd& a, const VectorXd& y) {
  const double mu = y.dot(a * y) / y.squaredNorm();
  return (a * y - mu * y).norm() / (std::abs(mu) * y.norm());
}

inline double abs_cos(const VectorXd& a, const VectorXd& b) { return std::abs(a.dot(b)) / (a.norm() * b.norm()); }

// Distance of y from the column space of x, relative to ||y||.
inline double column_space_residual(const MatrixXd& x, const VectorXd& y) {
  const VectorXd coef = x.completeOrthogonalDecomposition().solve(y);
  return (x * coef - y).norm() / y.norm();
}

// Blocks driven by a few shared latent factors plus noise.
inline std::vector<MatrixXd> latent_blocks(std::mt19937_64& rng, int n, const std::vector<int>& widths,
                                           int factors = 2, double noise = 0.5) {
  std::normal_distribution<double> z(0.0, 1.0);
  MatrixXd f(n, factors);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < factors; ++k) f(i, k) = z(rng);
  std::vector<MatrixXd> out;
  for (int w : widths) {
    MatrixXd load(factors, w), e(n, w);
    for (int k = 0; k < factors; ++k)
      for (int j = 0; j < w; ++j) load(k, j) = z(rng);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < w; ++j) e(i, j) = noise * z(rng);
    out.push_back(centered(f * load + e));
  }
  return out;
}

// Block scaled so that the trace of its covariance is 1.
inline MatrixXd unit_total_variance(const MatrixXd& x) {
  const double total = x.squaredNorm() / static_cast<double>(x.rows());
  return total > 0.0 ? MatrixXd(x / std::sqrt(total)) : x;
}

// Largest sum of pairwise correlations over sign choices of single-column blocks.
inline double sumcor_sign_search(const std::vector<VectorXd>& columns) {
  const std::size_t b = columns.size();
  double best = -1e300;
  for (unsigned mask = 0; mask < (1u << b); ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        const double si = (mask >> i & 1u) ? -1.0 : 1.0;
        const double sj = (mask >> j & 1u) ? -1.0 : 1.0;
        s += si * sj * cor(columns[i], columns[j]);
      }
    }
    best = std::max(best, s);
  }
  return best;
}

// Largest sum of pairwise correlations for two blocks of two columns, scanning
// both weight angles on a grid. Sign is absorbed by |cor|.
inline double sumcor_angle_grid(const MatrixXd& x1, const MatrixXd& x2, double step = 1e-3) {
  const double n = static_cast<double>(x1.rows());
  const MatrixXd c11 = x1.transpose() * x1 / n, c22 = x2.transpose() * x2 / n, c12 = x1.transpose() * x2 / n;
  const double pi = std::acos(-1.0);
  const int steps = static_cast<int>(std::ceil(pi / step));
  std::vector<double> ct(steps), st(steps), sd2(steps);
  for (int k = 0; k < steps; ++k) {
    ct[k] = std::cos(k * step);
    st[k] = std::sin(k * step);
    sd2[k] = std::sqrt(ct[k] * ct[k] * c22(0, 0) + 2 * ct[k] * st[k] * c22(0, 1) + st[k] * st[k] * c22(1, 1));
  }
  double best = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double a0 = ct[i], a1 = st[i];
    const double sd1 = std::sqrt(a0 * a0 * c11(0, 0) + 2 * a0 * a1 * c11(0, 1) + a1 * a1 * c11(1, 1));
    const double u0 = (a0 * c12(0, 0) + a1 * c12(1, 0)) / sd1;
    const double u1 = (a0 * c12(0, 1) + a1 * c12(1, 1)) / sd1;
    for (int j = 0; j < steps; ++j) {
      best = std::max(best, std::abs(u0 * ct[j] + u1 * st[j]) / sd2[j]);
    }
  }
  return 2.0 + 2.0 * best;
}

}  // namespace oracle
