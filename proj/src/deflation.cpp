#include "rcpca/deflation.hpp"

#include "rcpca/error.hpp"

#include <cmath>
#include <sstream>

namespace rcpca {

const char* to_string(DeflationStrategy strategy) {
  switch (strategy) {
    case DeflationStrategy::GlobalComponents: return "global";
    case DeflationStrategy::BlockComponents: return "block";
    case DeflationStrategy::BlockLoadings: return "loading";
    case DeflationStrategy::OwnComponents: return "own";
  }
  return "own";
}

DeflationStrategy parse_deflation(const std::string& name) {
  if (name == "global" || name == "a") return DeflationStrategy::GlobalComponents;
  if (name == "block" || name == "b") return DeflationStrategy::BlockComponents;
  if (name == "loading" || name == "c") return DeflationStrategy::BlockLoadings;
  if (name == "own" || name == "d") return DeflationStrategy::OwnComponents;
  throw Error(ErrorKind::Config, "unknown deflation strategy '" + name + "' (global|block|loading|own)");
}

MatrixXd deflate(const MatrixXd& x, const VectorXd& q) {
  if (q.size() != x.rows()) {
    throw Error(ErrorKind::Dimension, "deflate: q length does not match the number of rows");
  }
  const double qq = q.squaredNorm();
  if (!(qq > 0.0)) throw Error(ErrorKind::Argument, "deflate: q is the zero vector");
  return x - q * (q.transpose() * x) / qq;
}

MatrixXd deflate_columns(const MatrixXd& x, const VectorXd& p) {
  if (p.size() != x.cols()) {
    throw Error(ErrorKind::Dimension, "deflate_columns: p length does not match the number of columns");
  }
  const double norm = p.norm();
  if (!(norm > 0.0)) throw Error(ErrorKind::Argument, "deflate_columns: p is the zero vector");
  const VectorXd unit = p / norm;
  return x - (x * unit) * unit.transpose();
}

namespace {

double max_off_diagonal(const MatrixXd& c) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (i != j) worst = std::max(worst, std::abs(c(i, j)));
    }
  }
  return worst;
}

MatrixXd correlations(const std::vector<VectorXd>& columns) {
  const auto r = static_cast<Eigen::Index>(columns.size());
  MatrixXd c(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) c(i, j) = sample_cor(columns[i], columns[j]);
  }
  return c;
}

Block with_matrix(const Block& block, MatrixXd matrix) {
  Block out = block;
  out.matrix = std::move(matrix);
  return out;
}

bool exhausted(const MatrixXd& deflated, const MatrixXd& original) {
  return !(deflated.norm() > 1e-12 * original.norm());
}

}  // namespace

double OrthogonalityReport::max_within_block() const {
  double worst = 0.0;
  for (const auto& c : within_block) worst = std::max(worst, max_off_diagonal(c));
  return worst;
}

double OrthogonalityReport::max_superblock() const { return max_off_diagonal(superblock); }

OrthogonalityReport orthogonality(const std::vector<Solution>& ranks) {
  OrthogonalityReport report;
  if (ranks.empty()) return report;
  const auto blocks = ranks.front().y_blocks.cols();
  for (Eigen::Index b = 0; b < blocks; ++b) {
    std::vector<VectorXd> columns;
    for (const auto& s : ranks) columns.push_back(s.y_blocks.col(b));
    report.within_block.push_back(correlations(columns));
  }
  std::vector<VectorXd> supers;
  for (const auto& s : ranks) supers.push_back(s.y_super);
  report.superblock = correlations(supers);
  return report;
}

MultiSolution extract(const BlockSet& set, const ModeSelector& modes, const SolverConfig& config,
                      std::size_t rank, DeflationStrategy strategy) {
  if (rank < 1) throw Error(ErrorKind::Argument, "requested rank must be >= 1");
  modes.validate(set.size());

  MultiSolution out;
  out.strategy = strategy;
  out.requested_rank = rank;
  if (strategy == DeflationStrategy::OwnComponents && modes.superblock_tau == 0.0 && rank > 1) {
    out.warnings.push_back(
        "own-component deflation with a Mode B superblock: the deflated superblock is no longer "
        "the concatenation of the deflated blocks and some properties are lost");
  }

  BlockSet current = set;
  for (std::size_t r = 0; r < rank; ++r) {
    if (r > 0) {
      const Solution& prev = out.ranks.back();
      std::vector<Block> next;
      std::string empty_block;
      for (std::size_t b = 0; b < current.size(); ++b) {
        const Block& block = current.block(b);
        const auto col = static_cast<Eigen::Index>(b);
        MatrixXd e;
        switch (strategy) {
          case DeflationStrategy::GlobalComponents:
            e = deflate(block.matrix, prev.y_super);
            break;
          case DeflationStrategy::BlockComponents:
          case DeflationStrategy::OwnComponents:
            e = deflate(block.matrix, prev.y_blocks.col(col));
            break;
          case DeflationStrategy::BlockLoadings:
            e = deflate_columns(block.matrix, block.matrix.transpose() * prev.y_super);
            break;
        }
        if (exhausted(e, set.block(b).matrix) && empty_block.empty()) empty_block = block.id;
        next.push_back(with_matrix(block, std::move(e)));
      }
      if (!empty_block.empty()) {
        std::ostringstream os;
        os << "block '" << empty_block << "' is exhausted after rank " << r << "; achievable rank is " << r;
        out.warnings.push_back(os.str());
        out.rank_exhausted = true;
        break;
      }
      if (strategy == DeflationStrategy::OwnComponents) {
        MatrixXd super = deflate(current.superblock(), prev.y_super);
        if (exhausted(super, set.superblock())) {
          std::ostringstream os;
          os << "superblock is exhausted after rank " << r << "; achievable rank is " << r;
          out.warnings.push_back(os.str());
          out.rank_exhausted = true;
          break;
        }
        current = BlockSet::with_superblock(std::move(next), std::move(super));
      } else {
        current = BlockSet::concatenate(std::move(next));
      }
    }

    try {
      out.ranks.push_back(solve(current, modes, config));
      out.deflated_sets.push_back(current);
    } catch (const Error& e) {
      if (r == 0 || (e.kind() != ErrorKind::NonContributingBlock &&
                     e.kind() != ErrorKind::DegenerateColumn)) {
        throw;
      }
      std::ostringstream os;
      os << "stopped at rank " << r << ": " << e.what();
      out.warnings.push_back(os.str());
      out.rank_exhausted = true;
      break;
    }
  }
  out.orthogonality = orthogonality(out.ranks);
  return out;
}

}  // namespace rcpca
