#pragma once

#include "rcpca/dataset.hpp"
#include "rcpca/metrics.hpp"
#include "rcpca/solver.hpp"

#include <string>
#include <vector>

namespace rcpca {

enum class DeflationStrategy {
  GlobalComponents,  // (a) every block on the previous superblock component
  BlockComponents,   // (b) each block on its own previous block component
  BlockLoadings,     // (c) each block on its previous loading direction X_b'y
  OwnComponents,     // (d) blocks and superblock each on their own component
};

const char* to_string(DeflationStrategy strategy);
DeflationStrategy parse_deflation(const std::string& name);

// Residual of the column-wise regression of X on q.
MatrixXd deflate(const MatrixXd& x, const VectorXd& q);
// X (I - p p') with p normalized.
MatrixXd deflate_columns(const MatrixXd& x, const VectorXd& p);

struct OrthogonalityReport {
  // [b] holds the R x R correlation matrix of block b's components across ranks.
  std::vector<MatrixXd> within_block;
  MatrixXd superblock;  // R x R, superblock components across ranks

  // Largest |cor| off the diagonal.
  double max_within_block() const;
  double max_superblock() const;
};

struct MultiSolution {
  DeflationStrategy strategy = DeflationStrategy::OwnComponents;
  std::size_t requested_rank = 0;
  std::vector<Solution> ranks;
  std::vector<BlockSet> deflated_sets;  // data each rank was solved on
  OrthogonalityReport orthogonality;
  bool rank_exhausted = false;
  std::vector<std::string> warnings;

  std::size_t rank() const { return ranks.size(); }
};

MultiSolution extract(const BlockSet& set, const ModeSelector& modes, const SolverConfig& config,
                      std::size_t rank, DeflationStrategy strategy);

OrthogonalityReport orthogonality(const std::vector<Solution>& ranks);

}  // namespace rcpca
