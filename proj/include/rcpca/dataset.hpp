#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rcpca {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct PreprocessOptions {
  char delimiter = ',';
  bool has_row_ids = false;   // first column holds individual labels
  bool unit_variance = false; // scale with the 1/n standard deviation
};

// Column means and scale factors applied at load, kept for reporting.
struct Preprocessing {
  VectorXd means;
  VectorXd scales;  // all ones unless unit_variance was requested
  bool unit_variance = false;
};

// An n x J block of centered variables measured on shared individuals.
struct Block {
  std::string id;
  MatrixXd matrix;
  std::vector<std::string> column_names;
  std::optional<std::vector<std::string>> row_ids;
  Preprocessing preprocessing;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }
};

// Blocks plus their superblock. The superblock is the column concatenation of
// the blocks, except for sets produced by own-component deflation, where it is
// deflated on its own and carried separately.
class BlockSet {
 public:
  static BlockSet concatenate(std::vector<Block> blocks);
  static BlockSet with_superblock(std::vector<Block> blocks, MatrixXd superblock);

  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(std::size_t b) const { return blocks_.at(b); }
  std::size_t size() const { return blocks_.size(); }
  Eigen::Index n() const { return superblock_.rows(); }

  const MatrixXd& superblock() const { return superblock_; }
  bool is_concatenation() const { return concatenated_; }

  // Column offset of block b inside the superblock.
  Eigen::Index offset(std::size_t b) const { return offsets_.at(b); }
  const std::optional<std::vector<std::string>>& row_ids() const;
  std::vector<std::string> superblock_column_names() const;

 private:
  BlockSet() = default;
  void index();

  std::vector<Block> blocks_;
  MatrixXd superblock_;
  std::vector<Eigen::Index> offsets_;
  bool concatenated_ = true;
};

Block load_block(std::istream& source, const std::string& id,
                 const PreprocessOptions& options,
                 const std::string& source_name = "<stream>");
Block load_block(const std::filesystem::path& path, const std::string& id,
                 const PreprocessOptions& options);

// Center (and optionally scale) an already numeric matrix.
Block make_block(const std::string& id, MatrixXd raw, bool unit_variance = false,
                 std::vector<std::string> column_names = {});

BlockSet build_blockset(std::vector<Block> blocks);

// (1/n) x'y; both vectors are assumed centered.
double sample_cov(const VectorXd& x, const VectorXd& y);
double sample_var(const VectorXd& x);
double sample_cor(const VectorXd& x, const VectorXd& y);

}  // namespace rcpca
