#include "rcpca/dataset.hpp"

#include "rcpca/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace rcpca {

namespace {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(begin, end - begin + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(delimiter, start);
    cells.push_back(trim(std::string_view(line).substr(
        start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cells;
}

bool parse_double(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string location(const std::string& source, std::size_t line, std::size_t column) {
  std::ostringstream os;
  os << source << ": row " << line << ", column " << column;
  return os.str();
}

}  // namespace

Block make_block(const std::string& id, MatrixXd raw, bool unit_variance,
                 std::vector<std::string> column_names) {
  const auto n = raw.rows();
  const auto J = raw.cols();
  if (n < 2) {
    throw Error(ErrorKind::Dimension, "block '" + id + "' needs at least 2 rows");
  }
  if (J < 1) {
    throw Error(ErrorKind::Dimension, "block '" + id + "' has no variables");
  }
  if (column_names.empty()) {
    for (Eigen::Index j = 0; j < J; ++j) column_names.push_back(id + "_" + std::to_string(j + 1));
  }
  if (static_cast<Eigen::Index>(column_names.size()) != J) {
    throw Error(ErrorKind::Dimension, "block '" + id + "': column name count mismatch");
  }

  Block block;
  block.id = id;
  block.column_names = std::move(column_names);
  block.preprocessing.means = raw.colwise().mean().transpose();
  block.preprocessing.scales = VectorXd::Ones(J);
  block.preprocessing.unit_variance = unit_variance;

  raw.rowwise() -= block.preprocessing.means.transpose();
  if (unit_variance) {
    for (Eigen::Index j = 0; j < J; ++j) {
      const double sd = std::sqrt(raw.col(j).squaredNorm() / static_cast<double>(n));
      const double magnitude = std::max(1.0, block.preprocessing.means.cwiseAbs()(j));
      if (!(sd > 1e-14 * magnitude)) {
        throw Error(ErrorKind::DegenerateColumn,
                    "block '" + id + "': column '" + block.column_names[j] +
                        "' has zero variance and cannot be scaled to unit variance");
      }
      raw.col(j) /= sd;
      block.preprocessing.scales(j) = sd;
    }
  }
  block.matrix = std::move(raw);
  return block;
}

Block load_block(std::istream& source, const std::string& id,
                 const PreprocessOptions& options, const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(source, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split(line, options.delimiter);
      break;
    }
  }
  if (header.empty()) {
    throw Error(ErrorKind::Parse, source_name + ": missing header row");
  }
  if (line_no == 1 && header.front().rfind("\xEF\xBB\xBF", 0) == 0) {
    header.front() = header.front().substr(3);
  }

  const std::size_t first_value = options.has_row_ids ? 1 : 0;
  if (header.size() <= first_value) {
    throw Error(ErrorKind::Parse, source_name + ": header declares no variables");
  }
  std::vector<std::string> names(header.begin() + static_cast<std::ptrdiff_t>(first_value),
                                 header.end());
  const std::size_t J = names.size();

  std::vector<std::vector<double>> rows;
  std::vector<std::string> row_ids;
  while (std::getline(source, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line, options.delimiter);
    if (cells.size() != header.size()) {
      std::ostringstream os;
      os << source_name << ": row " << line_no << " has " << cells.size()
         << " fields, expected " << header.size();
      throw Error(ErrorKind::Parse, os.str());
    }
    if (options.has_row_ids) row_ids.push_back(cells[0]);
    std::vector<double> values(J);
    for (std::size_t j = 0; j < J; ++j) {
      const auto& cell = cells[j + first_value];
      if (!parse_double(cell, values[j])) {
        throw Error(ErrorKind::Parse, location(source_name, line_no, j + first_value + 1) +
                                          ": non-numeric or missing value '" + cell + "'");
      }
    }
    rows.push_back(std::move(values));
  }

  MatrixXd raw(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(J));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  Block block = make_block(id, std::move(raw), options.unit_variance, std::move(names));
  if (options.has_row_ids) block.row_ids = std::move(row_ids);
  return block;
}

Block load_block(const std::filesystem::path& path, const std::string& id,
                 const PreprocessOptions& options) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open block file '" + path.string() + "'");
  }
  return load_block(in, id, options, path.string());
}

BlockSet BlockSet::concatenate(std::vector<Block> blocks) {
  if (blocks.empty()) {
    throw Error(ErrorKind::Argument, "a block set needs at least one block");
  }
  const auto n = blocks.front().rows();
  Eigen::Index total = 0;
  for (const auto& b : blocks) {
    if (b.rows() != n) {
      std::ostringstream os;
      os << "block '" << b.id << "' has " << b.rows() << " rows but block '"
         << blocks.front().id << "' has " << n;
      throw Error(ErrorKind::Dimension, os.str());
    }
    if (b.row_ids && blocks.front().row_ids && *b.row_ids != *blocks.front().row_ids) {
      throw Error(ErrorKind::Dimension,
                  "row IDs of block '" + b.id + "' do not match block '" + blocks.front().id + "'");
    }
    total += b.cols();
  }

  BlockSet set;
  set.superblock_.resize(n, total);
  Eigen::Index col = 0;
  for (const auto& b : blocks) {
    set.superblock_.middleCols(col, b.cols()) = b.matrix;
    col += b.cols();
  }
  set.blocks_ = std::move(blocks);
  set.concatenated_ = true;
  set.index();
  return set;
}

BlockSet BlockSet::with_superblock(std::vector<Block> blocks, MatrixXd superblock) {
  BlockSet set = concatenate(std::move(blocks));
  if (superblock.rows() != set.superblock_.rows() || superblock.cols() != set.superblock_.cols()) {
    throw Error(ErrorKind::Dimension, "superblock shape does not match the blocks");
  }
  set.superblock_ = std::move(superblock);
  set.concatenated_ = false;
  return set;
}

void BlockSet::index() {
  offsets_.clear();
  Eigen::Index col = 0;
  for (const auto& b : blocks_) {
    offsets_.push_back(col);
    col += b.cols();
  }
}

const std::optional<std::vector<std::string>>& BlockSet::row_ids() const {
  return blocks_.front().row_ids;
}

std::vector<std::string> BlockSet::superblock_column_names() const {
  std::vector<std::string> names;
  for (const auto& b : blocks_) names.insert(names.end(), b.column_names.begin(), b.column_names.end());
  return names;
}

BlockSet build_blockset(std::vector<Block> blocks) { return BlockSet::concatenate(std::move(blocks)); }

double sample_cov(const VectorXd& x, const VectorXd& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::Dimension, "sample_cov: vectors have different lengths");
  }
  if (x.size() == 0) throw Error(ErrorKind::Dimension, "sample_cov: empty vectors");
  return x.dot(y) / static_cast<double>(x.size());
}

double sample_var(const VectorXd& x) { return sample_cov(x, x); }

double sample_cor(const VectorXd& x, const VectorXd& y) {
  const double sxy = sample_cov(x, y);
  const double denom = std::sqrt(sample_var(x) * sample_var(y));
  return denom > 0.0 ? sxy / denom : 0.0;
}

}  // namespace rcpca
