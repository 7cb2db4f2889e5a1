#include "rcpca/deflation.hpp"
#include "rcpca/error.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace rcpca;

namespace {

BlockSet latent_set(std::uint64_t seed, int n, const std::vector<int>& widths) {
  std::mt19937_64 rng(seed);
  std::vector<Block> blocks;
  const auto raw = oracle::latent_blocks(rng, n, widths, 3);
  for (std::size_t b = 0; b < raw.size(); ++b) blocks.push_back(make_block("b" + std::to_string(b), raw[b]));
  return build_blockset(std::move(blocks));
}

SolverConfig tight() {
  SolverConfig c;
  c.epsilon = 1e-13;
  c.max_iter = 100000;
  return c;
}

}  // namespace

TEST_CASE("deflate hand example") {
  MatrixXd x(3, 2);
  x << 1, 1, -1, 0, 0, -1;
  VectorXd q(3);
  q << 1, -1, 0;
  const MatrixXd e = deflate(x, q);
  CHECK(e.col(0).norm() < 1e-15);
  CHECK(e(0, 1) == doctest::Approx(0.5));
  CHECK(e(1, 1) == doctest::Approx(0.5));
  CHECK(e(2, 1) == doctest::Approx(-1.0));
}

TEST_CASE("deflate special cases") {
  MatrixXd x(4, 2);
  x << 1, 1, -1, 1, 1, -1, -1, -1;  // orthogonal columns
  const MatrixXd e = deflate(x, x.col(0));
  CHECK(e.col(0).norm() < 1e-15);
  CHECK(e.col(1).isApprox(x.col(1)));

  VectorXd q(4);
  q << 1, -1, -1, 1;
  CHECK(deflate(x, q).isApprox(x));
  CHECK_THROWS_AS(deflate(x, VectorXd::Zero(4)), Error);
  CHECK_THROWS_AS(deflate(x, VectorXd::Ones(3)), Error);
}

TEST_CASE("deflate is idempotent and leaves columns orthogonal to q") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 10; ++trial) {
    MatrixXd x(8, 3);
    VectorXd q(8);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = z(rng);
    for (Eigen::Index i = 0; i < 8; ++i) q(i) = z(rng);
    const MatrixXd e = deflate(x, q);
    CHECK((deflate(e, q) - e).norm() <= 1e-12 * x.norm());
    CHECK((e.transpose() * q).norm() <= 1e-10 * x.norm() * q.norm());
  }
}

TEST_CASE("column deflation removes the loading direction") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  MatrixXd x(6, 3);
  VectorXd p(3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = z(rng);
  for (Eigen::Index i = 0; i < 3; ++i) p(i) = z(rng);
  CHECK((deflate_columns(x, p) * p).norm() <= 1e-12 * x.norm() * p.norm());
}

TEST_CASE("strategy names") {
  CHECK(parse_deflation("global") == DeflationStrategy::GlobalComponents);
  CHECK(parse_deflation("b") == DeflationStrategy::BlockComponents);
  CHECK(parse_deflation("loading") == DeflationStrategy::BlockLoadings);
  CHECK(parse_deflation("own") == DeflationStrategy::OwnComponents);
  CHECK(std::string(to_string(DeflationStrategy::BlockLoadings)) == "loading");
  CHECK_THROWS_AS(parse_deflation("sideways"), Error);
}

TEST_CASE("rank one equals a plain solve for every strategy") {
  const BlockSet set = latent_set(4, 20, {3, 3});
  const ModeSelector modes = ModeSelector::uniform(2, 1.0, 1.0);
  const Solution plain = solve(set, modes, tight());
  for (auto s : {DeflationStrategy::GlobalComponents, DeflationStrategy::BlockComponents,
                 DeflationStrategy::BlockLoadings, DeflationStrategy::OwnComponents}) {
    const MultiSolution multi = extract(set, modes, tight(), 1, s);
    REQUIRE(multi.rank() == 1);
    CHECK(multi.ranks[0].y_super == plain.y_super);
  }
}

TEST_CASE("orthogonality per strategy") {
  const BlockSet set = latent_set(5, 20, {4, 4, 4});
  const ModeSelector modes = ModeSelector::uniform(3, 1.0, 1.0);

  const MultiSolution d = extract(set, modes, tight(), 3, DeflationStrategy::OwnComponents);
  REQUIRE(d.rank() == 3);
  CHECK(d.orthogonality.max_within_block() <= 1e-8);
  CHECK(d.orthogonality.max_superblock() <= 1e-8);
  CHECK_FALSE(d.deflated_sets[1].is_concatenation());

  const MultiSolution a = extract(set, modes, tight(), 3, DeflationStrategy::GlobalComponents);
  CHECK(a.orthogonality.max_superblock() <= 1e-8);
  CHECK(a.orthogonality.max_within_block() > 1e-6);  // observed, not guaranteed

  const MultiSolution b = extract(set, modes, tight(), 3, DeflationStrategy::BlockComponents);
  CHECK(b.orthogonality.max_within_block() <= 1e-8);
  for (const auto& sol : b.ranks) {
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(oracle::column_space_residual(set.block(k).matrix, sol.y_blocks.col(static_cast<Eigen::Index>(k))) <=
            1e-8);
    }
  }

  const MultiSolution c = extract(set, modes, tight(), 2, DeflationStrategy::BlockLoadings);
  CHECK(c.rank() == 2);
}

TEST_CASE("Mode B superblock with own-component deflation warns") {
  const BlockSet set = latent_set(6, 30, {3, 3});
  const MultiSolution d =
      extract(set, ModeSelector::uniform(2, 1.0, 0.0), tight(), 2, DeflationStrategy::OwnComponents);
  CHECK_FALSE(d.warnings.empty());
}

TEST_CASE("exhausted block stops early with partial results") {
  const BlockSet set = latent_set(7, 15, {1, 3});
  const MultiSolution m = extract(set, ModeSelector::uniform(2, 1.0, 1.0), tight(), 3,
                                  DeflationStrategy::BlockComponents);
  CHECK(m.rank() == 1);
  CHECK(m.rank_exhausted);
  CHECK_FALSE(m.warnings.empty());
  CHECK_THROWS_AS(extract(set, ModeSelector::uniform(2, 1.0, 1.0), tight(), 0,
                          DeflationStrategy::BlockComponents),
                  Error);
}

TEST_CASE("orthogonality report is reproducible") {
  const BlockSet set = latent_set(8, 20, {3, 3});
  const ModeSelector modes = ModeSelector::uniform(2, 0.5, 1.0);
  const MultiSolution a = extract(set, modes, tight(), 2, DeflationStrategy::OwnComponents);
  const MultiSolution b = extract(set, modes, tight(), 2, DeflationStrategy::OwnComponents);
  CHECK(a.orthogonality.superblock == b.orthogonality.superblock);
  CHECK(a.orthogonality.within_block[0] == b.orthogonality.within_block[0]);
}
