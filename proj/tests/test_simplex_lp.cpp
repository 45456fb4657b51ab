#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "meta/simplex_lp.hpp"
#include "support/random_lp.hpp"

using namespace meta;
using lp::LinearProgram;
using lp::Sense;
using lp::Status;

namespace {

LinearProgram unit_box(std::size_t n) {
  LinearProgram prog;
  prog.objective.assign(n, 0.0);
  prog.lower.assign(n, 0.0);
  prog.upper.assign(n, 1.0);
  return prog;
}

LinearProgram triangle_cover() {
  LinearProgram prog = unit_box(3);
  prog.objective = {1.0, 1.0, 1.0};
  prog.add_row({1, 0, 1}, Sense::GreaterEqual, 1.0);
  prog.add_row({1, 1, 0}, Sense::GreaterEqual, 1.0);
  prog.add_row({0, 1, 1}, Sense::GreaterEqual, 1.0);
  return prog;
}

bool has_vertex(const std::vector<std::vector<double>>& vs, const std::vector<double>& v) {
  for (const auto& w : vs) {
    bool same = true;
    for (std::size_t j = 0; j < v.size(); ++j) same &= std::abs(w[j] - v[j]) < 1e-9;
    if (same) return true;
  }
  return false;
}

}  // namespace

TEST(Solve, SingleCoveringRow) {
  LinearProgram prog = unit_box(2);
  prog.objective = {1.0, 1.0};
  prog.add_row({1.0, 1.0}, Sense::GreaterEqual, 1.0);
  const auto sol = lp::solve(prog);
  ASSERT_EQ(sol.status, Status::Optimal);
  EXPECT_NEAR(sol.objective, 1.0, 1e-12);
  EXPECT_NEAR(sol.x[0], 1.0, 1e-12);
  EXPECT_NEAR(sol.x[1], 0.0, 1e-12);
}

TEST(Solve, TriangleRelaxation) {
  const auto prog = triangle_cover();
  const auto sol = lp::solve(prog);
  ASSERT_EQ(sol.status, Status::Optimal);
  EXPECT_NEAR(sol.objective, 1.5, 1e-12);
  for (double v : sol.x) EXPECT_NEAR(v, 0.5, 1e-12);
  EXPECT_NEAR(*lp::vertex_minimum(prog), 1.5, 1e-12);
}

TEST(Solve, InfeasibleBox) {
  LinearProgram prog = unit_box(1);
  prog.objective = {1.0};
  prog.add_row({1.0}, Sense::GreaterEqual, 2.0);
  EXPECT_EQ(lp::solve(prog).status, Status::Infeasible);
}

TEST(Solve, Unbounded) {
  LinearProgram prog;
  prog.objective = {-1.0, 0.0};
  prog.add_row({1.0, -1.0}, Sense::LessEqual, 1.0);
  EXPECT_EQ(lp::solve(prog).status, Status::Unbounded);
}

TEST(Solve, FreeAndNegativeBounds) {
  // min x0 + 2 x1 with x0 free, x1 in [-3, -1], x0 - x1 >= 0.5 and x0 <= 4
  LinearProgram prog;
  prog.objective = {1.0, 2.0};
  prog.lower = {-lp::kInf, -3.0};
  prog.upper = {4.0, -1.0};
  prog.add_row({1.0, -1.0}, Sense::GreaterEqual, 0.5);
  const auto sol = lp::solve(prog);
  ASSERT_EQ(sol.status, Status::Optimal);
  EXPECT_NEAR(sol.x[1], -3.0, 1e-12);
  EXPECT_NEAR(sol.x[0], -2.5, 1e-12);
  EXPECT_NEAR(sol.objective, -8.5, 1e-12);
}

TEST(Solve, EqualityAndRedundantRows) {
  LinearProgram prog;
  prog.objective = {1.0, 1.0, 0.0};
  prog.add_row({1.0, 1.0, 1.0}, Sense::Equal, 2.0);
  prog.add_row({2.0, 2.0, 2.0}, Sense::Equal, 4.0);
  prog.add_row({0.0, 0.0, 1.0}, Sense::LessEqual, 1.5);
  const auto sol = lp::solve(prog);
  ASSERT_EQ(sol.status, Status::Optimal);
  EXPECT_NEAR(sol.objective, 0.5, 1e-12);
}

TEST(Solve, Malformed) {
  LinearProgram prog;
  prog.objective = {1.0, 1.0};
  prog.add_row({1.0}, Sense::LessEqual, 1.0);
  EXPECT_THROW(lp::solve(prog), DimensionMismatch);
  LinearProgram bad_bounds;
  bad_bounds.objective = {1.0};
  bad_bounds.lower = {2.0};
  bad_bounds.upper = {1.0};
  EXPECT_THROW(lp::solve(bad_bounds), InvalidArgument);
}

TEST(Solve, WeakDuality) {
  // primal: min c.x, A x >= b, x >= 0. dual: max b.y, A^T y <= c, y >= 0.
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 4;
    const std::size_t m = 1 + trial % 3;
    std::vector<std::vector<double>> a(m, std::vector<double>(n));
    std::vector<double> b(m), c(n);
    for (auto& row : a) {
      for (double& v : row) v = uniform(rng, 0.0, 2.0);
    }
    for (double& v : b) v = uniform(rng, 0.5, 2.0);
    for (double& v : c) v = uniform(rng, 0.5, 2.0);
    LinearProgram primal;
    primal.objective = c;
    for (std::size_t i = 0; i < m; ++i) primal.add_row(a[i], Sense::GreaterEqual, b[i]);
    LinearProgram dual;
    for (double v : b) dual.objective.push_back(-v);
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> col(m);
      for (std::size_t i = 0; i < m; ++i) col[i] = a[i][j];
      dual.add_row(col, Sense::LessEqual, c[j]);
    }
    const auto p = lp::solve(primal);
    const auto d = lp::solve(dual);
    ASSERT_EQ(p.status, Status::Optimal);
    ASSERT_EQ(d.status, Status::Optimal);
    EXPECT_GE(p.objective + 1e-9, -d.objective);
    EXPECT_NEAR(p.objective, -d.objective, 1e-8);
  }
}

TEST(Solve, Deterministic) {
  Rng rng(99);
  const auto prog = meta::testing::random_boxed_lp(rng, 6, true);
  const auto a = lp::solve(prog);
  const auto b = lp::solve(prog);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Solve, MatchesVertexEnumeration) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto prog = meta::testing::random_boxed_lp(rng, 6, trial % 2 == 1);
    const auto best = lp::vertex_minimum(prog);
    const auto sol = lp::solve(prog);
    if (!best) {
      EXPECT_EQ(sol.status, Status::Infeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(sol.status, Status::Optimal) << "trial " << trial;
    EXPECT_NEAR(sol.objective, *best, 1e-7) << "trial " << trial;
  }
}

TEST(EnumerateVertices, BoxHasFourCorners) {
  const auto vs = lp::enumerate_vertices(unit_box(2));
  EXPECT_EQ(vs.size(), 4u);
  EXPECT_TRUE(has_vertex(vs, {1.0, 1.0}));
}

TEST(EnumerateVertices, TriangleCover) {
  const auto vs = lp::enumerate_vertices(triangle_cover());
  EXPECT_TRUE(has_vertex(vs, {0.5, 0.5, 0.5}));
  EXPECT_TRUE(has_vertex(vs, {1.0, 1.0, 0.0}));
  EXPECT_TRUE(has_vertex(vs, {0.0, 1.0, 1.0}));
  EXPECT_TRUE(has_vertex(vs, {1.0, 0.0, 1.0}));
}

TEST(EnumerateVertices, EmptyRegion) {
  LinearProgram prog = unit_box(2);
  prog.add_row({1.0, 1.0}, Sense::GreaterEqual, 3.0);
  EXPECT_TRUE(lp::enumerate_vertices(prog).empty());
  EXPECT_FALSE(lp::vertex_minimum(prog).has_value());
}

TEST(EnumerateVertices, TooLarge) { EXPECT_THROW(lp::enumerate_vertices(unit_box(9)), TooLarge); }
