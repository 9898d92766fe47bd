#include <gtest/gtest.h>

#include <vector>

#include "fsaloha/allocation.hpp"
#include "fsaloha/metrics.hpp"
#include "fsaloha/selftest.hpp"

using namespace fsaloha;

TEST(ProjectRowSimplex, KnownProjections) {
  EXPECT_EQ(project_row_simplex(std::vector<double>{0.6, 0.6}), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(project_row_simplex(std::vector<double>{1.2, -0.2}), (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(project_row_simplex(std::vector<double>{2.0, 0.0, 0.0}), (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(ProjectRowSimplex, MatchesGridOracle) {
  for (const std::vector<double>& v : {std::vector<double>{1.2, -0.2}, std::vector<double>{0.3, 0.9},
                                       std::vector<double>{0.1, 0.4, 0.2}, std::vector<double>{-1.0, 2.0, 0.5}}) {
    const auto u = project_row_simplex(v);
    const double d = selftest::oracle::squared_distance(v, u);
    EXPECT_LE(d, selftest::oracle::grid_min_squared_distance(v, 1e-4) + 1e-12);
    EXPECT_GE(d, selftest::oracle::grid_min_squared_distance(v, 1e-4) - 1e-6);
  }
}

TEST(ProjectRowSimplex, FeasibleIsUnchanged) {
  const std::vector<double> v{0.1, 0.7, 0.2};
  EXPECT_EQ(project_row_simplex(v), v);
  EXPECT_THROW(project_row_simplex(std::vector<double>{}), std::invalid_argument);
}

TEST(ProjectAllocation, IdentityOnFeasibleAndZeros) {
  Rng rng(1);
  const AllocationMatrix a = random_allocation(5, 4, rng);
  EXPECT_EQ(project_allocation(a.entries()), a);
  const AllocationMatrix z = project_allocation(Matrix::Zero(3, 4));
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(z(i, k), 0.25);
  }
  Matrix bad = Matrix::Zero(1, 2);
  bad(0, 0) = std::nan("");
  EXPECT_THROW(project_allocation(bad), std::invalid_argument);
}

TEST(AllocationMatrix, RejectsInvalidRows) {
  Matrix m(1, 2);
  m << 0.7, 0.2;
  EXPECT_THROW(AllocationMatrix{m}, std::invalid_argument);
  m << 1.1, -0.1;
  EXPECT_THROW(AllocationMatrix{m}, std::invalid_argument);
}

TEST(AlohaAllocation, UniformEntries) {
  const AllocationMatrix a = aloha_allocation(2, 2);
  EXPECT_EQ(a(0, 0), 0.5);
  EXPECT_EQ(a(1, 1), 0.5);
  EXPECT_EQ(aloha_allocation(1, 1)(0, 0), 1.0);
  const AllocationMatrix big = aloha_allocation(20, 5);
  EXPECT_TRUE((big.entries().array() == 0.2).all());
}

TEST(GreedyAllocation, ExampleNetwork) {
  const ActivityProbabilities p({0.3, 0.4, 0.9});
  const AllocationMatrix a = greedy_allocation(p, 2);
  Matrix expected(3, 2);
  expected << 1, 0, 1, 0, 0, 1;
  EXPECT_EQ(a.entries(), expected);
  EXPECT_NEAR(expected_throughput_enumerate(a, p), 1.36, 1e-12);
}

TEST(GreedyAllocation, SquareGivesPermutation) {
  const AllocationMatrix a = greedy_allocation(ActivityProbabilities({0.5, 0.2, 0.8}), 3);
  EXPECT_TRUE((a.entries().colwise().sum().array() == 1.0).all());
  EXPECT_TRUE((a.entries().rowwise().sum().array() == 1.0).all());
  EXPECT_EQ(a(2, 1), 1.0);
  EXPECT_EQ(a(0, 2), 1.0);
  EXPECT_EQ(a(1, 0), 1.0);
}

TEST(GreedyAllocation, TiesFollowDeviceIndex) {
  const AllocationMatrix a = greedy_allocation(ActivityProbabilities::constant(3, 0.5), 2);
  // Among equals the highest index ranks as most active and gets the own slot.
  EXPECT_EQ(a(2, 1), 1.0);
  EXPECT_EQ(a(0, 0), 1.0);
  EXPECT_EQ(a(1, 0), 1.0);
}

TEST(GreedyAllocation, RejectsDegenerateShapes) {
  EXPECT_THROW(greedy_allocation(ActivityProbabilities({0.5, 0.1}), 3), std::invalid_argument);
  EXPECT_THROW(greedy_allocation(ActivityProbabilities({0.5, 0.1}), 1), std::invalid_argument);
}

TEST(RandomAllocation, FeasibleWithFlatMeans) {
  Rng rng(2);
  EXPECT_TRUE((random_allocation(3, 1, rng).entries().array() == 1.0).all());
  Matrix sum = Matrix::Zero(2, 4);
  constexpr int kDraws = 100000;
  for (int d = 0; d < kDraws; ++d) sum += random_allocation(2, 4, rng).entries();
  sum /= kDraws;
  for (Eigen::Index i = 0; i < sum.size(); ++i) EXPECT_NEAR(sum.data()[i], 0.25, 0.01);
}
