#include <gtest/gtest.h>

#include <cmath>

#include "fsaloha/activity.hpp"
#include "fsaloha/allocation.hpp"
#include "fsaloha/metrics.hpp"

using namespace fsaloha;

namespace {

AllocationMatrix identity2() {
  Matrix m(2, 2);
  m << 1, 0, 0, 1;
  return AllocationMatrix(m);
}

}  // namespace

TEST(InstantaneousThroughput, DedicatedAndCollidingSlots) {
  const auto r = instantaneous_throughput(identity2(), ActivityVector::ones(2));
  EXPECT_EQ(r.per_device, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(r.total, 2.0);
  EXPECT_EQ(instantaneous_throughput(identity2(), ActivityVector::zeros(2)).total, 0.0);
  EXPECT_EQ(instantaneous_throughput(AllocationMatrix(Matrix::Ones(2, 1)), ActivityVector::ones(2)).total, 0.0);
}

TEST(InstantaneousThroughput, TotalIsSumOfDevices) {
  Rng rng(1);
  const AllocationMatrix a = random_allocation(6, 3, rng);
  const auto r = instantaneous_throughput(a, ActivityVector({1, 0, 1, 1, 0, 1}));
  double sum = 0.0;
  for (double v : r.per_device) sum += v;
  EXPECT_NEAR(r.total, sum, 1e-12);
  EXPECT_GE(r.total, 0.0);
  EXPECT_LE(r.total, 6.0);
}

TEST(ExpectedThroughput, ExampleNetworkUnderAloha) {
  const ActivityProbabilities p({0.3, 0.4, 0.9});
  const AllocationMatrix a = aloha_allocation(3, 2);
  EXPECT_NEAR(expected_throughput_independent(a, p), 0.931, 1e-12);
  EXPECT_NEAR(expected_throughput_enumerate(a, p), 0.931, 1e-12);
  EXPECT_NEAR(normalized_throughput(a, p), 0.931 / 1.6, 1e-12);
  EXPECT_NEAR(normalized_throughput(a, p), 0.5819, 1e-4);
}

TEST(ExpectedThroughput, HomogeneousCollapse) {
  const std::size_t n = 7, k = 3;
  const double q = 0.35;
  const double expected = n * q * std::pow(1.0 - q / k, n - 1);
  EXPECT_NEAR(expected_throughput_independent(aloha_allocation(n, k), ActivityProbabilities::constant(n, q)), expected,
              1e-12);
}

TEST(ExpectedThroughput, DegenerateLaws) {
  Rng rng(2);
  const AllocationMatrix a = random_allocation(4, 3, rng);
  EXPECT_EQ(expected_throughput_independent(a, ActivityProbabilities::constant(4, 0.0)), 0.0);
  EXPECT_NEAR(expected_throughput_enumerate(a, ActivityProbabilities::constant(4, 1.0)),
              instantaneous_throughput(a, ActivityVector::ones(4)).total, 1e-15);
  const AllocationMatrix single = random_allocation(1, 3, rng);
  EXPECT_NEAR(expected_throughput_enumerate(single, ActivityProbabilities({0.42})), 0.42, 1e-15);
}

TEST(ExpectedThroughput, EnumerationAgreesWithClosedForm) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + t % 10;
    std::vector<double> p(n);
    for (double& v : p) v = u(rng);
    const AllocationMatrix a = random_allocation(n, 1 + t % 4, rng);
    EXPECT_NEAR(expected_throughput_independent(a, ActivityProbabilities(p)),
                expected_throughput_enumerate(a, ActivityProbabilities(p)), 1e-12);
  }
}

TEST(ExpectedThroughput, EnumerationCap) {
  EXPECT_THROW(expected_throughput_enumerate(aloha_allocation(21, 2), ActivityProbabilities::constant(21, 0.1)),
               std::invalid_argument);
}

TEST(NormalizedThroughput, SingleDeviceAndDedicatedSlots) {
  Rng rng(4);
  EXPECT_NEAR(normalized_throughput(random_allocation(1, 4, rng), ActivityProbabilities({0.6})), 1.0, 1e-15);
  EXPECT_NEAR(normalized_throughput(identity2(), ActivityProbabilities({0.2, 0.9})), 1.0, 1e-15);
  EXPECT_THROW(normalized_throughput(identity2(), ActivityProbabilities::constant(2, 0.0)), std::invalid_argument);
}

TEST(MonteCarloThroughput, DeterministicSource) {
  const ActivityVector x({1, 1});
  EXPECT_EQ(monte_carlo_throughput(identity2(), [&] { return x; }, 10), 2.0);
  Rng a(5), b(5);
  const ActivityProbabilities p({0.3, 0.4, 0.9});
  const AllocationMatrix aloha = aloha_allocation(3, 2);
  EXPECT_EQ(monte_carlo_throughput(aloha, [&] { return sample_activity(p, a); }, 1),
            instantaneous_throughput(aloha, sample_activity(p, b)).total);
}

TEST(MonteCarloThroughput, ConvergesToClosedForm) {
  Rng rng(6);
  const ActivityProbabilities p({0.3, 0.4, 0.9});
  const double mc = monte_carlo_throughput(aloha_allocation(3, 2), [&] { return sample_activity(p, rng); }, 1000000);
  EXPECT_NEAR(mc, 0.931, 0.003);
}
