#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dqnsdde/wasserstein.hpp"

using namespace dqnsdde;

namespace {

SampleMatrix gaussian(int n, int d, double shift, Rng& rng) {
  SampleMatrix s(n, d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) s(i, k) = rng.normal() + (k == 0 ? shift : 0.0);
  }
  return s;
}

double brute_force(const SampleMatrix& A, const SampleMatrix& B) {
  std::vector<int> perm(A.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (int i = 0; i < A.rows(); ++i) c += (A.row(i) - B.row(perm[i])).norm();
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(A.rows());
}

}  // namespace

TEST(W1Exact1D, Identical) { EXPECT_EQ(w1_exact_1d({3, 1, 2}, {2, 3, 1}).value, 0.0); }

TEST(W1Exact1D, Shifted) { EXPECT_NEAR(w1_exact_1d({0, 1, 2}, {0.5, 1.5, 2.5}).value, 0.5, 1e-15); }

// {0, 1} against {0, 0.5, 1}: quantile functions differ by 0.5 on [1/3, 1/2)
// and on [1/2, 2/3).
TEST(W1Exact1D, UnequalCountsExact) {
  const auto e = w1_exact_1d({0, 1}, {0, 0.5, 1});
  EXPECT_NEAR(e.value, 0.5 / 3.0, 1e-15);
  EXPECT_FALSE(e.resampled);
  // Duplicated sample is the same measure.
  EXPECT_NEAR(w1_exact_1d({0, 1}, {0, 0, 1, 1}).value, 0.0, 1e-15);
}

TEST(W1Assignment, Permutation) {
  Rng rng(1);
  SampleMatrix A = gaussian(20, 3, 0.0, rng);
  SampleMatrix B = A.colwise().reverse();
  EXPECT_NEAR(w1_assignment(A, B).value, 0.0, 1e-14);
}

TEST(W1Assignment, TwoPointsVertical) {
  SampleMatrix A(2, 2), B(2, 2);
  A << 0, 0, 1, 0;
  B << 0, 1, 1, 1;
  EXPECT_NEAR(w1_assignment(A, B).value, 1.0, 1e-15);
  EXPECT_NEAR(brute_force(A, B), 1.0, 1e-15);
}

TEST(W1Assignment, MatchesFactorialBruteForce) {
  Rng rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const SampleMatrix A = gaussian(8, 2, 0.0, rng);
    const SampleMatrix B = gaussian(8, 2, 0.7, rng);
    EXPECT_NEAR(w1_assignment(A, B).value, brute_force(A, B), 1e-12);
  }
}

TEST(W1Assignment, SolverOnCostMatrix) {
  Eigen::MatrixXd cost(3, 3);
  cost << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  double total = 0.0;
  const auto perm = solve_assignment(cost, &total);
  EXPECT_DOUBLE_EQ(total, 5.0);  // 1 + 2 + 2
  EXPECT_EQ(perm, (std::vector<int>{1, 0, 2}));
}

TEST(W1Assignment, CapAndSubsampling) {
  Rng rng(3);
  const SampleMatrix A = gaussian(40, 2, 0.0, rng);
  const SampleMatrix B = gaussian(40, 2, 0.0, rng);
  EXPECT_THROW(w1_assignment(A, B, 32), std::invalid_argument);
  const auto e = w1_assignment_subsampled(A, B, 32, 4);
  EXPECT_EQ(e.n_a, 32);
  EXPECT_EQ(w1_assignment_subsampled(A, B, 32, 4).value, e.value);
}

TEST(W1Assignment, UnequalCountsBootstrap) {
  Rng rng(4);
  const SampleMatrix A = gaussian(30, 2, 0.0, rng);
  const SampleMatrix B = gaussian(20, 2, 1.0, rng);
  const auto e = w1_assignment(A, B, 512, 9);
  EXPECT_TRUE(e.resampled);
  EXPECT_GT(e.std_error, 0.0);
  EXPECT_GT(e.value, 0.5);
}

TEST(W1Sliced, IdenticalIsZero) {
  Rng rng(5);
  const SampleMatrix A = gaussian(50, 4, 0.0, rng);
  Rng r(6);
  const auto e = w1_sliced(A, A, 16, r);
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(W1Sliced, LowerBoundsAssignment) {
  Rng rng(7);
  for (int rep = 0; rep < 3; ++rep) {
    const SampleMatrix A = gaussian(256, 2, 0.0, rng);
    const SampleMatrix B = gaussian(256, 2, 0.5, rng);
    Rng r(8 + rep);
    const auto s = w1_sliced(A, B, 128, r);
    const auto a = w1_assignment(A, B);
    EXPECT_LE(s.value, a.value + 3.0 * s.std_error);
  }
}

// Shift mu along e_1 in d = 2: sliced W1 tends to mu E|cos U| = 2 mu / pi.
TEST(W1Sliced, ShiftLimit) {
  Rng rng(9);
  const double mu = 3.0;
  const SampleMatrix A = gaussian(4000, 2, 0.0, rng);
  const SampleMatrix B = gaussian(4000, 2, mu, rng);
  Rng r(10);
  const auto s = w1_sliced(A, B, 256, r);
  // Direction sampling dominates the error here.
  EXPECT_NEAR(s.value, 2.0 * mu / M_PI, 3.0 * s.std_error + 2.0 * s.baseline);
  EXPECT_LT(s.std_error, 0.1);
  EXPECT_LT(s.baseline, 0.2);
}

TEST(W1, ProjectCoordinates) {
  SampleMatrix A(2, 3);
  A << 1, 2, 3, 4, 5, 6;
  const SampleMatrix p = project_coordinates(A, {2, 0});
  EXPECT_EQ(p(1, 0), 6.0);
  EXPECT_EQ(p(0, 1), 1.0);
  EXPECT_THROW(project_coordinates(A, {3}), std::out_of_range);
}

TEST(W1, JsonFields) {
  const auto j = w1_exact_1d({0, 1}, {1, 2}).to_json();
  for (const char* key : {"value", "method", "stderr", "n_a", "n_b", "baseline", "resampled"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}
