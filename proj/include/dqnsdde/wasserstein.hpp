#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dqnsdde/ensemble.hpp"
#include "dqnsdde/random.hpp"

namespace dqnsdde {

enum class W1Method { Exact1D, Assignment, Sliced };

std::string method_name(W1Method m);

struct W1Estimate {
  double value = 0.0;
  W1Method method = W1Method::Exact1D;
  double std_error = 0.0;  // 0 for exact methods on equal-size samples
  int n_a = 0;
  int n_b = 0;
  double baseline = 0.0;   // same estimator between the two halves of A
  bool resampled = false;  // unequal counts were bootstrapped to the smaller one

  nlohmann::json to_json() const;
};

/// Exact empirical W1 on the line. Equal counts use the sorted coupling;
/// unequal counts integrate |F_a^{-1} - F_b^{-1}| over the merged quantile
/// grid, which is the exact W1 between the two empirical measures.
W1Estimate w1_exact_1d(std::vector<double> a, std::vector<double> b);

/// Minimum-cost perfect matching under Euclidean cost. Throws
/// std::invalid_argument when either sample exceeds `cap` rows. Unequal
/// counts are bootstrapped to the smaller count (16 repeats, seeded by
/// `seed`), and std_error is the spread of the repeats.
W1Estimate w1_assignment(const SampleMatrix& A, const SampleMatrix& B, int cap = 512,
                         std::uint64_t seed = 0);

/// Average of w1_exact_1d over n_proj uniform random unit directions.
/// Direction k uses a stream derived from one draw of `rng` and k.
W1Estimate w1_sliced(const SampleMatrix& A, const SampleMatrix& B, int n_proj, Rng& rng);

/// w1_assignment on `cap` rows drawn without replacement from each sample
/// when it is larger than cap.
W1Estimate w1_assignment_subsampled(const SampleMatrix& A, const SampleMatrix& B, int cap,
                                    std::uint64_t seed);

/// Solves min_perm sum_i cost(i, perm[i]) for a square cost matrix by
/// shortest augmenting paths with potentials. Returns the column assigned
/// to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost, double* total = nullptr);

/// Keeps the given columns of every row.
SampleMatrix project_coordinates(const SampleMatrix& samples, const std::vector<int>& coords);

}  // namespace dqnsdde
