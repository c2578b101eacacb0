#include "dqnsdde/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dqnsdde {

std::string method_name(W1Method m) {
  switch (m) {
    case W1Method::Exact1D: return "exact_1d";
    case W1Method::Assignment: return "assignment";
    case W1Method::Sliced: return "sliced";
  }
  return "unknown";
}

nlohmann::json W1Estimate::to_json() const {
  return {{"value", value},   {"method", method_name(method)}, {"stderr", std_error},
          {"n_a", n_a},       {"n_b", n_b},                    {"baseline", baseline},
          {"resampled", resampled}};
}

namespace {

// Exact W1 between two empirical measures on the line, inputs sorted.
double sorted_w1(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t na = a.size(), nb = b.size();
  if (na == nb) {
    double acc = 0.0;
    for (std::size_t i = 0; i < na; ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(na);
  }
  // Walk the merged quantile breakpoints i/na and j/nb with integer
  // arithmetic on the common denominator na * nb.
  std::size_t i = 0, j = 0;
  long double acc = 0.0;
  std::uint64_t pos = 0;
  const std::uint64_t total = static_cast<std::uint64_t>(na) * nb;
  while (pos < total) {
    const std::uint64_t next_a = static_cast<std::uint64_t>(i + 1) * nb;
    const std::uint64_t next_b = static_cast<std::uint64_t>(j + 1) * na;
    const std::uint64_t next = std::min(next_a, next_b);
    acc += static_cast<long double>(next - pos) * std::abs(a[i] - b[j]);
    pos = next;
    if (next == next_a) ++i;
    if (next == next_b) ++j;
  }
  return static_cast<double>(acc / static_cast<long double>(total));
}

double half_split_1d(const std::vector<double>& a) {
  if (a.size() < 2) return 0.0;
  const std::size_t h = a.size() / 2;
  std::vector<double> first(a.begin(), a.begin() + h);
  std::vector<double> second(a.begin() + h, a.begin() + 2 * h);
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return sorted_w1(first, second);
}

void require_nonempty(std::size_t na, std::size_t nb) {
  if (na == 0 || nb == 0) throw std::invalid_argument("W1 needs non-empty samples");
}

double matching_cost(const SampleMatrix& A, const SampleMatrix& B) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = (A.row(i) - B.row(j)).norm();
  }
  double total = 0.0;
  solve_assignment(cost, &total);
  return total / static_cast<double>(n);
}

SampleMatrix take_rows(const SampleMatrix& X, const std::vector<int>& rows) {
  SampleMatrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = X.row(rows[k]);
  return out;
}

// First k entries of a uniformly random permutation of 0..n-1.
std::vector<int> random_subset(int n, int k, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

// Split-half self-distance of A for the assignment estimator.
double assignment_baseline(const SampleMatrix& A) {
  const Eigen::Index h = A.rows() / 2;
  if (h < 1) return 0.0;
  return matching_cost(A.topRows(h), A.middleRows(h, h));
}

}  // namespace

W1Estimate w1_exact_1d(std::vector<double> a, std::vector<double> b) {
  require_nonempty(a.size(), b.size());
  W1Estimate est;
  est.method = W1Method::Exact1D;
  est.n_a = static_cast<int>(a.size());
  est.n_b = static_cast<int>(b.size());
  est.baseline = half_split_1d(a);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  est.value = sorted_w1(a, b);
  return est;
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost, double* total) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("assignment needs a square cost matrix");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials u (rows), v (columns); p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n);
  for (int j = 1; j <= n; ++j) col_of_row[p[j] - 1] = j - 1;
  if (total) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += cost(i, col_of_row[i]);
    *total = acc;
  }
  return col_of_row;
}

W1Estimate w1_assignment(const SampleMatrix& A, const SampleMatrix& B, int cap,
                         std::uint64_t seed) {
  require_nonempty(A.rows(), B.rows());
  if (A.cols() != B.cols()) throw std::invalid_argument("samples have different dimensions");
  if (A.rows() > cap || B.rows() > cap) {
    throw std::invalid_argument("assignment W1 is capped at " + std::to_string(cap) +
                                " samples per side, got " + std::to_string(A.rows()) + " and " +
                                std::to_string(B.rows()));
  }
  W1Estimate est;
  est.method = W1Method::Assignment;
  est.n_a = static_cast<int>(A.rows());
  est.n_b = static_cast<int>(B.rows());
  est.baseline = assignment_baseline(A);
  if (A.rows() == B.rows()) {
    est.value = matching_cost(A, B);
    return est;
  }
  // Bootstrap both sides to the smaller count.
  constexpr int kRepeats = 16;
  const int n = static_cast<int>(std::min(A.rows(), B.rows()));
  std::vector<double> values;
  for (int r = 0; r < kRepeats; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<int> ia(n), ib(n);
    for (int k = 0; k < n; ++k) ia[k] = static_cast<int>(rng.below(A.rows()));
    for (int k = 0; k < n; ++k) ib[k] = static_cast<int>(rng.below(B.rows()));
    values.push_back(matching_cost(take_rows(A, ia), take_rows(B, ib)));
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / kRepeats;
  double var = 0.0;
  for (double x : values) var += (x - mean) * (x - mean);
  est.value = mean;
  est.std_error = std::sqrt(var / (kRepeats - 1) / kRepeats);
  est.resampled = true;
  return est;
}

W1Estimate w1_assignment_subsampled(const SampleMatrix& A, const SampleMatrix& B, int cap,
                                    std::uint64_t seed) {
  Rng rng(seed);
  const SampleMatrix a = A.rows() > cap ? take_rows(A, random_subset(static_cast<int>(A.rows()), cap, rng)) : A;
  const SampleMatrix b = B.rows() > cap ? take_rows(B, random_subset(static_cast<int>(B.rows()), cap, rng)) : B;
  return w1_assignment(a, b, cap, derive_seed(seed, "bootstrap"));
}

W1Estimate w1_sliced(const SampleMatrix& A, const SampleMatrix& B, int n_proj, Rng& rng) {
  require_nonempty(A.rows(), B.rows());
  if (n_proj < 1) throw std::invalid_argument("sliced W1 needs n_proj >= 1");
  if (A.cols() != B.cols()) throw std::invalid_argument("samples have different dimensions");
  const int d = static_cast<int>(A.cols());
  const std::uint64_t base = rng.next_u64();
  const Eigen::Index h = A.rows() / 2;

  std::vector<double> values(n_proj), baselines(n_proj);
  std::vector<double> pa(A.rows()), pb(B.rows()), h1(h), h2(h);
  for (int k = 0; k < n_proj; ++k) {
    Rng dir_rng(derive_seed(base, static_cast<std::uint64_t>(k)));
    Eigen::VectorXd u(d);
    for (int i = 0; i < d; ++i) u[i] = dir_rng.normal();
    u /= u.norm();
    for (Eigen::Index i = 0; i < A.rows(); ++i) pa[i] = A.row(i).dot(u);
    for (Eigen::Index i = 0; i < B.rows(); ++i) pb[i] = B.row(i).dot(u);
    for (Eigen::Index i = 0; i < h; ++i) {
      h1[i] = pa[i];
      h2[i] = pa[h + i];
    }
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    values[k] = sorted_w1(pa, pb);
    if (h > 0) {
      std::sort(h1.begin(), h1.end());
      std::sort(h2.begin(), h2.end());
      baselines[k] = sorted_w1(h1, h2);
    }
  }
  W1Estimate est;
  est.method = W1Method::Sliced;
  est.n_a = static_cast<int>(A.rows());
  est.n_b = static_cast<int>(B.rows());
  est.value = std::accumulate(values.begin(), values.end(), 0.0) / n_proj;
  est.baseline = std::accumulate(baselines.begin(), baselines.end(), 0.0) / n_proj;
  if (n_proj > 1) {
    double var = 0.0;
    for (double x : values) var += (x - est.value) * (x - est.value);
    est.std_error = std::sqrt(var / (n_proj - 1) / n_proj);
  }
  return est;
}

SampleMatrix project_coordinates(const SampleMatrix& samples, const std::vector<int>& coords) {
  SampleMatrix out(samples.rows(), static_cast<Eigen::Index>(coords.size()));
  for (std::size_t c = 0; c < coords.size(); ++c) {
    if (coords[c] < 0 || coords[c] >= samples.cols()) {
      throw std::out_of_range("projection coordinate " + std::to_string(coords[c]) + " out of range");
    }
    out.col(static_cast<Eigen::Index>(c)) = samples.col(coords[c]);
  }
  return out;
}

}  // namespace dqnsdde
