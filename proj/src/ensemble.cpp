#include "dqnsdde/ensemble.hpp"

#include <charconv>
#include <exception>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dqnsdde {

TrajectoryEnsemble::TrajectoryEnsemble(std::vector<long> checkpoints, int n_traj, int dim)
    : checkpoints_(std::move(checkpoints)), n_traj_(n_traj), dim_(dim),
      data_(static_cast<std::size_t>(n_traj) * checkpoints_.size() * dim, 0.0) {}

Eigen::Map<Eigen::VectorXd> TrajectoryEnsemble::at(int traj, std::size_t checkpoint) {
  return {data_.data() + (static_cast<std::size_t>(traj) * checkpoints_.size() + checkpoint) * dim_,
          dim_};
}

Eigen::Map<const Eigen::VectorXd> TrajectoryEnsemble::at(int traj, std::size_t checkpoint) const {
  return {data_.data() + (static_cast<std::size_t>(traj) * checkpoints_.size() + checkpoint) * dim_,
          dim_};
}

std::size_t TrajectoryEnsemble::checkpoint_index(long step) const {
  for (std::size_t i = 0; i < checkpoints_.size(); ++i) {
    if (checkpoints_[i] == step) return i;
  }
  throw std::out_of_range("step " + std::to_string(step) + " is not a recorded checkpoint");
}

SampleMatrix TrajectoryEnsemble::slice(std::size_t checkpoint) const {
  SampleMatrix out(n_traj_, dim_);
  for (int i = 0; i < n_traj_; ++i) out.row(i) = at(i, checkpoint).transpose();
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void TrajectoryEnsemble::write_csv(std::ostream& os) const {
  os << "traj_id,step";
  for (int k = 0; k < dim_; ++k) os << ",theta_" << k;
  os << '\n';
  for (int i = 0; i < n_traj_; ++i) {
    for (std::size_t c = 0; c < checkpoints_.size(); ++c) {
      os << i << ',' << checkpoints_[c];
      const auto row = at(i, c);
      for (int k = 0; k < dim_; ++k) os << ',' << format_double(row[k]);
      os << '\n';
    }
  }
}

namespace {

struct CsvRow {
  long traj = 0;
  long step = 0;
  std::vector<double> values;
};

std::vector<CsvRow> parse_rows(std::istream& is, int& dim) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty ensemble CSV");
  dim = 0;
  for (char c : line) dim += (c == ',');
  dim -= 1;
  if (dim < 1 || line.rfind("traj_id,step", 0) != 0) {
    throw std::runtime_error("ensemble CSV header must start with traj_id,step");
  }
  std::vector<CsvRow> rows;
  long lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    CsvRow row;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != dim + 2) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": expected " +
                               std::to_string(dim + 2) + " columns");
    }
    try {
      row.traj = std::stol(cells[0]);
      row.step = std::stol(cells[1]);
      for (int k = 0; k < dim; ++k) row.values.push_back(std::stod(cells[2 + k]));
    } catch (const std::exception&) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": malformed number");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TrajectoryEnsemble TrajectoryEnsemble::read_csv(std::istream& is) {
  int dim = 0;
  const auto rows = parse_rows(is, dim);
  std::map<long, std::size_t> step_index;
  long max_traj = -1;
  for (const auto& r : rows) {
    step_index.emplace(r.step, 0);
    max_traj = std::max(max_traj, r.traj);
  }
  std::vector<long> steps;
  for (auto& [step, idx] : step_index) {
    idx = steps.size();
    steps.push_back(step);
  }
  TrajectoryEnsemble ens(steps, static_cast<int>(max_traj + 1), dim);
  for (const auto& r : rows) {
    auto slot = ens.at(static_cast<int>(r.traj), step_index.at(r.step));
    for (int k = 0; k < dim; ++k) slot[k] = r.values[k];
  }
  return ens;
}

SampleMatrix read_checkpoint_csv(std::istream& is, long step) {
  int dim = 0;
  auto rows = parse_rows(is, dim);
  std::map<long, const CsvRow*> by_traj;
  for (const auto& r : rows) {
    if (r.step == step) by_traj[r.traj] = &r;
  }
  if (by_traj.empty()) {
    throw std::runtime_error("no rows with step " + std::to_string(step));
  }
  SampleMatrix out(static_cast<Eigen::Index>(by_traj.size()), dim);
  Eigen::Index i = 0;
  for (const auto& [traj, row] : by_traj) {
    for (int k = 0; k < dim; ++k) out(i, k) = row->values[k];
    ++i;
  }
  return out;
}

void validate_checkpoints(const std::vector<long>& checkpoints, long last) {
  if (checkpoints.empty()) throw std::invalid_argument("at least one checkpoint is required");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 0 || checkpoints[i] > last) {
      throw std::invalid_argument("checkpoint " + std::to_string(checkpoints[i]) +
                                  " outside [0, " + std::to_string(last) + "]");
    }
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) {
      throw std::invalid_argument("checkpoints must be strictly increasing");
    }
  }
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  const int workers = std::min(threads, n);
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace dqnsdde
