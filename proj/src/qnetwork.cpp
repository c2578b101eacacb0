#include "dqnsdde/qnetwork.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dqnsdde/random.hpp"

namespace dqnsdde {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

QNetwork::QNetwork(int n_states, int n_actions, std::vector<int> hidden, double bound_C)
    : n_states_(n_states), n_actions_(n_actions), hidden_(std::move(hidden)),
      bound_(bound_C), scale_(bound_C) {
  if (n_states_ < 1 || n_actions_ < 1) {
    throw std::invalid_argument("network needs at least one state and one action");
  }
  if (!(bound_C > 0.0) || !std::isfinite(bound_C)) {
    throw std::invalid_argument("bound_C must be a positive finite number");
  }
  int in = input_dim();
  int offset = 0;
  std::vector<int> sizes = hidden_;
  sizes.push_back(1);
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    const int out = sizes[l];
    if (out < 1) {
      throw std::invalid_argument("hidden layer " + std::to_string(l) + " has no units");
    }
    Layer layer{in, out, offset, offset + in * out};
    offset = layer.bias_offset + out;
    layers_.push_back(layer);
    if (l + 1 < sizes.size()) activation_count_ += out;
    in = out;
  }
  param_count_ = offset;
  if (param_count_ == 0) throw std::invalid_argument("network has no parameters");
}

QNetwork QNetwork::degenerate(int n_states, int n_actions, std::vector<int> hidden) {
  QNetwork net(n_states, n_actions, std::move(hidden), 1.0);
  net.scale_ = 0.0;
  return net;
}

void QNetwork::check(const ParamVector& theta, int s, int a) const {
  if (theta.size() != param_count_) {
    throw std::invalid_argument("theta has dimension " + std::to_string(theta.size()) +
                                ", network expects " + std::to_string(param_count_));
  }
  if (s < 0 || s >= n_states_ || a < 0 || a >= n_actions_) {
    throw std::out_of_range("state/action index out of range");
  }
}

// Fills hidden activations into `act` (concatenated by layer) and returns the
// output logit.
double QNetwork::forward(const ParamVector& theta, int s, int a, std::vector<double>& act) const {
  act.resize(activation_count_);
  const double* th = theta.data();
  const int a_col = n_states_ + a;

  // First layer reads two columns of the one-hot input.
  const Layer& first = layers_.front();
  double* cur = act.data();
  if (layers_.size() == 1) {
    return th[first.weight_offset + s] + th[first.weight_offset + a_col] + th[first.bias_offset];
  }
  for (int i = 0; i < first.out; ++i) {
    const double* row = th + first.weight_offset + i * first.in;
    cur[i] = sigmoid(row[s] + row[a_col] + th[first.bias_offset + i]);
  }
  const double* prev = cur;
  cur += first.out;
  for (std::size_t l = 1; l + 1 < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    for (int i = 0; i < layer.out; ++i) {
      const double* row = th + layer.weight_offset + i * layer.in;
      double z = th[layer.bias_offset + i];
      for (int j = 0; j < layer.in; ++j) z += row[j] * prev[j];
      cur[i] = sigmoid(z);
    }
    prev = cur;
    cur += layer.out;
  }
  const Layer& last = layers_.back();
  double z = th[last.bias_offset];
  for (int j = 0; j < last.in; ++j) z += th[last.weight_offset + j] * prev[j];
  return z;
}

double QNetwork::pre_squash(const ParamVector& theta, int s, int a) const {
  check(theta, s, a);
  thread_local std::vector<double> act;
  return forward(theta, s, a, act);
}

double QNetwork::value(const ParamVector& theta, int s, int a) const {
  if (scale_ == 0.0) {
    check(theta, s, a);
    return 0.0;
  }
  return scale_ * (2.0 * sigmoid(pre_squash(theta, s, a)) - 1.0);
}

ParamVector QNetwork::grad(const ParamVector& theta, int s, int a) const {
  ParamVector g(param_count_);
  value_and_grad(theta, s, a, g);
  return g;
}

double QNetwork::value_and_grad(const ParamVector& theta, int s, int a,
                                Eigen::Ref<Eigen::VectorXd> grad) const {
  check(theta, s, a);
  if (grad.size() != param_count_) throw std::invalid_argument("gradient buffer has wrong size");
  grad.setZero();
  if (scale_ == 0.0) return 0.0;

  thread_local std::vector<double> act;
  thread_local std::vector<double> delta;
  thread_local std::vector<double> next_delta;
  const double z = forward(theta, s, a, act);
  const double sig = sigmoid(z);
  const double q = scale_ * (2.0 * sig - 1.0);
  const double dz = 2.0 * scale_ * sig * (1.0 - sig);
  const double* th = theta.data();
  double* g = grad.data();
  const int a_col = n_states_ + a;

  // Output layer.
  const Layer& last = layers_.back();
  g[last.bias_offset] = dz;
  if (layers_.size() == 1) {
    g[last.weight_offset + s] = dz;
    g[last.weight_offset + a_col] = dz;
    return q;
  }
  int act_end = activation_count_;
  int act_begin = act_end - last.in;
  for (int j = 0; j < last.in; ++j) g[last.weight_offset + j] = dz * act[act_begin + j];
  // dL/d(hidden activation) of the layer feeding the output.
  delta.assign(last.in, 0.0);
  for (int j = 0; j < last.in; ++j) delta[j] = dz * th[last.weight_offset + j];

  for (std::size_t l = layers_.size() - 1; l-- > 0;) {
    const Layer& layer = layers_[l];
    // delta currently holds dQ/dh for this layer's outputs; move to dQ/dz.
    for (int i = 0; i < layer.out; ++i) {
      const double h = act[act_begin + i];
      delta[i] *= h * (1.0 - h);
    }
    if (l == 0) {
      for (int i = 0; i < layer.out; ++i) {
        g[layer.bias_offset + i] = delta[i];
        g[layer.weight_offset + i * layer.in + s] = delta[i];
        g[layer.weight_offset + i * layer.in + a_col] = delta[i];
      }
      break;
    }
    const int prev_begin = act_begin - layer.in;
    next_delta.assign(layer.in, 0.0);
    for (int i = 0; i < layer.out; ++i) {
      g[layer.bias_offset + i] = delta[i];
      const double* row = th + layer.weight_offset + i * layer.in;
      double* grow = g + layer.weight_offset + i * layer.in;
      for (int j = 0; j < layer.in; ++j) {
        grow[j] = delta[i] * act[prev_begin + j];
        next_delta[j] += delta[i] * row[j];
      }
    }
    delta.swap(next_delta);
    act_begin = prev_begin;
  }
  return q;
}

MaxQ QNetwork::max_q(const ParamVector& theta, int s) const {
  MaxQ best{value(theta, s, 0), 0};
  for (int a = 1; a < n_actions_; ++a) {
    const double v = value(theta, s, a);
    if (v > best.value) best = {v, a};
  }
  return best;
}

ParamVector QNetwork::init_params(double stddev, std::uint64_t seed) const {
  Rng rng(seed);
  ParamVector theta(param_count_);
  for (int i = 0; i < param_count_; ++i) theta[i] = stddev * rng.normal();
  return theta;
}

GradCheckReport grad_check(const QNetwork& net, int n_points, std::uint64_t seed,
                           double theta_stddev, double fd_step) {
  if (n_points < 1) throw std::invalid_argument("grad_check needs n_points >= 1");
  GradCheckReport report;
  report.n_points = n_points;
  const int d = net.param_count();
  ParamVector analytic(d), numeric(d);
  for (int k = 0; k < n_points; ++k) {
    const std::uint64_t point_seed = derive_seed(seed, static_cast<std::uint64_t>(k));
    Rng rng(point_seed);
    const int s = static_cast<int>(rng.below(net.n_states()));
    const int a = static_cast<int>(rng.below(net.n_actions()));
    ParamVector theta(d);
    for (int i = 0; i < d; ++i) theta[i] = theta_stddev * rng.normal();

    net.value_and_grad(theta, s, a, analytic);
    ParamVector probe = theta;
    for (int i = 0; i < d; ++i) {
      probe[i] = theta[i] + fd_step;
      const double up = net.value(probe, s, a);
      probe[i] = theta[i] - fd_step;
      const double down = net.value(probe, s, a);
      probe[i] = theta[i];
      numeric[i] = (up - down) / (2.0 * fd_step);
    }
    const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
    const double err = (analytic - numeric).norm() / scale;
    if (err > report.max_rel_error || k == 0) {
      report.max_rel_error = err;
      report.worst_s = s;
      report.worst_a = a;
      report.worst_seed = point_seed;
    }
  }
  return report;
}

}  // namespace dqnsdde
