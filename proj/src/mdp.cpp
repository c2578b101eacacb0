#include "dqnsdde/mdp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dqnsdde {

namespace {

constexpr double kSumTolerance = 1e-12;

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::string out;
  for (const auto& f : failures) {
    if (!out.empty()) out += "; ";
    out += f;
  }
  return out;
}

ValidationReport validate_mdp(const MdpSpec& spec) {
  ValidationReport report;
  auto& fail = report.failures;
  if (spec.n_states < 1) fail.push_back("need at least one state");
  if (spec.n_actions < 1) fail.push_back("need at least one action");
  if (!fail.empty()) return report;

  const std::size_t pairs = spec.n_pairs();
  if (spec.p.size() != pairs * spec.n_states) {
    fail.push_back("p has " + std::to_string(spec.p.size()) + " entries, expected " +
                   std::to_string(pairs * spec.n_states));
  }
  if (spec.R.size() != pairs) fail.push_back("R has wrong size");
  if (spec.V.size() != pairs) fail.push_back("V has wrong size");
  if (!fail.empty()) return report;

  for (int s = 0; s < spec.n_states; ++s) {
    for (int a = 0; a < spec.n_actions; ++a) {
      const std::string where = "(" + std::to_string(s) + "," + std::to_string(a) + ")";
      double sum = 0.0;
      bool negative = false;
      for (int s2 = 0; s2 < spec.n_states; ++s2) {
        const double v = spec.prob(s, a, s2);
        if (!std::isfinite(v) || v < 0.0) negative = true;
        sum += v;
      }
      if (negative) fail.push_back("p(.|" + where.substr(1) + " has a negative or non-finite entry");
      if (!(std::abs(sum - 1.0) <= kSumTolerance)) {
        fail.push_back("p(.|" + where.substr(1) + ": row sum " + fmt_num(sum) + " ≠ 1");
      }
      const double r = spec.reward_mean(s, a);
      const double v = spec.reward_std(s, a);
      if (!std::isfinite(r)) fail.push_back("R" + where + " is not finite");
      if (!std::isfinite(v)) {
        fail.push_back("V" + where + " is not finite");
      } else if (v < 0.0) {
        fail.push_back("V" + where + " = " + fmt_num(v) + ": negative reward stddev");
      }
    }
  }
  if (!(spec.gamma > 0.0 && spec.gamma < 1.0)) {
    fail.push_back("gamma must lie in (0,1), got " + fmt_num(spec.gamma));
  }
  return report;
}

ReplayModel ReplayModel::idealized(std::vector<double> q) {
  ReplayModel r;
  r.mode = Mode::Idealized;
  r.q = std::move(q);
  return r;
}

ReplayModel ReplayModel::uniform(const MdpSpec& spec) {
  const std::size_t n = spec.n_pairs();
  return idealized(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

ReplayModel ReplayModel::online(std::size_t capacity, double epsilon) {
  ReplayModel r;
  r.mode = Mode::OnlineBuffer;
  r.capacity = capacity;
  r.epsilon = epsilon;
  return r;
}

ValidationReport validate_replay(const MdpSpec& spec, const ReplayModel& replay) {
  ValidationReport report;
  if (replay.mode == ReplayModel::Mode::Idealized) {
    if (replay.q.size() != spec.n_pairs()) {
      report.failures.push_back("q has " + std::to_string(replay.q.size()) + " entries, expected " +
                                std::to_string(spec.n_pairs()));
      return report;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < replay.q.size(); ++i) {
      if (!std::isfinite(replay.q[i]) || replay.q[i] < 0.0) {
        report.failures.push_back("q entry " + std::to_string(i) + " is negative or non-finite");
      }
      sum += replay.q[i];
    }
    if (!(std::abs(sum - 1.0) <= kSumTolerance)) {
      report.failures.push_back("q sums to " + fmt_num(sum) + " ≠ 1");
    }
  } else {
    if (replay.capacity < 1) report.failures.push_back("replay capacity must be >= 1");
    if (!(replay.epsilon > 0.0 && replay.epsilon < 1.0)) {
      // epsilon = 1 is accepted as the pure-exploration limit used in tests.
      if (replay.epsilon != 1.0) report.failures.push_back("epsilon must lie in (0,1)");
    }
  }
  return report;
}

Transition step_environment(const MdpSpec& spec, int s, int a, Rng& rng) {
  Transition t;
  t.s = s;
  t.a = a;
  const double* row = &spec.p[spec.pair_index(s, a) * spec.n_states];
  std::vector<double> weights(row, row + spec.n_states);
  t.s_next = static_cast<int>(sample_discrete(weights, rng));
  const double v = spec.reward_std(s, a);
  t.r = spec.reward_mean(s, a) + (v > 0.0 ? v * rng.normal() : 0.0);
  return t;
}

Transition sample_transition(const MdpSpec& spec, const ReplayModel& replay, Rng& rng) {
  if (replay.mode != ReplayModel::Mode::Idealized) {
    throw std::invalid_argument("sample_transition requires an idealized replay model");
  }
  const auto pair = static_cast<int>(sample_discrete(replay.q, rng));
  return step_environment(spec, pair / spec.n_actions, pair % spec.n_actions, rng);
}

std::vector<SupportPoint> enumerate_support(const MdpSpec& spec, const std::vector<double>& q) {
  std::vector<SupportPoint> out;
  for (int s = 0; s < spec.n_states; ++s) {
    for (int a = 0; a < spec.n_actions; ++a) {
      const double qa = q[spec.pair_index(s, a)];
      if (qa <= 0.0) continue;
      for (int s2 = 0; s2 < spec.n_states; ++s2) {
        const double w = qa * spec.prob(s, a, s2);
        if (w > 0.0) out.push_back({s, a, s2, w});
      }
    }
  }
  return out;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("replay capacity must be >= 1");
}

void ReplayBuffer::store(const Transition& t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(t);
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
  if (items_.empty()) throw std::logic_error("sampling from an empty replay buffer");
  return items_[rng.below(items_.size())];
}

MdpSpec mdp_from_json(const nlohmann::json& j) {
  MdpSpec spec;
  spec.n_states = j.at("states").get<int>();
  spec.n_actions = j.at("actions").get<int>();
  spec.gamma = j.at("gamma").get<double>();
  if (spec.n_states < 1 || spec.n_actions < 1) {
    throw std::invalid_argument("states and actions must be positive");
  }
  const auto& p = j.at("p");
  const auto& R = j.at("R");
  const auto& V = j.at("V");
  if (p.size() != static_cast<std::size_t>(spec.n_states) || R.size() != p.size() ||
      V.size() != p.size()) {
    throw std::invalid_argument("p, R and V must have one entry per state");
  }
  for (int s = 0; s < spec.n_states; ++s) {
    if (p[s].size() != static_cast<std::size_t>(spec.n_actions) ||
        R[s].size() != p[s].size() || V[s].size() != p[s].size()) {
      throw std::invalid_argument("p[" + std::to_string(s) + "], R and V need one entry per action");
    }
    for (int a = 0; a < spec.n_actions; ++a) {
      const auto& row = p[s][a];
      if (row.size() != static_cast<std::size_t>(spec.n_states)) {
        throw std::invalid_argument("p[" + std::to_string(s) + "][" + std::to_string(a) +
                                    "] needs one entry per state");
      }
      for (const auto& v : row) spec.p.push_back(v.get<double>());
      spec.R.push_back(R[s][a].get<double>());
      spec.V.push_back(V[s][a].get<double>());
    }
  }
  return spec;
}

nlohmann::json mdp_to_json(const MdpSpec& spec) {
  nlohmann::json p = nlohmann::json::array(), R = nlohmann::json::array(),
                 V = nlohmann::json::array();
  for (int s = 0; s < spec.n_states; ++s) {
    nlohmann::json ps = nlohmann::json::array(), rs = nlohmann::json::array(),
                   vs = nlohmann::json::array();
    for (int a = 0; a < spec.n_actions; ++a) {
      nlohmann::json row = nlohmann::json::array();
      for (int s2 = 0; s2 < spec.n_states; ++s2) row.push_back(spec.prob(s, a, s2));
      ps.push_back(row);
      rs.push_back(spec.reward_mean(s, a));
      vs.push_back(spec.reward_std(s, a));
    }
    p.push_back(ps);
    R.push_back(rs);
    V.push_back(vs);
  }
  return {{"states", spec.n_states}, {"actions", spec.n_actions}, {"p", p},
          {"R", R},                  {"V", V},                    {"gamma", spec.gamma}};
}

ReplayModel replay_from_json(const nlohmann::json& j, const MdpSpec& spec) {
  const std::string mode = j.value("mode", "idealized");
  if (mode == "idealized") {
    if (!j.contains("q")) return ReplayModel::uniform(spec);
    std::vector<double> q;
    for (const auto& row : j.at("q")) {
      if (row.is_array()) {
        for (const auto& v : row) q.push_back(v.get<double>());
      } else {
        q.push_back(row.get<double>());
      }
    }
    return ReplayModel::idealized(std::move(q));
  }
  if (mode == "online") {
    return ReplayModel::online(j.value("capacity", std::size_t{10000}), j.value("epsilon", 0.1));
  }
  throw std::invalid_argument("replay mode must be \"idealized\" or \"online\", got \"" + mode + "\"");
}

nlohmann::json replay_to_json(const ReplayModel& replay, const MdpSpec& spec) {
  if (replay.mode == ReplayModel::Mode::OnlineBuffer) {
    return {{"mode", "online"}, {"capacity", replay.capacity}, {"epsilon", replay.epsilon}};
  }
  nlohmann::json q = nlohmann::json::array();
  for (int s = 0; s < spec.n_states; ++s) {
    nlohmann::json row = nlohmann::json::array();
    for (int a = 0; a < spec.n_actions; ++a) row.push_back(replay.q[spec.pair_index(s, a)]);
    q.push_back(row);
  }
  return {{"mode", "idealized"}, {"q", q}};
}

}  // namespace dqnsdde
