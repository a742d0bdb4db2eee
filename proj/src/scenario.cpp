#include "gridse/scenario.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

namespace gridse {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : state_(mix64(seed ^ mix64(stream + 0x9E3779B97F4A7C15ULL))) {}

std::uint64_t Rng::next_u64() {
  state_ += 0x9E3779B97F4A7C15ULL;
  return mix64(state_);
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform01();
  if (u1 < 1e-300) u1 = 1e-300;
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  cached_normal_ = radius * std::sin(2.0 * kPi * u2);
  has_cached_normal_ = true;
  return radius * std::cos(2.0 * kPi * u2);
}

bool Rng::coin() { return (next_u64() & 1ULL) != 0; }

void validate(const ScenarioConfig& cfg) {
  if (!(cfg.bad_rate >= 0.0 && cfg.bad_rate < 0.5)) {
    throw ValidationError("bad_rate must lie in [0, 0.5)");
  }
  if (!(cfg.gross_lo >= 0.0 && cfg.gross_hi >= cfg.gross_lo)) {
    throw ValidationError("gross magnitude interval must satisfy 0 <= lo <= hi");
  }
  if (cfg.trials < 1) throw ValidationError("trials must be >= 1");
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  return mix64(seed ^ mix64(static_cast<std::uint64_t>(trial) + 0x9E3779B97F4A7C15ULL));
}

int MeasurementSet::bad_count() const {
  int count = 0;
  for (bool flag : bad_mask) count += flag ? 1 : 0;
  return count;
}

StateVector true_state(const NetworkModel& net, Family family) {
  const int n = net.size();
  StateVector state;
  state.slack_index = net.slack_index();
  state.a.resize(n);
  state.b.resize(n);
  if (family == Family::Pmu) {
    state.kind = StateVector::Kind::Rectangular;
    for (int i = 0; i < n; ++i) {
      state.a[i] = net.buses()[i].v_true * std::cos(net.buses()[i].theta_true);
      state.b[i] = net.buses()[i].v_true * std::sin(net.buses()[i].theta_true);
    }
  } else {
    state.kind = StateVector::Kind::Polar;
    for (int i = 0; i < n; ++i) {
      state.a[i] = net.buses()[i].v_true;
      state.b[i] = net.buses()[i].theta_true;
    }
  }
  return state;
}

MeasurementSet generate(const NetworkModel& net, const MeasurementPlan& plan,
                        const StateVector& x_true, const ScenarioConfig& cfg, int trial) {
  validate(cfg);
  const int m = plan.size();

  MeasurementSet set;
  set.plan = plan;
  set.y_clean = (plan.family == Family::Pmu) ? eval_pmu(x_true, net, plan)
                                             : eval_scada(x_true, net, plan);

  // Draw order is fixed: per-channel noise, then bad locations, then gross
  // values. Changing it would silently change every seeded scenario.
  Rng rng(cfg.seed, static_cast<std::uint64_t>(trial));
  set.noise.resize(m);
  for (int i = 0; i < m; ++i) set.noise[i] = rng.normal() * plan.channels[i].sigma;

  const int bad = static_cast<int>(std::lround(cfg.bad_rate * m));
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < bad; ++i) {
    const int j = i + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(m - i));
    std::swap(order[i], order[j]);
  }

  set.gross = Vec::Zero(m);
  set.bad_mask.assign(m, false);
  for (int i = 0; i < bad; ++i) {
    const int channel = order[i];
    const double sign = rng.coin() ? 1.0 : -1.0;
    const double magnitude = rng.uniform(cfg.gross_lo, cfg.gross_hi);
    set.gross[channel] = sign * magnitude * plan.channels[channel].sigma;
    set.bad_mask[channel] = true;
  }

  set.y = set.y_clean + set.noise + set.gross;
  return set;
}

std::string set_to_json(const MeasurementSet& set) {
  json doc;
  doc["plan"] = json::parse(plan_to_json(set.plan));
  const auto to_array = [](const Vec& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
  };
  doc["y"] = to_array(set.y);
  doc["y_clean"] = to_array(set.y_clean);
  doc["noise"] = to_array(set.noise);
  doc["gross"] = to_array(set.gross);
  json mask = json::array();
  for (bool flag : set.bad_mask) mask.push_back(flag);
  doc["bad_mask"] = std::move(mask);
  return doc.dump(1);
}

MeasurementSet set_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ParseError(std::string("measurement set: ") + err.what());
  }
  MeasurementSet set;
  set.plan = plan_from_json(doc.at("plan").dump());
  const auto to_vec = [&](const char* key) {
    const json& arr = doc.at(key);
    Vec v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i];
    return v;
  };
  set.y = to_vec("y");
  set.y_clean = to_vec("y_clean");
  set.noise = to_vec("noise");
  set.gross = to_vec("gross");
  for (const json& flag : doc.at("bad_mask")) set.bad_mask.push_back(flag.get<bool>());
  return set;
}

}  // namespace gridse
