#pragma once

#include <cstdint>
#include <string>

#include "gridse/measurement.hpp"
#include "gridse/network.hpp"

namespace gridse {

/// Deterministic stream generator (splitmix64 core, Box-Muller normals).
/// Hand-rolled so that seeded runs reproduce bit-for-bit on any platform.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  double uniform01();                      // [0, 1)
  double uniform(double lo, double hi);
  double normal();                         // standard normal
  bool coin();                             // fair bit

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

struct ScenarioConfig {
  double bad_rate = 0.06;   // fraction of scalar channels corrupted
  double gross_lo = 25.0;   // gross error magnitude, multiples of channel sigma
  double gross_hi = 50.0;
  std::uint64_t seed = 1;
  int trials = 100;
};

void validate(const ScenarioConfig& cfg);

/// Seed of the per-trial child stream; recorded in result rows.
std::uint64_t trial_seed(std::uint64_t seed, int trial);

struct MeasurementSet {
  MeasurementPlan plan;
  Vec y;        // observed = y_clean + noise + gross
  Vec y_clean;  // h(x_true)
  Vec noise;
  Vec gross;
  std::vector<bool> bad_mask;

  int bad_count() const;
};

/// Solved operating point of the case in the family's coordinates.
StateVector true_state(const NetworkModel& net, Family family);

/// One measurement realization. Pure function of its arguments: noise is
/// N(0, sigma_i) per channel, bad locations are drawn uniformly without
/// replacement, gross_i = sign * u * sigma_i with u ~ U[gross_lo, gross_hi].
MeasurementSet generate(const NetworkModel& net, const MeasurementPlan& plan,
                        const StateVector& x_true, const ScenarioConfig& cfg, int trial);

std::string set_to_json(const MeasurementSet& set);
MeasurementSet set_from_json(const std::string& text);

}  // namespace gridse
