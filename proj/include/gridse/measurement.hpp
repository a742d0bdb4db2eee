#pragma once

#include <string>
#include <vector>

#include "gridse/network.hpp"
#include "gridse/types.hpp"

namespace gridse {

enum class Family { Pmu, Scada };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

/// Bus voltage phasors, either rectangular (e_i + j f_i) or polar (v_i, theta_i).
struct StateVector {
  enum class Kind { Rectangular, Polar };

  Kind kind = Kind::Rectangular;
  Vec a;  // e (rectangular) or v (polar), one entry per bus
  Vec b;  // f (rectangular) or theta in radians (polar)
  int slack_index = 0;

  int size() const { return static_cast<int>(a.size()); }

  const Vec& e() const { return a; }
  const Vec& f() const { return b; }
  const Vec& vmag() const { return a; }
  const Vec& theta() const { return b; }

  CVec phasors() const;
};

/// Unknowns as a flat vector: [e; f] (rectangular, dimension 2n) or
/// [theta excluding slack; v] (polar, dimension 2n-1). The slack angle is not
/// an unknown in polar coordinates; it stays pinned at its current value.
Vec pack_unknowns(const StateVector& state);

/// Inverse of pack_unknowns; `like` supplies kind, slack index and the pinned
/// slack angle.
StateVector state_from_unknowns(const StateVector& like, const Vec& unknowns);

/// In-place state update x += dx in unknown coordinates.
void apply_step(StateVector& state, const Vec& delta);

enum class ChannelKind {
  // PMU (rectangular, linear)
  VRe,
  VIm,
  IInjRe,
  IInjIm,
  IBrRe,
  IBrIm,
  // SCADA (polar, nonlinear)
  Vmag,
  PInj,
  QInj,
  PFlow,
  QFlow,
};

std::string to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(const std::string& name);
bool is_pmu_kind(ChannelKind kind);
bool is_branch_kind(ChannelKind kind);

enum class BranchEnd { From, To };

struct MeasurementChannel {
  ChannelKind kind = ChannelKind::VRe;
  int bus = -1;                       // for bus-located channels
  int branch = -1;                    // for branch-located channels
  BranchEnd end = BranchEnd::From;
  double sigma = 1.0;                 // p.u. noise standard deviation
};

struct MeasurementPlan {
  Family family = Family::Pmu;
  std::vector<MeasurementChannel> channels;  // canonical row order of y

  int size() const { return static_cast<int>(channels.size()); }
};

// Default channel noise levels.
constexpr double kSigmaVoltage = 0.002;  // PMU V components and SCADA Vmag
constexpr double kSigmaCurrent = 0.001;  // PMU current components
constexpr double kSigmaPower = 0.004;    // SCADA P/Q channels

/// Full default plan: PMU measures V and injection current at every bus plus
/// branch currents at both ends; SCADA measures Vmag and P/Q injection at
/// every bus plus P/Q flows at both ends.
MeasurementPlan default_plan(const NetworkModel& net, Family family);

/// PMU channel values by complex arithmetic (I = Y U, branch two-ports).
Vec eval_pmu(const StateVector& state, const NetworkModel& net, const MeasurementPlan& plan);

/// Sparse H with eval_pmu(x) = H [e; f], rows in plan order.
SpMat pmu_matrix(const NetworkModel& net, const MeasurementPlan& plan);

/// SCADA channel values (standard AC power flow equations).
Vec eval_scada(const StateVector& state, const NetworkModel& net, const MeasurementPlan& plan);

/// Analytic Jacobian of eval_scada w.r.t. [theta excluding slack; v].
SpMat scada_jacobian(const StateVector& state, const NetworkModel& net,
                     const MeasurementPlan& plan);

std::string plan_to_json(const MeasurementPlan& plan);
MeasurementPlan plan_from_json(const std::string& text);

}  // namespace gridse
