#include <doctest.h>

#include <cmath>

#include "gridse/measurement.hpp"
#include "gridse/scenario.hpp"
#include "test_support.hpp"

using namespace gridse;
using test::two_bus;

namespace {

StateVector rect_state(std::initializer_list<double> e, std::initializer_list<double> f) {
  StateVector x;
  x.kind = StateVector::Kind::Rectangular;
  x.slack_index = 0;
  x.a = Vec(Eigen::Map<const Vec>(e.begin(), static_cast<Eigen::Index>(e.size())));
  x.b = Vec(Eigen::Map<const Vec>(f.begin(), static_cast<Eigen::Index>(f.size())));
  return x;
}

StateVector polar_state(std::initializer_list<double> v, std::initializer_list<double> th,
                        int slack = 0) {
  StateVector x;
  x.kind = StateVector::Kind::Polar;
  x.slack_index = slack;
  x.a = Vec(Eigen::Map<const Vec>(v.begin(), static_cast<Eigen::Index>(v.size())));
  x.b = Vec(Eigen::Map<const Vec>(th.begin(), static_cast<Eigen::Index>(th.size())));
  return x;
}

int count_kind(const MeasurementPlan& plan, ChannelKind kind) {
  int count = 0;
  for (const auto& ch : plan.channels) count += ch.kind == kind ? 1 : 0;
  return count;
}

}  // namespace

TEST_CASE("default PMU plan: counts and noise levels") {
  const NetworkModel net = test::load_ieee("ieee9.json");
  const MeasurementPlan plan = default_plan(net, Family::Pmu);
  // 4 channels per bus plus 4 per branch; the 9-bus has 9 branches
  CHECK(plan.size() == 4 * 9 + 4 * 9);
  CHECK(plan.size() == 72);
  CHECK(count_kind(plan, ChannelKind::VRe) == 9);
  CHECK(count_kind(plan, ChannelKind::IBrRe) == 18);
  for (const auto& ch : plan.channels) {
    if (ch.kind == ChannelKind::VRe || ch.kind == ChannelKind::VIm) {
      CHECK(ch.sigma == 0.002);
    } else {
      CHECK(ch.sigma == 0.001);
    }
  }
}

TEST_CASE("default SCADA plan: counts and noise levels") {
  const NetworkModel net = test::load_ieee("ieee30.json");
  const MeasurementPlan plan = default_plan(net, Family::Scada);
  CHECK(plan.size() == 3 * 30 + 4 * 41);
  for (const auto& ch : plan.channels) {
    if (ch.kind == ChannelKind::Vmag) {
      CHECK(ch.sigma == 0.002);
    } else {
      CHECK(ch.sigma == 0.004);
    }
  }
  // channel count must cover the 2n-1 unknowns
  CHECK(plan.size() >= 2 * 30 - 1);
}

TEST_CASE("eval_pmu on the two-bus line") {
  const NetworkModel net = two_bus(0.0, 0.1);
  const MeasurementPlan plan = default_plan(net, Family::Pmu);

  SUBCASE("equal voltages drive no current") {
    const Vec y = eval_pmu(rect_state({1.0, 1.0}, {0.0, 0.0}), net, plan);
    for (int row = 0; row < plan.size(); ++row) {
      const ChannelKind kind = plan.channels[row].kind;
      if (kind == ChannelKind::IBrRe || kind == ChannelKind::IBrIm ||
          kind == ChannelKind::IInjRe || kind == ChannelKind::IInjIm) {
        CHECK(y[row] == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
      }
    }
  }

  SUBCASE("voltage sag pulls -1j of current at the from end") {
    const StateVector x = rect_state({1.0, 0.9}, {0.0, 0.0});
    const Vec y = eval_pmu(x, net, plan);
    for (int row = 0; row < plan.size(); ++row) {
      const MeasurementChannel& ch = plan.channels[row];
      if (ch.kind == ChannelKind::IBrRe && ch.end == BranchEnd::From) {
        CHECK(y[row] == doctest::Approx(0.0).scale(1.0));
      }
      if (ch.kind == ChannelKind::IBrIm && ch.end == BranchEnd::From) {
        CHECK(y[row] == doctest::Approx(-1.0));
      }
      // injection at bus 1 equals the branch current
      if (ch.kind == ChannelKind::IInjIm && ch.bus == 0) {
        CHECK(y[row] == doctest::Approx(-1.0));
      }
      if (ch.kind == ChannelKind::IInjRe && ch.bus == 0) {
        CHECK(y[row] == doctest::Approx(0.0).scale(1.0));
      }
    }
  }
}

TEST_CASE("pmu_matrix rows") {
  const NetworkModel net = two_bus(0.0, 0.1);
  const MeasurementPlan plan = default_plan(net, Family::Pmu);
  const Mat h = Mat(pmu_matrix(net, plan));

  // VRe at bus 0 selects e_0
  CHECK(h.row(0) == Eigen::RowVector4d(1, 0, 0, 0));
  for (int row = 0; row < plan.size(); ++row) {
    const MeasurementChannel& ch = plan.channels[row];
    if (ch.kind == ChannelKind::IBrIm && ch.end == BranchEnd::From) {
      // ordering (e1, e2, f1, f2): the from-end imaginary row is [b+yc, -b, g, -g]
      CHECK(h.row(row) == Eigen::RowVector4d(-10, 10, 0, 0));
    }
  }
}

TEST_CASE("pmu_matrix matches eval_pmu on random states") {
  const NetworkModel net = test::load_ieee("ieee30.json");
  const MeasurementPlan plan = default_plan(net, Family::Pmu);
  const SpMat h = pmu_matrix(net, plan);
  Rng rng(11, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const StateVector x = test::random_rect_state(net.size(), rng);
    const Vec direct = eval_pmu(x, net, plan);
    const Vec via_matrix = h * pack_unknowns(x);
    CHECK((direct - via_matrix).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("eval_pmu is linear") {
  const NetworkModel net = test::load_ieee("ieee9.json");
  const MeasurementPlan plan = default_plan(net, Family::Pmu);
  Rng rng(13, 0);
  const StateVector x1 = test::random_rect_state(net.size(), rng);
  const StateVector x2 = test::random_rect_state(net.size(), rng);
  const double alpha = 0.7, beta = -1.3;
  StateVector mix = x1;
  mix.a = alpha * x1.a + beta * x2.a;
  mix.b = alpha * x1.b + beta * x2.b;
  const Vec lhs = eval_pmu(mix, net, plan);
  const Vec rhs = alpha * eval_pmu(x1, net, plan) + beta * eval_pmu(x2, net, plan);
  CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("eval_scada basics") {
  const NetworkModel net = two_bus(0.0, 0.1);
  const MeasurementPlan plan = default_plan(net, Family::Scada);

  SUBCASE("flat state on a lossless, shuntless net measures all zeros") {
    const Vec y = eval_scada(polar_state({1.0, 1.0}, {0.0, 0.0}), net, plan);
    for (int row = 0; row < plan.size(); ++row) {
      if (plan.channels[row].kind == ChannelKind::Vmag) {
        CHECK(y[row] == 1.0);
      } else {
        CHECK(y[row] == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
      }
    }
  }

  SUBCASE("angle difference drives b sin(theta) of real power") {
    const Vec y = eval_scada(polar_state({1.0, 1.0}, {0.0, -0.1}), net, plan);
    for (int row = 0; row < plan.size(); ++row) {
      const MeasurementChannel& ch = plan.channels[row];
      if (ch.kind == ChannelKind::PFlow && ch.end == BranchEnd::From) {
        CHECK(y[row] == doctest::Approx(10.0 * std::sin(0.1)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("scada jacobian: Vmag row is a unit selector") {
  const NetworkModel net = test::load_ieee("ieee9.json");
  const MeasurementPlan plan = default_plan(net, Family::Scada);
  const StateVector x = true_state(net, Family::Scada);
  const Mat h = Mat(scada_jacobian(x, net, plan));
  const int n = net.size();
  for (int row = 0; row < plan.size(); ++row) {
    const MeasurementChannel& ch = plan.channels[row];
    if (ch.kind != ChannelKind::Vmag) continue;
    for (int col = 0; col < 2 * n - 1; ++col) {
      CHECK(h(row, col) == ((col == n - 1 + ch.bus) ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("flat lossless state: dPInj/dv vanishes") {
  const NetworkModel net = two_bus(0.0, 0.2);
  const MeasurementPlan plan = default_plan(net, Family::Scada);
  const Mat h = Mat(scada_jacobian(polar_state({1.0, 1.0}, {0.0, 0.0}), net, plan));
  const int n = net.size();
  for (int row = 0; row < plan.size(); ++row) {
    if (plan.channels[row].kind != ChannelKind::PInj) continue;
    for (int col = n - 1; col < 2 * n - 1; ++col) {
      CHECK(h(row, col) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    }
  }
}

namespace {

double jacobian_fd_error(const NetworkModel& net, const StateVector& x) {
  const MeasurementPlan plan = default_plan(net, Family::Scada);
  const Mat h = Mat(scada_jacobian(x, net, plan));
  const Vec u0 = pack_unknowns(x);
  const double step = 1e-6;
  Mat fd(plan.size(), u0.size());
  for (Eigen::Index j = 0; j < u0.size(); ++j) {
    Vec up = u0, dn = u0;
    up[j] += step;
    dn[j] -= step;
    fd.col(j) = (eval_scada(state_from_unknowns(x, up), net, plan) -
                 eval_scada(state_from_unknowns(x, dn), net, plan)) /
                (2.0 * step);
  }
  return (h - fd).cwiseAbs().maxCoeff() / std::max(1.0, h.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("scada jacobian matches central finite differences") {
  const NetworkModel net = test::load_ieee("ieee9.json");
  Rng rng(17, 0);
  for (int rep = 0; rep < 5; ++rep) {
    CHECK(jacobian_fd_error(net, test::random_polar_state(net, rng)) < 1e-5);
  }
}

TEST_CASE("power balance: injections add up to series losses") {
  // all bundled cases carry no shunt conductance, so total injected real
  // power equals the loss in every branch series resistance
  for (const char* name : {"ieee9.json", "ieee57.json"}) {
    const NetworkModel net = test::load_ieee(name);
    const MeasurementPlan plan = default_plan(net, Family::Scada);
    Rng rng(19, 0);
    for (int rep = 0; rep < 3; ++rep) {
      const StateVector x = test::random_polar_state(net, rng, 0.02, 0.05);
      const CVec u = x.phasors();
      const Vec y = eval_scada(x, net, plan);
      double p_total = 0.0;
      for (int row = 0; row < plan.size(); ++row) {
        if (plan.channels[row].kind == ChannelKind::PInj) p_total += y[row];
      }
      double loss = 0.0;
      for (const Branch& br : net.branches()) {
        const Complex series = (u[br.from] / br.tap - u[br.to]) / Complex(br.r, br.x);
        loss += std::norm(series) * br.r;
      }
      CHECK(p_total == doctest::Approx(loss).epsilon(1e-8));
    }
  }
}

TEST_CASE("flow channels match the injection picture on the operating point") {
  // at the solved state, from+to flow on each branch equals its series loss
  const NetworkModel net = test::load_ieee("ieee30.json");
  const MeasurementPlan plan = default_plan(net, Family::Scada);
  const Vec y = eval_scada(true_state(net, Family::Scada), net, plan);
  double p_inj = 0.0, p_flow = 0.0;
  for (int row = 0; row < plan.size(); ++row) {
    if (plan.channels[row].kind == ChannelKind::PInj) p_inj += y[row];
    if (plan.channels[row].kind == ChannelKind::PFlow) p_flow += y[row];
  }
  CHECK(p_inj == doctest::Approx(p_flow).epsilon(1e-10));
}

TEST_CASE("plan serializes to JSON and back") {
  const NetworkModel net = test::load_ieee("ieee9.json");
  for (const Family family : {Family::Pmu, Family::Scada}) {
    const MeasurementPlan plan = default_plan(net, family);
    const MeasurementPlan parsed = plan_from_json(plan_to_json(plan));
    REQUIRE(parsed.size() == plan.size());
    CHECK(parsed.family == plan.family);
    for (int i = 0; i < plan.size(); ++i) {
      CHECK(parsed.channels[i].kind == plan.channels[i].kind);
      CHECK(parsed.channels[i].bus == plan.channels[i].bus);
      CHECK(parsed.channels[i].branch == plan.channels[i].branch);
      CHECK(parsed.channels[i].sigma == plan.channels[i].sigma);
    }
  }
}

TEST_CASE("unknown packing round trips and respects the slack pin") {
  const NetworkModel net = test::load_ieee("ieee30.json");
  const StateVector x = true_state(net, Family::Scada);
  const Vec u = pack_unknowns(x);
  CHECK(u.size() == 2 * net.size() - 1);
  const StateVector back = state_from_unknowns(x, u);
  CHECK((back.a - x.a).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((back.b - x.b).lpNorm<Eigen::Infinity>() == 0.0);

  StateVector stepped = x;
  Vec delta = Vec::Zero(u.size());
  delta[0] = 0.5;  // first non-slack angle
  apply_step(stepped, delta);
  CHECK(stepped.b[x.slack_index] == x.b[x.slack_index]);
}
