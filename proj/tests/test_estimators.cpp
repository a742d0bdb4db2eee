#include <doctest.h>

#include <cmath>
#include <vector>

#include "gridse/estimators.hpp"
#include "gridse/scenario.hpp"
#include "test_support.hpp"

using namespace gridse;

namespace {

SpMat sparse(const Mat& dense) {
  SpMat s = dense.sparseView();
  s.makeCompressed();
  return s;
}

Mat random_matrix(int rows, int cols, Rng& rng) {
  Mat a(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) a(i, j) = 2.0 * rng.uniform01() - 1.0;
  }
  return a;
}

EstimatorConfig config(Model model, double lambda = 0.3) {
  EstimatorConfig cfg;
  cfg.model = model;
  cfg.lambda = lambda;
  return cfg;
}

}  // namespace

TEST_CASE("noiseless linear data is reproduced exactly by all models") {
  Rng rng(21, 0);
  const Mat h = random_matrix(16, 5, rng);
  Vec x0(5);
  x0 << 0.1, -0.4, 1.2, 0.0, -2.0;
  const Vec y = h * x0;
  const SpMat hs = sparse(h);
  for (const Model model : {Model::Wlav, Model::L1R, Model::CappedL1}) {
    const EstimationResult res = estimate_linear(hs, y, config(model));
    CHECK((res.x - x0).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("wlav ignores lambda bitwise") {
  Rng rng(22, 0);
  const Mat h = random_matrix(20, 4, rng);
  Vec y(20);
  for (int i = 0; i < 20; ++i) y[i] = 2.0 * rng.uniform01() - 1.0;
  const SpMat hs = sparse(h);
  const EstimationResult a = estimate_linear(hs, y, config(Model::Wlav, 0.01));
  const EstimationResult b = estimate_linear(hs, y, config(Model::Wlav, 5.0));
  CHECK(a.x == b.x);
  CHECK(a.objective == b.objective);
}

TEST_CASE("l1r support matches the l0 oracle on planted instances") {
  Rng rng(23, 0);
  const double noise = 1e-4;
  int hits = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Mat h = random_matrix(12, 4, rng);
    Vec x0(4);
    x0 << 1.0, -0.5, 0.25, 2.0;
    Vec y = h * x0;
    for (int i = 0; i < 12; ++i) y[i] += noise * (2.0 * rng.uniform01() - 1.0);
    const int where = static_cast<int>(rng.next_u64() % 12);
    y[where] += 40.0 * noise * (rng.coin() ? 1.0 : -1.0);

    const L0Solution oracle = solve_l0_oracle(h, y, 1);
    const EstimationResult res = estimate_linear(sparse(h), y, config(Model::L1R, 0.1));
    std::vector<int> support;
    for (int i = 0; i < 12; ++i) {
      if (std::abs(res.e_hat[i]) > 10.0 * noise) support.push_back(i);
    }
    if (support == oracle.support) ++hits;
  }
  CHECK(hits >= 9);
}

TEST_CASE("capped stage 1 equals l1r") {
  Rng rng(24, 0);
  const Mat h = random_matrix(25, 5, rng);
  Vec y(25);
  for (int i = 0; i < 25; ++i) y[i] = 2.0 * rng.uniform01() - 1.0;
  const SpMat hs = sparse(h);
  const EstimatorConfig cfg = config(Model::CappedL1, 0.4);

  const SparseSolution l1r = solve_weighted_l1ls(hs, y, cfg.lambda, Vec::Ones(25), cfg.solver);
  std::vector<SparseSolution> stages;
  const MultiStageResult ms = multi_stage(
      [&](const Vec& c) {
        SparseSolution sol = solve_weighted_l1ls(hs, y, cfg.lambda, c, cfg.solver);
        stages.push_back(sol);
        return sol;
      },
      25, cfg);
  REQUIRE(!stages.empty());
  CHECK(std::abs(stages.front().objective - l1r.objective) <= 10.0 * cfg.solver.tol);
  CHECK((stages.front().x_hat - l1r.x_hat).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("capped terminates immediately on clean data") {
  Rng rng(25, 0);
  const Mat h = random_matrix(14, 3, rng);
  Vec x0(3);
  x0 << 1.0, 2.0, 3.0;
  const Vec y = h * x0;
  const EstimatorConfig cfg = config(Model::CappedL1, 0.5);
  const MultiStageResult ms = multi_stage(
      [&](const Vec& c) { return solve_weighted_l1ls(sparse(h), y, cfg.lambda, c, cfg.solver); },
      14, cfg);
  CHECK(ms.stages == 1);
  CHECK(ms.c == Vec::Ones(14));
}

TEST_CASE("capped frees a planted gross error and improves on l1r") {
  Rng rng(26, 0);
  const Mat h = random_matrix(18, 4, rng);
  Vec x0(4);
  x0 << 0.6, -1.1, 0.9, 0.2;
  Vec y = h * x0;
  for (int i = 0; i < 18; ++i) y[i] += 1e-3 * (2.0 * rng.uniform01() - 1.0);
  y[7] += 0.04;  // 40 sigma against the 1e-3 noise floor

  const SpMat hs = sparse(h);
  const EstimatorConfig cfg = config(Model::CappedL1, 0.35);
  const EstimationResult l1r = estimate_linear(hs, y, config(Model::L1R, 0.35));
  const EstimationResult capped = estimate_linear(hs, y, cfg);

  CHECK(capped.stages >= 2);
  CHECK(std::abs(capped.residuals[7]) <= 1e-7);  // freed row is fit exactly
  const double err_l1r = (l1r.x - x0).norm();
  const double err_capped = (capped.x - x0).norm();
  CHECK(err_capped <= err_l1r + 1e-9);
}

TEST_CASE("capped stage objective with the final weights never increases") {
  Rng rng(27, 0);
  for (int rep = 0; rep < 5; ++rep) {
    const Mat h = random_matrix(20, 4, rng);
    Vec x0(4);
    x0 << 1.0, 0.5, -0.5, 0.7;
    Vec y = h * x0;
    for (int i = 0; i < 20; ++i) y[i] += 1e-3 * (2.0 * rng.uniform01() - 1.0);
    y[3] += 0.05;
    y[11] -= 0.08;

    const SpMat hs = sparse(h);
    const EstimatorConfig cfg = config(Model::CappedL1, 0.3);
    std::vector<SparseSolution> stages;
    const MultiStageResult ms = multi_stage(
        [&](const Vec& c) {
          SparseSolution sol = solve_weighted_l1ls(hs, y, cfg.lambda, c, cfg.solver);
          stages.push_back(sol);
          return sol;
        },
        20, cfg);
    double previous = std::numeric_limits<double>::infinity();
    for (const SparseSolution& stage : stages) {
      const double value = l1ls_objective(hs, y, cfg.lambda, ms.c, cfg.solver.residual_form,
                                          stage.x_hat, stage.e_hat);
      CHECK(value <= previous + 1e-9);
      previous = value;
    }
  }
}

TEST_CASE("noiseless scada recovers the operating point from a flat start") {
  const NetworkModel net = test::load_ieee("ieee9.json");
  const MeasurementPlan plan = default_plan(net, Family::Scada);
  const StateVector truth = true_state(net, Family::Scada);
  const Vec y = eval_scada(truth, net, plan);
  for (const Model model : {Model::Wlav, Model::L1R, Model::CappedL1}) {
    EstimatorConfig cfg = config(model, 0.08);
    const EstimationResult res = estimate_nonlinear(net, plan, y, flat_start(net), cfg);
    CHECK(res.gn_iterations <= 50);
    CHECK((res.x - pack_unknowns(truth)).norm() < 1e-6);
    // converged fixed point honors the stopping rule by construction
    CHECK(res.state.has_value());
    CHECK(res.state->b[net.slack_index()] == truth.b[net.slack_index()]);
  }
}

TEST_CASE("gauss-newton iteration cap raises non-convergence") {
  const NetworkModel net = test::load_ieee("ieee30.json");
  const MeasurementPlan plan = default_plan(net, Family::Scada);
  const StateVector truth = true_state(net, Family::Scada);
  ScenarioConfig scenario;
  const MeasurementSet set = generate(net, plan, truth, scenario, 0);
  EstimatorConfig cfg = config(Model::L1R, 0.08);
  cfg.gn_max_iterations = 1;
  CHECK_THROWS_AS(estimate_nonlinear(net, plan, set.y, flat_start(net), cfg),
                  NonConvergenceError);
}

TEST_CASE("absurd data raises divergence with step history") {
  const NetworkModel net = test::load_ieee("ieee9.json");
  const MeasurementPlan plan = default_plan(net, Family::Scada);
  const Vec y = 50.0 * eval_scada(true_state(net, Family::Scada), net, plan);
  EstimatorConfig cfg = config(Model::Wlav);
  try {
    estimate_nonlinear(net, plan, y, flat_start(net), cfg);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& err) {
    CHECK(!err.step_norms.empty());
  }
}

TEST_CASE("nonlinear objective matches recomputation from the returned pieces") {
  const NetworkModel net = test::load_ieee("ieee9.json");
  const MeasurementPlan plan = default_plan(net, Family::Scada);
  const StateVector truth = true_state(net, Family::Scada);
  ScenarioConfig scenario;
  scenario.seed = 5;
  const MeasurementSet set = generate(net, plan, truth, scenario, 0);

  EstimatorConfig cfg = config(Model::L1R, 0.08);
  const EstimationResult res = estimate_nonlinear(net, plan, set.y, flat_start(net), cfg);
  const Vec h_of_x = eval_scada(*res.state, net, plan);
  const Vec r = set.y - h_of_x - res.e_hat;
  const double recomputed = r.norm() + cfg.lambda * res.e_hat.lpNorm<1>();
  CHECK(std::abs(res.objective - recomputed) <= 1e-10);
}

TEST_CASE("error metric is invariant under bus reordering") {
  // same two states expressed with bus order (0,1,2) and (2,0,1)
  StateVector truth;
  truth.kind = StateVector::Kind::Polar;
  truth.slack_index = 0;
  truth.a = Vec(3);
  truth.a << 1.0, 0.98, 1.02;
  truth.b = Vec(3);
  truth.b << 0.0, -0.1, 0.07;
  StateVector est = truth;
  est.a << 1.01, 0.97, 1.03;
  est.b << 0.0, -0.12, 0.05;

  const double direct = (pack_unknowns(est) - pack_unknowns(truth)).norm();

  const std::vector<int> perm{2, 0, 1};  // new position of old bus i
  StateVector truth_p = truth, est_p = est;
  for (int i = 0; i < 3; ++i) {
    truth_p.a[perm[i]] = truth.a[i];
    truth_p.b[perm[i]] = truth.b[i];
    est_p.a[perm[i]] = est.a[i];
    est_p.b[perm[i]] = est.b[i];
  }
  truth_p.slack_index = perm[0];
  est_p.slack_index = perm[0];
  const double permuted = (pack_unknowns(est_p) - pack_unknowns(truth_p)).norm();
  CHECK(direct == doctest::Approx(permuted).epsilon(1e-14));
}

TEST_CASE("estimate wrapper fills state and error for the pmu family") {
  const NetworkModel net = test::load_ieee("ieee9.json");
  const MeasurementPlan plan = default_plan(net, Family::Pmu);
  const StateVector truth = true_state(net, Family::Pmu);
  const Vec y = eval_pmu(truth, net, plan);
  const EstimationResult res = estimate(net, plan, y, config(Model::L1R), &truth);
  REQUIRE(res.state.has_value());
  CHECK(res.state->kind == StateVector::Kind::Rectangular);
  CHECK(res.error_vs_truth.value() < 1e-8);
}
