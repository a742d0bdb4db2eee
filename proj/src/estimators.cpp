#include "gridse/estimators.hpp"

#include <chrono>
#include <cmath>

namespace gridse {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::string to_string(Model model) {
  switch (model) {
    case Model::Wlav: return "wlav";
    case Model::L1R: return "l1r";
    case Model::CappedL1: return "capped";
  }
  return "?";
}

Model model_from_string(const std::string& name) {
  if (name == "wlav") return Model::Wlav;
  if (name == "l1r") return Model::L1R;
  if (name == "capped" || name == "capped_l1" || name == "cappedl1") return Model::CappedL1;
  throw ParseError("unknown estimator model \"" + name + "\"");
}

MultiStageResult multi_stage(const std::function<SparseSolution(const Vec&)>& solve_stage,
                             Eigen::Index rows, const EstimatorConfig& cfg,
                             const Vec* warm_start) {
  Vec c = warm_start ? *warm_start : Vec::Ones(rows);
  MultiStageResult out;
  for (int stage = 1; stage <= cfg.max_stages; ++stage) {
    out.solution = solve_stage(c);
    out.stages = stage;
    const double alpha = cfg.alpha_factor * out.solution.e_hat.cwiseAbs().minCoeff();
    Vec c_next(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      c_next[i] =
          (std::abs(out.solution.e_hat[i]) <= alpha + cfg.zero_tolerance) ? 1.0 : 0.0;
    }
    if (c_next == c) break;
    c = std::move(c_next);
  }
  out.c = std::move(c);
  return out;
}

EstimationResult estimate_linear(const SpMat& h, const Vec& y, const EstimatorConfig& cfg) {
  const auto start = Clock::now();
  EstimationResult res;
  switch (cfg.model) {
    case Model::Wlav: {
      const LadSolution lad = solve_lad(h, y, cfg.solver);
      res.x = lad.x;
      res.e_hat = Vec{};
      res.residuals = y - h * res.x;
      res.objective = lad.objective;
      res.kkt_residual = lad.kkt_residual;
      res.stages = 0;
      break;
    }
    case Model::L1R: {
      const SparseSolution sol =
          solve_weighted_l1ls(h, y, cfg.lambda, Vec::Ones(y.size()), cfg.solver);
      res.x = sol.x_hat;
      res.e_hat = sol.e_hat;
      res.residuals = y - h * res.x - res.e_hat;
      res.objective = sol.objective;
      res.kkt_residual = sol.kkt_residual;
      res.stages = 1;
      break;
    }
    case Model::CappedL1: {
      const MultiStageResult ms = multi_stage(
          [&](const Vec& c) { return solve_weighted_l1ls(h, y, cfg.lambda, c, cfg.solver); },
          y.size(), cfg);
      res.x = ms.solution.x_hat;
      res.e_hat = ms.solution.e_hat;
      res.residuals = y - h * res.x - res.e_hat;
      res.objective = ms.solution.objective;
      res.kkt_residual = ms.solution.kkt_residual;
      res.stages = ms.stages;
      break;
    }
  }
  res.wall_time = seconds_since(start);
  return res;
}

StateVector flat_start(const NetworkModel& net) {
  StateVector x;
  x.kind = StateVector::Kind::Polar;
  x.slack_index = net.slack_index();
  x.a = Vec::Ones(net.size());
  x.b = Vec::Constant(net.size(), net.buses()[net.slack_index()].theta_true);
  return x;
}

EstimationResult estimate_nonlinear(const NetworkModel& net, const MeasurementPlan& plan,
                                    const Vec& y, const StateVector& x0,
                                    const EstimatorConfig& cfg) {
  if (plan.family != Family::Scada) {
    throw ValidationError("estimate_nonlinear expects a SCADA plan");
  }
  if (x0.kind != StateVector::Kind::Polar || x0.a.minCoeff() <= 0.0) {
    throw ValidationError("initial state must be polar with positive magnitudes");
  }

  const auto start = Clock::now();
  StateVector x = x0;
  EstimationResult res;
  Vec c_final = Vec::Ones(y.size());
  Vec c_warm;  // capped stage weights carried across linearizations
  std::vector<double> step_norms;

  bool converged = false;
  for (int iter = 1; iter <= cfg.gn_max_iterations; ++iter) {
    const Vec dy = y - eval_scada(x, net, plan);
    const SpMat h = scada_jacobian(x, net, plan);

    Vec dx;
    switch (cfg.model) {
      case Model::Wlav: {
        const LadSolution lad = solve_lad(h, dy, cfg.solver);
        dx = lad.x;
        res.e_hat = Vec{};
        res.kkt_residual = lad.kkt_residual;
        break;
      }
      case Model::L1R: {
        const SparseSolution sol =
            solve_weighted_l1ls(h, dy, cfg.lambda, Vec::Ones(dy.size()), cfg.solver);
        dx = sol.x_hat;
        res.e_hat = sol.e_hat;
        res.kkt_residual = sol.kkt_residual;
        res.stages += 1;
        break;
      }
      case Model::CappedL1: {
        const MultiStageResult ms = multi_stage(
            [&](const Vec& c) {
              return solve_weighted_l1ls(h, dy, cfg.lambda, c, cfg.solver);
            },
            dy.size(), cfg, c_warm.size() > 0 ? &c_warm : nullptr);
        dx = ms.solution.x_hat;
        res.e_hat = ms.solution.e_hat;
        res.kkt_residual = ms.solution.kkt_residual;
        res.stages += ms.stages;
        c_warm = ms.c;
        c_final = ms.c;
        break;
      }
    }

    apply_step(x, dx);
    const double step = dx.lpNorm<Eigen::Infinity>();
    step_norms.push_back(step);
    res.gn_iterations = iter;

    if (step > 10.0 || x.a.minCoeff() <= 0.0) {
      throw DivergenceError("gauss-newton diverged at iteration " + std::to_string(iter),
                            step_norms);
    }
    if (step <= cfg.gn_tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NonConvergenceError("gauss-newton hit the iteration cap (" +
                                  std::to_string(cfg.gn_max_iterations) + ")",
                              pack_unknowns(x), res.e_hat, res.kkt_residual);
  }

  const Vec h_of_x = eval_scada(x, net, plan);
  res.x = pack_unknowns(x);
  res.state = x;
  if (cfg.model == Model::Wlav) {
    res.residuals = y - h_of_x;
    res.objective = res.residuals.lpNorm<1>();
  } else {
    res.residuals = y - h_of_x - res.e_hat;
    const double penalty =
        cfg.lambda *
        (cfg.model == Model::L1R ? res.e_hat.lpNorm<1>()
                                 : c_final.cwiseProduct(res.e_hat.cwiseAbs()).sum());
    res.objective = (cfg.solver.residual_form == ResidualForm::L2Squared
                         ? res.residuals.squaredNorm()
                         : res.residuals.norm()) +
                    penalty;
  }
  res.wall_time = seconds_since(start);
  return res;
}

EstimationResult estimate(const NetworkModel& net, const MeasurementPlan& plan,
                          const Vec& y, const EstimatorConfig& cfg,
                          const StateVector* truth, const SpMat* h_cache) {
  EstimationResult res;
  if (plan.family == Family::Pmu) {
    const SpMat h = h_cache ? SpMat{} : pmu_matrix(net, plan);
    res = estimate_linear(h_cache ? *h_cache : h, y, cfg);
    StateVector state;
    state.kind = StateVector::Kind::Rectangular;
    state.slack_index = net.slack_index();
    state.a = res.x.head(net.size());
    state.b = res.x.tail(net.size());
    res.state = std::move(state);
  } else {
    res = estimate_nonlinear(net, plan, y, flat_start(net), cfg);
  }
  if (truth != nullptr) {
    res.error_vs_truth = (res.x - pack_unknowns(*truth)).norm();
  }
  return res;
}

}  // namespace gridse
