#pragma once

#include <functional>
#include <optional>
#include <string>

#include "gridse/measurement.hpp"
#include "gridse/network.hpp"
#include "gridse/solvers.hpp"

namespace gridse {

enum class Model { Wlav, L1R, CappedL1 };

std::string to_string(Model model);
Model model_from_string(const std::string& name);

struct EstimatorConfig {
  Model model = Model::L1R;
  double lambda = 0.3;          // penalty weight for the sparse models
  double alpha_factor = 1e5;    // stage threshold = alpha_factor * min_i |e_i|
  double zero_tolerance = 1e-9;
  int max_stages = 10;
  double gn_tolerance = 1e-5;   // stop when |dx|_inf falls below this
  int gn_max_iterations = 50;
  SolverOptions solver;

  EstimatorConfig() { solver.residual_form = kEstimatorResidualForm; }

  /// Residual form the estimators default to. The sparse estimators penalize
  /// the unsquared residual 2-norm, which keeps the error threshold tied to
  /// the noise floor across network sizes; the squared form remains available
  /// through `solver.residual_form`.
  static constexpr ResidualForm kEstimatorResidualForm = ResidualForm::L2;
};

struct EstimationResult {
  Vec x;                 // solved unknowns (estimation coordinates)
  Vec e_hat;             // error estimate, empty for WLAV
  Vec residuals;         // y - h(x) - e
  double objective = 0.0;
  double kkt_residual = 0.0;
  int gn_iterations = 0;
  int stages = 0;        // total sparse-stage solves (0 for WLAV, >= 1 for L1R)
  double wall_time = 0.0;
  std::optional<StateVector> state;     // filled when estimating a network state
  std::optional<double> error_vs_truth; // |x - x_true|_2 in estimation coordinates
};

/// One estimator run on an explicit linear model y = Hx + v + e.
EstimationResult estimate_linear(const SpMat& h, const Vec& y, const EstimatorConfig& cfg);

struct MultiStageResult {
  SparseSolution solution;
  Vec c;       // final component weights, entries in {0, 1}
  int stages;  // number of stage solves performed
};

/// Multi-stage reweighting: stage 1 solves with all-ones weights (or the
/// supplied warm start), then components whose |e_i| exceeds
/// alpha_factor * min|e| + zero_tolerance lose their penalty. Terminates when
/// the weights stop changing or max_stages is reached.
MultiStageResult multi_stage(const std::function<SparseSolution(const Vec&)>& solve_stage,
                             Eigen::Index rows, const EstimatorConfig& cfg,
                             const Vec* warm_start = nullptr);

/// Gauss-Newton driver for the nonlinear SCADA model: repeatedly linearizes
/// h at the current state, solves the configured estimator on the linearized
/// system, and applies the step until |dx|_inf <= gn_tolerance.
EstimationResult estimate_nonlinear(const NetworkModel& net, const MeasurementPlan& plan,
                                    const Vec& y, const StateVector& x0,
                                    const EstimatorConfig& cfg);

/// Flat start: v = 1 everywhere, every angle pinned at the slack angle.
StateVector flat_start(const NetworkModel& net);

/// Convenience wrapper used by the harness and CLI: dispatches on the plan
/// family, wraps the solution in a StateVector and fills error_vs_truth.
/// `h_cache` may carry a prebuilt PMU matrix so timing covers the solve only.
EstimationResult estimate(const NetworkModel& net, const MeasurementPlan& plan,
                          const Vec& y, const EstimatorConfig& cfg,
                          const StateVector* truth = nullptr,
                          const SpMat* h_cache = nullptr);

}  // namespace gridse
