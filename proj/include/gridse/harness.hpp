#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridse/estimators.hpp"
#include "gridse/scenario.hpp"

namespace gridse {

struct ExperimentSpec {
  std::string case_path;
  std::string case_name;  // defaults to the case file's name field
  Family family = Family::Pmu;
  std::vector<Model> models = {Model::Wlav, Model::L1R, Model::CappedL1};
  std::vector<double> lambda_grid = {0.3};
  std::vector<double> bad_rate_grid = {0.06};
  ScenarioConfig scenario;
  EstimatorConfig base_config;  // model/lambda overwritten per grid point
  std::string output_path;
};

void validate(const ExperimentSpec& spec);

/// Default penalty sweep covering both suggested operating ranges.
std::vector<double> default_lambda_grid();

struct ResultRow {
  Model model = Model::Wlav;
  std::string case_name;
  Family family = Family::Pmu;
  double lambda = 0.0;
  double bad_rate = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double error = 0.0;  // NaN when not converged or truth unavailable
  double objective = 0.0;
  int gn_iters = 0;
  int stages = 0;
  double time_ms = 0.0;
  bool converged = true;
};

/// Monte Carlo sweep over (model, lambda, bad_rate, trial). Trials run in
/// parallel (capped by GRIDSE_THREADS); rows come back in canonical order and
/// every non-timing column is a pure function of the spec.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

struct SummaryRow {
  Model model = Model::Wlav;
  std::string case_name;
  Family family = Family::Pmu;
  double lambda = 0.0;
  double bad_rate = 0.0;
  int trials = 0;
  int converged = 0;
  int diverged = 0;
  double mean_error = 0.0;  // over converged trials; NaN if none converged
  double std_error = 0.0;
  double mean_objective = 0.0;
  double mean_gn_iters = 0.0;
  double mean_stages = 0.0;
  double mean_time_ms = 0.0;
};

/// Aggregate per (model, case, family, lambda, bad_rate); divergences are
/// counted, not averaged.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

void write_rows_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_rows_csv(const std::string& path);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);
std::string format_summary(const std::vector<SummaryRow>& rows);

ExperimentSpec spec_from_json_file(const std::string& path);

/// `gridse` command line: convert, simulate, estimate, sweep, report.
/// Returns 0 on success, 1 on usage errors, 2 on data errors, 3 on solver
/// non-convergence in single-run mode.
int cli_main(int argc, const char* const* argv);

}  // namespace gridse
