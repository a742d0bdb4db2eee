#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gridse/case_io.hpp"
#include "gridse/harness.hpp"

namespace gridse {

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::vector<Model> parse_models(const std::string& text) {
  std::vector<Model> models;
  for (const std::string& name : split_list(text)) models.push_back(model_from_string(name));
  if (models.empty()) throw ParseError("no models given");
  return models;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  for (const std::string& item : split_list(text)) {
    std::size_t used = 0;
    grid.push_back(std::stod(item, &used));
    if (used != item.size()) throw ParseError("malformed number \"" + item + "\"");
  }
  if (grid.empty()) throw ParseError("empty grid");
  return grid;
}

ResidualForm parse_form(const std::string& text) {
  if (text == "l2") return ResidualForm::L2;
  if (text == "l2_squared") return ResidualForm::L2Squared;
  throw ParseError("unknown residual form \"" + text + "\" (expected l2 or l2_squared)");
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Robust power-system state estimation toolkit"};
  app.require_subcommand(1);

  // convert
  auto* convert = app.add_subcommand("convert", "Convert an IEEE CDF file to a JSON case");
  std::string convert_in, convert_out;
  convert->add_option("input", convert_in, "CDF input file")->required();
  convert->add_option("output", convert_out, "JSON output file")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Emit one measurement scenario as JSON");
  std::string sim_case, sim_family = "pmu", sim_out;
  ScenarioConfig sim_cfg;
  int sim_trial = 0;
  simulate->add_option("--case", sim_case, "case file")->required();
  simulate->add_option("--family", sim_family, "pmu or scada");
  simulate->add_option("--bad-rate", sim_cfg.bad_rate, "fraction of corrupted channels");
  simulate->add_option("--gross-lo", sim_cfg.gross_lo, "gross error lower bound (sigmas)");
  simulate->add_option("--gross-hi", sim_cfg.gross_hi, "gross error upper bound (sigmas)");
  simulate->add_option("--seed", sim_cfg.seed, "random seed");
  simulate->add_option("--trial", sim_trial, "trial index");
  simulate->add_option("--out", sim_out, "output file")->required();

  // estimate
  auto* est = app.add_subcommand("estimate", "Run one estimator on one scenario");
  std::string est_case, est_family = "pmu", est_model = "l1r", est_form;
  EstimatorConfig est_cfg;
  ScenarioConfig est_scenario;
  int est_trial = 0;
  est->add_option("--case", est_case, "case file")->required();
  est->add_option("--family", est_family, "pmu or scada");
  est->add_option("--model", est_model, "wlav, l1r or capped");
  est->add_option("--lambda", est_cfg.lambda, "sparsity penalty");
  est->add_option("--bad-rate", est_scenario.bad_rate, "fraction of corrupted channels");
  est->add_option("--gross-lo", est_scenario.gross_lo, "gross error lower bound (sigmas)");
  est->add_option("--gross-hi", est_scenario.gross_hi, "gross error upper bound (sigmas)");
  est->add_option("--seed", est_scenario.seed, "random seed");
  est->add_option("--trial", est_trial, "trial index");
  est->add_option("--form", est_form, "residual form: l2 or l2_squared");
  est->add_option("--gn-max-iters", est_cfg.gn_max_iterations, "Gauss-Newton iteration cap");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep, writes a CSV of rows");
  std::string sweep_case, sweep_family = "pmu", sweep_models = "wlav,l1r,capped";
  std::string sweep_lambdas, sweep_rates, sweep_out, sweep_spec, sweep_form;
  ScenarioConfig sweep_cfg;
  sweep->add_option("--spec", sweep_spec, "experiment spec JSON (other flags override)");
  sweep->add_option("--case", sweep_case, "case file");
  sweep->add_option("--family", sweep_family, "pmu or scada");
  sweep->add_option("--models", sweep_models, "comma list of wlav,l1r,capped");
  sweep->add_option("--lambda", sweep_lambdas, "comma list of penalty values");
  sweep->add_option("--bad-rate", sweep_rates, "comma list of bad-data rates");
  sweep->add_option("--trials", sweep_cfg.trials, "Monte Carlo trials per grid point");
  sweep->add_option("--seed", sweep_cfg.seed, "random seed");
  sweep->add_option("--gross-lo", sweep_cfg.gross_lo, "gross error lower bound (sigmas)");
  sweep->add_option("--gross-hi", sweep_cfg.gross_hi, "gross error upper bound (sigmas)");
  sweep->add_option("--form", sweep_form, "residual form: l2 or l2_squared");
  sweep->add_option("--out", sweep_out, "output CSV");

  // report
  auto* report = app.add_subcommand("report", "Aggregate a sweep CSV per grid point");
  std::string report_in, report_out;
  report->add_option("input", report_in, "rows CSV from sweep")->required();
  report->add_option("--out", report_out, "summary CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 1;
  }

  try {
    if (convert->parsed()) {
      save_case(import_cdf(convert_in), convert_out);
      std::cout << "wrote " << convert_out << "\n";
      return 0;
    }

    if (simulate->parsed()) {
      const NetworkModel net = load_case(sim_case);
      const Family family = family_from_string(sim_family);
      const MeasurementPlan plan = default_plan(net, family);
      const StateVector truth = true_state(net, family);
      const MeasurementSet set = generate(net, plan, truth, sim_cfg, sim_trial);
      std::ofstream out(sim_out);
      if (!out) throw ParseError(sim_out + ": cannot open file for writing");
      out << set_to_json(set) << "\n";
      std::cout << "wrote " << sim_out << " (" << set.plan.size() << " channels, "
                << set.bad_count() << " corrupted)\n";
      return 0;
    }

    if (est->parsed()) {
      const NetworkModel net = load_case(est_case);
      const Family family = family_from_string(est_family);
      est_cfg.model = model_from_string(est_model);
      if (!est_form.empty()) est_cfg.solver.residual_form = parse_form(est_form);
      const MeasurementPlan plan = default_plan(net, family);
      const StateVector truth = true_state(net, family);
      const MeasurementSet set = generate(net, plan, truth, est_scenario, est_trial);
      try {
        const EstimationResult res = estimate(net, plan, set.y, est_cfg, &truth);
        std::cout << "model:        " << to_string(est_cfg.model) << "\n"
                  << "error:        " << res.error_vs_truth.value() << "\n"
                  << "objective:    " << res.objective << "\n"
                  << "gn_iters:     " << res.gn_iterations << "\n"
                  << "stages:       " << res.stages << "\n"
                  << "time_ms:      " << res.wall_time * 1000.0 << "\n"
                  << "kkt_residual: " << res.kkt_residual << "\n";
        return 0;
      } catch (const DivergenceError& err) {
        std::cerr << "estimation diverged: " << err.what() << "\n";
        return 3;
      } catch (const NonConvergenceError& err) {
        std::cerr << "estimation did not converge: " << err.what() << "\n";
        return 3;
      } catch (const SingularMatrixError& err) {
        std::cerr << "estimation failed: " << err.what() << "\n";
        return 3;
      }
    }

    if (sweep->parsed()) {
      ExperimentSpec spec;
      if (!sweep_spec.empty()) spec = spec_from_json_file(sweep_spec);
      if (!sweep_case.empty()) spec.case_path = sweep_case;
      if (sweep->count("--family") || sweep_spec.empty()) {
        spec.family = family_from_string(sweep_family);
      }
      if (sweep->count("--models") || sweep_spec.empty()) {
        spec.models = parse_models(sweep_models);
      }
      if (!sweep_lambdas.empty()) {
        spec.lambda_grid = parse_grid(sweep_lambdas);
      } else if (sweep_spec.empty()) {
        spec.lambda_grid = default_lambda_grid();
      }
      if (!sweep_rates.empty()) spec.bad_rate_grid = parse_grid(sweep_rates);
      if (sweep->count("--trials")) spec.scenario.trials = sweep_cfg.trials;
      if (sweep->count("--seed")) spec.scenario.seed = sweep_cfg.seed;
      if (sweep->count("--gross-lo")) spec.scenario.gross_lo = sweep_cfg.gross_lo;
      if (sweep->count("--gross-hi")) spec.scenario.gross_hi = sweep_cfg.gross_hi;
      if (!sweep_form.empty()) spec.base_config.solver.residual_form = parse_form(sweep_form);
      if (!sweep_out.empty()) spec.output_path = sweep_out;
      if (spec.output_path.empty()) throw ParseError("sweep: no output file (--out)");

      const std::vector<ResultRow> rows = run_experiment(spec);
      write_rows_csv(spec.output_path, rows);
      std::cout << "wrote " << spec.output_path << " (" << rows.size() << " rows)\n";
      return 0;
    }

    if (report->parsed()) {
      const std::vector<SummaryRow> summary = summarize(read_rows_csv(report_in));
      if (report_out.empty()) {
        std::cout << format_summary(summary);
      } else {
        write_summary_csv(report_out, summary);
        std::cout << "wrote " << report_out << " (" << summary.size() << " rows)\n";
      }
      return 0;
    }
  } catch (const ParseError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace gridse
