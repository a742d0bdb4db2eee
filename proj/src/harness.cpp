#include "gridse/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gridse/case_io.hpp"

namespace gridse {

using nlohmann::json;

void validate(const ExperimentSpec& spec) {
  if (spec.case_path.empty()) throw ValidationError("experiment: no case file");
  if (spec.models.empty()) throw ValidationError("experiment: no models selected");
  if (spec.lambda_grid.empty()) throw ValidationError("experiment: empty lambda grid");
  if (spec.bad_rate_grid.empty()) throw ValidationError("experiment: empty bad-rate grid");
  validate(spec.scenario);
}

std::vector<double> default_lambda_grid() {
  return {0.01, 0.02, 0.05, 0.08, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0, 5.0};
}

namespace {

int worker_count(std::size_t tasks) {
  unsigned n = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("GRIDSE_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed > 0) n = static_cast<unsigned>(parsed);
  }
  if (n == 0) n = 1;
  return static_cast<int>(std::min<std::size_t>(n, std::max<std::size_t>(tasks, 1)));
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
  validate(spec);
  const NetworkModel net = load_case(spec.case_path);
  const std::string case_name = spec.case_name.empty()
                                    ? (net.name().empty() ? spec.case_path : net.name())
                                    : spec.case_name;
  const MeasurementPlan plan = default_plan(net, spec.family);
  const StateVector truth = true_state(net, spec.family);
  const SpMat h_pmu =
      (spec.family == Family::Pmu) ? pmu_matrix(net, plan) : SpMat{};

  // one task per (bad_rate, trial); each task reuses its scenario across the
  // model and lambda grid so a given trial sees identical data everywhere
  struct Task {
    std::size_t rate_index;
    int trial;
  };
  std::vector<Task> tasks;
  for (std::size_t ri = 0; ri < spec.bad_rate_grid.size(); ++ri) {
    for (int trial = 0; trial < spec.scenario.trials; ++trial) {
      tasks.push_back({ri, trial});
    }
  }
  const std::size_t rows_per_task = spec.models.size() * spec.lambda_grid.size();
  std::vector<ResultRow> rows(tasks.size() * rows_per_task);

  std::atomic<std::size_t> next{0};
  const auto work = [&]() {
    for (;;) {
      const std::size_t task_index = next.fetch_add(1);
      if (task_index >= tasks.size()) return;
      const Task& task = tasks[task_index];

      ScenarioConfig scenario = spec.scenario;
      scenario.bad_rate = spec.bad_rate_grid[task.rate_index];
      const MeasurementSet set = generate(net, plan, truth, scenario, task.trial);

      std::size_t slot = task_index * rows_per_task;
      for (const double lambda : spec.lambda_grid) {
        for (const Model model : spec.models) {
          ResultRow row;
          row.model = model;
          row.case_name = case_name;
          row.family = spec.family;
          row.lambda = lambda;
          row.bad_rate = scenario.bad_rate;
          row.trial = task.trial;
          row.seed = trial_seed(scenario.seed, task.trial);

          EstimatorConfig cfg = spec.base_config;
          cfg.model = model;
          cfg.lambda = lambda;
          try {
            const EstimationResult res =
                estimate(net, plan, set.y, cfg, &truth,
                         spec.family == Family::Pmu ? &h_pmu : nullptr);
            row.error = res.error_vs_truth.value();
            row.objective = res.objective;
            row.gn_iters = res.gn_iterations;
            row.stages = res.stages;
            row.time_ms = std::max(res.wall_time * 1000.0, 1e-6);
            row.converged = true;
          } catch (const DivergenceError&) {
            row.converged = false;
            row.error = std::numeric_limits<double>::quiet_NaN();
            row.time_ms = 1e-6;
          } catch (const NonConvergenceError&) {
            row.converged = false;
            row.error = std::numeric_limits<double>::quiet_NaN();
            row.time_ms = 1e-6;
          } catch (const SingularMatrixError&) {
            row.converged = false;
            row.error = std::numeric_limits<double>::quiet_NaN();
            row.time_ms = 1e-6;
          }
          rows[slot++] = std::move(row);
        }
      }
    }
  };

  const int workers = worker_count(tasks.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw ValidationError("summarize: no rows");

  using Key = std::tuple<std::string, std::string, int, double, double>;
  std::map<Key, std::size_t> index;
  std::vector<SummaryRow> out;
  std::vector<std::vector<double>> errors;

  for (const ResultRow& row : rows) {
    const Key key{to_string(row.model), row.case_name, static_cast<int>(row.family),
                  row.lambda, row.bad_rate};
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      SummaryRow s;
      s.model = row.model;
      s.case_name = row.case_name;
      s.family = row.family;
      s.lambda = row.lambda;
      s.bad_rate = row.bad_rate;
      out.push_back(s);
      errors.emplace_back();
    }
    SummaryRow& s = out[it->second];
    s.trials += 1;
    if (row.converged) {
      s.converged += 1;
      errors[it->second].push_back(row.error);
      s.mean_error += row.error;
      s.mean_objective += row.objective;
      s.mean_gn_iters += row.gn_iters;
      s.mean_stages += row.stages;
      s.mean_time_ms += row.time_ms;
    } else {
      s.diverged += 1;
    }
  }

  for (std::size_t i = 0; i < out.size(); ++i) {
    SummaryRow& s = out[i];
    if (s.converged == 0) {
      s.mean_error = std::numeric_limits<double>::quiet_NaN();
      s.std_error = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double n = static_cast<double>(s.converged);
    s.mean_error /= n;
    s.mean_objective /= n;
    s.mean_gn_iters /= n;
    s.mean_stages /= n;
    s.mean_time_ms /= n;
    double ss = 0.0;
    for (const double e : errors[i]) ss += (e - s.mean_error) * (e - s.mean_error);
    s.std_error = s.converged > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return out;
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

constexpr const char* kRowsHeader =
    "model,case,family,lambda,bad_rate,trial,seed,error,objective,gn_iters,stages,"
    "time_ms,converged";

}  // namespace

void write_rows_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  out << "# gridse-results v1\n" << kRowsHeader << "\n";
  for (const ResultRow& row : rows) {
    out << to_string(row.model) << ',' << row.case_name << ',' << to_string(row.family)
        << ',' << format_double(row.lambda) << ',' << format_double(row.bad_rate) << ','
        << row.trial << ',' << row.seed << ','
        << (row.converged ? format_double(row.error) : std::string{}) << ','
        << format_double(row.objective) << ',' << row.gn_iters << ',' << row.stages << ','
        << format_double(row.time_ms) << ',' << (row.converged ? 1 : 0) << "\n";
  }
}

std::vector<ResultRow> read_rows_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::vector<ResultRow> rows;
  std::string line;
  int lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != kRowsHeader) {
        throw ParseError(path + ": unexpected header on line " + std::to_string(lineno));
      }
      saw_header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (fields.size() != 13) {
      throw ParseError(path + ": line " + std::to_string(lineno) + ": expected 13 fields");
    }
    try {
      ResultRow row;
      row.model = model_from_string(fields[0]);
      row.case_name = fields[1];
      row.family = family_from_string(fields[2]);
      row.lambda = std::stod(fields[3]);
      row.bad_rate = std::stod(fields[4]);
      row.trial = std::stoi(fields[5]);
      row.seed = std::stoull(fields[6]);
      row.error = fields[7].empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : std::stod(fields[7]);
      row.objective = std::stod(fields[8]);
      row.gn_iters = std::stoi(fields[9]);
      row.stages = std::stoi(fields[10]);
      row.time_ms = std::stod(fields[11]);
      row.converged = fields[12] == "1";
      rows.push_back(std::move(row));
    } catch (const std::invalid_argument&) {
      throw ParseError(path + ": line " + std::to_string(lineno) + ": malformed field");
    }
  }
  if (!saw_header) throw ParseError(path + ": missing header");
  return rows;
}

namespace {

constexpr const char* kSummaryHeader =
    "model,case,family,lambda,bad_rate,trials,converged,diverged,mean_error,std_error,"
    "mean_objective,mean_gn_iters,mean_stages,mean_time_ms";

void stream_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "# gridse-summary v1\n" << kSummaryHeader << "\n";
  for (const SummaryRow& s : rows) {
    out << to_string(s.model) << ',' << s.case_name << ',' << to_string(s.family) << ','
        << format_double(s.lambda) << ',' << format_double(s.bad_rate) << ',' << s.trials
        << ',' << s.converged << ',' << s.diverged << ','
        << (s.converged > 0 ? format_double(s.mean_error) : std::string{}) << ','
        << (s.converged > 0 ? format_double(s.std_error) : std::string{}) << ','
        << format_double(s.mean_objective) << ',' << format_double(s.mean_gn_iters) << ','
        << format_double(s.mean_stages) << ',' << format_double(s.mean_time_ms) << "\n";
  }
}

}  // namespace

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  stream_summary(out, rows);
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  stream_summary(os, rows);
  return os.str();
}

ExperimentSpec spec_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ParseError(path + ": " + err.what());
  }

  ExperimentSpec spec;
  spec.case_path = doc.at("case").get<std::string>();
  spec.family = family_from_string(doc.at("family").get<std::string>());
  if (doc.contains("models")) {
    spec.models.clear();
    for (const json& jm : doc.at("models")) {
      spec.models.push_back(model_from_string(jm.get<std::string>()));
    }
  }
  if (doc.contains("lambda_grid")) {
    spec.lambda_grid = doc.at("lambda_grid").get<std::vector<double>>();
  }
  if (doc.contains("bad_rate_grid")) {
    spec.bad_rate_grid = doc.at("bad_rate_grid").get<std::vector<double>>();
  }
  if (doc.contains("scenario")) {
    const json& js = doc.at("scenario");
    spec.scenario.seed = js.value("seed", spec.scenario.seed);
    spec.scenario.trials = js.value("trials", spec.scenario.trials);
    spec.scenario.gross_lo = js.value("gross_lo", spec.scenario.gross_lo);
    spec.scenario.gross_hi = js.value("gross_hi", spec.scenario.gross_hi);
  }
  spec.output_path = doc.value("output", std::string{});
  if (doc.contains("residual_form")) {
    const std::string form = doc.at("residual_form").get<std::string>();
    if (form == "l2") {
      spec.base_config.solver.residual_form = ResidualForm::L2;
    } else if (form == "l2_squared") {
      spec.base_config.solver.residual_form = ResidualForm::L2Squared;
    } else {
      throw ParseError(path + ": unknown residual_form \"" + form + "\"");
    }
  }
  return spec;
}

}  // namespace gridse
