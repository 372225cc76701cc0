#include "babo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <regex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "babo/benchmarks.hpp"
#include "babo/errors.hpp"
#include "babo/log.hpp"
#include "babo/sampling.hpp"

namespace babo {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(BoundMode mode) {
  switch (mode) {
    case BoundMode::Exact:
      return "exact";
    case BoundMode::Custom:
      return "custom";
    case BoundMode::None:
      return "none";
  }
  return "?";
}

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) {
    return "NA";
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "NA" || s.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
      throw ConfigError("bad number: " + s);
    }
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("bad number: " + s);
  }
}

Surrogate surrogate_from_string(const std::string& s) {
  for (Surrogate v : {Surrogate::None, Surrogate::GP, Surrogate::SlogGP}) {
    if (s == to_string(v)) {
      return v;
    }
  }
  throw ConfigError("unknown surrogate: " + s);
}

Criterion criterion_from_string(const std::string& s) {
  for (Criterion c : {Criterion::Random, Criterion::EI, Criterion::TEI, Criterion::MES_b, Criterion::SlogEI,
                      Criterion::SlogTEI}) {
    if (s == to_string(c)) {
      return c;
    }
  }
  throw ConfigError("unknown acquisition: " + s);
}

bool same_method(const MethodSpec& a, const MethodSpec& b) {
  return a.name == b.name && a.surrogate == b.surrogate && a.acquisition == b.acquisition &&
         a.bound_in_model == b.bound_in_model && a.bound_in_acquisition == b.bound_in_acquisition &&
         a.shift_at_bound == b.shift_at_bound && a.conflict_detection == b.conflict_detection &&
         a.variance_gate == b.variance_gate;
}

bool is_registered(const std::string& name) {
  const auto names = method_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

json method_to_json(const MethodSpec& m) {
  if (is_registered(m.name) && same_method(m, method_by_name(m.name))) {
    return m.name;
  }
  return json{{"name", m.name},
              {"surrogate", to_string(m.surrogate)},
              {"acquisition", to_string(m.acquisition)},
              {"bound_in_model", m.bound_in_model},
              {"bound_in_acquisition", m.bound_in_acquisition},
              {"shift_at_bound", m.shift_at_bound},
              {"conflict_detection", m.conflict_detection},
              {"variance_gate", m.variance_gate}};
}

MethodSpec method_from_json(const json& j) {
  if (j.is_string()) {
    return method_by_name(j.get<std::string>());
  }
  if (!j.is_object() || !j.contains("name")) {
    throw ConfigError("a method entry must be a name or an object with a \"name\"");
  }
  const auto name = j.at("name").get<std::string>();
  MethodSpec m;
  if (j.contains("base")) {
    m = method_by_name(j.at("base").get<std::string>());
  } else if (is_registered(name)) {
    m = method_by_name(name);
  }
  m.name = name;
  if (j.contains("surrogate")) m.surrogate = surrogate_from_string(j.at("surrogate").get<std::string>());
  if (j.contains("acquisition")) m.acquisition = criterion_from_string(j.at("acquisition").get<std::string>());
  if (j.contains("bound_in_model")) m.bound_in_model = j.at("bound_in_model").get<bool>();
  if (j.contains("bound_in_acquisition")) m.bound_in_acquisition = j.at("bound_in_acquisition").get<bool>();
  if (j.contains("shift_at_bound")) m.shift_at_bound = j.at("shift_at_bound").get<bool>();
  if (j.contains("conflict_detection")) m.conflict_detection = j.at("conflict_detection").get<bool>();
  if (j.contains("variance_gate")) m.variance_gate = j.at("variance_gate").get<bool>();
  return m;
}

bool is_sampled(const std::string& name) { return name == "gp_sample" || name == "sloggp_sample"; }

}  // namespace

void ExperimentConfig::validate() const {
  if (functions.empty() || methods.empty()) {
    throw ConfigError(name + ": needs at least one function and one method");
  }
  if (repetitions < 1 || iterations < 1 || batch_size < 1 || mc_samples < 1 || fit_starts < 1) {
    throw ConfigError(name + ": repetitions, iterations, batch_size, mc_samples and fit_starts must be positive");
  }
  try {
    thresholds.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(name + ": " + e.what());
  }
  for (const auto& fn : functions) {
    if (!is_known_function(fn)) {
      throw ConfigError(name + ": unknown function " + fn);
    }
  }
  std::vector<std::string> seen;
  for (const auto& m : methods) {
    m.validate();
    if (std::find(seen.begin(), seen.end(), m.name) != seen.end()) {
      throw ConfigError(name + ": duplicate method name " + m.name);
    }
    if (m.name.find("__") != std::string::npos || m.name.find('/') != std::string::npos) {
      throw ConfigError(name + ": method names may not contain \"__\" or '/'");
    }
    seen.push_back(m.name);
    if (m.needs_bound() && bound.mode == BoundMode::None) {
      throw ConfigError(name + ": method " + m.name + " needs a bound but the bound mode is none");
    }
    if (batch_size > 1 && (m.acquisition == Criterion::TEI || m.acquisition == Criterion::MES_b)) {
      throw ConfigError(name + ": method " + m.name + " does not support batches");
    }
  }
  if (bound.mode == BoundMode::Custom && !std::isfinite(bound.f_b)) {
    throw ConfigError(name + ": custom bound must be finite");
  }
}

std::string to_json(const ExperimentConfig& c) {
  json methods = json::array();
  for (const auto& m : c.methods) {
    methods.push_back(method_to_json(m));
  }
  json bound{{"mode", to_string(c.bound.mode)}};
  if (c.bound.mode == BoundMode::Custom) {
    bound["f_b"] = c.bound.f_b;
  }
  const json j{{"name", c.name},
               {"functions", c.functions},
               {"methods", methods},
               {"repetitions", c.repetitions},
               {"iterations", c.iterations},
               {"batch_size", c.batch_size},
               {"mc_samples", c.mc_samples},
               {"fit_starts", c.fit_starts},
               {"bound", bound},
               {"thresholds",
                {{"delta1", c.thresholds.delta1}, {"delta2", c.thresholds.delta2}, {"delta3", c.thresholds.delta3}}},
               {"seed", c.seed},
               {"output_dir", c.output_dir},
               {"workers", c.workers}};
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) {
      throw ConfigError("config must be a JSON object");
    }
    static const std::vector<std::string> keys = {"name",     "functions", "methods",    "repetitions", "iterations",
                                                  "batch_size", "mc_samples", "fit_starts", "bound",       "thresholds",
                                                  "seed",     "output_dir", "workers"};
    for (const auto& [key, value] : j.items()) {
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw ConfigError("unknown config key: " + key);
      }
    }
    c.name = j.value("name", c.name);
    if (j.contains("functions")) {
      const auto& f = j.at("functions");
      c.functions = f.is_string() ? std::vector<std::string>{f.get<std::string>()} : f.get<std::vector<std::string>>();
    }
    if (j.contains("methods")) {
      for (const auto& m : j.at("methods")) {
        c.methods.push_back(method_from_json(m));
      }
    }
    c.repetitions = j.value("repetitions", c.repetitions);
    c.iterations = j.value("iterations", c.iterations);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.mc_samples = j.value("mc_samples", c.mc_samples);
    c.fit_starts = j.value("fit_starts", c.fit_starts);
    if (j.contains("bound")) {
      const auto& b = j.at("bound");
      const std::string mode = b.is_string() ? b.get<std::string>() : b.value("mode", std::string("exact"));
      if (mode == "exact") {
        c.bound.mode = BoundMode::Exact;
      } else if (mode == "custom") {
        c.bound.mode = BoundMode::Custom;
        if (!b.is_object() || !b.contains("f_b")) {
          throw ConfigError("custom bound needs \"f_b\"");
        }
        c.bound.f_b = b.at("f_b").get<double>();
      } else if (mode == "none") {
        c.bound.mode = BoundMode::None;
      } else {
        throw ConfigError("unknown bound mode: " + mode);
      }
    }
    if (j.contains("thresholds")) {
      const auto& t = j.at("thresholds");
      c.thresholds.delta1 = t.value("delta1", c.thresholds.delta1);
      c.thresholds.delta2 = t.value("delta2", c.thresholds.delta2);
      c.thresholds.delta3 = t.value("delta3", c.thresholds.delta3);
    }
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const ExperimentConfig& config, const fs::path& path) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  out << to_json(config);
}

bool is_known_function(const std::string& name) {
  if (is_sampled(name)) {
    return true;
  }
  const auto& fns = test_functions();
  return std::any_of(fns.begin(), fns.end(), [&](const TestFunction& f) { return f.name == name; });
}

Problem make_problem(const std::string& function, std::uint64_t seed, int repetition) {
  Problem p;
  p.name = function;
  if (is_sampled(function)) {
    const SampleKind kind = function == "gp_sample" ? SampleKind::GP : SampleKind::SlogGP;
    auto objective = std::make_shared<const SampledObjective>(
        SampleParams::defaults(kind), derive_seed(seed, "objective:" + function, static_cast<std::uint64_t>(repetition)));
    p.dim = objective->params().dim;
    p.optimum = objective->estimated_minimum();
    p.objective = [objective](const Eigen::VectorXd& x) { return (*objective)(x); };
    return p;
  }
  const TestFunction& fn = find_test_function(function);
  p.dim = fn.dim;
  p.optimum = fn.optimal_value;
  const UnitCubeObjective unit = scale_inputs(fn);
  p.objective = [unit](const Eigen::VectorXd& x) { return unit(x); };
  return p;
}

int default_worker_count() {
  if (const char* env = std::getenv("BABO_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) {
        return n;
      }
    } catch (const std::exception&) {
    }
    log_warning("ignoring invalid BABO_WORKERS value");
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

std::vector<double> iteration_best(const RegretTrace& trace) {
  const std::size_t steps = trace.steps.size();
  const auto n0 = static_cast<std::size_t>(trace.initial_points);
  if (steps == 0 || trace.best_values.size() < n0 + steps) {
    return {};
  }
  const std::size_t q = (trace.best_values.size() - n0) / steps;
  std::vector<double> out(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    out[t] = trace.best_values[n0 + (t + 1) * q - 1];
  }
  return out;
}

std::vector<double> iteration_regret(const RegretTrace& trace) {
  if (trace.regrets.size() != trace.best_values.size() || trace.regrets.empty()) {
    return {};
  }
  std::vector<double> best = iteration_best(trace);
  const double offset = trace.best_values.front() - trace.regrets.front();
  for (double& b : best) {
    b -= offset;
  }
  return best;
}

void write_trace_csv(const RegretTrace& trace, const fs::path& path) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  const auto best = iteration_best(trace);
  const auto regret = iteration_regret(trace);
  out << "iteration,best_value,regret,zeta_hat,fit_mode,conflict,U\n";
  for (std::size_t t = 0; t < best.size(); ++t) {
    const StepDiagnostics& s = trace.steps[t];
    const bool slog = !std::isnan(s.zeta_hat);
    out << (t + 1) << ',' << format_double(best[t]) << ','
        << (regret.empty() ? std::string("NA") : format_double(regret[t])) << ',' << format_double(s.zeta_hat) << ','
        << (slog ? to_string(s.fit_mode) : "NA") << ',' << (s.conflict ? 1 : 0) << ',' << format_double(s.uncertainty)
        << '\n';
  }
}

std::vector<RegretTrace> read_trace_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ConfigError("not a directory: " + dir.string());
  }
  static const std::regex name_re(R"(^(.+)__(.+)__rep(\d+)\.csv$)");
  std::vector<RegretTrace> traces;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    std::smatch m;
    if (!entry.is_regular_file() || !std::regex_match(file, m, name_re)) {
      continue;
    }
    RegretTrace tr;
    tr.problem = m[1];
    tr.method = m[2];
    tr.repetition = std::stoi(m[3]);
    std::ifstream in(entry.path());
    std::string line;
    if (!std::getline(in, line) || line != "iteration,best_value,regret,zeta_hat,fit_mode,conflict,U") {
      throw ConfigError("unexpected trace header in " + file);
    }
    bool all_regret = true;
    while (std::getline(in, line)) {
      if (line.empty()) {
        continue;
      }
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
      }
      if (cells.size() != 7) {
        throw ConfigError("malformed row in " + file);
      }
      tr.best_values.push_back(parse_double(cells[1]));
      const double r = parse_double(cells[2]);
      all_regret = all_regret && !std::isnan(r);
      tr.regrets.push_back(r);
      StepDiagnostics s;
      s.iteration = std::stoi(cells[0]) - 1;
      s.zeta_hat = parse_double(cells[3]);
      s.fit_mode = cells[4] == "MAP" ? FitMode::MAP : cells[4] == "FIXED" ? FitMode::Fixed : FitMode::MLE;
      s.conflict = cells[5] == "1";
      s.uncertainty = parse_double(cells[6]);
      tr.steps.push_back(s);
    }
    if (!all_regret) {
      tr.regrets.clear();
    }
    traces.push_back(std::move(tr));
  }
  std::sort(traces.begin(), traces.end(), [](const RegretTrace& a, const RegretTrace& b) {
    return std::tie(a.problem, a.method, a.repetition) < std::tie(b.problem, b.method, b.repetition);
  });
  return traces;
}

namespace {

double final_metric(const RegretTrace& t) {
  const auto r = iteration_regret(t);
  if (!r.empty()) {
    return r.back();
  }
  const auto b = iteration_best(t);
  return b.empty() ? std::numeric_limits<double>::quiet_NaN() : b.back();
}

void mean_se(const std::vector<double>& xs, double& mean, double& se) {
  const auto n = static_cast<double>(xs.size());
  mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  se = 0.0;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) {
      ss += (x - mean) * (x - mean);
    }
    se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
}

template <typename T>
void push_unique(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) {
    v.push_back(x);
  }
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<RegretTrace>& traces, const std::vector<std::string>& method_order,
                                  const std::vector<FailureRecord>& failures) {
  std::vector<std::string> functions;
  std::vector<std::string> methods = method_order;
  for (const auto& t : traces) {
    push_unique(functions, t.problem);
    push_unique(methods, t.method);
  }
  for (const auto& f : failures) {
    push_unique(functions, f.function);
    push_unique(methods, f.method);
  }
  std::vector<SummaryRow> rows;
  std::map<std::string, std::vector<double>> ranks;
  for (const auto& fn : functions) {
    std::vector<SummaryRow> block;
    for (const auto& m : methods) {
      SummaryRow row;
      row.function = fn;
      row.method = m;
      std::vector<double> finals;
      for (const auto& t : traces) {
        if (t.problem == fn && t.method == m) {
          finals.push_back(final_metric(t));
        }
      }
      row.failures = static_cast<int>(std::count_if(failures.begin(), failures.end(), [&](const FailureRecord& f) {
        return f.function == fn && f.method == m;
      }));
      row.repetitions = static_cast<int>(finals.size());
      if (finals.empty() && row.failures == 0) {
        continue;
      }
      if (finals.empty()) {
        row.mean_final = std::numeric_limits<double>::quiet_NaN();
        row.se_final = std::numeric_limits<double>::quiet_NaN();
      } else {
        mean_se(finals, row.mean_final, row.se_final);
      }
      block.push_back(row);
    }
    std::vector<std::size_t> order(block.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double x = block[a].mean_final;
      const double y = block[b].mean_final;
      if (std::isnan(x) || std::isnan(y)) {
        return !std::isnan(x) && std::isnan(y);
      }
      return x < y;
    });
    // tied means (or two failed methods) share the average of their positions
    const auto tied = [&](std::size_t a, std::size_t b) {
      const double x = block[a].mean_final;
      const double y = block[b].mean_final;
      return x == y || (std::isnan(x) && std::isnan(y));
    };
    for (std::size_t lo = 0; lo < order.size();) {
      std::size_t hi = lo + 1;
      while (hi < order.size() && tied(order[lo], order[hi])) ++hi;
      for (std::size_t pos = lo; pos < hi; ++pos) {
        block[order[pos]].rank = 0.5 * static_cast<double>(lo + 1 + hi);
      }
      lo = hi;
    }
    for (const auto& row : block) {
      ranks[row.method].push_back(row.rank);
      rows.push_back(row);
    }
  }
  for (const auto& m : methods) {
    const auto it = ranks.find(m);
    if (it == ranks.end()) {
      continue;
    }
    SummaryRow avg;
    avg.function = "average";
    avg.method = m;
    for (const auto& row : rows) {
      if (row.method == m) {
        avg.repetitions += row.repetitions;
        avg.failures += row.failures;
      }
    }
    avg.mean_final = std::numeric_limits<double>::quiet_NaN();
    avg.se_final = std::numeric_limits<double>::quiet_NaN();
    avg.rank = std::accumulate(it->second.begin(), it->second.end(), 0.0) / static_cast<double>(it->second.size());
    rows.push_back(avg);
  }
  return rows;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const fs::path& path) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  out << "function,method,repetitions,failures,mean_final,se_final,rank\n";
  for (const auto& r : rows) {
    out << r.function << ',' << r.method << ',' << r.repetitions << ',' << r.failures << ','
        << format_double(r.mean_final) << ',' << format_double(r.se_final) << ',' << format_double(r.rank) << '\n';
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files) {
  config.validate();
  struct Job {
    std::size_t function;
    std::size_t method;
    int repetition;
  };
  std::vector<Job> jobs;
  for (std::size_t f = 0; f < config.functions.size(); ++f) {
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      for (int r = 0; r < config.repetitions; ++r) {
        jobs.push_back({f, m, r});
      }
    }
  }
  const fs::path trace_dir = fs::path(config.output_dir) / "traces";
  if (write_files) {
    fs::create_directories(trace_dir);
  }
  std::vector<std::optional<RegretTrace>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());

  auto run_job = [&](std::size_t i) {
    const Job& job = jobs[i];
    const std::string& fn = config.functions[job.function];
    const MethodSpec& method = config.methods[job.method];
    try {
      const std::uint64_t seed = derive_seed(config.seed, fn);
      const Problem problem = make_problem(fn, config.seed, job.repetition);
      LoopConfig lc;
      lc.iterations = config.iterations;
      lc.batch_size = config.batch_size;
      lc.mc_samples = config.mc_samples;
      lc.fit_starts = config.fit_starts;
      lc.thresholds = config.thresholds;
      if (config.bound.mode == BoundMode::Exact) {
        lc.f_b = problem.optimum;
      } else if (config.bound.mode == BoundMode::Custom) {
        lc.f_b = config.bound.f_b;
      }
      RegretTrace trace = run_loop(problem, lc, method, seed, job.repetition);
      if (write_files) {
        write_trace_csv(trace, trace_dir / (fn + "__" + method.name + "__rep" + std::to_string(job.repetition) + ".csv"));
      }
      results[i] = std::move(trace);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      if (errors[i].empty()) {
        errors[i] = "unknown failure";
      }
    }
  };

  const int workers = std::min<int>(config.workers > 0 ? config.workers : default_worker_count(),
                                    static_cast<int>(jobs.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      run_job(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
          run_job(i);
        }
      });
    }
    for (auto& t : pool) {
      t.join();
    }
  }

  ExperimentResult result;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (results[i]) {
      result.traces.push_back(std::move(*results[i]));
    } else {
      FailureRecord f{config.functions[jobs[i].function], config.methods[jobs[i].method].name, jobs[i].repetition,
                      errors[i]};
      log_warning("repetition failed (" + f.function + ", " + f.method + ", rep " + std::to_string(f.repetition) +
                  "): " + f.message);
      result.failures.push_back(std::move(f));
    }
  }
  std::vector<std::string> order;
  for (const auto& m : config.methods) {
    order.push_back(m.name);
  }
  result.summary = summarize(result.traces, order, result.failures);
  if (write_files) {
    write_summary_csv(result.summary, fs::path(config.output_dir) / "summary.csv");
  }
  return result;
}

std::vector<Aggregate> aggregate(const std::vector<RegretTrace>& traces) {
  std::vector<std::string> methods;
  for (const auto& t : traces) {
    push_unique(methods, t.method);
  }
  std::vector<Aggregate> out;
  for (const auto& m : methods) {
    std::vector<const RegretTrace*> group;
    bool with_regret = true;
    for (const auto& t : traces) {
      if (t.method == m) {
        group.push_back(&t);
        with_regret = with_regret && !iteration_regret(t).empty();
      }
    }
    std::vector<std::vector<double>> series;
    for (const auto* t : group) {
      series.push_back(with_regret ? iteration_regret(*t) : iteration_best(*t));
    }
    const std::size_t len = series.front().size();
    for (const auto& s : series) {
      if (s.size() != len) {
        throw ConfigError("aggregate: traces of method " + m + " have different lengths");
      }
    }
    Aggregate agg;
    agg.method = m;
    agg.count = static_cast<int>(series.size());
    agg.mean.resize(len);
    agg.se.resize(len);
    std::vector<double> column(series.size());
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t k = 0; k < series.size(); ++k) {
        column[k] = series[k][i];
      }
      mean_se(column, agg.mean[i], agg.se[i]);
    }
    out.push_back(std::move(agg));
  }
  return out;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

const char* palette(std::size_t i) {
  static const char* colors[] = {"#000000", "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % (sizeof colors / sizeof colors[0])];
}

}  // namespace

void emit_plot(const std::vector<Aggregate>& series, const PlotStyle& style, const fs::path& path) {
  if (series.empty()) {
    throw ConfigError("emit_plot: nothing to plot");
  }
  std::size_t len = 0;
  for (const auto& s : series) {
    len = std::max(len, s.mean.size());
  }
  if (len == 0) {
    throw ConfigError("emit_plot: empty series");
  }
  auto transform = [&](double v) { return style.log_y ? std::log10(std::max(v, kLogFloor)) : v; };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.mean.size(); ++i) {
      for (double v : {s.mean[i] - s.se[i], s.mean[i] + s.se[i]}) {
        if (std::isfinite(v)) {
          lo = std::min(lo, transform(v));
          hi = std::max(hi, transform(v));
        }
      }
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double left = 80.0;
  const double right = 200.0;
  const double top = 40.0;
  const double bottom = 50.0;
  const double pw = style.width - left - right;
  const double ph = style.height - top - bottom;
  const double x_max = len > 1 ? static_cast<double>(len) : 2.0;
  auto px = [&](std::size_t i) { return left + pw * (static_cast<double>(i + 1) - 1.0) / (x_max - 1.0); };
  auto py = [&](double v) { return top + ph * (1.0 - (transform(v) - lo) / (hi - lo)); };
  auto pyt = [&](double t) { return top + ph * (1.0 - (t - lo) / (hi - lo)); };

  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  char buf[128];
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\"" << style.height
      << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << xml_escape(style.title) << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double t = lo + (hi - lo) * k / 4.0;
    const double y = pyt(t);
    if (style.log_y) {
      std::snprintf(buf, sizeof buf, "1e%.1f", t);
    } else {
      std::snprintf(buf, sizeof buf, "%.3g", t);
    }
    out << "<line x1=\"" << left - 4 << "\" y1=\"" << y << "\" x2=\"" << left << "\" y2=\"" << y
        << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << buf
        << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double it = 1.0 + (x_max - 1.0) * k / 4.0;
    const double x = left + pw * (it - 1.0) / (x_max - 1.0);
    std::snprintf(buf, sizeof buf, "%.0f", it);
    out << "<text x=\"" << x << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\" font-size=\"11\">" << buf
        << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << style.height - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">iteration</text>\n";
  out << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << top + ph / 2 << ")\">" << xml_escape(style.y_label) << (style.log_y ? " (log)" : "") << "</text>\n";

  for (std::size_t m = 0; m < series.size(); ++m) {
    const auto& s = series[m];
    const char* color = palette(m);
    std::ostringstream band;
    std::ostringstream line;
    for (std::size_t i = 0; i < s.mean.size(); ++i) {
      band << px(i) << ',' << py(s.mean[i] + s.se[i]) << ' ';
      line << px(i) << ',' << py(s.mean[i]) << ' ';
    }
    for (std::size_t i = s.mean.size(); i-- > 0;) {
      band << px(i) << ',' << py(s.mean[i] - s.se[i]) << ' ';
    }
    out << "<polygon points=\"" << band.str() << "\" fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    out << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"/>\n";
  }
  out << "<g class=\"legend\">\n";
  for (std::size_t m = 0; m < series.size(); ++m) {
    const double y = top + 12 + 20.0 * static_cast<double>(m);
    const double x = left + pw + 16;
    out << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 22 << "\" y2=\"" << y << "\" stroke=\""
        << palette(m) << "\" stroke-width=\"2\"/>\n";
    out << "<text class=\"legend-entry\" x=\"" << x + 28 << "\" y=\"" << y + 4 << "\" font-size=\"12\">"
        << xml_escape(series[m].method) << "</text>\n";
  }
  out << "</g>\n</svg>\n";
}

std::vector<fs::path> plot_trace_dir(const fs::path& trace_dir, bool log_y) {
  fs::path dir = trace_dir;
  if (fs::is_directory(dir / "traces")) {
    dir /= "traces";
  }
  const auto traces = read_trace_dir(dir);
  if (traces.empty()) {
    throw ConfigError("no trace files in " + dir.string());
  }
  const fs::path plot_dir = fs::absolute(dir).parent_path() / "plots";
  std::vector<std::string> functions;
  for (const auto& t : traces) {
    push_unique(functions, t.problem);
  }
  std::vector<fs::path> written;
  for (const auto& fn : functions) {
    std::vector<RegretTrace> subset;
    for (const auto& t : traces) {
      if (t.problem == fn) {
        subset.push_back(t);
      }
    }
    const auto aggs = aggregate(subset);
    PlotStyle style;
    style.title = fn;
    style.log_y = log_y;
    style.y_label = subset.front().regrets.empty() ? "best value" : "simple regret";
    const fs::path path = plot_dir / (fn + ".svg");
    emit_plot(aggs, style, path);
    written.push_back(path);
  }
  return written;
}

ThresholdGrid sensitivity_grid() { return {{0.01, 0.1, 1.0}, {0.001, 0.01, 0.05}, {0.1 * 0.1, 0.25 * 0.25, 0.5 * 0.5}}; }

std::vector<double> bound_offsets() { return {0.0, 0.1, 1.0, 10.0}; }

std::vector<std::string> ablation_suite_names() { return {"components", "thresholds", "prior_usage", "bound_offsets", "all"}; }

std::vector<ExperimentConfig> ablation_suite(const std::string& suite, const std::string& function,
                                             const AblationOptions& options) {
  if (!is_known_function(function)) {
    throw ConfigError("unknown function: " + function);
  }
  const auto names = ablation_suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    throw ConfigError("unknown ablation suite: " + suite);
  }
  if (suite == "all") {
    std::vector<ExperimentConfig> all;
    for (const auto& s : names) {
      if (s == "all" || (s == "bound_offsets" && is_sampled(function))) {
        continue;
      }
      auto part = ablation_suite(s, function, options);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  const fs::path root = fs::path(options.output_dir) / (suite + "_" + function);
  auto base = [&](const std::string& name) {
    ExperimentConfig c;
    c.name = name;
    c.functions = {function};
    c.repetitions = options.repetitions;
    c.iterations = options.iterations;
    c.seed = options.seed;
    c.output_dir = (root / name).string();
    return c;
  };
  auto renamed = [](const std::string& base_name, const std::string& label) {
    MethodSpec m = method_by_name(base_name);
    m.name = label;
    return m;
  };
  std::vector<ExperimentConfig> out;
  if (suite == "components") {
    ExperimentConfig c = base("components");
    for (const char* m : {"babo", "sloggp_b_slogei", "sloggp_slogtei", "sloggp_slogei", "gp_ei"}) {
      c.methods.push_back(method_by_name(m));
    }
    out.push_back(c);
  } else if (suite == "thresholds") {
    const ThresholdGrid grid = sensitivity_grid();
    auto add = [&](const std::string& label, double v, auto set) {
      ExperimentConfig c = base(label + "_" + short_double(v));
      set(c.thresholds, v);
      c.methods.push_back(renamed("babo", "babo_" + label + "_" + short_double(v)));
      out.push_back(c);
    };
    for (double v : grid.delta1) add("delta1", v, [](Thresholds& t, double x) { t.delta1 = x; });
    for (double v : grid.delta2) add("delta2", v, [](Thresholds& t, double x) { t.delta2 = x; });
    for (double v : grid.delta3) add("delta3", v, [](Thresholds& t, double x) { t.delta3 = x; });
  } else if (suite == "prior_usage") {
    ExperimentConfig c = base("prior_usage");
    for (const char* m : {"babo_map_only", "babo_map_u", "babo"}) {
      c.methods.push_back(method_by_name(m));
    }
    out.push_back(c);
  } else if (suite == "bound_offsets") {
    if (is_sampled(function)) {
      throw ConfigError("bound_offsets needs a test function with a known optimum");
    }
    const double f_star = *find_test_function(function).optimal_value;
    for (double off : bound_offsets()) {
      ExperimentConfig c = base("offset_" + short_double(off));
      c.bound.mode = BoundMode::Custom;
      c.bound.f_b = f_star - off;
      c.methods.push_back(renamed("babo", "babo_fb_minus_" + short_double(off)));
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace babo
