// Command-line front end: run experiments, ablations, plots, rankings and the
// cross-validation study.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include "babo/benchmarks.hpp"
#include "babo/errors.hpp"
#include "babo/harness.hpp"

namespace fs = std::filesystem;
using namespace babo;

namespace {

void print_summary(const std::vector<SummaryRow>& rows) {
  std::printf("%-18s %-26s %5s %5s %14s %12s %6s\n", "function", "method", "reps", "fail", "mean_final", "se",
              "rank");
  for (const auto& r : rows) {
    std::printf("%-18s %-26s %5d %5d %14.6g %12.4g %6.2f\n", r.function.c_str(), r.method.c_str(), r.repetitions,
                r.failures, r.mean_final, r.se_final, r.rank);
  }
}

int cmd_run(const std::string& path, int workers, const std::string& output) {
  ExperimentConfig config = load_config(path);
  if (workers > 0) {
    config.workers = workers;
  }
  if (!output.empty()) {
    config.output_dir = output;
  }
  const ExperimentResult result = run_experiment(config);
  print_summary(result.summary);
  if (!result.traces.empty()) {
    for (const auto& p : plot_trace_dir(fs::path(config.output_dir) / "traces")) {
      std::printf("wrote %s\n", p.string().c_str());
    }
  }
  return result.failures.empty() ? 0 : 3;
}

int cmd_ablate(const std::string& suite, const std::string& function, const AblationOptions& options,
               int workers) {
  const auto configs = ablation_suite(suite, function, options);
  std::map<fs::path, std::vector<ExperimentConfig>> groups;
  for (const auto& c : configs) {
    groups[fs::path(c.output_dir).parent_path()].push_back(c);
  }
  int status = 0;
  for (const auto& [root, group] : groups) {
    std::vector<RegretTrace> traces;
    std::vector<FailureRecord> failures;
    std::vector<std::string> order;
    for (auto config : group) {
      if (workers > 0) {
        config.workers = workers;
      }
      save_config(config, fs::path(config.output_dir) / "config.json");
      std::printf("running %s\n", config.name.c_str());
      std::fflush(stdout);
      ExperimentResult r = run_experiment(config);
      traces.insert(traces.end(), r.traces.begin(), r.traces.end());
      failures.insert(failures.end(), r.failures.begin(), r.failures.end());
      for (const auto& m : config.methods) {
        order.push_back(m.name);
      }
    }
    const auto rows = summarize(traces, order, failures);
    write_summary_csv(rows, root / "summary.csv");
    print_summary(rows);
    if (!traces.empty()) {
      PlotStyle style;
      style.title = root.filename().string();
      const fs::path plot = root / "plots" / (function + ".svg");
      emit_plot(aggregate(traces), style, plot);
      std::printf("wrote %s\n", plot.string().c_str());
    }
    if (!failures.empty()) {
      status = 3;
    }
  }
  return status;
}

int cmd_plot(const std::string& dir, bool linear) {
  for (const auto& p : plot_trace_dir(dir, !linear)) {
    std::printf("wrote %s\n", p.string().c_str());
  }
  return 0;
}

int cmd_rank(const std::string& dir, const std::string& out) {
  fs::path d = dir;
  if (fs::is_directory(d / "traces")) {
    d /= "traces";
  }
  const auto traces = read_trace_dir(d);
  if (traces.empty()) {
    throw ConfigError("no trace files in " + d.string());
  }
  const auto rows = summarize(traces, {});
  print_summary(rows);
  if (!out.empty()) {
    write_summary_csv(rows, out);
  }
  return 0;
}

int cmd_crossval(int reps, int n_train, std::uint64_t seed) {
  std::printf("%-16s %-12s %12s %10s %6s\n", "objective", "surrogate", "mean_error", "se", "fail");
  for (SampleKind kind : {SampleKind::GP, SampleKind::SlogGP}) {
    for (SurrogateKind s : {SurrogateKind::GP, SurrogateKind::SlogGP}) {
      const CrossValidation cv = cross_validate(kind, s, reps, n_train, seed);
      std::printf("%-16s %-12s %12.4f %10.4f %6d\n", to_string(kind), s == SurrogateKind::GP ? "gp" : "sloggp",
                  cv.mean_error, cv.standard_error, cv.failures);
      std::fflush(stdout);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bound-aware Bayesian optimization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  int workers = 0;
  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output, "Override the output directory");
  run->add_option("-w,--workers", workers, "Worker threads (default: BABO_WORKERS or hardware threads)");

  std::string suite;
  std::string function;
  AblationOptions ablation;
  auto* ablate = app.add_subcommand("ablate", "Run an ablation or sensitivity suite on one function");
  ablate->add_option("suite", suite, "components, thresholds, prior_usage, bound_offsets or all")->required();
  ablate->add_option("function", function, "Function name, e.g. branin")->required();
  ablate->add_option("-r,--reps", ablation.repetitions, "Repetitions per configuration");
  ablate->add_option("-n,--iterations", ablation.iterations, "Iterations after the initial design");
  ablate->add_option("-s,--seed", ablation.seed, "Base seed");
  ablate->add_option("-o,--output", ablation.output_dir, "Output root");
  ablate->add_option("-w,--workers", workers, "Worker threads");

  std::string trace_dir;
  bool linear = false;
  auto* plot = app.add_subcommand("plot", "Plot mean regret +- 1 se from a trace directory");
  plot->add_option("trace-dir", trace_dir, "Directory holding traces/ or the trace CSVs")->required();
  plot->add_flag("--linear", linear, "Linear y axis instead of log");

  std::string rank_out;
  auto* rank = app.add_subcommand("rank", "Rank methods by mean final regret");
  rank->add_option("trace-dir", trace_dir, "Directory holding traces/ or the trace CSVs")->required();
  rank->add_option("-o,--output", rank_out, "Also write the table as CSV");

  int cv_reps = 50;
  int cv_train = 40;
  std::uint64_t cv_seed = 0;
  auto* crossval = app.add_subcommand("crossval", "Cross-validation of GP and SlogGP on sampled objectives");
  crossval->add_option("-r,--reps", cv_reps, "Repetitions");
  crossval->add_option("-t,--train", cv_train, "Training points per repetition");
  crossval->add_option("-s,--seed", cv_seed, "Base seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, workers, output);
    if (*ablate) return cmd_ablate(suite, function, ablation, workers);
    if (*plot) return cmd_plot(trace_dir, linear);
    if (*rank) return cmd_rank(trace_dir, rank_out);
    if (*crossval) return cmd_crossval(cv_reps, cv_train, cv_seed);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
