#pragma once

// Experiment configuration, the repetition runner, CSV persistence,
// aggregation, ranking and plotting.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "babo/babo_loop.hpp"

namespace babo {

enum class BoundMode { Exact, Custom, None };

const char* to_string(BoundMode mode);

struct BoundConfig {
  BoundMode mode = BoundMode::Exact;
  double f_b = 0.0;  ///< used by BoundMode::Custom
};

/// A method entry: a registered method, optionally renamed and with flags
/// overridden (see `method_from_json`).
struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<std::string> functions;
  std::vector<MethodSpec> methods;
  int repetitions = 30;
  int iterations = 60;
  int batch_size = 1;
  int mc_samples = 256;
  int fit_starts = 8;
  BoundConfig bound;
  Thresholds thresholds;
  std::uint64_t seed = 0;
  std::string output_dir = "results";
  int workers = 0;  ///< 0: BABO_WORKERS, else the hardware thread count

  /// Throws ConfigError on unknown functions or methods and on
  /// non-positive counts or thresholds.
  void validate() const;
};

/// JSON round trip. Methods serialize as their registered name when they
/// match it, otherwise as {"name", "base", flag overrides...}.
std::string to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

/// Test-function names plus "gp_sample" / "sloggp_sample" (2-D objectives
/// drawn from the priors, one realization per repetition).
bool is_known_function(const std::string& name);
Problem make_problem(const std::string& function, std::uint64_t seed, int repetition);

struct FailureRecord {
  std::string function;
  std::string method;
  int repetition = 0;
  std::string message;
};

struct SummaryRow {
  std::string function;  ///< "average" for the average-rank rows
  std::string method;
  int repetitions = 0;
  int failures = 0;
  double mean_final = 0.0;  ///< final simple regret, or best value when f* is unknown
  double se_final = 0.0;
  double rank = 0.0;
};

struct ExperimentResult {
  std::vector<RegretTrace> traces;
  std::vector<FailureRecord> failures;
  std::vector<SummaryRow> summary;
};

/// Runs functions x methods x repetitions on a worker pool. Output files
/// (unless `write_files` is false) go under config.output_dir:
/// traces/<function>__<method>__rep<k>.csv and summary.csv.
ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files = true);

/// Best value after each post-initialization iteration.
std::vector<double> iteration_best(const RegretTrace& trace);
/// Simple regret after each post-initialization iteration (empty without f*).
std::vector<double> iteration_regret(const RegretTrace& trace);

void write_trace_csv(const RegretTrace& trace, const std::filesystem::path& path);
/// Reads every <function>__<method>__rep<k>.csv in `dir`; the returned traces
/// hold post-initialization values only.
std::vector<RegretTrace> read_trace_dir(const std::filesystem::path& dir);

/// Ranks methods per function by mean final regret (ties keep `method_order`)
/// and appends one "average" row per method.
std::vector<SummaryRow> summarize(const std::vector<RegretTrace>& traces, const std::vector<std::string>& method_order,
                                  const std::vector<FailureRecord>& failures = {});
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);

struct Aggregate {
  std::string method;
  int count = 0;
  std::vector<double> mean;
  std::vector<double> se;  ///< sd / sqrt(count); 0 for a single trace
};

/// Per-iteration mean and standard error of the regret (best value when any
/// trace lacks f*), grouped by method in order of first appearance.
/// Throws ConfigError on ragged traces within a method.
std::vector<Aggregate> aggregate(const std::vector<RegretTrace>& traces);

struct PlotStyle {
  std::string title;
  std::string y_label = "simple regret";
  bool log_y = true;
  int width = 720;
  int height = 480;
};

inline constexpr double kLogFloor = 1e-12;

/// SVG line plot with a shaded +-1 se band per method and a legend.
/// Throws ConfigError on empty input.
void emit_plot(const std::vector<Aggregate>& series, const PlotStyle& style, const std::filesystem::path& path);

/// Plots every function found in a trace directory into <output>/plots.
std::vector<std::filesystem::path> plot_trace_dir(const std::filesystem::path& trace_dir, bool log_y = true);

struct AblationOptions {
  int repetitions = 10;
  int iterations = 40;
  std::uint64_t seed = 0;
  std::string output_dir = "ablation";
};

/// components, thresholds, prior_usage, bound_offsets, all.
std::vector<std::string> ablation_suite_names();
/// Throws ConfigError for an unknown suite or function.
std::vector<ExperimentConfig> ablation_suite(const std::string& suite, const std::string& function,
                                             const AblationOptions& options = {});

struct ThresholdGrid {
  std::vector<double> delta1;
  std::vector<double> delta2;
  std::vector<double> delta3;
};
ThresholdGrid sensitivity_grid();
std::vector<double> bound_offsets();

/// Worker count: BABO_WORKERS when set to a positive integer, otherwise the
/// hardware thread count (at least 1).
int default_worker_count();

}  // namespace babo
