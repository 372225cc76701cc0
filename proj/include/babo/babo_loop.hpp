#pragma once

// Bound-aware Bayesian optimization (BABO) and the baseline loops it is
// compared against. Inputs live in the unit cube; values stay in raw units in
// the state and are rescaled afresh every iteration.

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "babo/acquisitions.hpp"
#include "babo/gp_core.hpp"
#include "babo/sloggp.hpp"

namespace babo {

struct Thresholds {
  double delta1 = 0.1;     ///< prior mean of -shift sits delta1 below f_b
  double delta2 = 0.01;    ///< prior CDF tail that flags a conflict
  double delta3 = 0.0625;  ///< minimum latent signal variance for a MAP fit

  /// Throws InvalidArgument unless delta1 > 0, delta2 in (0, 0.5), delta3 > 0.
  void validate() const;
};

enum class Surrogate { None, GP, SlogGP };

const char* to_string(Surrogate s);

struct MethodSpec {
  std::string name;
  Surrogate surrogate = Surrogate::SlogGP;
  Criterion acquisition = Criterion::SlogTEI;
  bool bound_in_model = false;  ///< MAP fit under the shift prior
  bool bound_in_acquisition = false;
  bool shift_at_bound = false;  ///< hold the shift at -f_b instead of fitting it
  bool conflict_detection = true;
  bool variance_gate = true;

  /// Throws ConfigError for inconsistent combinations.
  void validate() const;
  [[nodiscard]] bool needs_bound() const;
};

/// babo, babo_fixed, gp_ei, gp_tei, gp_mesb, random, sloggp_slogei,
/// sloggp_b_slogei, sloggp_slogtei, babo_map_only, babo_map_u.
std::vector<std::string> method_names();
/// Throws ConfigError for unknown names.
MethodSpec method_by_name(const std::string& name);

/// Objective on the unit cube.
using UnitObjective = std::function<double(const Eigen::VectorXd&)>;

struct LoopState {
  Dataset data{1};
  std::optional<double> f_b;  ///< raw units; only read by methods that use a bound
  Thresholds thresholds;
  double uncertainty = 1.0;  ///< U; never decreases
  std::optional<double> previous_signal_variance;
  std::optional<SlogWarmStart> slog_warm;  ///< shift in raw units
  std::optional<GPHyperparams> gp_warm;
  int iteration = 0;
  std::uint64_t seed = 0;
  int batch_size = 1;
  int mc_samples = 256;
  int fit_starts = 8;
};

struct StepDiagnostics {
  int iteration = 0;
  FitMode fit_mode = FitMode::MLE;
  bool conflict = false;       ///< prior CDF of the MAP shift fell in a delta2 tail
  bool variance_gate = false;  ///< MAP latent variance fell below delta3
  double prior_cdf = std::numeric_limits<double>::quiet_NaN();
  double conflict_z = std::numeric_limits<double>::quiet_NaN();  ///< z-score of the MLE shift on a conflict
  double uncertainty = 1.0;
  double zeta_hat = std::numeric_limits<double>::quiet_NaN();  ///< raw units
  double signal_variance = std::numeric_limits<double>::quiet_NaN();
  double predicted_gap = std::numeric_limits<double>::quiet_NaN();  ///< predicted mean - f_min, raw units
  double predicted_variance = std::numeric_limits<double>::quiet_NaN();
  double distance_to_best = std::numeric_limits<double>::quiet_NaN();
  int bound_violations = 0;
  Eigen::MatrixXd points;  ///< evaluated this step, rows
  Eigen::VectorXd values;
};

/// Shift prior in scaled space, with f_b clamped to at most f_min.
ShiftPrior build_prior(double f_min, double f_b, double uncertainty, const Thresholds& thresholds,
                       double value_scale = 1.0);

/// One BABO iteration (bound used in the model and in SlogTEI). Without a
/// bound in the state this is exactly one SlogGP(MLE) + SlogEI iteration.
StepDiagnostics babo_step(LoopState& state, const UnitObjective& objective);

/// One iteration of any registered method.
StepDiagnostics method_step(LoopState& state, const MethodSpec& method, const UnitObjective& objective);

struct Problem {
  std::string name;
  int dim = 0;
  UnitObjective objective;
  std::optional<double> optimum;  ///< f*, for simple regret
};

struct LoopConfig {
  int iterations = 50;
  int batch_size = 1;
  int mc_samples = 256;
  int initial_points = 0;  ///< 0 means 4 * dim
  int fit_starts = 8;
  Thresholds thresholds;
  std::optional<double> f_b;
  double initial_uncertainty = 1.0;
};

struct RegretTrace {
  std::string problem;
  std::string method;
  int repetition = 0;
  int initial_points = 0;
  std::vector<double> best_values;  ///< after every evaluation
  std::vector<double> regrets;      ///< best_values - f*, empty without f*
  std::vector<StepDiagnostics> steps;
  int bound_violations = 0;
};

/// Latin-hypercube start of 4d points, then `iterations` steps. The design and
/// every random stream depend only on (seed, repetition), so different
/// methods on the same repetition start from the same points.
/// Throws EvaluationFailure if the objective returns NaN.
RegretTrace run_loop(const Problem& problem, const LoopConfig& config, const MethodSpec& method,
                     std::uint64_t seed, int repetition = 0);

}  // namespace babo
