#pragma once

// Synthetic objectives, initial designs, input/value scaling, and objectives
// sampled from the GP / SlogGP priors for within-model studies.

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "babo/gp_core.hpp"

namespace babo {

struct TestFunction {
  std::string name;
  int dim = 0;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::optional<double> optimal_value;  ///< true minimum (full precision)
  std::optional<double> table_value;    ///< minimum as commonly tabulated
  std::optional<Eigen::VectorXd> minimizer;
  std::function<double(const Eigen::VectorXd&)> evaluator;
};

/// All registered functions: branin, beale, sixhumpcamel, levy, hartmann3,
/// dixonprice4, rosenbrock4, ackley6, powell8, styblinskitang10.
const std::vector<TestFunction>& test_functions();

/// The eight functions of the main synthetic comparison.
std::vector<std::string> default_function_names();

/// Throws ConfigError for unknown names.
const TestFunction& find_test_function(const std::string& name);

/// Evaluates at a point of the native domain; throws InvalidArgument if the
/// point lies outside it.
double evaluate(const TestFunction& fn, const Eigen::VectorXd& x);

/// Affine view of a test function on the unit cube.
class UnitCubeObjective {
 public:
  explicit UnitCubeObjective(const TestFunction& fn);

  [[nodiscard]] Eigen::VectorXd to_domain(const Eigen::VectorXd& unit) const;
  [[nodiscard]] Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;
  double operator()(const Eigen::VectorXd& unit) const;
  [[nodiscard]] int dim() const { return fn_->dim; }

 private:
  const TestFunction* fn_;
};

UnitCubeObjective scale_inputs(const TestFunction& fn);

enum class ValueScaling {
  Standardize,  ///< subtract mean, divide by sd (plain GP methods)
  ScaleOnly,    ///< divide by sd; the SlogGP centres in its own likelihood
};

/// scaled = (raw - offset) / scale
struct ScaleRecord {
  double offset = 0.0;
  double scale = 1.0;
  [[nodiscard]] double apply(double raw) const { return (raw - offset) / scale; }
  [[nodiscard]] double invert(double scaled) const { return scaled * scale + offset; }
};

struct ScaledValues {
  Eigen::VectorXd values;
  std::optional<double> f_b;
  ScaleRecord record;
  bool degenerate = false;  ///< zero spread; unit scale used
};

/// Scales a history of values and maps f_b through the identical affine map.
/// A constant history (or a single value) gets unit scale and a warning.
ScaledValues scale_values(const Eigen::VectorXd& history, std::optional<double> f_b, ValueScaling mode);

enum class SampleKind { GP, SlogGP };

const char* to_string(SampleKind kind);

struct SampleParams {
  SampleKind kind = SampleKind::GP;
  int dim = 2;
  double signal_variance = 2.0;
  double lengthscale = 0.1;
  double mean = 0.0;   ///< latent mean
  double shift = 0.0;  ///< SlogGP only: f = exp(g) - shift
  int nodes_per_axis = 33;

  /// GP: variance 2, lengthscale 0.1, mean 0. SlogGP: latent variance 1.2,
  /// lengthscale 0.1, latent mean 0.5, shift 30.
  static SampleParams defaults(SampleKind kind);
};

/// One realization of a GP (or SlogGP) prior on [0,1]^d.
///
/// The latent path is drawn exactly on a tensor lattice of nodes (the
/// squared-exponential kernel factorizes over axes, so the lattice covariance
/// is a Kronecker product) and extended off the lattice by the conditional
/// mean. The result is a deterministic smooth function of (seed, x): repeated
/// and permuted queries agree, and every method run on the same realization
/// sees the same objective. Immutable, so concurrent queries are safe.
class SampledObjective {
 public:
  SampledObjective(SampleParams params, std::uint64_t seed);

  double operator()(const Eigen::VectorXd& x) const;
  [[nodiscard]] double latent(const Eigen::VectorXd& x) const;
  [[nodiscard]] double latent_with_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;
  [[nodiscard]] const SampleParams& params() const { return params_; }

  /// Global minimum estimated from the lattice values refined by local
  /// search; used as f* for simple regret.
  [[nodiscard]] double estimated_minimum() const { return minimum_; }
  [[nodiscard]] const Eigen::VectorXd& estimated_minimizer() const { return minimizer_; }

 private:
  double contract(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const;
  void locate_minimum();

  SampleParams params_;
  Eigen::VectorXd nodes_;
  Eigen::MatrixXd lower_;         ///< Cholesky factor of the 1-d lattice correlation
  Eigen::VectorXd coefficients_;  ///< sigma z, the whitened lattice draw
  Eigen::VectorXd lattice_latent_;
  double minimum_ = 0.0;
  Eigen::VectorXd minimizer_;
};

SampledObjective sample_objective(SampleKind kind, std::uint64_t seed);

enum class SurrogateKind { GP, SlogGP };

struct CrossValidation {
  double mean_error = 0.0;
  double standard_error = 0.0;
  int failures = 0;
  int bound_violations = 0;
  std::vector<double> errors;
};

/// Per repetition: fresh realization, n_train uniform training points, one
/// uniform held-out point; records |predicted mean - truth|. Repetition r
/// uses the same realization and points for every surrogate.
CrossValidation cross_validate(SampleKind kind, SurrogateKind surrogate, int reps = 50, int n_train = 40,
                               std::uint64_t seed = 0);

}  // namespace babo
