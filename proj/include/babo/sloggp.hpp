#pragma once

// Shifted-logarithmic warped GP: f(x) = exp(g(x)) - shift with g a GP.
// The support of f is (-shift, inf), so -shift acts as the model's lower
// bound on the objective.

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "babo/gp_core.hpp"

namespace babo {

enum class FitMode { MLE, MAP, Fixed };

const char* to_string(FitMode mode);

/// ln(y + shift). Throws DomainError when y + shift <= 0.
double warp(double y, double shift);
/// exp(g) - shift.
double unwarp(double g, double shift);

/// Shifted log-normal prior on the shift: shift = -f_min + exp(Z) with
/// Z ~ N(mu_prior, sigma2_prior). At uncertainty 1 the induced lower bound
/// -shift has median f_b and mean f_b - delta1.
struct ShiftPrior {
  double f_b = 0.0;
  double f_min = 0.0;
  double delta1 = 0.1;
  double uncertainty = 1.0;
  double mu_prior = 0.0;
  double sigma2_prior = 1.0;

  /// `gap_floor` replaces f_min - f_b when the gap is smaller than it, so the
  /// log stays finite when the best observation already sits on the bound.
  static ShiftPrior make(double f_min, double f_b, double uncertainty, double delta1, double gap_floor = 1e-8);

  [[nodiscard]] double sigma_prior() const;
  /// Standard score of ln(shift + f_min) under N(mu_prior, sigma2_prior).
  [[nodiscard]] double z_score(double shift) const;
  /// Negative log density of Z = ln(shift + f_min) (the MAP penalty).
  [[nodiscard]] double neg_log_density(double shift) const;
  /// Prior median of the shift, i.e. the value with -shift = f_b.
  [[nodiscard]] double median_shift() const;
};

/// CDF of the prior at `shift_hat`; 0 at or below the support edge -f_min.
double prior_cdf(const ShiftPrior& prior, double shift_hat);

/// Warped-GP negative log likelihood including the warping Jacobian, with
/// the latent mean fixed to the mean of the warped observations. hp.mean_const
/// is ignored. Needs N >= 2 (the Jacobian carries a (N-1)/N factor).
double sloggp_nll(const Dataset& data, const GPHyperparams& hp, double shift);

/// Value and gradient with respect to (log signal, log lengthscale, shift).
struct SlogNll {
  double value = 0.0;
  double d_log_signal = 0.0;
  double d_log_lengthscale = 0.0;
  double d_shift = 0.0;
};
SlogNll sloggp_nll_with_gradient(const Dataset& data, const GPHyperparams& hp, double shift);

struct SlogPosterior {
  LatentPosterior latent;
  double pred_mean = 0.0;
  double pred_variance = 0.0;
};

/// Log-normal moments of exp(g) - shift for g ~ N(mean, variance).
SlogPosterior lognormal_moments(const LatentPosterior& latent, double shift);

/// Fitted SlogGP. Immutable after construction; concurrent prediction is safe.
class SlogGPModel {
 public:
  SlogGPModel(const Dataset& data, GPHyperparams latent_hp, double shift, FitMode mode = FitMode::MLE);

  [[nodiscard]] double shift() const { return shift_; }
  [[nodiscard]] double lower_bound() const { return -shift_; }
  [[nodiscard]] double latent_mean() const { return latent_.hyperparams().mean_const; }
  [[nodiscard]] const GPHyperparams& hp() const { return latent_.hyperparams(); }
  [[nodiscard]] const GaussianProcess& latent() const { return latent_; }
  [[nodiscard]] FitMode fit_mode() const { return mode_; }

  [[nodiscard]] SlogPosterior posterior(const Eigen::VectorXd& x) const;

 private:
  double shift_;
  FitMode mode_;
  GaussianProcess latent_;
};

struct SlogWarmStart {
  GPHyperparams hp;
  double shift = 0.0;
};

struct SlogFitOptions {
  int starts = 8;
  std::uint64_t seed = 0;
  std::optional<SlogWarmStart> warm_start;
  HyperparamBounds bounds;
};

struct SlogFit {
  SlogGPModel model;
  double objective = 0.0;               ///< NLL (MLE) or NLL + prior penalty (MAP)
  std::vector<double> start_objectives;  ///< objective at every start point
};

/// Joint maximum-likelihood fit of (signal variance, lengthscale, shift).
SlogFit sloggp_fit_mle(const Dataset& data, const NoisePolicy& noise, const SlogFitOptions& options = {});

/// MAP fit: NLL plus the negative log prior density of ln(shift + f_min).
SlogFit sloggp_fit_map(const Dataset& data, const ShiftPrior& prior, const NoisePolicy& noise,
                       const SlogFitOptions& options = {});

/// Kernel hyperparameters only, shift held fixed (clamped into the valid
/// region y_i + shift > 0).
SlogFit sloggp_fit_fixed_shift(const Dataset& data, double shift, const NoisePolicy& noise,
                               const SlogFitOptions& options = {});

/// Latent parameters under which a SlogGP approaches a target GP as the
/// shift grows: latent mean ln(shift + mean), latent signal sd
/// sd / (shift + mean), kernel shape unchanged.
struct LatentMapping {
  double latent_mean = 0.0;
  double latent_signal_sd = 0.0;
  GPHyperparams latent_hp;
};
LatentMapping theorem1_map(double target_mean, double target_signal_sd, const GPHyperparams& target_hp,
                           double shift);

/// Bound checks at x: -shift < f_min, the predictive mean and 15 latent
/// quantiles mapped through the warp stay above -shift. Returns the count of
/// failures (0 for a sound model).
int bound_violations(const SlogGPModel& model, const Eigen::VectorXd& x, double f_min);

/// Sample scale used by the fitting routines: standard deviation of the
/// values, or 1 when they are constant.
double value_scale(const Eigen::VectorXd& values);

}  // namespace babo
