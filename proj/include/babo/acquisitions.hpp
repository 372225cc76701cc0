#pragma once

// Closed-form acquisition criteria for minimization, the Monte-Carlo batch
// criterion, and the multi-start maximizer shared by every method.

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>

#include "babo/gp_core.hpp"
#include "babo/sloggp.hpp"

namespace babo {

enum class Criterion { Random, EI, TEI, MES_b, SlogEI, SlogTEI };

const char* to_string(Criterion c);

namespace acq {

/// Spreads below this are treated as deterministic.
inline constexpr double kMinSd = 1e-12;

/// E[(f_min - Y)^+] for Y ~ N(mean, variance).
double ei(const LatentPosterior& post, double f_min);

/// E[(f_min - Y)^+] - E[(f_b - Y)^+]. Throws InvalidArgument if f_b > f_min.
double tei(const LatentPosterior& post, double f_min, double f_b);

/// P(Y < f_b) = Phi((f_b - mean) / sd).
double probability_below(const LatentPosterior& post, double f_b);

/// P(exp(g) - shift <= f_min) for g ~ N(latent).
double slog_pi(const LatentPosterior& latent, double f_min, double shift);

/// E[(f_min - (exp(g) - shift))^+]: the log-normal partial expectation
/// (f_min + shift) Phi(a) - exp(mu + s^2/2) Phi(a - s), a = (ln(f_min + shift) - mu) / s.
double slog_ei(const LatentPosterior& latent, double f_min, double shift);

/// d slog_ei / d mu and d slog_ei / d sigma. Throws UndefinedGradient when
/// sigma is zero.
struct SlogEiPartials {
  double d_mean = 0.0;
  double d_sd = 0.0;
};
SlogEiPartials slog_ei_partials(const LatentPosterior& latent, double f_min, double shift);

/// Gradient of slog_ei with respect to the query point, by the chain rule
/// through the latent posterior partials.
Eigen::VectorXd slog_ei_grad(const PosteriorGradient& latent, double f_min, double shift);

/// slog_ei(f_min) - slog_ei(f_b); reduces to slog_ei(f_min) when the model
/// bound -shift already lies above f_b. Throws InvalidArgument if f_b > f_min.
double slog_tei(const LatentPosterior& latent, double f_min, double f_b, double shift);

/// Max-value entropy search with a known bound:
/// gamma phi(gamma) / (2 Phi(gamma)) - ln Phi(gamma), gamma = (mean - f_b) / sd.
double mes_b(const LatentPosterior& post, double f_b);
/// The same closed form as a function of gamma alone.
double mes_b_of_gamma(double gamma);

/// ln mes_b and its derivative in gamma, finite where mes_b underflows
/// (gamma beyond about 38).
struct LogMes {
  double value = 0.0;
  double d_gamma = 0.0;
};
LogMes log_mes_b_of_gamma(double gamma);
double log_mes_b(const LatentPosterior& post, double f_b);

/// Monte-Carlo batch SlogTEI over a joint latent posterior of q points:
/// mean over samples of max_j [(f_min - xi_j)^+ - (f_b - xi_j)^+] with
/// xi = exp(latent sample) - shift. Quasi-random base samples make it
/// deterministic in `seed`; entries with identical mean and covariance row
/// are merged. Pass
/// f_b = -inf for the untruncated batch SlogEI.
double q_slog_tei(const JointPosterior& latent, double f_min, double f_b, double shift, int mc_samples,
                  std::uint64_t seed);

/// Monte-Carlo batch EI for a Gaussian joint posterior (qEI baseline).
double q_ei(const JointPosterior& post, double f_min, int mc_samples, std::uint64_t seed);

}  // namespace acq

/// An acquisition surface over [0,1]^dim to be maximized.
/// `value_and_gradient` is optional; it may throw UndefinedGradient, in which
/// case the maximizer falls back to finite differences.
struct Acquisition {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> value_and_gradient;
};

struct AcquisitionBudget {
  int raw_samples = 0;
  int restarts = 0;
  /// 30 d quasi-random raw samples, 3 d local restarts.
  static AcquisitionBudget for_dim(int d) { return {30 * d, 3 * d}; }
};

struct AcquisitionMaximum {
  Eigen::VectorXd point;
  double value = 0.0;
  double best_raw_value = 0.0;
};

/// Evaluates the raw quasi-random design, refines the best `restarts` points
/// with projected L-BFGS and returns the best point found. Ties go to the
/// lowest raw-sample index. Throws NumericalError if every raw value is NaN.
AcquisitionMaximum maximize_acquisition(const Acquisition& acquisition, const AcquisitionBudget& budget,
                                        std::uint64_t seed);

/// Single-point criterion on a plain GP posterior (EI, TEI or MES_b).
/// f_b is required for TEI and MES_b. MES_b is maximized on the log scale.
Acquisition make_gp_acquisition(const GaussianProcess& gp, Criterion criterion, double f_min,
                                std::optional<double> f_b);

/// Single-point criterion on a SlogGP posterior (SlogEI or SlogTEI).
Acquisition make_slog_acquisition(const SlogGPModel& model, Criterion criterion, double f_min,
                                  std::optional<double> f_b);

/// Batch criterion over q stacked points (dim = q * d): qSlogTEI / qSlogEI on
/// a SlogGP, qEI on a GP. Repeated points are dropped before the joint
/// posterior, so a batch of copies scores exactly like the single point.
Acquisition make_batch_slog_acquisition(const SlogGPModel& model, double f_min, std::optional<double> f_b, int q,
                                        int mc_samples, std::uint64_t seed);
Acquisition make_batch_gp_acquisition(const GaussianProcess& gp, double f_min, int q, int mc_samples,
                                      std::uint64_t seed);

}  // namespace babo
