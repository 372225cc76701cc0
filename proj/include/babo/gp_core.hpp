#pragma once

// Exact Gaussian-process regression with an isotropic squared-exponential
// kernel. This is the latent engine under both the plain GP baselines and the
// shifted-log surrogate.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace babo {

struct GPHyperparams {
  double signal_variance = 1.0;
  double lengthscale = 0.2;
  double noise_variance = 6e-6;
  double mean_const = 0.0;

  /// Throws InvalidArgument unless signal_variance > 0, lengthscale > 0 and
  /// noise_variance >= 0.
  void validate() const;
};

/// Observations in the unit cube with a running best. Inputs are rows.
class Dataset {
 public:
  explicit Dataset(int dim);
  Dataset(Eigen::MatrixXd inputs, Eigen::VectorXd values);

  void add(const Eigen::VectorXd& x, double y);

  [[nodiscard]] int size() const { return static_cast<int>(values_.size()); }
  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const Eigen::MatrixXd& inputs() const { return inputs_; }
  [[nodiscard]] const Eigen::VectorXd& values() const { return values_; }
  [[nodiscard]] double best_value() const;
  [[nodiscard]] int best_index() const { return best_index_; }
  [[nodiscard]] Eigen::VectorXd best_input() const;

 private:
  int dim_;
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd values_;
  int best_index_ = -1;
};

struct LatentPosterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// Posterior moments with their gradients with respect to the query point.
struct PosteriorGradient {
  double mean = 0.0;
  double variance = 0.0;
  Eigen::VectorXd d_mean;
  Eigen::VectorXd d_variance;
};

struct JointPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Observation-noise rule. The adaptive rule sets the noise variance to
/// 1e-5 times the signal variance fitted in the previous iteration, starting
/// from 6e-6 before any fit exists.
struct NoisePolicy {
  static constexpr double kInitialNoise = 6e-6;
  static constexpr double kSignalRatio = 1e-5;

  std::optional<double> fixed;
  std::optional<double> previous_signal_variance;

  static NoisePolicy Fixed(double noise_variance) { return {noise_variance, std::nullopt}; }
  static NoisePolicy Adaptive(std::optional<double> previous = std::nullopt) { return {std::nullopt, previous}; }

  [[nodiscard]] double noise_variance() const;
};

double kernel_eval(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2, const GPHyperparams& hp);

/// Signal part of the kernel matrix (no noise on the diagonal).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const GPHyperparams& hp);

/// Cholesky factor of a symmetric matrix with jitter escalation: the
/// diagonal gets jitter * mean(diag) added, starting at 1e-12 and growing
/// tenfold until 1e-4. Throws NumericalError after that.
struct CholeskyFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};
CholeskyFactor factorize(const Eigen::MatrixXd& k);

/// Value and log-space gradient of a zero-mean Gaussian marginal likelihood
/// over centered targets r.
struct GaussianNll {
  double value = 0.0;
  double d_log_signal = 0.0;
  double d_log_lengthscale = 0.0;
  Eigen::VectorXd alpha;  ///< K^{-1} r
};
GaussianNll gaussian_nll(const Eigen::MatrixXd& x, const Eigen::VectorXd& centered, const GPHyperparams& hp,
                         bool with_gradient);

/// Negative log marginal likelihood with targets centered by hp.mean_const.
double gp_nll(const Dataset& data, const GPHyperparams& hp);

/// Fitted GP state: immutable after construction, so concurrent prediction
/// from several threads is safe.
class GaussianProcess {
 public:
  GaussianProcess(Eigen::MatrixXd inputs, Eigen::VectorXd targets, GPHyperparams hp);

  [[nodiscard]] LatentPosterior posterior(const Eigen::VectorXd& x) const;
  [[nodiscard]] PosteriorGradient posterior_with_gradient(const Eigen::VectorXd& x) const;
  [[nodiscard]] JointPosterior joint_posterior(const Eigen::MatrixXd& points) const;

  [[nodiscard]] const GPHyperparams& hyperparams() const { return hp_; }
  [[nodiscard]] const Eigen::MatrixXd& inputs() const { return inputs_; }
  [[nodiscard]] const Eigen::VectorXd& targets() const { return targets_; }
  [[nodiscard]] int dim() const { return static_cast<int>(inputs_.cols()); }

 private:
  void check_dim(Eigen::Index d) const;

  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  GPHyperparams hp_;
  CholeskyFactor factor_;
  Eigen::VectorXd alpha_;
};

/// Log-space box for (signal variance, lengthscale).
struct HyperparamBounds {
  double min_signal_variance = 1e-6;
  double max_signal_variance = 1e3;
  double min_lengthscale = 1e-3;
  double max_lengthscale = 1e1;
};

struct FitOptions {
  int starts = 8;
  std::uint64_t seed = 0;
  std::optional<GPHyperparams> warm_start;
  HyperparamBounds bounds;
};

struct GPFit {
  GPHyperparams hp;
  double nll = 0.0;
  std::vector<double> start_nlls;  ///< NLL at every start point tried
};

/// Maximum-likelihood fit of (signal variance, lengthscale) from a Latin
/// hypercube of log-space starts plus an optional warm start. The noise
/// variance comes from the policy and the constant mean is the sample mean.
GPFit gp_fit(const Dataset& data, const NoisePolicy& noise, const FitOptions& options = {});

}  // namespace babo
