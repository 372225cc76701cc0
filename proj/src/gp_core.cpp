#include "babo/gp_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "babo/errors.hpp"
#include "babo/optimize.hpp"
#include "babo/sampling.hpp"

namespace babo {

void GPHyperparams::validate() const {
  if (!(signal_variance > 0.0) || !(lengthscale > 0.0) || !(noise_variance >= 0.0) || !std::isfinite(mean_const)) {
    throw InvalidArgument("GPHyperparams: need signal_variance > 0, lengthscale > 0, noise_variance >= 0");
  }
}

// ---------------------------------------------------------------- Dataset

Dataset::Dataset(int dim) : dim_(dim), inputs_(0, dim), values_(0) {
  if (dim < 1) {
    throw InvalidArgument("Dataset: dimension must be positive");
  }
}

Dataset::Dataset(Eigen::MatrixXd inputs, Eigen::VectorXd values)
    : dim_(static_cast<int>(inputs.cols())), inputs_(std::move(inputs)), values_(std::move(values)) {
  if (inputs_.rows() != values_.size()) {
    throw InvalidArgument("Dataset: inputs and values differ in length");
  }
  if (dim_ < 1) {
    throw InvalidArgument("Dataset: dimension must be positive");
  }
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (best_index_ < 0 || values_[i] < values_[best_index_]) {
      best_index_ = static_cast<int>(i);
    }
  }
}

void Dataset::add(const Eigen::VectorXd& x, double y) {
  if (x.size() != dim_) {
    throw InvalidArgument("Dataset::add: dimension mismatch");
  }
  const Eigen::Index n = values_.size();
  inputs_.conservativeResize(n + 1, Eigen::NoChange);
  inputs_.row(n) = x.transpose();
  values_.conservativeResize(n + 1);
  values_[n] = y;
  if (best_index_ < 0 || y < values_[best_index_]) {
    best_index_ = static_cast<int>(n);
  }
}

double Dataset::best_value() const {
  if (best_index_ < 0) {
    throw InvalidArgument("Dataset is empty");
  }
  return values_[best_index_];
}

Eigen::VectorXd Dataset::best_input() const {
  if (best_index_ < 0) {
    throw InvalidArgument("Dataset is empty");
  }
  return inputs_.row(best_index_).transpose();
}

double NoisePolicy::noise_variance() const {
  if (fixed) {
    return *fixed;
  }
  if (previous_signal_variance) {
    return kSignalRatio * *previous_signal_variance;
  }
  return kInitialNoise;
}

// ----------------------------------------------------------------- kernel

double kernel_eval(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2, const GPHyperparams& hp) {
  if (x1.size() != x2.size()) {
    throw InvalidArgument("kernel_eval: dimension mismatch");
  }
  const double r2 = (x1 - x2).squaredNorm();
  return hp.signal_variance * std::exp(-0.5 * r2 / (hp.lengthscale * hp.lengthscale));
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const GPHyperparams& hp) {
  if (a.cols() != b.cols()) {
    throw InvalidArgument("kernel_matrix: dimension mismatch");
  }
  const double inv_two_l2 = 0.5 / (hp.lengthscale * hp.lengthscale);
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      k(i, j) = hp.signal_variance * std::exp(-(a.row(i) - b.row(j)).squaredNorm() * inv_two_l2);
    }
  }
  return k;
}

CholeskyFactor factorize(const Eigen::MatrixXd& k) {
  CholeskyFactor f;
  f.llt.compute(k);
  if (f.llt.info() == Eigen::Success) {
    return f;
  }
  const double scale = std::max(k.diagonal().mean(), std::numeric_limits<double>::min());
  for (double jitter = 1e-12; jitter <= 1e-4 * (1.0 + 1e-9); jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter * scale;
    f.llt.compute(kj);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter * scale;
      return f;
    }
  }
  throw NumericalError("Cholesky factorization failed after jitter escalation to 1e-4");
}

// ---------------------------------------------------------------- NLL

GaussianNll gaussian_nll(const Eigen::MatrixXd& x, const Eigen::VectorXd& centered, const GPHyperparams& hp,
                         bool with_gradient) {
  hp.validate();
  const Eigen::Index n = x.rows();
  if (n < 1 || centered.size() != n) {
    throw InvalidArgument("gaussian_nll: need N >= 1 matching targets");
  }
  Eigen::MatrixXd k_signal = kernel_matrix(x, x, hp);
  Eigen::MatrixXd k = k_signal;
  k.diagonal().array() += hp.noise_variance;
  const CholeskyFactor f = factorize(k);

  GaussianNll out;
  out.alpha = f.llt.solve(centered);
  const Eigen::MatrixXd l = f.llt.matrixL();
  const double half_log_det = l.diagonal().array().log().sum();
  out.value = half_log_det + 0.5 * centered.dot(out.alpha) + 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (!with_gradient) {
    return out;
  }
  // dNLL/dtheta = 1/2 tr((K^-1 - alpha alpha^T) dK/dtheta)
  Eigen::MatrixXd w = f.llt.solve(Eigen::MatrixXd::Identity(n, n));
  w -= out.alpha * out.alpha.transpose();
  const double inv_l2 = 1.0 / (hp.lengthscale * hp.lengthscale);
  double d_signal = 0.0;
  double d_length = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double kij = k_signal(i, j);
      d_signal += w(i, j) * kij;
      d_length += w(i, j) * kij * (x.row(i) - x.row(j)).squaredNorm() * inv_l2;
    }
  }
  out.d_log_signal = 0.5 * d_signal;
  out.d_log_lengthscale = 0.5 * d_length;
  return out;
}

double gp_nll(const Dataset& data, const GPHyperparams& hp) {
  const Eigen::VectorXd centered = data.values().array() - hp.mean_const;
  return gaussian_nll(data.inputs(), centered, hp, false).value;
}

// -------------------------------------------------------- GaussianProcess

GaussianProcess::GaussianProcess(Eigen::MatrixXd inputs, Eigen::VectorXd targets, GPHyperparams hp)
    : inputs_(std::move(inputs)), targets_(std::move(targets)), hp_(hp) {
  hp_.validate();
  if (inputs_.rows() < 1 || inputs_.rows() != targets_.size()) {
    throw InvalidArgument("GaussianProcess: need N >= 1 inputs matching targets");
  }
  Eigen::MatrixXd k = kernel_matrix(inputs_, inputs_, hp_);
  k.diagonal().array() += hp_.noise_variance;
  factor_ = factorize(k);
  alpha_ = factor_.llt.solve((targets_.array() - hp_.mean_const).matrix());
}

void GaussianProcess::check_dim(Eigen::Index d) const {
  if (d != inputs_.cols()) {
    throw InvalidArgument("GaussianProcess: query dimension mismatch");
  }
}

LatentPosterior GaussianProcess::posterior(const Eigen::VectorXd& x) const {
  check_dim(x.size());
  const Eigen::VectorXd k = kernel_matrix(inputs_, x.transpose(), hp_).col(0);
  const Eigen::VectorXd v = factor_.llt.solve(k);
  LatentPosterior p;
  p.mean = hp_.mean_const + k.dot(alpha_);
  p.variance = std::clamp(hp_.signal_variance - k.dot(v), 0.0, hp_.signal_variance + hp_.noise_variance);
  return p;
}

PosteriorGradient GaussianProcess::posterior_with_gradient(const Eigen::VectorXd& x) const {
  check_dim(x.size());
  const Eigen::Index n = inputs_.rows();
  const Eigen::VectorXd k = kernel_matrix(inputs_, x.transpose(), hp_).col(0);
  const Eigen::VectorXd v = factor_.llt.solve(k);
  // dk_i/dx = -k_i (x - x_i) / l^2
  Eigen::MatrixXd dk(n, x.size());
  const double inv_l2 = 1.0 / (hp_.lengthscale * hp_.lengthscale);
  for (Eigen::Index i = 0; i < n; ++i) {
    dk.row(i) = -k[i] * inv_l2 * (x.transpose() - inputs_.row(i));
  }
  PosteriorGradient p;
  p.mean = hp_.mean_const + k.dot(alpha_);
  const double raw_var = hp_.signal_variance - k.dot(v);
  p.variance = std::clamp(raw_var, 0.0, hp_.signal_variance + hp_.noise_variance);
  p.d_mean = dk.transpose() * alpha_;
  p.d_variance = raw_var > 0.0 ? Eigen::VectorXd(-2.0 * dk.transpose() * v) : Eigen::VectorXd::Zero(x.size());
  return p;
}

JointPosterior GaussianProcess::joint_posterior(const Eigen::MatrixXd& points) const {
  check_dim(points.cols());
  const Eigen::MatrixXd ks = kernel_matrix(inputs_, points, hp_);
  JointPosterior jp;
  jp.mean = (ks.transpose() * alpha_).array() + hp_.mean_const;
  const Eigen::MatrixXd v = factor_.llt.matrixL().solve(ks);
  jp.covariance = kernel_matrix(points, points, hp_) - v.transpose() * v;
  jp.covariance = 0.5 * (jp.covariance + jp.covariance.transpose());
  return jp;
}

// -------------------------------------------------------------- fitting

GPFit gp_fit(const Dataset& data, const NoisePolicy& noise, const FitOptions& options) {
  if (data.size() < 2) {
    throw InvalidArgument("gp_fit: need at least two observations");
  }
  const double noise_var = noise.noise_variance();
  const double mean = data.values().mean();
  const Eigen::VectorXd centered = data.values().array() - mean;
  const auto& b = options.bounds;
  Eigen::VectorXd lo(2);
  Eigen::VectorXd hi(2);
  lo << std::log(b.min_signal_variance), std::log(b.min_lengthscale);
  hi << std::log(b.max_signal_variance), std::log(b.max_lengthscale);

  auto make_hp = [&](const Eigen::VectorXd& theta) {
    GPHyperparams hp;
    hp.signal_variance = std::exp(theta[0]);
    hp.lengthscale = std::exp(theta[1]);
    hp.noise_variance = noise_var;
    hp.mean_const = mean;
    return hp;
  };
  optim::Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    try {
      const GaussianNll r = gaussian_nll(data.inputs(), centered, make_hp(theta), grad != nullptr);
      if (grad) {
        *grad << r.d_log_signal, r.d_log_lengthscale;
      }
      return r.value;
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<Eigen::VectorXd> starts;
  if (options.warm_start) {
    Eigen::VectorXd w(2);
    w << std::log(options.warm_start->signal_variance), std::log(options.warm_start->lengthscale);
    starts.push_back(w.cwiseMax(lo).cwiseMin(hi));
  }
  if (options.starts > 0) {
    const Eigen::MatrixXd lhs = latin_hypercube(options.starts, 2, options.seed);
    for (Eigen::Index i = 0; i < lhs.rows(); ++i) {
      starts.emplace_back(lo.array() + lhs.row(i).transpose().array() * (hi - lo).array());
    }
  }
  if (starts.empty()) {
    throw InvalidArgument("gp_fit: no start points");
  }

  GPFit fit;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  for (const auto& s : starts) {
    const optim::BoxResult r = optim::minimize_box(objective, s, lo, hi);
    fit.start_nlls.push_back(r.initial_value);
    if (r.value < best) {
      best = r.value;
      best_theta = r.x;
    }
  }
  if (!std::isfinite(best)) {
    throw NumericalError("gp_fit: likelihood could not be evaluated at any start point");
  }
  fit.hp = make_hp(best_theta);
  fit.nll = best;
  return fit;
}

}  // namespace babo
