#include "babo/sloggp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "babo/errors.hpp"
#include "babo/normal.hpp"
#include "babo/optimize.hpp"
#include "babo/sampling.hpp"

namespace babo {

const char* to_string(FitMode mode) {
  switch (mode) {
    case FitMode::MLE:
      return "MLE";
    case FitMode::MAP:
      return "MAP";
    case FitMode::Fixed:
      return "FIXED";
  }
  return "?";
}

double warp(double y, double shift) {
  const double v = y + shift;
  if (!(v > 0.0)) {
    throw DomainError("warp: y + shift must be positive");
  }
  return std::log(v);
}

double unwarp(double g, double shift) { return std::exp(g) - shift; }

int bound_violations(const SlogGPModel& model, const Eigen::VectorXd& x, double f_min) {
  int bad = 0;
  if (!(model.lower_bound() < f_min)) {
    ++bad;
  }
  const SlogPosterior post = model.posterior(x);
  if (post.pred_mean < model.lower_bound()) {
    ++bad;
  }
  const double sd = std::sqrt(std::max(post.latent.variance, 0.0));
  for (int k = 1; k < 16; ++k) {
    const double g = post.latent.mean + sd * normal::quantile(k / 16.0);
    if (!(unwarp(g, model.shift()) > model.lower_bound())) {
      ++bad;
    }
  }
  return bad;
}

double value_scale(const Eigen::VectorXd& values) {
  if (values.size() < 2) {
    return 1.0;
  }
  const double mean = values.mean();
  const double var = (values.array() - mean).square().sum() / static_cast<double>(values.size() - 1);
  const double sd = std::sqrt(var);
  return sd > 0.0 && std::isfinite(sd) ? sd : 1.0;
}

// ------------------------------------------------------------ prior

ShiftPrior ShiftPrior::make(double f_min, double f_b, double uncertainty, double delta1, double gap_floor) {
  if (!(uncertainty >= 1.0) || !(delta1 > 0.0) || !(gap_floor > 0.0)) {
    throw InvalidArgument("ShiftPrior: need uncertainty >= 1, delta1 > 0 and a positive gap floor");
  }
  ShiftPrior p;
  p.f_b = f_b;
  p.f_min = f_min;
  p.delta1 = delta1;
  p.uncertainty = uncertainty;
  const double gap = std::max(f_min - f_b, gap_floor);
  p.mu_prior = std::log(gap);
  p.sigma2_prior = uncertainty * uncertainty * (2.0 * std::log(gap + delta1) - 2.0 * std::log(gap));
  return p;
}

double ShiftPrior::sigma_prior() const { return std::sqrt(sigma2_prior); }

double ShiftPrior::z_score(double shift) const {
  const double v = shift + f_min;
  if (!(v > 0.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  return (std::log(v) - mu_prior) / sigma_prior();
}

double ShiftPrior::neg_log_density(double shift) const {
  const double v = shift + f_min;
  if (!(v > 0.0)) {
    return std::numeric_limits<double>::infinity();
  }
  const double u = std::log(v) - mu_prior;
  return 0.5 * u * u / sigma2_prior + 0.5 * std::log(2.0 * std::numbers::pi * sigma2_prior);
}

double ShiftPrior::median_shift() const { return std::exp(mu_prior) - f_min; }

double prior_cdf(const ShiftPrior& prior, double shift_hat) {
  if (shift_hat + prior.f_min <= 0.0) {
    return 0.0;
  }
  return normal::cdf(prior.z_score(shift_hat));
}

// ------------------------------------------------------------ likelihood

namespace {

void check_nll_inputs(const Dataset& data, double shift) {
  if (data.size() < 2) {
    throw InvalidArgument("sloggp_nll: need at least two observations");
  }
  if (!(data.best_value() + shift > 0.0)) {
    throw DomainError("sloggp_nll: every y_i + shift must be positive");
  }
}

}  // namespace

SlogNll sloggp_nll_with_gradient(const Dataset& data, const GPHyperparams& hp, double shift) {
  check_nll_inputs(data, shift);
  const auto n = static_cast<double>(data.size());
  const Eigen::ArrayXd shifted = data.values().array() + shift;
  const Eigen::ArrayXd z = shifted.log();
  const Eigen::VectorXd w = (z - z.mean()).matrix();
  GPHyperparams centered_hp = hp;
  centered_hp.mean_const = 0.0;
  const GaussianNll g = gaussian_nll(data.inputs(), w, centered_hp, true);

  SlogNll out;
  out.value = g.value + z.sum() - n * std::log((n - 1.0) / n);
  out.d_log_signal = g.d_log_signal;
  out.d_log_lengthscale = g.d_log_lengthscale;
  const Eigen::ArrayXd inv = shifted.inverse();
  const Eigen::VectorXd dw = (inv - inv.mean()).matrix();
  out.d_shift = g.alpha.dot(dw) + inv.sum();
  return out;
}

double sloggp_nll(const Dataset& data, const GPHyperparams& hp, double shift) {
  check_nll_inputs(data, shift);
  const auto n = static_cast<double>(data.size());
  const Eigen::ArrayXd z = (data.values().array() + shift).log();
  const Eigen::VectorXd w = (z - z.mean()).matrix();
  GPHyperparams centered_hp = hp;
  centered_hp.mean_const = 0.0;
  return gaussian_nll(data.inputs(), w, centered_hp, false).value + z.sum() - n * std::log((n - 1.0) / n);
}

SlogPosterior lognormal_moments(const LatentPosterior& latent, double shift) {
  SlogPosterior p;
  p.latent = latent;
  const double s2 = std::max(latent.variance, 0.0);
  p.pred_mean = std::exp(latent.mean + 0.5 * s2) - shift;
  p.pred_variance = std::expm1(s2) * std::exp(2.0 * latent.mean + s2);
  return p;
}

// ------------------------------------------------------------ model

namespace {

GaussianProcess make_latent(const Dataset& data, GPHyperparams hp, double shift) {
  if (!(data.best_value() + shift > 0.0)) {
    throw DomainError("SlogGPModel: every y_i + shift must be positive");
  }
  Eigen::VectorXd z = (data.values().array() + shift).log().matrix();
  hp.mean_const = z.mean();
  return GaussianProcess(data.inputs(), std::move(z), hp);
}

}  // namespace

SlogGPModel::SlogGPModel(const Dataset& data, GPHyperparams latent_hp, double shift, FitMode mode)
    : shift_(shift), mode_(mode), latent_(make_latent(data, latent_hp, shift)) {}

SlogPosterior SlogGPModel::posterior(const Eigen::VectorXd& x) const {
  return lognormal_moments(latent_.posterior(x), shift_);
}

// ------------------------------------------------------------ fitting

namespace {

// Penalty on the shift added to the NLL; returns value and derivative.
using ShiftPenalty = std::function<std::pair<double, double>(double shift)>;

struct ShiftParam {
  double base;   // -min(y) + eps
  double lo_s;   // bounds on s where shift = base + exp(s)
  double hi_s;
  [[nodiscard]] double shift(double s) const { return base + std::exp(s); }
  [[nodiscard]] double s_of(double shift) const { return std::log(std::max(shift - base, std::exp(lo_s))); }
};

ShiftParam make_shift_param(const Dataset& data) {
  const double scale = value_scale(data.values());
  ShiftParam p;
  p.base = -data.best_value() + 1e-6 * scale;
  p.lo_s = std::log(1e-8 * scale);
  p.hi_s = std::log(1e4 * scale);
  return p;
}

double warped_variance(const Dataset& data, double shift, const HyperparamBounds& b) {
  const Eigen::ArrayXd z = (data.values().array() + shift).log();
  const double var = (z - z.mean()).square().mean();
  return std::clamp(var, b.min_signal_variance, b.max_signal_variance);
}

SlogFit fit_free_shift(const Dataset& data, const NoisePolicy& noise, const SlogFitOptions& options,
                       const ShiftPenalty* penalty, const ShiftPrior* prior, FitMode mode) {
  if (data.size() < 2) {
    throw InvalidArgument("sloggp fit: need at least two observations");
  }
  const double noise_var = noise.noise_variance();
  const ShiftParam sp = make_shift_param(data);
  const auto& b = options.bounds;
  Eigen::VectorXd lo(3);
  Eigen::VectorXd hi(3);
  lo << std::log(b.min_signal_variance), std::log(b.min_lengthscale), sp.lo_s;
  hi << std::log(b.max_signal_variance), std::log(b.max_lengthscale), sp.hi_s;

  auto make_hp = [&](const Eigen::VectorXd& theta) {
    GPHyperparams hp;
    hp.signal_variance = std::exp(theta[0]);
    hp.lengthscale = std::exp(theta[1]);
    hp.noise_variance = noise_var;
    return hp;
  };
  optim::Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    const double shift = sp.shift(theta[2]);
    try {
      double value = 0.0;
      if (grad) {
        const SlogNll r = sloggp_nll_with_gradient(data, make_hp(theta), shift);
        value = r.value;
        double d_shift = r.d_shift;
        if (penalty) {
          const auto [pv, pd] = (*penalty)(shift);
          value += pv;
          d_shift += pd;
        }
        *grad << r.d_log_signal, r.d_log_lengthscale, d_shift * std::exp(theta[2]);
      } else {
        value = sloggp_nll(data, make_hp(theta), shift);
        if (penalty) {
          value += (*penalty)(shift).first;
        }
      }
      return value;
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const double scale = value_scale(data.values());
  std::vector<Eigen::VectorXd> starts;
  auto add_start = [&](double signal, double length, double shift) {
    Eigen::VectorXd t(3);
    t << std::log(signal), std::log(length), sp.s_of(shift);
    starts.push_back(t.cwiseMax(lo).cwiseMin(hi));
  };
  if (options.warm_start) {
    add_start(options.warm_start->hp.signal_variance, options.warm_start->hp.lengthscale,
              std::max(options.warm_start->shift, sp.base + std::exp(sp.lo_s)));
  }
  if (prior) {
    const double median = std::max(prior->median_shift(), sp.base + std::exp(sp.lo_s));
    const double length = options.warm_start ? options.warm_start->hp.lengthscale : 0.2;
    add_start(warped_variance(data, median, b), length, median);
  }
  if (options.starts > 0) {
    // Lengthscale stratified in log space, gap below f_min spanning
    // 10^0 .. 10^3 value scales; signal variance matched to the warped data.
    const Eigen::MatrixXd lhs = latin_hypercube(options.starts, 2, options.seed);
    for (Eigen::Index i = 0; i < lhs.rows(); ++i) {
      const double length = std::exp(lo[1] + lhs(i, 0) * (hi[1] - lo[1]));
      const double gap = scale * std::pow(10.0, 3.0 * lhs(i, 1));
      const double shift = -data.best_value() + gap;
      add_start(warped_variance(data, shift, b), length, shift);
    }
  }
  if (starts.empty()) {
    throw InvalidArgument("sloggp fit: no start points");
  }

  std::vector<double> start_values;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  for (const auto& s : starts) {
    const optim::BoxResult r = optim::minimize_box(objective, s, lo, hi);
    start_values.push_back(r.initial_value);
    if (r.value < best) {
      best = r.value;
      best_theta = r.x;
    }
  }
  if (!std::isfinite(best)) {
    throw NumericalError("sloggp fit: objective could not be evaluated at any start point");
  }
  return SlogFit{SlogGPModel(data, make_hp(best_theta), sp.shift(best_theta[2]), mode), best,
                 std::move(start_values)};
}

}  // namespace

SlogFit sloggp_fit_mle(const Dataset& data, const NoisePolicy& noise, const SlogFitOptions& options) {
  return fit_free_shift(data, noise, options, nullptr, nullptr, FitMode::MLE);
}

SlogFit sloggp_fit_map(const Dataset& data, const ShiftPrior& prior, const NoisePolicy& noise,
                       const SlogFitOptions& options) {
  if (data.size() < 1 || std::abs(prior.f_min - data.best_value()) > 1e-9 * (1.0 + std::abs(prior.f_min))) {
    throw InvalidArgument("sloggp_fit_map: prior f_min does not match the dataset's best value");
  }
  const ShiftPenalty penalty = [&prior](double shift) {
    const double v = shift + prior.f_min;
    const double u = std::log(v) - prior.mu_prior;
    return std::pair{prior.neg_log_density(shift), u / (prior.sigma2_prior * v)};
  };
  return fit_free_shift(data, noise, options, &penalty, &prior, FitMode::MAP);
}

SlogFit sloggp_fit_fixed_shift(const Dataset& data, double shift, const NoisePolicy& noise,
                               const SlogFitOptions& options) {
  if (data.size() < 2) {
    throw InvalidArgument("sloggp fit: need at least two observations");
  }
  const ShiftParam sp = make_shift_param(data);
  const double fixed = std::max(shift, sp.base);
  const double noise_var = noise.noise_variance();
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
    return hp;
  };
  optim::Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    try {
      if (grad) {
        const SlogNll r = sloggp_nll_with_gradient(data, make_hp(theta), fixed);
        *grad << r.d_log_signal, r.d_log_lengthscale;
        return r.value;
      }
      return sloggp_nll(data, make_hp(theta), fixed);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  std::vector<Eigen::VectorXd> starts;
  const double signal0 = warped_variance(data, fixed, b);
  if (options.warm_start) {
    Eigen::VectorXd t(2);
    t << std::log(options.warm_start->hp.signal_variance), std::log(options.warm_start->hp.lengthscale);
    starts.push_back(t.cwiseMax(lo).cwiseMin(hi));
  }
  if (options.starts > 0) {
    const Eigen::MatrixXd lhs = latin_hypercube(options.starts, 2, options.seed);
    for (Eigen::Index i = 0; i < lhs.rows(); ++i) {
      Eigen::VectorXd t(2);
      // signal variance within two decades of the warped sample variance
      t << std::log(signal0) + (lhs(i, 0) - 0.5) * 2.0 * std::log(10.0), lo[1] + lhs(i, 1) * (hi[1] - lo[1]);
      starts.push_back(t.cwiseMax(lo).cwiseMin(hi));
    }
  }
  std::vector<double> start_values;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  for (const auto& s : starts) {
    const optim::BoxResult r = optim::minimize_box(objective, s, lo, hi);
    start_values.push_back(r.initial_value);
    if (r.value < best) {
      best = r.value;
      best_theta = r.x;
    }
  }
  if (!std::isfinite(best)) {
    throw NumericalError("sloggp fit: objective could not be evaluated at any start point");
  }
  return SlogFit{SlogGPModel(data, make_hp(best_theta), fixed, FitMode::Fixed), best, std::move(start_values)};
}

LatentMapping theorem1_map(double target_mean, double target_signal_sd, const GPHyperparams& target_hp,
                           double shift) {
  const double level = shift + target_mean;
  if (!(level > 0.0)) {
    throw DomainError("theorem1_map: shift + target mean must be positive");
  }
  LatentMapping m;
  m.latent_mean = std::log(level);
  m.latent_signal_sd = target_signal_sd / level;
  m.latent_hp = target_hp;
  m.latent_hp.signal_variance = m.latent_signal_sd * m.latent_signal_sd;
  m.latent_hp.noise_variance = target_hp.noise_variance / (level * level);
  m.latent_hp.mean_const = m.latent_mean;
  return m;
}

}  // namespace babo
