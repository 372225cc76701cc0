#include "babo/acquisitions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "babo/errors.hpp"
#include "babo/normal.hpp"
#include "babo/optimize.hpp"
#include "babo/sampling.hpp"

namespace babo {

const char* to_string(Criterion c) {
  switch (c) {
    case Criterion::Random:
      return "Random";
    case Criterion::EI:
      return "EI";
    case Criterion::TEI:
      return "TEI";
    case Criterion::MES_b:
      return "MES_b";
    case Criterion::SlogEI:
      return "SlogEI";
    case Criterion::SlogTEI:
      return "SlogTEI";
  }
  return "?";
}

namespace acq {

namespace {

double sd_of(const LatentPosterior& p) { return std::sqrt(std::max(p.variance, 0.0)); }

void check_truncation(double f_min, double f_b) {
  if (f_b > f_min) {
    throw InvalidArgument("truncated criterion: f_b must not exceed f_min");
  }
}

// exp(mean + sd^2/2) Phi(b), kept finite when the first factor overflows.
double tail_mass(double mean, double sd, double b) {
  return std::exp(mean + 0.5 * sd * sd + normal::log_cdf(b));
}

// E[(eta - exp(g))^+] for eta > 0.
double lognormal_shortfall(double eta, double mean, double sd) {
  if (sd < kMinSd) {
    return std::max(eta - std::exp(mean), 0.0);
  }
  const double a = (std::log(eta) - mean) / sd;
  const double v = eta * normal::cdf(a) - tail_mass(mean, sd, a - sd);
  return std::max(v, 0.0);
}

// d/dmu and d/dsigma of lognormal_shortfall. Uses
// exp(mu + s^2/2) phi(a - s) = eta phi(a), which cancels the density terms.
SlogEiPartials lognormal_shortfall_partials(double eta, double mean, double sd) {
  const double a = (std::log(eta) - mean) / sd;
  const double m = tail_mass(mean, sd, a - sd);
  SlogEiPartials p;
  p.d_mean = -m;
  p.d_sd = eta * normal::pdf(a) - sd * m;
  return p;
}

// Lower Cholesky factor of a PSD matrix; directions with a non-positive
// pivot (up to round-off) get a zero column.
Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& c) {
  const Eigen::Index n = c.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  const double scale = std::max(c.diagonal().cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = c(j, j) - l.row(j).head(j).squaredNorm();
    if (d < -1e-8 * scale) {
      throw NumericalError("batch criterion: joint covariance is not positive semidefinite");
    }
    if (d <= 1e-14 * scale) {
      continue;
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (c(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return l;
}

// Drops exact repeats of (mean, covariance row) so duplicated batch points
// reduce to the single-point estimator.
JointPosterior merge_duplicates(const JointPosterior& jp) {
  const Eigen::Index q = jp.mean.size();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < q; ++i) {
    bool dup = false;
    for (Eigen::Index k : keep) {
      if (jp.mean[i] == jp.mean[k] && jp.covariance.row(i) == jp.covariance.row(k)) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      keep.push_back(i);
    }
  }
  if (static_cast<Eigen::Index>(keep.size()) == q) {
    return jp;
  }
  JointPosterior out;
  out.mean.resize(static_cast<Eigen::Index>(keep.size()));
  out.covariance.resize(out.mean.size(), out.mean.size());
  for (std::size_t a = 0; a < keep.size(); ++a) {
    out.mean[static_cast<Eigen::Index>(a)] = jp.mean[keep[a]];
    for (std::size_t b = 0; b < keep.size(); ++b) {
      out.covariance(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = jp.covariance(keep[a], keep[b]);
    }
  }
  return out;
}

template <typename Transform, typename Payoff>
double mc_batch(const JointPosterior& joint, int mc_samples, std::uint64_t seed, Transform transform, Payoff payoff) {
  if (mc_samples < 1 || joint.mean.size() < 1) {
    throw InvalidArgument("batch criterion: need q >= 1 and at least one sample");
  }
  const JointPosterior jp = merge_duplicates(joint);
  const Eigen::Index q = jp.mean.size();
  const Eigen::MatrixXd l = psd_cholesky(jp.covariance);
  const Eigen::MatrixXd z = normal_base_samples(mc_samples, static_cast<int>(q), seed);
  const Eigen::MatrixXd draws = (z * l.transpose()).rowwise() + jp.mean.transpose();
  double total = 0.0;
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      best = std::max(best, payoff(transform(draws(i, j))));
    }
    total += best;
  }
  return total / static_cast<double>(mc_samples);
}

}  // namespace

double ei(const LatentPosterior& post, double f_min) {
  const double sd = sd_of(post);
  const double diff = f_min - post.mean;
  if (sd < kMinSd) {
    return std::max(diff, 0.0);
  }
  const double z = diff / sd;
  return std::max(diff * normal::cdf(z) + sd * normal::pdf(z), 0.0);
}

double tei(const LatentPosterior& post, double f_min, double f_b) {
  check_truncation(f_min, f_b);
  return std::max(ei(post, f_min) - ei(post, f_b), 0.0);
}

double probability_below(const LatentPosterior& post, double f_b) {
  const double sd = sd_of(post);
  if (sd < kMinSd) {
    return post.mean < f_b ? 1.0 : 0.0;
  }
  return normal::cdf((f_b - post.mean) / sd);
}

double slog_pi(const LatentPosterior& latent, double f_min, double shift) {
  const double eta = f_min + shift;
  if (!(eta > 0.0)) {
    throw DomainError("slog_pi: f_min + shift must be positive");
  }
  const double sd = sd_of(latent);
  if (sd < kMinSd) {
    return std::exp(latent.mean) - shift <= f_min ? 1.0 : 0.0;
  }
  return normal::cdf((std::log(eta) - latent.mean) / sd);
}

double slog_ei(const LatentPosterior& latent, double f_min, double shift) {
  const double eta = f_min + shift;
  if (!(eta > 0.0)) {
    throw DomainError("slog_ei: f_min + shift must be positive");
  }
  return lognormal_shortfall(eta, latent.mean, sd_of(latent));
}

SlogEiPartials slog_ei_partials(const LatentPosterior& latent, double f_min, double shift) {
  const double eta = f_min + shift;
  if (!(eta > 0.0)) {
    throw DomainError("slog_ei: f_min + shift must be positive");
  }
  const double sd = sd_of(latent);
  if (sd < kMinSd) {
    throw UndefinedGradient("slog_ei gradient undefined at zero predictive spread");
  }
  return lognormal_shortfall_partials(eta, latent.mean, sd);
}

Eigen::VectorXd slog_ei_grad(const PosteriorGradient& latent, double f_min, double shift) {
  const LatentPosterior lp{latent.mean, latent.variance};
  const SlogEiPartials p = slog_ei_partials(lp, f_min, shift);
  const double sd = sd_of(lp);
  // d sigma / dx = d var / dx / (2 sigma)
  return p.d_mean * latent.d_mean + p.d_sd * latent.d_variance / (2.0 * sd);
}

double slog_tei(const LatentPosterior& latent, double f_min, double f_b, double shift) {
  check_truncation(f_min, f_b);
  const double upper = slog_ei(latent, f_min, shift);
  const double eta_b = f_b + shift;
  if (!(eta_b > 0.0)) {
    return upper;
  }
  return std::max(upper - lognormal_shortfall(eta_b, latent.mean, sd_of(latent)), 0.0);
}

double mes_b_of_gamma(double gamma) {
  constexpr double kCap = 1e10;
  if (std::isinf(gamma)) {
    return gamma > 0.0 ? 0.0 : kCap;
  }
  const double v = 0.5 * gamma * normal::pdf_over_cdf(gamma) - normal::log_cdf(gamma);
  return std::clamp(v, 0.0, kCap);
}

LogMes log_mes_b_of_gamma(double gamma) {
  const double inf = std::numeric_limits<double>::infinity();
  if (std::isinf(gamma)) {
    return gamma > 0.0 ? LogMes{-inf, -inf} : LogMes{std::log(mes_b_of_gamma(gamma)), 0.0};
  }
  if (gamma <= 0.0) {
    const double v = mes_b_of_gamma(gamma);
    const double r = normal::pdf_over_cdf(gamma);
    return {std::log(v), -0.5 * r * (1.0 + gamma * gamma + gamma * r) / v};
  }
  // mes = phi(gamma) * b with b = gamma / (2 Phi) - ln(Phi) / phi; the second
  // term is the upper-tail Mills ratio times -log1p(-Q) / Q, Q = Phi(-gamma).
  const double q = normal::cdf(-gamma);
  const double big = 1.0 - q;
  const double mills = 1.0 / normal::pdf_over_cdf(-gamma);
  const double c = q > 0.0 ? -std::log1p(-q) / q : 1.0;
  const double b = 0.5 * gamma / big + mills * c;
  const double num = -0.5 * (1.0 + gamma * gamma) / big - 0.5 * gamma * normal::pdf(gamma) / (big * big);
  return {-0.5 * gamma * gamma - normal::kLogSqrt2Pi + std::log(b), num / b};
}

double log_mes_b(const LatentPosterior& post, double f_b) {
  const double sd = sd_of(post);
  if (sd < kMinSd) {
    const double inf = std::numeric_limits<double>::infinity();
    return log_mes_b_of_gamma(post.mean > f_b ? inf : -inf).value;
  }
  return log_mes_b_of_gamma((post.mean - f_b) / sd).value;
}

double mes_b(const LatentPosterior& post, double f_b) {
  const double sd = sd_of(post);
  if (sd < kMinSd) {
    const double inf = std::numeric_limits<double>::infinity();
    return mes_b_of_gamma(post.mean > f_b ? inf : -inf);
  }
  return mes_b_of_gamma((post.mean - f_b) / sd);
}

double q_slog_tei(const JointPosterior& latent, double f_min, double f_b, double shift, int mc_samples,
                  std::uint64_t seed) {
  check_truncation(f_min, f_b);
  if (!(f_min + shift > 0.0)) {
    throw DomainError("q_slog_tei: f_min + shift must be positive");
  }
  return mc_batch(
      latent, mc_samples, seed, [shift](double g) { return std::exp(g) - shift; },
      [f_min, f_b](double xi) { return std::max(f_min - xi, 0.0) - std::max(f_b - xi, 0.0); });
}

double q_ei(const JointPosterior& post, double f_min, int mc_samples, std::uint64_t seed) {
  return mc_batch(
      post, mc_samples, seed, [](double v) { return v; }, [f_min](double xi) { return std::max(f_min - xi, 0.0); });
}

}  // namespace acq

// ------------------------------------------------------------- maximizer

AcquisitionMaximum maximize_acquisition(const Acquisition& acquisition, const AcquisitionBudget& budget,
                                        std::uint64_t seed) {
  const int d = acquisition.dim;
  if (d < 1 || budget.raw_samples < 1) {
    throw InvalidArgument("maximize_acquisition: need a positive dimension and raw-sample budget");
  }
  const Eigen::MatrixXd raw = shifted_halton(budget.raw_samples, d, seed);
  std::vector<double> values(static_cast<std::size_t>(raw.rows()));
  bool any_finite = false;
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const double v = acquisition.value(raw.row(i).transpose());
    values[static_cast<std::size_t>(i)] = std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
    any_finite = any_finite || !std::isnan(v);
  }
  if (!any_finite) {
    throw NumericalError("maximize_acquisition: acquisition is NaN at every raw sample");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

  AcquisitionMaximum best;
  best.point = raw.row(static_cast<Eigen::Index>(order.front())).transpose();
  best.value = values[order.front()];
  best.best_raw_value = best.value;

  const Eigen::VectorXd lo = Eigen::VectorXd::Zero(d);
  const Eigen::VectorXd hi = Eigen::VectorXd::Ones(d);
  auto negated_value = [&](const Eigen::VectorXd& x) {
    const double v = acquisition.value(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : -v;
  };
  optim::Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) -> double {
    if (!grad) {
      return negated_value(x);
    }
    if (acquisition.value_and_gradient) {
      try {
        Eigen::VectorXd g(d);
        const double v = acquisition.value_and_gradient(x, g);
        if (g.allFinite() && std::isfinite(v)) {
          *grad = -g;
          return -v;
        }
      } catch (const UndefinedGradient&) {
      }
    }
    *grad = optim::finite_difference_gradient(negated_value, x, lo, hi);
    return negated_value(x);
  };

  optim::BoxOptions opts;
  opts.max_iterations = 100;
  opts.relative_f_tol = 1e-10;
  const int restarts = std::min<int>(budget.restarts, static_cast<int>(order.size()));
  for (int r = 0; r < restarts; ++r) {
    const std::size_t idx = order[static_cast<std::size_t>(r)];
    if (!std::isfinite(values[idx])) {
      break;
    }
    const optim::BoxResult res = optim::minimize_box(objective, raw.row(static_cast<Eigen::Index>(idx)).transpose(), lo, hi, opts);
    const double v = -res.value;
    if (v > best.value) {
      best.value = v;
      best.point = res.x;
    }
  }
  best.point = best.point.cwiseMax(lo).cwiseMin(hi);
  return best;
}

// ------------------------------------------------------------- builders

namespace {

LatentPosterior as_latent(const PosteriorGradient& p) { return {p.mean, p.variance}; }

// (d alpha / d mean, d alpha / d sd) for the Gaussian criteria.
std::pair<double, double> gaussian_partials(Criterion c, double mean, double sd, double f_min, double f_b) {
  auto ei_partials = [&](double target) {
    const double z = (target - mean) / sd;
    return std::pair{-normal::cdf(z), normal::pdf(z)};
  };
  switch (c) {
    case Criterion::EI:
      return ei_partials(f_min);
    case Criterion::TEI: {
      const auto [a_m, a_s] = ei_partials(f_min);
      const auto [b_m, b_s] = ei_partials(f_b);
      return {a_m - b_m, a_s - b_s};
    }
    default:
      throw InvalidArgument("gaussian criterion expected");
  }
}

}  // namespace

Acquisition make_gp_acquisition(const GaussianProcess& gp, Criterion criterion, double f_min,
                                std::optional<double> f_b) {
  if (criterion != Criterion::EI && criterion != Criterion::TEI && criterion != Criterion::MES_b) {
    throw InvalidArgument("make_gp_acquisition: criterion must be EI, TEI or MES_b");
  }
  if (criterion != Criterion::EI && !f_b) {
    throw InvalidArgument("make_gp_acquisition: TEI and MES_b need a lower bound");
  }
  const double bound = f_b.value_or(-std::numeric_limits<double>::infinity());
  if (criterion == Criterion::TEI) {
    acq::tei({0.0, 1.0}, f_min, bound);  // validates f_b <= f_min up front
  }
  auto evaluate = [criterion, f_min, bound](const LatentPosterior& p) {
    switch (criterion) {
      case Criterion::EI:
        return acq::ei(p, f_min);
      case Criterion::TEI:
        return acq::tei(p, f_min, bound);
      default:
        return acq::log_mes_b(p, bound);
    }
  };
  Acquisition a;
  a.dim = gp.dim();
  a.value = [&gp, evaluate](const Eigen::VectorXd& x) { return evaluate(gp.posterior(x)); };
  a.value_and_gradient = [&gp, evaluate, criterion, f_min, bound](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const PosteriorGradient p = gp.posterior_with_gradient(x);
    const double sd = std::sqrt(p.variance);
    if (sd < acq::kMinSd) {
      throw UndefinedGradient("zero predictive spread");
    }
    if (criterion == Criterion::MES_b) {
      const double gamma = (p.mean - bound) / sd;
      const double d_gamma = acq::log_mes_b_of_gamma(gamma).d_gamma;
      grad = d_gamma * (p.d_mean - gamma * p.d_variance / (2.0 * sd)) / sd;
      return evaluate(as_latent(p));
    }
    const auto [dm, ds] = gaussian_partials(criterion, p.mean, sd, f_min, bound);
    grad = dm * p.d_mean + ds * p.d_variance / (2.0 * sd);
    return evaluate(as_latent(p));
  };
  return a;
}

Acquisition make_slog_acquisition(const SlogGPModel& model, Criterion criterion, double f_min,
                                  std::optional<double> f_b) {
  if (criterion != Criterion::SlogEI && criterion != Criterion::SlogTEI) {
    throw InvalidArgument("make_slog_acquisition: criterion must be SlogEI or SlogTEI");
  }
  if (criterion == Criterion::SlogTEI && !f_b) {
    throw InvalidArgument("make_slog_acquisition: SlogTEI needs a lower bound");
  }
  const double shift = model.shift();
  const double bound = f_b.value_or(-std::numeric_limits<double>::infinity());
  const bool truncate = criterion == Criterion::SlogTEI && bound + shift > 0.0;
  if (criterion == Criterion::SlogTEI && bound > f_min) {
    throw InvalidArgument("SlogTEI: f_b must not exceed f_min");
  }
  const GaussianProcess& gp = model.latent();
  Acquisition a;
  a.dim = gp.dim();
  a.value = [&gp, criterion, f_min, bound, shift](const Eigen::VectorXd& x) {
    const LatentPosterior p = gp.posterior(x);
    return criterion == Criterion::SlogTEI ? acq::slog_tei(p, f_min, bound, shift) : acq::slog_ei(p, f_min, shift);
  };
  a.value_and_gradient = [&gp, criterion, f_min, bound, shift, truncate](const Eigen::VectorXd& x,
                                                                          Eigen::VectorXd& grad) {
    const PosteriorGradient p = gp.posterior_with_gradient(x);
    grad = acq::slog_ei_grad(p, f_min, shift);
    if (truncate) {
      grad -= acq::slog_ei_grad(p, bound, shift);
    }
    const LatentPosterior lp = as_latent(p);
    return criterion == Criterion::SlogTEI ? acq::slog_tei(lp, f_min, bound, shift) : acq::slog_ei(lp, f_min, shift);
  };
  return a;
}

namespace {

Eigen::MatrixXd unstack(const Eigen::VectorXd& x, int q, int d) {
  Eigen::MatrixXd pts(q, d);
  for (int j = 0; j < q; ++j) {
    pts.row(j) = x.segment(j * d, d).transpose();
  }
  return pts;
}

// Stacked batch with exact repeats dropped, so a duplicated point is the same
// random variable as the original rather than a separately rounded copy.
Eigen::MatrixXd distinct_points(const Eigen::VectorXd& x, int q, int d) {
  const Eigen::MatrixXd pts = unstack(x, q, d);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    if (std::none_of(keep.begin(), keep.end(), [&](Eigen::Index k) { return pts.row(i) == pts.row(k); })) {
      keep.push_back(i);
    }
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), d);
  for (std::size_t a = 0; a < keep.size(); ++a) {
    out.row(static_cast<Eigen::Index>(a)) = pts.row(keep[a]);
  }
  return out;
}

}  // namespace

Acquisition make_batch_slog_acquisition(const SlogGPModel& model, double f_min, std::optional<double> f_b, int q,
                                        int mc_samples, std::uint64_t seed) {
  if (q < 1) {
    throw InvalidArgument("batch acquisition: q must be positive");
  }
  const int d = model.latent().dim();
  const double bound = f_b.value_or(-std::numeric_limits<double>::infinity());
  const double shift = model.shift();
  Acquisition a;
  a.dim = q * d;
  a.value = [&model, q, d, f_min, bound, shift, mc_samples, seed](const Eigen::VectorXd& x) {
    const JointPosterior jp = model.latent().joint_posterior(distinct_points(x, q, d));
    return acq::q_slog_tei(jp, f_min, bound, shift, mc_samples, seed);
  };
  return a;
}

Acquisition make_batch_gp_acquisition(const GaussianProcess& gp, double f_min, int q, int mc_samples,
                                      std::uint64_t seed) {
  if (q < 1) {
    throw InvalidArgument("batch acquisition: q must be positive");
  }
  const int d = gp.dim();
  Acquisition a;
  a.dim = q * d;
  a.value = [&gp, q, d, f_min, mc_samples, seed](const Eigen::VectorXd& x) {
    return acq::q_ei(gp.joint_posterior(distinct_points(x, q, d)), f_min, mc_samples, seed);
  };
  return a;
}

}  // namespace babo
