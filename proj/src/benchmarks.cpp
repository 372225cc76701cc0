#include "babo/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "babo/errors.hpp"
#include "babo/log.hpp"
#include "babo/optimize.hpp"
#include "babo/sampling.hpp"
#include "babo/sloggp.hpp"

namespace babo {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd filled(int d, double v) { return Eigen::VectorXd::Constant(d, v); }

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) {
    out(i++) = v;
  }
  return out;
}

double branin(const Eigen::VectorXd& x) {
  const double b = 5.1 / (4.0 * kPi * kPi);
  const double c = 5.0 / kPi;
  const double t = 1.0 / (8.0 * kPi);
  const double inner = x(1) - b * x(0) * x(0) + c * x(0) - 6.0;
  return inner * inner + 10.0 * (1.0 - t) * std::cos(x(0)) + 10.0;
}

double beale(const Eigen::VectorXd& x) {
  const double a = 1.5 - x(0) + x(0) * x(1);
  const double b = 2.25 - x(0) + x(0) * x(1) * x(1);
  const double c = 2.625 - x(0) + x(0) * x(1) * x(1) * x(1);
  return a * a + b * b + c * c;
}

double six_hump_camel(const Eigen::VectorXd& x) {
  const double x1 = x(0);
  const double x2 = x(1);
  return (4.0 - 2.1 * x1 * x1 + x1 * x1 * x1 * x1 / 3.0) * x1 * x1 + x1 * x2 + (-4.0 + 4.0 * x2 * x2) * x2 * x2;
}

double levy(const Eigen::VectorXd& x) {
  const Eigen::Index d = x.size();
  auto w = [&](Eigen::Index i) { return 1.0 + (x(i) - 1.0) / 4.0; };
  const double s0 = std::sin(kPi * w(0));
  double total = s0 * s0;
  for (Eigen::Index i = 0; i + 1 < d; ++i) {
    const double wi = w(i);
    const double s = std::sin(kPi * wi + 1.0);
    total += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * s * s);
  }
  const double wd = w(d - 1);
  const double sd = std::sin(2.0 * kPi * wd);
  return total + (wd - 1.0) * (wd - 1.0) * (1.0 + sd * sd);
}

double hartmann3(const Eigen::VectorXd& x) {
  static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  static const double a[4][3] = {{3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
  static const double p[4][3] = {
      {0.3689, 0.1170, 0.2673}, {0.4699, 0.4387, 0.7470}, {0.1091, 0.8732, 0.5547}, {0.0381, 0.5743, 0.8828}};
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double diff = x(j) - p[i][j];
      inner += a[i][j] * diff * diff;
    }
    total -= alpha[i] * std::exp(-inner);
  }
  return total;
}

double dixon_price(const Eigen::VectorXd& x) {
  double total = (x(0) - 1.0) * (x(0) - 1.0);
  for (Eigen::Index i = 1; i < x.size(); ++i) {
    const double t = 2.0 * x(i) * x(i) - x(i - 1);
    total += static_cast<double>(i + 1) * t * t;
  }
  return total;
}

double rosenbrock(const Eigen::VectorXd& x) {
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = x(i + 1) - x(i) * x(i);
    const double b = x(i) - 1.0;
    total += 100.0 * a * a + b * b;
  }
  return total;
}

double ackley(const Eigen::VectorXd& x) {
  const double d = static_cast<double>(x.size());
  const double sq = x.squaredNorm() / d;
  double cos_sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    cos_sum += std::cos(2.0 * kPi * x(i));
  }
  return -20.0 * std::exp(-0.2 * std::sqrt(sq)) - std::exp(cos_sum / d) + 20.0 + std::numbers::e;
}

double powell(const Eigen::VectorXd& x) {
  double total = 0.0;
  for (Eigen::Index i = 0; i + 3 < x.size(); i += 4) {
    const double a = x(i) + 10.0 * x(i + 1);
    const double b = x(i + 2) - x(i + 3);
    const double c = x(i + 1) - 2.0 * x(i + 2);
    const double e = x(i) - x(i + 3);
    total += a * a + 5.0 * b * b + c * c * c * c + 10.0 * e * e * e * e;
  }
  return total;
}

double styblinski_tang(const Eigen::VectorXd& x) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x(i);
    total += v * v * v * v - 16.0 * v * v + 5.0 * v;
  }
  return 0.5 * total;
}

std::vector<TestFunction> build_registry() {
  std::vector<TestFunction> fns;
  auto add = [&](std::string name, Eigen::VectorXd lo, Eigen::VectorXd hi, double opt, double table,
                 Eigen::VectorXd xmin, double (*f)(const Eigen::VectorXd&)) {
    TestFunction fn;
    fn.name = std::move(name);
    fn.dim = static_cast<int>(lo.size());
    fn.lower = std::move(lo);
    fn.upper = std::move(hi);
    fn.optimal_value = opt;
    fn.table_value = table;
    fn.minimizer = std::move(xmin);
    fn.evaluator = f;
    fns.push_back(std::move(fn));
  };
  add("branin", vec({-5.0, 0.0}), vec({10.0, 15.0}), 0.397887357729738, 0.397887, vec({-kPi, 12.275}), branin);
  add("beale", filled(2, -4.5), filled(2, 4.5), 0.0, 0.0, vec({3.0, 0.5}), beale);
  add("sixhumpcamel", vec({-3.0, -2.0}), vec({3.0, 2.0}), -1.031628453489877, -1.0316,
      vec({0.0898420131003, -0.7126564030207}), six_hump_camel);
  add("levy", filled(2, -10.0), filled(2, 10.0), 0.0, 0.0, filled(2, 1.0), levy);
  add("hartmann3", filled(3, 0.0), filled(3, 1.0), -3.862782147820756, -3.86278,
      vec({0.114614, 0.555649, 0.852547}), hartmann3);
  Eigen::VectorXd dp(4);
  for (int i = 0; i < 4; ++i) {
    const double p = std::pow(2.0, i + 1);
    dp(i) = std::pow(2.0, -(p - 2.0) / p);
  }
  add("dixonprice4", filled(4, -10.0), filled(4, 10.0), 0.0, 0.0, dp, dixon_price);
  add("rosenbrock4", filled(4, -2.048), filled(4, 2.048), 0.0, 0.0, filled(4, 1.0), rosenbrock);
  add("ackley6", filled(6, -32.768), filled(6, 32.768), 0.0, 0.0, filled(6, 0.0), ackley);
  add("powell8", filled(8, -4.0), filled(8, 5.0), 0.0, 0.0, filled(8, 0.0), powell);
  add("styblinskitang10", filled(10, -5.0), filled(10, 5.0), -391.6616570377142, -391.6599,
      filled(10, -2.903534027771177), styblinski_tang);
  return fns;
}

}  // namespace

const std::vector<TestFunction>& test_functions() {
  static const std::vector<TestFunction> registry = build_registry();
  return registry;
}

std::vector<std::string> default_function_names() {
  return {"branin", "beale", "sixhumpcamel", "hartmann3", "rosenbrock4", "ackley6", "powell8", "styblinskitang10"};
}

const TestFunction& find_test_function(const std::string& name) {
  for (const auto& fn : test_functions()) {
    if (fn.name == name) {
      return fn;
    }
  }
  throw ConfigError("unknown test function: " + name);
}

double evaluate(const TestFunction& fn, const Eigen::VectorXd& x) {
  if (x.size() != fn.dim) {
    throw InvalidArgument(fn.name + ": expected " + std::to_string(fn.dim) + " inputs");
  }
  for (int i = 0; i < fn.dim; ++i) {
    const double slack = 1e-12 * (fn.upper(i) - fn.lower(i));
    if (!(x(i) >= fn.lower(i) - slack && x(i) <= fn.upper(i) + slack)) {
      throw InvalidArgument(fn.name + ": input outside the domain");
    }
  }
  return fn.evaluator(x);
}

UnitCubeObjective::UnitCubeObjective(const TestFunction& fn) : fn_(&fn) {}

Eigen::VectorXd UnitCubeObjective::to_domain(const Eigen::VectorXd& unit) const {
  Eigen::VectorXd x = fn_->lower + (fn_->upper - fn_->lower).cwiseProduct(unit);
  return x.cwiseMax(fn_->lower).cwiseMin(fn_->upper);
}

Eigen::VectorXd UnitCubeObjective::to_unit(const Eigen::VectorXd& x) const {
  return (x - fn_->lower).cwiseQuotient(fn_->upper - fn_->lower);
}

double UnitCubeObjective::operator()(const Eigen::VectorXd& unit) const {
  for (Eigen::Index i = 0; i < unit.size(); ++i) {
    if (!(unit(i) >= 0.0 && unit(i) <= 1.0)) {
      throw InvalidArgument(fn_->name + ": unit-cube input outside [0,1]");
    }
  }
  return evaluate(*fn_, to_domain(unit));
}

UnitCubeObjective scale_inputs(const TestFunction& fn) { return UnitCubeObjective(fn); }

ScaledValues scale_values(const Eigen::VectorXd& history, std::optional<double> f_b, ValueScaling mode) {
  if (history.size() == 0) {
    throw InvalidArgument("scale_values: empty history");
  }
  const double mean = history.mean();
  double sd = 0.0;
  if (history.size() >= 2) {
    sd = std::sqrt((history.array() - mean).square().sum() / static_cast<double>(history.size() - 1));
  }
  ScaledValues out;
  out.record.offset = mode == ValueScaling::Standardize ? mean : 0.0;
  if (sd > 0.0 && std::isfinite(sd)) {
    out.record.scale = sd;
  } else {
    out.record.scale = 1.0;
    out.degenerate = true;
    if (history.size() >= 2) {
      log_warning("observed values are constant; using unit scale");
    }
  }
  out.values = (history.array() - out.record.offset) / out.record.scale;
  if (f_b) {
    out.f_b = out.record.apply(*f_b);
  }
  return out;
}

const char* to_string(SampleKind kind) { return kind == SampleKind::GP ? "gp" : "sloggp"; }

SampleParams SampleParams::defaults(SampleKind kind) {
  SampleParams p;
  p.kind = kind;
  if (kind == SampleKind::GP) {
    p.signal_variance = 2.0;
    p.mean = 0.0;
    p.shift = 0.0;
  } else {
    p.signal_variance = 1.2;
    p.mean = 0.5;
    p.shift = 30.0;
  }
  p.lengthscale = 0.1;
  return p;
}

namespace {

long ipow(int base, int exp) {
  long r = 1;
  for (int i = 0; i < exp; ++i) {
    r *= base;
  }
  return r;
}

// Applies `m` along one axis of an n^d tensor stored with the last axis
// fastest.
void mode_product(Eigen::VectorXd& t, const Eigen::MatrixXd& m, int axis, int d, int n) {
  const long stride = ipow(n, d - 1 - axis);
  const long outer = ipow(n, axis);
  Eigen::VectorXd fiber(n);
  for (long o = 0; o < outer; ++o) {
    for (long s = 0; s < stride; ++s) {
      const long base = o * n * stride + s;
      for (int k = 0; k < n; ++k) {
        fiber(k) = t(base + k * stride);
      }
      const Eigen::VectorXd out = m * fiber;
      for (int k = 0; k < n; ++k) {
        t(base + k * stride) = out(k);
      }
    }
  }
}

}  // namespace

SampledObjective::SampledObjective(SampleParams params, std::uint64_t seed) : params_(params) {
  const int d = params_.dim;
  const int n = params_.nodes_per_axis;
  if (d < 1 || n < 2 || params_.signal_variance <= 0.0 || params_.lengthscale <= 0.0) {
    throw InvalidArgument("SampledObjective: invalid parameters");
  }
  if (ipow(n, d) > 2'000'000) {
    throw InvalidArgument("SampledObjective: lattice too large; lower nodes_per_axis");
  }
  nodes_ = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double r = (nodes_(i) - nodes_(j)) / params_.lengthscale;
      c(i, j) = std::exp(-0.5 * r * r);
    }
  }
  c.diagonal().array() += 1e-8;
  const CholeskyFactor factor = factorize(c);
  const Eigen::MatrixXd lower = factor.llt.matrixL();

  const long total = ipow(n, d);
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd g(total);
  for (long i = 0; i < total; ++i) {
    g(i) = normal(rng);
  }
  // Off-lattice values are k(x)^T C^-1 g = sigma (L^-1 k(x))^T z per axis;
  // the whitened weights have norm <= 1, which keeps the contraction free of
  // the cancellation that C^-1 g (entries ~ 1 / nugget) would cause.
  coefficients_ = g;
  coefficients_ *= std::sqrt(params_.signal_variance);
  for (int axis = 0; axis < d; ++axis) {
    mode_product(g, lower, axis, d, n);
  }
  g *= std::sqrt(params_.signal_variance);
  lattice_latent_ = g.array() + params_.mean;
  lower_ = lower;
  locate_minimum();
}

double SampledObjective::contract(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
  const int d = params_.dim;
  const int n = params_.nodes_per_axis;
  if (x.size() != d) {
    throw InvalidArgument("SampledObjective: dimension mismatch");
  }
  std::vector<Eigen::VectorXd> weights(d), d_weights(d);
  const double l2 = params_.lengthscale * params_.lengthscale;
  for (int k = 0; k < d; ++k) {
    weights[k].resize(n);
    d_weights[k].resize(n);
    for (int i = 0; i < n; ++i) {
      const double diff = x(k) - nodes_(i);
      weights[k](i) = std::exp(-0.5 * diff * diff / l2);
      d_weights[k](i) = -diff / l2 * weights[k](i);
    }
    lower_.triangularView<Eigen::Lower>().solveInPlace(weights[k]);
    if (grad != nullptr) {
      lower_.triangularView<Eigen::Lower>().solveInPlace(d_weights[k]);
    }
  }
  // Contract the fastest axis first: view the tensor as an n x (rest) matrix.
  auto reduce = [&](int replaced) {
    Eigen::VectorXd t = coefficients_;
    for (int k = d - 1; k >= 0; --k) {
      const long rest = t.size() / n;
      Eigen::Map<const Eigen::MatrixXd> view(t.data(), n, rest);
      const Eigen::VectorXd& w = k == replaced ? d_weights[k] : weights[k];
      t = view.transpose() * w;
    }
    return t(0);
  };
  if (grad != nullptr) {
    grad->resize(d);
    for (int k = 0; k < d; ++k) {
      (*grad)(k) = reduce(k);
    }
  }
  return reduce(-1);
}

double SampledObjective::latent(const Eigen::VectorXd& x) const { return params_.mean + contract(x, nullptr); }

double SampledObjective::latent_with_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  return params_.mean + contract(x, &grad);
}

double SampledObjective::operator()(const Eigen::VectorXd& x) const {
  const double g = latent(x);
  return params_.kind == SampleKind::GP ? g : std::exp(g) - params_.shift;
}

void SampledObjective::locate_minimum() {
  const int d = params_.dim;
  const int n = params_.nodes_per_axis;
  // The output is increasing in the latent value for both kinds, so the
  // search runs on the latent path.
  std::vector<long> order(static_cast<std::size_t>(lattice_latent_.size()));
  std::iota(order.begin(), order.end(), 0L);
  const std::size_t keep = std::min<std::size_t>(5, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(keep), order.end(),
                    [&](long a, long b) { return lattice_latent_(a) < lattice_latent_(b); });
  const Eigen::VectorXd lo = Eigen::VectorXd::Zero(d);
  const Eigen::VectorXd hi = Eigen::VectorXd::Ones(d);
  const optim::Objective obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g != nullptr) {
      return latent_with_gradient(x, *g);
    }
    return latent(x);
  };
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < keep; ++r) {
    Eigen::VectorXd x0(d);
    long idx = order[r];
    for (int k = d - 1; k >= 0; --k) {
      x0(k) = nodes_(idx % n);
      idx /= n;
    }
    const auto res = optim::minimize_box(obj, x0, lo, hi);
    if (res.value < best) {
      best = res.value;
      minimizer_ = res.x;
    }
  }
  minimum_ = params_.kind == SampleKind::GP ? best : std::exp(best) - params_.shift;
}

SampledObjective sample_objective(SampleKind kind, std::uint64_t seed) {
  return SampledObjective(SampleParams::defaults(kind), seed);
}

CrossValidation cross_validate(SampleKind kind, SurrogateKind surrogate, int reps, int n_train,
                               std::uint64_t seed) {
  if (reps < 1 || n_train < 2) {
    throw InvalidArgument("cross_validate: need reps >= 1 and n_train >= 2");
  }
  CrossValidation out;
  const SampleParams params = SampleParams::defaults(kind);
  for (int r = 0; r < reps; ++r) {
    const SampledObjective objective(params, derive_seed(seed, "cv-objective", static_cast<std::uint64_t>(r)));
    Rng rng(derive_seed(seed, "cv-points", static_cast<std::uint64_t>(r)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd x(n_train, params.dim);
    Eigen::VectorXd y(n_train);
    for (int i = 0; i < n_train; ++i) {
      for (int k = 0; k < params.dim; ++k) {
        x(i, k) = unif(rng);
      }
      y(i) = objective(x.row(i).transpose());
    }
    Eigen::VectorXd test(params.dim);
    for (int k = 0; k < params.dim; ++k) {
      test(k) = unif(rng);
    }
    const double truth = objective(test);
    const std::uint64_t fit_seed = derive_seed(seed, "cv-fit", static_cast<std::uint64_t>(r));
    try {
      double prediction = 0.0;
      if (surrogate == SurrogateKind::GP) {
        const ScaledValues scaled = scale_values(y, std::nullopt, ValueScaling::Standardize);
        const Dataset data(x, scaled.values);
        FitOptions opts;
        opts.seed = fit_seed;
        const GPFit fit = gp_fit(data, NoisePolicy::Adaptive(), opts);
        const GaussianProcess gp(x, scaled.values, fit.hp);
        prediction = scaled.record.invert(gp.posterior(test).mean);
      } else {
        const ScaledValues scaled = scale_values(y, std::nullopt, ValueScaling::ScaleOnly);
        const Dataset data(x, scaled.values);
        SlogFitOptions opts;
        opts.seed = fit_seed;
        const SlogFit fit = sloggp_fit_mle(data, NoisePolicy::Adaptive(), opts);
        out.bound_violations += bound_violations(fit.model, test, data.best_value());
        prediction = scaled.record.invert(fit.model.posterior(test).pred_mean);
      }
      if (!std::isfinite(prediction)) {
        throw NumericalError("non-finite prediction");
      }
      out.errors.push_back(std::abs(prediction - truth));
    } catch (const std::exception& e) {
      ++out.failures;
      log_warning(std::string("cross-validation repetition failed: ") + e.what());
    }
  }
  const auto m = static_cast<double>(out.errors.size());
  if (m > 0) {
    out.mean_error = std::accumulate(out.errors.begin(), out.errors.end(), 0.0) / m;
  }
  if (m > 1) {
    double ss = 0.0;
    for (double e : out.errors) {
      ss += (e - out.mean_error) * (e - out.mean_error);
    }
    out.standard_error = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
  }
  return out;
}

}  // namespace babo
