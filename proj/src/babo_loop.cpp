#include "babo/babo_loop.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "babo/benchmarks.hpp"
#include "babo/errors.hpp"
#include "babo/sampling.hpp"

namespace babo {

void Thresholds::validate() const {
  if (!(delta1 > 0.0) || !(delta2 > 0.0 && delta2 < 0.5) || !(delta3 > 0.0)) {
    throw InvalidArgument("thresholds: need delta1 > 0, 0 < delta2 < 0.5, delta3 > 0");
  }
}

const char* to_string(Surrogate s) {
  switch (s) {
    case Surrogate::None:
      return "none";
    case Surrogate::GP:
      return "gp";
    case Surrogate::SlogGP:
      return "sloggp";
  }
  return "?";
}

void MethodSpec::validate() const {
  const bool gp_criterion =
      acquisition == Criterion::EI || acquisition == Criterion::TEI || acquisition == Criterion::MES_b;
  const bool slog_criterion = acquisition == Criterion::SlogEI || acquisition == Criterion::SlogTEI;
  switch (surrogate) {
    case Surrogate::None:
      if (acquisition != Criterion::Random) {
        throw ConfigError(name + ": a method without surrogate must be random search");
      }
      break;
    case Surrogate::GP:
      if (!gp_criterion) {
        throw ConfigError(name + ": GP surrogate needs EI, TEI or MES_b");
      }
      break;
    case Surrogate::SlogGP:
      if (!slog_criterion) {
        throw ConfigError(name + ": SlogGP surrogate needs SlogEI or SlogTEI");
      }
      break;
  }
  if (acquisition == Criterion::SlogTEI && !bound_in_acquisition) {
    throw ConfigError(name + ": SlogTEI needs the bound in the acquisition");
  }
  if (shift_at_bound && bound_in_model) {
    throw ConfigError(name + ": a shift held at the bound cannot also be fitted under the prior");
  }
  if ((bound_in_model || shift_at_bound) && surrogate != Surrogate::SlogGP) {
    throw ConfigError(name + ": only the SlogGP can use the bound in the model");
  }
}

bool MethodSpec::needs_bound() const {
  return bound_in_model || bound_in_acquisition || shift_at_bound || acquisition == Criterion::TEI ||
         acquisition == Criterion::MES_b;
}

std::vector<std::string> method_names() {
  return {"babo",          "babo_fixed",      "gp_ei",          "gp_tei",        "gp_mesb",   "random",
          "sloggp_slogei", "sloggp_b_slogei", "sloggp_slogtei", "babo_map_only", "babo_map_u"};
}

MethodSpec method_by_name(const std::string& name) {
  MethodSpec m;
  m.name = name;
  if (name == "babo") {
    m.surrogate = Surrogate::SlogGP;
    m.acquisition = Criterion::SlogTEI;
    m.bound_in_model = true;
    m.bound_in_acquisition = true;
  } else if (name == "babo_fixed") {
    m.surrogate = Surrogate::SlogGP;
    m.acquisition = Criterion::SlogEI;
    m.shift_at_bound = true;
  } else if (name == "gp_ei") {
    m.surrogate = Surrogate::GP;
    m.acquisition = Criterion::EI;
  } else if (name == "gp_tei") {
    m.surrogate = Surrogate::GP;
    m.acquisition = Criterion::TEI;
    m.bound_in_acquisition = true;
  } else if (name == "gp_mesb") {
    m.surrogate = Surrogate::GP;
    m.acquisition = Criterion::MES_b;
    m.bound_in_acquisition = true;
  } else if (name == "random") {
    m.surrogate = Surrogate::None;
    m.acquisition = Criterion::Random;
  } else if (name == "sloggp_slogei") {
    m.surrogate = Surrogate::SlogGP;
    m.acquisition = Criterion::SlogEI;
  } else if (name == "sloggp_b_slogei") {
    m.surrogate = Surrogate::SlogGP;
    m.acquisition = Criterion::SlogEI;
    m.bound_in_model = true;
  } else if (name == "sloggp_slogtei") {
    m.surrogate = Surrogate::SlogGP;
    m.acquisition = Criterion::SlogTEI;
    m.bound_in_acquisition = true;
  } else if (name == "babo_map_only") {
    m = method_by_name("babo");
    m.name = name;
    m.conflict_detection = false;
    m.variance_gate = false;
  } else if (name == "babo_map_u") {
    m = method_by_name("babo");
    m.name = name;
    m.variance_gate = false;
  } else {
    throw ConfigError("unknown method: " + name);
  }
  return m;
}

ShiftPrior build_prior(double f_min, double f_b, double uncertainty, const Thresholds& thresholds,
                       double value_scale) {
  return ShiftPrior::make(f_min, std::min(f_b, f_min), uncertainty, thresholds.delta1, 1e-8 * value_scale);
}

namespace {

double checked_eval(const UnitObjective& objective, const Eigen::VectorXd& x) {
  const double y = objective(x);
  if (std::isnan(y)) {
    throw EvaluationFailure("objective returned NaN");
  }
  return y;
}

void evaluate_points(LoopState& state, const Eigen::MatrixXd& points, const UnitObjective& objective,
                     StepDiagnostics& diag) {
  diag.points = points;
  diag.values.resize(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::VectorXd x = points.row(i).transpose().cwiseMax(0.0).cwiseMin(1.0);
    const double y = checked_eval(objective, x);
    diag.values(i) = y;
    state.data.add(x, y);
  }
}

Eigen::MatrixXd unstack(const Eigen::VectorXd& x, int q, int d) {
  Eigen::MatrixXd pts(q, d);
  for (int j = 0; j < q; ++j) {
    pts.row(j) = x.segment(j * d, d).transpose();
  }
  return pts;
}

StepDiagnostics begin_step(const LoopState& state) {
  if (state.data.size() < 2) {
    throw InvalidArgument("loop step: need at least two observations");
  }
  if (state.batch_size < 1) {
    throw InvalidArgument("loop step: batch size must be positive");
  }
  StepDiagnostics diag;
  diag.iteration = state.iteration;
  diag.uncertainty = state.uncertainty;
  return diag;
}

StepDiagnostics random_step(LoopState& state, const UnitObjective& objective) {
  StepDiagnostics diag = begin_step(state);
  Rng rng(derive_seed(state.seed, "random", static_cast<std::uint64_t>(state.iteration)));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd pts(state.batch_size, state.data.dim());
  for (Eigen::Index i = 0; i < pts.size(); ++i) {
    pts(i / pts.cols(), i % pts.cols()) = unif(rng);
  }
  diag.distance_to_best = (pts.row(0).transpose() - state.data.best_input()).norm();
  evaluate_points(state, pts, objective, diag);
  ++state.iteration;
  return diag;
}

StepDiagnostics gp_step(LoopState& state, const MethodSpec& method, const UnitObjective& objective) {
  StepDiagnostics diag = begin_step(state);
  const bool needs_fb = method.acquisition == Criterion::TEI || method.acquisition == Criterion::MES_b;
  if (needs_fb && !state.f_b) {
    throw ConfigError(method.name + ": needs a lower bound");
  }
  const int d = state.data.dim();
  const int q = state.batch_size;
  if (q > 1 && method.acquisition != Criterion::EI) {
    throw ConfigError(method.name + ": batches are only supported for EI");
  }
  const ScaledValues sv = scale_values(state.data.values(), needs_fb ? state.f_b : std::nullopt,
                                       ValueScaling::Standardize);
  const Dataset data(state.data.inputs(), sv.values);
  const double f_min = data.best_value();
  std::optional<double> fb_s;
  if (needs_fb) {
    fb_s = std::min(*sv.f_b, f_min);
  }
  FitOptions opts;
  opts.starts = state.fit_starts;
  opts.seed = derive_seed(state.seed, "fit", static_cast<std::uint64_t>(state.iteration));
  opts.warm_start = state.gp_warm;
  const GPFit fit = gp_fit(data, NoisePolicy::Adaptive(state.previous_signal_variance), opts);
  const GaussianProcess gp(data.inputs(), data.values(), fit.hp);

  const AcquisitionBudget budget = AcquisitionBudget::for_dim(d);
  const std::uint64_t acq_seed = derive_seed(state.seed, "acquisition", static_cast<std::uint64_t>(state.iteration));
  Eigen::MatrixXd pts;
  if (q == 1) {
    const Acquisition a = make_gp_acquisition(gp, method.acquisition, f_min, fb_s);
    pts = maximize_acquisition(a, budget, acq_seed).point.transpose();
  } else {
    const Acquisition a = make_batch_gp_acquisition(
        gp, f_min, q, state.mc_samples, derive_seed(state.seed, "mc", static_cast<std::uint64_t>(state.iteration)));
    pts = unstack(maximize_acquisition(a, budget, acq_seed).point, q, d);
  }
  const Eigen::VectorXd x0 = pts.row(0).transpose();
  const LatentPosterior post = gp.posterior(x0);
  const double sd = sv.record.scale;
  diag.fit_mode = FitMode::MLE;
  diag.signal_variance = fit.hp.signal_variance;
  diag.predicted_gap = (post.mean - f_min) * sd;
  diag.predicted_variance = post.variance * sd * sd;
  diag.distance_to_best = (x0 - state.data.best_input()).norm();

  state.gp_warm = fit.hp;
  state.previous_signal_variance = fit.hp.signal_variance;
  evaluate_points(state, pts, objective, diag);
  ++state.iteration;
  return diag;
}

StepDiagnostics slog_step(LoopState& state, const MethodSpec& method, const UnitObjective& objective) {
  StepDiagnostics diag = begin_step(state);
  // The bound is only read when the method asks for it.
  const bool bound_model = method.bound_in_model && state.f_b.has_value();
  const bool bound_acq = method.bound_in_acquisition && state.f_b.has_value();
  if (method.shift_at_bound && !state.f_b) {
    throw ConfigError(method.name + ": needs a lower bound");
  }
  const bool needs_fb = bound_model || bound_acq || method.shift_at_bound;
  const int d = state.data.dim();
  const int q = state.batch_size;
  const Thresholds& thr = state.thresholds;

  const ScaledValues sv =
      scale_values(state.data.values(), needs_fb ? state.f_b : std::nullopt, ValueScaling::ScaleOnly);
  const double sd = sv.record.scale;
  const Dataset data(state.data.inputs(), sv.values);
  const double f_min = data.best_value();
  std::optional<double> fb_s;
  if (needs_fb) {
    fb_s = std::min(*sv.f_b, f_min);
  }
  const NoisePolicy noise = NoisePolicy::Adaptive(state.previous_signal_variance);
  SlogFitOptions opts;
  opts.starts = state.fit_starts;
  opts.seed = derive_seed(state.seed, "fit", static_cast<std::uint64_t>(state.iteration));
  if (state.slog_warm) {
    opts.warm_start = SlogWarmStart{state.slog_warm->hp, state.slog_warm->shift / sd};
  }

  std::optional<SlogFit> fit;
  if (method.shift_at_bound) {
    fit.emplace(sloggp_fit_fixed_shift(data, -*fb_s, noise, opts));
  } else if (bound_model) {
    const ShiftPrior prior = build_prior(f_min, *fb_s, state.uncertainty, thr, value_scale(sv.values));
    fit.emplace(sloggp_fit_map(data, prior, noise, opts));
    diag.prior_cdf = prior_cdf(prior, fit->model.shift());
    if (method.conflict_detection && (diag.prior_cdf < thr.delta2 || diag.prior_cdf > 1.0 - thr.delta2)) {
      diag.conflict = true;
      fit.emplace(sloggp_fit_mle(data, noise, opts));
      diag.conflict_z = prior.z_score(fit->model.shift());
      state.uncertainty *= std::max(1.0, std::abs(diag.conflict_z));
    }
    if (fit->model.fit_mode() == FitMode::MAP && method.variance_gate &&
        fit->model.hp().signal_variance < thr.delta3) {
      diag.variance_gate = true;
      fit.emplace(sloggp_fit_mle(data, noise, opts));
    }
  } else {
    fit.emplace(sloggp_fit_mle(data, noise, opts));
  }
  const SlogGPModel& model = fit->model;

  Criterion criterion = method.acquisition;
  const std::optional<double> acq_fb = bound_acq ? fb_s : std::nullopt;
  if (criterion == Criterion::SlogTEI && !acq_fb) {
    criterion = Criterion::SlogEI;
  }
  const AcquisitionBudget budget = AcquisitionBudget::for_dim(d);
  const std::uint64_t acq_seed = derive_seed(state.seed, "acquisition", static_cast<std::uint64_t>(state.iteration));
  Eigen::MatrixXd pts;
  if (q == 1) {
    const Acquisition a = make_slog_acquisition(model, criterion, f_min, acq_fb);
    pts = maximize_acquisition(a, budget, acq_seed).point.transpose();
  } else {
    const Acquisition a = make_batch_slog_acquisition(
        model, f_min, criterion == Criterion::SlogTEI ? acq_fb : std::nullopt, q, state.mc_samples,
        derive_seed(state.seed, "mc", static_cast<std::uint64_t>(state.iteration)));
    pts = unstack(maximize_acquisition(a, budget, acq_seed).point, q, d);
  }

  const Eigen::VectorXd x0 = pts.row(0).transpose();
  const SlogPosterior post = model.posterior(x0);
  diag.fit_mode = model.fit_mode();
  diag.uncertainty = state.uncertainty;
  diag.zeta_hat = model.shift() * sd;
  diag.signal_variance = model.hp().signal_variance;
  diag.predicted_gap = (post.pred_mean - f_min) * sd;
  diag.predicted_variance = post.pred_variance * sd * sd;
  diag.distance_to_best = (x0 - state.data.best_input()).norm();
  diag.bound_violations = bound_violations(model, x0, f_min);

  state.previous_signal_variance = model.hp().signal_variance;
  state.slog_warm = SlogWarmStart{model.hp(), model.shift() * sd};
  evaluate_points(state, pts, objective, diag);
  ++state.iteration;
  return diag;
}

}  // namespace

StepDiagnostics babo_step(LoopState& state, const UnitObjective& objective) {
  return slog_step(state, method_by_name("babo"), objective);
}

StepDiagnostics method_step(LoopState& state, const MethodSpec& method, const UnitObjective& objective) {
  switch (method.surrogate) {
    case Surrogate::None:
      return random_step(state, objective);
    case Surrogate::GP:
      return gp_step(state, method, objective);
    case Surrogate::SlogGP:
      return slog_step(state, method, objective);
  }
  throw ConfigError("unknown surrogate");
}

RegretTrace run_loop(const Problem& problem, const LoopConfig& config, const MethodSpec& method,
                     std::uint64_t seed, int repetition) {
  method.validate();
  config.thresholds.validate();
  if (problem.dim < 1 || !problem.objective) {
    throw InvalidArgument("run_loop: problem needs a dimension and an objective");
  }
  if (config.iterations < 0 || config.batch_size < 1) {
    throw InvalidArgument("run_loop: need iterations >= 0 and batch_size >= 1");
  }
  if (method.needs_bound() && !config.f_b) {
    throw ConfigError(method.name + ": needs a lower bound but none was given");
  }
  const auto rep = static_cast<std::uint64_t>(repetition);
  const int n0 = config.initial_points > 0 ? config.initial_points : 4 * problem.dim;

  LoopState state;
  state.data = Dataset(problem.dim);
  state.f_b = config.f_b;
  state.thresholds = config.thresholds;
  state.uncertainty = config.initial_uncertainty;
  state.seed = derive_seed(seed, "stream", rep);
  state.batch_size = config.batch_size;
  state.mc_samples = config.mc_samples;
  state.fit_starts = config.fit_starts;

  RegretTrace trace;
  trace.problem = problem.name;
  trace.method = method.name;
  trace.repetition = repetition;
  trace.initial_points = n0;
  const Eigen::MatrixXd design = latin_hypercube(n0, problem.dim, derive_seed(seed, "design", rep));
  for (int i = 0; i < n0; ++i) {
    const Eigen::VectorXd x = design.row(i).transpose();
    state.data.add(x, checked_eval(problem.objective, x));
    trace.best_values.push_back(state.data.best_value());
  }
  for (int t = 0; t < config.iterations; ++t) {
    StepDiagnostics diag = method_step(state, method, problem.objective);
    const int first = state.data.size() - static_cast<int>(diag.values.size());
    double best = trace.best_values.back();
    for (int i = first; i < state.data.size(); ++i) {
      best = std::min(best, state.data.values()(i));
      trace.best_values.push_back(best);
    }
    trace.bound_violations += diag.bound_violations;
    trace.steps.push_back(std::move(diag));
  }
  if (problem.optimum) {
    trace.regrets.reserve(trace.best_values.size());
    for (double b : trace.best_values) {
      trace.regrets.push_back(b - *problem.optimum);
    }
  }
  return trace;
}

}  // namespace babo
