#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "babo/benchmarks.hpp"
#include "babo/errors.hpp"
#include "babo/sampling.hpp"

using namespace babo;

namespace {

double at(const std::string& name, std::initializer_list<double> x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  std::copy(x.begin(), x.end(), v.data());
  return evaluate(find_test_function(name), v);
}

}  // namespace

TEST_CASE("registry") {
  const std::set<std::string> expected{"branin",      "beale",       "sixhumpcamel", "levy",   "hartmann3",
                                       "dixonprice4", "rosenbrock4", "ackley6",      "powell8", "styblinskitang10"};
  std::set<std::string> names;
  for (const auto& f : test_functions()) {
    names.insert(f.name);
    CHECK(f.lower.size() == f.dim);
    CHECK(f.upper.size() == f.dim);
    CHECK((f.lower.array() < f.upper.array()).all());
  }
  CHECK(names == expected);
  const std::vector<std::string> defaults = default_function_names();
  CHECK(defaults == std::vector<std::string>{"branin", "beale", "sixhumpcamel", "hartmann3", "rosenbrock4", "ackley6",
                                             "powell8", "styblinskitang10"});
  CHECK_THROWS_AS(find_test_function("nope"), ConfigError);
}

TEST_CASE("domains as tabulated") {
  auto box_is = [](const std::string& n, std::vector<double> lo, std::vector<double> hi) {
    const TestFunction& f = find_test_function(n);
    if (lo.size() == 1) {
      lo.assign(f.dim, lo[0]);
      hi.assign(f.dim, hi[0]);
    }
    return f.lower == Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size())) &&
           f.upper == Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  };
  CHECK(box_is("beale", {-4.5}, {4.5}));
  CHECK(box_is("branin", {-5.0, 0.0}, {10.0, 15.0}));
  CHECK(box_is("sixhumpcamel", {-3.0, -2.0}, {3.0, 2.0}));
  CHECK(box_is("levy", {-10.0}, {10.0}));
  CHECK(box_is("hartmann3", {0.0}, {1.0}));
  CHECK(box_is("dixonprice4", {-10.0}, {10.0}));
  CHECK(box_is("rosenbrock4", {-2.048}, {2.048}));
  CHECK(box_is("ackley6", {-32.768}, {32.768}));
  CHECK(box_is("powell8", {-4.0}, {5.0}));
  CHECK(box_is("styblinskitang10", {-5.0}, {5.0}));
}

TEST_CASE("known values") {
  CHECK(std::abs(at("branin", {std::numbers::pi, 2.275}) - 0.397887) < 1e-4);
  CHECK(std::abs(at("branin", {-std::numbers::pi, 12.275}) - 0.397887) < 1e-4);
  CHECK(std::abs(at("branin", {9.42478, 2.475}) - 0.397887) < 1e-4);
  CHECK(at("ackley6", {0, 0, 0, 0, 0, 0}) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(std::abs(at("hartmann3", {0.114614, 0.555649, 0.852547}) + 3.86278) < 1e-4);
  CHECK(at("beale", {3.0, 0.5}) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(at("levy", {1.0, 1.0}) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(at("rosenbrock4", {1, 1, 1, 1}) == 0.0);
  CHECK(at("powell8", {0, 0, 0, 0, 0, 0, 0, 0}) == 0.0);
  CHECK(std::abs(at("sixhumpcamel", {0.0898, -0.7126}) + 1.0316) < 1e-4);
  // hand-evaluated: Rosenbrock at the origin is (d - 1); Beale at the origin 14.203125
  CHECK(at("rosenbrock4", {0, 0, 0, 0}) == doctest::Approx(3.0));
  CHECK(at("beale", {0.0, 0.0}) == doctest::Approx(14.203125));
  // Styblinski-Tang: 0.5 * sum(x^4 - 16 x^2 + 5 x)
  CHECK(at("styblinskitang10", {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}) == doctest::Approx(-50.0));
}

TEST_CASE("every known minimizer attains the registered optimum") {
  for (const auto& f : test_functions()) {
    CAPTURE(f.name);
    REQUIRE(f.optimal_value.has_value());
    if (f.minimizer) {
      CHECK(std::abs(evaluate(f, *f.minimizer) - *f.optimal_value) < 1e-4);
    }
    if (f.table_value) {
      // tabulated optima are rounded to a few digits
      CHECK(std::abs(*f.table_value - *f.optimal_value) <= 1e-4 * std::max(1.0, std::abs(*f.optimal_value)));
    }
  }
}

TEST_CASE("registered optima are not beaten by random search") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& f : test_functions()) {
    const UnitCubeObjective g = scale_inputs(f);
    double best = 1e300;
    for (int i = 0; i < 20000; ++i) {
      Eigen::VectorXd x(f.dim);
      for (int k = 0; k < f.dim; ++k) {
        x(k) = u(rng);
      }
      best = std::min(best, g(x));
    }
    CAPTURE(f.name);
    CHECK(best >= *f.optimal_value - 1e-9);
  }
}

TEST_CASE("domain checks") {
  const TestFunction& b = find_test_function("branin");
  CHECK_THROWS_AS(evaluate(b, Eigen::Vector2d(-5.1, 1.0)), InvalidArgument);
  CHECK_THROWS_AS(evaluate(b, Eigen::Vector2d(0.0, 15.5)), InvalidArgument);
  CHECK_THROWS_AS(evaluate(b, Eigen::Vector3d(0.0, 1.0, 1.0)), InvalidArgument);
  CHECK_NOTHROW(evaluate(b, Eigen::Vector2d(10.0, 15.0)));
  const UnitCubeObjective g = scale_inputs(b);
  CHECK_THROWS_AS(g(Eigen::Vector2d(1.01, 0.5)), InvalidArgument);
}

TEST_CASE("unit-cube scaling") {
  const TestFunction& f = find_test_function("sixhumpcamel");
  const UnitCubeObjective g = scale_inputs(f);
  CHECK(g.to_domain(Eigen::Vector2d(0.0, 0.0)) == f.lower);
  CHECK(g.to_domain(Eigen::Vector2d(1.0, 1.0)) == f.upper);
  CHECK(g.to_domain(Eigen::Vector2d(0.5, 0.5)).isApprox(0.5 * (f.lower + f.upper)));
  CHECK(g(Eigen::Vector2d(0.5, 0.5)) == evaluate(f, Eigen::Vector2d(0.0, 0.0)));
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& fn : test_functions()) {
    const UnitCubeObjective s = scale_inputs(fn);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      Eigen::VectorXd x(fn.dim);
      for (int k = 0; k < fn.dim; ++k) {
        x(k) = u(rng);
      }
      worst = std::max(worst, (s.to_unit(s.to_domain(x)) - x).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("value scaling") {
  SUBCASE("constant history gets unit scale") {
    const ScaledValues s = scale_values(Eigen::VectorXd::Constant(5, 3.0), 1.0, ValueScaling::Standardize);
    CHECK(s.degenerate);
    CHECK(s.record.scale == 1.0);
    CHECK(s.values.isApprox(Eigen::VectorXd::Zero(5)));
    CHECK(*s.f_b == doctest::Approx(-2.0));
  }
  SUBCASE("standardized path") {
    Rng rng(5);
    std::normal_distribution<double> n(10.0, 7.0);
    Eigen::VectorXd y(50);
    for (auto& v : y) {
      v = n(rng);
    }
    const ScaledValues s = scale_values(y, std::nullopt, ValueScaling::Standardize);
    CHECK(std::abs(s.values.mean()) < 1e-12);
    const double sd = std::sqrt((s.values.array() - s.values.mean()).square().sum() / 49.0);
    CHECK(std::abs(sd - 1.0) < 1e-12);
    CHECK_FALSE(s.f_b.has_value());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      CHECK(s.record.invert(s.values(i)) == doctest::Approx(y(i)).epsilon(1e-13));
    }
  }
  SUBCASE("scale-only path preserves the ordering against the bound") {
    const Eigen::VectorXd y = Eigen::Vector4d(-3.0, 0.5, 2.0, 8.0);
    const double f_b = -4.0;
    const ScaledValues s = scale_values(y, f_b, ValueScaling::ScaleOnly);
    CHECK(s.record.offset == 0.0);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      CHECK((s.values(i) - *s.f_b > 0.0) == (y(i) - f_b > 0.0));
      CHECK(s.values(i) == doctest::Approx(y(i) / s.record.scale));
    }
  }
  SUBCASE("empty history") {
    CHECK_THROWS_AS(scale_values(Eigen::VectorXd(0), std::nullopt, ValueScaling::ScaleOnly), InvalidArgument);
  }
}

TEST_CASE("sampled objectives") {
  SUBCASE("consistent under repetition and permutation") {
    for (SampleKind kind : {SampleKind::GP, SampleKind::SlogGP}) {
      const SampledObjective a = sample_objective(kind, 12);
      const SampledObjective b = sample_objective(kind, 12);
      const Eigen::MatrixXd x = latin_hypercube(10, 2, 1);
      std::vector<int> order{9, 3, 0, 7, 1, 8, 2, 6, 5, 4};
      for (int i = 0; i < 10; ++i) {
        CHECK(a(x.row(i).transpose()) == a(x.row(i).transpose()));
      }
      for (int i : order) {
        CHECK(b(x.row(i).transpose()) == a(x.row(i).transpose()));
      }
    }
  }
  SUBCASE("SlogGP realizations stay above the shift") {
    Rng rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double lowest = 1e300;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const SampledObjective f = sample_objective(SampleKind::SlogGP, seed);
      for (int i = 0; i < 1000; ++i) {
        lowest = std::min(lowest, f(Eigen::Vector2d(u(rng), u(rng))));
      }
      CHECK(f.estimated_minimum() > -30.0);
    }
    CHECK(lowest > -30.0);
  }
  SUBCASE("marginal variance across realizations") {
    auto sample_var = [](const std::vector<double>& v) {
      double mean = 0.0;
      for (double x : v) {
        mean += x / static_cast<double>(v.size());
      }
      double var = 0.0;
      for (double x : v) {
        var += (x - mean) * (x - mean) / static_cast<double>(v.size() - 1);
      }
      return var;
    };
    const int n = 10000;
    for (SampleKind kind : {SampleKind::GP, SampleKind::SlogGP}) {
      Rng rng(7);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<double> latent(n);
      std::vector<double> value(n);
      for (int i = 0; i < n; ++i) {
        const SampledObjective f = sample_objective(kind, 1000 + i);
        const Eigen::Vector2d x(u(rng), u(rng));
        latent[i] = f.latent(x);
        value[i] = f(x);
      }
      const SampleParams p = SampleParams::defaults(kind);
      CAPTURE(std::string(to_string(kind)));
      CHECK(std::abs(sample_var(latent) - p.signal_variance) < 0.1 * p.signal_variance);
      if (kind == SampleKind::SlogGP) {
        // The output's sample variance is too heavy-tailed for a 10% check at
        // this size; its mean and median are not.
        const double mean_expected = std::exp(p.mean + 0.5 * p.signal_variance) - p.shift;
        const double var_expected = std::expm1(p.signal_variance) * std::exp(2.0 * p.mean + p.signal_variance);
        double mean = 0.0;
        for (double x : value) {
          mean += x / n;
        }
        CHECK(std::abs(mean - mean_expected) < 4.0 * std::sqrt(var_expected / n));
        std::nth_element(value.begin(), value.begin() + n / 2, value.end());
        CHECK(value[n / 2] == doctest::Approx(std::exp(p.mean) - p.shift).epsilon(0.01));
      }
    }
  }
  SUBCASE("gradient of the latent path") {
    const SampledObjective f = sample_objective(SampleKind::GP, 3);
    Rng rng(8);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int i = 0; i < 20; ++i) {
      const Eigen::Vector2d x(u(rng), u(rng));
      Eigen::VectorXd g;
      const double v = f.latent_with_gradient(x, g);
      CHECK(v == doctest::Approx(f.latent(x)).epsilon(1e-14));
      for (int k = 0; k < 2; ++k) {
        Eigen::Vector2d e = Eigen::Vector2d::Zero();
        e(k) = 1e-6;
        CHECK(g(k) == doctest::Approx((f.latent(x + e) - f.latent(x - e)) / 2e-6).epsilon(1e-5).scale(1.0));
      }
    }
  }
  SUBCASE("estimated minimum is not beaten by dense sampling") {
    const SampledObjective f = sample_objective(SampleKind::GP, 4);
    Rng rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double best = 1e300;
    for (int i = 0; i < 20000; ++i) {
      best = std::min(best, f(Eigen::Vector2d(u(rng), u(rng))));
    }
    CHECK(f.estimated_minimum() <= best + 1e-9);
    CHECK(f(f.estimated_minimizer()) == doctest::Approx(f.estimated_minimum()).epsilon(1e-12));
  }
}

TEST_CASE("cross-validation plumbing") {
  const CrossValidation a = cross_validate(SampleKind::GP, SurrogateKind::GP, 3, 20, 1);
  const CrossValidation b = cross_validate(SampleKind::GP, SurrogateKind::GP, 3, 20, 1);
  CHECK(a.errors.size() + a.failures == 3);
  CHECK(a.errors == b.errors);
  CHECK(a.mean_error >= 0.0);
  const CrossValidation s = cross_validate(SampleKind::SlogGP, SurrogateKind::SlogGP, 3, 20, 1);
  CHECK(s.bound_violations == 0);
}
