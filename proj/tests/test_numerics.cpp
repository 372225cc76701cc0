#include <doctest.h>

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <set>

#include "babo/errors.hpp"
#include "babo/normal.hpp"
#include "babo/optimize.hpp"
#include "babo/sampling.hpp"

using namespace babo;

TEST_CASE("normal helpers agree with boost") {
  const boost::math::normal_distribution<double> ref;
  for (double z = -8.0; z <= 8.0; z += 0.25) {
    CHECK(normal::pdf(z) == doctest::Approx(boost::math::pdf(ref, z)).epsilon(1e-14));
    CHECK(normal::cdf(z) == doctest::Approx(boost::math::cdf(ref, z)).epsilon(1e-13));
    CHECK(normal::log_cdf(z) == doctest::Approx(std::log(boost::math::cdf(ref, z))).epsilon(1e-12));
  }
  for (double p : {1e-10, 0.001, 0.3, 0.5, 0.9, 1 - 1e-9}) {
    CHECK(normal::quantile(p) == doctest::Approx(boost::math::quantile(ref, p)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(normal::quantile(0.0), DomainError);
  CHECK_THROWS_AS(normal::quantile(1.0), DomainError);
}

TEST_CASE("normal tails stay finite") {
  // log Phi(z) ~ -z^2/2 - log(-z) - log sqrt(2 pi) for z -> -inf
  for (double z : {-40.0, -100.0, -1e3}) {
    const double asym = -0.5 * z * z - std::log(-z) - normal::kLogSqrt2Pi;
    // the next series term is -1/z^2
    CHECK(std::abs(normal::log_cdf(z) - asym) < 2.0 / (z * z));
    CHECK(std::isfinite(normal::pdf_over_cdf(z)));
    CHECK(normal::pdf_over_cdf(z) == doctest::Approx(-z).epsilon(2.0 / (z * z)));
  }
  CHECK(normal::pdf_over_cdf(40.0) == doctest::Approx(0.0).epsilon(1e-300));
  // upper tail: log Phi(z) = log1p(-Phi(-z)) ~ -Phi(-z), not a rounded zero
  for (double z : {9.0, 12.0, 30.0}) {
    CHECK(normal::log_cdf(z) < 0.0);
    CHECK(normal::log_cdf(z) == doctest::Approx(-normal::cdf(-z)).epsilon(1e-12));
  }
}

TEST_CASE("latin hypercube stratification") {
  SUBCASE("four points in one dimension land in the four quarters") {
    const Eigen::MatrixXd x = latin_hypercube(4, 1, 7);
    std::vector<double> v(x.data(), x.data() + 4);
    std::sort(v.begin(), v.end());
    for (int k = 0; k < 4; ++k) {
      CHECK(v[k] >= k / 4.0);
      CHECK(v[k] < (k + 1) / 4.0);
    }
  }
  SUBCASE("every axis hits every stratum") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const int n = 8;
      const Eigen::MatrixXd x = latin_hypercube(n, 2, seed);
      for (int j = 0; j < 2; ++j) {
        std::set<int> strata;
        for (int i = 0; i < n; ++i) {
          strata.insert(static_cast<int>(std::floor(x(i, j) * n)));
        }
        CHECK(strata.size() == static_cast<std::size_t>(n));
      }
    }
  }
  SUBCASE("identical seed gives identical design") {
    CHECK(latin_hypercube(12, 3, 99) == latin_hypercube(12, 3, 99));
    CHECK(latin_hypercube(12, 3, 99) != latin_hypercube(12, 3, 100));
  }
}

TEST_CASE("derived seeds separate streams") {
  CHECK(derive_seed(1, "a", 0) == derive_seed(1, "a", 0));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "b", 0));
  CHECK(derive_seed(1, "a", 0) != derive_seed(2, "a", 0));
}

TEST_CASE("shifted halton is nested across widths and roughly uniform") {
  const Eigen::MatrixXd a = shifted_halton(256, 3, 5);
  const Eigen::MatrixXd b = shifted_halton(256, 6, 5);
  CHECK(a == b.leftCols(3));
  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() < 1.0);
  for (int j = 0; j < 3; ++j) {
    CHECK(a.col(j).mean() == doctest::Approx(0.5).epsilon(0.02));
  }
  const Eigen::MatrixXd z = normal_base_samples(4096, 2, 3);
  CHECK(z.col(0).mean() == doctest::Approx(0.0).epsilon(0.01));
  CHECK((z.col(1).array().square().mean()) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("projected L-BFGS") {
  using optim::minimize_box;
  SUBCASE("interior quadratic minimum") {
    const optim::Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
      const Eigen::Vector2d c(0.3, 0.7);
      if (g) *g = 2.0 * (x - c);
      return (x - c).squaredNorm();
    };
    const auto r = minimize_box(f, Eigen::Vector2d(0.9, 0.1), Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones());
    CHECK(r.x(0) == doctest::Approx(0.3).epsilon(1e-7));
    CHECK(r.x(1) == doctest::Approx(0.7).epsilon(1e-7));
    CHECK(r.value <= r.initial_value);
  }
  SUBCASE("minimum outside the box is projected onto the face") {
    const optim::Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
      const Eigen::Vector2d c(1.5, 0.4);
      if (g) *g = 2.0 * (x - c);
      return (x - c).squaredNorm();
    };
    const auto r = minimize_box(f, Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones());
    CHECK(r.x(0) == doctest::Approx(1.0));
    CHECK(r.x(1) == doctest::Approx(0.4).epsilon(1e-7));
  }
  SUBCASE("rosenbrock valley") {
    const optim::Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
      const double a = x(1) - x(0) * x(0);
      const double b = 1.0 - x(0);
      if (g) {
        (*g)(0) = -400.0 * x(0) * a - 2.0 * b;
        (*g)(1) = 200.0 * a;
      }
      return 100.0 * a * a + b * b;
    };
    optim::BoxOptions opts;
    opts.max_iterations = 1000;
    const auto r = minimize_box(f, Eigen::Vector2d(-1.2, 1.0), Eigen::Vector2d::Constant(-2.0),
                                Eigen::Vector2d::Constant(2.0), opts);
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-4));
  }
  SUBCASE("finite differences match an analytic gradient") {
    const auto f = [](const Eigen::VectorXd& x) { return std::sin(3.0 * x(0)) * std::exp(x(1)); };
    const Eigen::Vector2d x(0.2, 0.5);
    const Eigen::VectorXd g =
        optim::finite_difference_gradient(f, x, Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones());
    CHECK(g(0) == doctest::Approx(3.0 * std::cos(0.6) * std::exp(0.5)).epsilon(1e-7));
    CHECK(g(1) == doctest::Approx(std::sin(0.6) * std::exp(0.5)).epsilon(1e-7));
  }
}
