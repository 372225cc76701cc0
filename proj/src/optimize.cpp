#include "babo/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "babo/errors.hpp"

namespace babo::optim {

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Variables sitting on a bound with the gradient pushing further out.
Eigen::ArrayXd free_mask(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi) {
  Eigen::ArrayXd mask = Eigen::ArrayXd::Ones(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool at_lo = x[i] <= lo[i] && g[i] > 0.0;
    const bool at_hi = x[i] >= hi[i] && g[i] < 0.0;
    if (at_lo || at_hi) {
      mask[i] = 0.0;
    }
  }
  return mask;
}

struct Pair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

Eigen::VectorXd two_loop(const std::deque<Pair>& memory, const Eigen::VectorXd& g, const Eigen::ArrayXd& mask) {
  Eigen::VectorXd q = (g.array() * mask).matrix();
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    const auto& p = memory[k];
    alpha[k] = p.rho * p.s.dot(q);
    q -= alpha[k] * (p.y.array() * mask).matrix();
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    const double yy = last.y.squaredNorm();
    if (yy > 0.0) {
      q *= last.s.dot(last.y) / yy;
    }
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const auto& p = memory[k];
    const double beta = p.rho * p.y.dot(q);
    q += (alpha[k] - beta) * (p.s.array() * mask).matrix();
  }
  return -(q.array() * mask).matrix();
}

}  // namespace

BoxResult minimize_box(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                       const Eigen::VectorXd& upper, const BoxOptions& options) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) {
    throw InvalidArgument("minimize_box: bound dimension mismatch");
  }
  BoxResult result;
  Eigen::VectorXd x = project(x0, lower, upper);
  Eigen::VectorXd g(n);
  double fx = f(x, &g);
  ++result.evaluations;
  result.initial_value = fx;
  if (!std::isfinite(fx)) {
    result.x = x;
    result.value = fx;
    return result;
  }
  if (!g.allFinite()) {
    g.setZero();
  }

  std::deque<Pair> memory;
  int stalled = 0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    const Eigen::VectorXd pg = project(x - g, lower, upper) - x;
    if (pg.lpNorm<Eigen::Infinity>() < options.projected_gradient_tol) {
      break;
    }
    const Eigen::ArrayXd mask = free_mask(x, g, lower, upper);
    Eigen::VectorXd dir = two_loop(memory, g, mask);
    double slope = g.dot(dir);
    if (!(slope < 0.0) || !dir.allFinite()) {
      memory.clear();
      dir = -(g.array() * mask).matrix();
      slope = g.dot(dir);
      if (!(slope < 0.0)) {
        break;
      }
    }

    // First trial step: full quasi-Newton step, or a unit-length move for
    // the steepest-descent restart.
    double t = memory.empty() ? std::min(1.0, 1.0 / std::max(dir.lpNorm<Eigen::Infinity>(), 1e-300)) : 1.0;
    Eigen::VectorXd x_new;
    Eigen::VectorXd g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = project(x + t * dir, lower, upper);
      const double decrease = g.dot(x_new - x);
      f_new = f(x_new, &g_new);
      ++result.evaluations;
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * std::min(decrease, 0.0) && f_new <= fx) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (memory.empty()) {
        break;
      }
      memory.clear();
      continue;
    }
    if (!g_new.allFinite()) {
      g_new.setZero();
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      memory.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(memory.size()) > options.memory) {
        memory.pop_front();
      }
    }
    const double rel_change = (fx - f_new) / std::max({std::abs(fx), std::abs(f_new), 1.0});
    x = x_new;
    g = g_new;
    fx = f_new;
    if (rel_change < options.relative_f_tol) {
      if (++stalled >= 3) {
        break;
      }
    } else {
      stalled = 0;
    }
  }
  result.x = x;
  result.value = fx;
  return result;
}

Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                                           const Eigen::VectorXd& upper, double step) {
  Eigen::VectorXd grad(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[i] = std::min(x[i] + h, upper[i]);
    xm[i] = std::max(x[i] - h, lower[i]);
    const double width = xp[i] - xm[i];
    grad[i] = width > 0.0 ? (f(xp) - f(xm)) / width : 0.0;
  }
  return grad;
}

}  // namespace babo::optim
