#include "babo/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "babo/errors.hpp"
#include "babo/normal.hpp"

namespace babo {

namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::array<int, 64> kPrimes = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,  47,  53,
    59,  61,  67,  71,  73,  79,  83,  89,  97,  101, 103, 107, 109, 113, 127, 131,
    137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223,
    227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307, 311};

double radical_inverse(std::uint64_t i, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (i > 0) {
    result += f * static_cast<double>(i % base);
    i /= base;
    f /= base;
  }
  return result;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
  std::uint64_t h = mix(base);
  for (char c : tag) {
    h = mix(h ^ static_cast<unsigned char>(c));
  }
  return mix(h ^ mix(index + 0x632be59bd9b4e019ULL));
}

Eigen::MatrixXd latin_hypercube(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) {
    throw InvalidArgument("latin_hypercube: n and d must be positive");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd points(n, d);
  std::vector<int> strata(static_cast<std::size_t>(n));
  for (int j = 0; j < d; ++j) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    for (int i = 0; i < n; ++i) {
      double u = unif(rng);
      double v = (strata[static_cast<std::size_t>(i)] + u) / n;
      // keep strictly inside the stratum even when u rounds to 1
      points(i, j) = std::min(v, std::nextafter((strata[static_cast<std::size_t>(i)] + 1.0) / n, 0.0));
    }
  }
  return points;
}

Eigen::MatrixXd shifted_halton(int n, int d, std::uint64_t seed) {
  if (d < 1 || d > static_cast<int>(kPrimes.size())) {
    throw InvalidArgument("shifted_halton: dimension must be in [1, 64]");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd points(n, d);
  for (int j = 0; j < d; ++j) {
    const double shift = unif(rng);
    for (int i = 0; i < n; ++i) {
      // skip index 0, which is the origin in every base
      double v = radical_inverse(static_cast<std::uint64_t>(i) + 1, kPrimes[static_cast<std::size_t>(j)]) + shift;
      points(i, j) = v - std::floor(v);
    }
  }
  return points;
}

Eigen::MatrixXd normal_base_samples(int n, int d, std::uint64_t seed) {
  Eigen::MatrixXd u = shifted_halton(n, d, seed);
  static constexpr double kEdge = 1e-12;
  return u.unaryExpr([](double p) { return normal::quantile(std::clamp(p, kEdge, 1.0 - kEdge)); });
}

}  // namespace babo
