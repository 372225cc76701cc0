#include "babo/normal.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>

#include "babo/errors.hpp"

namespace babo::normal {

namespace {
constexpr double kSqrt2 = 1.41421356237309504880168872421;
// Below this point Phi(z) loses relative accuracy through erfc and the
// asymptotic expansion takes over.
constexpr double kTailCut = -30.0;

// 1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8, the Mills-ratio series for z -> -inf.
double mills_series(double z) {
  const double r = 1.0 / (z * z);
  return 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
}
}  // namespace

double pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double log_cdf(double z) {
  if (z > 0.0) {
    return std::log1p(-cdf(-z));
  }
  if (z > kTailCut) {
    return std::log(cdf(z));
  }
  return -0.5 * z * z - kLogSqrt2Pi - std::log(-z) + std::log(mills_series(z));
}

double pdf_over_cdf(double z) {
  if (z > kTailCut) {
    return pdf(z) / cdf(z);
  }
  return -z / mills_series(z);
}

double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal quantile requires p in (0, 1)");
  }
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace babo::normal
