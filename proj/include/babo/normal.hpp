#pragma once

// Standard normal helpers with tail-stable variants.

namespace babo::normal {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
inline constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;

double pdf(double z);
double cdf(double z);
/// log Phi(z), accurate for z far in the lower tail.
double log_cdf(double z);
/// phi(z) / Phi(z) (inverse Mills ratio of the lower tail), finite for all z.
double pdf_over_cdf(double z);
/// Phi^{-1}(p) for p in (0, 1).
double quantile(double p);

}  // namespace babo::normal
