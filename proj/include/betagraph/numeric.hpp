#pragma once

// Scalar special functions shared by the model, estimator and test modules.

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace betagraph {

inline constexpr double kLargestBelowOne = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;

/// Logistic sigmoid, overflow-safe, never exactly 0 or 1.
inline double sigmoid(double z) {
  double p;
  if (z >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  return std::clamp(p, std::numeric_limits<double>::min(), kLargestBelowOne);
}

/// p(1-p) for p = sigmoid(z), without cancellation in 1-p.
inline double logistic_variance(double z) {
  return sigmoid(z) * sigmoid(-z);
}

/// log(1 + e^z) = max(z,0) + log1p(e^{-|z|}).
inline double log1p_exp(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

/// log(e^a + e^b)
inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Survival function of the chi-square distribution, 1 - F(x; df).
inline double chi_square_sf(double x, int df) {
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

inline double chi_square_cdf(double x, int df) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(0.5 * df, 0.5 * x);
}

inline double chi_square_pdf(double x, int df) {
  if (x < 0.0) return 0.0;
  if (x == 0.0) {
    if (df == 1) return std::numeric_limits<double>::infinity();
    return df == 2 ? 0.5 : 0.0;
  }
  return boost::math::pdf(boost::math::chi_squared_distribution<double>(df), x);
}

/// Kolmogorov-Smirnov distance between the empirical distribution of `samples`
/// and a continuous CDF.
template <typename Cdf>
double ks_statistic(std::span<const double> samples, Cdf&& cdf) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

}  // namespace betagraph
