#pragma once

// Estimation helpers: Bernoulli point estimates with Wald intervals,
// weighted least squares for decay fits, running moments.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace hypervoro {

inline constexpr double kZ95 = 1.959963984540054;

struct EstimateResult {
  double value = 0.0;
  double std_err = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
};

inline EstimateResult bernoulli_estimate(std::uint64_t successes,
                                         std::uint64_t trials,
                                         double z = kZ95) {
  if (trials == 0) throw std::invalid_argument("bernoulli_estimate: no trials");
  EstimateResult r;
  r.trials = trials;
  r.successes = successes;
  r.value = double(successes) / double(trials);
  r.std_err = std::sqrt(r.value * (1.0 - r.value) / double(trials));
  r.ci_lo = std::max(0.0, r.value - z * r.std_err);
  r.ci_hi = std::min(1.0, r.value + z * r.std_err);
  return r;
}

struct RunningStat {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    ++n;
    double d = x - mean;
    mean += d / double(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
  double std_err() const {
    return n > 1 ? std::sqrt(variance() / double(n)) : 0.0;
  }
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  double r_squared = 0.0;
  int n_used = 0;
};

// Weighted least squares y ~ a + b x with weights 1/sigma_i^2 supplied
// directly as w. Standard errors assume the weights are true inverse
// variances.
inline FitResult wls_fit(const std::vector<double>& x,
                         const std::vector<double>& y,
                         const std::vector<double>& w) {
  if (x.size() != y.size() || x.size() != w.size())
    throw std::invalid_argument("wls_fit: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("wls_fit: need >= 2 points");
  double sw = 0, swx = 0, swy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(w[i] > 0.0)) throw std::invalid_argument("wls_fit: weights must be > 0");
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
  }
  double xbar = swx / sw, ybar = swy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - xbar, dy = y[i] - ybar;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * dy;
    syy += w[i] * dy * dy;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("wls_fit: x has no spread");
  FitResult f;
  f.n_used = int(x.size());
  f.slope = sxy / sxx;
  f.intercept = ybar - f.slope * xbar;
  f.slope_se = std::sqrt(1.0 / sxx);
  f.intercept_se = std::sqrt(1.0 / sw + xbar * xbar / sxx);
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - f.intercept - f.slope * x[i];
    ss_res += w[i] * r * r;
  }
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

}  // namespace hypervoro
