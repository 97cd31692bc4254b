#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace polymerlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Running log-sum-exp accumulator. Holds the pair (max, scaled sum) so that
/// the represented value is max + log(sum). Merging two accumulators is exact
/// up to a single rescale, so chunked reductions combined in a fixed order are
/// reproducible.
struct LogSumExp {
  double max = -kInf;
  double sum = 0.0;

  void add(double x) noexcept {
    if (x == -kInf) return;
    if (x <= max) {
      sum += std::exp(x - max);
    } else {
      sum = sum * std::exp(max - x) + 1.0;
      max = x;
    }
  }

  void merge(const LogSumExp& other) noexcept {
    if (other.max == -kInf) return;
    if (max == -kInf) {
      *this = other;
      return;
    }
    if (other.max <= max) {
      sum += other.sum * std::exp(other.max - max);
    } else {
      sum = sum * std::exp(max - other.max) + other.sum;
      max = other.max;
    }
  }

  double value() const noexcept { return max == -kInf ? -kInf : max + std::log(sum); }
};

/// Two-pass log-sum-exp of `scale * x[i]` over a span.
inline LogSumExp log_sum_exp_scaled(std::span<const double> x, double scale) noexcept {
  LogSumExp acc;
  if (x.empty()) return acc;
  double m = -kInf;
  for (double v : x) m = std::max(m, scale * v);
  double s = 0.0;
  for (double v : x) s += std::exp(scale * v - m);
  acc.max = m;
  acc.sum = s;
  return acc;
}

/// Bisection for a sign change of `fn` on [lo, hi]. Requires fn(lo) and
/// fn(hi) to have opposite signs (zero counts as either). Stops when the
/// bracket is narrower than `tol` or stops shrinking in floating point.
template <class Fn>
double bisect(Fn&& fn, double lo, double hi, double tol = 1e-12, int max_iter = 400) {
  double flo = fn(lo);
  if (flo == 0.0) return lo;
  for (int i = 0; i < max_iter; ++i) {
    double mid = 0.5 * (lo + hi);
    if (hi - lo <= tol || mid <= lo || mid >= hi) break;
    double fm = fn(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Ordinary least squares of y on x.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  LinearFit fit;
  if (n < 2) return fit;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

}  // namespace polymerlab
