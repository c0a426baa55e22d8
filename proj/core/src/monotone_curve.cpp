#include "mtjsnn/monotone_curve.hpp"

#include <algorithm>
#include <cmath>

#include "mtjsnn/errors.hpp"

namespace mtjsnn {

MonotoneCurve::MonotoneCurve(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n)
    throw ConfigError("monotone curve: need at least two (x, y) knots");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1]))
      throw ConfigError("monotone curve: x must be strictly increasing");
    if (y_[i] < y_[i - 1])
      throw ConfigError("monotone curve: y must be non-decreasing");
  }

  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);

  d_.assign(n, 0.0);
  d_[0] = delta[0];
  d_[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] == 0.0 || delta[i] == 0.0) continue;
    // Weighted harmonic mean (Fritsch-Butland), monotone for uneven spacing.
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    const double w0 = 2.0 * h1 + h0;
    const double w1 = h1 + 2.0 * h0;
    d_[i] = (w0 + w1) / (w0 / delta[i - 1] + w1 / delta[i]);
  }
  // Fritsch-Carlson limiter keeps every segment monotone.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (delta[i] == 0.0) {
      d_[i] = 0.0;
      d_[i + 1] = 0.0;
      continue;
    }
    const double a = d_[i] / delta[i];
    const double b = d_[i + 1] / delta[i];
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double tau = 3.0 / std::sqrt(s);
      d_[i] = tau * a * delta[i];
      d_[i + 1] = tau * b * delta[i];
    }
  }
}

std::size_t MonotoneCurve::segment(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - x_.begin());
  if (i == 0) return 0;
  return std::min(i - 1, x_.size() - 2);
}

double MonotoneCurve::operator()(double x) const {
  if (x <= x_.front()) return y_.front();
  if (x >= x_.back()) return y_.back();
  const std::size_t i = segment(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  const double v = h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] +
                   h11 * h * d_[i + 1];
  return std::clamp(v, y_[i], y_[i + 1]);
}

double MonotoneCurve::slope(double x) const {
  if (x < x_.front() || x > x_.back()) return 0.0;
  const std::size_t i = segment(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  const double dh00 = 6.0 * t2 - 6.0 * t;
  const double dh10 = 3.0 * t2 - 4.0 * t + 1.0;
  const double dh01 = -6.0 * t2 + 6.0 * t;
  const double dh11 = 3.0 * t2 - 2.0 * t;
  return (dh00 * y_[i] + dh01 * y_[i + 1]) / h + dh10 * d_[i] + dh11 * d_[i + 1];
}

double MonotoneCurve::inverse(double level) const {
  if (level < y_.front() || level > y_.back())
    throw NumericalError("monotone curve: level outside the curve's range");
  if (level <= y_.front()) return x_.front();
  auto it = std::lower_bound(y_.begin(), y_.end(), level);
  const std::size_t hi = static_cast<std::size_t>(it - y_.begin());
  if (y_[hi] == level) return x_[hi];
  double lo_x = x_[hi - 1];
  double hi_x = x_[hi];
  for (int iter = 0; iter < 200 && hi_x - lo_x > 1e-15 * std::abs(hi_x); ++iter) {
    const double mid = 0.5 * (lo_x + hi_x);
    if ((*this)(mid) >= level)
      hi_x = mid;
    else
      lo_x = mid;
  }
  return hi_x;
}

std::vector<double> isotonic_fit(std::span<const double> y,
                                 std::span<const double> weights) {
  struct Block {
    double value, weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < y.size(); ++i) {
    blocks.push_back({y[i], weights[i], 1});
    while (blocks.size() > 1 &&
           blocks[blocks.size() - 2].value > blocks.back().value) {
      Block b = blocks.back();
      blocks.pop_back();
      Block &a = blocks.back();
      const double w = a.weight + b.weight;
      a.value = (a.value * a.weight + b.value * b.weight) / w;
      a.weight = w;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const Block &b : blocks) out.insert(out.end(), b.count, b.value);
  return out;
}

} // namespace mtjsnn
