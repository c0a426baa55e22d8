#pragma once

#include <span>
#include <vector>

namespace mtjsnn {

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson
/// slopes) through non-decreasing knots. Clamped to the end values outside
/// the knot range.
class MonotoneCurve {
public:
  MonotoneCurve() = default;
  /// Requires strictly increasing x, non-decreasing y, at least two knots.
  MonotoneCurve(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  /// Derivative of the interpolant (zero outside the knot range).
  double slope(double x) const;
  /// Smallest x with curve(x) >= level. Requires front() <= level <= back().
  double inverse(double level) const;

  std::span<const double> knots_x() const { return x_; }
  std::span<const double> knots_y() const { return y_; }
  bool empty() const { return x_.empty(); }
  double min_value() const { return y_.front(); }
  double max_value() const { return y_.back(); }

private:
  std::size_t segment(double x) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> d_; // knot derivatives
};

/// Pool-adjacent-violators projection of `y` onto non-decreasing sequences
/// under the given positive weights.
std::vector<double> isotonic_fit(std::span<const double> y,
                                 std::span<const double> weights);

} // namespace mtjsnn
