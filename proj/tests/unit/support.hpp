#pragma once

#include <cmath>
#include <filesystem>
#include <span>
#include <vector>

#include "mtjsnn/monotone_curve.hpp"

namespace testing {

inline std::filesystem::path fixture(const char *name) {
  return std::filesystem::path(MTJSNN_FIXTURE_DIR) / name;
}

// Logistic stand-in for a measured P_sw(I) slice: P = 0.5 at i50, knots
// every 2 uA from 0 to 200 uA.
inline mtjsnn::MonotoneCurve logistic_curve(double i50 = 71e-6,
                                            double width = 6e-6) {
  std::vector<double> x, y;
  for (int k = 0; k <= 100; ++k) {
    const double i = 2e-6 * k;
    x.push_back(i);
    y.push_back(1.0 / (1.0 + std::exp(-(i - i50) / width)));
  }
  return {x, y};
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

} // namespace testing
