#pragma once

#include <vector>

namespace mtjsnn {

struct QuadratureRule {
  std::vector<double> nodes;   // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, nodes found by Newton iteration.
QuadratureRule gauss_legendre(int n);

/// Integrates f over [a, b] with `panels` equal panels of the given rule.
template <class F>
double integrate_panels(F &&f, double a, double b, int panels,
                        const QuadratureRule &rule) {
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + 0.5 * h;
    double s = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k)
      s += rule.weights[k] * f(mid + 0.5 * h * rule.nodes[k]);
    total += 0.5 * h * s;
  }
  return total;
}

} // namespace mtjsnn
