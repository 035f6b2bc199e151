#pragma once

#include <functional>
#include <vector>

namespace krn {

struct GaussLegendreRule {
    std::vector<double> nodes;    // on [-1,1]
    std::vector<double> weights;  // sum to 2
};

/// Nodes and weights of the order-n Gauss-Legendre rule, by Newton iteration
/// on the Legendre recurrence.
const GaussLegendreRule& gauss_legendre(int n);

/// Integral of f over [a,b] with a single order-n rule.
double gl_integrate(const std::function<double(double)>& f, double a, double b,
                    int n);

}  // namespace krn
