#pragma once

#include <string>
#include <utility>
#include <vector>

#include "krn/discretize.hpp"
#include "krn/measure_core.hpp"
#include "krn/models1d.hpp"

namespace krn {

struct ConvergenceRow {
    std::string scheme;
    std::size_t cells = 0;
    std::string interval;
    double sot_gap = 0.0;
    double tv_max = 0.0;
    double tv_mean = 0.0;
    double runtime_ms = 0.0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;

    /// CSV with header scheme,cells,interval,sot_gap,tv_max,tv_mean,runtime_ms.
    std::string to_csv() const;
};

/// ||L1 f(phi) - L1 g(phi)||_1 = sum_k mu[k] |sum_l (f-g)[k][l] phi[l]|.
double sot_gap(const KernelMorphism& f, const KernelMorphism& g,
               const Predicate& phi);

/// L1 distance between the continuous kernel and the internalized step kernel
/// on the indicator of (a,b]: integral of
/// |K(x)((a,b]) - f_approx(x)((a,b])| d(prior), where the step kernel spreads
/// each target-cell mass proportionally to the predictive measure within the
/// cell.
double sot_gap_analytic(const KernelModel1D& kernel, const Measure1D& prior,
                        const KernelMorphism& approx, const Partition1D& p,
                        double a, double b, const QuadratureConfig& q);

/// Per-row total variation: (max over mu-positive rows, mu-weighted mean).
std::pair<double, double> tv_pointwise(const KernelMorphism& f,
                                       const KernelMorphism& g);

/// Discretizes the kernel on every partition of the chain and records the
/// SOT gap against the continuous kernel for each test interval. The TV
/// columns compare against the midpoint-representative kernel on the same
/// grid.
ConvergenceReport refinement_sweep(const KernelModel1D& kernel,
                                   const Measure1D& prior,
                                   const RefinementChain& chain,
                                   const std::vector<std::pair<double, double>>& test_intervals,
                                   const QuadratureConfig& q);

/// SOT gaps of tensor(f_n, g_n) against the analytic product kernel on the
/// indicator of a rectangle I1 x I2.
ConvergenceReport tensor_convergence_check(
    const KernelModel1D& kf, const KernelModel1D& kg, const Measure1D& prior_f,
    const Measure1D& prior_g, const RefinementChain& chain,
    std::pair<double, double> i1, std::pair<double, double> i2,
    const QuadratureConfig& q);

}  // namespace krn
