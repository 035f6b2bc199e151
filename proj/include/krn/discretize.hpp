#pragma once

#include <string>
#include <vector>

#include "krn/measure_core.hpp"
#include "krn/models1d.hpp"

namespace krn {

/// An interval partition of the real line. Breakpoints b_0 < ... < b_{K-1}
/// induce the K+1 right-closed cells (-inf,b_0], (b_0,b_1], ..., (b_{K-1},inf).
struct Partition1D {
    std::vector<double> breakpoints;

    std::size_t cell_count() const { return breakpoints.size() + 1; }
    bool valid() const;
};

/// Window of width 2m centred at 0, divided in 2mn equal intervals, with the
/// two unbounded tails as extra cells (2mn+2 cells total).
Partition1D window_scheme(int m, int n);

/// Index of the cell containing x (right-closed convention).
std::size_t cell_of(double x, const Partition1D& p);

/// A filtration of partitions: every breakpoint of an earlier partition must
/// occur in every later one.
struct RefinementChain {
    std::vector<Partition1D> partitions;

    /// Throws InvalidArgument if the nesting condition fails (tolerance 1e-12).
    void validate() const;
};

/// A deterministic surjection from a measured space onto a coarser label set.
struct FiniteQuotient {
    MeasuredSpace source;
    std::vector<std::string> target_labels;
    std::vector<int> assignment;  // cell index -> target label index

    static FiniteQuotient identity(const MeasuredSpace& x);
    static FiniteQuotient collapse(const MeasuredSpace& x,
                                   std::string label = "pt");

    /// The quotient as a deterministic kernel.
    KernelMorphism lift() const;
};

struct QuadratureConfig {
    int nodes_per_cell = 16;
    double tail_cutoff = 12.0;   // integrate tails over [-T,-b0] and [bK,T]
    double tail_tolerance = 1e-9;
};

/// Pushforward of a continuous measure along the partition quotient.
MeasuredSpace push_measure(const Measure1D& mu, const Partition1D& p);

/// Raw cell masses of a distribution under the partition (telescoping CDF
/// differences, tails via the limits 0 and 1).
Vec partition_cell_masses(const Measure1D& dist, const Partition1D& p);

/// Quadrature nodes (point, weight*density) against a density over [lo,hi],
/// chunked to keep Gauss-Legendre accurate on rapidly decaying tails.
std::vector<std::pair<double, double>> density_quadrature_nodes(
    const Measure1D& measure, double lo, double hi, int order);

/// Fibre-averaged discretization of a continuous kernel:
/// entry [k][l] = mu[k]^{-1} * integral over cell k of K(x)(cell l) d(prior),
/// by per-cell Gauss-Legendre quadrature against the prior density.
/// Prior-null cells fall back to evaluating the kernel at the cell midpoint
/// (tail cells: at the adjacent breakpoint).
KernelMorphism discretize_kernel(const KernelModel1D& kernel,
                                 const Measure1D& prior,
                                 const Partition1D& p_in,
                                 const Partition1D& p_out,
                                 const QuadratureConfig& q);

/// Fibre average of a finite kernel along two quotients (the coarse kernel).
KernelMorphism approximate_finite(const KernelMorphism& f,
                                  const FiniteQuotient& p,
                                  const FiniteQuotient& q);

/// The coarse kernel re-embedded on the original spaces:
/// q-dagger . (fibre average) . p as a kernel with f's source and target.
KernelMorphism internalize(const KernelMorphism& f, const FiniteQuotient& p,
                           const FiniteQuotient& q);

/// True iff f = f . (q ; q-dagger), i.e. each row of f has constant density
/// across each q-fibre relative to the target weights.
bool is_left_hemi_bisimulation(const KernelMorphism& f, const FiniteQuotient& q);

/// True iff g = (q ; q-dagger) . g, i.e. rows of g are constant on q-fibres.
bool is_right_hemi_bisimulation(const KernelMorphism& g,
                                const FiniteQuotient& q);

}  // namespace krn
