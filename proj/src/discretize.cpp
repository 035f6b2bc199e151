#include "krn/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "krn/quadrature.hpp"

namespace krn {

namespace {

constexpr double kNullMass = 1e-12;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> cell_labels(const Partition1D& p) {
    std::vector<std::string> labels;
    labels.reserve(p.cell_count());
    for (std::size_t i = 0; i < p.cell_count(); ++i) {
        const std::string lo =
            i == 0 ? "-inf" : fmt(p.breakpoints[i - 1]);
        const std::string hi =
            i == p.breakpoints.size() ? "inf" : fmt(p.breakpoints[i]);
        labels.push_back("(" + lo + "," + hi + "]");
    }
    return labels;
}

}  // namespace

bool Partition1D::valid() const {
    if (breakpoints.empty()) return false;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        if (!(breakpoints[i] < breakpoints[i + 1])) return false;
    return std::isfinite(breakpoints.front()) && std::isfinite(breakpoints.back());
}

Partition1D window_scheme(int m, int n) {
    if (m < 1 || n < 1) throw InvalidArgument("window_scheme: m,n must be >= 1");
    Partition1D p;
    p.breakpoints.resize(static_cast<std::size_t>(2 * m * n) + 1);
    for (int k = 0; k <= 2 * m * n; ++k)
        p.breakpoints[static_cast<std::size_t>(k)] =
            -double(m) + double(k) / double(n);
    return p;
}

std::size_t cell_of(double x, const Partition1D& p) {
    // b_{i-1} < x <= b_i maps to cell i.
    return static_cast<std::size_t>(
        std::lower_bound(p.breakpoints.begin(), p.breakpoints.end(), x) -
        p.breakpoints.begin());
}

void RefinementChain::validate() const {
    for (std::size_t i = 0; i < partitions.size(); ++i) {
        if (!partitions[i].valid())
            throw InvalidArgument("RefinementChain: invalid partition " +
                                  std::to_string(i));
        if (i == 0) continue;
        const auto& coarse = partitions[i - 1].breakpoints;
        const auto& fine = partitions[i].breakpoints;
        for (double b : coarse) {
            auto it = std::lower_bound(fine.begin(), fine.end(), b - 1e-12);
            if (it == fine.end() || std::abs(*it - b) > 1e-12)
                throw InvalidArgument(
                    "RefinementChain: breakpoint " + fmt(b) +
                    " of partition " + std::to_string(i - 1) +
                    " missing from partition " + std::to_string(i));
        }
    }
}

FiniteQuotient FiniteQuotient::identity(const MeasuredSpace& x) {
    std::vector<int> assign(static_cast<std::size_t>(x.size()));
    std::iota(assign.begin(), assign.end(), 0);
    return FiniteQuotient{x, x.labels(), std::move(assign)};
}

FiniteQuotient FiniteQuotient::collapse(const MeasuredSpace& x,
                                        std::string label) {
    return FiniteQuotient{
        x, {std::move(label)},
        std::vector<int>(static_cast<std::size_t>(x.size()), 0)};
}

namespace {

// The quotient as a deterministic kernel out of the given space (which must
// match the quotient's source labels).
KernelMorphism lift_on(const FiniteQuotient& q, const MeasuredSpace& space) {
    if (space.labels() != q.source.labels())
        throw SpaceMismatch("FiniteQuotient: quotient not on this space");
    if (q.assignment.size() != static_cast<std::size_t>(space.size()))
        throw InvalidArgument("FiniteQuotient: assignment size mismatch");
    Mat m = Mat::Zero(space.size(), static_cast<Eigen::Index>(q.target_labels.size()));
    std::vector<bool> hit(q.target_labels.size(), false);
    for (std::size_t k = 0; k < q.assignment.size(); ++k) {
        const int j = q.assignment[k];
        if (j < 0 || j >= static_cast<int>(q.target_labels.size()))
            throw InvalidArgument("FiniteQuotient: assignment out of range");
        m(static_cast<Eigen::Index>(k), j) = 1.0;
        hit[static_cast<std::size_t>(j)] = true;
    }
    for (bool h : hit)
        if (!h) throw InvalidArgument("FiniteQuotient: not surjective");
    return KernelMorphism(space, q.target_labels, std::move(m));
}

}  // namespace

KernelMorphism FiniteQuotient::lift() const { return lift_on(*this, source); }

MeasuredSpace push_measure(const Measure1D& mu, const Partition1D& p) {
    if (!p.valid()) throw InvalidArgument("push_measure: invalid partition");
    Vec w(static_cast<Eigen::Index>(p.cell_count()));
    double prev = 0.0;
    for (std::size_t i = 0; i < p.breakpoints.size(); ++i) {
        const double c = mu.cdf(p.breakpoints[i]);
        w(static_cast<Eigen::Index>(i)) = std::max(0.0, c - prev);
        prev = c;
    }
    w(w.size() - 1) = std::max(0.0, 1.0 - prev);
    return MeasuredSpace(cell_labels(p), std::move(w));
}

Vec partition_cell_masses(const Measure1D& dist, const Partition1D& p) {
    Vec row(static_cast<Eigen::Index>(p.cell_count()));
    double prev = 0.0;
    for (std::size_t l = 0; l < p.breakpoints.size(); ++l) {
        const double c = dist.cdf(p.breakpoints[l]);
        row(static_cast<Eigen::Index>(l)) = std::max(0.0, c - prev);
        prev = c;
    }
    row(row.size() - 1) = std::max(0.0, 1.0 - prev);
    return row;
}

std::vector<std::pair<double, double>> density_quadrature_nodes(
    const Measure1D& measure, double lo, double hi, int order) {
    // Chunks of width <= 0.5 keep Gauss-Legendre accurate on Gaussian tails.
    std::vector<std::pair<double, double>> out;
    const int chunks = std::max(1, static_cast<int>(std::ceil((hi - lo) / 0.5)));
    const auto& rule = gauss_legendre(order);
    out.reserve(static_cast<std::size_t>(chunks) * rule.nodes.size());
    for (int c = 0; c < chunks; ++c) {
        const double a = lo + (hi - lo) * c / chunks;
        const double b = lo + (hi - lo) * (c + 1) / chunks;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double x = mid + half * rule.nodes[i];
            out.emplace_back(x, half * rule.weights[i] * measure.density(x));
        }
    }
    return out;
}

KernelMorphism discretize_kernel(const KernelModel1D& kernel,
                                 const Measure1D& prior,
                                 const Partition1D& p_in,
                                 const Partition1D& p_out,
                                 const QuadratureConfig& q) {
    if (!p_in.valid() || !p_out.valid())
        throw InvalidArgument("discretize_kernel: invalid partition");
    if (q.nodes_per_cell < 2)
        throw InvalidArgument("discretize_kernel: nodes_per_cell < 2");
    if (!prior.density)
        throw InvalidArgument("discretize_kernel: prior needs a density");
    const double T = q.tail_cutoff;
    const double tail_mass = prior.cdf(-T) + (1.0 - prior.cdf(T));
    if (tail_mass > q.tail_tolerance)
        throw TailMassTooLarge("discretize_kernel: prior mass outside [-" +
                               fmt(T) + "," + fmt(T) + "] is " + fmt(tail_mass));

    const MeasuredSpace source = push_measure(prior, p_in);
    const auto out_cells = static_cast<Eigen::Index>(p_out.cell_count());
    Mat m(source.size(), out_cells);

    for (std::size_t k = 0; k < p_in.cell_count(); ++k) {
        const bool left_tail = (k == 0);
        const bool right_tail = (k == p_in.breakpoints.size());
        const double lo = left_tail ? -T : p_in.breakpoints[k - 1];
        const double hi = right_tail ? T : p_in.breakpoints[k];
        const auto row_k = static_cast<Eigen::Index>(k);
        const double mass = source.mu(row_k);

        if (mass <= kNullMass) {
            // Null fibre: any representative serves; pick the midpoint, or
            // the adjacent breakpoint for unbounded cells.
            const double x = left_tail    ? p_in.breakpoints.front()
                             : right_tail ? p_in.breakpoints.back()
                                          : 0.5 * (lo + hi);
            m.row(row_k) =
                partition_cell_masses(kernel.at(x), p_out).transpose();
            continue;
        }

        const auto nodes =
            density_quadrature_nodes(prior, lo, hi, q.nodes_per_cell);
        Vec row = Vec::Zero(out_cells);
        for (const auto& [x, w] : nodes)
            row += w * partition_cell_masses(kernel.at(x), p_out);
        const double row_sum = row.sum();
        // Relative check with an absolute floor: cell masses near the tail
        // cutoff sit at ~1e-12 where the CDF difference itself loses relative
        // precision to cancellation (1 - cdf near the right tail).
        if (std::abs(row_sum - mass) > 1e-6 * std::max(mass, 1e-9))
            throw QuadratureFailure("discretize_kernel: row " +
                                    std::to_string(k) + " integrates to " +
                                    fmt(row_sum) + " against cell mass " +
                                    fmt(mass));
        m.row(row_k) = row.transpose() / row_sum;
    }
    return KernelMorphism(source, cell_labels(p_out), std::move(m));
}

KernelMorphism approximate_finite(const KernelMorphism& f,
                                  const FiniteQuotient& p,
                                  const FiniteQuotient& q) {
    if (p.source.labels() != f.source().labels())
        throw SpaceMismatch("approximate_finite: p not on f.source");
    if (q.source.labels() != f.target().labels())
        throw SpaceMismatch("approximate_finite: q not on f.target");
    const auto ni = static_cast<Eigen::Index>(p.target_labels.size());
    const auto nj = static_cast<Eigen::Index>(q.target_labels.size());
    Vec mu_c = Vec::Zero(ni);
    for (Eigen::Index k = 0; k < f.source().size(); ++k)
        mu_c(p.assignment[static_cast<std::size_t>(k)]) += f.source().mu(k);
    Vec nu_c = Vec::Zero(nj);
    for (Eigen::Index l = 0; l < f.target().size(); ++l)
        nu_c(q.assignment[static_cast<std::size_t>(l)]) += f.target().mu(l);

    Mat a = Mat::Zero(ni, nj);
    for (Eigen::Index k = 0; k < f.source().size(); ++k) {
        const auto i = p.assignment[static_cast<std::size_t>(k)];
        for (Eigen::Index l = 0; l < f.target().size(); ++l)
            a(i, q.assignment[static_cast<std::size_t>(l)]) +=
                f.source().mu(k) * f.matrix()(k, l);
    }
    for (Eigen::Index i = 0; i < ni; ++i) {
        if (mu_c(i) > kNullMass)
            a.row(i) /= mu_c(i);
        else
            a.row(i) = nu_c.transpose();  // null fibre: target marginal
    }
    return KernelMorphism(MeasuredSpace(p.target_labels, mu_c),
                          q.target_labels, std::move(a));
}

KernelMorphism internalize(const KernelMorphism& f, const FiniteQuotient& p,
                           const FiniteQuotient& q) {
    const KernelMorphism pk = lift_on(p, f.source());
    const KernelMorphism qk = lift_on(q, f.target());
    const KernelMorphism cond_src = compose(pk, dagger(pk));  // E[. | sigma(p)]
    const KernelMorphism cond_tgt = compose(qk, dagger(qk));
    return compose(compose(cond_src, f), cond_tgt);
}

bool is_left_hemi_bisimulation(const KernelMorphism& f,
                               const FiniteQuotient& q) {
    const KernelMorphism qk = lift_on(q, f.target());
    return kernels_equal_ae(f, compose(f, compose(qk, dagger(qk))), 1e-9);
}

bool is_right_hemi_bisimulation(const KernelMorphism& g,
                                const FiniteQuotient& q) {
    const KernelMorphism qk = lift_on(q, g.source());
    return kernels_equal_ae(g, compose(compose(qk, dagger(qk)), g), 1e-9);
}

}  // namespace krn
