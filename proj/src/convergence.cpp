#include "krn/convergence.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace krn {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string scheme_descriptor(const Partition1D& p) {
    std::ostringstream os;
    os << "grid[" << fmt(p.breakpoints.front()) << ","
       << fmt(p.breakpoints.back()) << "]x" << p.cell_count();
    return os.str();
}

// nu-fraction of each cell of p lying inside (a,b], where nu is the
// predictive measure of the continuous kernel under the prior.
Vec interval_cell_fractions(const KernelModel1D& kernel, const Measure1D& prior,
                            const Partition1D& p, double a, double b,
                            const QuadratureConfig& q) {
    const auto cells = static_cast<Eigen::Index>(p.cell_count());
    Vec inside = Vec::Zero(cells), total = Vec::Zero(cells);
    const auto nodes = density_quadrature_nodes(prior, -q.tail_cutoff,
                                                q.tail_cutoff, q.nodes_per_cell);
    for (const auto& [x, w] : nodes) {
        const Measure1D dist = kernel.at(x);
        total += w * partition_cell_masses(dist, p);
        for (Eigen::Index l = 0; l < cells; ++l) {
            const double lo = l == 0 ? -q.tail_cutoff
                                     : p.breakpoints[static_cast<std::size_t>(l - 1)];
            const double hi = l == cells - 1
                                  ? q.tail_cutoff
                                  : p.breakpoints[static_cast<std::size_t>(l)];
            const double clo = std::max(lo, a), chi = std::min(hi, b);
            if (clo < chi) inside(l) += w * (dist.cdf(chi) - dist.cdf(clo));
        }
    }
    Vec frac = Vec::Zero(cells);
    for (Eigen::Index l = 0; l < cells; ++l)
        if (total(l) > 0.0) frac(l) = std::min(1.0, inside(l) / total(l));
    return frac;
}

// Value of the internalized step kernel on (a,b] for each source cell.
Vec step_interval_values(const KernelMorphism& approx, const Vec& fractions) {
    return approx.matrix() * fractions;
}

std::pair<double, double> tv_rows(const Mat& f, const Mat& g, const Vec& mu) {
    double max_tv = 0.0, mean_tv = 0.0;
    for (Eigen::Index k = 0; k < f.rows(); ++k) {
        const double tv = 0.5 * (f.row(k) - g.row(k)).cwiseAbs().sum();
        if (mu(k) > 0.0) max_tv = std::max(max_tv, tv);
        mean_tv += mu(k) * tv;
    }
    return {max_tv, mean_tv};
}

// Row k = kernel at the cell's representative point pushed through the grid
// (midpoint for finite cells, adjacent breakpoint for tails).
Mat representative_matrix(const KernelModel1D& kernel, const Partition1D& p) {
    const auto cells = static_cast<Eigen::Index>(p.cell_count());
    Mat m(cells, cells);
    for (Eigen::Index k = 0; k < cells; ++k) {
        double x;
        if (k == 0)
            x = p.breakpoints.front();
        else if (k == cells - 1)
            x = p.breakpoints.back();
        else
            x = 0.5 * (p.breakpoints[static_cast<std::size_t>(k - 1)] +
                       p.breakpoints[static_cast<std::size_t>(k)]);
        m.row(k) = partition_cell_masses(kernel.at(x), p).transpose();
    }
    return m;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

std::string ConvergenceReport::to_csv() const {
    std::ostringstream os;
    os << "scheme,cells,interval,sot_gap,tv_max,tv_mean,runtime_ms\n";
    for (const auto& r : rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.3f", r.sot_gap,
                      r.tv_max, r.tv_mean, r.runtime_ms);
        os << r.scheme << "," << r.cells << "," << r.interval << "," << buf
           << "\n";
    }
    return os.str();
}

double sot_gap(const KernelMorphism& f, const KernelMorphism& g,
               const Predicate& phi) {
    // Target weights are pushforwards and legitimately differ between the
    // two kernels; only the label sets must agree.
    if (!f.source().same_as(g.source()) ||
        f.target().labels() != g.target().labels())
        throw SpaceMismatch("sot_gap: spaces differ");
    if (phi.values.size() != f.target().size())
        throw IndexMismatch("sot_gap: predicate not on target");
    const Vec diff = (f.matrix() - g.matrix()) * phi.values;
    return f.source().mu().dot(diff.cwiseAbs());
}

double sot_gap_analytic(const KernelModel1D& kernel, const Measure1D& prior,
                        const KernelMorphism& approx, const Partition1D& p,
                        double a, double b, const QuadratureConfig& q) {
    if (!std::isfinite(a) || !std::isfinite(b) || a > b)
        throw InvalidArgument("sot_gap_analytic: need finite a <= b");
    if (a == b) return 0.0;
    const double tail_mass = prior.cdf(-q.tail_cutoff) +
                             (1.0 - prior.cdf(q.tail_cutoff));
    if (tail_mass > q.tail_tolerance)
        throw TailMassTooLarge("sot_gap_analytic: prior tail mass " +
                               fmt(tail_mass));
    const Vec frac = interval_cell_fractions(kernel, prior, p, a, b, q);
    const Vec step = step_interval_values(approx, frac);
    double gap = 0.0;
    // Integrate cell by cell: the step kernel is constant on each cell.
    for (std::size_t k = 0; k < p.cell_count(); ++k) {
        const double lo = k == 0 ? -q.tail_cutoff : p.breakpoints[k - 1];
        const double hi = k == p.breakpoints.size() ? q.tail_cutoff
                                                    : p.breakpoints[k];
        const double sk = step(static_cast<Eigen::Index>(k));
        for (const auto& [x, w] :
             density_quadrature_nodes(prior, lo, hi, q.nodes_per_cell)) {
            const Measure1D dist = kernel.at(x);
            gap += w * std::abs(dist.cdf(b) - dist.cdf(a) - sk);
        }
    }
    return gap;
}

std::pair<double, double> tv_pointwise(const KernelMorphism& f,
                                       const KernelMorphism& g) {
    if (!f.source().same_as(g.source()) ||
        f.target().labels() != g.target().labels())
        throw SpaceMismatch("tv_pointwise: spaces differ");
    return tv_rows(f.matrix(), g.matrix(), f.source().mu());
}

ConvergenceReport refinement_sweep(
    const KernelModel1D& kernel, const Measure1D& prior,
    const RefinementChain& chain,
    const std::vector<std::pair<double, double>>& test_intervals,
    const QuadratureConfig& q) {
    chain.validate();
    ConvergenceReport report;
    for (const auto& p : chain.partitions) {
        const auto start = std::chrono::steady_clock::now();
        const KernelMorphism approx = discretize_kernel(kernel, prior, p, p, q);
        const auto [tv_max, tv_mean] =
            tv_rows(approx.matrix(), representative_matrix(kernel, p),
                    approx.source().mu());
        for (const auto& [a, b] : test_intervals) {
            ConvergenceRow row;
            row.scheme = scheme_descriptor(p);
            row.cells = p.cell_count();
            row.interval = "(" + fmt(a) + "," + fmt(b) + "]";
            row.sot_gap = sot_gap_analytic(kernel, prior, approx, p, a, b, q);
            row.tv_max = tv_max;
            row.tv_mean = tv_mean;
            row.runtime_ms = elapsed_ms(start);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

ConvergenceReport tensor_convergence_check(
    const KernelModel1D& kf, const KernelModel1D& kg, const Measure1D& prior_f,
    const Measure1D& prior_g, const RefinementChain& chain,
    std::pair<double, double> i1, std::pair<double, double> i2,
    const QuadratureConfig& q) {
    chain.validate();
    const auto [a1, b1] = i1;
    const auto [a2, b2] = i2;
    if (a1 > b1 || a2 > b2)
        throw InvalidArgument("tensor_convergence_check: bad rectangle");
    ConvergenceReport report;
    for (const auto& p : chain.partitions) {
        const auto start = std::chrono::steady_clock::now();
        const KernelMorphism fa = discretize_kernel(kf, prior_f, p, p, q);
        const KernelMorphism ga = discretize_kernel(kg, prior_g, p, p, q);
        const Vec step_f =
            step_interval_values(fa, interval_cell_fractions(kf, prior_f, p,
                                                             a1, b1, q));
        const Vec step_g =
            step_interval_values(ga, interval_cell_fractions(kg, prior_g, p,
                                                             a2, b2, q));
        // Per-axis node tables: weight, analytic value, step value.
        struct NodeRow {
            double w, analytic, step;
        };
        auto axis = [&](const KernelModel1D& k, const Measure1D& prior,
                        const Vec& step, double a, double b) {
            std::vector<NodeRow> rows;
            for (std::size_t c = 0; c < p.cell_count(); ++c) {
                const double lo = c == 0 ? -q.tail_cutoff : p.breakpoints[c - 1];
                const double hi = c == p.breakpoints.size() ? q.tail_cutoff
                                                            : p.breakpoints[c];
                for (const auto& [x, w] :
                     density_quadrature_nodes(prior, lo, hi, q.nodes_per_cell)) {
                    const Measure1D dist = k.at(x);
                    rows.push_back({w, dist.cdf(b) - dist.cdf(a),
                                    step(static_cast<Eigen::Index>(c))});
                }
            }
            return rows;
        };
        const auto xs = axis(kf, prior_f, step_f, a1, b1);
        const auto ys = axis(kg, prior_g, step_g, a2, b2);
        double gap = 0.0;
        for (const auto& x : xs) {
            double inner = 0.0;
            for (const auto& y : ys)
                inner += y.w * std::abs(x.analytic * y.analytic -
                                        x.step * y.step);
            gap += x.w * inner;
        }
        const auto [tvf_max, tvf_mean] =
            tv_rows(fa.matrix(), representative_matrix(kf, p),
                    fa.source().mu());
        const auto [tvg_max, tvg_mean] =
            tv_rows(ga.matrix(), representative_matrix(kg, p),
                    ga.source().mu());
        ConvergenceRow row;
        row.scheme = scheme_descriptor(p) + "^2";
        row.cells = p.cell_count() * p.cell_count();
        row.interval = "(" + fmt(a1) + "," + fmt(b1) + "]x(" + fmt(a2) + "," +
                       fmt(b2) + "]";
        row.sot_gap = gap;
        // Factor-sum TV: an upper bound for the product rows.
        row.tv_max = tvf_max + tvg_max;
        row.tv_mean = tvf_mean + tvg_mean;
        row.runtime_ms = elapsed_ms(start);
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace krn
