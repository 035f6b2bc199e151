#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "krn/discretize.hpp"

using namespace krn;

namespace {

// Independent integration oracle: adaptive Simpson to 1e-12.
double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double whole, double tol,
               int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

double std_normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

double std_normal_density(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI);
}

}  // namespace

TEST_CASE("window scheme geometry") {
    const Partition1D p = window_scheme(5, 3);
    CHECK(p.breakpoints.size() == 31);
    CHECK(p.cell_count() == 32);  // 2*5*3 + 2
    CHECK(p.breakpoints.front() == doctest::Approx(-5.0).epsilon(1e-15));
    CHECK(p.breakpoints.back() == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(p.breakpoints[1] - p.breakpoints[0] ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(p.valid());
    CHECK_THROWS_AS(window_scheme(0, 3), InvalidArgument);
    CHECK_THROWS_AS(window_scheme(5, 0), InvalidArgument);
}

TEST_CASE("cell lookup uses right-closed cells") {
    const Partition1D p = window_scheme(1, 2);  // breakpoints -1,-0.5,0,0.5,1
    CHECK(cell_of(-2.0, p) == 0);
    CHECK(cell_of(-1.0, p) == 0);   // boundary belongs to the left cell
    CHECK(cell_of(-0.75, p) == 1);
    CHECK(cell_of(0.0, p) == 2);
    CHECK(cell_of(0.25, p) == 3);
    CHECK(cell_of(1.0, p) == 4);
    CHECK(cell_of(1.5, p) == 5);
}

TEST_CASE("refinement chain nesting") {
    RefinementChain chain;
    chain.partitions = {window_scheme(5, 1), window_scheme(5, 2),
                        window_scheme(5, 4)};
    CHECK_NOTHROW(chain.validate());

    RefinementChain bad;
    bad.partitions = {window_scheme(5, 2), window_scheme(5, 3)};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("push of the standard normal along window(1,1)") {
    const MeasuredSpace x = push_measure(normal(0.0, 1.0), window_scheme(1, 1));
    REQUIRE(x.size() == 4);
    // Phi(-1), Phi(0)-Phi(-1), Phi(1)-Phi(0), 1-Phi(1) via erfc.
    const double phi1 = std_normal_cdf(-1.0);
    CHECK(x.mu(0) == doctest::Approx(phi1).epsilon(1e-13));
    CHECK(x.mu(1) == doctest::Approx(0.5 - phi1).epsilon(1e-13));
    CHECK(x.mu(2) == doctest::Approx(0.5 - phi1).epsilon(1e-13));
    CHECK(x.mu(3) == doctest::Approx(phi1).epsilon(1e-13));
    CHECK(x.labels()[0].find("-1") != std::string::npos);
}

TEST_CASE("discretized gaussian kernel matches a quadrature oracle") {
    const Partition1D p = window_scheme(2, 1);  // 6 cells
    const Measure1D prior = normal(0.0, 1.0);
    const KernelModel1D k = gaussian_kernel(1.0);
    const KernelMorphism f = discretize_kernel(k, prior, p, p, {});

    for (Eigen::Index r = 0; r < f.matrix().rows(); ++r)
        CHECK(f.matrix().row(r).sum() == doctest::Approx(1.0).epsilon(1e-13));

    // Oracle: entry [k][l] = int_{cell k} phi(x) * N(x,1)(cell l) dx / mass_k,
    // with tails truncated at +-10 (mass beyond is < 1e-22).
    const auto& b = p.breakpoints;
    auto cell_bounds = [&](std::size_t i) {
        const double lo = i == 0 ? -10.0 : b[i - 1];
        const double hi = i == b.size() ? 10.0 : b[i];
        return std::pair{lo, hi};
    };
    auto target_mass = [&](std::size_t l, double x) {
        const double lo = l == 0 ? -INFINITY : b[l - 1];
        const double hi = l == b.size() ? INFINITY : b[l];
        const double chi = l == b.size() ? 1.0 : std_normal_cdf(hi - x);
        const double clo = l == 0 ? 0.0 : std_normal_cdf(lo - x);
        return chi - clo;
    };
    for (std::size_t kc : {std::size_t{0}, std::size_t{2}, std::size_t{5}}) {
        const auto [lo, hi] = cell_bounds(kc);
        const double mass = integrate(std_normal_density, lo, hi);
        for (std::size_t l : {std::size_t{1}, std::size_t{3}, std::size_t{5}}) {
            const double num = integrate(
                [&](double x) { return std_normal_density(x) * target_mass(l, x); },
                lo, hi);
            CHECK(f.matrix()(static_cast<Eigen::Index>(kc),
                             static_cast<Eigen::Index>(l)) ==
                  doctest::Approx(num / mass).epsilon(1e-9));
        }
    }
}

TEST_CASE("discretize rejects priors with heavy tails beyond the cutoff") {
    QuadratureConfig q;
    q.tail_cutoff = 2.0;  // N(0,1) mass outside [-2,2] is ~0.0455
    CHECK_THROWS_AS(discretize_kernel(gaussian_kernel(1.0), normal(0.0, 1.0),
                                      window_scheme(2, 1), window_scheme(2, 1),
                                      q),
                    TailMassTooLarge);
}

TEST_CASE("discretize handles prior-null cells") {
    // Uniform prior on (0,1]; cells outside carry zero mass and fall back to
    // representative points, but every row must stay stochastic.
    Measure1D uniform;
    uniform.cdf = [](double x) { return std::min(1.0, std::max(0.0, x)); };
    uniform.density = [](double x) { return (x > 0.0 && x <= 1.0) ? 1.0 : 0.0; };
    uniform.descriptor = "uniform01";
    const Partition1D p = window_scheme(2, 1);
    const KernelMorphism f =
        discretize_kernel(gaussian_kernel(1.0), uniform, p, p, {});
    for (Eigen::Index r = 0; r < f.matrix().rows(); ++r) {
        CHECK(f.matrix().row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f.matrix().row(r).minCoeff() >= 0.0);
    }
    CHECK(f.source().mu(0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("finite quotients and their lifts") {
    const MeasuredSpace x({"a", "b", "c"}, (Vec(3) << 0.2, 0.3, 0.5).finished());
    FiniteQuotient q{x, {"u", "v"}, {0, 0, 1}};
    const KernelMorphism lifted = q.lift();
    CHECK(lifted.matrix()(0, 0) == 1.0);
    CHECK(lifted.matrix()(2, 1) == 1.0);
    CHECK(lifted.target().mu(0) == doctest::Approx(0.5).epsilon(1e-14));

    const FiniteQuotient id = FiniteQuotient::identity(x);
    CHECK(kernels_equal_ae(id.lift(), KernelMorphism::identity(x), 1e-15));
    const FiniteQuotient pt = FiniteQuotient::collapse(x);
    CHECK(pt.lift().target().size() == 1);
}

TEST_CASE("fibre averaging against the hand formula") {
    const MeasuredSpace x({"a", "b", "c"}, (Vec(3) << 0.2, 0.3, 0.5).finished());
    Mat m(3, 3);
    m << 0.5, 0.3, 0.2,
         0.1, 0.6, 0.3,
         0.4, 0.4, 0.2;
    const KernelMorphism f(x, {"d", "e", "g"}, m);
    const FiniteQuotient p{x, {"u", "v"}, {0, 0, 1}};
    const FiniteQuotient q{f.target(), {"s", "t"}, {0, 1, 1}};
    const KernelMorphism coarse = approximate_finite(f, p, q);

    // row u: (0.2*row_a + 0.3*row_b)/0.5, then columns summed by q.
    const Vec fibre_u = (0.2 * m.row(0) + 0.3 * m.row(1)).transpose() / 0.5;
    CHECK(coarse.matrix()(0, 0) == doctest::Approx(fibre_u(0)).epsilon(1e-13));
    CHECK(coarse.matrix()(0, 1) ==
          doctest::Approx(fibre_u(1) + fibre_u(2)).epsilon(1e-13));
    CHECK(coarse.matrix()(1, 0) == doctest::Approx(0.4).epsilon(1e-13));

    // internalize re-embeds the coarse kernel on the original spaces.
    const KernelMorphism inner = internalize(f, p, q);
    CHECK(inner.source().same_as(x, 1e-12));
    CHECK(inner.target().labels() == f.target().labels());
    // Rows within a p-fibre coincide.
    CHECK((inner.matrix().row(0) - inner.matrix().row(1)).cwiseAbs().maxCoeff()
          <= 1e-12);
    // Internalizing twice changes nothing.
    CHECK(kernels_equal_ae(internalize(inner, p, q), inner, 1e-9));
}

TEST_CASE("hemi-bisimulation predicates") {
    const MeasuredSpace x({"a", "b", "c"}, (Vec(3) << 0.2, 0.3, 0.5).finished());
    Mat m(3, 3);
    m << 0.5, 0.3, 0.2,
         0.1, 0.6, 0.3,
         0.4, 0.4, 0.2;
    const KernelMorphism f(x, {"d", "e", "g"}, m);
    const FiniteQuotient q{f.target(), {"s", "t"}, {0, 1, 1}};

    CHECK_FALSE(is_left_hemi_bisimulation(f, q));

    // A kernel factoring through the quotient is a left hemi-bisimulation.
    const KernelMorphism left = internalize(f, FiniteQuotient::identity(x), q);
    CHECK(is_left_hemi_bisimulation(left, q));

    const FiniteQuotient qs{x, {"u", "v"}, {0, 0, 1}};
    Mat mc(2, 3);
    mc << 0.5, 0.3, 0.2,
          0.4, 0.4, 0.2;
    const KernelMorphism g_coarse(qs.lift().target(), {"d", "e", "g"}, mc);
    const KernelMorphism g = compose(qs.lift(), g_coarse);
    CHECK(is_right_hemi_bisimulation(g, qs));
    CHECK_FALSE(is_right_hemi_bisimulation(f, qs));
}
