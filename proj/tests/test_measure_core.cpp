#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "krn/measure_core.hpp"

using namespace krn;

namespace {

MeasuredSpace make_space(std::initializer_list<double> w) {
    std::vector<std::string> labels;
    Vec mu(static_cast<Eigen::Index>(w.size()));
    Eigen::Index i = 0;
    for (double v : w) {
        labels.push_back("c" + std::to_string(i));
        mu(i++) = v;
    }
    return MeasuredSpace(std::move(labels), std::move(mu));
}

KernelMorphism make_kernel(const MeasuredSpace& src,
                           std::initializer_list<std::initializer_list<double>> rows) {
    const auto cols = static_cast<Eigen::Index>(rows.begin()->size());
    Mat m(static_cast<Eigen::Index>(rows.size()), cols);
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    std::vector<std::string> labels;
    for (Eigen::Index l = 0; l < cols; ++l)
        labels.push_back("d" + std::to_string(l));
    return KernelMorphism(src, std::move(labels), std::move(m));
}

}  // namespace

TEST_CASE("space construction and renormalization") {
    const auto x = make_space({0.25, 0.75});
    CHECK(x.size() == 2);
    CHECK(x.mu(0) == doctest::Approx(0.25).epsilon(1e-15));

    // Deviation 5e-10 is renormalized back to a probability vector.
    Vec off(2);
    off << 0.25, 0.75 + 5e-10;
    const MeasuredSpace y({"a", "b"}, off);
    CHECK(std::abs(y.mu().sum() - 1.0) <= 1e-15);

    Vec bad(2);
    bad << 0.25, 0.80;
    CHECK_THROWS_AS(MeasuredSpace({"a", "b"}, bad), InvalidArgument);
    Vec neg(2);
    neg << -0.25, 1.25;
    CHECK_THROWS_AS(MeasuredSpace({"a", "b"}, neg), InvalidArgument);
    Vec ok(2);
    ok << 0.5, 0.5;
    CHECK_THROWS_AS(MeasuredSpace({"a", "a"}, ok), InvalidArgument);
}

TEST_CASE("pushforward target weights") {
    const auto x = make_space({0.25, 0.75});
    const auto f = make_kernel(x, {{0.7, 0.3}, {0.2, 0.8}});
    // nu = mu^T M, by hand: (0.25*0.7+0.75*0.2, 0.25*0.3+0.75*0.8).
    CHECK(f.target().mu(0) == doctest::Approx(0.325).epsilon(1e-14));
    CHECK(f.target().mu(1) == doctest::Approx(0.675).epsilon(1e-14));

    Mat broken(2, 2);
    broken << 0.7, 0.4, 0.2, 0.8;
    CHECK_THROWS_AS(KernelMorphism(x, {"d0", "d1"}, broken), InvalidArgument);
}

TEST_CASE("composition is the matrix product") {
    const auto x = make_space({0.5, 0.5});
    const auto f = make_kernel(x, {{0.75, 0.25}, {0.25, 0.75}});
    const auto g = make_kernel(f.target(), {{0.75, 0.25}, {0.25, 0.75}});
    const auto h = compose(f, g);
    // hand product of the symmetric 2x2 with itself.
    CHECK(h.matrix()(0, 0) == doctest::Approx(0.625).epsilon(1e-14));
    CHECK(h.matrix()(0, 1) == doctest::Approx(0.375).epsilon(1e-14));
    CHECK(h.matrix()(1, 0) == doctest::Approx(0.375).epsilon(1e-14));
    CHECK(h.matrix()(1, 1) == doctest::Approx(0.625).epsilon(1e-14));
    CHECK(h.source().same_as(f.source()));

    const auto y = make_space({0.3, 0.7});
    const auto g_wrong = make_kernel(y, {{0.5, 0.5}, {0.5, 0.5}});
    CHECK_THROWS_AS(compose(f, g_wrong), SpaceMismatch);
}

TEST_CASE("tensor product kernel") {
    const auto x = make_space({0.5, 0.5});
    const auto f = make_kernel(x, {{0.75, 0.25}, {0.25, 0.75}});
    const auto g = make_kernel(make_space({0.25, 0.75}),
                               {{0.9, 0.1}, {0.3, 0.7}});
    const auto fg = tensor(f, g);
    CHECK(fg.source().size() == 4);
    CHECK(fg.target().size() == 4);
    // Entry ((k,a),(l,b)) = f[k][l]*g[a][b]; spot-check (0,1),(1,0).
    CHECK(fg.matrix()(1, 2) == doctest::Approx(0.25 * 0.3).epsilon(1e-14));
    CHECK(fg.source().labels()[1] == "(c0,c1)");
    for (Eigen::Index k = 0; k < 4; ++k)
        CHECK(fg.matrix().row(k).sum() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("coupling has the prescribed entries and marginals") {
    const auto x = make_space({0.5, 0.5});
    const auto f = make_kernel(x, {{0.75, 0.25}, {0.25, 0.75}});
    const auto gamma = coupling(f);
    // entries mu[k]*M[k][l], row-major.
    CHECK(gamma.values(0) == doctest::Approx(0.375).epsilon(1e-14));
    CHECK(gamma.values(1) == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(gamma.values(2) == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(gamma.values(3) == doctest::Approx(0.375).epsilon(1e-14));
    // Marginals recover mu and nu.
    CHECK(gamma.values(0) + gamma.values(1) ==
          doctest::Approx(x.mu(0)).epsilon(1e-14));
    CHECK(gamma.values(0) + gamma.values(2) ==
          doctest::Approx(f.target().mu(0)).epsilon(1e-14));
}

TEST_CASE("dagger has the Bayes-rule entries") {
    const auto x = make_space({0.25, 0.75});
    const auto f = make_kernel(x, {{0.8, 0.2}, {0.4, 0.6}});
    const auto fd = dagger(f);
    // nu = (0.5, 0.5); fd[l][k] = mu[k] f[k][l] / nu[l], by hand.
    CHECK(fd.matrix()(0, 0) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(fd.matrix()(0, 1) == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(fd.matrix()(1, 0) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(fd.matrix()(1, 1) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(fd.source().same_as(f.target(), 1e-12));

    // Involution and identity.
    CHECK(kernels_equal_ae(dagger(fd), f, 1e-12));
    const auto id = KernelMorphism::identity(x);
    CHECK(kernels_equal_ae(dagger(id), id, 1e-12));
}

TEST_CASE("dagger on a nu-null column falls back to mu") {
    const auto x = make_space({0.25, 0.75});
    const auto f = make_kernel(x, {{1.0, 0.0}, {1.0, 0.0}});
    const auto fd = dagger(f);
    CHECK(fd.matrix()(1, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(fd.matrix()(1, 1) == doctest::Approx(0.75).epsilon(1e-14));
    // Involution only holds almost everywhere (the null cell is exempt).
    CHECK(kernels_equal_ae(dagger(fd), f, 1e-9));
}

TEST_CASE("predicate and state transforms") {
    const auto x = make_space({0.25, 0.75});
    const auto f = make_kernel(x, {{0.8, 0.2}, {0.4, 0.6}});
    Predicate phi;
    phi.values = Vec(2);
    phi.values << 1.0, -2.0;
    const auto back = predicate_transform(f, phi);
    CHECK(back.values(0) == doctest::Approx(0.8 - 0.4).epsilon(1e-14));
    CHECK(back.values(1) == doctest::Approx(0.4 - 1.2).epsilon(1e-14));

    FiniteMeasureVector rho;
    rho.values = Vec(2);
    rho.values << 0.1, 0.3;
    const auto fwd = state_transform(f, rho);
    CHECK(fwd.values(0) == doctest::Approx(0.1 * 0.8 + 0.3 * 0.4).epsilon(1e-14));
    CHECK(fwd.values.sum() == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("state transform rejects non-absolutely-continuous input") {
    const auto x = make_space({0.0, 1.0});
    const auto f = make_kernel(x, {{0.5, 0.5}, {0.5, 0.5}});
    FiniteMeasureVector rho;
    rho.values = Vec(2);
    rho.values << 0.2, 0.3;
    CHECK_THROWS_AS(state_transform(f, rho), AbsoluteContinuityViolation);
}

TEST_CASE("rn and mr are mutually inverse") {
    const auto x = make_space({0.25, 0.75});
    FiniteMeasureVector rho;
    rho.values = Vec(2);
    rho.values << 0.1, 0.6;
    const auto d = rn_derivative(rho, x);
    CHECK(d.values(0) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(d.values(1) == doctest::Approx(0.8).epsilon(1e-14));
    const auto back = mr(d, x);
    CHECK((back.values - rho.values).cwiseAbs().maxCoeff() <= 1e-15);

    const auto null = make_space({0.0, 1.0});
    FiniteMeasureVector bad;
    bad.values = Vec(2);
    bad.values << 0.2, 0.3;
    CHECK_THROWS_AS(rn_derivative(bad, null), AbsoluteContinuityViolation);
}

TEST_CASE("weighted lp norms") {
    const auto x = make_space({0.25, 0.75});
    Predicate phi;
    phi.values = Vec(2);
    phi.values << 1.0, -2.0;
    CHECK(lp_norm(phi, x, 1.0) == doctest::Approx(1.75).epsilon(1e-14));
    CHECK(lp_norm(phi, x, 2.0) ==
          doctest::Approx(std::sqrt(0.25 + 3.0)).epsilon(1e-14));
    CHECK(lp_norm(phi, x, std::numeric_limits<double>::infinity()) ==
          doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(lp_norm(phi, x, 3.0), InvalidArgument);

    // Essential sup ignores null cells.
    const auto y = make_space({0.0, 1.0});
    Predicate psi;
    psi.values = Vec(2);
    psi.values << 100.0, 1.0;
    CHECK(lp_norm(psi, y, std::numeric_limits<double>::infinity()) ==
          doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("change of variables identity") {
    const auto x = make_space({0.25, 0.75});
    const auto f = make_kernel(x, {{0.8, 0.2}, {0.4, 0.6}});
    Predicate phi;
    phi.values = Vec(2);
    phi.values << 1.5, -0.5;
    const auto [lhs, rhs] = change_of_variables_check(f, phi);
    CHECK(std::abs(lhs - rhs) <= 1e-12);
    // integral of phi d(nu) with nu=(0.5,0.5).
    CHECK(lhs == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("product space labels and weights") {
    const auto x = make_space({0.25, 0.75});
    const auto y = make_space({0.5, 0.5});
    const auto xy = product_space(x, y);
    CHECK(xy.size() == 4);
    CHECK(xy.labels()[0] == "(c0,c0)");
    CHECK(xy.labels()[1] == "(c0,c1)");
    CHECK(xy.mu(2) == doctest::Approx(0.375).epsilon(1e-14));
}

TEST_CASE("constant kernel pushes to the target measure") {
    const auto x = make_space({0.25, 0.75});
    const auto y = make_space({0.1, 0.9});
    const auto c = KernelMorphism::constant(x, y);
    CHECK(c.target().same_as(y, 1e-12));
    CHECK(c.matrix()(0, 1) == doctest::Approx(0.9).epsilon(1e-14));
}
