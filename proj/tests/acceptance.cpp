// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. argv[1] is the path to the CLI binary (criterion 1 goes through
// the real command line).

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "krn/convergence.hpp"
#include "krn/discretize.hpp"
#include "krn/measure_core.hpp"
#include "krn/models1d.hpp"
#include "krn/probnetkat.hpp"
#include "krn/selftest.hpp"

using json = nlohmann::json;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion-" << criterion << ": "
              << detail << "\n";
    if (!ok) ++failures;
}

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch())
        .count();
}

std::string run_cli(const std::string& cmd, int& exit_code) {
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        exit_code = -1;
        return {};
    }
    std::string out;
    char buf[4096];
    while (size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    exit_code = pclose(pipe);
    return out;
}

// Criterion 1: Gaussian posterior through the CLI, N(1/4,1/2) reference.
void criterion_posterior(const std::string& cli) {
    const std::string base =
        " bayes --prior normal:0:1 --likelihood-var 1 --obs 0.5 --exact";
    int code = 0;
    const double t0 = now_s();
    const std::string out = run_cli(cli + base + " --m 7 --n 5", code);
    const double elapsed = now_s() - t0;
    if (code != 0) {
        report(1, false, "cli exited with code " + std::to_string(code));
        return;
    }
    const json r = json::parse(out);
    const double mean_dev = r["oracle"]["mean_deviation"].get<double>();
    const double var_dev = r["oracle"]["variance_deviation"].get<double>();
    const double sup_dev =
        r["oracle"]["density_sup_deviation_on_[-2,2]"].get<double>();

    int code2 = 0;
    const json coarse =
        json::parse(run_cli(cli + base + " --m 3 --n 2", code2));
    const double sup_coarse =
        coarse["oracle"]["density_sup_deviation_on_[-2,2]"].get<double>();

    std::ostringstream d;
    d << "posterior vs N(0.25,0.5): |dmean|=" << mean_dev
      << " |dvar|=" << var_dev << " sup|ddensity|=" << sup_dev
      << " (coarse " << sup_coarse << "), " << elapsed << "s";
    report(1,
           code2 == 0 && mean_dev <= 0.02 && var_dev <= 0.02 &&
               sup_dev <= 0.02 && sup_coarse > sup_dev && elapsed < 1.0,
           d.str());
}

void criterion_suite(int criterion, const char* what,
                     krn::selftest::SuiteResult (*suite)(uint64_t, int),
                     int cases, double budget_s) {
    const double t0 = now_s();
    const auto r = suite(20240101, cases);
    const double elapsed = now_s() - t0;
    std::ostringstream d;
    d << what << ": " << (r.cases - r.failures) << "/" << r.cases
      << " random instances, " << elapsed << "s";
    if (!r.ok()) d << " (" << r.first_failure << ")";
    report(criterion, r.ok() && elapsed < budget_s, d.str());
}

// Criterion 5: change of variables at 1e-12, checked via the naturality
// suite's dedicated law plus a direct loop here.
void criterion_change_of_variables() {
    std::mt19937_64 rng(4242);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const auto x = krn::selftest::random_space(rng, 2, 8);
        const auto f = krn::selftest::random_kernel(rng, x, 2 + int(rng() % 7));
        const auto phi =
            krn::selftest::random_predicate(rng, f.target().size());
        const auto [lhs, rhs] = krn::change_of_variables_check(f, phi);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    std::ostringstream d;
    d << "change of variables on 500 random kernels, max deviation " << worst;
    report(5, worst <= 1e-12, d.str());
}

void criterion_convergence() {
    const double t0 = now_s();
    krn::RefinementChain chain;
    for (int n : {1, 2, 4, 8, 16})
        chain.partitions.push_back(krn::window_scheme(7, n));
    const auto sweep =
        krn::refinement_sweep(krn::gaussian_kernel(1.0), krn::normal(0.0, 1.0),
                              chain, {{0.0, 1.0}}, {});
    const double first = sweep.rows.front().sot_gap;
    const double last = sweep.rows.back().sot_gap;

    const auto tens = krn::tensor_convergence_check(
        krn::gaussian_kernel(1.0), krn::gaussian_kernel(1.0),
        krn::normal(0.0, 1.0), krn::normal(0.0, 1.0), chain, {0.0, 1.0},
        {0.0, 1.0}, {});
    const double tlast = tens.rows.back().sot_gap;
    const double elapsed = now_s() - t0;

    std::ostringstream d;
    d << "sot gap " << first << " -> " << last << ", tensor final " << tlast
      << ", " << elapsed << "s";
    report(6, last < first && last <= 0.01 && tlast <= 2e-3 && elapsed < 30.0,
           d.str());
}

void criterion_netkat() {
    using namespace krn::netkat;
    const double t0 = now_s();
    const auto prog = parse_program(
        "(p0! +[0.5] p1!) ; ((dup ; (p0! +[0.5] p1!)))*");
    const auto [prefix, body] = split_prefix_star(prog);

    auto initial_at = [&](int level) {
        InitialDistribution initial;
        for (const auto& [s, p] : step_distribution(
                 prefix, PacketSet::singleton(History::parse("(0)")), level))
            initial.emplace_back(s, p);
        return initial;
    };
    const StarResult star = star_eval(body, initial_at(3), 3);

    bool ok = true;
    std::ostringstream d;
    auto expect = [&](const char* what, double got, double want, double tol) {
        if (std::abs(got - want) > tol) {
            ok = false;
            d << " [" << what << "=" << got << " want " << want << "]";
        }
    };
    expect("member(1)", prob_member(star, History::parse("(1)")), 0.5, 1e-9);
    expect("member(1,0)", prob_member(star, History::parse("(1,0)")), 0.25,
           1e-9);
    expect("member(0,1)", prob_member(star, History::parse("(0,1)")), 0.25,
           1e-9);

    PacketSet all3;
    for (int w = 0; w < 8; ++w) {
        History h;
        for (int i = 0; i < 3; ++i)
            h.bits.push_back(static_cast<uint8_t>(w >> i & 1));
        all3.histories.insert(h);
    }
    expect("superset-all", prob_superset(star, all3), 1.0, 1e-9);
    for (const auto& [s, p] : star.union_support)
        if (!std::includes(s.histories.begin(), s.histories.end(),
                           all3.histories.begin(), all3.histories.end())) {
            ok = false;
            d << " [atom missing a length-3 history]";
            break;
        }

    // Uniform is stationary on every ergodic class: column sums of the
    // restricted transition matrix equal 1.
    const ReachableChain chain = build_chain(body, [&] {
        std::vector<PacketSet> seeds;
        for (const auto& [s, p] : initial_at(3)) seeds.push_back(s);
        return seeds;
    }(), 3, 100000);
    const auto info = chain.scc();
    for (std::size_t c = 0; c < info.sccs.size(); ++c) {
        if (info.sccs[c].empty() ||
            !info.bottom[static_cast<std::size_t>(info.sccs[c][0])])
            continue;
        for (int v : info.sccs[c]) {
            double col = 0.0;
            for (int u : info.sccs[c])
                for (const auto& [j, pr] : chain.transitions[u])
                    if (j == v) col += pr;
            if (std::abs(col - 1.0) > 1e-12) {
                ok = false;
                d << " [uniform not stationary, col sum " << col << "]";
            }
        }
    }

    for (const char* q : {"(1)", "(1,0)", "(0,1)"}) {
        const History h = History::parse(q);
        const double hit = prob_member_hitting(body, initial_at(3), 3, h);
        if (std::abs(hit - prob_member(star, h)) > 1e-9) {
            ok = false;
            d << " [hitting solve disagrees on " << q << "]";
        }
    }

    const StarResult mc = monte_carlo_star(body, initial_at(3), 3, 100000,
                                           64, 42);
    for (const char* q : {"(1)", "(1,0)", "(0,1)"}) {
        const History h = History::parse(q);
        if (std::abs(prob_member(mc, h) - prob_member(star, h)) > 0.01) {
            ok = false;
            d << " [monte carlo off on " << q << "]";
        }
    }

    for (int level : {4, 5}) {
        const StarResult s2 = star_eval(body, initial_at(level), level);
        for (const char* q : {"(1)", "(0)", "(1,0)", "(0,1)", "(1,1)", "(0,0)"}) {
            const History h = History::parse(q);
            if (prob_member(s2, h) != prob_member(star, h)) {
                ok = false;
                d << " [level " << level << " unstable on " << q << "]";
            }
        }
    }

    const double elapsed = now_s() - t0;
    std::ostringstream head;
    head << "fair-coin trace at level 3: member/superset/stationarity/hitting/mc/"
            "level-stability, "
         << elapsed << "s" << d.str();
    report(7, ok && elapsed < 10.0, head.str());
}

void criterion_robustness() {
    bool ok = true;
    std::ostringstream d;

    // Dagger with nu-null cells: involution almost everywhere.
    const krn::MeasuredSpace x({"a", "b", "c"},
                               (krn::Vec(3) << 0.2, 0.3, 0.5).finished());
    krn::Mat m(3, 3);
    m << 0.5, 0.5, 0.0,
         0.25, 0.75, 0.0,
         1.0, 0.0, 0.0;
    const krn::KernelMorphism f(x, {"d", "e", "g"}, m);
    if (f.target().mu(2) > 1e-12 ||
        !krn::kernels_equal_ae(krn::dagger(krn::dagger(f)), f, 1e-9)) {
        ok = false;
        d << " [dagger involution a.e. failed]";
    }

    // Prior-null cells: rows stay stochastic.
    krn::Measure1D uniform;
    uniform.cdf = [](double t) { return std::min(1.0, std::max(0.0, t)); };
    uniform.density = [](double t) {
        return (t > 0.0 && t <= 1.0) ? 1.0 : 0.0;
    };
    uniform.descriptor = "uniform01";
    const krn::Partition1D p = krn::window_scheme(2, 1);
    const krn::KernelMorphism g =
        krn::discretize_kernel(krn::gaussian_kernel(1.0), uniform, p, p, {});
    for (Eigen::Index r = 0; r < g.matrix().rows(); ++r)
        if (std::abs(g.matrix().row(r).sum() - 1.0) > 1e-12 ||
            g.matrix().row(r).minCoeff() < 0.0) {
            ok = false;
            d << " [row " << r << " not stochastic]";
        }

    report(8, ok, "null-cell dagger involution a.e.; null-prior rows stochastic" +
                      d.str());
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <path-to-cli>\n";
        return 2;
    }
    const std::string cli = argv[1];

    criterion_posterior(cli);
    criterion_suite(2, "dagger algebra", krn::selftest::run_dagger_suite, 500,
                    10.0);
    criterion_suite(3, "approximation laws",
                    krn::selftest::run_approximation_suite, 200, 60.0);
    criterion_suite(4, "radon-nikodym naturality",
                    krn::selftest::run_naturality_suite, 500, 60.0);
    criterion_change_of_variables();
    criterion_convergence();
    criterion_netkat();
    criterion_robustness();

    std::cout << (failures == 0 ? "ACCEPTANCE: all criteria passed"
                                : "ACCEPTANCE: " + std::to_string(failures) +
                                      " criterion(s) failed")
              << "\n";
    return failures == 0 ? 0 : 1;
}
