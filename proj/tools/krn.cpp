// Command-line surface for the kernel-approximation library: approximate
// Bayesian inference on a window scheme, kernel dagger on JSON files,
// convergence sweeps, ProbNetKAT star queries, and the invariant selftest.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "krn/convergence.hpp"
#include "krn/discretize.hpp"
#include "krn/kernel_json.hpp"
#include "krn/measure_core.hpp"
#include "krn/models1d.hpp"
#include "krn/probnetkat.hpp"
#include "krn/selftest.hpp"

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_double_list(const std::string& text,
                                      const char* what) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::logic_error&) {
            throw UsageError(std::string(what) + ": bad number '" + tok + "'");
        }
    }
    if (out.empty()) throw UsageError(std::string(what) + ": empty list");
    return out;
}

std::pair<double, double> parse_normal_descriptor(const std::string& text) {
    std::istringstream in(text);
    std::string tag, mean_s, var_s;
    std::getline(in, tag, ':');
    std::getline(in, mean_s, ':');
    std::getline(in, var_s, ':');
    if (tag != "normal" || mean_s.empty() || var_s.empty())
        throw UsageError("expected normal:<mean>:<variance>, got '" + text + "'");
    try {
        return {std::stod(mean_s), std::stod(var_s)};
    } catch (const std::logic_error&) {
        throw UsageError("bad number in '" + text + "'");
    }
}

// Fraction of cell i lying above t, by length on finite cells. Unbounded
// cells count fully once t clears their finite edge.
double cell_fraction_above(const krn::Partition1D& p, std::size_t i, double t) {
    const auto& b = p.breakpoints;
    if (i == 0) return t < b.front() ? 1.0 : 0.0;
    if (i == b.size()) return t <= b.back() ? 1.0 : 0.0;
    const double lo = b[i - 1], hi = b[i];
    if (t <= lo) return 1.0;
    if (t >= hi) return 0.0;
    return (hi - t) / (hi - lo);
}

struct BayesOptions {
    int m = 0, n = 0;
    std::string prior = "normal:0:1";
    double likelihood_var = 1.0;
    double obs = 0.0;
    std::vector<std::string> queries;
    std::string format = "json";
    int quad_nodes = 16;
    double tail_cutoff = 12.0;
    bool exact = false;
    std::string emit_plot;
};

int run_bayes(const BayesOptions& opt) {
    if (opt.m < 1 || opt.n < 1) throw UsageError("--m and --n must be >= 1");
    if (opt.format != "json" && opt.format != "csv")
        throw UsageError("--format must be json or csv");
    const krn::Partition1D grid = krn::window_scheme(opt.m, opt.n);
    const krn::Measure1D prior = krn::parse_measure_descriptor(opt.prior);
    const krn::KernelModel1D like = krn::gaussian_kernel(opt.likelihood_var);
    const krn::QuadratureConfig quad{opt.quad_nodes, opt.tail_cutoff, 1e-9};

    const krn::KernelMorphism forward =
        krn::discretize_kernel(like, prior, grid, grid, quad);
    const krn::KernelMorphism backward = krn::dagger(forward);
    const std::size_t obs_cell = krn::cell_of(opt.obs, grid);
    const krn::Vec posterior =
        backward.matrix().row(static_cast<Eigen::Index>(obs_cell)).transpose();

    const auto& b = grid.breakpoints;
    const std::size_t cells = grid.cell_count();
    auto midpoint = [&](std::size_t i) {
        if (i == 0) return b.front();
        if (i == b.size()) return b.back();
        return 0.5 * (b[i - 1] + b[i]);
    };
    double mean = 0.0, second = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        const double mid = midpoint(i);
        const double mass = posterior(static_cast<Eigen::Index>(i));
        mean += mass * mid;
        second += mass * mid * mid;
    }
    const double variance = second - mean * mean;

    json queries = json::object();
    for (const auto& q : opt.queries) {
        if (q.rfind("gt:", 0) != 0)
            throw UsageError("unsupported query '" + q + "' (expected gt:<t>)");
        double t;
        try {
            t = std::stod(q.substr(3));
        } catch (const std::logic_error&) {
            throw UsageError("bad threshold in query '" + q + "'");
        }
        double prob = 0.0;
        for (std::size_t i = 0; i < cells; ++i)
            prob += posterior(static_cast<Eigen::Index>(i)) *
                    cell_fraction_above(grid, i, t);
        queries[q] = prob;
    }

    json rows = json::array();
    for (std::size_t i = 0; i < cells; ++i) {
        const bool tail = (i == 0 || i == b.size());
        json row;
        row["cell"] = i;
        row["left"] = i == 0 ? json(nullptr) : json(b[i - 1]);
        row["right"] = i == b.size() ? json(nullptr) : json(b[i]);
        row["mass"] = posterior(static_cast<Eigen::Index>(i));
        row["density"] = tail ? json(nullptr)
                              : json(posterior(static_cast<Eigen::Index>(i)) /
                                     (b[i] - b[i - 1]));
        rows.push_back(std::move(row));
    }

    json report;
    report["scheme"] = "window(" + std::to_string(opt.m) + "," +
                       std::to_string(opt.n) + ")";
    report["cells"] = cells;
    report["observation"] = opt.obs;
    report["observation_cell"] = obs_cell;
    report["rows"] = std::move(rows);
    report["summary"] = {{"mean", mean},
                         {"variance", variance},
                         {"queries", queries}};

    if (opt.exact) {
        const auto [prior_mean, prior_var] = parse_normal_descriptor(opt.prior);
        const krn::Measure1D post = krn::exact_gaussian_posterior(
            prior_mean, prior_var, opt.likelihood_var, opt.obs);
        const auto [exact_mean, exact_var] =
            parse_normal_descriptor(post.descriptor);
        double sup_dev = 0.0;
        for (std::size_t i = 1; i < b.size(); ++i) {
            const double mid = 0.5 * (b[i - 1] + b[i]);
            if (mid < -2.0 || mid > 2.0) continue;
            const double approx_density =
                posterior(static_cast<Eigen::Index>(i)) / (b[i] - b[i - 1]);
            sup_dev = std::max(sup_dev,
                               std::abs(approx_density - post.density(mid)));
        }
        json oracle;
        oracle["posterior"] = post.descriptor;
        oracle["mean"] = exact_mean;
        oracle["variance"] = exact_var;
        oracle["mean_deviation"] = std::abs(mean - exact_mean);
        oracle["variance_deviation"] = std::abs(variance - exact_var);
        oracle["density_sup_deviation_on_[-2,2]"] = sup_dev;
        json qdev = json::object();
        for (auto& [name, value] : queries.items()) {
            const double t = std::stod(name.substr(3));
            qdev[name] =
                std::abs(value.get<double>() - krn::posterior_tail_query(post, t));
        }
        oracle["query_deviations"] = std::move(qdev);
        report["oracle"] = std::move(oracle);
    }

    if (!opt.emit_plot.empty()) {
        const std::string data_path = opt.emit_plot + ".dat";
        std::ofstream data(data_path);
        for (std::size_t i = 1; i < b.size(); ++i)
            data << 0.5 * (b[i - 1] + b[i]) << " "
                 << posterior(static_cast<Eigen::Index>(i)) / (b[i] - b[i - 1])
                 << "\n";
        std::ofstream script(opt.emit_plot);
        script << "set title 'Approximate posterior, "
               << report["scheme"].get<std::string>() << "'\n"
               << "set xlabel 'x'\nset ylabel 'density'\n";
        if (opt.exact) {
            const auto [pm, pv] = parse_normal_descriptor(opt.prior);
            const krn::Measure1D post = krn::exact_gaussian_posterior(
                pm, pv, opt.likelihood_var, opt.obs);
            const auto [em, ev] = parse_normal_descriptor(post.descriptor);
            script << "exact(x) = exp(-0.5*(x-(" << em << "))**2/(" << ev
                   << "))/sqrt(2*pi*(" << ev << "))\n"
                   << "plot '" << data_path
                   << "' with histeps title 'approximate', exact(x) with "
                      "lines title 'exact'\n";
        } else {
            script << "plot '" << data_path
                   << "' with histeps title 'approximate'\n";
        }
    }

    if (opt.format == "csv") {
        std::cout << "cell,left,right,mass,density\n";
        for (const auto& row : report["rows"]) {
            std::cout << row["cell"].get<std::size_t>() << ",";
            if (!row["left"].is_null()) std::cout << row["left"].get<double>();
            std::cout << ",";
            if (!row["right"].is_null()) std::cout << row["right"].get<double>();
            std::cout << "," << row["mass"].get<double>() << ",";
            if (!row["density"].is_null())
                std::cout << row["density"].get<double>();
            std::cout << "\n";
        }
    } else {
        std::cout << report.dump(2) << "\n";
    }
    return 0;
}

int run_dagger(const std::string& input) {
    krn::KernelMorphism f = [&] {
        if (input == "-") return krn::kernel_from_json_stream(std::cin);
        std::ifstream in(input);
        if (!in) throw UsageError("cannot open '" + input + "'");
        return krn::kernel_from_json_stream(in);
    }();
    std::cout << krn::kernel_to_json(krn::dagger(f)) << "\n";
    return 0;
}

struct ConvergeOptions {
    int m = 7;
    std::string levels = "1,2,4,8,16";
    std::string interval = "0,1";
    std::string breakpoints;
    int quad_nodes = 16;
    double tail_cutoff = 12.0;
};

int run_converge(const ConvergeOptions& opt) {
    const auto iv = parse_double_list(opt.interval, "--interval");
    if (iv.size() != 2 || iv[0] > iv[1])
        throw UsageError("--interval must be a,b with a <= b");
    const krn::QuadratureConfig quad{opt.quad_nodes, opt.tail_cutoff, 1e-9};
    krn::RefinementChain chain;
    if (!opt.breakpoints.empty()) {
        krn::Partition1D p{parse_double_list(opt.breakpoints, "--breakpoints")};
        if (!p.valid())
            throw UsageError("--breakpoints must be strictly increasing");
        chain.partitions.push_back(std::move(p));
    } else {
        if (opt.m < 1) throw UsageError("--m must be >= 1");
        for (double level : parse_double_list(opt.levels, "--levels")) {
            if (level < 1 || level != std::floor(level))
                throw UsageError("--levels must be positive integers");
            chain.partitions.push_back(
                krn::window_scheme(opt.m, static_cast<int>(level)));
        }
        try {
            chain.validate();
        } catch (const krn::InvalidArgument& e) {
            throw UsageError(std::string("levels do not refine: ") + e.what());
        }
    }
    const auto report = krn::refinement_sweep(
        krn::gaussian_kernel(1.0), krn::normal(0.0, 1.0), chain,
        {{iv[0], iv[1]}}, quad);
    std::cout << report.to_csv();
    return 0;
}

struct NetkatOptions {
    std::string program;
    int level = 3;
    std::string input = "(0)";
    std::vector<std::string> queries;
    std::string mc;
    long state_budget = 100000;
    long pair_budget = 1000000;
};

int run_netkat(const NetkatOptions& opt) {
    using namespace krn::netkat;
    if (opt.level < 1) throw UsageError("--level must be >= 1");
    std::string text = opt.program;
    if (!text.empty() && text[0] == '@') {
        std::ifstream in(text.substr(1));
        if (!in) throw UsageError("cannot open '" + text.substr(1) + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    const ProgramPtr prog = parse_program(text);
    ProgramPtr prefix, body;
    try {
        std::tie(prefix, body) = split_prefix_star(prog);
    } catch (const krn::InvalidArgument& e) {
        throw UsageError(e.what());
    }
    const PacketSet input = PacketSet::singleton(History::parse(opt.input));
    InitialDistribution initial;
    if (prefix) {
        for (const auto& [s, p] : step_distribution(prefix, input, opt.level))
            initial.emplace_back(s, p);
    } else {
        initial.emplace_back(input, 1.0);
    }
    const StarBudgets budgets{opt.state_budget, opt.pair_budget};
    const StarResult star = star_eval(body, initial, opt.level, budgets);

    auto all_level_histories = [&] {
        PacketSet s;
        for (int w = 0; w < (1 << opt.level); ++w) {
            History h;
            for (int i = 0; i < opt.level; ++i)
                h.bits.push_back(static_cast<uint8_t>(w >> i & 1));
            s.histories.insert(std::move(h));
        }
        return s;
    };

    auto answer = [&](const StarResult& result, const std::string& q) {
        if (q.rfind("member:", 0) == 0)
            return prob_member(result, History::parse(q.substr(7)));
        if (q == "superset-all-level")
            return prob_superset(result, all_level_histories());
        throw UsageError("unsupported query '" + q +
                         "' (member:(bits) or superset-all-level)");
    };

    json out;
    out["program"] = prog->to_string();
    out["level"] = opt.level;
    out["input"] = opt.input;
    out["atoms"] = star.union_support.size();
    json queries = json::object();
    for (const auto& q : opt.queries) queries[q] = answer(star, q);
    out["queries"] = std::move(queries);

    if (!opt.mc.empty()) {
        const auto mc = parse_double_list(opt.mc, "--mc");
        if (mc.size() != 3) throw UsageError("--mc must be samples,horizon,seed");
        const StarResult sim = monte_carlo_star(
            body, initial, opt.level, static_cast<long>(mc[0]),
            static_cast<int>(mc[1]), static_cast<uint64_t>(mc[2]));
        json mcq = json::object();
        double max_dev = 0.0;
        for (const auto& q : opt.queries) {
            const double est = answer(sim, q);
            mcq[q] = est;
            max_dev = std::max(max_dev,
                               std::abs(est - out["queries"][q].get<double>()));
        }
        out["monte_carlo"] = {{"samples", static_cast<long>(mc[0])},
                              {"horizon", static_cast<int>(mc[1])},
                              {"seed", static_cast<uint64_t>(mc[2])},
                              {"queries", std::move(mcq)},
                              {"max_deviation", max_dev}};
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_selftest(uint64_t seed, int cases) {
    if (cases < 1) throw UsageError("--cases must be >= 1");
    const auto results = krn::selftest::run_all(seed, cases);
    bool all_ok = true;
    for (const auto& r : results) {
        std::cout << r.name << ": " << (r.cases - r.failures) << "/" << r.cases
                  << " passed";
        if (!r.ok()) {
            all_ok = false;
            std::cout << "  FIRST FAILURE: " << r.first_failure;
        }
        std::cout << "\n";
    }
    std::cout << (all_ok ? "selftest: OK" : "selftest: FAILED") << "\n";
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite Markov kernels with Bayesian inversion: "
                 "discretization, convergence diagnostics, ProbNetKAT star"};
    app.require_subcommand(1);

    BayesOptions bayes;
    auto* cmd_bayes = app.add_subcommand(
        "bayes", "Approximate Bayesian inference on a window scheme");
    cmd_bayes->add_option("--m", bayes.m, "Window half-width")->required();
    cmd_bayes->add_option("--n", bayes.n, "Subdivisions per unit")->required();
    cmd_bayes->add_option("--prior", bayes.prior, "Prior, normal:<mean>:<var>");
    cmd_bayes->add_option("--likelihood-var", bayes.likelihood_var,
                          "Likelihood variance");
    cmd_bayes->add_option("--obs", bayes.obs, "Observed value")->required();
    cmd_bayes->add_option("--query", bayes.queries,
                          "Posterior query gt:<t> (repeatable)");
    cmd_bayes->add_option("--format", bayes.format, "json or csv");
    cmd_bayes->add_option("--quad-nodes", bayes.quad_nodes,
                          "Gauss-Legendre nodes per cell");
    cmd_bayes->add_option("--tail-cutoff", bayes.tail_cutoff,
                          "Quadrature tail cutoff");
    cmd_bayes->add_flag("--exact", bayes.exact,
                        "Also report the conjugate exact posterior");
    cmd_bayes->add_option("--emit-plot", bayes.emit_plot,
                          "Write a gnuplot script to this path");

    std::string dagger_input;
    auto* cmd_dagger =
        app.add_subcommand("dagger", "Bayesian inversion of a kernel JSON file");
    cmd_dagger->add_option("input", dagger_input, "Kernel JSON path or '-'")
        ->required();

    ConvergeOptions conv;
    auto* cmd_converge =
        app.add_subcommand("converge", "SOT convergence sweep (CSV)");
    cmd_converge->add_option("--m", conv.m, "Window half-width");
    cmd_converge->add_option("--levels", conv.levels,
                             "Comma-separated refinement levels");
    cmd_converge->add_option("--interval", conv.interval, "Test interval a,b");
    cmd_converge->add_option("--breakpoints", conv.breakpoints,
                             "Custom partition breakpoints (overrides levels)");
    cmd_converge->add_option("--quad-nodes", conv.quad_nodes,
                             "Gauss-Legendre nodes per cell");
    cmd_converge->add_option("--tail-cutoff", conv.tail_cutoff,
                             "Quadrature tail cutoff");

    NetkatOptions nk;
    auto* cmd_netkat =
        app.add_subcommand("netkat", "ProbNetKAT Kleene-star queries");
    cmd_netkat->add_option("--program", nk.program, "Program text or @file")
        ->required();
    cmd_netkat->add_option("--level", nk.level, "History truncation level");
    cmd_netkat->add_option("--input", nk.input, "Input history, e.g. (0)");
    cmd_netkat->add_option("--query", nk.queries,
                           "member:(bits) or superset-all-level (repeatable)");
    cmd_netkat->add_option("--mc", nk.mc,
                           "Monte Carlo cross-check: samples,horizon,seed");
    cmd_netkat->add_option("--state-budget", nk.state_budget, "Chain budget");
    cmd_netkat->add_option("--pair-budget", nk.pair_budget,
                           "Pair-chain budget");

    uint64_t st_seed = 20240101;
    int st_cases = 200;
    auto* cmd_selftest =
        app.add_subcommand("selftest", "Run the invariant suites");
    cmd_selftest->add_option("--seed", st_seed, "Base seed");
    cmd_selftest->add_option("--cases", st_cases, "Cases per suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (cmd_bayes->parsed()) return run_bayes(bayes);
        if (cmd_dagger->parsed()) return run_dagger(dagger_input);
        if (cmd_converge->parsed()) return run_converge(conv);
        if (cmd_netkat->parsed()) return run_netkat(nk);
        if (cmd_selftest->parsed()) return run_selftest(st_seed, st_cases);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const krn::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const krn::StateBudgetExceeded& e) {
        std::cerr << "error: " << e.what() << " (consider --mc)\n";
        return kExitNumeric;
    } catch (const krn::PairBudgetExceeded& e) {
        std::cerr << "error: " << e.what() << " (consider --mc)\n";
        return kExitNumeric;
    } catch (const krn::TailMassTooLarge& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const krn::QuadratureFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const krn::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const krn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
