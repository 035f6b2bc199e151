#include "krn/probnetkat.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <random>
#include <sstream>

namespace krn::netkat {

std::string History::to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (i) s += ",";
        s += bits[i] ? "1" : "0";
    }
    return s + ")";
}

History History::parse(const std::string& text) {
    std::string t = text;
    if (t.size() >= 2 && t.front() == '(' && t.back() == ')')
        t = t.substr(1, t.size() - 2);
    History h;
    std::istringstream in(t);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
        if (tok == "0")
            h.bits.push_back(0);
        else if (tok == "1")
            h.bits.push_back(1);
        else
            throw InvalidArgument("History::parse: bad bit '" + tok + "' in '" +
                                  text + "'");
    }
    if (h.bits.empty())
        throw InvalidArgument("History::parse: empty history '" + text + "'");
    return h;
}

std::string PacketSet::to_string() const {
    std::string s = "{";
    bool first = true;
    for (const auto& h : histories) {
        if (!first) s += ",";
        first = false;
        s += h.to_string();
    }
    return s + "}";
}

PacketSet PacketSet::singleton(History h) {
    PacketSet s;
    s.histories.insert(std::move(h));
    return s;
}

bool Program::contains_star() const {
    if (kind == Kind::Star) return true;
    if (left && left->contains_star()) return true;
    return right && right->contains_star();
}

std::string Program::to_string() const {
    switch (kind) {
        case Kind::Assign0: return "p0!";
        case Kind::Assign1: return "p1!";
        case Kind::Dup: return "dup";
        case Kind::Seq: return left->to_string() + ";" + right->to_string();
        case Kind::Choice: {
            std::ostringstream os;
            os << "(" << left->to_string() << " +[" << lambda << "] "
               << right->to_string() << ")";
            return os.str();
        }
        case Kind::Star: return "(" + left->to_string() + ")*";
    }
    return "?";
}

namespace {

struct Parser {
    const std::string& text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
    }

    bool eat(const std::string& tok) {
        skip_ws();
        if (text.compare(pos, tok.size(), tok) == 0) {
            pos += tok.size();
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& expected) {
        throw ParseError("expected " + expected, pos);
    }

    ProgramPtr make(Program::Kind k, ProgramPtr l = nullptr,
                    ProgramPtr r = nullptr, double lam = 0.0) {
        auto p = std::make_shared<Program>();
        p->kind = k;
        p->left = std::move(l);
        p->right = std::move(r);
        p->lambda = lam;
        return p;
    }

    ProgramPtr parse_primary() {
        if (eat("p0!")) return make(Program::Kind::Assign0);
        if (eat("p1!")) return make(Program::Kind::Assign1);
        if (eat("dup")) return make(Program::Kind::Dup);
        if (eat("(")) {
            ProgramPtr inner = parse_choice();
            if (!eat(")")) fail("')'");
            if (eat("*")) {
                if (inner->contains_star())
                    throw ParseError("nested star is not supported", pos);
                return make(Program::Kind::Star, std::move(inner));
            }
            return inner;
        }
        fail("one of p0!, p1!, dup, '('");
    }

    ProgramPtr parse_seq() {
        ProgramPtr left = parse_primary();
        while (eat(";"))
            left = make(Program::Kind::Seq, std::move(left), parse_primary());
        return left;
    }

    double parse_lambda() {
        skip_ws();
        char* end = nullptr;
        const double v = std::strtod(text.c_str() + pos, &end);
        if (end == text.c_str() + pos) fail("a probability");
        pos = static_cast<std::size_t>(end - text.c_str());
        if (!(v >= 0.0 && v <= 1.0))
            throw ParseError("probability out of [0,1]", pos);
        return v;
    }

    ProgramPtr parse_choice() {
        ProgramPtr left = parse_seq();
        while (eat("+[")) {
            const double lam = parse_lambda();
            if (!eat("]")) fail("']'");
            left = make(Program::Kind::Choice, std::move(left), parse_seq(), lam);
        }
        return left;
    }
};

void check_level(const PacketSet& s, int n, const char* where) {
    if (n < 1) throw InvalidArgument(std::string(where) + ": level < 1");
    for (const auto& h : s.histories)
        if (h.bits.empty() || static_cast<int>(h.bits.size()) > n)
            throw InvalidArgument(std::string(where) +
                                  ": history violates truncation level");
}

}  // namespace

ProgramPtr parse_program(const std::string& text) {
    Parser p{text};
    ProgramPtr prog = p.parse_choice();
    p.skip_ws();
    if (p.pos != text.size())
        throw ParseError("unexpected trailing input", p.pos);
    return prog;
}

PacketSet apply_primitive(Program::Kind kind, const PacketSet& s, int n) {
    check_level(s, n, "apply_primitive");
    PacketSet out;
    for (const auto& h : s.histories) {
        History g = h;
        switch (kind) {
            case Program::Kind::Assign0: g.bits[0] = 0; break;
            case Program::Kind::Assign1: g.bits[0] = 1; break;
            case Program::Kind::Dup:
                g.bits.insert(g.bits.begin(), g.bits[0]);
                if (static_cast<int>(g.bits.size()) > n)
                    g.bits.resize(static_cast<std::size_t>(n));
                break;
            default:
                throw InvalidArgument("apply_primitive: not a primitive");
        }
        out.histories.insert(std::move(g));
    }
    return out;
}

Distribution step_distribution(const ProgramPtr& prog, const PacketSet& s,
                               int n) {
    switch (prog->kind) {
        case Program::Kind::Assign0:
        case Program::Kind::Assign1:
        case Program::Kind::Dup:
            return {{apply_primitive(prog->kind, s, n), 1.0}};
        case Program::Kind::Choice: {
            Distribution d;
            for (auto& [t, p] : step_distribution(prog->left, s, n))
                d[t] += prog->lambda * p;
            for (auto& [t, p] : step_distribution(prog->right, s, n))
                d[t] += (1.0 - prog->lambda) * p;
            return d;
        }
        case Program::Kind::Seq: {
            Distribution d;
            for (auto& [mid, p1] : step_distribution(prog->left, s, n))
                for (auto& [t, p2] : step_distribution(prog->right, mid, n))
                    d[t] += p1 * p2;
            return d;
        }
        case Program::Kind::Star:
            throw StarNotAllowed("step_distribution: star-free program required");
    }
    throw InvalidArgument("step_distribution: bad AST node");
}

ReachableChain build_chain(const ProgramPtr& body,
                           const std::vector<PacketSet>& seeds, int n,
                           long state_budget) {
    if (state_budget < 1)
        throw InvalidArgument("build_chain: state_budget < 1");
    ReachableChain chain;
    std::deque<int> queue;
    auto intern = [&](const PacketSet& s) {
        auto it = chain.index.find(s);
        if (it != chain.index.end()) return it->second;
        if (static_cast<long>(chain.states.size()) >= state_budget)
            throw StateBudgetExceeded(
                "build_chain: state budget " + std::to_string(state_budget) +
                " exceeded", static_cast<long>(chain.states.size()) + 1);
        const int id = static_cast<int>(chain.states.size());
        chain.states.push_back(s);
        chain.index.emplace(s, id);
        queue.push_back(id);
        return id;
    };
    for (const auto& s : seeds) {
        check_level(s, n, "build_chain");
        chain.initial.push_back(intern(s));
    }
    while (!queue.empty()) {
        const int id = queue.front();
        queue.pop_front();
        const Distribution d = step_distribution(body, chain.states[static_cast<std::size_t>(id)], n);
        std::vector<std::pair<int, double>> row;
        row.reserve(d.size());
        for (const auto& [t, p] : d) row.emplace_back(intern(t), p);
        if (static_cast<std::size_t>(id) >= chain.transitions.size())
            chain.transitions.resize(static_cast<std::size_t>(id) + 1);
        chain.transitions[static_cast<std::size_t>(id)] = std::move(row);
    }
    chain.transitions.resize(chain.states.size());
    return chain;
}

ReachableChain build_chain(const ProgramPtr& body, const PacketSet& initial,
                           int n, long state_budget) {
    return build_chain(body, std::vector<PacketSet>{initial}, n, state_budget);
}

ReachableChain::SccInfo ReachableChain::scc() const {
    // Iterative Tarjan.
    const int n = static_cast<int>(states.size());
    SccInfo info;
    info.scc_of.assign(static_cast<std::size_t>(n), -1);
    std::vector<int> low(static_cast<std::size_t>(n), -1),
        idx(static_cast<std::size_t>(n), -1);
    std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
    std::vector<int> stack;
    int counter = 0;

    struct Frame {
        int v;
        std::size_t edge;
    };
    for (int root = 0; root < n; ++root) {
        if (idx[static_cast<std::size_t>(root)] != -1) continue;
        std::vector<Frame> call{{root, 0}};
        idx[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = counter++;
        stack.push_back(root);
        on_stack[static_cast<std::size_t>(root)] = true;
        while (!call.empty()) {
            auto& fr = call.back();
            const auto& edges = transitions[static_cast<std::size_t>(fr.v)];
            if (fr.edge < edges.size()) {
                const int w = edges[fr.edge++].first;
                if (idx[static_cast<std::size_t>(w)] == -1) {
                    idx[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] = counter++;
                    stack.push_back(w);
                    on_stack[static_cast<std::size_t>(w)] = true;
                    call.push_back({w, 0});
                } else if (on_stack[static_cast<std::size_t>(w)]) {
                    low[static_cast<std::size_t>(fr.v)] =
                        std::min(low[static_cast<std::size_t>(fr.v)],
                                 idx[static_cast<std::size_t>(w)]);
                }
            } else {
                if (low[static_cast<std::size_t>(fr.v)] ==
                    idx[static_cast<std::size_t>(fr.v)]) {
                    const int scc_id = static_cast<int>(info.sccs.size());
                    info.sccs.emplace_back();
                    int w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        on_stack[static_cast<std::size_t>(w)] = false;
                        info.scc_of[static_cast<std::size_t>(w)] = scc_id;
                        info.sccs.back().push_back(w);
                    } while (w != fr.v);
                }
                const int v = fr.v;
                call.pop_back();
                if (!call.empty())
                    low[static_cast<std::size_t>(call.back().v)] =
                        std::min(low[static_cast<std::size_t>(call.back().v)],
                                 low[static_cast<std::size_t>(v)]);
            }
        }
    }
    // An SCC is bottom iff no edge leaves it.
    std::vector<bool> scc_bottom(info.sccs.size(), true);
    for (int v = 0; v < n; ++v)
        for (const auto& [w, p] : transitions[static_cast<std::size_t>(v)])
            if (info.scc_of[static_cast<std::size_t>(v)] !=
                info.scc_of[static_cast<std::size_t>(w)])
                scc_bottom[static_cast<std::size_t>(
                    info.scc_of[static_cast<std::size_t>(v)])] = false;
    info.bottom.resize(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v)
        info.bottom[static_cast<std::size_t>(v)] =
            scc_bottom[static_cast<std::size_t>(info.scc_of[static_cast<std::size_t>(v)])];
    return info;
}

namespace {

constexpr double kResidualTol = 1e-12;

std::vector<PacketSet> seed_states(const InitialDistribution& initial) {
    if (initial.empty())
        throw InvalidArgument("star_eval: empty initial distribution");
    std::vector<PacketSet> seeds;
    for (const auto& [s, p] : initial) {
        if (p < 0.0) throw InvalidArgument("star_eval: negative probability");
        seeds.push_back(s);
    }
    return seeds;
}

PacketSet set_union(const PacketSet& a, const PacketSet& b) {
    PacketSet u = a;
    u.histories.insert(b.histories.begin(), b.histories.end());
    return u;
}

// Union of all member states of each bottom SCC (the histories a path keeps
// visiting forever once absorbed).
std::vector<PacketSet> scc_unions(const ReachableChain& chain,
                                  const ReachableChain::SccInfo& info) {
    std::vector<PacketSet> unions(info.sccs.size());
    for (std::size_t c = 0; c < info.sccs.size(); ++c)
        for (int v : info.sccs[c])
            unions[c] = set_union(unions[c], chain.states[static_cast<std::size_t>(v)]);
    return unions;
}

}  // namespace

StarResult star_eval(const ProgramPtr& body, const InitialDistribution& initial,
                     int n, const StarBudgets& budgets) {
    if (body->contains_star())
        throw StarNotAllowed("star_eval: body must be star-free");
    const ReachableChain chain =
        build_chain(body, seed_states(initial), n, budgets.state_budget);
    const auto info = chain.scc();
    const auto unions = scc_unions(chain, info);

    std::map<std::pair<int, PacketSet>, double> current;
    std::map<PacketSet, double> absorbed;
    auto absorb = [&](int state, const PacketSet& u, double mass) {
        const int c = info.scc_of[static_cast<std::size_t>(state)];
        absorbed[set_union(u, unions[static_cast<std::size_t>(c)])] += mass;
    };
    for (const auto& [s, p] : initial) {
        const int id = chain.index.at(s);
        if (info.bottom[static_cast<std::size_t>(id)])
            absorb(id, s, p);
        else
            current[{id, s}] += p;
    }

    double residual = 1.0;
    while (!current.empty()) {
        residual = 0.0;
        for (const auto& [key, mass] : current) residual += mass;
        if (residual < kResidualTol) break;
        std::map<std::pair<int, PacketSet>, double> next;
        for (const auto& [key, mass] : current) {
            const auto& [state, u] = key;
            for (const auto& [succ, p] :
                 chain.transitions[static_cast<std::size_t>(state)]) {
                const PacketSet u2 =
                    set_union(u, chain.states[static_cast<std::size_t>(succ)]);
                if (info.bottom[static_cast<std::size_t>(succ)])
                    absorb(succ, u2, mass * p);
                else
                    next[{succ, u2}] += mass * p;
            }
        }
        if (static_cast<long>(next.size()) > budgets.pair_budget)
            throw PairBudgetExceeded(
                "star_eval: pair budget exceeded; use monte_carlo_star",
                static_cast<long>(next.size()));
        current = std::move(next);
    }

    StarResult result;
    result.level = n;
    for (auto& [u, p] : absorbed) result.union_support.emplace_back(u, p);
    return result;
}

double prob_member(const StarResult& result, const History& h) {
    double p = 0.0;
    for (const auto& [u, q] : result.union_support)
        if (u.histories.count(h)) p += q;
    return p;
}

double prob_superset(const StarResult& result, const PacketSet& s) {
    double p = 0.0;
    for (const auto& [u, q] : result.union_support) {
        if (std::includes(u.histories.begin(), u.histories.end(),
                          s.histories.begin(), s.histories.end()))
            p += q;
    }
    return p;
}

double prob_member_hitting(const ProgramPtr& body,
                           const InitialDistribution& initial, int n,
                           const History& h, const StarBudgets& budgets) {
    const ReachableChain chain =
        build_chain(body, seed_states(initial), n, budgets.state_budget);
    const auto info = chain.scc();
    const auto unions = scc_unions(chain, info);
    const int ns = static_cast<int>(chain.states.size());

    // Target states: h already present, or bottom SCC whose closure contains h.
    std::vector<int> kind(static_cast<std::size_t>(ns), 0);  // 0 unknown, 1 hit, -1 never
    for (int v = 0; v < ns; ++v) {
        if (chain.states[static_cast<std::size_t>(v)].histories.count(h))
            kind[static_cast<std::size_t>(v)] = 1;
        else if (info.bottom[static_cast<std::size_t>(v)])
            kind[static_cast<std::size_t>(v)] =
                unions[static_cast<std::size_t>(
                           info.scc_of[static_cast<std::size_t>(v)])]
                        .histories.count(h)
                    ? 1
                    : -1;
    }
    std::vector<int> unknowns, slot(static_cast<std::size_t>(ns), -1);
    for (int v = 0; v < ns; ++v)
        if (kind[static_cast<std::size_t>(v)] == 0) {
            slot[static_cast<std::size_t>(v)] = static_cast<int>(unknowns.size());
            unknowns.push_back(v);
        }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(ns);
    for (int v = 0; v < ns; ++v)
        if (kind[static_cast<std::size_t>(v)] == 1) x(v) = 1.0;
    if (!unknowns.empty()) {
        const auto m = static_cast<Eigen::Index>(unknowns.size());
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (const auto& [w, p] :
                 chain.transitions[static_cast<std::size_t>(
                     unknowns[static_cast<std::size_t>(i)])]) {
                if (kind[static_cast<std::size_t>(w)] == 1)
                    b(i) += p;
                else if (kind[static_cast<std::size_t>(w)] == 0)
                    a(i, slot[static_cast<std::size_t>(w)]) -= p;
            }
        }
        const Eigen::VectorXd sol = a.partialPivLu().solve(b);
        for (Eigen::Index i = 0; i < m; ++i)
            x(unknowns[static_cast<std::size_t>(i)]) = sol(i);
    }
    double result = 0.0;
    for (const auto& [s, p] : initial) result += p * x(chain.index.at(s));
    return result;
}

StarResult monte_carlo_star(const ProgramPtr& body,
                            const InitialDistribution& initial, int n,
                            long samples, int horizon, uint64_t seed) {
    if (samples < 1 || horizon < 1)
        throw InvalidArgument("monte_carlo_star: samples and horizon must be >= 1");
    const ReachableChain chain =
        build_chain(body, seed_states(initial), n, 1000000);
    const auto info = chain.scc();
    const auto unions = scc_unions(chain, info);

    std::mt19937_64 rng(seed);
    auto uniform = [&rng]() {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    std::map<PacketSet, long> counts;
    for (long i = 0; i < samples; ++i) {
        // Draw the initial state.
        double u = uniform();
        int state = chain.index.at(initial.back().first);
        for (const auto& [s, p] : initial) {
            if (u < p) {
                state = chain.index.at(s);
                break;
            }
            u -= p;
        }
        PacketSet acc = chain.states[static_cast<std::size_t>(state)];
        for (int t = 0; t < horizon &&
                        !info.bottom[static_cast<std::size_t>(state)];
             ++t) {
            double v = uniform();
            const auto& row = chain.transitions[static_cast<std::size_t>(state)];
            int next = row.back().first;
            for (const auto& [w, p] : row) {
                if (v < p) {
                    next = w;
                    break;
                }
                v -= p;
            }
            state = next;
            acc = set_union(acc, chain.states[static_cast<std::size_t>(state)]);
        }
        if (info.bottom[static_cast<std::size_t>(state)])
            acc = set_union(acc, unions[static_cast<std::size_t>(
                                     info.scc_of[static_cast<std::size_t>(state)])]);
        ++counts[acc];
    }
    StarResult result;
    result.level = n;
    for (const auto& [s, c] : counts)
        result.union_support.emplace_back(
            s, static_cast<double>(c) / static_cast<double>(samples));
    return result;
}

std::pair<ProgramPtr, ProgramPtr> split_prefix_star(const ProgramPtr& prog) {
    std::vector<ProgramPtr> parts;
    std::function<void(const ProgramPtr&)> flatten = [&](const ProgramPtr& p) {
        if (p->kind == Program::Kind::Seq) {
            flatten(p->left);
            flatten(p->right);
        } else {
            parts.push_back(p);
        }
    };
    flatten(prog);
    if (parts.empty() || parts.back()->kind != Program::Kind::Star)
        throw InvalidArgument(
            "program must have the shape <star-free prefix>;(<body>)*");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i)
        if (parts[i]->contains_star())
            throw InvalidArgument("only the final factor may be starred");
    ProgramPtr prefix;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!prefix) {
            prefix = parts[i];
        } else {
            auto seq = std::make_shared<Program>();
            seq->kind = Program::Kind::Seq;
            seq->left = prefix;
            seq->right = parts[i];
            prefix = seq;
        }
    }
    return {prefix, parts.back()->left};
}

}  // namespace krn::netkat
