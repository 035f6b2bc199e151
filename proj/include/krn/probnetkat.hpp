#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "krn/errors.hpp"

namespace krn::netkat {

/// A packet history: a non-empty bit sequence, most recent entry first.
struct History {
    std::vector<uint8_t> bits;

    auto operator<=>(const History&) const = default;

    std::string to_string() const;        // "(b0,b1,...,bk)"
    static History parse(const std::string& text);
};

/// A program state: a finite set of histories.
struct PacketSet {
    std::set<History> histories;

    auto operator<=>(const PacketSet&) const = default;

    std::string to_string() const;
    static PacketSet singleton(History h);
};

struct Program;
using ProgramPtr = std::shared_ptr<const Program>;

struct Program {
    enum class Kind { Assign0, Assign1, Dup, Seq, Choice, Star };

    Kind kind;
    double lambda = 0.0;        // Choice only
    ProgramPtr left, right;     // Seq/Choice children; Star body in left

    bool contains_star() const;
    std::string to_string() const;
};

/// Grammar: `p0!` | `p1!` | `dup` | `<p>;<p>` | `<p> +[<float>] <p>` |
/// `(<p>)*` | `(<p>)`. `;` is left-associative and binds tighter than
/// `+[lambda]`; nested stars are rejected.
ProgramPtr parse_program(const std::string& text);

/// Direct image of an assignment or dup on a packet set, truncated at level n.
PacketSet apply_primitive(Program::Kind kind, const PacketSet& s, int n);

using Distribution = std::map<PacketSet, double>;

/// One-step output distribution of a star-free program.
Distribution step_distribution(const ProgramPtr& prog, const PacketSet& s,
                               int n);

struct ReachableChain {
    std::vector<PacketSet> states;
    std::vector<std::vector<std::pair<int, double>>> transitions;
    std::vector<int> initial;             // indices of the seed states
    std::map<PacketSet, int> index;

    /// SCC ids in reverse topological order of the condensation and, for each
    /// state, whether its SCC is bottom (no edge leaves it).
    struct SccInfo {
        std::vector<int> scc_of;
        std::vector<bool> bottom;            // per state
        std::vector<std::vector<int>> sccs;  // members per SCC id
    };
    SccInfo scc() const;
};

/// Breadth-first closure of step_distribution from one seed state.
ReachableChain build_chain(const ProgramPtr& body, const PacketSet& initial,
                           int n, long state_budget);

/// As build_chain, seeded with every state in the support of a distribution.
ReachableChain build_chain(const ProgramPtr& body,
                           const std::vector<PacketSet>& seeds, int n,
                           long state_budget);

struct StarBudgets {
    long state_budget = 100000;
    long pair_budget = 1000000;
};

/// Distribution of the union of all states visited by the iterated kernel.
struct StarResult {
    std::vector<std::pair<PacketSet, double>> union_support;
    int level = 0;
};

using InitialDistribution = std::vector<std::pair<PacketSet, double>>;

/// Exact path-union distribution: pair-chain enumeration over (state,
/// accumulated union) with ergodic completion on entering a bottom SCC.
/// The initial state itself is part of the union.
StarResult star_eval(const ProgramPtr& body, const InitialDistribution& initial,
                     int n, const StarBudgets& budgets = {});

double prob_member(const StarResult& result, const History& h);
double prob_superset(const StarResult& result, const PacketSet& s);

/// Independent cross-check of prob_member: hitting probability of the
/// target states via a dense linear solve on the transient part.
double prob_member_hitting(const ProgramPtr& body,
                           const InitialDistribution& initial, int n,
                           const History& h, const StarBudgets& budgets = {});

/// Sampled path-union distribution (validation fallback). Each path runs
/// `horizon` steps and is ergodically completed at the end.
StarResult monte_carlo_star(const ProgramPtr& body,
                            const InitialDistribution& initial, int n,
                            long samples, int horizon, uint64_t seed);

/// Splits a program into (star-free prefix, star body). Supported shapes:
/// prefix;(body)*, (body)*, and trailing Seq chains thereof. The prefix may
/// be null when the program is a bare star.
std::pair<ProgramPtr, ProgramPtr> split_prefix_star(const ProgramPtr& prog);

}  // namespace krn::netkat
