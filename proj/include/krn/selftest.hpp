#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "krn/discretize.hpp"
#include "krn/measure_core.hpp"

namespace krn::selftest {

/// Seeded generators for random finite instances.
MeasuredSpace random_space(std::mt19937_64& rng, int min_size, int max_size,
                           bool strictly_positive = true);
KernelMorphism random_kernel(std::mt19937_64& rng, const MeasuredSpace& source,
                             int target_size);
/// Endo-kernel: same labels on both sides.
KernelMorphism random_endo_kernel(std::mt19937_64& rng,
                                  const MeasuredSpace& space);
Predicate random_predicate(std::mt19937_64& rng, Eigen::Index size);
FiniteMeasureVector random_subordinate_measure(std::mt19937_64& rng,
                                               const MeasuredSpace& space);
FiniteQuotient random_quotient(std::mt19937_64& rng,
                               const MeasuredSpace& space, int target_size);

struct SuiteResult {
    std::string name;
    int cases = 0;
    int failures = 0;
    std::string first_failure;  // empty when clean

    bool ok() const { return failures == 0; }
};

/// Dagger algebra: involution, identity, contravariance, tensor exchange,
/// adjointness over all cell-set pairs (sizes <= 4), coupling marginals.
SuiteResult run_dagger_suite(uint64_t seed, int cases);

/// Approximation laws: endo fibre-average identity, inversion/approximation
/// commutation, non-expansiveness, hemi-bisimulation laws, idempotence.
SuiteResult run_approximation_suite(uint64_t seed, int cases);

/// Radon-Nikodym naturality, mr/rn inverse pair, change of variables.
SuiteResult run_naturality_suite(uint64_t seed, int cases);

/// ProbNetKAT: fair-coin trace reference values, hitting-solve agreement,
/// of the uniform distribution on the ergodic class.
SuiteResult run_netkat_suite();

std::vector<SuiteResult> run_all(uint64_t seed, int cases);

}  // namespace krn::selftest
