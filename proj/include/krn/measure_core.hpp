#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "krn/errors.hpp"

namespace krn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A finite label set carrying a probability weight vector.
///
/// Construction renormalizes weight vectors whose sum deviates from 1 by at
/// most 1e-9 and rejects larger deviations.
class MeasuredSpace {
public:
    MeasuredSpace(std::vector<std::string> labels, Vec mu);

    static MeasuredSpace uniform(std::vector<std::string> labels);

    Eigen::Index size() const { return mu_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const Vec& mu() const { return mu_; }
    double mu(Eigen::Index k) const { return mu_(k); }

    /// Same labels, weights entrywise within tol.
    bool same_as(const MeasuredSpace& other, double tol = 1e-12) const;

private:
    std::vector<std::string> labels_;
    Vec mu_;
};

/// Product space with product weights and labels "(a,b)", row-major in the
/// first factor.
MeasuredSpace product_space(const MeasuredSpace& x, const MeasuredSpace& y);

/// A measurable function on a space, indexed by its labels.
struct Predicate {
    Vec values;
};

/// A Radon-Nikodym derivative with respect to a space's weights.
struct DensityVector {
    Vec values;
};

/// A (sub-probability allowed) measure absolutely continuous w.r.t. a
/// space's weights.
struct FiniteMeasureVector {
    Vec values;
};

/// A row-stochastic matrix between two measured spaces. The target weights
/// are always computed from the source weights and the matrix, so the
/// pushforward condition holds by construction.
class KernelMorphism {
public:
    /// Computes the target weights as mu^T * matrix. Rows whose sum deviates
    /// from 1 by more than 1e-9 are rejected; smaller deviations are
    /// renormalized.
    KernelMorphism(MeasuredSpace source, std::vector<std::string> target_labels,
                   Mat matrix);

    static KernelMorphism identity(const MeasuredSpace& x);
    /// Kernel with every row equal to target.mu.
    static KernelMorphism constant(const MeasuredSpace& source,
                                   const MeasuredSpace& target);

    const MeasuredSpace& source() const { return source_; }
    const MeasuredSpace& target() const { return target_; }
    const Mat& matrix() const { return matrix_; }

private:
    MeasuredSpace source_;
    MeasuredSpace target_;
    Mat matrix_;
};

/// Kleisli composition; finitely the matrix product.
KernelMorphism compose(const KernelMorphism& f, const KernelMorphism& g);

/// Product kernel on the product spaces.
KernelMorphism tensor(const KernelMorphism& f, const KernelMorphism& g);

/// Joint measure on source x target with marginals mu and nu.
/// Entry (k,l) of the product space is source.mu[k]*matrix[k][l].
FiniteMeasureVector coupling(const KernelMorphism& f);

/// Bayesian inversion. Rows at nu-null target cells (nu[l] <= 1e-12) are set
/// to the source weights mu.
KernelMorphism dagger(const KernelMorphism& f);

/// Backward action on predicates: result[k] = sum_l matrix[k][l]*phi[l].
Predicate predicate_transform(const KernelMorphism& f, const Predicate& phi);

/// Forward action on measures: rho * matrix. Requires rho << source.mu.
FiniteMeasureVector state_transform(const KernelMorphism& f,
                                    const FiniteMeasureVector& rho);

/// dRho/dMu, zero on mu-null cells. Requires rho << mu.
DensityVector rn_derivative(const FiniteMeasureVector& rho,
                            const MeasuredSpace& space);

/// Measure with density `density` against the space's weights.
FiniteMeasureVector mr(const DensityVector& density, const MeasuredSpace& space);

/// Weighted l^p norm; p must be 1, 2, or +infinity (essential sup).
double lp_norm(const Predicate& phi, const MeasuredSpace& space, double p);

/// Almost-everywhere equality: rows at cells with mu > tol must agree
/// entrywise within tol.
bool kernels_equal_ae(const KernelMorphism& f, const KernelMorphism& g,
                      double tol);

/// Returns (integral of phi d(nu), integral of phi.f d(mu)); the two agree
/// by the change-of-variables identity.
std::pair<double, double> change_of_variables_check(const KernelMorphism& f,
                                                    const Predicate& phi);

}  // namespace krn
