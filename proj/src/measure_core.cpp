#include "krn/measure_core.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace krn {

namespace {

constexpr double kExactTol = 1e-12;
constexpr double kRenormTol = 1e-9;

void check_finite(const Vec& v, const char* what) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v(i)))
            throw InvalidArgument(std::string(what) + ": non-finite entry");
    }
}

}  // namespace

MeasuredSpace::MeasuredSpace(std::vector<std::string> labels, Vec mu)
    : labels_(std::move(labels)), mu_(std::move(mu)) {
    if (static_cast<Eigen::Index>(labels_.size()) != mu_.size())
        throw InvalidArgument("MeasuredSpace: label/weight size mismatch");
    if (mu_.size() == 0) throw InvalidArgument("MeasuredSpace: empty space");
    check_finite(mu_, "MeasuredSpace weights");
    if (mu_.minCoeff() < 0.0)
        throw InvalidArgument("MeasuredSpace: negative weight");
    std::set<std::string> seen(labels_.begin(), labels_.end());
    if (seen.size() != labels_.size())
        throw InvalidArgument("MeasuredSpace: duplicate labels");
    const double total = mu_.sum();
    if (std::abs(total - 1.0) > kRenormTol)
        throw InvalidArgument("MeasuredSpace: weights sum to " +
                              std::to_string(total));
    if (total != 1.0) mu_ /= total;
}

MeasuredSpace MeasuredSpace::uniform(std::vector<std::string> labels) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    return MeasuredSpace(std::move(labels), Vec::Constant(n, 1.0 / double(n)));
}

bool MeasuredSpace::same_as(const MeasuredSpace& other, double tol) const {
    if (labels_ != other.labels_) return false;
    return (mu_ - other.mu_).cwiseAbs().maxCoeff() <= tol;
}

MeasuredSpace product_space(const MeasuredSpace& x, const MeasuredSpace& y) {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(x.size() * y.size()));
    Vec mu(x.size() * y.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        for (Eigen::Index l = 0; l < y.size(); ++l) {
            labels.push_back("(" + x.labels()[k] + "," + y.labels()[l] + ")");
            mu(k * y.size() + l) = x.mu(k) * y.mu(l);
        }
    }
    return MeasuredSpace(std::move(labels), std::move(mu));
}

KernelMorphism::KernelMorphism(MeasuredSpace source,
                               std::vector<std::string> target_labels,
                               Mat matrix)
    : source_(std::move(source)),
      target_(MeasuredSpace({"tmp"}, Vec::Ones(1))),  // replaced below
      matrix_(std::move(matrix)) {
    if (matrix_.rows() != source_.size())
        throw InvalidArgument("KernelMorphism: row count != source size");
    if (matrix_.cols() != static_cast<Eigen::Index>(target_labels.size()))
        throw InvalidArgument("KernelMorphism: column count != target size");
    for (Eigen::Index k = 0; k < matrix_.rows(); ++k) {
        for (Eigen::Index l = 0; l < matrix_.cols(); ++l) {
            const double v = matrix_(k, l);
            if (!std::isfinite(v) || v < 0.0)
                throw InvalidArgument("KernelMorphism: bad matrix entry");
        }
        const double s = matrix_.row(k).sum();
        if (std::abs(s - 1.0) > kRenormTol)
            throw InvalidArgument("KernelMorphism: row " + std::to_string(k) +
                                  " sums to " + std::to_string(s));
        if (s != 1.0) matrix_.row(k) /= s;
    }
    Vec nu = matrix_.transpose() * source_.mu();
    target_ = MeasuredSpace(std::move(target_labels), std::move(nu));
}

KernelMorphism KernelMorphism::identity(const MeasuredSpace& x) {
    return KernelMorphism(x, x.labels(), Mat::Identity(x.size(), x.size()));
}

KernelMorphism KernelMorphism::constant(const MeasuredSpace& source,
                                        const MeasuredSpace& target) {
    Mat m(source.size(), target.size());
    m.rowwise() = target.mu().transpose();
    return KernelMorphism(source, target.labels(), std::move(m));
}

KernelMorphism compose(const KernelMorphism& f, const KernelMorphism& g) {
    if (!f.target().same_as(g.source()))
        throw SpaceMismatch("compose: f.target differs from g.source");
    return KernelMorphism(f.source(), g.target().labels(),
                          f.matrix() * g.matrix());
}

KernelMorphism tensor(const KernelMorphism& f, const KernelMorphism& g) {
    const MeasuredSpace src = product_space(f.source(), g.source());
    const MeasuredSpace tgt = product_space(f.target(), g.target());
    Mat m(src.size(), tgt.size());
    const auto ns = g.source().size();
    const auto nt = g.target().size();
    for (Eigen::Index k = 0; k < f.source().size(); ++k)
        for (Eigen::Index kp = 0; kp < ns; ++kp)
            for (Eigen::Index l = 0; l < f.target().size(); ++l)
                for (Eigen::Index lp = 0; lp < nt; ++lp)
                    m(k * ns + kp, l * nt + lp) =
                        f.matrix()(k, l) * g.matrix()(kp, lp);
    return KernelMorphism(src, tgt.labels(), std::move(m));
}

FiniteMeasureVector coupling(const KernelMorphism& f) {
    Vec gamma(f.source().size() * f.target().size());
    for (Eigen::Index k = 0; k < f.source().size(); ++k)
        for (Eigen::Index l = 0; l < f.target().size(); ++l)
            gamma(k * f.target().size() + l) = f.source().mu(k) * f.matrix()(k, l);
    return FiniteMeasureVector{std::move(gamma)};
}

KernelMorphism dagger(const KernelMorphism& f) {
    const Vec& mu = f.source().mu();
    const Vec& nu = f.target().mu();
    Mat adj(f.target().size(), f.source().size());
    for (Eigen::Index l = 0; l < f.target().size(); ++l) {
        if (nu(l) <= kExactTol) {
            adj.row(l) = mu.transpose();  // nu-null cell convention
        } else {
            for (Eigen::Index k = 0; k < f.source().size(); ++k)
                adj(l, k) = mu(k) * f.matrix()(k, l) / nu(l);
        }
    }
    return KernelMorphism(f.target(), f.source().labels(), std::move(adj));
}

Predicate predicate_transform(const KernelMorphism& f, const Predicate& phi) {
    if (phi.values.size() != f.target().size())
        throw IndexMismatch("predicate_transform: predicate not on target");
    check_finite(phi.values, "Predicate");
    return Predicate{f.matrix() * phi.values};
}

namespace {

void check_abscont(const Vec& rho, const MeasuredSpace& space,
                   const char* where) {
    if (rho.size() != space.size())
        throw IndexMismatch(std::string(where) + ": measure not on the space");
    for (Eigen::Index k = 0; k < rho.size(); ++k) {
        if (!std::isfinite(rho(k)) || rho(k) < 0.0)
            throw InvalidArgument(std::string(where) + ": bad measure entry");
        if (space.mu(k) <= kExactTol && rho(k) > kExactTol)
            throw AbsoluteContinuityViolation(
                std::string(where) + ": mass on a mu-null cell " +
                space.labels()[static_cast<std::size_t>(k)]);
    }
}

}  // namespace

FiniteMeasureVector state_transform(const KernelMorphism& f,
                                    const FiniteMeasureVector& rho) {
    check_abscont(rho.values, f.source(), "state_transform");
    return FiniteMeasureVector{f.matrix().transpose() * rho.values};
}

DensityVector rn_derivative(const FiniteMeasureVector& rho,
                            const MeasuredSpace& space) {
    check_abscont(rho.values, space, "rn_derivative");
    Vec d = Vec::Zero(space.size());
    for (Eigen::Index k = 0; k < space.size(); ++k)
        if (space.mu(k) > 0.0) d(k) = rho.values(k) / space.mu(k);
    return DensityVector{std::move(d)};
}

FiniteMeasureVector mr(const DensityVector& density,
                       const MeasuredSpace& space) {
    if (density.values.size() != space.size())
        throw IndexMismatch("mr: density not on the space");
    return FiniteMeasureVector{density.values.cwiseProduct(space.mu())};
}

double lp_norm(const Predicate& phi, const MeasuredSpace& space, double p) {
    if (phi.values.size() != space.size())
        throw IndexMismatch("lp_norm: predicate not on the space");
    if (std::isinf(p)) {
        double m = 0.0;
        for (Eigen::Index k = 0; k < space.size(); ++k)
            if (space.mu(k) > 0.0) m = std::max(m, std::abs(phi.values(k)));
        return m;
    }
    if (p != 1.0 && p != 2.0)
        throw InvalidArgument("lp_norm: p must be 1, 2 or infinity");
    double s = 0.0;
    for (Eigen::Index k = 0; k < space.size(); ++k)
        s += space.mu(k) * std::pow(std::abs(phi.values(k)), p);
    return std::pow(s, 1.0 / p);
}

bool kernels_equal_ae(const KernelMorphism& f, const KernelMorphism& g,
                      double tol) {
    if (!f.source().same_as(g.source()) || !f.target().same_as(g.target()))
        throw SpaceMismatch("kernels_equal_ae: spaces differ");
    for (Eigen::Index k = 0; k < f.source().size(); ++k) {
        if (f.source().mu(k) <= tol) continue;
        if ((f.matrix().row(k) - g.matrix().row(k)).cwiseAbs().maxCoeff() > tol)
            return false;
    }
    return true;
}

std::pair<double, double> change_of_variables_check(const KernelMorphism& f,
                                                    const Predicate& phi) {
    const double lhs = f.target().mu().dot(phi.values);
    const double rhs = f.source().mu().dot(predicate_transform(f, phi).values);
    return {lhs, rhs};
}

}  // namespace krn
