#ifndef DFORGE_FOCK_HPP
#define DFORGE_FOCK_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dforge/errors.hpp"
#include "dforge/operator_expr.hpp"

namespace dforge {

using Complex = std::complex<double>;

/// Truncated atom (x) Fock space. Basis index = level_index * (n_max + 1) + n.
class SpaceSpec {
public:
    SpaceSpec(std::vector<std::string> levels, int n_max) : levels_(std::move(levels)), n_max_(n_max) {
        if (n_max_ < 1) throw NonPositiveTruncation();
        if (levels_.size() < 2) throw SpecError("at least two atomic levels are required");
    }

    const std::vector<std::string>& levels() const noexcept { return levels_; }
    int n_max() const noexcept { return n_max_; }
    int fock_dim() const noexcept { return n_max_ + 1; }
    int dim() const noexcept { return static_cast<int>(levels_.size()) * fock_dim(); }

    int level_index(const std::string& label) const {
        auto it = std::find(levels_.begin(), levels_.end(), label);
        if (it == levels_.end()) throw UnknownLevel(label);
        return static_cast<int>(it - levels_.begin());
    }
    int index(const std::string& level, int n) const {
        if (n < 0 || n > n_max_) throw FockOverflow(n, n_max_);
        return level_index(level) * fock_dim() + n;
    }

    friend bool operator==(const SpaceSpec&, const SpaceSpec&) = default;

private:
    std::vector<std::string> levels_;
    int n_max_;
};

struct DenseOperator {
    SpaceSpec space;
    Eigen::MatrixXcd matrix;

    int dim() const { return static_cast<int>(matrix.rows()); }
};

struct StateVector {
    SpaceSpec space;
    Eigen::VectorXcd amplitudes;
    /// Probability mass discarded by Fock truncation before renormalization.
    double tail_mass = 0.0;

    int dim() const { return static_cast<int>(amplitudes.size()); }
};

namespace detail {

/// <k| a†^m a^n |l> with the hard cutoff a†|n_max> = 0.
inline Eigen::MatrixXd boson_matrix(const BosonString& b, int n_max) {
    const int d = n_max + 1;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
    for (int l = b.annihilators; l <= n_max; ++l) {
        const int mid = l - b.annihilators;
        const int k = mid + b.creators;
        if (k > n_max) continue;
        double v = 1.0;
        for (int j = mid + 1; j <= l; ++j) v *= std::sqrt(static_cast<double>(j));
        for (int j = mid + 1; j <= k; ++j) v *= std::sqrt(static_cast<double>(j));
        out(k, l) = v;
    }
    return out;
}

}  // namespace detail

inline DenseOperator realize(const OperatorExpr& x, const SpaceSpec& space, const ParamMap& params) {
    const int fd = space.fock_dim();
    const int nl = static_cast<int>(space.levels().size());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(space.dim(), space.dim());
    for (const auto& term : x.terms()) {
        const Complex c = term.coeff.evaluate(params);
        const Eigen::MatrixXcd block = c * detail::boson_matrix(term.boson, space.n_max()).cast<Complex>();
        if (term.atom.identity) {
            for (int l = 0; l < nl; ++l) m.block(l * fd, l * fd, fd, fd) += block;
        } else {
            const int i = space.level_index(term.atom.row);
            const int j = space.level_index(term.atom.col);
            m.block(i * fd, j * fd, fd, fd) += block;
        }
    }
    return {space, std::move(m)};
}

/// Initial-state descriptor: basis state (level, n) or coherent state (level, alpha).
struct StateDescriptor {
    std::string level;
    bool coherent = false;
    int n = 0;
    double alpha = 0.0;

    friend bool operator==(const StateDescriptor&, const StateDescriptor&) = default;
};

inline StateVector build_state(const StateDescriptor& desc, const SpaceSpec& space) {
    StateVector psi{space, Eigen::VectorXcd::Zero(space.dim()), 0.0};
    if (!desc.coherent) {
        psi.amplitudes(space.index(desc.level, desc.n)) = 1.0;
        return psi;
    }
    const int base = space.index(desc.level, 0);
    // c_n = e^{-|alpha|^2/2} alpha^n / sqrt(n!)
    double c = std::exp(-0.5 * desc.alpha * desc.alpha);
    double kept = 0.0;
    for (int n = 0; n <= space.n_max(); ++n) {
        if (n > 0) c *= desc.alpha / std::sqrt(static_cast<double>(n));
        psi.amplitudes(base + n) = c;
        kept += c * c;
    }
    psi.tail_mass = std::max(0.0, 1.0 - kept);
    psi.amplitudes /= psi.amplitudes.norm();
    return psi;
}

inline double hermiticity_defect(const Eigen::MatrixXcd& m) {
    if (m.size() == 0) return 0.0;
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}
inline double hermiticity_defect(const DenseOperator& op) { return hermiticity_defect(op.matrix); }

/// Largest singular value.
inline double opnorm(const Eigen::MatrixXcd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues()(0);
}
inline double opnorm(const DenseOperator& op) { return opnorm(op.matrix); }

}  // namespace dforge

#endif  // DFORGE_FOCK_HPP
