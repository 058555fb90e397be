#ifndef DFORGE_TESTS_TEST_SUPPORT_HPP
#define DFORGE_TESTS_TEST_SUPPORT_HPP

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dforge/dforge.hpp"

namespace dforge::testing {

inline const std::vector<std::string> kLevels{"g", "r", "e"};

/// Random canonical expression: 1..max_terms monomials, boson degree <= max_degree.
inline OperatorExpr random_expr(std::mt19937& rng, int max_terms = 3, int max_degree = 3) {
    std::uniform_int_distribution<int> nterms(1, max_terms);
    std::uniform_int_distribution<int> small(-3, 3);
    std::uniform_int_distribution<int> level(0, 2);
    std::uniform_int_distribution<int> coin(0, 3);
    OperatorExpr out;
    const int n = nterms(rng);
    for (int k = 0; k < n; ++k) {
        int v = small(rng);
        if (v == 0) v = 1;
        Signature sig;
        sig.imaginary = coin(rng) == 0 ? 1 : 0;
        if (coin(rng) < 2) sig.numerator.push_back(coin(rng) < 2 ? "x" : "y");
        if (coin(rng) == 0) sig.denominator.push_back("z");
        const Coefficient c(Rational(v, coin(rng) == 0 ? 2 : 1), sig);
        const AtomOp atom = coin(rng) == 0
                                ? AtomOp::unit()
                                : AtomOp::transition(kLevels[level(rng)], kLevels[level(rng)]);
        std::uniform_int_distribution<int> deg(0, max_degree);
        const int total = deg(rng);
        std::uniform_int_distribution<int> split(0, total);
        const int creators = split(rng);
        out.add_term({c, atom, {creators, total - creators}});
    }
    return out;
}

inline ParamMap random_symbol_values() { return {{"x", 0.7}, {"y", -1.3}, {"z", 2.1}}; }

/// Independent dense oracle: truncated ladder matrix with <n-1|a|n> = sqrt(n).
inline Eigen::MatrixXcd ladder(int n_max) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
    Eigen::MatrixXcd out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    }
    return out;
}

/// |i><j| on the three-level atom in (g, r, e) order.
inline Eigen::MatrixXcd atom(const std::string& i, const std::string& j) {
    auto idx = [](const std::string& l) { return l == "g" ? 0 : l == "r" ? 1 : 2; };
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3, 3);
    m(idx(i), idx(j)) = 1.0;
    return m;
}

/// Columns whose Fock index is at most `keep`.
inline Eigen::MatrixXcd buffered_columns(const Eigen::MatrixXcd& m, const SpaceSpec& space, int keep) {
    const int fd = space.fock_dim();
    const int nl = static_cast<int>(space.levels().size());
    Eigen::MatrixXcd out(m.rows(), nl * (keep + 1));
    int c = 0;
    for (int l = 0; l < nl; ++l) {
        for (int n = 0; n <= keep; ++n) out.col(c++) = m.col(l * fd + n);
    }
    return out;
}

inline double max_abs_diff(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
    return (x - y).cwiseAbs().maxCoeff();
}

/// Channels of the one-/two-photon competing model.
inline ChannelSpec three_channel_spec() {
    return ChannelSpec({{Coefficient::symbol("g1"), parse_operator_expr("sig(g,r)*ad")},
                        {Coefficient::symbol("g2"), parse_operator_expr("sig(e,r)*a")},
                        {Coefficient::symbol("Omega"), parse_operator_expr("sig(g,r)")}},
                       "delta");
}

/// The projected effective Hamiltonian written term by term.
inline const char* kThreeChannelEffective =
    "g1*g1/delta*ad*a*sig(g,g) + g2*g2/delta*a*ad*sig(e,e) + Omega*Omega/delta*sig(g,g)"
    " + Omega*g2/delta*(sig(g,e)*ad + a*sig(e,g))"
    " + g1*g2/delta*(sig(g,e)*ad*ad + a*a*sig(e,g))"
    " + Omega*g1/delta*(ad + a)*sig(g,g)";

/// Two-level Rabi oracle for H = [[e1, c], [c, e2]] starting in state 1:
/// P_1(t) = 1 - 4c^2/(D^2 + 4c^2) sin^2(sqrt(D^2 + 4c^2) t / 2), D = e1 - e2.
inline double rabi_p1(double e1, double e2, double c, double t) {
    const double d = e1 - e2;
    const double w = std::sqrt(d * d + 4.0 * c * c);
    const double s = std::sin(0.5 * w * t);
    return 1.0 - 4.0 * c * c / (w * w) * s * s;
}

inline std::string source_path(const std::string& rel) { return std::string(DFORGE_SOURCE_DIR) + "/" + rel; }

}  // namespace dforge::testing

#endif  // DFORGE_TESTS_TEST_SUPPORT_HPP
