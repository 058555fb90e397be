#ifndef DFORGE_OPERATOR_EXPR_HPP
#define DFORGE_OPERATOR_EXPR_HPP

#include <compare>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dforge/coefficient.hpp"

namespace dforge {

/// Atomic part of a monomial: the identity or a transition |row><col|.
struct AtomOp {
    bool identity = true;
    std::string row;
    std::string col;

    static AtomOp unit() { return {}; }
    static AtomOp transition(std::string i, std::string j) { return {false, std::move(i), std::move(j)}; }

    bool is_diagonal() const noexcept { return identity || row == col; }
    bool references(const std::string& level) const noexcept { return !identity && (row == level || col == level); }
    AtomOp adjoint() const { return identity ? *this : transition(col, row); }

    // identity sorts first, then transitions by (row, col)
    friend std::strong_ordering operator<=>(const AtomOp& x, const AtomOp& y) {
        if (x.identity != y.identity) return x.identity ? std::strong_ordering::less : std::strong_ordering::greater;
        if (auto c = x.row <=> y.row; c != 0) return c;
        return x.col <=> y.col;
    }
    friend bool operator==(const AtomOp&, const AtomOp&) = default;
};

/// Normal-ordered boson string a†^creators a^annihilators.
struct BosonString {
    int creators = 0;
    int annihilators = 0;

    int degree() const noexcept { return creators + annihilators; }

    friend std::strong_ordering operator<=>(const BosonString& x, const BosonString& y) {
        if (auto c = x.degree() <=> y.degree(); c != 0) return c;
        return x.creators <=> y.creators;
    }
    friend bool operator==(const BosonString&, const BosonString&) = default;
};

struct Monomial {
    Coefficient coeff;
    AtomOp atom;
    BosonString boson;
};

/// Canonical sum of monomials. Terms are keyed by (atom, boson, symbol
/// signature) and stored in that order; rational weights are never zero.
///
/// Canonical form is unique modulo the completeness relation
/// sum_i sigma_ii = 1, which would need the declared level set to apply.
class OperatorExpr {
public:
    struct Key {
        AtomOp atom;
        BosonString boson;
        Signature sig;
        friend auto operator<=>(const Key&, const Key&) = default;
        friend bool operator==(const Key&, const Key&) = default;
    };

    OperatorExpr() = default;
    explicit OperatorExpr(const Monomial& m) { add_term(m); }

    static OperatorExpr zero() { return {}; }
    static OperatorExpr scalar(const Coefficient& c) { return OperatorExpr(Monomial{c, AtomOp::unit(), {}}); }
    static OperatorExpr identity() { return scalar(Coefficient(1)); }
    static OperatorExpr sigma(const std::string& i, const std::string& j) {
        return OperatorExpr(Monomial{Coefficient(1), AtomOp::transition(i, j), {}});
    }
    static OperatorExpr annihilator() { return OperatorExpr(Monomial{Coefficient(1), AtomOp::unit(), {0, 1}}); }
    static OperatorExpr creator() { return OperatorExpr(Monomial{Coefficient(1), AtomOp::unit(), {1, 0}}); }

    void add_term(const Monomial& m) {
        if (m.coeff.is_zero()) return;
        Key key{m.atom, m.boson, m.coeff.signature()};
        auto [it, inserted] = terms_.try_emplace(std::move(key), m.coeff.value());
        if (!inserted) {
            it->second += m.coeff.value();
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    std::vector<Monomial> terms() const {
        std::vector<Monomial> out;
        out.reserve(terms_.size());
        for (const auto& [key, value] : terms_) out.push_back({Coefficient(value, key.sig), key.atom, key.boson});
        return out;
    }

    std::size_t size() const noexcept { return terms_.size(); }
    bool is_zero() const noexcept { return terms_.empty(); }

    int max_boson_degree() const noexcept {
        int d = 0;
        for (const auto& [key, value] : terms_) d = std::max(d, key.boson.degree());
        return d;
    }
    int max_creators() const noexcept {
        int d = 0;
        for (const auto& [key, value] : terms_) d = std::max(d, key.boson.creators);
        return d;
    }

    std::set<std::string> levels() const {
        std::set<std::string> out;
        for (const auto& [key, value] : terms_) {
            if (!key.atom.identity) { out.insert(key.atom.row); out.insert(key.atom.col); }
        }
        return out;
    }
    std::set<std::string> symbols() const {
        std::set<std::string> out;
        for (const auto& [key, value] : terms_) {
            out.insert(key.sig.numerator.begin(), key.sig.numerator.end());
            out.insert(key.sig.denominator.begin(), key.sig.denominator.end());
        }
        return out;
    }

    OperatorExpr& operator+=(const OperatorExpr& y) {
        for (const auto& [key, value] : y.terms_) add_term({Coefficient(value, key.sig), key.atom, key.boson});
        return *this;
    }
    OperatorExpr& operator-=(const OperatorExpr& y) {
        for (const auto& [key, value] : y.terms_) add_term({Coefficient(-value, key.sig), key.atom, key.boson});
        return *this;
    }
    friend OperatorExpr operator+(OperatorExpr x, const OperatorExpr& y) { return x += y; }
    friend OperatorExpr operator-(OperatorExpr x, const OperatorExpr& y) { return x -= y; }
    friend OperatorExpr operator*(const OperatorExpr& x, const OperatorExpr& y);
    friend OperatorExpr operator*(const Coefficient& c, const OperatorExpr& x) {
        OperatorExpr out;
        if (c.is_zero()) return out;
        for (const auto& m : x.terms()) out.add_term({c * m.coeff, m.atom, m.boson});
        return out;
    }

    friend bool operator==(const OperatorExpr&, const OperatorExpr&) = default;

private:
    std::map<Key, Rational> terms_;
};

namespace detail {

inline std::int64_t binomial(int n, int k) {
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

inline std::int64_t factorial(int n) {
    std::int64_t r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

/// sigma_ij sigma_kl = delta_jk sigma_il; returns false when the product vanishes.
inline bool multiply_atoms(const AtomOp& x, const AtomOp& y, AtomOp& out) {
    if (x.identity) { out = y; return true; }
    if (y.identity) { out = x; return true; }
    if (x.col != y.row) return false;
    out = AtomOp::transition(x.row, y.col);
    return true;
}

}  // namespace detail

inline OperatorExpr operator*(const OperatorExpr& x, const OperatorExpr& y) {
    OperatorExpr out;
    for (const auto& [kx, vx] : x.terms_) {
        for (const auto& [ky, vy] : y.terms_) {
            AtomOp atom;
            if (!detail::multiply_atoms(kx.atom, ky.atom, atom)) continue;
            const Coefficient c = Coefficient(vx, kx.sig) * Coefficient(vy, ky.sig);
            // a†^m a^n a†^p a^q = sum_k C(n,k) C(p,k) k! a†^(m+p-k) a^(n+q-k)
            const int m = kx.boson.creators, n = kx.boson.annihilators;
            const int p = ky.boson.creators, q = ky.boson.annihilators;
            for (int k = 0; k <= std::min(n, p); ++k) {
                const std::int64_t w = detail::binomial(n, k) * detail::binomial(p, k) * detail::factorial(k);
                out.add_term({Coefficient(Rational(w)) * c, atom, {m + p - k, n + q - k}});
            }
        }
    }
    return out;
}

inline OperatorExpr multiply(const OperatorExpr& x, const OperatorExpr& y) { return x * y; }
inline OperatorExpr add(const OperatorExpr& x, const OperatorExpr& y) { return x + y; }
inline OperatorExpr scale(const OperatorExpr& x, const Coefficient& c) { return c * x; }
inline bool equal(const OperatorExpr& x, const OperatorExpr& y) { return x == y; }

inline OperatorExpr adjoint(const OperatorExpr& x) {
    OperatorExpr out;
    for (const auto& m : x.terms()) {
        out.add_term({m.coeff.conj(), m.atom.adjoint(), {m.boson.annihilators, m.boson.creators}});
    }
    return out;
}

inline OperatorExpr commutator(const OperatorExpr& x, const OperatorExpr& y) { return x * y - y * x; }

/// Drops every sigma_rr monomial. Throws ResidualCoupling when a
/// transition into or out of `level` survives.
inline OperatorExpr project_out_level(const OperatorExpr& x, const std::string& level) {
    OperatorExpr out;
    for (const auto& m : x.terms()) {
        if (!m.atom.references(level)) {
            out.add_term(m);
        } else if (m.atom.row != m.atom.col) {
            throw ResidualCoupling(level);
        }
    }
    return out;
}

namespace detail {

inline std::vector<std::string> coefficient_factors(const Coefficient& c) {
    std::vector<std::string> factors;
    bool last_divisible = false;
    const Rational v = c.value();
    const std::int64_t num = v.num() < 0 ? -v.num() : v.num();
    if (v.den() != 1) {
        factors.push_back(std::to_string(num) + "/" + std::to_string(v.den()));
    } else if (num != 1) {
        factors.push_back(std::to_string(num));
        last_divisible = true;
    }
    const auto& sig = c.signature();
    if (sig.imaginary) { factors.push_back("i"); last_divisible = true; }
    for (const auto& s : sig.numerator) { factors.push_back(s); last_divisible = true; }
    for (const auto& d : sig.denominator) {
        if (last_divisible) {
            factors.back() += "/" + d;
            last_divisible = false;
        } else {
            factors.push_back("1/" + d);
        }
    }
    return factors;
}

}  // namespace detail

/// Text form accepted back by parse_operator_expr.
inline std::string to_string(const Monomial& m, bool with_sign = true) {
    std::vector<std::string> factors = detail::coefficient_factors(m.coeff);
    if (!m.atom.identity) factors.push_back("sig(" + m.atom.row + "," + m.atom.col + ")");
    for (int k = 0; k < m.boson.creators; ++k) factors.push_back("ad");
    for (int k = 0; k < m.boson.annihilators; ++k) factors.push_back("a");
    std::string out = (with_sign && m.coeff.value().num() < 0) ? "-" : "";
    if (factors.empty()) return out + "1";
    for (std::size_t k = 0; k < factors.size(); ++k) {
        if (k) out += "*";
        out += factors[k];
    }
    return out;
}

inline std::string to_string(const OperatorExpr& x) {
    if (x.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (const auto& m : x.terms()) {
        const bool negative = m.coeff.value().num() < 0;
        if (first) {
            out += negative ? "-" : "";
        } else {
            out += negative ? " - " : " + ";
        }
        out += to_string(m, false);
        first = false;
    }
    return out;
}

}  // namespace dforge

#endif  // DFORGE_OPERATOR_EXPR_HPP
