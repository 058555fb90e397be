#ifndef DFORGE_COEFFICIENT_HPP
#define DFORGE_COEFFICIENT_HPP

#include <algorithm>
#include <compare>
#include <complex>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "dforge/errors.hpp"

namespace dforge {

using ParamMap = std::map<std::string, double>;

/// Exact rational with 64-bit parts; arithmetic throws on overflow.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1) : num_(num), den_(den) {  // NOLINT
        if (den_ == 0) throw Error("rational with zero denominator");
        normalize();
    }

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }
    bool is_zero() const noexcept { return num_ == 0; }
    double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend Rational operator+(const Rational& x, const Rational& y) {
        const std::int64_t g = std::gcd(x.den_, y.den_);
        return from_wide(static_cast<__int128>(x.num_) * (y.den_ / g) +
                             static_cast<__int128>(y.num_) * (x.den_ / g),
                         static_cast<__int128>(x.den_ / g) * y.den_);
    }
    friend Rational operator-(const Rational& x) { return Rational(checked(-static_cast<__int128>(x.num_)), x.den_); }
    friend Rational operator-(const Rational& x, const Rational& y) { return x + (-y); }
    friend Rational operator*(const Rational& x, const Rational& y) {
        return from_wide(static_cast<__int128>(x.num_) * y.num_, static_cast<__int128>(x.den_) * y.den_);
    }
    friend Rational operator/(const Rational& x, const Rational& y) {
        if (y.num_ == 0) throw Error("rational division by zero");
        return from_wide(static_cast<__int128>(x.num_) * y.den_, static_cast<__int128>(x.den_) * y.num_);
    }
    Rational& operator+=(const Rational& y) { return *this = *this + y; }
    Rational& operator*=(const Rational& y) { return *this = *this * y; }

    friend bool operator==(const Rational&, const Rational&) = default;
    friend std::strong_ordering operator<=>(const Rational& x, const Rational& y) {
        return static_cast<__int128>(x.num_) * y.den_ <=> static_cast<__int128>(y.num_) * x.den_;
    }

    std::string to_string() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    static std::int64_t checked(__int128 v) {
        if (v > INT64_MAX || v < -INT64_MAX) throw Error("rational coefficient overflow");
        return static_cast<std::int64_t>(v);
    }
    static Rational from_wide(__int128 num, __int128 den) {
        if (den < 0) { num = -num; den = -den; }
        __int128 a = num < 0 ? -num : num, b = den;
        while (b != 0) { const __int128 t = a % b; a = b; b = t; }
        if (a > 1) { num /= a; den /= a; }
        return Rational(checked(num), checked(den));
    }
    void normalize() {
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        const std::int64_t g = std::gcd(num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
        if (num_ == 0) den_ = 1;
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// The non-rational part of a coefficient: a power of i and a ratio of
/// parameter-symbol products. Two monomials are like terms iff their
/// signatures (and operator parts) agree.
struct Signature {
    int imaginary = 0;                  // 0 or 1; i^2 is folded into the rational
    std::vector<std::string> numerator;  // sorted multiset
    std::vector<std::string> denominator;

    friend auto operator<=>(const Signature&, const Signature&) = default;
    friend bool operator==(const Signature&, const Signature&) = default;
};

/// rational * i^k * (product of numerator symbols) / (product of denominator symbols)
class Coefficient {
public:
    Coefficient() = default;
    Coefficient(Rational value) : value_(value) {}  // NOLINT
    Coefficient(std::int64_t value) : value_(value) {}  // NOLINT
    Coefficient(Rational value, Signature sig) : value_(value), sig_(std::move(sig)) { canonicalize(); }

    static Coefficient symbol(const std::string& name) { return Coefficient(Rational(1), Signature{0, {name}, {}}); }
    static Coefficient inverse_symbol(const std::string& name) {
        return Coefficient(Rational(1), Signature{0, {}, {name}});
    }
    static Coefficient imaginary_unit() { return Coefficient(Rational(1), Signature{1, {}, {}}); }

    const Rational& value() const noexcept { return value_; }
    const Signature& signature() const noexcept { return sig_; }
    bool is_zero() const noexcept { return value_.is_zero(); }
    bool is_real() const noexcept { return sig_.imaginary == 0; }
    bool is_one() const noexcept { return value_ == Rational(1) && sig_ == Signature{}; }

    /// Imaginary power modulo 4 (0..3).
    int imaginary_power() const noexcept {
        return sig_.imaginary + (value_.num() < 0 ? 2 : 0);
    }

    Coefficient conj() const {
        if (sig_.imaginary == 0) return *this;
        return Coefficient(-value_, sig_);
    }

    friend Coefficient operator*(const Coefficient& x, const Coefficient& y) {
        Signature s;
        Rational v = x.value_ * y.value_;
        s.imaginary = x.sig_.imaginary + y.sig_.imaginary;
        if (s.imaginary == 2) { s.imaginary = 0; v = -v; }
        s.numerator = merged(x.sig_.numerator, y.sig_.numerator);
        s.denominator = merged(x.sig_.denominator, y.sig_.denominator);
        return Coefficient(v, std::move(s));
    }
    friend Coefficient operator/(const Coefficient& x, const Coefficient& y) { return x * y.reciprocal(); }
    friend Coefficient operator-(const Coefficient& x) { return Coefficient(-x.value_, x.sig_); }

    Coefficient reciprocal() const {
        Signature s{sig_.imaginary, sig_.denominator, sig_.numerator};
        Rational v = Rational(1) / value_;
        if (s.imaginary == 1) v = -v;  // 1/i = -i
        return Coefficient(v, std::move(s));
    }

    friend bool operator==(const Coefficient&, const Coefficient&) = default;

    std::complex<double> evaluate(const ParamMap& params) const {
        double magnitude = value_.to_double();
        for (const auto& s : sig_.numerator) magnitude *= lookup(params, s);
        for (const auto& s : sig_.denominator) magnitude /= lookup(params, s);
        return sig_.imaginary ? std::complex<double>(0.0, magnitude) : std::complex<double>(magnitude, 0.0);
    }

    /// Every symbol referenced, with repetition removed.
    std::vector<std::string> symbols() const {
        std::vector<std::string> out = sig_.numerator;
        out.insert(out.end(), sig_.denominator.begin(), sig_.denominator.end());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    static double lookup(const ParamMap& params, const std::string& s) {
        auto it = params.find(s);
        if (it == params.end()) throw UnboundParameter(s);
        return it->second;
    }
    static std::vector<std::string> merged(const std::vector<std::string>& a, const std::vector<std::string>& b) {
        std::vector<std::string> out;
        out.reserve(a.size() + b.size());
        std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
        return out;
    }
    void canonicalize() {
        std::sort(sig_.numerator.begin(), sig_.numerator.end());
        std::sort(sig_.denominator.begin(), sig_.denominator.end());
        std::vector<std::string> num, den;
        std::set_difference(sig_.numerator.begin(), sig_.numerator.end(), sig_.denominator.begin(),
                            sig_.denominator.end(), std::back_inserter(num));
        std::set_difference(sig_.denominator.begin(), sig_.denominator.end(), sig_.numerator.begin(),
                            sig_.numerator.end(), std::back_inserter(den));
        sig_.numerator = std::move(num);
        sig_.denominator = std::move(den);
        sig_.imaginary = ((sig_.imaginary % 4) + 4) % 4;
        if (sig_.imaginary >= 2) { value_ = -value_; sig_.imaginary -= 2; }
        if (value_.is_zero()) sig_ = Signature{};
    }

    Rational value_{0};
    Signature sig_{};
};

}  // namespace dforge

#endif  // DFORGE_COEFFICIENT_HPP
