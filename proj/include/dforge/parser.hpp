#ifndef DFORGE_PARSER_HPP
#define DFORGE_PARSER_HPP

// Operator-expression language:
//
//   expr     := ["-"] term (("+" | "-") term)*
//   term     := factor ("*" factor)*
//   factor   := coeff | operator | "(" expr ")"
//   operator := "a" | "ad" | "sig" "(" level "," level ")"
//   coeff    := number ["/" (number | ident)] | ident ["/" ident] | "i" ["/" ident]
//   level    := ident naming a declared atomic level
//
// "i" is the imaginary unit. Numbers are decimal literals (optional
// fraction and exponent) and are converted to exact rationals.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dforge/errors.hpp"
#include "dforge/operator_expr.hpp"

namespace dforge {

enum class TokenKind { number, ident, sigma_head, ladder, punct };

struct Token {
    TokenKind kind;
    std::string lexeme;
    std::size_t position;

    friend bool operator==(const Token&, const Token&) = default;
};

namespace detail {

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
inline bool digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace detail

inline std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char c = text[pos];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++pos;
        } else if (detail::ident_start(c)) {
            std::size_t end = pos + 1;
            while (end < text.size() && detail::ident_char(text[end])) ++end;
            std::string lexeme(text.substr(pos, end - pos));
            TokenKind kind = TokenKind::ident;
            if (lexeme == "a" || lexeme == "ad") kind = TokenKind::ladder;
            else if (lexeme == "sig") kind = TokenKind::sigma_head;
            tokens.push_back({kind, std::move(lexeme), pos});
            pos = end;
        } else if (detail::digit(c) || (c == '.' && pos + 1 < text.size() && detail::digit(text[pos + 1]))) {
            std::size_t end = pos;
            while (end < text.size() && detail::digit(text[end])) ++end;
            if (end < text.size() && text[end] == '.') {
                ++end;
                while (end < text.size() && detail::digit(text[end])) ++end;
            }
            // exponent only when digits follow, so "2*e" and "2e" stay unambiguous
            if (end < text.size() && (text[end] == 'e' || text[end] == 'E')) {
                std::size_t exp = end + 1;
                if (exp < text.size() && (text[exp] == '+' || text[exp] == '-')) ++exp;
                if (exp < text.size() && detail::digit(text[exp])) {
                    end = exp;
                    while (end < text.size() && detail::digit(text[end])) ++end;
                }
            }
            tokens.push_back({TokenKind::number, std::string(text.substr(pos, end - pos)), pos});
            pos = end;
        } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '(' || c == ')' || c == ',') {
            tokens.push_back({TokenKind::punct, std::string(1, c), pos});
            ++pos;
        } else {
            throw IllegalCharacter(pos);
        }
    }
    return tokens;
}

/// Exact rational value of a decimal literal such as "2.45e8" or "0.5".
inline Rational parse_decimal(std::string_view lexeme, std::size_t position) {
    std::int64_t mantissa = 0;
    int exponent = 0;
    std::size_t k = 0;
    bool seen_point = false;
    auto overflow = [&] { return ParseError(position, "number representable as a 64-bit rational"); };
    for (; k < lexeme.size() && lexeme[k] != 'e' && lexeme[k] != 'E'; ++k) {
        if (lexeme[k] == '.') { seen_point = true; continue; }
        if (__builtin_mul_overflow(mantissa, 10, &mantissa) ||
            __builtin_add_overflow(mantissa, lexeme[k] - '0', &mantissa)) {
            throw overflow();
        }
        if (seen_point) --exponent;
    }
    if (k < lexeme.size()) {
        int e = 0;
        const char* first = lexeme.data() + k + 1;
        if (*first == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, lexeme.data() + lexeme.size(), e);
        if (ec != std::errc()) throw overflow();
        exponent += e;
    }
    std::int64_t num = mantissa, den = 1;
    for (; exponent > 0; --exponent) {
        if (__builtin_mul_overflow(num, 10, &num)) throw overflow();
    }
    for (; exponent < 0; ++exponent) {
        if (__builtin_mul_overflow(den, 10, &den)) throw overflow();
    }
    return Rational(num, den);
}

namespace detail {

class ExprParser {
public:
    ExprParser(std::string_view text, const std::set<std::string>& levels)
        : tokens_(tokenize(text)), levels_(levels), end_(text.size()) {}

    OperatorExpr parse() {
        OperatorExpr result = expr();
        if (pos_ < tokens_.size()) throw ParseError(here(), "operator '+', '-' or '*'");
        return result;
    }

private:
    std::size_t here() const { return pos_ < tokens_.size() ? tokens_[pos_].position : end_; }
    const Token* peek() const { return pos_ < tokens_.size() ? &tokens_[pos_] : nullptr; }
    bool at_punct(char c) const {
        const Token* t = peek();
        return t && t->kind == TokenKind::punct && t->lexeme[0] == c;
    }
    void expect_punct(char c) {
        if (!at_punct(c)) throw ParseError(here(), std::string("'") + c + "'");
        ++pos_;
    }

    OperatorExpr expr() {
        bool negate = false;
        if (at_punct('-')) { negate = true; ++pos_; }
        OperatorExpr result = term();
        if (negate) result = Coefficient(-1) * result;
        while (at_punct('+') || at_punct('-')) {
            const bool minus = at_punct('-');
            ++pos_;
            OperatorExpr rhs = term();
            if (minus) result -= rhs; else result += rhs;
        }
        return result;
    }

    OperatorExpr term() {
        OperatorExpr result = factor();
        while (at_punct('*')) {
            ++pos_;
            result = result * factor();
        }
        return result;
    }

    OperatorExpr factor() {
        const Token* t = peek();
        if (!t) throw ParseError(end_, "factor");
        switch (t->kind) {
            case TokenKind::punct:
                if (t->lexeme == "(") {
                    ++pos_;
                    OperatorExpr inner = expr();
                    expect_punct(')');
                    return inner;
                }
                throw ParseError(t->position, "factor");
            case TokenKind::ladder:
                ++pos_;
                return t->lexeme == "a" ? OperatorExpr::annihilator() : OperatorExpr::creator();
            case TokenKind::sigma_head: {
                ++pos_;
                expect_punct('(');
                const std::string i = level();
                expect_punct(',');
                const std::string j = level();
                expect_punct(')');
                return OperatorExpr::sigma(i, j);
            }
            case TokenKind::number: {
                ++pos_;
                Coefficient c(parse_decimal(t->lexeme, t->position));
                if (at_punct('/')) {
                    ++pos_;
                    const Token* d = peek();
                    if (d && d->kind == TokenKind::number) {
                        ++pos_;
                        const Rational den = parse_decimal(d->lexeme, d->position);
                        if (den.is_zero()) throw ParseError(d->position, "non-zero divisor");
                        c = Coefficient(c.value() / den);
                    } else {
                        c = c * Coefficient::inverse_symbol(divisor_symbol());
                    }
                }
                return OperatorExpr::scalar(c);
            }
            case TokenKind::ident: {
                ++pos_;
                Coefficient c = t->lexeme == "i" ? Coefficient::imaginary_unit() : Coefficient::symbol(t->lexeme);
                if (at_punct('/')) {
                    ++pos_;
                    c = c * Coefficient::inverse_symbol(divisor_symbol());
                }
                return OperatorExpr::scalar(c);
            }
        }
        throw ParseError(t->position, "factor");
    }

    std::string divisor_symbol() {
        const Token* d = peek();
        if (!d || d->kind != TokenKind::ident || d->lexeme == "i") throw ParseError(here(), "parameter symbol");
        ++pos_;
        return d->lexeme;
    }

    std::string level() {
        const Token* t = peek();
        if (!t || t->kind != TokenKind::ident) throw ParseError(here(), "level label");
        if (!levels_.contains(t->lexeme)) throw UnknownLevel(t->lexeme);
        ++pos_;
        return t->lexeme;
    }

    std::vector<Token> tokens_;
    const std::set<std::string>& levels_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline const std::set<std::string>& default_levels() {
    static const std::set<std::string> levels{"g", "r", "e"};
    return levels;
}

inline OperatorExpr parse_operator_expr(std::string_view text,
                                        const std::set<std::string>& declared_levels = default_levels()) {
    return detail::ExprParser(text, declared_levels).parse();
}

}  // namespace dforge

#endif  // DFORGE_PARSER_HPP
