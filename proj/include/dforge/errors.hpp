#ifndef DFORGE_ERRORS_HPP
#define DFORGE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dforge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure tied to a byte offset of some input text.
class PositionedError : public Error {
public:
    PositionedError(std::size_t position, const std::string& what)
        : Error(what), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class IllegalCharacter : public PositionedError {
public:
    explicit IllegalCharacter(std::size_t position)
        : PositionedError(position, "illegal character at offset " + std::to_string(position)) {}
};

class ParseError : public PositionedError {
public:
    ParseError(std::size_t position, std::string expected)
        : PositionedError(position, "expected " + expected + " at offset " + std::to_string(position)),
          expected_(std::move(expected)) {}
    const std::string& expected() const noexcept { return expected_; }

private:
    std::string expected_;
};

class UnknownLevel : public Error {
public:
    explicit UnknownLevel(std::string label)
        : Error("unknown atomic level '" + label + "'"), label_(std::move(label)) {}
    const std::string& label() const noexcept { return label_; }

private:
    std::string label_;
};

class MissingKey : public Error {
public:
    explicit MissingKey(std::string key) : Error("missing key '" + key + "'"), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class UnboundParameter : public Error {
public:
    explicit UnboundParameter(std::string symbol)
        : Error("unbound parameter '" + symbol + "'"), symbol_(std::move(symbol)) {}
    const std::string& symbol() const noexcept { return symbol_; }

private:
    std::string symbol_;
};

class NonPositiveTruncation : public Error {
public:
    NonPositiveTruncation() : Error("n_max must be a positive integer") {}
};

class ResidualCoupling : public Error {
public:
    explicit ResidualCoupling(std::string level)
        : Error("off-diagonal terms still couple to level '" + level + "'"), level_(std::move(level)) {}
    const std::string& level() const noexcept { return level_; }

private:
    std::string level_;
};

class FockOverflow : public Error {
public:
    FockOverflow(int n, int n_max)
        : Error("Fock index " + std::to_string(n) + " exceeds n_max = " + std::to_string(n_max)) {}
};

/// Invalid channel specification (empty, complex coupling, distinct detunings, ...).
class SpecError : public Error {
public:
    using Error::Error;
};

class StepTooLarge : public Error {
public:
    StepTooLarge(double step, double limit)
        : Error("step " + std::to_string(step) + " exceeds detuning-resolving limit " +
                std::to_string(limit)) {}
};

class NotHermitian : public Error {
public:
    explicit NotHermitian(double defect)
        : Error("operator is not Hermitian (defect " + std::to_string(defect) + ")") {}
};

class GridMismatch : public Error {
public:
    GridMismatch() : Error("trajectories do not share a time grid") {}
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

}  // namespace dforge

#endif  // DFORGE_ERRORS_HPP
