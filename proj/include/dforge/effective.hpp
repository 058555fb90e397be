#ifndef DFORGE_EFFECTIVE_HPP
#define DFORGE_EFFECTIVE_HPP

#include <cmath>
#include <string>
#include <vector>

#include "dforge/errors.hpp"
#include "dforge/fock.hpp"
#include "dforge/operator_expr.hpp"

namespace dforge {

/// One coupling channel lambda (A e^{i delta t} + A† e^{-i delta t}).
struct Channel {
    Coefficient lambda;
    OperatorExpr op;
};

/// Channels sharing a common detuning symbol.
class ChannelSpec {
public:
    ChannelSpec(std::vector<Channel> channels, std::string delta)
        : channels_(std::move(channels)), delta_(std::move(delta)) {
        validate();
    }

    /// Accepts per-channel detuning symbols but only when they all coincide.
    static ChannelSpec with_detunings(std::vector<Channel> channels, const std::vector<std::string>& detunings) {
        if (detunings.empty()) throw SpecError("at least one channel is required");
        for (const auto& d : detunings) {
            if (d != detunings.front()) {
                throw SpecError("common detuning required: channels use both '" + detunings.front() + "' and '" + d +
                                "'");
            }
        }
        return ChannelSpec(std::move(channels), detunings.front());
    }

    const std::vector<Channel>& channels() const noexcept { return channels_; }
    const std::string& delta() const noexcept { return delta_; }

private:
    void validate() const {
        if (channels_.empty()) throw SpecError("at least one channel is required");
        for (const auto& ch : channels_) {
            if (!ch.lambda.is_real()) throw SpecError("channel couplings must be real");
            if (ch.lambda.is_zero()) throw SpecError("channel coupling is identically zero");
            if (ch.op.is_zero()) throw SpecError("channel operator is zero");
            for (const auto& s : ch.lambda.symbols()) {
                if (s == delta_) throw SpecError("detuning symbol '" + delta_ + "' reused as a coupling");
            }
        }
    }

    std::vector<Channel> channels_;
    std::string delta_;
};

/// Second-order generator at common detuning:
///   H = sum_{j,k} (lambda_j lambda_k / delta) [A_j, A_k†]
/// The j == k terms carry the Stark shifts, j != k the channel cross-couplings.
inline OperatorExpr effective_hamiltonian(const ChannelSpec& spec) {
    const Coefficient inv_delta = Coefficient::inverse_symbol(spec.delta());
    std::vector<OperatorExpr> daggers;
    daggers.reserve(spec.channels().size());
    for (const auto& ch : spec.channels()) daggers.push_back(adjoint(ch.op));

    OperatorExpr h;
    for (std::size_t j = 0; j < spec.channels().size(); ++j) {
        const auto& cj = spec.channels()[j];
        for (std::size_t k = 0; k < spec.channels().size(); ++k) {
            const auto& ck = spec.channels()[k];
            h += (cj.lambda * ck.lambda * inv_delta) * commutator(cj.op, daggers[k]);
        }
    }
    return h;
}

/// Operator-norm bound on the neglected first-order Dyson term:
/// sum_k 2 |lambda_k / delta| ||A_k||.
inline double first_order_remainder_bound(const ChannelSpec& spec, const ParamMap& params, const SpaceSpec& space) {
    const double delta = std::abs(Coefficient::symbol(spec.delta()).evaluate(params).real());
    if (delta == 0.0) throw SpecError("detuning must be non-zero");
    double bound = 0.0;
    for (const auto& ch : spec.channels()) {
        const double lambda = std::abs(ch.lambda.evaluate(params).real());
        if (lambda == 0.0) continue;
        bound += 2.0 * lambda / delta * opnorm(realize(ch.op, space, ParamMap{}));
    }
    return bound;
}

struct Decomposition {
    OperatorExpr stark;
    OperatorExpr one_photon;
    OperatorExpr two_photon;
    OperatorExpr displacement;
    OperatorExpr other;

    OperatorExpr sum() const { return stark + one_photon + two_photon + displacement + other; }
};

/// Splits monomials by shape relative to the (ground, excited) pair.
inline Decomposition decompose(const OperatorExpr& h, const std::string& ground = "g",
                               const std::string& excited = "e") {
    Decomposition parts;
    const AtomOp lower = AtomOp::transition(ground, excited);   // sigma_- = sigma_ge
    const AtomOp raise = AtomOp::transition(excited, ground);  // sigma_+ = sigma_eg
    for (const auto& m : h.terms()) {
        const BosonString b = m.boson;
        OperatorExpr* bucket = &parts.other;
        if (m.atom.is_diagonal()) {
            if (b == BosonString{0, 0} || b == BosonString{1, 1}) bucket = &parts.stark;
            else if (b == BosonString{1, 0} || b == BosonString{0, 1}) bucket = &parts.displacement;
        } else if ((m.atom == raise && b == BosonString{0, 1}) || (m.atom == lower && b == BosonString{1, 0})) {
            bucket = &parts.one_photon;
        } else if ((m.atom == raise && b == BosonString{0, 2}) || (m.atom == lower && b == BosonString{2, 0})) {
            bucket = &parts.two_photon;
        }
        bucket->add_term(m);
    }
    return parts;
}

}  // namespace dforge

#endif  // DFORGE_EFFECTIVE_HPP
