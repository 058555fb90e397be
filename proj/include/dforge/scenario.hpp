#ifndef DFORGE_SCENARIO_HPP
#define DFORGE_SCENARIO_HPP

// Scenario configuration: line-oriented "key = value" text in sections.
//
//   # comment
//   [levels]
//   g r e                      # basis order; commas or spaces, may span lines
//   [channels]
//   g1 : sig(g,r)*ad           # coupling : operator expression
//   g2 : sig(e,r)*a @ delta    # optional "@ symbol" names the channel detuning
//   [params]
//   g1 = 1                     # angular frequencies, s^-1 (hbar = 1)
//   g2 = 1
//   delta = 100                # the common detuning; required
//   [space]
//   n_max = 15
//   [state]
//   initial = e,0              # or  g,coherent(2.0)
//   [time]
//   t_end = 1000
//   samples = 201
//   dt_max = 1e-4              # optional cap on the full-propagation step
//
// [levels] is optional and defaults to "g r e". Unknown sections or keys are
// rejected. All errors that point at text carry a byte offset into the input.

#include <charconv>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dforge/dynamics.hpp"
#include "dforge/effective.hpp"
#include "dforge/errors.hpp"
#include "dforge/fock.hpp"
#include "dforge/parser.hpp"

namespace dforge {

struct ScenarioChannel {
    Coefficient lambda;
    OperatorExpr op;
    std::string detuning;  // symbol; "delta" unless overridden with "@"
    std::size_t offset = 0;
};

struct Scenario {
    std::vector<std::string> levels{"g", "r", "e"};
    std::vector<ScenarioChannel> channels;
    ParamMap params;
    std::string delta_symbol = "delta";
    int n_max = 0;
    StateDescriptor initial;
    double t_end = 0.0;
    int samples = 0;
    std::optional<double> dt_max;

    SpaceSpec space() const { return SpaceSpec(levels, n_max); }
    TimeGrid grid() const { return TimeGrid(t_end, samples); }
    std::set<std::string> level_set() const { return {levels.begin(), levels.end()}; }

    /// Throws SpecError ("common detuning required") when channels disagree on the detuning.
    ChannelSpec channel_spec() const {
        std::vector<Channel> out;
        std::vector<std::string> detunings;
        for (const auto& ch : channels) {
            out.push_back({ch.lambda, ch.op});
            detunings.push_back(ch.detuning);
        }
        ChannelSpec spec = ChannelSpec::with_detunings(std::move(out), detunings);
        if (spec.delta() != delta_symbol) {
            throw SpecError("common detuning required: channels use '" + spec.delta() + "' but the detuning is '" +
                            delta_symbol + "'");
        }
        return spec;
    }
};

namespace detail {

inline bool reserved_word(std::string_view s) { return s == "a" || s == "ad" || s == "sig" || s == "i"; }

inline bool valid_identifier(std::string_view s) {
    if (s.empty() || !ident_start(s.front())) return false;
    for (char c : s) {
        if (!ident_char(c)) return false;
    }
    return !reserved_word(s);
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

class ScenarioParser {
public:
    explicit ScenarioParser(std::string_view text) : text_(text) {}

    Scenario parse() {
        std::string section;
        std::size_t line_start = 0;
        while (line_start <= text_.size()) {
            std::size_t line_end = text_.find('\n', line_start);
            if (line_end == std::string_view::npos) line_end = text_.size();
            std::string_view line = text_.substr(line_start, line_end - line_start);
            if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            const std::string_view body = trim(line);
            const std::size_t body_offset = line_start + (body.empty() ? 0 : body.data() - line.data());
            if (!body.empty()) {
                if (body.front() == '[') {
                    if (body.back() != ']') throw ParseError(body_offset + body.size(), "']'");
                    section = std::string(trim(body.substr(1, body.size() - 2)));
                    if (!known_sections().contains(section)) throw ParseError(body_offset, "known section name");
                    if (!seen_sections_.insert(section).second) throw ParseError(body_offset, "section not repeated");
                } else if (section.empty()) {
                    throw ParseError(body_offset, "section header");
                } else {
                    line_in_section(section, body, body_offset);
                }
            }
            if (line_end == text_.size()) break;
            line_start = line_end + 1;
        }
        finish();
        return std::move(scenario_);
    }

private:
    static const std::set<std::string>& known_sections() {
        static const std::set<std::string> s{"levels", "channels", "params", "space", "state", "time"};
        return s;
    }

    void line_in_section(const std::string& section, std::string_view body, std::size_t offset) {
        if (section == "levels") return level_line(body, offset);
        if (section == "channels") return channel_line(body, offset);

        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ParseError(offset + body.size(), "'='");
        const std::string key(trim(body.substr(0, eq)));
        const std::string_view value = trim(body.substr(eq + 1));
        const std::size_t value_offset = offset + (value.empty() ? eq + 1 : value.data() - body.data());
        if (!valid_identifier(key)) throw ParseError(offset, "identifier key");
        if (value.empty()) throw ParseError(value_offset, "value");
        if (!seen_keys_.insert(section + "." + key).second) throw ParseError(offset, "key not repeated");

        if (section == "params") {
            scenario_.params[key] = parse_real(value, value_offset);
        } else if (section == "space") {
            if (key != "n_max") throw ParseError(offset, "key 'n_max'");
            const std::int64_t n = parse_integer(value, value_offset);
            if (n <= 0) throw NonPositiveTruncation();
            if (n > 100000) throw ParseError(value_offset, "n_max of reasonable size");
            scenario_.n_max = static_cast<int>(n);
        } else if (section == "state") {
            if (key != "initial") throw ParseError(offset, "key 'initial'");
            scenario_.initial = parse_state(value, value_offset);
        } else if (section == "time") {
            if (key == "t_end") {
                scenario_.t_end = parse_real(value, value_offset);
                if (!(scenario_.t_end > 0.0)) throw ParseError(value_offset, "positive t_end");
            } else if (key == "samples") {
                const std::int64_t n = parse_integer(value, value_offset);
                if (n < 2 || n > 10000000) throw ParseError(value_offset, "samples >= 2");
                scenario_.samples = static_cast<int>(n);
            } else if (key == "dt_max") {
                scenario_.dt_max = parse_real(value, value_offset);
                if (!(*scenario_.dt_max > 0.0)) throw ParseError(value_offset, "positive dt_max");
            } else {
                throw ParseError(offset, "key 't_end', 'samples' or 'dt_max'");
            }
        }
    }

    void level_line(std::string_view body, std::size_t offset) {
        if (!levels_declared_) {
            scenario_.levels.clear();
            levels_declared_ = true;
        }
        std::size_t k = 0;
        while (k < body.size()) {
            if (body[k] == ' ' || body[k] == '\t' || body[k] == ',') { ++k; continue; }
            std::size_t end = k;
            while (end < body.size() && body[end] != ' ' && body[end] != '\t' && body[end] != ',') ++end;
            const std::string label(body.substr(k, end - k));
            if (!valid_identifier(label)) throw ParseError(offset + k, "level label");
            for (const auto& l : scenario_.levels) {
                if (l == label) throw ParseError(offset + k, "distinct level label");
            }
            scenario_.levels.push_back(label);
            k = end;
        }
    }

    void channel_line(std::string_view body, std::size_t offset) {
        // Channels are parsed once every level is known.
        pending_channels_.push_back({std::string(body), offset});
    }

    void parse_channel(const std::string& body, std::size_t offset) {
        const auto colon = body.find(':');
        if (colon == std::string::npos) throw ParseError(offset + body.size(), "':' between coupling and operator");
        std::string rest = body.substr(colon + 1);
        std::string detuning = scenario_.delta_symbol;
        if (const auto at = rest.find('@'); at != std::string::npos) {
            const std::string sym(trim(std::string_view(rest).substr(at + 1)));
            if (!valid_identifier(sym)) throw ParseError(offset + colon + 1 + at + 1, "detuning symbol");
            detuning = sym;
            rest = rest.substr(0, at);
        }
        const std::set<std::string> levels = scenario_.level_set();
        const OperatorExpr lambda = with_offset(offset, [&] { return parse_operator_expr(body.substr(0, colon), levels); });
        const auto terms = lambda.terms();
        if (terms.size() != 1 || !terms[0].atom.identity || terms[0].boson.degree() != 0) {
            throw ParseError(offset, "scalar coupling coefficient");
        }
        const std::size_t op_offset = offset + colon + 1;
        OperatorExpr op = with_offset(op_offset, [&] { return parse_operator_expr(rest, levels); });
        scenario_.channels.push_back({terms[0].coeff, std::move(op), detuning, offset});
    }

    template <typename Fn>
    static OperatorExpr with_offset(std::size_t offset, Fn&& fn) {
        try {
            return fn();
        } catch (const IllegalCharacter& e) {
            throw ParseError(offset + e.position(), "legal character");
        } catch (const ParseError& e) {
            throw ParseError(offset + e.position(), e.expected());
        }
    }

    StateDescriptor parse_state(std::string_view value, std::size_t offset) {
        const auto comma = value.find(',');
        if (comma == std::string_view::npos) throw ParseError(offset + value.size(), "',' after level");
        StateDescriptor desc;
        desc.level = std::string(trim(value.substr(0, comma)));
        std::string_view photons = trim(value.substr(comma + 1));
        const std::size_t photons_offset = offset + (photons.empty() ? comma + 1 : photons.data() - value.data());
        constexpr std::string_view head = "coherent(";
        if (photons.starts_with(head)) {
            if (!photons.ends_with(")")) throw ParseError(photons_offset + photons.size(), "')'");
            desc.coherent = true;
            const std::string_view inner = trim(photons.substr(head.size(), photons.size() - head.size() - 1));
            desc.alpha = parse_real(inner, photons_offset + head.size());
        } else {
            const std::int64_t n = parse_integer(photons, photons_offset);
            if (n < 0) throw ParseError(photons_offset, "non-negative photon number");
            desc.n = static_cast<int>(std::min<std::int64_t>(n, 1 << 30));
        }
        return desc;
    }

    static double parse_real(std::string_view s, std::size_t offset) {
        double v = 0.0;
        const char* first = s.data();
        if (!s.empty() && s.front() == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) throw ParseError(offset, "real number");
        return v;
    }

    static std::int64_t parse_integer(std::string_view s, std::size_t offset) {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(offset, "integer");
        return v;
    }

    void finish() {
        for (const auto& [body, offset] : pending_channels_) parse_channel(body, offset);
        if (scenario_.levels.size() < 2) throw ParseError(0, "at least two levels in [levels]");
        if (scenario_.channels.empty()) throw MissingKey("channels");
        if (!scenario_.params.contains(scenario_.delta_symbol)) throw MissingKey(scenario_.delta_symbol);
        if (!seen_keys_.contains("space.n_max")) throw MissingKey("n_max");
        if (!seen_keys_.contains("state.initial")) throw MissingKey("initial");
        if (!seen_keys_.contains("time.t_end")) throw MissingKey("t_end");
        if (!seen_keys_.contains("time.samples")) throw MissingKey("samples");

        for (const auto& key : scenario_.params) {
            if (reserved_word(key.first)) throw Error("parameter name '" + key.first + "' is reserved");
        }
        for (const auto& ch : scenario_.channels) {
            for (const auto& s : ch.lambda.symbols()) require_bound(s);
            for (const auto& s : ch.op.symbols()) require_bound(s);
            require_bound(ch.detuning);
        }
        const auto& levels = scenario_.levels;
        if (std::find(levels.begin(), levels.end(), scenario_.initial.level) == levels.end()) {
            throw UnknownLevel(scenario_.initial.level);
        }
        if (!scenario_.initial.coherent && scenario_.initial.n > scenario_.n_max) {
            throw FockOverflow(scenario_.initial.n, scenario_.n_max);
        }
    }

    void require_bound(const std::string& symbol) const {
        if (!scenario_.params.contains(symbol)) throw UnboundParameter(symbol);
    }

    std::string_view text_;
    Scenario scenario_;
    bool levels_declared_ = false;
    std::set<std::string> seen_sections_;
    std::set<std::string> seen_keys_;
    std::vector<std::pair<std::string, std::size_t>> pending_channels_;
};

}  // namespace detail

inline Scenario parse_scenario(std::string_view config_text) { return detail::ScenarioParser(config_text).parse(); }

/// Deterministic text form used for hashing and manifests.
inline std::string canonical_text(const Scenario& s) {
    auto real = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::string out = "levels=";
    for (const auto& l : s.levels) out += l + " ";
    out += "\n";
    for (const auto& ch : s.channels) {
        out += "channel=" + to_string(OperatorExpr::scalar(ch.lambda)) + ":" + to_string(ch.op) + "@" + ch.detuning +
               "\n";
    }
    for (const auto& [k, v] : s.params) out += "param." + k + "=" + real(v) + "\n";
    out += "n_max=" + std::to_string(s.n_max) + "\n";
    out += "initial=" + s.initial.level + "," +
           (s.initial.coherent ? "coherent(" + real(s.initial.alpha) + ")" : std::to_string(s.initial.n)) + "\n";
    out += "t_end=" + real(s.t_end) + "\nsamples=" + std::to_string(s.samples) + "\n";
    if (s.dt_max) out += "dt_max=" + real(*s.dt_max) + "\n";
    return out;
}

}  // namespace dforge

#endif  // DFORGE_SCENARIO_HPP
