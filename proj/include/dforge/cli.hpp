#ifndef DFORGE_CLI_HPP
#define DFORGE_CLI_HPP

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dforge/dynamics.hpp"
#include "dforge/effective.hpp"
#include "dforge/parser.hpp"
#include "dforge/scenario.hpp"

namespace dforge {

inline constexpr const char* kVersion = "0.1.0";

/// Steps per detuning period used when a scenario does not set dt_max.
inline constexpr int kDefaultStepsPerPeriod = 1000;

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int golden_mismatch = 1;
inline constexpr int usage = 2;
inline constexpr int numerical = 3;
}  // namespace exit_code

struct DeriveOptions {
    std::string config_path;
    std::optional<std::string> project_level;
    std::optional<std::string> golden_path;
    std::string ground = "g";
    std::string excited = "e";
};

enum class SimulationMode { full, effective, both };

struct SimulateOptions {
    std::string config_path;
    SimulationMode mode = SimulationMode::both;
    std::optional<std::string> out_path;
    bool check_convergence = false;
};

struct SweepOptions {
    std::string config_path;
    std::string vary;  // "key=v1,v2,..."
    std::optional<std::string> out_path;
};

namespace detail {

inline std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// "path:line:col: message" for errors carrying a byte offset.
inline std::string located(const std::string& path, std::string_view text, std::size_t offset,
                           const std::string& message) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k < offset && k < text.size(); ++k) {
        if (text[k] == '\n') { ++line; col = 1; } else { ++col; }
    }
    return path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + message;
}

/// Runs a command body, mapping library errors to exit codes.
template <typename Fn>
int guarded(const std::string& path, const std::string* text, std::ostream& err, Fn&& body) {
    try {
        return body();
    } catch (const PositionedError& e) {
        err << "error: " << (text ? located(path, *text, e.position(), e.what()) : path + ": " + e.what()) << "\n";
        return exit_code::usage;
    } catch (const NumericalFailure& e) {
        err << "error: numerical failure: " << e.what() << "\n";
        return exit_code::numerical;
    } catch (const NotHermitian& e) {
        err << "error: numerical failure: " << e.what() << "\n";
        return exit_code::numerical;
    } catch (const Error& e) {
        err << "error: " << path << ": " << e.what() << "\n";
        return exit_code::usage;
    }
}

struct RunManifest {
    std::string scenario_hash;
    nlohmann::json integrator;
    double wall_time = 0.0;

    nlohmann::json to_json() const {
        return {{"scenario_hash", scenario_hash},
                {"integrator", integrator},
                {"version", kVersion},
                {"wall_time_s", wall_time}};
    }
};

/// Writes `content` to path (or `out` when path is empty) plus a
/// "<path>.manifest.json" beside it.
inline void emit(const std::optional<std::string>& path, const std::string& content, const RunManifest& manifest,
                 std::ostream& out) {
    if (!path) {
        out << content;
        return;
    }
    {
        std::ofstream f(*path, std::ios::binary);
        if (!f) throw Error("cannot write '" + *path + "'");
        f << content;
    }
    std::ofstream m(*path + ".manifest.json", std::ios::binary);
    if (!m) throw Error("cannot write '" + *path + ".manifest.json'");
    m << manifest.to_json().dump(2) << "\n";
}

inline double scenario_dt_max(const Scenario& s, double delta) {
    return s.dt_max ? *s.dt_max : 2.0 * std::numbers::pi / std::abs(delta) / kDefaultStepsPerPeriod;
}

inline double max_amplitude_change(const Trajectory& a, const Trajectory& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        worst = std::max(worst, (a.states[k] - b.states[k]).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace detail

inline int cmd_derive(const DeriveOptions& opts, std::ostream& out, std::ostream& err) {
    std::string text;
    try {
        text = detail::read_file(opts.config_path);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    }
    return detail::guarded(opts.config_path, &text, err, [&] {
        const Scenario scenario = parse_scenario(text);
        const ChannelSpec spec = scenario.channel_spec();
        OperatorExpr h = effective_hamiltonian(spec);
        out << "# effective Hamiltonian, " << h.size() << " monomials\n";
        out << "H_eff = " << to_string(h) << "\n";
        if (opts.project_level) {
            h = project_out_level(h, *opts.project_level);
            out << "# level " << *opts.project_level << " projected out, " << h.size() << " monomials\n";
            out << "H_eff|" << *opts.project_level << " = " << to_string(h) << "\n";
        }
        const Decomposition parts = decompose(h, opts.ground, opts.excited);
        out << "stark = " << to_string(parts.stark) << "\n";
        out << "one_photon = " << to_string(parts.one_photon) << "\n";
        out << "two_photon = " << to_string(parts.two_photon) << "\n";
        out << "displacement = " << to_string(parts.displacement) << "\n";
        out << "other = " << to_string(parts.other) << "\n";

        if (!opts.golden_path) return exit_code::ok;
        const std::string golden_text = detail::read_file(*opts.golden_path);
        std::string expr_text;
        std::istringstream lines(golden_text);
        for (std::string line; std::getline(lines, line);) {
            if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            expr_text += line + " ";
        }
        OperatorExpr golden;
        try {
            golden = parse_operator_expr(expr_text, scenario.level_set());
        } catch (const PositionedError& e) {
            err << "error: " << *opts.golden_path << ": " << e.what() << "\n";
            return exit_code::usage;
        }
        if (equal(golden, h)) {
            out << "# golden: match\n";
            return exit_code::ok;
        }
        out << "# golden: MISMATCH\n";
        out << "# missing:    " << to_string(golden - h) << "\n";
        out << "# unexpected: " << to_string(h - golden) << "\n";
        return exit_code::golden_mismatch;
    });
}

inline int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
    std::string text;
    try {
        text = detail::read_file(opts.config_path);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    }
    return detail::guarded(opts.config_path, &text, err, [&] {
        const auto started = std::chrono::steady_clock::now();
        const Scenario scenario = parse_scenario(text);
        const ChannelSpec spec = scenario.channel_spec();
        const SpaceSpec space = scenario.space();
        const TimeGrid grid = scenario.grid();
        const StateVector psi0 = build_state(scenario.initial, space);
        const double delta = scenario.params.at(scenario.delta_symbol);

        IntegratorSettings integ;
        integ.dt_max = detail::scenario_dt_max(scenario, delta);
        const bool run_full = opts.mode != SimulationMode::effective;
        const bool run_eff = opts.mode != SimulationMode::full;

        std::optional<Trajectory> full, eff;
        nlohmann::json integrator = nlohmann::json::object();
        if (run_full) {
            full = propagate_full(spec, scenario.params, psi0, grid, integ);
            integrator["full"] = {{"method", full->meta.method},
                                  {"dt_max", full->meta.dt_max},
                                  {"step", full->meta.step},
                                  {"steps_per_period", full->meta.steps_per_period}};
            if (opts.check_convergence) {
                IntegratorSettings halved = integ;
                halved.dt_max = full->meta.step / 2.0;
                const Trajectory fine = propagate_full(spec, scenario.params, psi0, grid, halved);
                const double change = detail::max_amplitude_change(*full, fine);
                integrator["full"]["halving_change"] = change;
                if (!(change < 1e-6)) {
                    throw NumericalFailure("halving the step changed amplitudes by " + detail::format_real(change));
                }
            }
        }
        if (run_eff) {
            eff = propagate_effective(realize(effective_hamiltonian(spec), space, scenario.params), psi0, grid);
            integrator["effective"] = {{"method", eff->meta.method}};
        }

        const Trajectory& primary = run_full ? *full : *eff;
        const ObservableSeries obs = observables(primary, (run_full && run_eff) ? &*eff : nullptr);

        const std::string hash = detail::fnv1a_hex(canonical_text(scenario) + "|" + integrator.dump());
        std::ostringstream csv;
        csv << "# dforge " << kVersion << " simulate mode="
            << (opts.mode == SimulationMode::full ? "full" : opts.mode == SimulationMode::effective ? "effective"
                                                                                                     : "both")
            << " scenario=" << hash << "\n";
        csv << "t";
        for (const auto& l : space.levels()) csv << ",P_" << l;
        csv << ",n_mean,fidelity\n";
        for (std::size_t k = 0; k < obs.times.size(); ++k) {
            csv << detail::format_real(obs.times[k]);
            for (double p : obs.populations[k]) csv << "," << detail::format_real(p);
            csv << "," << detail::format_real(obs.n_mean[k]) << ",";
            if (obs.fidelity) csv << detail::format_real((*obs.fidelity)[k]);
            csv << "\n";
        }
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        detail::emit(opts.out_path, csv.str(), {hash, integrator, wall}, out);
        return exit_code::ok;
    });
}

inline int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
    std::string text;
    try {
        text = detail::read_file(opts.config_path);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    }
    return detail::guarded(opts.config_path, &text, err, [&] {
        const auto started = std::chrono::steady_clock::now();
        const Scenario scenario = parse_scenario(text);
        const ChannelSpec spec = scenario.channel_spec();
        const SpaceSpec space = scenario.space();

        const auto eq = opts.vary.find('=');
        if (eq == std::string::npos) throw Error("--vary expects key=v1,v2,...");
        const std::string key = opts.vary.substr(0, eq);
        if (!scenario.params.contains(key)) throw Error("--vary key '" + key + "' is not a parameter");
        std::vector<double> values;
        {
            std::istringstream list(opts.vary.substr(eq + 1));
            for (std::string item; std::getline(list, item, ',');) {
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(item, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used == 0 || used != item.size() || !std::isfinite(v)) {
                    throw Error("--vary value '" + item + "' is not a number");
                }
                values.push_back(v);
            }
        }
        if (values.empty()) throw Error("--vary needs at least one value");

        nlohmann::json integrator;
        std::vector<ScanRow> rows;
        std::optional<double> slope;
        if (key == scenario.delta_symbol) {
            ScanSettings settings;
            settings.samples = scenario.samples;
            settings.steps_per_period = kDefaultStepsPerPeriod;
            const ScanResult scan =
                dispersive_convergence_scan(spec, scenario.params, scenario.initial, space, values, settings);
            rows = scan.rows;
            slope = scan.slope;
            integrator = {{"method", "midpoint-exponential"},
                          {"steps_per_period", settings.steps_per_period},
                          {"horizon", settings.horizon},
                          {"samples", settings.samples}};
        } else {
            const TimeGrid grid = scenario.grid();
            const StateVector psi0 = build_state(scenario.initial, space);
            const OperatorExpr h_eff = effective_hamiltonian(spec);
            rows.resize(values.size());
            parallel_for(values.size(), worker_count(), [&](std::size_t i) {
                ParamMap params = scenario.params;
                params[key] = values[i];
                IntegratorSettings integ;
                integ.dt_max = detail::scenario_dt_max(scenario, params.at(scenario.delta_symbol));
                const Trajectory full = propagate_full(spec, params, psi0, grid, integ);
                const Trajectory eff = propagate_effective(realize(h_eff, space, params), psi0, grid);
                double worst = 0.0;
                for (std::size_t k = 0; k < full.states.size(); ++k) {
                    worst = std::max(worst, 1.0 - fidelity(eff.states[k], full.states[k]));
                }
                rows[i] = {values[i], std::max(0.0, worst), false};
            });
            std::vector<double> xs, ys;
            for (const auto& r : rows) { xs.push_back(std::abs(r.delta)); ys.push_back(r.max_infidelity); }
            slope = loglog_slope(xs, ys);
            integrator = {{"method", "midpoint-exponential"},
                          {"dt_max", scenario.dt_max ? nlohmann::json(*scenario.dt_max) : nlohmann::json("default")},
                          {"samples", scenario.samples}};
        }

        for (const auto& r : rows) {
            if (r.warned) {
                err << "warning: " << key << "=" << detail::format_real(r.delta)
                    << " has delta/lambda below 20; excluded from the slope fit\n";
            }
        }
        const std::string hash = detail::fnv1a_hex(canonical_text(scenario) + "|" + opts.vary + "|" + integrator.dump());
        std::ostringstream csv;
        csv << key << ",max_infidelity\n";
        for (const auto& r : rows) csv << detail::format_real(r.delta) << "," << detail::format_real(r.max_infidelity) << "\n";
        if (slope) csv << "# slope=" << detail::format_real(*slope) << "\n";
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        detail::emit(opts.out_path, csv.str(), {hash, integrator, wall}, out);
        return exit_code::ok;
    });
}

}  // namespace dforge

#endif  // DFORGE_CLI_HPP
