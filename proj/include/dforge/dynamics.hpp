#ifndef DFORGE_DYNAMICS_HPP
#define DFORGE_DYNAMICS_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dforge/effective.hpp"
#include "dforge/errors.hpp"
#include "dforge/fock.hpp"
#include "dforge/parallel.hpp"

namespace dforge {

/// Uniform samples 0 = t_0 < ... < t_{samples-1} = t_end.
class TimeGrid {
public:
    TimeGrid(double t_end, int samples) : t_end_(t_end), samples_(samples) {
        if (!(t_end_ > 0.0) || !std::isfinite(t_end_)) throw Error("t_end must be positive");
        if (samples_ < 2) throw Error("a time grid needs at least two samples");
    }
    double t_end() const noexcept { return t_end_; }
    int samples() const noexcept { return samples_; }
    double at(int k) const noexcept { return k == samples_ - 1 ? t_end_ : t_end_ * k / (samples_ - 1); }
    std::vector<double> times() const {
        std::vector<double> out(samples_);
        for (int k = 0; k < samples_; ++k) out[k] = at(k);
        return out;
    }

private:
    double t_end_;
    int samples_;
};

struct IntegratorSettings {
    /// Upper bound on the step size; the step is further capped at 2 pi / (40 |delta|).
    double dt_max = 1e300;
    /// When set, a dt_max above the detuning cap is an error instead of being tightened.
    bool strict_step = false;
    /// Memory allowed for cached within-period propagators.
    std::size_t cache_bytes = std::size_t{512} << 20;
};

struct IntegratorMeta {
    std::string method;
    double step = 0.0;
    int steps_per_period = 0;
    double dt_max = 0.0;
    double max_norm_drift = 0.0;
};

struct Trajectory {
    SpaceSpec space;
    std::vector<double> times;
    std::vector<Eigen::VectorXcd> states;
    IntegratorMeta meta;
};

/// Minimum number of midpoint steps per detuning period.
inline constexpr int kMinStepsPerPeriod = 40;

namespace detail {

/// exp(-i h H) for Hermitian H.
inline Eigen::MatrixXcd hermitian_exp(const Eigen::MatrixXcd& h, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
    if (eig.info() != Eigen::Success) throw NumericalFailure("eigendecomposition failed");
    const Eigen::VectorXcd phases =
        (eig.eigenvalues().cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
    return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

/// Nearest unitary (polar factor). Products of many step propagators lose
/// unitarity at the rounding level; the period propagator is applied
/// thousands of times, so it is projected back.
inline Eigen::MatrixXcd nearest_unitary(const Eigen::MatrixXcd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

inline double max_norm_drift(const std::vector<Eigen::VectorXcd>& states) {
    double drift = 0.0;
    for (const auto& s : states) {
        const double n = s.norm();
        if (!std::isfinite(n)) return INFINITY;
        drift = std::max(drift, std::abs(n - 1.0));
    }
    return drift;
}

}  // namespace detail

/// Numeric form of the interaction-picture Hamiltonian
///   H(t) = e^{i delta t} X + e^{-i delta t} X†,  X = sum_k lambda_k A_k.
class DrivenHamiltonian {
public:
    DrivenHamiltonian(const ChannelSpec& spec, const ParamMap& params, const SpaceSpec& space)
        : delta_(Coefficient::symbol(spec.delta()).evaluate(params).real()),
          x_(Eigen::MatrixXcd::Zero(space.dim(), space.dim())) {
        if (delta_ == 0.0 || !std::isfinite(delta_)) throw SpecError("detuning must be finite and non-zero");
        for (const auto& ch : spec.channels()) {
            const Complex lambda = ch.lambda.evaluate(params);
            if (lambda == Complex(0.0)) continue;
            x_ += lambda * realize(ch.op, space, params).matrix;
        }
    }

    double delta() const noexcept { return delta_; }
    double period() const noexcept { return 2.0 * std::numbers::pi / std::abs(delta_); }

    Eigen::MatrixXcd at(double t) const {
        const double phase = delta_ * std::fmod(t, period());
        const Complex w(std::cos(phase), std::sin(phase));
        Eigen::MatrixXcd h = w * x_;
        h += std::conj(w) * x_.adjoint();
        return h;
    }

    /// One midpoint-exponential step exp(-i h H(t + h/2)).
    Eigen::MatrixXcd step(double t, double h) const { return detail::hermitian_exp(at(t + 0.5 * h), h); }

private:
    double delta_;
    Eigen::MatrixXcd x_;
};

/// Midpoint-exponential propagation of the time-dependent Hamiltonian.
///
/// The step h = T / M divides the detuning period T, so the step sequence
/// repeats every period. Prefix products Q_p = U_{p-1} ... U_0 are cached,
/// and any run of whole steps from grid index k_a to k_b is applied as
/// Q_{p_b} P^{c_b - c_a} Q_{p_a}†, with P = Q_M. This is the same product of
/// step propagators as naive stepping, just regrouped.
inline Trajectory propagate_full(const ChannelSpec& spec, const ParamMap& params, const StateVector& psi0,
                                 const TimeGrid& grid, const IntegratorSettings& settings = {}) {
    const SpaceSpec& space = psi0.space;
    const DrivenHamiltonian hamiltonian(spec, params, space);
    const double period = hamiltonian.period();
    const double cap = period / kMinStepsPerPeriod;
    if (!(settings.dt_max > 0.0)) throw Error("dt_max must be positive");
    if (settings.strict_step && settings.dt_max > cap) throw StepTooLarge(settings.dt_max, cap);
    const double ratio = period / settings.dt_max;
    const std::int64_t m_steps =
        std::max<std::int64_t>(kMinStepsPerPeriod, static_cast<std::int64_t>(std::ceil(ratio - 1e-9)));
    const double h = period / static_cast<double>(m_steps);

    const int dim = space.dim();
    const std::size_t bytes = static_cast<std::size_t>(m_steps + 1) * dim * dim * sizeof(Complex);
    const bool cached = bytes <= settings.cache_bytes;

    std::vector<Eigen::MatrixXcd> prefix;
    Eigen::MatrixXcd one_period = Eigen::MatrixXcd::Identity(dim, dim);
    if (cached) prefix.reserve(m_steps + 1);
    if (cached) prefix.push_back(one_period);
    for (std::int64_t p = 0; p < m_steps; ++p) {
        one_period = hamiltonian.step(static_cast<double>(p) * h, h) * one_period;
        if (cached) prefix.push_back(one_period);
    }
    one_period = detail::nearest_unitary(one_period);

    const double snap = 1e-9;
    auto grid_floor = [&](double t) {
        const double k = t / h;
        const double r = std::round(k);
        return static_cast<std::int64_t>(std::abs(k - r) < snap ? r : std::floor(k));
    };
    auto grid_ceil = [&](double t) {
        const double k = t / h;
        const double r = std::round(k);
        return static_cast<std::int64_t>(std::abs(k - r) < snap ? r : std::ceil(k));
    };

    auto whole_steps = [&](Eigen::VectorXcd& psi, std::int64_t ka, std::int64_t kb) {
        if (kb <= ka) return;
        const std::int64_t ca = ka / m_steps, pa = ka % m_steps;
        const std::int64_t cb = kb / m_steps, pb = kb % m_steps;
        if (cached) {
            psi = prefix[pa].adjoint() * psi;
            for (std::int64_t c = ca; c < cb; ++c) psi = one_period * psi;
            psi = prefix[pb] * psi;
            return;
        }
        std::int64_t k = ka;
        while (k < kb) {
            if (k % m_steps == 0 && k + m_steps <= kb) {
                psi = one_period * psi;
                k += m_steps;
            } else {
                psi = hamiltonian.step(static_cast<double>(k % m_steps) * h, h) * psi;
                ++k;
            }
        }
    };

    auto advance = [&](Eigen::VectorXcd& psi, double ta, double tb) {
        if (tb <= ta) return;
        const std::int64_t ka = grid_ceil(ta), kb = grid_floor(tb);
        if (ka > kb) {
            psi = hamiltonian.step(ta, tb - ta) * psi;
            return;
        }
        const double ga = static_cast<double>(ka) * h, gb = static_cast<double>(kb) * h;
        if (ga - ta > snap * h) psi = hamiltonian.step(ta, ga - ta) * psi;
        whole_steps(psi, ka, kb);
        if (tb - gb > snap * h) psi = hamiltonian.step(gb, tb - gb) * psi;
    };

    Trajectory traj{space, grid.times(), {}, {}};
    traj.states.reserve(traj.times.size());
    Eigen::VectorXcd psi = psi0.amplitudes;
    double t_cur = 0.0;
    for (const double t : traj.times) {
        advance(psi, t_cur, t);
        t_cur = t;
        traj.states.push_back(psi);
    }
    traj.meta = {"midpoint-exponential", h, static_cast<int>(m_steps), settings.dt_max,
                 detail::max_norm_drift(traj.states)};
    if (!(traj.meta.max_norm_drift <= 1e-8)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e", traj.meta.max_norm_drift);
        throw NumericalFailure(std::string("norm drift ") + buf + " exceeds 1e-8");
    }
    return traj;
}

/// psi(t) = exp(-i H t) psi0 from a single eigendecomposition.
inline Trajectory propagate_effective(const DenseOperator& h_eff, const StateVector& psi0, const TimeGrid& grid) {
    const double scale = std::max(1.0, h_eff.matrix.cwiseAbs().maxCoeff());
    const double defect = hermiticity_defect(h_eff);
    if (defect > 1e-10 * scale) throw NotHermitian(defect);
    if (h_eff.space != psi0.space) throw Error("state and operator live on different spaces");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h_eff.matrix);
    if (eig.info() != Eigen::Success) throw NumericalFailure("eigendecomposition failed");
    const Eigen::VectorXcd coords = eig.eigenvectors().adjoint() * psi0.amplitudes;

    Trajectory traj{psi0.space, grid.times(), {}, {}};
    traj.states.reserve(traj.times.size());
    for (const double t : traj.times) {
        if (t == 0.0) {
            traj.states.push_back(psi0.amplitudes);
            continue;
        }
        Eigen::VectorXcd rotated = coords;
        for (Eigen::Index k = 0; k < rotated.size(); ++k) {
            const double phase = -eig.eigenvalues()(k) * t;
            rotated(k) *= Complex(std::cos(phase), std::sin(phase));
        }
        traj.states.push_back(eig.eigenvectors() * rotated);
    }
    traj.meta = {"eigendecomposition", 0.0, 0, 0.0, detail::max_norm_drift(traj.states)};
    return traj;
}

struct ObservableSeries {
    std::vector<double> times;
    /// populations[t][level] in SpaceSpec level order.
    std::vector<std::vector<double>> populations;
    std::vector<double> n_mean;
    std::vector<std::vector<double>> photon_distribution;
    std::optional<std::vector<double>> fidelity;
};

inline double fidelity(const Eigen::VectorXcd& reference, const Eigen::VectorXcd& psi) {
    return std::norm(reference.dot(psi));
}

inline ObservableSeries observables(const Trajectory& traj, const Trajectory* reference = nullptr) {
    if (reference) {
        if (reference->times.size() != traj.times.size() || reference->space != traj.space) throw GridMismatch();
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            if (std::abs(reference->times[k] - traj.times[k]) > 1e-12 * std::max(1.0, std::abs(traj.times[k]))) {
                throw GridMismatch();
            }
        }
    }
    const int fd = traj.space.fock_dim();
    const int nl = static_cast<int>(traj.space.levels().size());
    ObservableSeries out;
    out.times = traj.times;
    if (reference) out.fidelity.emplace();
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const Eigen::VectorXcd& psi = traj.states[k];
        const double norm2 = psi.squaredNorm();
        std::vector<double> pops(nl, 0.0), photons(fd, 0.0);
        double n_mean = 0.0;
        for (int l = 0; l < nl; ++l) {
            for (int n = 0; n < fd; ++n) {
                const double p = std::norm(psi(l * fd + n)) / norm2;
                pops[l] += p;
                photons[n] += p;
                n_mean += n * p;
            }
        }
        out.populations.push_back(std::move(pops));
        out.photon_distribution.push_back(std::move(photons));
        out.n_mean.push_back(n_mean);
        if (reference) out.fidelity->push_back(fidelity(reference->states[k], psi));
    }
    return out;
}

struct ScanSettings {
    /// Horizon in units of delta / lambda^2.
    double horizon = 10.0;
    int samples = 1001;
    /// Midpoint steps per detuning period for the full propagator.
    int steps_per_period = 1000;
    unsigned threads = 0;  // 0: worker_count()
};

struct ScanRow {
    double delta = 0.0;
    double max_infidelity = 0.0;
    /// delta / lambda below 20: reported but excluded from the slope fit.
    bool warned = false;
};

struct ScanResult {
    std::vector<ScanRow> rows;
    std::optional<double> slope;
};

/// Least-squares slope of log(y) against log(x); nullopt with fewer than two points.
inline std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0.0) || !(y[k] > 0.0)) continue;
        const double lx = std::log(x[k]), ly = std::log(y[k]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::nullopt;
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) return std::nullopt;
    return (n * sxy - sx * sy) / denom;
}

inline double max_coupling(const ChannelSpec& spec, const ParamMap& params) {
    double lambda = 0.0;
    for (const auto& ch : spec.channels()) lambda = std::max(lambda, std::abs(ch.lambda.evaluate(params).real()));
    return lambda;
}

/// Worst infidelity between full and effective trajectories for each
/// detuning, over a horizon of fixed effective length horizon * delta / lambda^2.
inline ScanResult dispersive_convergence_scan(const ChannelSpec& spec, const ParamMap& params,
                                              const StateDescriptor& initial, const SpaceSpec& space,
                                              const std::vector<double>& deltas, const ScanSettings& settings = {}) {
    const double lambda = max_coupling(spec, params);
    for (const double d : deltas) {
        if (lambda > 0.0 && std::abs(d) / lambda < 5.0) {
            throw SpecError("delta/lambda = " + std::to_string(std::abs(d) / lambda) +
                            " is below 5; not a dispersive regime");
        }
    }
    const OperatorExpr h_eff = effective_hamiltonian(spec);
    const StateVector psi0 = build_state(initial, space);

    ScanResult result;
    result.rows.resize(deltas.size());
    parallel_for(deltas.size(), settings.threads ? settings.threads : worker_count(), [&](std::size_t i) {
        ParamMap local = params;
        const double delta = deltas[i];
        local[spec.delta()] = delta;
        const double t_end = lambda > 0.0 ? settings.horizon * std::abs(delta) / (lambda * lambda)
                                          : settings.horizon * std::abs(delta);
        const TimeGrid grid(t_end, settings.samples);
        IntegratorSettings integ;
        integ.dt_max = 2.0 * std::numbers::pi / std::abs(delta) / settings.steps_per_period;
        const Trajectory full = propagate_full(spec, local, psi0, grid, integ);
        const Trajectory eff = propagate_effective(realize(h_eff, space, local), psi0, grid);
        double worst = 0.0;
        for (std::size_t k = 0; k < full.states.size(); ++k) {
            worst = std::max(worst, 1.0 - fidelity(eff.states[k], full.states[k]));
        }
        result.rows[i] = {delta, std::max(0.0, worst), lambda > 0.0 && std::abs(delta) / lambda < 20.0};
    });

    std::vector<double> xs, ys;
    for (const auto& row : result.rows) {
        if (row.warned) continue;
        xs.push_back(std::abs(row.delta));
        ys.push_back(row.max_infidelity);
    }
    result.slope = loglog_slope(xs, ys);
    return result;
}

}  // namespace dforge

#endif  // DFORGE_DYNAMICS_HPP
