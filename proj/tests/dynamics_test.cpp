#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dforge/dynamics.hpp"
#include "dforge/parser.hpp"
#include "test_support.hpp"

namespace dforge {
namespace {

const SpaceSpec kSpace({"g", "r", "e"}, 6);

ParamMap couplings(double g1, double g2, double omega, double delta) {
    return {{"g1", g1}, {"g2", g2}, {"Omega", omega}, {"delta", delta}};
}

IntegratorSettings steps_per_period(double delta, int m) {
    IntegratorSettings s;
    s.dt_max = 2.0 * std::numbers::pi / delta / m;
    return s;
}

/// Classic RK4 on i dpsi/dt = H(t) psi with a fixed tiny step; independent of
/// the midpoint-exponential integrator and its period regrouping.
Eigen::VectorXcd rk4_oracle(const DrivenHamiltonian& h, Eigen::VectorXcd psi, double t_end, int steps) {
    const double dt = t_end / steps;
    const Complex mi(0.0, -1.0);
    for (int k = 0; k < steps; ++k) {
        const double t = k * dt;
        const Eigen::VectorXcd k1 = mi * (h.at(t) * psi);
        const Eigen::VectorXcd k2 = mi * (h.at(t + 0.5 * dt) * (psi + 0.5 * dt * k1));
        const Eigen::VectorXcd k3 = mi * (h.at(t + 0.5 * dt) * (psi + 0.5 * dt * k2));
        const Eigen::VectorXcd k4 = mi * (h.at(t + dt) * (psi + dt * k3));
        psi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return psi;
}

TEST(TimeGrid, UniformSamples) {
    const TimeGrid grid(2.0, 5);
    EXPECT_EQ(grid.times(), (std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0}));
    EXPECT_THROW(TimeGrid(0.0, 5), Error);
    EXPECT_THROW(TimeGrid(1.0, 1), Error);
}

TEST(PropagateFull, ZeroCouplingIsStatic) {
    const StateVector psi0 = build_state({"e", false, 1, 0.0}, kSpace);
    const Trajectory traj =
        propagate_full(testing::three_channel_spec(), couplings(0, 0, 0, 50), psi0, TimeGrid(3.0, 7), {});
    for (const auto& s : traj.states) EXPECT_LT((s - psi0.amplitudes).norm(), 1e-14);
}

TEST(PropagateFull, StepsAreUnitary) {
    const DrivenHamiltonian h(testing::three_channel_spec(), couplings(1.0, 0.8, 1.3, 30), kSpace);
    const Eigen::VectorXcd psi = build_state({"g", true, 0, 1.2}, kSpace).amplitudes;
    for (int k = 0; k < 50; ++k) {
        const Eigen::MatrixXcd u = h.step(0.013 * k, 2.0 * std::numbers::pi / 30 / 40);
        EXPECT_NEAR((u * psi).norm(), 1.0, 1e-10);
    }
}

TEST(PropagateFull, NormDriftAndMetadata) {
    const StateVector psi0 = build_state({"e", false, 0, 0.0}, kSpace);
    const Trajectory traj =
        propagate_full(testing::three_channel_spec(), couplings(1, 1, 1, 40), psi0, TimeGrid(200.0, 101),
                       steps_per_period(40, 200));
    EXPECT_LE(traj.meta.max_norm_drift, 1e-8);
    for (const auto& s : traj.states) EXPECT_NEAR(s.norm(), 1.0, 1e-9);
    EXPECT_EQ(traj.meta.steps_per_period, 200);
    EXPECT_EQ(traj.meta.method, "midpoint-exponential");
}

TEST(PropagateFull, StepCap) {
    const StateVector psi0 = build_state({"e", false, 0, 0.0}, kSpace);
    IntegratorSettings coarse;
    coarse.dt_max = 1.0;  // far above 2 pi / (40 delta)
    const Trajectory traj = propagate_full(testing::three_channel_spec(), couplings(1, 1, 1, 40), psi0, TimeGrid(1, 3), coarse);
    EXPECT_EQ(traj.meta.steps_per_period, kMinStepsPerPeriod);
    coarse.strict_step = true;
    EXPECT_THROW(propagate_full(testing::three_channel_spec(), couplings(1, 1, 1, 40), psi0, TimeGrid(1, 3), coarse),
                 StepTooLarge);
    EXPECT_THROW(propagate_full(testing::three_channel_spec(), {{"g1", 1.0}, {"delta", 40.0}}, psi0, TimeGrid(1, 3), {}),
                 UnboundParameter);
}

TEST(PropagateFull, MatchesRk4Oracle) {
    const ParamMap params = couplings(1.0, 0.7, 1.2, 25);
    const StateVector psi0 = build_state({"e", false, 1, 0.0}, kSpace);
    const double t_end = 3.7;  // not a multiple of the detuning period
    const Trajectory traj =
        propagate_full(testing::three_channel_spec(), params, psi0, TimeGrid(t_end, 2), steps_per_period(25, 4000));
    const DrivenHamiltonian h(testing::three_channel_spec(), params, kSpace);
    const Eigen::VectorXcd oracle = rk4_oracle(h, psi0.amplitudes, t_end, 200000);
    EXPECT_LT((traj.states.back() - oracle).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(PropagateFull, CachedAndStreamingPathsAgree) {
    const ParamMap params = couplings(1.0, 1.0, 1.0, 30);
    const StateVector psi0 = build_state({"e", false, 0, 0.0}, kSpace);
    const TimeGrid grid(17.3, 23);
    IntegratorSettings cached = steps_per_period(30, 100);
    IntegratorSettings streaming = cached;
    streaming.cache_bytes = 0;
    const Trajectory a = propagate_full(testing::three_channel_spec(), params, psi0, grid, cached);
    const Trajectory b = propagate_full(testing::three_channel_spec(), params, psi0, grid, streaming);
    for (std::size_t k = 0; k < a.states.size(); ++k) EXPECT_LT((a.states[k] - b.states[k]).norm(), 1e-10);
}

TEST(PropagateFull, SelfConvergesUnderStepHalving) {
    const ParamMap params = couplings(1.0, 1.0, 1.0, 20);
    const StateVector psi0 = build_state({"e", false, 0, 0.0}, kSpace);
    const TimeGrid grid(20.0, 41);
    const Trajectory coarse = propagate_full(testing::three_channel_spec(), params, psi0, grid, steps_per_period(20, 2000));
    const Trajectory fine = propagate_full(testing::three_channel_spec(), params, psi0, grid, steps_per_period(20, 4000));
    double worst = 0.0;
    for (std::size_t k = 0; k < coarse.states.size(); ++k) {
        worst = std::max(worst, (coarse.states[k] - fine.states[k]).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(PropagateFull, TwoPhotonSectorLeakageBounded) {
    const double lambda = 1.0, delta = 50.0;
    const ParamMap params = couplings(lambda, lambda, 0.0, delta);
    const StateVector psi0 = build_state({"e", false, 0, 0.0}, kSpace);
    const Trajectory traj = propagate_full(testing::three_channel_spec(), params, psi0, TimeGrid(10 * delta, 201),
                                           steps_per_period(delta, 400));
    const int keep_a = kSpace.index("e", 0), keep_b = kSpace.index("g", 2);
    for (const auto& s : traj.states) {
        double outside = 0.0;
        for (int k = 0; k < s.size(); ++k) {
            if (k != keep_a && k != keep_b && k != kSpace.index("r", 1)) outside += std::norm(s(k));
        }
        EXPECT_LT(outside, std::pow(5 * lambda / delta, 2));
    }
}

TEST(PropagateEffective, ExactAndReversible) {
    const ParamMap params = couplings(0.9, 1.1, 0.6, 40);
    const DenseOperator h = realize(effective_hamiltonian(testing::three_channel_spec()), kSpace, params);
    const StateVector psi0 = build_state({"g", true, 0, 0.8}, kSpace);
    const TimeGrid grid(400.0, 11);
    const Trajectory traj = propagate_effective(h, psi0, grid);
    EXPECT_EQ(traj.states.front(), psi0.amplitudes);
    const Eigen::VectorXcd back = detail::hermitian_exp(h.matrix, -grid.t_end()) * traj.states.back();
    EXPECT_LT((back - psi0.amplitudes).norm(), 1e-10);
    EXPECT_LE(traj.meta.max_norm_drift, 1e-10);

    DenseOperator skew = h;
    skew.matrix(0, 1) += 1e-3;
    EXPECT_THROW(propagate_effective(skew, psi0, grid), NotHermitian);
}

TEST(PropagateEffective, OnePhotonRabiOracle) {
    // g1 = 0, Omega = g2 = g: resonant exchange |e,0> <-> |g,1> at coupling g^2/delta
    const double g = 1.0, delta = 50.0;
    const ParamMap params = couplings(0.0, g, g, delta);
    const DenseOperator h = realize(effective_hamiltonian(testing::three_channel_spec()), kSpace, params);
    const StateVector psi0 = build_state({"e", false, 0, 0.0}, kSpace);
    const TimeGrid grid(200.0, 401);
    const ObservableSeries obs = observables(propagate_effective(h, psi0, grid));
    const double e1 = g * g / delta, e2 = g * g / delta, c = g * g / delta;
    for (std::size_t k = 0; k < obs.times.size(); ++k) {
        const double p_e = obs.populations[k][2];
        EXPECT_NEAR(p_e, testing::rabi_p1(e1, e2, c, obs.times[k]), 1e-8);
        EXPECT_NEAR(p_e, std::pow(std::cos(c * obs.times[k]), 2), 1e-8);
        EXPECT_NEAR(obs.n_mean[k], 1.0 - p_e, 1e-8);
    }
}

TEST(PropagateEffective, TwoPhotonGeneralizedRabiOracle) {
    const double g1 = 1.0, g2 = 2.0, delta = 60.0;
    const ParamMap params = couplings(g1, g2, 0.0, delta);
    const DenseOperator h = realize(effective_hamiltonian(testing::three_channel_spec()), kSpace, params);
    const StateVector psi0 = build_state({"e", false, 0, 0.0}, kSpace);
    const Trajectory traj = propagate_effective(h, psi0, TimeGrid(300.0, 301));
    const ObservableSeries obs = observables(traj);
    const double e_e0 = g2 * g2 / delta, e_g2 = 2 * g1 * g1 / delta, c = std::sqrt(2.0) * g1 * g2 / delta;
    for (std::size_t k = 0; k < obs.times.size(); ++k) {
        EXPECT_NEAR(obs.populations[k][2], testing::rabi_p1(e_e0, e_g2, c, obs.times[k]), 1e-8);
        const Eigen::VectorXcd& s = traj.states[k];
        const double inside = std::norm(s(kSpace.index("e", 0))) + std::norm(s(kSpace.index("g", 2)));
        EXPECT_GT(inside, 1.0 - 1e-10);
    }
}

TEST(Observables, BasicsAndFidelity) {
    const ParamMap params = couplings(1, 1, 1, 40);
    const StateVector psi0 = build_state({"e", false, 0, 0.0}, kSpace);
    const Trajectory traj = propagate_effective(
        realize(effective_hamiltonian(testing::three_channel_spec()), kSpace, params), psi0, TimeGrid(100, 21));
    const ObservableSeries obs = observables(traj, &traj);
    EXPECT_DOUBLE_EQ(obs.populations[0][2], 1.0);
    EXPECT_DOUBLE_EQ(obs.n_mean[0], 0.0);
    for (std::size_t k = 0; k < obs.times.size(); ++k) {
        EXPECT_NEAR((*obs.fidelity)[k], 1.0, 1e-12);
        double total = 0.0;
        for (double p : obs.populations[k]) {
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0 + 1e-12);
            total += p;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
    const Trajectory other = propagate_effective(
        realize(effective_hamiltonian(testing::three_channel_spec()), kSpace, params), psi0, TimeGrid(100, 11));
    EXPECT_THROW(observables(traj, &other), GridMismatch);
}

TEST(DispersiveScan, ZeroCouplingGivesZeroInfidelity) {
    ScanSettings settings;
    settings.samples = 21;
    settings.steps_per_period = 100;
    const ScanResult scan = dispersive_convergence_scan(testing::three_channel_spec(), couplings(0, 0, 0, 1),
                                                        {"e", false, 0, 0.0}, SpaceSpec({"g", "r", "e"}, 3),
                                                        {20, 50}, settings);
    for (const auto& row : scan.rows) EXPECT_LT(row.max_infidelity, 1e-12);
}

TEST(DispersiveScan, WarnsBelowTwentyAndRejectsBelowFive) {
    ScanSettings settings;
    settings.samples = 41;
    settings.steps_per_period = 200;
    const SpaceSpec space({"g", "r", "e"}, 6);
    const ScanResult scan = dispersive_convergence_scan(testing::three_channel_spec(), couplings(1, 1, 1, 1),
                                                        {"e", false, 0, 0.0}, space, {5, 30, 60}, settings);
    ASSERT_EQ(scan.rows.size(), 3u);
    EXPECT_TRUE(scan.rows[0].warned);
    EXPECT_FALSE(scan.rows[1].warned);
    ASSERT_TRUE(scan.slope.has_value());
    const double two_point = std::log(scan.rows[2].max_infidelity / scan.rows[1].max_infidelity) / std::log(2.0);
    EXPECT_NEAR(*scan.slope, two_point, 1e-12);  // the warned row is not in the fit

    EXPECT_THROW(dispersive_convergence_scan(testing::three_channel_spec(), couplings(1, 1, 1, 1), {"e", false, 0, 0.0},
                                             space, {4.0}, settings),
                 SpecError);
}

TEST(LogLogSlope, KnownPowerLaw) {
    EXPECT_NEAR(*loglog_slope({1, 2, 4, 8}, {3, 0.75, 0.1875, 0.046875}), -2.0, 1e-12);
    EXPECT_FALSE(loglog_slope({1}, {1}).has_value());
}

}  // namespace
}  // namespace dforge
