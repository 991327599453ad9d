#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "phnet/dynamics.hpp"
#include "phnet/integrator.hpp"
#include "phnet/random.hpp"
#include "phnet/scenarios.hpp"

using namespace phnet;

namespace {

auto decay = [](double, std::span<const double> x, std::span<double> dx) { dx[0] = -x[0]; };

// L = C = 1: dV/dt = -I, dI/dt = V.
auto lc = [](double, std::span<const double> x, std::span<double> dx) {
    dx[0] = -x[1];
    dx[1] = x[0];
};

IntegratorConfig rk4(double dt, double sample_every) {
    IntegratorConfig cfg;
    cfg.method = Rk4Config{dt};
    cfg.sample_every = sample_every;
    return cfg;
}

double decay_error(double dt) {
    const std::vector<double> x0 = {1.0};
    const auto traj = integrate_field(decay, x0, 0.0, 1.0, rk4(dt, 1.0));
    return std::abs(traj.states.back() - std::exp(-1.0));
}

}  // namespace

TEST_CASE("exponential decay at dt = 1e-3") {
    const std::vector<double> x0 = {1.0};
    const auto traj = integrate_field(decay, x0, 0.0, 1.0, rk4(1e-3, 0.1));
    REQUIRE(traj.size() == 11);
    CHECK(traj.times.back() == 1.0);
    CHECK(std::abs(traj.states.back() - std::exp(-1.0)) < 1e-10);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        CHECK(traj.times[i] == doctest::Approx(0.1 * static_cast<double>(i)).epsilon(1e-12));
    }
}

TEST_CASE("RK4 is fourth order") {
    const double ratio = decay_error(0.1) / decay_error(0.05);
    CHECK(ratio > 14.0);
    CHECK(ratio < 18.0);
}

TEST_CASE("undamped LC conserves energy over one period") {
    const std::vector<double> x0 = {1.0, 0.0};
    const double period = 2.0 * std::numbers::pi;
    const auto traj = integrate_field(lc, x0, 0.0, period, rk4(1e-3, 0.01));
    double drift = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto x = traj.state(i);
        drift = std::max(drift, std::abs(0.5 * (x[0] * x[0] + x[1] * x[1]) - 0.5) / 0.5);
    }
    CHECK(drift < 1e-9);
    CHECK(traj.state(traj.size() - 1)[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("RK45 meets its tolerance on the analytic problems") {
    IntegratorConfig cfg;
    cfg.method = Rk45Config{1e-12, 1e-12, 1e-9, 0.1};
    cfg.sample_every = 0.25;
    const std::vector<double> x0 = {1.0};
    IntegrationStats stats;
    const auto traj = integrate_field(decay, x0, 0.0, 1.0, cfg, {}, &stats);
    REQUIRE(traj.size() == 5);
    CHECK(traj.times.back() == 1.0);
    CHECK(std::abs(traj.states.back() - std::exp(-1.0)) < 1e-10);
    CHECK(stats.steps > 0);
    CHECK(stats.evaluations >= 6 * stats.steps);
}

TEST_CASE("RK45 and RK4 agree on the two-machine network") {
    const PowerNetwork net = two_machine_default();
    const auto x0 = uniform_state(net.state_size(), 1, 10.0);
    const auto a = integrate(net, x0, 0.0, 0.05, rk4(1e-5, 0.01));
    IntegratorConfig cfg;
    cfg.method = Rk45Config{1e-9, 1e-11, 1e-12, 1e-3};
    cfg.sample_every = 0.01;
    const auto b = integrate(net, x0, 0.0, 0.05, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.times[i] == doctest::Approx(b.times[i]).epsilon(1e-12));
        for (std::size_t k = 0; k < a.dim; ++k) {
            CHECK(std::abs(a.state(i)[k] - b.state(i)[k]) < 1e-6 * (1.0 + std::abs(a.state(i)[k])));
        }
    }
    CHECK(a.has_derived());
    CHECK(a.hamiltonian[0] == total_energy(x0, net));
}

TEST_CASE("integration is deterministic") {
    const PowerNetwork net = two_machine_default();
    const auto x0 = uniform_state(net.state_size(), 9, 100.0);
    const auto a = integrate(net, x0, 0.0, 0.2, rk4(50e-6, 0.01));
    const auto b = integrate(net, x0, 0.0, 0.2, rk4(50e-6, 0.01));
    CHECK(a.times == b.times);
    CHECK(a.states == b.states);
    CHECK(a.hamiltonian == b.hamiltonian);
}

TEST_CASE("observer sees every step") {
    const std::vector<double> x0 = {1.0};
    std::size_t calls = 0;
    double last = -1.0;
    bool increasing = true;
    const auto traj = integrate_field(decay, x0, 0.0, 1.0, rk4(0.01, 0.5), [&](double t, std::span<const double>) {
        increasing = increasing && t > last;
        last = t;
        ++calls;
    });
    CHECK(calls == 101);
    CHECK(increasing);
    CHECK(traj.size() == 3);
}

TEST_CASE("failures") {
    SUBCASE("invalid config") {
        const std::vector<double> x0 = {1.0};
        CHECK_THROWS_AS((void)integrate_field(decay, x0, 0.0, 1.0, rk4(0.0, 0.1)), Error);
        CHECK_THROWS_AS((void)integrate_field(decay, x0, 1.0, 1.0, rk4(0.1, 0.1)), Error);
        IntegratorConfig bad;
        bad.method = Rk45Config{1e-6, 1e-6, 1.0, 0.1};
        CHECK(validate_config(bad).size() == 1);
    }
    SUBCASE("finite-time blow-up") {
        const std::vector<double> x0 = {1.0};
        auto square = [](double, std::span<const double> x, std::span<double> dx) { dx[0] = x[0] * x[0]; };
        CHECK_THROWS_AS((void)integrate_field(square, x0, 0.0, 2.0, rk4(1e-3, 0.1)), NonFinite);
    }
    SUBCASE("tolerance not reachable at dt_min") {
        const std::vector<double> x0 = {1.0};
        auto stiff = [](double, std::span<const double> x, std::span<double> dx) { dx[0] = -1e6 * x[0]; };
        IntegratorConfig cfg;
        cfg.method = Rk45Config{1e-14, 1e-14, 1e-2, 1e-2};
        cfg.sample_every = 0.1;
        CHECK_THROWS_AS((void)integrate_field(stiff, x0, 0.0, 1.0, cfg), StepFailure);
    }
    SUBCASE("network checks") {
        const PowerNetwork net = two_machine_default();
        const std::vector<double> short_state(net.state_size() - 2, 0.0);
        CHECK_THROWS_AS((void)integrate(net, short_state, 0.0, 1.0, rk4(1e-3, 0.1)), DimensionMismatch);
        auto edges = net.edges();
        std::get<LineParams>(edges[5].params).L = 0.0;
        const PowerNetwork bad(3, edges);
        const std::vector<double> x0(bad.state_size(), 0.0);
        CHECK_THROWS_AS((void)integrate(bad, x0, 0.0, 1.0, rk4(1e-3, 0.1)), StructuralError);
    }
}

TEST_CASE("decimate") {
    const std::vector<double> x0 = {1.0};
    const auto traj = integrate_field(decay, x0, 0.0, 1.0, rk4(0.01, 0.1));
    REQUIRE(traj.size() == 11);

    const auto same = decimate(traj, 1);
    CHECK(same.times == traj.times);
    CHECK(same.states == traj.states);

    const auto five = decimate(traj, 5);
    REQUIRE(five.size() == 3);
    CHECK(five.times[0] == traj.times[0]);
    CHECK(five.times[1] == traj.times[5]);
    CHECK(five.times[2] == traj.times[10]);

    for (std::size_t stride = 1; stride <= 12; ++stride) {
        const auto d = decimate(traj, stride);
        CHECK(d.times.back() == traj.times.back());
        for (std::size_t i = 1; i < d.size(); ++i) CHECK(d.times[i] > d.times[i - 1]);
    }
    CHECK_THROWS_AS((void)decimate(traj, 0), Error);
}
