#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "phnet/dynamics.hpp"
#include "phnet/errors.hpp"
#include "phnet/random.hpp"
#include "phnet/scenarios.hpp"

using namespace phnet;
using cplx = std::complex<double>;

namespace {

SgParams unit_sg() { return SgParams{2.0, 0.5, 0.0, 0.1, 0.25, 0.0, 1.0}; }

PowerNetwork sg_on_bus(const SgParams& sg, double C = 1.0, cplx Y = {1.0, 0.0}) {
    return PowerNetwork(1, {{sg, BusId{0}, kGround}, {ShuntParams{C, AdmittanceLoad{Y}}, BusId{0}, kGround}});
}

// Three buses in a line, admittance loads with susceptance on the ends, an RL
// branch in the middle, generators on buses 0 and 2.
PowerNetwork mixed_network() {
    SgParams a{3.0, 0.7, 2.0, 0.2, 0.05, 1.3, 1.0};
    SgParams b{5.0, 0.4, 1.0, 0.3, 0.08, 0.9, 1.0};
    return PowerNetwork(3, {
                               {a, BusId{0}, kGround},
                               {ShuntParams{0.2, AdmittanceLoad{{0.5, 0.3}}}, BusId{0}, kGround},
                               {LineParams{0.4, 0.1}, BusId{0}, BusId{1}},
                               {ShuntParams{0.3, RlLoad{2.0, 0.5}}, BusId{1}, kGround},
                               {LineParams{0.6, 0.2}, BusId{2}, BusId{1}},
                               {ShuntParams{0.25, AdmittanceLoad{{0.8, -0.2}}}, BusId{2}, kGround},
                               {b, BusId{2}, kGround},
                           });
}

// (J(x) - R) grad H + s assembled as a dense real matrix over the energy
// variables, then divided by storage; angle rates are omega.
std::vector<double> matrix_form(std::span<const double> x, const PowerNetwork& net) {
    const std::size_t n = x.size();
    Eigen::MatrixXd Jm = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd R = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd storage = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    const auto& W = net.network_matrix();
    const auto& ports = net.ports();
    auto out_slot = [&](std::size_t k) { return ports[k].kind == PortKind::Sg ? ports[k].offset + 1 : ports[k].offset; };
    auto idx = [](std::size_t i) { return static_cast<Eigen::Index>(i); };

    for (std::size_t k = 0; k < ports.size(); ++k) {
        for (std::size_t j = 0; j < ports.size(); ++j) {
            if (W(k, j) == 0) continue;
            for (std::size_t c = 0; c < 2; ++c) Jm(idx(out_slot(k) + c), idx(out_slot(j) + c)) = W(k, j);
        }
        const Port& p = ports[k];
        const Edge& e = net.edges()[p.edge];
        const std::size_t o = p.offset;
        switch (p.kind) {
            case PortKind::Sg: {
                const auto& sg = std::get<SgParams>(e.params);
                const cplx g = cplx(0.0, -sg.psi) * std::polar(1.0, x[o + 3]);
                Jm(idx(o + 1), idx(o)) = g.real();
                Jm(idx(o + 2), idx(o)) = g.imag();
                Jm(idx(o), idx(o + 1)) = -g.real();
                Jm(idx(o), idx(o + 2)) = -g.imag();
                R(idx(o)) = sg.F;
                R(idx(o + 1)) = R(idx(o + 2)) = sg.Rs;
                s(idx(o)) = sg.T0;
                storage(idx(o)) = sg.J;
                storage(idx(o + 1)) = storage(idx(o + 2)) = sg.Ls;
                break;
            }
            case PortKind::Shunt: {
                const auto& sh = std::get<ShuntParams>(e.params);
                storage(idx(o)) = storage(idx(o + 1)) = sh.C;
                if (const auto* y = std::get_if<AdmittanceLoad>(&sh.load)) {
                    R(idx(o)) = R(idx(o + 1)) = y->Y.real();
                    Jm(idx(o), idx(o + 1)) = y->Y.imag();
                    Jm(idx(o + 1), idx(o)) = -y->Y.imag();
                }
                break;
            }
            case PortKind::Line: {
                const auto& ln = std::get<LineParams>(e.params);
                storage(idx(o)) = storage(idx(o + 1)) = ln.L;
                R(idx(o)) = R(idx(o + 1)) = ln.R;
                break;
            }
            case PortKind::Load: {
                const auto& rl = std::get<RlLoad>(std::get<ShuntParams>(e.params).load);
                storage(idx(o)) = storage(idx(o + 1)) = rl.L;
                R(idx(o)) = R(idx(o + 1)) = rl.R;
                break;
            }
        }
    }
    REQUIRE((Jm + Jm.transpose()).norm() == 0.0);

    Eigen::VectorXd grad = Eigen::Map<const Eigen::VectorXd>(x.data(), idx(n));
    for (const Port& p : ports) {
        if (p.kind == PortKind::Sg) grad(idx(p.offset + 3)) = 0.0;
    }
    const Eigen::VectorXd energy_rate = Jm * grad - R.cwiseProduct(grad) + s;
    std::vector<double> dx(n);
    for (std::size_t i = 0; i < n; ++i) dx[i] = energy_rate(idx(i)) / storage(idx(i));
    for (const Port& p : ports) {
        if (p.kind == PortKind::Sg) dx[p.offset + 3] = x[p.offset];
    }
    return dx;
}

Trajectory sampled(const PowerNetwork& net, double spacing, std::size_t n,
                   const std::function<std::vector<double>(double)>& state) {
    Trajectory traj;
    traj.dim = net.state_size();
    for (std::size_t i = 0; i < n; ++i) {
        const double t = spacing * static_cast<double>(i);
        traj.times.push_back(t);
        const auto x = state(t);
        traj.states.insert(traj.states.end(), x.begin(), x.end());
    }
    return traj;
}

}  // namespace

TEST_CASE("generator with no flux and no current") {
    const PowerNetwork net = sg_on_bus(unit_sg());
    std::vector<double> x(net.state_size(), 0.0);
    x[0] = 1.0;           // omega
    x[4] = 0.6;           // V alpha
    x[5] = -0.2;          // V beta
    const auto dx = rhs(0.0, x, net);
    CHECK(dx[0] == doctest::Approx(-0.5 / 2.0));
    CHECK(dx[3] == 1.0);
    CHECK(dx[1] == doctest::Approx(0.6 / 0.25));
    CHECK(dx[2] == doctest::Approx(-0.2 / 0.25));
}

TEST_CASE("isolated capacitor with conductance decays") {
    const PowerNetwork net(1, {{ShuntParams{2.0, AdmittanceLoad{{3.0, 0.0}}}, BusId{0}, kGround}});
    const std::vector<double> x = {1.0, 0.0};
    const auto dx = rhs(0.0, x, net);
    CHECK(dx[0] == doctest::Approx(-1.5));
    CHECK(dx[1] == 0.0);
}

TEST_CASE("vector field equals the matrix form") {
    for (const PowerNetwork& net : {two_machine_default(), mixed_network()}) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            auto x = uniform_state(net.state_size(), seed, 100.0);
            for (double& v : x) v -= 50.0;
            const auto dx = rhs(0.0, x, net);
            const auto ref = matrix_form(x, net);
            double scale = 0.0;
            for (double v : ref) scale = std::max(scale, std::abs(v));
            for (std::size_t i = 0; i < dx.size(); ++i) {
                CAPTURE(i);
                CHECK(std::abs(dx[i] - ref[i]) <= 1e-12 * std::max(std::abs(ref[i]), 1e-3 * scale));
            }
        }
    }
}

TEST_CASE("rhs rejects a wrong-sized state and non-finite derivatives") {
    const PowerNetwork net = two_machine_default();
    std::vector<double> x(net.state_size() - 1, 0.0);
    CHECK_THROWS_AS((void)rhs(0.0, x, net), DimensionMismatch);
    std::vector<double> y(net.state_size(), 0.0);
    y[4] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS((void)rhs(0.0, y, net), NonFinite);
}

TEST_CASE("hamiltonian parts") {
    SUBCASE("zero state") {
        const PowerNetwork net = two_machine_default();
        const auto e = hamiltonian(std::vector<double>(net.state_size(), 0.0), net);
        CHECK(e.total == 0.0);
        CHECK(e.source_power == 0.0);
        CHECK(e.dissipation == 0.0);
        for (double p : e.per_port) CHECK(p == 0.0);
    }
    SUBCASE("one inductor") {
        const PowerNetwork net(1, {{ShuntParams{1.0, RlLoad{1.0, 2.0}}, BusId{0}, kGround}});
        const std::vector<double> x = {0.0, 0.0, 1.0, 0.0};
        const auto e = hamiltonian(x, net);
        REQUIRE(e.per_port.size() == 2);
        CHECK(e.per_port[1] == 1.0);
        CHECK(e.total == 1.0);
        CHECK(e.dissipation == 1.0);
    }
}

TEST_CASE("gradient") {
    const PowerNetwork net = mixed_network();
    CHECK(gradient(std::vector<double>(net.state_size(), 0.0), net) == std::vector<double>(net.state_size(), 0.0));

    std::vector<double> x(net.state_size(), 0.0);
    x[0] = 3.0;
    CHECK(gradient(x, net)[0] == 3.0);

    // Central differences in the energy variables storage * x.
    const auto storage = storage_slots(net);
    std::vector<double> slot_storage(net.state_size(), 0.0);
    std::size_t s = 0;
    for (const Port& p : net.ports()) {
        if (p.kind == PortKind::Sg) {
            slot_storage[p.offset] = storage[s++];
            slot_storage[p.offset + 1] = slot_storage[p.offset + 2] = storage[s++];
        } else {
            slot_storage[p.offset] = slot_storage[p.offset + 1] = storage[s++];
        }
    }
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto y = uniform_state(net.state_size(), seed, 2.0);
        const auto g = gradient(y, net);
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (slot_storage[i] == 0.0) {
                CHECK(g[i] == 0.0);
                continue;
            }
            const double h = 1e-6;
            auto up = y, dn = y;
            up[i] += h / slot_storage[i];
            dn[i] -= h / slot_storage[i];
            const double fd = (total_energy(up, net) - total_energy(dn, net)) / (2 * h);
            CHECK(std::abs(fd - g[i]) < 1e-6 * std::max(1.0, std::abs(g[i])));
        }
    }
}

TEST_CASE("electrical torque") {
    CHECK(electrical_torque(2.0, 0.3, {0.0, 0.0}) == 0.0);
    CHECK(electrical_torque(1.0, 0.0, {0.0, -1.0}) == doctest::Approx(1.0));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 100; ++i) {
        const double psi = std::abs(u(rng)), theta = u(rng), omega = u(rng);
        const cplx I{u(rng), u(rng)};
        const double power = (-psi * (cplx(0.0, omega) * std::polar(1.0, theta)) * std::conj(I)).real();
        CHECK(electrical_torque(psi, theta, I) == doctest::Approx(power / omega).epsilon(1e-12));
    }
}

TEST_CASE("power balance holds pointwise and H grows no faster than the source") {
    for (const PowerNetwork& net : {two_machine_default(), mixed_network()}) {
        const auto storage = storage_slots(net);
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto x = uniform_state(net.state_size(), seed, 100.0);
            const auto dx = rhs(0.0, x, net);
            // dH/dt = sum storage * x * dx over energy slots.
            double dH = 0.0;
            std::size_t s = 0;
            for (const Port& p : net.ports()) {
                const std::size_t o = p.offset;
                if (p.kind == PortKind::Sg) {
                    dH += storage[s++] * x[o] * dx[o];
                    dH += storage[s++] * (x[o + 1] * dx[o + 1] + x[o + 2] * dx[o + 2]);
                } else {
                    dH += storage[s++] * (x[o] * dx[o] + x[o + 1] * dx[o + 1]);
                }
            }
            const auto e = hamiltonian(x, net);
            CHECK(dH == doctest::Approx(e.source_power - e.dissipation).epsilon(1e-10));
            CHECK(dH <= e.source_power * (1 + 1e-12));
        }
    }
}

TEST_CASE("energy balance residual") {
    SUBCASE("analytic RC decay") {
        const double C = 0.5, G = 2.0;
        const PowerNetwork net(1, {{ShuntParams{C, AdmittanceLoad{{G, 0.0}}}, BusId{0}, kGround}});
        const auto traj = sampled(net, 1e-3, 2001, [&](double t) {
            const double a = std::exp(-G / C * t);
            return std::vector<double>{3.0 * a, -1.0 * a};
        });
        const auto r = energy_balance_residual(traj, net);
        CHECK(r.residual.size() == 1997);
        double max_diss = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i) max_diss = std::max(max_diss, hamiltonian(traj.state(i), net).dissipation);
        CHECK(r.max_abs < 1e-8 * max_diss);
    }
    SUBCASE("equilibrium of an unforced dissipative net") {
        const PowerNetwork net = mixed_network();
        const auto traj = sampled(net, 0.01, 10, [&](double) { return std::vector<double>(net.state_size(), 0.0); });
        const auto r = energy_balance_residual(traj, net);
        for (double v : r.residual) CHECK(v == 0.0);
    }
    SUBCASE("grid errors") {
        const PowerNetwork net(1, {{ShuntParams{1.0, AdmittanceLoad{{1.0, 0.0}}}, BusId{0}, kGround}});
        auto traj = sampled(net, 0.1, 4, [](double) { return std::vector<double>{1.0, 0.0}; });
        CHECK_THROWS_AS((void)energy_balance_residual(traj, net), GridError);
        traj = sampled(net, 0.1, 6, [](double) { return std::vector<double>{1.0, 0.0}; });
        traj.times[3] += 0.05;
        CHECK_THROWS_AS((void)energy_balance_residual(traj, net), GridError);
    }
    SUBCASE("streaming monitor agrees with the batch residual") {
        const PowerNetwork net = mixed_network();
        const auto traj = sampled(net, 0.01, 50, [&](double t) {
            auto x = uniform_state(net.state_size(), 5, 1.0);
            for (double& v : x) v *= std::cos(3.0 * t + v);
            return x;
        });
        const auto batch = energy_balance_residual(traj, net);
        EnergyBalanceMonitor mon(net, 0.01);
        for (std::size_t i = 0; i < traj.size(); ++i) mon.observe(traj.times[i], traj.state(i));
        CHECK(mon.evaluated() == batch.residual.size());
        CHECK(mon.max_abs_residual() == doctest::Approx(batch.max_abs).epsilon(1e-9));
    }
}

TEST_CASE("hessian floor of the two-machine network") {
    const PowerNetwork net = two_machine_default();
    // Largest storage is the inertia J.
    CHECK(hessian_floor(net) == doctest::Approx(1.0 / 2.846e4).epsilon(1e-15));
}
