#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "phnet/dynamics.hpp"
#include "phnet/errors.hpp"
#include "phnet/network.hpp"
#include "phnet/scenarios.hpp"

using namespace phnet;

namespace {

SgParams small_sg() { return SgParams{10.0, 1.0, 5.0, 0.1, 0.01, 1.0, 1.0}; }

// Capacitor rows from KCL: -1 for an edge leaving the bus, +1 for one
// entering it; every other entry follows from skew symmetry.
std::vector<std::vector<int>> incidence_oracle(const PowerNetwork& net) {
    const std::size_t n = net.ports().size();
    std::vector<std::vector<int>> W(n, std::vector<int>(n, 0));
    std::vector<std::size_t> cap_port(net.bus_count());
    for (std::size_t k = 0; k < n; ++k) {
        const Port& p = net.ports()[k];
        if (p.kind == PortKind::Shunt) cap_port[net.edges()[p.edge].from->index] = k;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const Port& p = net.ports()[k];
        if (p.kind == PortKind::Shunt) continue;
        const Edge& e = net.edges()[p.edge];
        Terminal from = e.from, to = e.to;
        if (p.kind == PortKind::Load) to = kGround;
        if (from) {
            W[cap_port[from->index]][k] = -1;
            W[k][cap_port[from->index]] = 1;
        }
        if (to) {
            W[cap_port[to->index]][k] = 1;
            W[k][cap_port[to->index]] = -1;
        }
    }
    return W;
}

PowerNetwork random_radial(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> nbus(1, 7);
    std::uniform_real_distribution<double> val(0.5, 5.0);
    std::bernoulli_distribution coin(0.5);
    const std::size_t nb = nbus(rng);
    std::vector<Edge> edges;
    for (std::size_t b = 0; b < nb; ++b) {
        ShuntParams sh{val(rng), AdmittanceLoad{{val(rng), 0.0}}};
        if (coin(rng)) sh.load = RlLoad{val(rng), val(rng)};
        edges.push_back({sh, BusId{b}, kGround});
    }
    for (std::size_t b = 1; b < nb; ++b) {
        const std::size_t parent = std::uniform_int_distribution<std::size_t>(0, b - 1)(rng);
        const bool flip = coin(rng);
        edges.push_back({LineParams{val(rng), val(rng)}, BusId{flip ? b : parent}, BusId{flip ? parent : b}});
    }
    const std::size_t sgs = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    for (std::size_t g = 0; g < sgs; ++g) {
        edges.push_back({small_sg(), BusId{std::uniform_int_distribution<std::size_t>(0, nb - 1)(rng)}, kGround});
    }
    std::shuffle(edges.begin(), edges.end(), rng);
    return PowerNetwork(nb, std::move(edges));
}

}  // namespace

TEST_CASE("two-machine network matrix matches the published interconnection") {
    const int expected[7][7] = {
        {0, 0, 1, 0, 0, 0, 0},   {0, 0, 0, 1, 0, 0, 0},  {-1, 0, 0, 0, 0, -1, 0}, {0, -1, 0, 0, 0, 0, -1},
        {0, 0, 0, 0, 0, 1, 1},   {0, 0, 1, 0, -1, 0, 0}, {0, 0, 0, 1, -1, 0, 0},
    };
    const PowerNetwork net = two_machine_default();
    const NetworkMatrix W = assemble_network_matrix(net);
    REQUIRE(W.n == 10);
    for (int i = 0; i < 7; ++i) {
        for (int j = 0; j < 7; ++j) CHECK(W(i, j) == expected[i][j]);
    }
    CHECK(W.is_skew_symmetric());
    // RL-branch loads hang off their own capacitor only.
    for (std::size_t k = 7; k < 10; ++k) {
        const std::size_t cap = net.ports()[k].edge;
        for (std::size_t j = 0; j < 10; ++j) CHECK(W(k, j) == (j == cap ? 1 : 0));
    }
    CHECK(net.port_name(0) == "sg1");
    CHECK(net.port_name(4) == "sh5");
    CHECK(net.port_name(9) == "ld5");
    CHECK(net.state_size() == 24);
}

TEST_CASE("single generator on one capacitor bus") {
    const PowerNetwork net(1, {{small_sg(), BusId{0}, kGround}, {ShuntParams{1.0, AdmittanceLoad{{1.0, 0.0}}}, BusId{0}, kGround}});
    const NetworkMatrix W = assemble_network_matrix(net);
    REQUIRE(W.n == 2);
    CHECK(W(0, 0) == 0);
    CHECK(W(0, 1) == 1);
    CHECK(W(1, 0) == -1);
    CHECK(W(1, 1) == 0);
}

TEST_CASE("random radial networks are valid, skew and match the incidence oracle") {
    std::mt19937_64 rng(20240611);
    for (int trial = 0; trial < 100; ++trial) {
        const PowerNetwork net = random_radial(rng);
        CAPTURE(trial);
        REQUIRE(validate_network(net).empty());
        const NetworkMatrix W = assemble_network_matrix(net);
        CHECK(W.is_skew_symmetric());
        const auto oracle = incidence_oracle(net);
        for (std::size_t i = 0; i < W.n; ++i) {
            for (std::size_t j = 0; j < W.n; ++j) {
                CHECK(W(i, j) == oracle[i][j]);
                CHECK(std::abs(W(i, j)) <= 1);
            }
        }
    }
}

TEST_CASE("edge permutation permutes the network matrix") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const PowerNetwork a = random_radial(rng);
        std::vector<std::size_t> perm(a.edges().size());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Edge> edges;
        for (std::size_t e : perm) edges.push_back(a.edges()[e]);
        const PowerNetwork b(a.bus_count(), edges);

        // Map each port of b to the port of a with the same (edge, kind).
        std::vector<std::size_t> map(b.ports().size());
        for (std::size_t k = 0; k < b.ports().size(); ++k) {
            const Port& pb = b.ports()[k];
            for (std::size_t m = 0; m < a.ports().size(); ++m) {
                const Port& pa = a.ports()[m];
                if (pa.edge == perm[pb.edge] && pa.kind == pb.kind) map[k] = m;
            }
        }
        const auto& Wa = a.network_matrix();
        const auto& Wb = b.network_matrix();
        for (std::size_t i = 0; i < Wb.n; ++i) {
            for (std::size_t j = 0; j < Wb.n; ++j) CHECK(Wb(i, j) == Wa(map[i], map[j]));
        }
    }
}

TEST_CASE("validation") {
    CHECK(validate_network(two_machine_default()).empty());

    SUBCASE("zero capacitance names the bus") {
        auto edges = two_machine_default().edges();
        std::get<ShuntParams>(edges[4].params).C = 0.0;
        const auto findings = validate_network(PowerNetwork(3, edges));
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].find("bus 2") != std::string::npos);
    }
    SUBCASE("two capacitors on one bus") {
        auto edges = two_machine_default().edges();
        edges.push_back({ShuntParams{1e-3, AdmittanceLoad{{1.0, 0.0}}}, BusId{1}, kGround});
        const auto findings = validate_network(PowerNetwork(3, edges));
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].find("bus 1") != std::string::npos);
    }
    SUBCASE("zero line resistance names the edge") {
        auto edges = two_machine_default().edges();
        std::get<LineParams>(edges[6].params).R = 0.0;
        const auto findings = validate_network(PowerNetwork(3, edges));
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].find("edge 7") != std::string::npos);
    }
    SUBCASE("bus without a capacitor cannot be assembled") {
        auto edges = two_machine_default().edges();
        edges.erase(edges.begin() + 2);
        const PowerNetwork net(3, edges);
        CHECK_FALSE(validate_network(net).empty());
        CHECK_THROWS_AS((void)assemble_network_matrix(net), StructuralError);
        CHECK_THROWS_AS((void)contraction_certificate(net), StructuralError);
    }
    SUBCASE("disconnected buses") {
        auto edges = two_machine_default().edges();
        edges.pop_back();
        const auto findings = validate_network(PowerNetwork(3, edges));
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].find("not connected") != std::string::npos);
    }
    SUBCASE("reactive admittance is a warning only") {
        const PowerNetwork net(1, {{small_sg(), BusId{0}, kGround},
                                   {ShuntParams{1.0, AdmittanceLoad{{1.0, 0.5}}}, BusId{0}, kGround}});
        CHECK(validate_network(net).empty());
        CHECK(network_warnings(net).size() == 1);
    }
}

TEST_CASE("certificate of a synthetic generator and capacitor") {
    // Hessian diagonal {1/J, 1/Ls, 1/C} = {2, 3, 3}; R diagonal {F, Rs, Y} = {4, 5, 5}.
    SgParams sg{0.5, 4.0, 1.0, 5.0, 1.0 / 3.0, 1.0, 1.0};
    const PowerNetwork net(1, {{sg, BusId{0}, kGround}, {ShuntParams{1.0 / 3.0, AdmittanceLoad{{5.0, 0.0}}}, BusId{0}, kGround}});
    const auto cert = contraction_certificate(net);
    CHECK(cert.hessian_floor_a == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(cert.lambda_min_R == 4.0);
    CHECK(cert.rate_c == doctest::Approx(8.0).epsilon(1e-15));
}

TEST_CASE("hessian floor is the smallest reciprocal storage") {
    SgParams sg{2.0, 1.0, 1.0, 1.0, 4.0, 1.0, 1.0};
    const PowerNetwork net(1, {{sg, BusId{0}, kGround}, {ShuntParams{8.0, AdmittanceLoad{{1.0, 0.0}}}, BusId{0}, kGround}});
    CHECK(hessian_floor(net) == 0.125);
    CHECK(hessian_floor(two_machine_default()) > 0.0);
}

TEST_CASE("two-machine certificate against a dense eigensolver") {
    const PowerNetwork net = two_machine_default();
    // Explicit block-diagonal Hessian and R over real slots (angles dropped).
    std::vector<double> hess, damp;
    for (const Edge& e : net.edges()) {
        if (const auto* sg = std::get_if<SgParams>(&e.params)) {
            hess.insert(hess.end(), {1 / sg->J, 1 / sg->Ls, 1 / sg->Ls});
            damp.insert(damp.end(), {sg->F, sg->Rs, sg->Rs});
        } else if (const auto* sh = std::get_if<ShuntParams>(&e.params)) {
            hess.insert(hess.end(), {1 / sh->C, 1 / sh->C});
            damp.insert(damp.end(), {0.0, 0.0});
        } else {
            const auto& ln = std::get<LineParams>(e.params);
            hess.insert(hess.end(), {1 / ln.L, 1 / ln.L});
            damp.insert(damp.end(), {ln.R, ln.R});
        }
    }
    for (const Edge& e : net.edges()) {
        if (const auto* sh = std::get_if<ShuntParams>(&e.params)) {
            const auto& rl = std::get<RlLoad>(sh->load);
            hess.insert(hess.end(), {1 / rl.L, 1 / rl.L});
            damp.insert(damp.end(), {rl.R, rl.R});
        }
    }
    const auto n = static_cast<Eigen::Index>(hess.size());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) H(i, i) = hess[static_cast<std::size_t>(i)];
    // Symmetric coupling-free Hessian, rotated to keep the eigensolver honest.
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::Random(n, n)).householderQ();
    const double a = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q * H * Q.transpose()).eigenvalues().minCoeff();

    std::vector<double> positive;
    for (double d : damp) {
        if (d > 0.0) positive.push_back(d);
    }
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(positive.size()), static_cast<Eigen::Index>(positive.size()));
    for (std::size_t i = 0; i < positive.size(); ++i) R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = positive[i];
    const double lr = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(R).eigenvalues().minCoeff();

    const auto cert = contraction_certificate(net);
    CHECK(cert.hessian_floor_a == doctest::Approx(a).epsilon(1e-10));
    CHECK(cert.lambda_min_R == doctest::Approx(lr).epsilon(1e-12));
    CHECK(cert.rate_c == doctest::Approx(a * lr).epsilon(1e-10));
    CHECK(cert.rate_c > 0.0);
}

TEST_CASE("remark estimate uses the heavy middle load") {
    // Reference frequency: no-load speed T0/F = 1e4 / 85.5601 rad/s.
    // Middle load 4 ohm + 1 H: Re Y = 4 / (16 + w^2) ~ 2.92e-4 S.
    // Outer loads 1 kohm + 10 H: Re Y = 1000 / (1e6 + 100 w^2) ~ 4.23e-4 S.
    const PowerNetwork net = two_machine_default();
    const double w = 1e4 / 85.5601;
    const double re_y4 = 4.0 / (16.0 + w * w);
    const double re_y3 = 1000.0 / (1e6 + 100.0 * w * w);
    REQUIRE(re_y4 < re_y3);
    const auto cert = contraction_certificate(net);
    CHECK(cert.reference_omega == doctest::Approx(w).epsilon(1e-14));
    CHECK(cert.remark_estimate == doctest::Approx(re_y4 / 2.846e4).epsilon(1e-12));

    const auto at_zero = contraction_certificate(net, 0.0);
    CHECK(at_zero.remark_estimate == doctest::Approx(1e-3 / 2.846e4).epsilon(1e-12));
}
