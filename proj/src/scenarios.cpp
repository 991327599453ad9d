#include "phnet/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>
#include <type_traits>

#include "phnet/errors.hpp"
#include "phnet/random.hpp"

namespace phnet {

namespace {

SgParams table_sg() {
    SgParams sg;
    sg.J = 2.846e4;
    sg.F = 85.5601;
    sg.T0 = 1e4;
    sg.Rs = 1.542e-3;
    sg.Ls = 6.341e-3;
    sg.psi = 39.7877;
    sg.p = 4.0;
    return sg;
}

template <class Fn>
PowerNetwork map_edges(const PowerNetwork& net, Fn&& fn) {
    std::vector<Edge> edges = net.edges();
    for (Edge& e : edges) std::visit(fn, e.params);
    return PowerNetwork(net.bus_count(), std::move(edges), net.options());
}

}  // namespace

PowerNetwork two_machine_default() {
    const BusId left{0}, right{1}, middle{2};
    const LineParams line{3.0, 1.061};
    std::vector<Edge> edges = {
        {table_sg(), left, kGround},
        {table_sg(), right, kGround},
        {ShuntParams{50e-3, RlLoad{1000.0, 10.0}}, left, kGround},
        {ShuntParams{50e-3, RlLoad{1000.0, 10.0}}, right, kGround},
        {ShuntParams{100e-3, RlLoad{4.0, 1.0}}, middle, kGround},
        {line, left, middle},
        {line, right, middle},
    };
    return PowerNetwork(3, std::move(edges));
}

std::vector<std::string> validate_scenario(const Scenario& sc) {
    std::vector<std::string> out;
    if (sc.name.empty()) out.push_back("scenario name is empty");
    if (!(sc.horizon > 0.0) || !std::isfinite(sc.horizon)) out.push_back("horizon must be > 0");
    if (const auto* r = std::get_if<RandomStart>(&sc.initial); r && !(r->scale >= 0.0)) {
        out.push_back("random start scale must be >= 0");
    }
    for (auto& p : validate_config(sc.integrator)) out.push_back(std::move(p));
    for (auto& p : validate_network(sc.network)) out.push_back(std::move(p));
    return out;
}

Scenario case_variant(CaseKind kind, CaseScale scale) {
    Scenario sc;
    PowerNetwork net = two_machine_default();
    switch (kind) {
        case CaseKind::Symmetric:
            sc.name = "symmetric";
            sc.expected = Classification::Synchronized;
            break;
        case CaseKind::TorqueMismatch:
            sc.name = "torque-mismatch";
            net = set_torque_sg2(net, 1.5e4);
            sc.expected = Classification::LowFreqOscillation;
            break;
        case CaseKind::HighFlux:
            sc.name = "high-flux";
            net = scale_flux(net, 2.5);
            sc.expected = Classification::Collapse;
            break;
    }
    sc.initial = RandomStart{1, 100.0};
    IntegratorConfig cfg;
    cfg.method = Rk4Config{50e-6};
    if (scale == CaseScale::Desk) {
        sc.name += "-desk";
        net = scale_damping(net, kDeskDampingFactor);
        sc.horizon = 800.0;
        cfg.sample_every = 0.01;
    } else {
        sc.horizon = 8000.0;
        cfg.sample_every = 0.05;
    }
    sc.network = std::move(net);
    sc.integrator = cfg;
    return sc;
}

std::vector<Scenario> builtin_scenarios() {
    std::vector<Scenario> out;
    for (auto scale : {CaseScale::Full, CaseScale::Desk}) {
        for (auto kind : {CaseKind::Symmetric, CaseKind::TorqueMismatch, CaseKind::HighFlux}) {
            out.push_back(case_variant(kind, scale));
        }
    }
    return out;
}

std::optional<Scenario> find_scenario(const std::string& name) {
    for (auto& sc : builtin_scenarios()) {
        if (sc.name == name) return sc;
    }
    return std::nullopt;
}

std::vector<double> random_initial(const PowerNetwork& net, std::uint64_t seed, double scale) {
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw Error("random start scale must be finite and >= 0");
    return uniform_state(net.state_size(), seed, scale);
}

std::vector<double> steady_guess(const PowerNetwork& net) {
    std::vector<double> x(net.state_size(), 0.0);
    for (const Port& p : net.ports()) {
        if (p.kind != PortKind::Sg) continue;
        const auto& sg = std::get<SgParams>(net.edges()[p.edge].params);
        x[p.offset] = sg.T0 / sg.F;
    }
    return x;
}

std::vector<double> initial_state(const Scenario& sc) {
    if (const auto* r = std::get_if<RandomStart>(&sc.initial)) return random_initial(sc.network, r->seed, r->scale);
    return steady_guess(sc.network);
}

PowerNetwork scale_damping(const PowerNetwork& net, double k) {
    return map_edges(net, [k](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SgParams>) {
            p.F *= k;
            p.Rs *= k;
        } else if constexpr (std::is_same_v<T, ShuntParams>) {
            std::visit([k](auto& load) {
                if constexpr (std::is_same_v<std::decay_t<decltype(load)>, RlLoad>) {
                    load.R *= k;
                } else {
                    load.Y *= k;
                }
            }, p.load);
        } else {
            p.R *= k;
        }
    });
}

PowerNetwork scale_inertia(const PowerNetwork& net, double k) {
    return map_edges(net, [k](auto& p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, SgParams>) p.J *= k;
    });
}

PowerNetwork scale_flux(const PowerNetwork& net, double k) {
    return map_edges(net, [k](auto& p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, SgParams>) p.psi *= k;
    });
}

PowerNetwork set_torque_sg2(const PowerNetwork& net, double T0) {
    std::vector<Edge> edges = net.edges();
    int seen = 0;
    for (Edge& e : edges) {
        if (auto* sg = std::get_if<SgParams>(&e.params); sg && ++seen == 2) {
            sg->T0 = T0;
            return PowerNetwork(net.bus_count(), std::move(edges), net.options());
        }
    }
    throw StructuralError("network has fewer than two generators");
}

Trajectory simulate(const Scenario& sc, const StepObserver& observer) {
    if (auto problems = validate_scenario(sc); !problems.empty()) {
        std::ostringstream os;
        os << "invalid scenario '" << sc.name << "':";
        for (const auto& p : problems) os << "\n  " << p;
        throw StructuralError(os.str());
    }
    return integrate(sc.network, initial_state(sc), 0.0, sc.horizon, sc.integrator, observer);
}

double transient_time(const Trajectory& traj, double band) {
    if (!traj.has_derived()) throw GridError("transient time needs the H channel");
    const double end = traj.hamiltonian.back();
    const double limit = band * std::abs(end);
    std::size_t i = traj.size();
    while (i > 0 && std::abs(traj.hamiltonian[i - 1] - end) < limit) --i;
    return i == traj.size() ? traj.times.back() : traj.times[i];
}

const char* to_string(SweepParameter p) noexcept {
    switch (p) {
        case SweepParameter::DampingScale: return "damping";
        case SweepParameter::InertiaScale: return "inertia";
        case SweepParameter::TorqueSg2: return "torque-sg2";
        case SweepParameter::FluxScale: return "flux";
    }
    return "?";
}

std::optional<SweepParameter> sweep_parameter_from_string(const std::string& s) {
    for (auto p : {SweepParameter::DampingScale, SweepParameter::InertiaScale, SweepParameter::TorqueSg2,
                   SweepParameter::FluxScale}) {
        if (s == to_string(p)) return p;
    }
    return std::nullopt;
}

std::vector<std::string> validate_sweep(const SweepSpec& spec) {
    std::vector<std::string> out;
    if (spec.factors.empty()) out.push_back("sweep needs at least one factor");
    for (double f : spec.factors) {
        if (!(f > 0.0) || !std::isfinite(f)) out.push_back("sweep factor " + std::to_string(f) + " must be > 0");
    }
    for (auto& p : validate_scenario(spec.base)) out.push_back(std::move(p));
    return out;
}

Scenario sweep_leg(const SweepSpec& spec, double factor) {
    Scenario sc = spec.base;
    switch (spec.parameter) {
        case SweepParameter::DampingScale: sc.network = scale_damping(sc.network, factor); break;
        case SweepParameter::InertiaScale: sc.network = scale_inertia(sc.network, factor); break;
        case SweepParameter::TorqueSg2: sc.network = set_torque_sg2(sc.network, factor); break;
        case SweepParameter::FluxScale: sc.network = scale_flux(sc.network, factor); break;
    }
    std::ostringstream name;
    name << spec.base.name << '@' << to_string(spec.parameter) << '=' << factor;
    sc.name = name.str();
    return sc;
}

unsigned default_thread_count() {
    if (const char* env = std::getenv("PHNET_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned threads, const ClassifyOptions& classify) {
    if (auto problems = validate_sweep(spec); !problems.empty()) {
        std::ostringstream os;
        os << "invalid sweep:";
        for (const auto& p : problems) os << "\n  " << p;
        throw StructuralError(os.str());
    }
    if (threads == 0) threads = default_thread_count();
    threads = std::min<unsigned>(threads, static_cast<unsigned>(spec.factors.size()));

    std::vector<SweepRow> rows(spec.factors.size());
    std::vector<std::exception_ptr> errors(spec.factors.size());
    std::mutex next_mutex;
    std::size_t next = 0;

    auto worker = [&] {
        for (;;) {
            std::size_t i = 0;
            {
                std::lock_guard lock(next_mutex);
                if (next == spec.factors.size()) return;
                i = next++;
            }
            try {
                const Scenario leg = sweep_leg(spec, spec.factors[i]);
                const Trajectory traj = simulate(leg);
                const SteadyStateReport report = classify_steady_state(traj, leg.network, classify);
                rows[i] = {spec.factors[i], transient_time(traj), report.classification, traj.hamiltonian.back()};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    std::vector<std::thread> pool;
    for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return rows;
}

}  // namespace phnet
