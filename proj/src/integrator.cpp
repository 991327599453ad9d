#include "phnet/integrator.hpp"

#include <sstream>

#include "phnet/dynamics.hpp"

namespace phnet {

std::vector<std::string> validate_config(const IntegratorConfig& cfg) {
    std::vector<std::string> out;
    if (!(cfg.sample_every > 0.0)) out.push_back("sample_every must be > 0");
    if (const auto* rk4 = std::get_if<Rk4Config>(&cfg.method)) {
        if (!(rk4->dt > 0.0)) out.push_back("dt must be > 0");
    } else {
        const auto& ad = std::get<Rk45Config>(cfg.method);
        if (!(ad.abs_tol > 0.0)) out.push_back("abs_tol must be > 0");
        if (!(ad.rel_tol > 0.0)) out.push_back("rel_tol must be > 0");
        if (!(ad.dt_min > 0.0)) out.push_back("dt_min must be > 0");
        if (!(ad.dt_min <= ad.dt_max)) out.push_back("dt_min must not exceed dt_max");
    }
    return out;
}

Trajectory integrate(const PowerNetwork& net, std::span<const double> x0, double t_begin, double t_end,
                     const IntegratorConfig& cfg, const StepObserver& observer, IntegrationStats* stats) {
    if (auto findings = validate_network(net); !findings.empty()) {
        std::ostringstream os;
        os << "invalid network:";
        for (const auto& f : findings) os << "\n  " << f;
        throw StructuralError(os.str());
    }
    if (x0.size() != net.state_size()) {
        throw DimensionMismatch("initial state has " + std::to_string(x0.size()) + " entries, network needs " +
                                std::to_string(net.state_size()));
    }
    auto field = [&net](double t, std::span<const double> x, std::span<double> dx) { rhs(t, x, net, dx); };
    Trajectory traj = integrate_field(field, x0, t_begin, t_end, cfg, observer, stats);
    if (cfg.derived_channels) attach_derived(traj, net);
    return traj;
}

Trajectory decimate(const Trajectory& traj, std::size_t stride) {
    if (stride == 0) throw Error("decimation stride must be >= 1");
    Trajectory out;
    out.dim = traj.dim;
    const bool derived = traj.has_derived();
    auto keep = [&](std::size_t i) {
        out.times.push_back(traj.times[i]);
        const auto s = traj.state(i);
        out.states.insert(out.states.end(), s.begin(), s.end());
        if (derived) {
            out.hamiltonian.push_back(traj.hamiltonian[i]);
            out.source.push_back(traj.source[i]);
            out.dissipation.push_back(traj.dissipation[i]);
        }
    };
    for (std::size_t i = 0; i < traj.size(); i += stride) keep(i);
    if (!traj.empty() && (traj.size() - 1) % stride != 0) keep(traj.size() - 1);
    return out;
}

}  // namespace phnet
