#include "phnet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "phnet/errors.hpp"

namespace phnet {

namespace {

using cplx = std::complex<double>;

cplx load_pair(std::span<const double> x, std::size_t at) { return {x[at], x[at + 1]}; }

void store_pair(std::span<double> x, std::size_t at, cplx v) {
    x[at] = v.real();
    x[at + 1] = v.imag();
}

/// Co-state carried on the port's output: I for generators and inductors, V for capacitors.
std::size_t output_slot(const Port& port) { return port.kind == PortKind::Sg ? port.offset + 1 : port.offset; }

void check_size(std::span<const double> x, const PowerNetwork& net) {
    if (x.size() != net.state_size()) {
        throw DimensionMismatch("state has " + std::to_string(x.size()) + " entries, network needs " +
                                std::to_string(net.state_size()));
    }
}

}  // namespace

double pole_factor(const SgParams& sg, const PowerNetwork& net) {
    return net.options().pole_pair_scaling ? sg.p : 1.0;
}

double electrical_torque(double psi, double theta, cplx current) {
    return (cplx(0.0, psi) * std::polar(1.0, -theta) * current).real();
}

void rhs(double /*t*/, std::span<const double> x, const PowerNetwork& net, std::span<double> out, FieldTerms terms) {
    check_size(x, net);
    const auto& ports = net.ports();
    const auto& edges = net.edges();
    const auto& couplings = net.couplings();

    for (std::size_t k = 0; k < ports.size(); ++k) {
        const Port& port = ports[k];
        cplx u{0.0, 0.0};
        for (const auto& c : couplings[k]) u += static_cast<double>(c.sign) * load_pair(x, output_slot(ports[c.port]));

        const Edge& edge = edges[port.edge];
        const std::size_t o = port.offset;
        switch (port.kind) {
            case PortKind::Sg: {
                const auto& sg = std::get<SgParams>(edge.params);
                const double p = pole_factor(sg, net);
                const double omega = x[o];
                const cplx current = load_pair(x, o + 1);
                const cplx rot = std::polar(1.0, p * x[o + 3]);
                // Internal EMF -j psi (p omega) e^{j p theta}; torque is its power over omega.
                const cplx emf = cplx(0.0, -sg.psi * p * omega) * rot;
                const double te = p * (cplx(0.0, sg.psi) * std::conj(rot) * current).real();
                double domega = -te;
                cplx dcurrent = emf + u;
                if (terms.damping) {
                    domega -= sg.F * omega;
                    dcurrent -= sg.Rs * current;
                }
                if (terms.source) domega += sg.T0;
                out[o] = domega / sg.J;
                store_pair(out, o + 1, dcurrent / sg.Ls);
                out[o + 3] = omega;
                break;
            }
            case PortKind::Shunt: {
                const auto& sh = std::get<ShuntParams>(edge.params);
                const cplx v = load_pair(x, o);
                cplx dv = u;
                if (const auto* y = std::get_if<AdmittanceLoad>(&sh.load)) {
                    // Re{Y} dissipates; the susceptance is a conservative rotation.
                    if (terms.damping) dv -= y->Y.real() * v;
                    dv -= cplx(0.0, y->Y.imag()) * v;
                }
                store_pair(out, o, dv / sh.C);
                break;
            }
            case PortKind::Line:
            case PortKind::Load: {
                double R = 0.0;
                double L = 0.0;
                if (port.kind == PortKind::Line) {
                    const auto& ln = std::get<LineParams>(edge.params);
                    R = ln.R;
                    L = ln.L;
                } else {
                    const auto& rl = std::get<RlLoad>(std::get<ShuntParams>(edge.params).load);
                    R = rl.R;
                    L = rl.L;
                }
                const cplx i = load_pair(x, o);
                cplx di = u;
                if (terms.damping) di -= R * i;
                store_pair(out, o, di / L);
                break;
            }
        }
    }

    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!std::isfinite(out[i])) {
            throw NonFinite("derivative slot " + std::to_string(i) + " is not finite");
        }
    }
}

std::vector<double> rhs(double t, std::span<const double> x, const PowerNetwork& net, FieldTerms terms) {
    std::vector<double> out(net.state_size());
    rhs(t, x, net, out, terms);
    return out;
}

std::vector<double> conservative_field(std::span<const double> x, const PowerNetwork& net) {
    std::vector<double> out = rhs(0.0, x, net, FieldTerms{false, false});
    const auto storage = storage_slots(net);
    std::size_t s = 0;
    for (const Port& port : net.ports()) {
        const std::size_t o = port.offset;
        if (port.kind == PortKind::Sg) {
            out[o] *= storage[s++];
            out[o + 1] *= storage[s];
            out[o + 2] *= storage[s++];
            out[o + 3] = 0.0;
        } else {
            out[o] *= storage[s];
            out[o + 1] *= storage[s++];
        }
    }
    return out;
}

namespace {

/// Stored energy, source power and dissipation without allocating. Per-port
/// parts go to `parts` when it is non-null.
void energy_terms(std::span<const double> x, const PowerNetwork& net, EnergyBreakdown& e,
                  std::vector<double>* parts) {
    for (const Port& port : net.ports()) {
        const std::size_t o = port.offset;
        const Edge& edge = net.edges()[port.edge];
        const double m2 = x[o] * x[o] + x[o + 1] * x[o + 1];
        double part = 0.0;
        switch (port.kind) {
            case PortKind::Sg: {
                const auto& sg = std::get<SgParams>(edge.params);
                const double omega = x[o];
                const double i2 = x[o + 1] * x[o + 1] + x[o + 2] * x[o + 2];
                part = 0.5 * sg.J * omega * omega + 0.5 * sg.Ls * i2;
                e.source_power += sg.T0 * omega;
                e.dissipation += sg.F * omega * omega + sg.Rs * i2;
                break;
            }
            case PortKind::Shunt: {
                const auto& sh = std::get<ShuntParams>(edge.params);
                part = 0.5 * sh.C * m2;
                if (const auto* y = std::get_if<AdmittanceLoad>(&sh.load)) e.dissipation += y->Y.real() * m2;
                break;
            }
            case PortKind::Line: {
                const auto& ln = std::get<LineParams>(edge.params);
                part = 0.5 * ln.L * m2;
                e.dissipation += ln.R * m2;
                break;
            }
            case PortKind::Load: {
                const auto& rl = std::get<RlLoad>(std::get<ShuntParams>(edge.params).load);
                part = 0.5 * rl.L * m2;
                e.dissipation += rl.R * m2;
                break;
            }
        }
        if (parts) parts->push_back(part);
        e.total += part;
    }
}

}  // namespace

EnergyBreakdown hamiltonian(std::span<const double> x, const PowerNetwork& net) {
    check_size(x, net);
    EnergyBreakdown e;
    e.per_port.reserve(net.ports().size());
    energy_terms(x, net, e, &e.per_port);
    return e;
}

double total_energy(std::span<const double> x, const PowerNetwork& net) {
    check_size(x, net);
    EnergyBreakdown e;
    energy_terms(x, net, e, nullptr);
    return e.total;
}

std::vector<double> gradient(std::span<const double> x, const PowerNetwork& net) {
    check_size(x, net);
    std::vector<double> g(x.begin(), x.end());
    for (const Port& port : net.ports()) {
        if (port.kind == PortKind::Sg) g[port.offset + 3] = 0.0;
    }
    return g;
}

double hessian_floor(const PowerNetwork& net) {
    double floor = std::numeric_limits<double>::infinity();
    for (double s : storage_slots(net)) floor = std::min(floor, 1.0 / s);
    return floor;
}

void attach_derived(Trajectory& traj, const PowerNetwork& net) {
    const std::size_t n = traj.size();
    traj.hamiltonian.resize(n);
    traj.source.resize(n);
    traj.dissipation.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto e = hamiltonian(traj.state(i), net);
        traj.hamiltonian[i] = e.total;
        traj.source[i] = e.source_power;
        traj.dissipation[i] = e.dissipation;
    }
}

namespace {

double central_difference(const double* h, double spacing) {
    return (h[0] - 8.0 * h[1] + 8.0 * h[3] - h[4]) / (12.0 * spacing);
}

}  // namespace

ResidualSeries energy_balance_residual(const Trajectory& traj, const PowerNetwork& net) {
    const std::size_t n = traj.size();
    if (n < 5) throw GridError("energy balance needs at least 5 samples, got " + std::to_string(n));
    const double spacing = (traj.times.back() - traj.times.front()) / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
        const double d = traj.times[i] - traj.times[i - 1];
        if (std::abs(d - spacing) > 1e-6 * spacing) throw GridError("energy balance needs a uniform time grid");
    }

    std::vector<double> h(n);
    std::vector<double> net_power(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (traj.has_derived()) {
            h[i] = traj.hamiltonian[i];
            net_power[i] = traj.source[i] - traj.dissipation[i];
        } else {
            const auto e = hamiltonian(traj.state(i), net);
            h[i] = e.total;
            net_power[i] = e.source_power - e.dissipation;
        }
    }

    ResidualSeries out;
    out.times.reserve(n - 4);
    out.residual.reserve(n - 4);
    for (std::size_t i = 2; i + 2 < n; ++i) {
        const double r = central_difference(&h[i - 2], spacing) - net_power[i];
        out.times.push_back(traj.times[i]);
        out.residual.push_back(r);
        out.max_abs = std::max(out.max_abs, std::abs(r));
    }
    return out;
}

EnergyBalanceMonitor::EnergyBalanceMonitor(const PowerNetwork& net, double spacing) : net_(&net), spacing_(spacing) {}

void EnergyBalanceMonitor::observe(double t, std::span<const double> x) {
    check_size(x, *net_);
    EnergyBreakdown e;
    energy_terms(x, *net_, e, nullptr);
    std::shift_left(std::begin(h_), std::end(h_), 1);
    std::shift_left(std::begin(t_), std::end(t_), 1);
    t_[4] = t;
    std::shift_left(std::begin(net_power_), std::end(net_power_), 1);
    h_[4] = e.total;
    net_power_[4] = e.source_power - e.dissipation;
    peak_source_ = std::max(peak_source_, std::abs(e.source_power));
    peak_dissipation_ = std::max(peak_dissipation_, e.dissipation);
    if (++count_ >= 5) {
        const double r = central_difference(h_, spacing_) - net_power_[2];
        if (std::abs(r) > max_abs_) {
            max_abs_ = std::abs(r);
            t_max_ = t_[2];
        }
        ++evaluated_;
    }
}

}  // namespace phnet
