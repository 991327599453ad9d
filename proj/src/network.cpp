#include "phnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "phnet/errors.hpp"

namespace phnet {

namespace {

std::string terminal_name(const Terminal& t) {
    return t ? "bus " + std::to_string(t->index) : std::string("ground");
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

const char* port_prefix(PortKind kind) noexcept {
    switch (kind) {
        case PortKind::Sg: return "sg";
        case PortKind::Shunt: return "sh";
        case PortKind::Line: return "ln";
        case PortKind::Load: return "ld";
    }
    return "?";
}

bool NetworkMatrix::is_skew_symmetric() const {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if ((*this)(i, j) != -(*this)(j, i)) return false;
        }
    }
    return true;
}

PowerNetwork::PowerNetwork(std::size_t bus_count, std::vector<Edge> edges, Options options)
    : bus_count_(bus_count), edges_(std::move(edges)), options_(options) {
    std::size_t offset = 0;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        PortKind kind = PortKind::Sg;
        switch (edges_[e].kind()) {
            case EdgeKind::Sg: kind = PortKind::Sg; break;
            case EdgeKind::Shunt: kind = PortKind::Shunt; break;
            case EdgeKind::Line: kind = PortKind::Line; break;
        }
        ports_.push_back({kind, e, e + 1, offset});
        offset += port_width(kind);
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const auto* sh = std::get_if<ShuntParams>(&edges_[e].params);
        if (sh && std::holds_alternative<RlLoad>(sh->load)) {
            ports_.push_back({PortKind::Load, e, e + 1, offset});
            offset += port_width(PortKind::Load);
        }
    }
    state_size_ = offset;

    try {
        matrix_ = assemble_network_matrix(*this);
        couplings_.resize(matrix_->n);
        for (std::size_t i = 0; i < matrix_->n; ++i) {
            for (std::size_t j = 0; j < matrix_->n; ++j) {
                if (int s = (*matrix_)(i, j); s != 0) couplings_[i].push_back({j, s});
            }
        }
    } catch (const StructuralError& err) {
        matrix_error_ = err.what();
    }
}

std::vector<BusId> PowerNetwork::buses() const {
    std::vector<BusId> out(bus_count_);
    for (std::size_t i = 0; i < bus_count_; ++i) out[i] = BusId{i};
    return out;
}

std::size_t PowerNetwork::sg_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(edges_.begin(), edges_.end(),
                                                  [](const Edge& e) { return e.kind() == EdgeKind::Sg; }));
}

const NetworkMatrix& PowerNetwork::network_matrix() const {
    if (!matrix_) throw StructuralError(matrix_error_);
    return *matrix_;
}

const std::vector<std::vector<PowerNetwork::Coupling>>& PowerNetwork::couplings() const {
    if (!matrix_) throw StructuralError(matrix_error_);
    return couplings_;
}

std::string PowerNetwork::port_name(std::size_t port) const {
    const Port& p = ports_.at(port);
    return port_prefix(p.kind) + std::to_string(p.label);
}

std::vector<std::string> validate_network(const PowerNetwork& net, const ValidationOptions& options) {
    std::vector<std::string> out;
    const auto& edges = net.edges();
    const std::size_t nb = net.bus_count();

    if (edges.empty() && !options.allow_empty) out.push_back("network has no edges");

    std::vector<int> caps_per_bus(nb, 0);
    auto check_terminal = [&](std::size_t e, const Terminal& t, const char* which) {
        if (t && t->index >= nb) {
            out.push_back("edge " + std::to_string(e + 1) + ": " + which + " endpoint " + terminal_name(t) +
                          " is undefined");
            return false;
        }
        return true;
    };

    for (std::size_t e = 0; e < edges.size(); ++e) {
        const Edge& edge = edges[e];
        const std::string tag = "edge " + std::to_string(e + 1);
        const bool from_ok = check_terminal(e, edge.from, "from");
        const bool to_ok = check_terminal(e, edge.to, "to");

        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, SgParams>) {
                    if (!positive(p.J)) out.push_back(tag + " (sg): J must be > 0");
                    if (!positive(p.F)) out.push_back(tag + " (sg): F must be > 0");
                    if (!positive(p.Rs)) out.push_back(tag + " (sg): Rs must be > 0");
                    if (!positive(p.Ls)) out.push_back(tag + " (sg): Ls must be > 0");
                    if (!(std::isfinite(p.psi) && p.psi >= 0.0)) out.push_back(tag + " (sg): psi must be >= 0");
                    if (!std::isfinite(p.T0)) out.push_back(tag + " (sg): T0 must be finite");
                    if (!positive(p.p)) out.push_back(tag + " (sg): p must be > 0");
                    if (!edge.from || edge.to) {
                        out.push_back(tag + " (sg): must run from a capacitor bus to ground");
                    }
                } else if constexpr (std::is_same_v<T, ShuntParams>) {
                    if (!positive(p.C)) {
                        out.push_back(tag + " (shunt at " + terminal_name(edge.from) + "): C must be > 0");
                    }
                    if (const auto* y = std::get_if<AdmittanceLoad>(&p.load)) {
                        if (!(std::isfinite(y->Y.real()) && y->Y.real() > 0.0) || !std::isfinite(y->Y.imag())) {
                            out.push_back(tag + " (shunt): Re{Y} must be > 0");
                        }
                    } else {
                        const auto& rl = std::get<RlLoad>(p.load);
                        if (!positive(rl.R)) out.push_back(tag + " (shunt): load R must be > 0");
                        if (!positive(rl.L)) out.push_back(tag + " (shunt): load L must be > 0");
                    }
                    if (!edge.from || edge.to) {
                        out.push_back(tag + " (shunt): must run from its bus to ground");
                    } else if (from_ok) {
                        ++caps_per_bus[edge.from->index];
                    }
                } else {
                    if (!positive(p.R)) out.push_back(tag + " (line): R must be > 0");
                    if (!positive(p.L)) out.push_back(tag + " (line): L must be > 0");
                    if (!options.lines_may_ground && (!edge.from || !edge.to)) {
                        out.push_back(tag + " (line): both endpoints must be capacitor buses");
                    }
                    if (edge.from && edge.to && *edge.from == *edge.to) {
                        out.push_back(tag + " (line): endpoints coincide");
                    }
                }
            },
            edge.params);
        (void)to_ok;
    }

    for (std::size_t b = 0; b < nb; ++b) {
        if (caps_per_bus[b] == 0) out.push_back("bus " + std::to_string(b) + ": no shunt capacitor");
        if (caps_per_bus[b] > 1) {
            out.push_back("bus " + std::to_string(b) + ": " + std::to_string(caps_per_bus[b]) +
                          " shunt capacitors (exactly one required)");
        }
    }

    // Connectivity over buses through lines, plus ground through SG/shunt edges.
    if (nb > 1) {
        std::vector<std::size_t> parent(nb);
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        auto find = [&](std::size_t i) {
            while (parent[i] != i) i = parent[i] = parent[parent[i]];
            return i;
        };
        for (const Edge& edge : edges) {
            if (edge.kind() != EdgeKind::Line || !edge.from || !edge.to) continue;
            if (edge.from->index >= nb || edge.to->index >= nb) continue;
            parent[find(edge.from->index)] = find(edge.to->index);
        }
        std::size_t components = 0;
        for (std::size_t b = 0; b < nb; ++b) components += find(b) == b ? 1 : 0;
        if (components > 1) out.push_back("network is not connected (" + std::to_string(components) + " islands)");
    }
    return out;
}

std::vector<std::string> network_warnings(const PowerNetwork& net) {
    std::vector<std::string> out;
    for (std::size_t e = 0; e < net.edges().size(); ++e) {
        const auto* sh = std::get_if<ShuntParams>(&net.edges()[e].params);
        if (!sh) continue;
        if (const auto* y = std::get_if<AdmittanceLoad>(&sh->load); y && y->Y.imag() != 0.0) {
            out.push_back("edge " + std::to_string(e + 1) +
                          ": admittance load with Im{Y} != 0 is frequency-independent in stationary coordinates");
        }
    }
    return out;
}

NetworkMatrix assemble_network_matrix(const PowerNetwork& net) {
    const auto& ports = net.ports();
    const auto& edges = net.edges();
    const std::size_t nb = net.bus_count();

    // The shunt port that carries each bus voltage.
    std::vector<std::optional<std::size_t>> bus_port(nb);
    for (std::size_t k = 0; k < ports.size(); ++k) {
        if (ports[k].kind != PortKind::Shunt) continue;
        const Edge& e = edges[ports[k].edge];
        if (!e.from || e.to) throw StructuralError("shunt edge " + std::to_string(k + 1) + " must run from a bus to ground");
        if (e.from->index >= nb) {
            throw StructuralError("shunt edge " + std::to_string(k + 1) + " references undefined bus " +
                                  std::to_string(e.from->index));
        }
        if (bus_port[e.from->index]) {
            throw StructuralError("bus " + std::to_string(e.from->index) + " has more than one shunt capacitor");
        }
        bus_port[e.from->index] = k;
    }
    for (std::size_t b = 0; b < nb; ++b) {
        if (!bus_port[b]) throw StructuralError("bus " + std::to_string(b) + " has no shunt capacitor");
    }

    NetworkMatrix W;
    W.n = ports.size();
    W.entries.assign(W.n * W.n, 0);
    auto set = [&](std::size_t r, std::size_t c, int v) { W.entries[r * W.n + c] = static_cast<std::int8_t>(v); };

    // A current-carrying port k (SG, line, load) between `from` and `to`:
    //   KVL  u_k = V_from - V_to
    //   KCL  capacitor at `from` loses I_k, capacitor at `to` gains it.
    auto connect = [&](std::size_t k, const Terminal& from, const Terminal& to) {
        for (const auto& [t, sign] : {std::pair{from, +1}, std::pair{to, -1}}) {
            if (!t) continue;
            if (t->index >= nb) {
                throw StructuralError("edge " + std::to_string(ports[k].label) + " references undefined bus " +
                                      std::to_string(t->index));
            }
            const std::size_t cap = *bus_port[t->index];
            set(k, cap, W(k, cap) + sign);
            set(cap, k, W(cap, k) - sign);
        }
    };

    for (std::size_t k = 0; k < ports.size(); ++k) {
        const Edge& e = edges[ports[k].edge];
        switch (ports[k].kind) {
            case PortKind::Shunt: break;
            case PortKind::Load: connect(k, e.from, kGround); break;
            case PortKind::Sg:
            case PortKind::Line: connect(k, e.from, e.to); break;
        }
    }
    return W;
}

std::vector<DampingSlot> damping_slots(const PowerNetwork& net) {
    std::vector<DampingSlot> out;
    const auto& edges = net.edges();
    for (std::size_t k = 0; k < net.ports().size(); ++k) {
        const Port& port = net.ports()[k];
        const Edge& e = edges[port.edge];
        switch (port.kind) {
            case PortKind::Sg: {
                const auto& sg = std::get<SgParams>(e.params);
                out.push_back({k, sg.F});
                out.push_back({k, sg.Rs});
                break;
            }
            case PortKind::Shunt: {
                const auto& sh = std::get<ShuntParams>(e.params);
                const auto* y = std::get_if<AdmittanceLoad>(&sh.load);
                out.push_back({k, y ? y->Y.real() : 0.0});
                break;
            }
            case PortKind::Line: out.push_back({k, std::get<LineParams>(e.params).R}); break;
            case PortKind::Load: {
                const auto& sh = std::get<ShuntParams>(e.params);
                out.push_back({k, std::get<RlLoad>(sh.load).R});
                break;
            }
        }
    }
    return out;
}

std::vector<double> storage_slots(const PowerNetwork& net) {
    std::vector<double> out;
    const auto& edges = net.edges();
    for (const Port& port : net.ports()) {
        const Edge& e = edges[port.edge];
        switch (port.kind) {
            case PortKind::Sg: {
                const auto& sg = std::get<SgParams>(e.params);
                out.push_back(sg.J);
                out.push_back(sg.Ls);
                break;
            }
            case PortKind::Shunt: out.push_back(std::get<ShuntParams>(e.params).C); break;
            case PortKind::Line: out.push_back(std::get<LineParams>(e.params).L); break;
            case PortKind::Load: out.push_back(std::get<RlLoad>(std::get<ShuntParams>(e.params).load).L); break;
        }
    }
    return out;
}

ContractionCertificate contraction_certificate(const PowerNetwork& net, std::optional<double> reference_omega) {
    if (auto findings = validate_network(net); !findings.empty()) {
        std::ostringstream os;
        os << "invalid network:";
        for (const auto& f : findings) os << "\n  " << f;
        throw StructuralError(os.str());
    }
    (void)net.network_matrix();

    ContractionCertificate cert;
    cert.hessian_floor_a = std::numeric_limits<double>::infinity();
    for (double s : storage_slots(net)) cert.hessian_floor_a = std::min(cert.hessian_floor_a, 1.0 / s);

    // Capacitors loaded by an RL branch carry no damping of their own; the
    // branch resistance enters through the load port instead.
    cert.lambda_min_R = std::numeric_limits<double>::infinity();
    for (const auto& slot : damping_slots(net)) {
        if (slot.value > 0.0) cert.lambda_min_R = std::min(cert.lambda_min_R, slot.value);
    }
    cert.rate_c = cert.hessian_floor_a * cert.lambda_min_R;

    double omega = 0.0;
    if (reference_omega) {
        omega = *reference_omega;
    } else {
        double sum = 0.0;
        std::size_t count = 0;
        for (const Edge& e : net.edges()) {
            if (const auto* sg = std::get_if<SgParams>(&e.params)) {
                sum += sg->T0 / sg->F;
                ++count;
            }
        }
        omega = count ? sum / static_cast<double>(count) : 0.0;
    }
    cert.reference_omega = omega;

    double min_re_y = std::numeric_limits<double>::infinity();
    double max_j = 0.0;
    for (const Edge& e : net.edges()) {
        if (const auto* sg = std::get_if<SgParams>(&e.params)) max_j = std::max(max_j, sg->J);
        if (const auto* sh = std::get_if<ShuntParams>(&e.params)) {
            double re_y = 0.0;
            if (const auto* y = std::get_if<AdmittanceLoad>(&sh->load)) {
                re_y = y->Y.real();
            } else {
                const auto& rl = std::get<RlLoad>(sh->load);
                re_y = (1.0 / std::complex<double>(rl.R, omega * rl.L)).real();
            }
            min_re_y = std::min(min_re_y, re_y);
        }
    }
    cert.remark_estimate = (max_j > 0.0 && std::isfinite(min_re_y)) ? min_re_y / max_j : 0.0;
    return cert;
}

}  // namespace phnet
