#pragma once

// Network data model for electromagnetic power-system models written as
// port-Hamiltonian graphs. Every edge is one open subsystem (synchronous
// generator, shunt capacitor with its load, or series R-L line); the edges are
// interconnected through a skew-symmetric network matrix obtained from KCL and
// KVL.
//
// Sign convention: an edge runs from `from` to `to`; its voltage is
// V_from - V_to and its current flows from `from` through the edge to `to`, so
// positive voltage times current means the edge consumes power. Ground is a
// zero-voltage node that is not a bus.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace phnet {

struct BusId {
    std::size_t index = 0;
    friend bool operator==(BusId, BusId) = default;
    friend auto operator<=>(BusId, BusId) = default;
};

/// Edge endpoint: a bus, or ground when empty.
using Terminal = std::optional<BusId>;

inline constexpr Terminal kGround = std::nullopt;

struct SgParams {
    double J = 0.0;    // rotational inertia, kg m^2
    double F = 0.0;    // viscous damping incl. droop, N m s
    double T0 = 0.0;   // zero-frequency torque, N m
    double Rs = 0.0;   // stator resistance, ohm
    double Ls = 0.0;   // stator inductance, H
    double psi = 0.0;  // field flux, V s
    double p = 1.0;    // pole pairs; only used with PowerNetwork::Options::pole_pair_scaling

    friend bool operator==(const SgParams&, const SgParams&) = default;
};

/// Constant complex admittance load, I = Y V.
struct AdmittanceLoad {
    std::complex<double> Y;
    friend bool operator==(const AdmittanceLoad&, const AdmittanceLoad&) = default;
};

/// Series R-L load branch from the bus to ground. Adds one inductive port.
struct RlLoad {
    double R = 0.0;
    double L = 0.0;
    friend bool operator==(const RlLoad&, const RlLoad&) = default;
};

struct ShuntParams {
    double C = 0.0;  // F
    std::variant<AdmittanceLoad, RlLoad> load;
    friend bool operator==(const ShuntParams&, const ShuntParams&) = default;
};

struct LineParams {
    double R = 0.0;  // ohm
    double L = 0.0;  // H
    friend bool operator==(const LineParams&, const LineParams&) = default;
};

enum class EdgeKind { Sg, Shunt, Line };

struct Edge {
    std::variant<SgParams, ShuntParams, LineParams> params;
    Terminal from;
    Terminal to;

    [[nodiscard]] EdgeKind kind() const noexcept { return static_cast<EdgeKind>(params.index()); }

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// A port is one complex input/output pair of the interconnection. Every edge
/// owns one port; every RL-branch load owns an extra port appended after all
/// edges, in shunt order.
enum class PortKind { Sg, Shunt, Line, Load };

struct Port {
    PortKind kind;
    std::size_t edge;    // index of the owning edge in PowerNetwork::edges()
    std::size_t label;   // 1-based edge number; loads reuse their shunt's number
    std::size_t offset;  // first slot in the flat state vector
};

/// Number of real state slots owned by a port: (omega, I_a, I_b, theta) for a
/// generator, one complex pair otherwise.
[[nodiscard]] constexpr std::size_t port_width(PortKind kind) noexcept {
    return kind == PortKind::Sg ? 4 : 2;
}

/// Short prefix used for column and report names: sg, sh, ln, ld.
[[nodiscard]] const char* port_prefix(PortKind kind) noexcept;

/// Dense skew-symmetric matrix over ports, u = W y.
struct NetworkMatrix {
    std::size_t n = 0;
    std::vector<std::int8_t> entries;  // row-major n x n

    [[nodiscard]] int operator()(std::size_t row, std::size_t col) const { return entries[row * n + col]; }
    [[nodiscard]] bool is_skew_symmetric() const;

    friend bool operator==(const NetworkMatrix&, const NetworkMatrix&) = default;
};

struct NetworkOptions {
    /// Scale angle, EMF frequency and torque by the pole-pair count p.
    /// Off by default: the model equations carry no pole-pair factor.
    bool pole_pair_scaling = false;
    friend bool operator==(const NetworkOptions&, const NetworkOptions&) = default;
};

class PowerNetwork {
public:
    using Options = NetworkOptions;

    PowerNetwork() = default;
    PowerNetwork(std::size_t bus_count, std::vector<Edge> edges, Options options = {});

    [[nodiscard]] std::size_t bus_count() const noexcept { return bus_count_; }
    [[nodiscard]] std::vector<BusId> buses() const;
    [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
    [[nodiscard]] const Options& options() const noexcept { return options_; }

    [[nodiscard]] const std::vector<Port>& ports() const noexcept { return ports_; }
    [[nodiscard]] std::size_t state_size() const noexcept { return state_size_; }
    [[nodiscard]] std::size_t sg_count() const noexcept;

    /// Network matrix cached at construction; throws StructuralError when the
    /// topology could not be assembled.
    [[nodiscard]] const NetworkMatrix& network_matrix() const;

    /// Signed coupling list per port (nonzero entries of W), cached.
    struct Coupling {
        std::size_t port;
        int sign;
    };
    [[nodiscard]] const std::vector<std::vector<Coupling>>& couplings() const;

    /// Human-readable port name, e.g. "sg1", "sh5", "ld4".
    [[nodiscard]] std::string port_name(std::size_t port) const;

    friend bool operator==(const PowerNetwork& a, const PowerNetwork& b) {
        return a.bus_count_ == b.bus_count_ && a.edges_ == b.edges_ && a.options_ == b.options_;
    }

private:
    std::size_t bus_count_ = 0;
    std::vector<Edge> edges_;
    Options options_;
    std::vector<Port> ports_;
    std::size_t state_size_ = 0;
    std::optional<NetworkMatrix> matrix_;
    std::string matrix_error_;
    std::vector<std::vector<Coupling>> couplings_;
};

struct ValidationOptions {
    /// Permit line edges with a ground endpoint (used for driven R-L-C circuits).
    bool lines_may_ground = false;
    /// Permit a network without generators or buses.
    bool allow_empty = false;
};

/// Every violated structural or parameter invariant, one message each. Empty iff valid.
[[nodiscard]] std::vector<std::string> validate_network(const PowerNetwork& net,
                                                        const ValidationOptions& options = {});

/// Warnings that do not invalidate the network (e.g. reactive admittance loads).
[[nodiscard]] std::vector<std::string> network_warnings(const PowerNetwork& net);

/// KCL/KVL interconnection. Throws StructuralError when a bus lacks its
/// capacitor or an endpoint is undefined.
[[nodiscard]] NetworkMatrix assemble_network_matrix(const PowerNetwork& net);

/// Per-slot damping of the closed system: one value per complex pair (or per
/// omega slot), in port order. Undamped slots (capacitors whose load is an RL
/// branch) are reported as 0.
struct DampingSlot {
    std::size_t port;
    double value;
};
[[nodiscard]] std::vector<DampingSlot> damping_slots(const PowerNetwork& net);

/// Per-slot storage parameter (J, Ls, C or L) so that the energy variable is
/// storage * co-state. One value per omega slot or complex pair, in port order.
[[nodiscard]] std::vector<double> storage_slots(const PowerNetwork& net);

struct ContractionCertificate {
    double lambda_min_R = 0.0;
    double hessian_floor_a = 0.0;
    double rate_c = 0.0;
    double remark_estimate = 0.0;
    /// Frequency (rad/s) at which RL-branch loads were converted to admittances
    /// for the remark estimate.
    double reference_omega = 0.0;
};

/// Contraction certificate. RL-branch loads enter the remark estimate through
/// Re{1/(R + j w L)} at `reference_omega`; when omitted the mean no-load
/// speed T0/F of the generators is used.
[[nodiscard]] ContractionCertificate contraction_certificate(const PowerNetwork& net,
                                                             std::optional<double> reference_omega = {});

}  // namespace phnet
