#pragma once

// Closed-system vector field and energy bookkeeping in physical co-energy
// coordinates: generator (omega, I_a, I_b, theta), capacitor (V_a, V_b),
// line and load inductors (I_a, I_b). Complex quantities are stored as
// adjacent (alpha, beta) reals.
//
// The energy variables of the port-Hamiltonian form are storage * co-state
// (J omega, Ls I, C V, L I); the generator's time-shifted momentum
// J omega - T0 t is not tracked, its effect appears as the source power
// sum_i T0_i omega_i in the energy balance.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "phnet/network.hpp"
#include "phnet/trajectory.hpp"

namespace phnet {

/// Which parts of (J(x) - R) grad H + source are evaluated.
struct FieldTerms {
    bool damping = true;
    bool source = true;
};

/// dx/dt at (t, x). `out` must have net.state_size() entries.
/// Throws NonFinite if any derivative is not finite.
void rhs(double t, std::span<const double> x, const PowerNetwork& net, std::span<double> out,
         FieldTerms terms = {});

[[nodiscard]] std::vector<double> rhs(double t, std::span<const double> x, const PowerNetwork& net,
                                      FieldTerms terms = {});

/// Conservative part J(x) grad H expressed in energy variables, one entry per
/// state slot; generator angle slots are zero.
[[nodiscard]] std::vector<double> conservative_field(std::span<const double> x, const PowerNetwork& net);

struct EnergyBreakdown {
    std::vector<double> per_port;  // J, in port order
    double total = 0.0;            // J
    double source_power = 0.0;     // W, sum T0 omega
    double dissipation = 0.0;      // W, grad H^T R grad H
};

[[nodiscard]] EnergyBreakdown hamiltonian(std::span<const double> x, const PowerNetwork& net);

/// Total stored energy only.
[[nodiscard]] double total_energy(std::span<const double> x, const PowerNetwork& net);

/// Gradient of H with respect to the energy variables. In physical
/// coordinates this is the identity on omega, current and voltage slots;
/// angle slots are zero.
[[nodiscard]] std::vector<double> gradient(std::span<const double> x, const PowerNetwork& net);

/// min over slots of 1/storage, i.e. lambda_min of the block-diagonal Hessian.
[[nodiscard]] double hessian_floor(const PowerNetwork& net);

/// Accelerating electrical torque Re{j psi e^{-j theta} I}.
[[nodiscard]] double electrical_torque(double psi, double theta, std::complex<double> current);

/// Effective (electrical angle, EMF frequency, torque) scale of a generator.
[[nodiscard]] double pole_factor(const SgParams& sg, const PowerNetwork& net);

/// Fills the derived channels (H, source, dissipation) of a trajectory.
void attach_derived(Trajectory& traj, const PowerNetwork& net);

/// Energy-balance defect dH/dt - (source - dissipation) on interior samples.
struct ResidualSeries {
    std::vector<double> times;
    std::vector<double> residual;  // W
    double max_abs = 0.0;
};

/// dH/dt by fourth-order central differences on a uniform grid.
/// Throws GridError for fewer than 5 samples or a non-uniform grid.
[[nodiscard]] ResidualSeries energy_balance_residual(const Trajectory& traj, const PowerNetwork& net);

/// Streaming form of energy_balance_residual for runs whose samples are not
/// stored: feed every sample of a uniform grid in order.
class EnergyBalanceMonitor {
public:
    EnergyBalanceMonitor(const PowerNetwork& net, double spacing);

    void observe(double t, std::span<const double> x);

    [[nodiscard]] double max_abs_residual() const noexcept { return max_abs_; }
    /// Time of the sample where the largest residual occurred.
    [[nodiscard]] double time_of_max() const noexcept { return t_max_; }
    [[nodiscard]] double peak_source_power() const noexcept { return peak_source_; }
    [[nodiscard]] double peak_dissipation() const noexcept { return peak_dissipation_; }
    [[nodiscard]] std::size_t evaluated() const noexcept { return evaluated_; }

private:
    const PowerNetwork* net_;
    double spacing_;
    double h_[5] = {};
    double t_[5] = {};
    double net_power_[5] = {};
    std::size_t count_ = 0;
    std::size_t evaluated_ = 0;
    double max_abs_ = 0.0;
    double t_max_ = 0.0;
    double peak_source_ = 0.0;
    double peak_dissipation_ = 0.0;
};

}  // namespace phnet
