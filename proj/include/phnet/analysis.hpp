#pragma once

// Numerical machinery around horizontal contraction of port-Hamiltonian
// networks: weighted matrix measure, projection transverse to the
// conservative flow, chord estimate of the quotient distance, Hamiltonian
// gap between two runs, rotating-frame decay of driven R-L-C circuits, and
// steady-state classification of simulated runs.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phnet/integrator.hpp"
#include "phnet/network.hpp"
#include "phnet/trajectory.hpp"

namespace phnet {

// ---------------------------------------------------------------------------
// Matrix measure
// ---------------------------------------------------------------------------

/// Hermitian positive-definite weight P of the inner product Re{y^H P x}.
class InnerProductWeight {
public:
    /// Throws DimensionMismatch if P is not square, Error if it is not
    /// Hermitian positive definite.
    explicit InnerProductWeight(Eigen::MatrixXcd P);

    static InnerProductWeight identity(Eigen::Index n);

    [[nodiscard]] const Eigen::MatrixXcd& matrix() const noexcept { return P_; }
    [[nodiscard]] const Eigen::MatrixXcd& sqrt() const noexcept { return sqrt_; }
    [[nodiscard]] const Eigen::MatrixXcd& inv_sqrt() const noexcept { return inv_sqrt_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return P_.rows(); }

private:
    Eigen::MatrixXcd P_;
    Eigen::MatrixXcd sqrt_;
    Eigen::MatrixXcd inv_sqrt_;
};

/// sup over x != 0 of Re<x, P A x> / <x, P x>, evaluated in closed form as the
/// largest eigenvalue of 1/2 P^{-1/2} (P A + A^H P) P^{-1/2}.
/// Throws DimensionMismatch if A and P differ in size.
[[nodiscard]] double matrix_measure(const Eigen::MatrixXcd& A, const InnerProductWeight& P);

// ---------------------------------------------------------------------------
// Horizontal projection and quotient distance
// ---------------------------------------------------------------------------

/// Diagonal weight over the flat state layout; generator angle slots carry 0
/// and are excluded from every inner product.
using SlotWeight = std::vector<double>;

/// R^{-1} per slot. Undamped slots (capacitors loaded by an RL branch) get the
/// largest damped weight, 1 / lambda_min^+(R).
[[nodiscard]] SlotWeight default_slot_weight(const PowerNetwork& net);

enum class ProjectionFormula {
    /// delta - <v, delta>/<v, v> v : idempotent orthogonal projector.
    Orthogonal,
    /// delta - <v, delta>/(|v| |delta|) v : the normalisation as literally written.
    Literal,
};

/// Removes from the energy-coordinate tangent `delta` its component along the
/// conservative field v = J(x) grad H(x). Angle components are set to zero.
/// Throws DegenerateDirection if v vanishes.
[[nodiscard]] std::vector<double> horizontal_project(double t, std::span<const double> x,
                                                     std::span<const double> delta, const PowerNetwork& net,
                                                     const SlotWeight& weight,
                                                     ProjectionFormula formula = ProjectionFormula::Orthogonal);

/// Weighted norm over non-angle slots.
[[nodiscard]] double weighted_norm(std::span<const double> v, const SlotWeight& weight);

/// Energy-coordinate displacement M (x2 - x1) with angle slots zeroed.
[[nodiscard]] std::vector<double> energy_displacement(std::span<const double> x1, std::span<const double> x2,
                                                      const PowerNetwork& net);

/// Midpoint-rule length of the projected straight chord from x1 to x2: an
/// upper bound of the quotient distance.
[[nodiscard]] double quotient_distance_chord(double t, std::span<const double> x1, std::span<const double> x2,
                                             const PowerNetwork& net, std::size_t n_seg, const SlotWeight& weight);

/// Same with the default weight and 256 segments.
[[nodiscard]] double quotient_distance_chord(double t, std::span<const double> x1, std::span<const double> x2,
                                             const PowerNetwork& net);

/// Flows the frozen-time conservative field dx/dtau = J grad H for `tau`
/// (RK4, `steps` steps); the result lies on the equivalence class of x.
[[nodiscard]] std::vector<double> flow_conservative(std::span<const double> x, const PowerNetwork& net, double tau,
                                                    std::size_t steps = 100);

// ---------------------------------------------------------------------------
// Hamiltonian convergence
// ---------------------------------------------------------------------------

struct GapSeries {
    std::vector<double> times;
    std::vector<double> gap;  // |H1 - H2|, J
    double fitted_rate = 0.0; // 1/s, from the final half of the samples
};

/// Least-squares decay rate -d/dt log(y) over the samples [first, end).
/// Nonpositive values are floored at 1e-300.
[[nodiscard]] double fit_exponential_rate(std::span<const double> times, std::span<const double> values,
                                          std::size_t first);

/// Throws GridError when the two runs are not on the same time grid.
[[nodiscard]] GapSeries hamiltonian_gap(const Trajectory& a, const Trajectory& b, const PowerNetwork& net);

/// Multiplies every complex pair by e^{-j omega0 t} and shifts generator
/// angles by -omega0 t.
[[nodiscard]] Trajectory rotating_frame(const Trajectory& traj, const PowerNetwork& net, double omega0);

// ---------------------------------------------------------------------------
// Driven R-L-C circuits
// ---------------------------------------------------------------------------

/// A generator-free network with a sinusoidal source amplitude * e^{j omega0 t}
/// added to the energy equation of one port: a series voltage source for an
/// inductive port, a current injection for a capacitor.
struct ForcedCircuit {
    PowerNetwork net;
    std::size_t driven_port = 0;
    double omega0 = 0.0;
    std::complex<double> amplitude{0.0, 0.0};
};

/// Throws StructuralError if the circuit has generator edges or is otherwise invalid.
void validate_forced_circuit(const ForcedCircuit& circuit);

/// Periodic co-state phasors Y (one per port) with x(t) = Y e^{j omega0 t},
/// from a complex linear solve.
[[nodiscard]] std::vector<std::complex<double>> phasor_steady_state(const ForcedCircuit& circuit);

/// Forced vector field in physical co-state coordinates.
void forced_rhs(double t, std::span<const double> x, const ForcedCircuit& circuit, std::span<double> out);

struct DecayReport {
    double measured_rate = 0.0;  // decay rate of sqrt(shifted H), 1/s
    double lambda_min_R = 0.0;
    double lambda_min_Q = 0.0;
    double bound = 0.0;          // lambda_min_R * lambda_min_Q
    double margin = 0.0;         // measured_rate - bound
    std::vector<std::complex<double>> steady_state;
    std::vector<double> times;
    std::vector<double> shifted_energy;  // J
};

struct DecayOptions {
    std::uint64_t seed = 1;
    double scale = 1.0;     // random start, uniform on [0, scale] per slot
    double horizon = 10.0;  // s
    double dt = 1e-4;
    double sample_every = 1e-2;
};

/// Simulates the circuit from a random start and fits the decay of
/// 1/2 (x - xbar)^H Q (x - xbar) in the frame rotating at omega0.
[[nodiscard]] DecayReport shifted_hamiltonian_decay(const ForcedCircuit& circuit, const DecayOptions& options = {});

// ---------------------------------------------------------------------------
// Steady-state classification
// ---------------------------------------------------------------------------

enum class Classification { Synchronized, LowFreqOscillation, Collapse, Aperiodic };

[[nodiscard]] const char* to_string(Classification c) noexcept;
[[nodiscard]] std::optional<Classification> classification_from_string(const std::string& s);

struct FrequencyEstimate {
    std::vector<double> per_sg;  // rad/s
    double mean = 0.0;
    double spread = 0.0;  // (max - min) / |mean|
};

/// Least-squares slope of each unwrapped generator angle over the final
/// `window` seconds. Throws GridError if the window does not fit.
[[nodiscard]] FrequencyEstimate estimate_frequencies(const Trajectory& traj, const PowerNetwork& net, double window);

/// Same on bare series: one unwrapped angle series per generator, sampled at `times`.
[[nodiscard]] FrequencyEstimate estimate_frequencies(std::span<const double> times,
                                                     const std::vector<std::vector<double>>& angles, double window);

struct SpectralPeak {
    double omega = 0.0;     // rad/s
    double fraction = 0.0;  // share of spectral energy
};

struct ClassifyOptions {
    double spread_tol = 1e-3;
    double flatness_tol = 0.02;
    double peak_fraction = 0.95;
    double collapse_frac = 1e-3;
    double envelope_cycles = 20.0;
    /// Share of the run, at its end, used for frequencies, envelope and spectrum.
    double window_fraction = 0.25;
    /// Energy share the strongest `line_peaks` peaks must carry for an
    /// unsynchronized run to count as a (quasi-)periodic oscillation.
    double line_spectrum_fraction = 0.8;
    std::size_t line_peaks = 8;
    /// Half-width of a spectral peak, in bins.
    std::size_t peak_halfwidth = 3;
    /// Capacitor port whose alpha voltage is the probe; default is the bus
    /// with the most line connections.
    std::optional<std::size_t> probe_port;
};

struct SteadyStateReport {
    Classification classification = Classification::Aperiodic;
    FrequencyEstimate frequencies;
    double envelope_flatness = 0.0;
    double dominant_fraction = 0.0;
    double line_fraction = 0.0;
    std::vector<SpectralPeak> peaks;
    double terminal_H = 0.0;
    double median_transient_H = 0.0;
    std::string probe;
};

/// Default probe: the capacitor on the bus with the most incident lines (ties: lowest port).
[[nodiscard]] std::size_t default_probe_port(const PowerNetwork& net);

/// Hann-windowed one-sided power spectrum of `signal` (mean removed).
[[nodiscard]] std::vector<double> power_spectrum(std::span<const double> signal);

/// (max - min) / mean of the RMS over sliding windows of `window_samples`.
[[nodiscard]] double envelope_flatness(std::span<const double> signal, std::size_t window_samples);

/// Peaks found greedily: largest bin, +- halfwidth bins, removed, repeated.
[[nodiscard]] std::vector<SpectralPeak> spectral_peaks(std::span<const double> spectrum, double bin_omega,
                                                       std::size_t count, std::size_t halfwidth);

[[nodiscard]] SteadyStateReport classify_steady_state(const Trajectory& traj, const PowerNetwork& net,
                                                      const ClassifyOptions& options = {});

/// The series the classifier looks at. Lets runs be classified without the
/// network, e.g. straight from a CSV file.
struct ClassifierInput {
    std::vector<double> times;
    std::vector<std::vector<double>> angles;  // unwrapped, one series per generator
    std::vector<double> probe;
    std::string probe_name;
    std::vector<double> hamiltonian;  // J
};

/// Extracts the classifier series; probe defaults to default_probe_port(net).
[[nodiscard]] ClassifierInput classifier_input(const Trajectory& traj, const PowerNetwork& net,
                                               std::optional<std::size_t> probe_port = {});

/// probe_port in `options` is ignored here; the probe is already chosen.
[[nodiscard]] SteadyStateReport classify_signals(const ClassifierInput& input, const ClassifyOptions& options = {});

}  // namespace phnet
