#pragma once

// The two-machine test system, its case studies, seeded initial conditions
// and parameter sweeps.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "phnet/analysis.hpp"
#include "phnet/integrator.hpp"
#include "phnet/network.hpp"
#include "phnet/trajectory.hpp"

namespace phnet {

/// Generators start at their no-load speed T0/F; every other state is zero.
struct SteadyGuess {
    friend bool operator==(const SteadyGuess&, const SteadyGuess&) = default;
};

/// Every slot i.i.d. uniform on [0, scale), see uniform_state().
struct RandomStart {
    std::uint64_t seed = 1;
    double scale = 100.0;
    friend bool operator==(const RandomStart&, const RandomStart&) = default;
};

using InitialCondition = std::variant<SteadyGuess, RandomStart>;

struct Scenario {
    std::string name;
    PowerNetwork network;
    InitialCondition initial = RandomStart{};
    double horizon = 0.0;  // s
    IntegratorConfig integrator;
    std::optional<Classification> expected;
};

/// Empty when the scenario is usable.
[[nodiscard]] std::vector<std::string> validate_scenario(const Scenario& sc);

/// Two generators on the outer buses, a heavy load on the middle bus, two
/// identical lines; RL-branch loads. Edge order: sg1, sg2, sh3, sh4, sh5, ln6, ln7.
[[nodiscard]] PowerNetwork two_machine_default();

enum class CaseKind { Symmetric, TorqueMismatch, HighFlux };

/// Full: parameters as published. Desk: every damping entry multiplied by
/// kDeskDampingFactor, which shortens the transient by the same factor.
enum class CaseScale { Full, Desk };

inline constexpr double kDeskDampingFactor = 10.0;

[[nodiscard]] Scenario case_variant(CaseKind kind, CaseScale scale = CaseScale::Desk);

/// symmetric, torque-mismatch, high-flux and their -desk variants.
[[nodiscard]] std::vector<Scenario> builtin_scenarios();
[[nodiscard]] std::optional<Scenario> find_scenario(const std::string& name);

/// Throws Error for a negative scale.
[[nodiscard]] std::vector<double> random_initial(const PowerNetwork& net, std::uint64_t seed, double scale);
[[nodiscard]] std::vector<double> steady_guess(const PowerNetwork& net);
[[nodiscard]] std::vector<double> initial_state(const Scenario& sc);

// Parameter scaling. Each returns a modified copy.

/// F, Rs, line R, RL-load R and admittance-load Y, all times k.
[[nodiscard]] PowerNetwork scale_damping(const PowerNetwork& net, double k);
[[nodiscard]] PowerNetwork scale_inertia(const PowerNetwork& net, double k);
[[nodiscard]] PowerNetwork scale_flux(const PowerNetwork& net, double k);
/// Sets T0 of the second generator. Throws StructuralError with fewer than two generators.
[[nodiscard]] PowerNetwork set_torque_sg2(const PowerNetwork& net, double T0);

/// Simulates the scenario over [0, horizon].
[[nodiscard]] Trajectory simulate(const Scenario& sc, const StepObserver& observer = {});

/// First sample time after which |H - H_end| stays below `band` * |H_end|.
/// Needs the derived H channel.
[[nodiscard]] double transient_time(const Trajectory& traj, double band = 0.01);

enum class SweepParameter { DampingScale, InertiaScale, TorqueSg2, FluxScale };

[[nodiscard]] const char* to_string(SweepParameter p) noexcept;
[[nodiscard]] std::optional<SweepParameter> sweep_parameter_from_string(const std::string& s);

struct SweepSpec {
    SweepParameter parameter = SweepParameter::DampingScale;
    std::vector<double> factors;
    Scenario base;
};

[[nodiscard]] std::vector<std::string> validate_sweep(const SweepSpec& spec);

/// The base network with the sweep parameter applied at `factor`. For
/// TorqueSg2 the factor is the new T0 of generator 2, in N m.
[[nodiscard]] Scenario sweep_leg(const SweepSpec& spec, double factor);

struct SweepRow {
    double factor = 0.0;
    double transient_time = 0.0;  // s
    Classification classification = Classification::Aperiodic;
    double terminal_H = 0.0;      // J
};

/// Runs the legs concurrently on `threads` workers (0: PHNET_THREADS or the
/// hardware concurrency). Rows are returned in factor order. The first
/// failing leg's exception is rethrown.
[[nodiscard]] std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned threads = 0,
                                              const ClassifyOptions& classify = {});

/// Worker count used when run_sweep is called with threads = 0.
[[nodiscard]] unsigned default_thread_count();

}  // namespace phnet
