#pragma once

// Explicit Runge-Kutta integration: classical fixed-step RK4 and the
// Dormand-Prince 5(4) embedded pair with step-size control. Samples are taken
// on a fixed grid; steps are clipped so that sample instants are hit exactly.
// Memory use is proportional to the number of stored samples only.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "phnet/errors.hpp"
#include "phnet/network.hpp"
#include "phnet/trajectory.hpp"

namespace phnet {

struct Rk4Config {
    double dt = 50e-6;
};

struct Rk45Config {
    double abs_tol = 1e-6;
    double rel_tol = 1e-8;
    double dt_min = 1e-9;
    double dt_max = 1e-2;
};

struct IntegratorConfig {
    std::variant<Rk4Config, Rk45Config> method = Rk4Config{};
    /// Spacing of stored samples, s. For RK4 it is rounded to a whole number of steps.
    double sample_every = 1e-3;
    /// Compute H, source power and dissipation for each stored sample.
    bool derived_channels = true;
};

/// Empty when the configuration is usable.
[[nodiscard]] std::vector<std::string> validate_config(const IntegratorConfig& cfg);

/// Called after every accepted step (and once for the initial state).
using StepObserver = std::function<void(double t, std::span<const double> x)>;

struct IntegrationStats {
    std::size_t steps = 0;
    std::size_t rejected = 0;
    std::size_t evaluations = 0;
};

namespace detail {

inline void require_finite(std::span<const double> x, double t) {
    for (double v : x) {
        if (!std::isfinite(v)) throw NonFinite("state became non-finite at t = " + std::to_string(t));
    }
}

/// One classical RK4 step of size h. Scratch buffers are sized by the caller.
template <class Field>
void rk4_step(Field& f, double t, double h, std::vector<double>& x, std::vector<double> (&k)[4],
              std::vector<double>& tmp) {
    const std::size_t n = x.size();
    f(t, std::span<const double>(x), std::span<double>(k[0]));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k[0][i];
    f(t + 0.5 * h, std::span<const double>(tmp), std::span<double>(k[1]));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k[1][i];
    f(t + 0.5 * h, std::span<const double>(tmp), std::span<double>(k[2]));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k[2][i];
    f(t + h, std::span<const double>(tmp), std::span<double>(k[3]));
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
}

}  // namespace detail

/// Integrates dx/dt = f(t, x) from t0 to t1 and returns samples at t0, t0 +
/// sample_every, ..., t1. `f` has signature void(double, span<const double>,
/// span<double>). Derived channels are not filled here.
template <class Field>
Trajectory integrate_field(Field&& f, std::span<const double> x0, double t0, double t1, const IntegratorConfig& cfg,
                           const StepObserver& observer = {}, IntegrationStats* stats = nullptr) {
    if (auto problems = validate_config(cfg); !problems.empty()) throw Error("integrator config: " + problems.front());
    if (!(t1 > t0)) throw Error("integration span must have t1 > t0");

    const std::size_t n = x0.size();
    std::vector<double> x(x0.begin(), x0.end());
    detail::require_finite(x, t0);
    IntegrationStats local;

    Trajectory traj;
    traj.dim = n;
    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.states.insert(traj.states.end(), x.begin(), x.end());
    };

    if (const auto* rk4 = std::get_if<Rk4Config>(&cfg.method)) {
        const double span = t1 - t0;
        const auto steps = static_cast<std::size_t>(std::ceil(span / rk4->dt - 1e-9));
        const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.sample_every / rk4->dt)));
        traj.reserve(steps / stride + 2);

        std::vector<double> k[4] = {std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                                    std::vector<double>(n)};
        std::vector<double> tmp(n);
        record(t0);
        if (observer) observer(t0, x);
        for (std::size_t s = 0; s < steps; ++s) {
            const double t = t0 + static_cast<double>(s) * rk4->dt;
            const double t_next = (s + 1 == steps) ? t1 : t0 + static_cast<double>(s + 1) * rk4->dt;
            detail::rk4_step(f, t, t_next - t, x, k, tmp);
            local.evaluations += 4;
            ++local.steps;
            detail::require_finite(x, t_next);
            if (observer) observer(t_next, x);
            if ((s + 1) % stride == 0 || s + 1 == steps) record(t_next);
        }
    } else {
        const auto& ad = std::get<Rk45Config>(cfg.method);
        // Dormand-Prince 5(4), FSAL.
        constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        constexpr double a21 = 1.0 / 5;
        constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                         a65 = -5103.0 / 18656;
        constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                         e6 = 22.0 / 525, e7 = -1.0 / 40;

        std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), xn(n);
        auto eval = [&](double t, const std::vector<double>& y, std::vector<double>& out) {
            f(t, std::span<const double>(y), std::span<double>(out));
            ++local.evaluations;
        };

        const double span = t1 - t0;
        const auto samples = static_cast<std::size_t>(std::ceil(span / cfg.sample_every - 1e-9));
        traj.reserve(samples + 1);
        record(t0);
        if (observer) observer(t0, x);

        double t = t0;
        double h = std::min(ad.dt_max, std::max(ad.dt_min, 1e-3 * cfg.sample_every));
        eval(t, x, k1);
        for (std::size_t si = 1; si <= samples; ++si) {
            const double target = (si == samples) ? t1 : t0 + static_cast<double>(si) * cfg.sample_every;
            while (t < target) {
                bool clipped = false;
                double step = h;
                if (t + step >= target) {
                    step = target - t;
                    clipped = true;
                }
                for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + step * a21 * k1[i];
                eval(t + c2 * step, tmp, k2);
                for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + step * (a31 * k1[i] + a32 * k2[i]);
                eval(t + c3 * step, tmp, k3);
                for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + step * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
                eval(t + c4 * step, tmp, k4);
                for (std::size_t i = 0; i < n; ++i) {
                    tmp[i] = x[i] + step * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
                }
                eval(t + c5 * step, tmp, k5);
                for (std::size_t i = 0; i < n; ++i) {
                    tmp[i] = x[i] + step * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
                }
                eval(t + step, tmp, k6);
                for (std::size_t i = 0; i < n; ++i) {
                    xn[i] = x[i] + step * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
                }
                eval(t + step, xn, k7);

                double err = 0.0;
                double scale = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double ei =
                        step * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                    err = std::max(err, std::abs(ei));
                    scale = std::max(scale, std::max(std::abs(x[i]), std::abs(xn[i])));
                }
                const double tol = ad.abs_tol + ad.rel_tol * scale;
                const double ratio = std::isfinite(err) ? err / tol : std::numeric_limits<double>::infinity();

                if (ratio <= 1.0) {
                    t = clipped ? target : t + step;
                    x.swap(xn);
                    k1.swap(k7);
                    ++local.steps;
                    detail::require_finite(x, t);
                    if (observer) observer(t, x);
                    const double grow = ratio > 0.0 ? 0.9 * std::pow(ratio, -0.2) : 5.0;
                    if (!clipped) h = std::min(ad.dt_max, step * std::clamp(grow, 0.2, 5.0));
                } else {
                    ++local.rejected;
                    if (step <= ad.dt_min * (1.0 + 1e-12)) {
                        throw StepFailure("RK45 cannot meet tolerance at dt_min = " + std::to_string(ad.dt_min) +
                                          " near t = " + std::to_string(t));
                    }
                    const double shrink = std::isfinite(ratio) ? 0.9 * std::pow(ratio, -0.25) : 0.2;
                    h = std::max(ad.dt_min, step * std::clamp(shrink, 0.2, 0.9));
                }
            }
            record(t);
        }
    }

    if (stats) *stats = local;
    return traj;
}

/// Simulates the closed network from x0 over [t_begin, t_end].
/// Throws StructuralError for an invalid network, DimensionMismatch for a
/// wrong-sized x0, StepFailure / NonFinite on solver failure.
[[nodiscard]] Trajectory integrate(const PowerNetwork& net, std::span<const double> x0, double t_begin, double t_end,
                                   const IntegratorConfig& cfg, const StepObserver& observer = {},
                                   IntegrationStats* stats = nullptr);

/// Keeps every stride-th sample and always the last one.
[[nodiscard]] Trajectory decimate(const Trajectory& traj, std::size_t stride);

}  // namespace phnet
