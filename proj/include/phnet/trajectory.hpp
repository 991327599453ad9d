#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace phnet {

/// Sampled solution of the closed system. States are stored row-major, one
/// row of `dim` reals per sample. Derived channels are optional and, when
/// present, have one entry per sample.
struct Trajectory {
    std::size_t dim = 0;
    std::vector<double> times;
    std::vector<double> states;

    std::vector<double> hamiltonian;  // J
    std::vector<double> source;       // W
    std::vector<double> dissipation;  // W

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
    [[nodiscard]] bool empty() const noexcept { return times.empty(); }
    [[nodiscard]] bool has_derived() const noexcept { return hamiltonian.size() == times.size() && !times.empty(); }

    [[nodiscard]] std::span<const double> state(std::size_t i) const { return {states.data() + i * dim, dim}; }
    [[nodiscard]] std::span<double> state(std::size_t i) { return {states.data() + i * dim, dim}; }

    /// Single component over time.
    [[nodiscard]] std::vector<double> channel(std::size_t slot) const {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) out[i] = states[i * dim + slot];
        return out;
    }

    void reserve(std::size_t samples) {
        times.reserve(samples);
        states.reserve(samples * dim);
    }
};

}  // namespace phnet
