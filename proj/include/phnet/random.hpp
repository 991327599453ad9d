#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace phnet {

/// Name of the initial-condition generator. Changing the algorithm below
/// requires a new version tag.
inline constexpr const char* kRandomStateAlgorithm = "mt19937_64/u53 v1";

/// n values i.i.d. uniform on [0, scale): std::mt19937_64 seeded with `seed`,
/// each draw mapped through its top 53 bits. Both steps are fully specified,
/// so the sequence is identical on every platform.
[[nodiscard]] inline std::vector<double> uniform_state(std::size_t n, std::uint64_t seed, double scale) {
    std::mt19937_64 engine(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = scale * (static_cast<double>(engine() >> 11) * 0x1.0p-53);
    return out;
}

}  // namespace phnet
