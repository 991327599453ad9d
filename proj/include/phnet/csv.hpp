#pragma once

// Trajectory CSV: t_s, the state columns in port order (sg<i>_omega,
// sg<i>_Ia, sg<i>_Ib, sg<i>_theta, sh<i>_Va, sh<i>_Vb, ln<i>_Ia, ln<i>_Ib,
// ld<i>_Ia, ld<i>_Ib), then H_total_J, source_W, dissipation_W. Values are
// written with 17 significant digits, so a write/read cycle is bit-exact.
// Generator angles are written unwrapped.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phnet/analysis.hpp"
#include "phnet/network.hpp"
#include "phnet/trajectory.hpp"

namespace phnet {

[[nodiscard]] std::vector<std::string> csv_columns(const PowerNetwork& net);

/// Derived channels are computed from the network when the trajectory lacks them.
[[nodiscard]] std::string write_csv(const Trajectory& traj, const PowerNetwork& net);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const;
    [[nodiscard]] std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// Parses any numeric CSV with a header row. Throws ParseError on ragged rows,
/// non-numeric cells or a missing header.
[[nodiscard]] CsvTable parse_csv(std::string_view text);

/// Checks that the table follows the trajectory schema (with or without a
/// known network) and that times increase strictly. Throws ParseError.
void check_trajectory_schema(const CsvTable& table);

/// Reads a trajectory written for `net`; the header must match csv_columns(net) exactly.
[[nodiscard]] Trajectory read_csv(std::string_view text, const PowerNetwork& net);

/// Classifier series straight from a schema-checked table. The probe is the
/// named column, or else the capacitor alpha-voltage column with the largest
/// RMS over the final `window_fraction` of the run.
[[nodiscard]] ClassifierInput classifier_input(const CsvTable& table, const std::optional<std::string>& probe,
                                               double window_fraction = 0.25);

}  // namespace phnet
