#pragma once

// Plain-text network, scenario and sweep files.
//
//   # comment
//   [network]
//   pole_pair_scaling = false
//   [bus]
//   index = 0
//   [sg]
//   bus = 0
//   J = 28460
//   ...
//   [line]
//   from = 0
//   to = 2            # or "ground"
//   R = 3
//   L = 1.061
//
// Every [bus] declares one bus; indices must be 0, 1, 2, ... in file order.
// [sg], [shunt] and [line] sections each declare one edge; edge order is file
// order. A shunt carries `load = rl` with R_ld, L_ld, or `load = admittance`
// with Y_re, Y_im. Scenario files add a [scenario] section, sweep files a
// further [sweep] section. Numbers are written in shortest round-trip form,
// so writing and re-reading is lossless. All quantities are SI.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phnet/analysis.hpp"
#include "phnet/network.hpp"
#include "phnet/scenarios.hpp"

namespace phnet {

/// Generic section/key-value document underneath all file formats.
struct IniSection {
    std::string name;
    std::size_t line = 0;
    std::vector<std::pair<std::string, std::string>> entries;
};

/// Throws ParseError with a line number on malformed input.
[[nodiscard]] std::vector<IniSection> parse_ini(std::string_view text);

[[nodiscard]] std::string format_number(double v);

[[nodiscard]] std::string write_network(const PowerNetwork& net);
/// Ignores [scenario] and [sweep] sections. Throws ParseError.
[[nodiscard]] PowerNetwork parse_network(std::string_view text);

[[nodiscard]] std::string write_scenario(const Scenario& sc);
/// Throws ParseError; a file without [scenario] is rejected.
[[nodiscard]] Scenario parse_scenario(std::string_view text);

[[nodiscard]] std::string write_sweep(const SweepSpec& spec);
[[nodiscard]] SweepSpec parse_sweep(std::string_view text);

/// Reports in the same section/key-value format.
[[nodiscard]] std::string write_report(const SteadyStateReport& report);
[[nodiscard]] std::string write_certificate(const ContractionCertificate& cert);

/// Sweep table as CSV: factor, transient_time_s, classification, terminal_H_J.
[[nodiscard]] std::string write_sweep_table(const std::vector<SweepRow>& rows);

[[nodiscard]] std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace phnet
