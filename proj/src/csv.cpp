#include "phnet/csv.hpp"

#include <charconv>
#include <cmath>
#include <regex>

#include "phnet/dynamics.hpp"
#include "phnet/errors.hpp"

namespace phnet {

namespace {

constexpr const char* kDerived[] = {"H_total_J", "source_W", "dissipation_W"};

void append_number(std::string& out, double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, end);
}

std::vector<std::string> port_suffixes(const std::string& prefix) {
    if (prefix == "sg") return {"omega", "Ia", "Ib", "theta"};
    if (prefix == "sh") return {"Va", "Vb"};
    return {"Ia", "Ib"};
}

}  // namespace

std::vector<std::string> csv_columns(const PowerNetwork& net) {
    std::vector<std::string> cols = {"t_s"};
    for (std::size_t k = 0; k < net.ports().size(); ++k) {
        const std::string name = net.port_name(k);
        for (const auto& s : port_suffixes(port_prefix(net.ports()[k].kind))) cols.push_back(name + "_" + s);
    }
    for (const char* d : kDerived) cols.emplace_back(d);
    return cols;
}

std::string write_csv(const Trajectory& traj, const PowerNetwork& net) {
    if (traj.dim != net.state_size()) throw DimensionMismatch("trajectory does not match the network");
    const auto cols = csv_columns(net);
    std::string out;
    out.reserve(traj.size() * (cols.size() * 24 + 1) + 256);
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c) out += ',';
        out += cols[c];
    }
    out += '\n';
    const bool derived = traj.has_derived();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        append_number(out, traj.times[i]);
        for (double v : traj.state(i)) {
            out += ',';
            append_number(out, v);
        }
        double H = 0.0, src = 0.0, diss = 0.0;
        if (derived) {
            H = traj.hamiltonian[i];
            src = traj.source[i];
            diss = traj.dissipation[i];
        } else {
            const auto e = hamiltonian(traj.state(i), net);
            H = e.total;
            src = e.source_power;
            diss = e.dissipation;
        }
        for (double v : {H, src, diss}) {
            out += ',';
            append_number(out, v);
        }
        out += '\n';
    }
    return out;
}

std::optional<std::size_t> CsvTable::find(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    std::size_t line_no = 0;
    bool have_header = false;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        std::vector<std::string_view> cells;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }

        if (!have_header) {
            for (auto c : cells) {
                if (c.empty()) throw ParseError("line 1: empty column name");
                double probe = 0.0;
                const auto [end, ec] = std::from_chars(c.data(), c.data() + c.size(), probe);
                if (ec == std::errc() && end == c.data() + c.size()) {
                    throw ParseError("line 1: header row missing (found number '" + std::string(c) + "')");
                }
                table.header.emplace_back(c);
            }
            table.columns.resize(table.header.size());
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                             " cells, found " + std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            const auto [end, ec] = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
            if (ec != std::errc() || end != cells[c].data() + cells[c].size()) {
                throw ParseError("line " + std::to_string(line_no) + ": '" + std::string(cells[c]) +
                                 "' is not a number");
            }
            table.columns[c].push_back(v);
        }
    }
    if (!have_header) throw ParseError("empty CSV");
    return table;
}

void check_trajectory_schema(const CsvTable& table) {
    const auto& h = table.header;
    if (h.size() < 4 || h.front() != "t_s") throw ParseError("schema: first column must be t_s");
    for (std::size_t i = 0; i < 3; ++i) {
        if (h[h.size() - 3 + i] != kDerived[i]) {
            throw ParseError(std::string("schema: expected trailing column ") + kDerived[i]);
        }
    }
    static const std::regex col(R"((sg|sh|ln|ld)([0-9]+)_([A-Za-z]+))");
    std::size_t i = 1;
    const std::size_t end = h.size() - 3;
    while (i < end) {
        std::smatch m;
        if (!std::regex_match(h[i], m, col)) throw ParseError("schema: unexpected column '" + h[i] + "'");
        const std::string stem = m[1].str() + m[2].str();
        for (const auto& s : port_suffixes(m[1].str())) {
            if (i >= end || h[i] != stem + "_" + s) {
                throw ParseError("schema: expected column '" + stem + "_" + s + "'" +
                                 (i < end ? ", found '" + h[i] + "'" : std::string()));
            }
            ++i;
        }
    }
    const auto& t = table.columns.front();
    for (std::size_t r = 1; r < t.size(); ++r) {
        if (!(t[r] > t[r - 1])) throw ParseError("schema: t_s must increase strictly (row " + std::to_string(r + 1) + ")");
    }
}

Trajectory read_csv(std::string_view text, const PowerNetwork& net) {
    const CsvTable table = parse_csv(text);
    if (table.header != csv_columns(net)) throw ParseError("schema: header does not match the network");
    check_trajectory_schema(table);
    Trajectory traj;
    traj.dim = net.state_size();
    const std::size_t n = table.rows();
    traj.times = table.columns[0];
    traj.states.resize(n * traj.dim);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < traj.dim; ++c) traj.states[r * traj.dim + c] = table.columns[c + 1][r];
    }
    const std::size_t d = traj.dim + 1;
    traj.hamiltonian = table.columns[d];
    traj.source = table.columns[d + 1];
    traj.dissipation = table.columns[d + 2];
    return traj;
}

ClassifierInput classifier_input(const CsvTable& table, const std::optional<std::string>& probe,
                                 double window_fraction) {
    check_trajectory_schema(table);
    ClassifierInput in;
    in.times = table.columns.front();
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        const auto& name = table.header[c];
        if (name.starts_with("sg") && name.ends_with("_theta")) in.angles.push_back(table.columns[c]);
    }
    in.hamiltonian = table.columns[*table.find("H_total_J")];

    if (probe) {
        const auto c = table.find(*probe);
        if (!c) throw ParseError("probe column '" + *probe + "' not in the file");
        in.probe = table.columns[*c];
        in.probe_name = *probe;
        return in;
    }
    const std::size_t n = table.rows();
    if (n == 0) throw ParseError("trajectory has no rows");
    const double t_begin = in.times.back() - window_fraction * (in.times.back() - in.times.front());
    double best = -1.0;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        const auto& name = table.header[c];
        if (!(name.starts_with("sh") && name.ends_with("_Va"))) continue;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < n; ++r) {
            if (in.times[r] < t_begin) continue;
            sum += table.columns[c][r] * table.columns[c][r];
            ++count;
        }
        const double rms = count ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
        if (rms > best) {
            best = rms;
            in.probe = table.columns[c];
            in.probe_name = name;
        }
    }
    if (best < 0.0) throw ParseError("trajectory has no capacitor voltage column to probe");
    return in;
}

}  // namespace phnet
