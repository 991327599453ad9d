#include "phnet/netfile.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>

#include "phnet/errors.hpp"

namespace phnet {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
    throw ParseError("line " + std::to_string(line) + ": " + msg);
}

/// Typed access to one section; every key must be consumed exactly once.
class Fields {
public:
    explicit Fields(const IniSection& s) : s_(s) {}

    bool has(const std::string& key) const {
        for (const auto& [k, v] : s_.entries) {
            if (k == key) return true;
        }
        return false;
    }

    const std::string& text(const std::string& key) {
        for (const auto& [k, v] : s_.entries) {
            if (k == key) {
                used_.insert(k);
                return v;
            }
        }
        fail(s_.line, "[" + s_.name + "] is missing '" + key + "'");
    }

    double number(const std::string& key) {
        const std::string& v = text(key);
        double out = 0.0;
        const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || end != v.data() + v.size()) fail(s_.line, "'" + key + "' is not a number: " + v);
        return out;
    }

    std::uint64_t integer(const std::string& key) {
        const std::string& v = text(key);
        std::uint64_t out = 0;
        const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || end != v.data() + v.size()) {
            fail(s_.line, "'" + key + "' is not a non-negative integer: " + v);
        }
        return out;
    }

    bool boolean(const std::string& key) {
        const std::string& v = text(key);
        if (v == "true") return true;
        if (v == "false") return false;
        fail(s_.line, "'" + key + "' must be true or false: " + v);
    }

    Terminal terminal(const std::string& key) {
        if (text(key) == "ground") return kGround;
        return BusId{static_cast<std::size_t>(integer(key))};
    }

    void finish() const {
        for (const auto& [k, v] : s_.entries) {
            if (!used_.count(k)) fail(s_.line, "unknown key '" + k + "' in [" + s_.name + "]");
        }
    }

private:
    const IniSection& s_;
    std::set<std::string> used_;
};

std::string terminal_text(const Terminal& t) { return t ? std::to_string(t->index) : "ground"; }

void write_edge(std::ostringstream& os, const Edge& e) {
    std::visit([&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SgParams>) {
            os << "\n[sg]\nbus = " << terminal_text(e.from) << '\n';
            if (e.to) os << "to = " << terminal_text(e.to) << '\n';
            os << "J = " << format_number(p.J) << "\nF = " << format_number(p.F) << "\nT0 = " << format_number(p.T0)
               << "\nRs = " << format_number(p.Rs) << "\nLs = " << format_number(p.Ls)
               << "\npsi = " << format_number(p.psi) << "\np = " << format_number(p.p) << '\n';
        } else if constexpr (std::is_same_v<T, ShuntParams>) {
            os << "\n[shunt]\nbus = " << terminal_text(e.from) << '\n';
            if (e.to) os << "to = " << terminal_text(e.to) << '\n';
            os << "C = " << format_number(p.C) << '\n';
            if (const auto* rl = std::get_if<RlLoad>(&p.load)) {
                os << "load = rl\nR_ld = " << format_number(rl->R) << "\nL_ld = " << format_number(rl->L) << '\n';
            } else {
                const auto& y = std::get<AdmittanceLoad>(p.load).Y;
                os << "load = admittance\nY_re = " << format_number(y.real())
                   << "\nY_im = " << format_number(y.imag()) << '\n';
            }
        } else {
            os << "\n[line]\nfrom = " << terminal_text(e.from) << "\nto = " << terminal_text(e.to)
               << "\nR = " << format_number(p.R) << "\nL = " << format_number(p.L) << '\n';
        }
    }, e.params);
}

Edge read_edge(const IniSection& s) {
    Fields f(s);
    Edge e;
    if (s.name == "sg") {
        SgParams p;
        e.from = f.terminal("bus");
        e.to = f.has("to") ? f.terminal("to") : kGround;
        p.J = f.number("J");
        p.F = f.number("F");
        p.T0 = f.number("T0");
        p.Rs = f.number("Rs");
        p.Ls = f.number("Ls");
        p.psi = f.number("psi");
        if (f.has("p")) p.p = f.number("p");
        e.params = p;
    } else if (s.name == "shunt") {
        ShuntParams p;
        e.from = f.terminal("bus");
        e.to = f.has("to") ? f.terminal("to") : kGround;
        p.C = f.number("C");
        const std::string& load = f.text("load");
        if (load == "rl") {
            const double R = f.number("R_ld");
            p.load = RlLoad{R, f.number("L_ld")};
        } else if (load == "admittance") {
            const double re = f.number("Y_re");
            p.load = AdmittanceLoad{{re, f.number("Y_im")}};
        } else {
            fail(s.line, "load must be 'rl' or 'admittance', got '" + load + "'");
        }
        e.params = p;
    } else {
        LineParams p;
        e.from = f.terminal("from");
        e.to = f.terminal("to");
        p.R = f.number("R");
        p.L = f.number("L");
        e.params = p;
    }
    f.finish();
    return e;
}

const IniSection* find_section(const std::vector<IniSection>& doc, const std::string& name) {
    const IniSection* found = nullptr;
    for (const auto& s : doc) {
        if (s.name != name) continue;
        if (found) fail(s.line, "section [" + name + "] appears more than once");
        found = &s;
    }
    return found;
}

void write_scenario_section(std::ostringstream& os, const Scenario& sc) {
    os << "\n[scenario]\nname = " << sc.name << "\nhorizon = " << format_number(sc.horizon) << '\n';
    if (const auto* r = std::get_if<RandomStart>(&sc.initial)) {
        os << "initial = random\nseed = " << r->seed << "\nscale = " << format_number(r->scale) << '\n';
    } else {
        os << "initial = steady\n";
    }
    if (const auto* rk4 = std::get_if<Rk4Config>(&sc.integrator.method)) {
        os << "method = rk4\ndt = " << format_number(rk4->dt) << '\n';
    } else {
        const auto& ad = std::get<Rk45Config>(sc.integrator.method);
        os << "method = rk45\nabs_tol = " << format_number(ad.abs_tol) << "\nrel_tol = " << format_number(ad.rel_tol)
           << "\ndt_min = " << format_number(ad.dt_min) << "\ndt_max = " << format_number(ad.dt_max) << '\n';
    }
    os << "sample_every = " << format_number(sc.integrator.sample_every) << '\n';
    if (sc.expected) os << "expected = " << to_string(*sc.expected) << '\n';
}

Scenario read_scenario(const std::vector<IniSection>& doc, PowerNetwork net) {
    const IniSection* s = find_section(doc, "scenario");
    if (!s) throw ParseError("missing [scenario] section");
    Fields f(*s);
    Scenario sc;
    sc.network = std::move(net);
    sc.name = f.text("name");
    sc.horizon = f.number("horizon");
    const std::string& initial = f.text("initial");
    if (initial == "random") {
        RandomStart r;
        r.seed = f.integer("seed");
        r.scale = f.number("scale");
        sc.initial = r;
    } else if (initial == "steady") {
        sc.initial = SteadyGuess{};
    } else {
        fail(s->line, "initial must be 'random' or 'steady', got '" + initial + "'");
    }
    const std::string& method = f.text("method");
    if (method == "rk4") {
        sc.integrator.method = Rk4Config{f.number("dt")};
    } else if (method == "rk45") {
        Rk45Config ad;
        ad.abs_tol = f.number("abs_tol");
        ad.rel_tol = f.number("rel_tol");
        ad.dt_min = f.number("dt_min");
        ad.dt_max = f.number("dt_max");
        sc.integrator.method = ad;
    } else {
        fail(s->line, "method must be 'rk4' or 'rk45', got '" + method + "'");
    }
    sc.integrator.sample_every = f.number("sample_every");
    if (f.has("expected")) {
        const std::string& e = f.text("expected");
        sc.expected = classification_from_string(e);
        if (!sc.expected) fail(s->line, "unknown classification '" + e + "'");
    }
    f.finish();
    return sc;
}

}  // namespace

std::vector<IniSection> parse_ini(std::string_view text) {
    std::vector<IniSection> doc;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) fail(line_no, "malformed section header");
            doc.push_back({std::string(trim(line.substr(1, line.size() - 2))), line_no, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
        if (doc.empty()) fail(line_no, "key outside of any section");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) fail(line_no, "empty key");
        if (value.empty()) fail(line_no, "empty value for '" + key + "'");
        for (const auto& [k, v] : doc.back().entries) {
            if (k == key) fail(line_no, "duplicate key '" + key + "'");
        }
        doc.back().entries.emplace_back(key, value);
    }
    return doc;
}

std::string format_number(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string write_network(const PowerNetwork& net) {
    std::ostringstream os;
    os << "[network]\npole_pair_scaling = " << (net.options().pole_pair_scaling ? "true" : "false") << '\n';
    for (std::size_t b = 0; b < net.bus_count(); ++b) os << "\n[bus]\nindex = " << b << '\n';
    for (const Edge& e : net.edges()) write_edge(os, e);
    return os.str();
}

PowerNetwork parse_network(std::string_view text) {
    const auto doc = parse_ini(text);
    static const std::set<std::string> known = {"network", "bus", "sg", "shunt", "line", "scenario", "sweep"};
    NetworkOptions options;
    std::size_t buses = 0;
    std::vector<Edge> edges;
    bool have_network = false;
    for (const auto& s : doc) {
        if (!known.count(s.name)) fail(s.line, "unknown section [" + s.name + "]");
        if (s.name == "network") {
            if (have_network) fail(s.line, "section [network] appears more than once");
            have_network = true;
            Fields f(s);
            if (f.has("pole_pair_scaling")) options.pole_pair_scaling = f.boolean("pole_pair_scaling");
            f.finish();
        } else if (s.name == "bus") {
            Fields f(s);
            const auto index = f.integer("index");
            f.finish();
            if (index != buses) {
                fail(s.line, "bus index " + std::to_string(index) + " out of order, expected " + std::to_string(buses));
            }
            ++buses;
        } else if (s.name == "sg" || s.name == "shunt" || s.name == "line") {
            edges.push_back(read_edge(s));
        }
    }
    return PowerNetwork(buses, std::move(edges), options);
}

std::string write_scenario(const Scenario& sc) {
    std::ostringstream os;
    os << write_network(sc.network);
    write_scenario_section(os, sc);
    return os.str();
}

Scenario parse_scenario(std::string_view text) {
    PowerNetwork net = parse_network(text);
    return read_scenario(parse_ini(text), std::move(net));
}

std::string write_sweep(const SweepSpec& spec) {
    std::ostringstream os;
    os << write_scenario(spec.base) << "\n[sweep]\nparameter = " << to_string(spec.parameter) << "\nfactors = ";
    for (std::size_t i = 0; i < spec.factors.size(); ++i) os << (i ? ", " : "") << format_number(spec.factors[i]);
    os << '\n';
    return os.str();
}

SweepSpec parse_sweep(std::string_view text) {
    SweepSpec spec;
    spec.base = parse_scenario(text);
    const auto doc = parse_ini(text);
    const IniSection* s = find_section(doc, "sweep");
    if (!s) throw ParseError("missing [sweep] section");
    Fields f(*s);
    const std::string& param = f.text("parameter");
    const auto p = sweep_parameter_from_string(param);
    if (!p) fail(s->line, "unknown sweep parameter '" + param + "'");
    spec.parameter = *p;
    std::string_view list = f.text("factors");
    while (!list.empty()) {
        const auto comma = list.find(',');
        const std::string_view item = trim(list.substr(0, comma));
        double v = 0.0;
        const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc() || end != item.data() + item.size()) {
            fail(s->line, "bad factor '" + std::string(item) + "'");
        }
        spec.factors.push_back(v);
        list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
    }
    f.finish();
    return spec;
}

std::string write_report(const SteadyStateReport& r) {
    std::ostringstream os;
    os << "[report]\nclassification = " << to_string(r.classification) << "\nfrequency_mean = "
       << format_number(r.frequencies.mean) << "\nfrequency_spread = " << format_number(r.frequencies.spread)
       << "\nenvelope_flatness = " << format_number(r.envelope_flatness)
       << "\ndominant_fraction = " << format_number(r.dominant_fraction)
       << "\nline_fraction = " << format_number(r.line_fraction) << "\nterminal_H = " << format_number(r.terminal_H)
       << "\nmedian_transient_H = " << format_number(r.median_transient_H) << "\nprobe = " << r.probe << '\n';
    for (std::size_t i = 0; i < r.frequencies.per_sg.size(); ++i) {
        os << "\n[frequency]\nsg = " << i + 1 << "\nomega = " << format_number(r.frequencies.per_sg[i]) << '\n';
    }
    for (const auto& p : r.peaks) {
        os << "\n[peak]\nomega = " << format_number(p.omega) << "\nfraction = " << format_number(p.fraction) << '\n';
    }
    return os.str();
}

std::string write_certificate(const ContractionCertificate& c) {
    std::ostringstream os;
    os << "[certificate]\nlambda_min_R = " << format_number(c.lambda_min_R)
       << "\nhessian_floor_a = " << format_number(c.hessian_floor_a) << "\nrate_c = " << format_number(c.rate_c)
       << "\nremark_estimate = " << format_number(c.remark_estimate)
       << "\nreference_omega = " << format_number(c.reference_omega) << '\n';
    return os.str();
}

std::string write_sweep_table(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "factor,transient_time_s,classification,terminal_H_J\n";
    for (const auto& r : rows) {
        os << format_number(r.factor) << ',' << format_number(r.transient_time) << ',' << to_string(r.classification)
           << ',' << format_number(r.terminal_H) << '\n';
    }
    return os.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
    if (!out) throw Error("write failed: " + path);
}

}  // namespace phnet
