// phnet: simulate, analyze, sweep and verify port-Hamiltonian power networks.
//
// Exit codes: 0 success, 2 bad input or failed validation, 3 numerical failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "phnet/analysis.hpp"
#include "phnet/csv.hpp"
#include "phnet/errors.hpp"
#include "phnet/netfile.hpp"
#include "phnet/network.hpp"
#include "phnet/scenarios.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInput = 2;
constexpr int kNumeric = 3;

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        std::cout.flush();
    } else {
        phnet::write_file(path, content);
    }
}

/// A built-in scenario name, or a scenario file.
phnet::Scenario load_scenario(const std::string& ref) {
    if (auto sc = phnet::find_scenario(ref)) return *sc;
    if (std::filesystem::exists(ref)) return phnet::parse_scenario(phnet::read_file(ref));
    throw phnet::ParseError("no built-in scenario or file named '" + ref + "'");
}

struct SimulateArgs {
    std::string net_file;
    std::string scenario;
    std::optional<double> t_end;
    std::optional<double> dt;
    std::optional<double> tol;
    std::optional<double> sample_every;
    std::optional<std::uint64_t> seed;
    std::optional<double> scale;
    std::string out = "-";
};

int cmd_simulate(const SimulateArgs& a) {
    phnet::Scenario sc;
    if (!a.scenario.empty()) {
        sc = load_scenario(a.scenario);
    } else {
        sc.name = a.net_file;
        sc.network = phnet::parse_network(phnet::read_file(a.net_file));
        sc.initial = phnet::SteadyGuess{};
        if (!a.t_end) throw phnet::ParseError("--t-end is required with --net");
    }
    if (auto findings = phnet::validate_network(sc.network); !findings.empty()) {
        std::cerr << "invalid network:\n";
        for (const auto& f : findings) std::cerr << "  " << f << '\n';
        return kInput;
    }
    if (a.t_end) sc.horizon = *a.t_end;
    if (a.dt) sc.integrator.method = phnet::Rk4Config{*a.dt};
    if (a.tol) {
        phnet::Rk45Config ad;
        ad.abs_tol = *a.tol;
        ad.rel_tol = *a.tol;
        sc.integrator.method = ad;
    }
    if (a.sample_every) sc.integrator.sample_every = *a.sample_every;
    if (a.seed || a.scale) {
        phnet::RandomStart r;
        if (const auto* old = std::get_if<phnet::RandomStart>(&sc.initial)) r = *old;
        if (a.seed) r.seed = *a.seed;
        if (a.scale) r.scale = *a.scale;
        sc.initial = r;
    }
    const phnet::Trajectory traj = phnet::simulate(sc);
    emit(a.out, phnet::write_csv(traj, sc.network));
    return kOk;
}

struct AnalyzeArgs {
    std::string traj_file;
    std::string out = "-";
    std::string net_file;
    std::string scenario;
    std::string probe;
};

int cmd_analyze(const AnalyzeArgs& a) {
    const phnet::CsvTable table = phnet::parse_csv(phnet::read_file(a.traj_file));
    std::optional<phnet::PowerNetwork> net;
    if (!a.scenario.empty()) net = load_scenario(a.scenario).network;
    if (!a.net_file.empty()) net = phnet::parse_network(phnet::read_file(a.net_file));

    std::optional<std::string> probe;
    if (!a.probe.empty()) probe = a.probe;
    if (!probe && net) probe = net->port_name(phnet::default_probe_port(*net)) + "_Va";
    if (net && table.header != phnet::csv_columns(*net)) {
        throw phnet::ParseError("schema: trajectory columns do not match the network");
    }
    const phnet::ClassifyOptions options;
    const auto input = phnet::classifier_input(table, probe, options.window_fraction);
    emit(a.out, phnet::write_report(phnet::classify_signals(input, options)));
    return kOk;
}

int cmd_sweep(const std::string& spec_file, const std::string& out, unsigned threads) {
    const phnet::SweepSpec spec = phnet::parse_sweep(phnet::read_file(spec_file));
    if (auto problems = phnet::validate_sweep(spec); !problems.empty()) {
        std::cerr << "invalid sweep:\n";
        for (const auto& p : problems) std::cerr << "  " << p << '\n';
        return kInput;
    }
    emit(out, phnet::write_sweep_table(phnet::run_sweep(spec, threads)));
    return kOk;
}

int cmd_verify(const std::string& net_file) {
    const phnet::PowerNetwork net = phnet::parse_network(phnet::read_file(net_file));
    const auto findings = phnet::validate_network(net);
    for (const auto& w : phnet::network_warnings(net)) std::cout << "warning: " << w << '\n';
    if (!findings.empty()) {
        std::cout << "network: INVALID\n";
        for (const auto& f : findings) std::cout << "  " << f << '\n';
        return kInput;
    }
    const auto& W = net.network_matrix();
    const bool skew = W.is_skew_symmetric();
    std::cout << "skew_symmetric_W = " << (skew ? "true" : "false") << '\n';
    const auto cert = phnet::contraction_certificate(net);
    std::cout << phnet::write_certificate(cert);
    return skew && cert.rate_c > 0.0 ? kOk : kInput;
}

int cmd_scenario_list() {
    for (const auto& sc : phnet::builtin_scenarios()) {
        std::cout << sc.name << "  horizon " << sc.horizon << " s";
        if (sc.expected) std::cout << "  expected " << phnet::to_string(*sc.expected);
        std::cout << '\n';
    }
    return kOk;
}

int cmd_scenario_export(const std::string& name, const std::string& out) {
    const auto sc = phnet::find_scenario(name);
    if (!sc) {
        std::cerr << "unknown scenario '" << name << "'\n";
        return kInput;
    }
    emit(out, phnet::write_scenario(*sc));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and contraction analysis of port-Hamiltonian power networks"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate a network or scenario and write a trajectory CSV");
    auto* src = simulate->add_option_group("source");
    src->add_option("--net", sim.net_file, "Network file (generators start at T0/F unless --seed/--scale)");
    src->add_option("--scenario", sim.scenario, "Built-in scenario name or scenario file");
    src->require_option(1);
    simulate->add_option("--t-end", sim.t_end, "End time, s (default: scenario horizon)");
    auto* dt = simulate->add_option("--dt", sim.dt, "Fixed RK4 step, s");
    auto* tol = simulate->add_option("--tol", sim.tol, "Use RK45 with this absolute and relative tolerance");
    dt->excludes(tol);
    simulate->add_option("--sample-every", sim.sample_every, "Output sample spacing, s");
    simulate->add_option("--seed", sim.seed, "Random start seed");
    simulate->add_option("--scale", sim.scale, "Random start scale");
    simulate->add_option("-o,--out", sim.out, "Output CSV (default stdout)");

    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze", "Classify the steady state of a trajectory CSV");
    analyze->add_option("traj", an.traj_file, "Trajectory CSV")->required();
    analyze->add_option("-o,--out", an.out, "Report file (default stdout)");
    analyze->add_option("--net", an.net_file, "Network the trajectory was produced with (selects the probe)");
    analyze->add_option("--scenario", an.scenario, "Scenario the trajectory was produced with (selects the probe)");
    analyze->add_option("--probe", an.probe, "Probe column, e.g. sh5_Va");

    std::string sweep_file, sweep_out = "-";
    unsigned threads = 0;
    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep and write the result table");
    sweep->add_option("spec", sweep_file, "Sweep file")->required();
    sweep->add_option("-o,--out", sweep_out, "Output CSV (default stdout)");
    sweep->add_option("--threads", threads, "Worker threads (default PHNET_THREADS or all cores)");

    std::string verify_file;
    auto* verify = app.add_subcommand("verify", "Check structural assumptions and print the contraction certificate");
    verify->add_option("net", verify_file, "Network file")->required();

    auto* scenario = app.add_subcommand("scenario", "Built-in scenarios");
    scenario->require_subcommand(1);
    auto* list = scenario->add_subcommand("list", "List built-in scenarios");
    std::string export_name, export_out = "-";
    auto* exp = scenario->add_subcommand("export", "Write a built-in scenario file");
    exp->add_option("name", export_name, "Scenario name")->required();
    exp->add_option("-o,--out", export_out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInput;
    }

    try {
        if (*simulate) return cmd_simulate(sim);
        if (*analyze) return cmd_analyze(an);
        if (*sweep) return cmd_sweep(sweep_file, sweep_out, threads);
        if (*verify) return cmd_verify(verify_file);
        if (*list) return cmd_scenario_list();
        if (*exp) return cmd_scenario_export(export_name, export_out);
    } catch (const phnet::NonFinite& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const phnet::StepFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const phnet::DegenerateDirection& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInput;
    }
    return kInput;
}
