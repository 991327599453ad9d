#include "phnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "phnet/dynamics.hpp"
#include "phnet/errors.hpp"
#include "phnet/random.hpp"

namespace phnet {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Matrix measure

InnerProductWeight::InnerProductWeight(Eigen::MatrixXcd P) : P_(std::move(P)) {
    if (P_.rows() != P_.cols()) throw DimensionMismatch("inner-product weight must be square");
    const double scale = std::max(1.0, P_.cwiseAbs().maxCoeff());
    if ((P_ - P_.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw Error("inner-product weight must be Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(P_);
    if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0)) {
        throw Error("inner-product weight must be positive definite");
    }
    sqrt_ = es.operatorSqrt();
    inv_sqrt_ = es.operatorInverseSqrt();
}

InnerProductWeight InnerProductWeight::identity(Eigen::Index n) {
    return InnerProductWeight(Eigen::MatrixXcd::Identity(n, n));
}

double matrix_measure(const Eigen::MatrixXcd& A, const InnerProductWeight& P) {
    if (A.rows() != A.cols() || A.rows() != P.size()) {
        throw DimensionMismatch("matrix measure: A is " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) +
                                ", weight is " + std::to_string(P.size()));
    }
    const Eigen::MatrixXcd& Pm = P.matrix();
    Eigen::MatrixXcd S = 0.5 * P.inv_sqrt() * (Pm * A + A.adjoint() * Pm) * P.inv_sqrt();
    S = 0.5 * (S + S.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

// ---------------------------------------------------------------------------
// Projection and chord distance

namespace {

bool is_angle_slot(const PowerNetwork& net, std::size_t slot) {
    for (const Port& p : net.ports()) {
        if (p.kind == PortKind::Sg && slot == p.offset + 3) return true;
    }
    return false;
}

double weighted_dot(std::span<const double> a, std::span<const double> b, const SlotWeight& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * a[i] * b[i];
    return s;
}

/// Storage per real slot (J, Ls, Ls, 0 for a generator; C, C or L, L otherwise).
std::vector<double> slot_storage(const PowerNetwork& net) {
    std::vector<double> m(net.state_size(), 0.0);
    const auto storage = storage_slots(net);
    std::size_t s = 0;
    for (const Port& p : net.ports()) {
        if (p.kind == PortKind::Sg) {
            m[p.offset] = storage[s++];
            m[p.offset + 1] = m[p.offset + 2] = storage[s++];
        } else {
            m[p.offset] = m[p.offset + 1] = storage[s++];
        }
    }
    return m;
}

}  // namespace

SlotWeight default_slot_weight(const PowerNetwork& net) {
    const auto damping = damping_slots(net);
    double floor = std::numeric_limits<double>::infinity();
    for (const auto& d : damping) {
        if (d.value > 0.0) floor = std::min(floor, d.value);
    }
    auto weight_of = [&](double r) { return r > 0.0 ? 1.0 / r : 1.0 / floor; };

    SlotWeight w(net.state_size(), 0.0);
    std::size_t s = 0;
    for (const Port& p : net.ports()) {
        if (p.kind == PortKind::Sg) {
            w[p.offset] = weight_of(damping[s++].value);
            w[p.offset + 1] = w[p.offset + 2] = weight_of(damping[s++].value);
            w[p.offset + 3] = 0.0;
        } else {
            w[p.offset] = w[p.offset + 1] = weight_of(damping[s++].value);
        }
    }
    return w;
}

double weighted_norm(std::span<const double> v, const SlotWeight& weight) {
    return std::sqrt(std::max(0.0, weighted_dot(v, v, weight)));
}

std::vector<double> horizontal_project(double /*t*/, std::span<const double> x, std::span<const double> delta,
                                       const PowerNetwork& net, const SlotWeight& weight, ProjectionFormula formula) {
    if (delta.size() != net.state_size() || weight.size() != net.state_size()) {
        throw DimensionMismatch("projection: tangent or weight size does not match the network");
    }
    std::vector<double> d(delta.begin(), delta.end());
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (is_angle_slot(net, i)) d[i] = 0.0;
    }

    const std::vector<double> v = conservative_field(x, net);
    const double vv = weighted_dot(v, v, weight);
    const auto grad = gradient(x, net);
    const double gnorm = std::sqrt(std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
    if (!(vv > 0.0) || std::sqrt(vv) < std::numeric_limits<double>::epsilon() * gnorm) {
        throw DegenerateDirection("conservative field J grad H vanishes at this state");
    }

    const double vd = weighted_dot(v, d, weight);
    double coeff = 0.0;
    if (formula == ProjectionFormula::Orthogonal) {
        coeff = vd / vv;
    } else {
        const double dn = weighted_norm(d, weight);
        coeff = dn > 0.0 ? vd / (std::sqrt(vv) * dn) : 0.0;
    }
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= coeff * v[i];
    return d;
}

std::vector<double> energy_displacement(std::span<const double> x1, std::span<const double> x2,
                                        const PowerNetwork& net) {
    const auto m = slot_storage(net);
    std::vector<double> d(x1.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = m[i] * (x2[i] - x1[i]);
    return d;
}

double quotient_distance_chord(double t, std::span<const double> x1, std::span<const double> x2,
                               const PowerNetwork& net, std::size_t n_seg, const SlotWeight& weight) {
    if (n_seg < 1) throw Error("chord estimate needs at least one segment");
    if (x1.size() != net.state_size() || x2.size() != net.state_size()) {
        throw DimensionMismatch("chord estimate: state size does not match the network");
    }
    const std::vector<double> delta = energy_displacement(x1, x2, net);
    if (weighted_norm(delta, weight) == 0.0) return 0.0;

    std::vector<double> point(x1.size());
    double total = 0.0;
    for (std::size_t k = 0; k < n_seg; ++k) {
        const double s = (static_cast<double>(k) + 0.5) / static_cast<double>(n_seg);
        for (std::size_t i = 0; i < point.size(); ++i) point[i] = x1[i] + s * (x2[i] - x1[i]);
        total += weighted_norm(horizontal_project(t, point, delta, net, weight), weight);
    }
    return total / static_cast<double>(n_seg);
}

double quotient_distance_chord(double t, std::span<const double> x1, std::span<const double> x2,
                               const PowerNetwork& net) {
    return quotient_distance_chord(t, x1, x2, net, 256, default_slot_weight(net));
}

std::vector<double> flow_conservative(std::span<const double> x, const PowerNetwork& net, double tau,
                                      std::size_t steps) {
    auto field = [&net](double, std::span<const double> y, std::span<double> dy) {
        rhs(0.0, y, net, dy, FieldTerms{false, false});
    };
    IntegratorConfig cfg;
    cfg.method = Rk4Config{tau / static_cast<double>(steps)};
    cfg.sample_every = tau;
    const Trajectory tr = integrate_field(field, x, 0.0, tau, cfg);
    const auto last = tr.state(tr.size() - 1);
    return {last.begin(), last.end()};
}

// ---------------------------------------------------------------------------
// Hamiltonian gap and rotating frame

double fit_exponential_rate(std::span<const double> times, std::span<const double> values, std::size_t first) {
    const std::size_t n = times.size();
    if (first + 2 > n) throw GridError("exponential fit needs at least two samples");
    double st = 0.0, sy = 0.0;
    const double m = static_cast<double>(n - first);
    for (std::size_t i = first; i < n; ++i) {
        st += times[i];
        sy += std::log(std::max(values[i], 1e-300));
    }
    const double tm = st / m, ym = sy / m;
    double num = 0.0, den = 0.0;
    for (std::size_t i = first; i < n; ++i) {
        const double dt = times[i] - tm;
        num += dt * (std::log(std::max(values[i], 1e-300)) - ym);
        den += dt * dt;
    }
    return den > 0.0 ? -num / den : 0.0;
}

GapSeries hamiltonian_gap(const Trajectory& a, const Trajectory& b, const PowerNetwork& net) {
    if (a.size() != b.size() || a.size() < 2) throw GridError("Hamiltonian gap needs two runs on one common grid");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.times[i] != b.times[i]) throw GridError("Hamiltonian gap: time grids differ");
    }
    GapSeries g;
    g.times = a.times;
    g.gap.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ha = a.has_derived() ? a.hamiltonian[i] : total_energy(a.state(i), net);
        const double hb = b.has_derived() ? b.hamiltonian[i] : total_energy(b.state(i), net);
        g.gap[i] = std::abs(ha - hb);
    }
    g.fitted_rate = fit_exponential_rate(g.times, g.gap, g.times.size() / 2);
    return g;
}

Trajectory rotating_frame(const Trajectory& traj, const PowerNetwork& net, double omega0) {
    Trajectory out = traj;
    if (omega0 == 0.0) return out;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double t = out.times[i];
        const cplx rot = std::polar(1.0, -omega0 * t);
        auto x = out.state(i);
        for (const Port& p : net.ports()) {
            const std::size_t at = p.kind == PortKind::Sg ? p.offset + 1 : p.offset;
            const cplx z = cplx(x[at], x[at + 1]) * rot;
            x[at] = z.real();
            x[at + 1] = z.imag();
            if (p.kind == PortKind::Sg) x[p.offset + 3] -= omega0 * t;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Driven R-L-C circuits

void validate_forced_circuit(const ForcedCircuit& circuit) {
    const PowerNetwork& net = circuit.net;
    if (net.sg_count() != 0) throw StructuralError("driven R-L-C circuit must not contain generator edges");
    ValidationOptions opts;
    opts.lines_may_ground = true;
    opts.allow_empty = true;
    if (auto findings = validate_network(net, opts); !findings.empty()) {
        std::ostringstream os;
        os << "invalid circuit:";
        for (const auto& f : findings) os << "\n  " << f;
        throw StructuralError(os.str());
    }
    (void)net.network_matrix();
    if (circuit.driven_port >= net.ports().size()) throw StructuralError("driven port does not exist");
}

std::vector<cplx> phasor_steady_state(const ForcedCircuit& circuit) {
    validate_forced_circuit(circuit);
    const PowerNetwork& net = circuit.net;
    const auto& W = net.network_matrix();
    const auto storage = storage_slots(net);
    const auto damping = damping_slots(net);
    const auto n = static_cast<Eigen::Index>(net.ports().size());

    // storage_k (j w0) Y_k = sum_j W_kj Y_j - (d_k + j b_k) Y_k + g_k A
    Eigen::MatrixXcd K(n, n);
    Eigen::VectorXcd rhs_vec = Eigen::VectorXcd::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index j = 0; j < n; ++j) K(k, j) = -static_cast<double>(W(k, j));
        const Port& port = net.ports()[static_cast<std::size_t>(k)];
        double b = 0.0;
        if (port.kind == PortKind::Shunt) {
            const auto& sh = std::get<ShuntParams>(net.edges()[port.edge].params);
            if (const auto* y = std::get_if<AdmittanceLoad>(&sh.load)) b = y->Y.imag();
        }
        K(k, k) += cplx(damping[static_cast<std::size_t>(k)].value, b) +
                   cplx(0.0, circuit.omega0 * storage[static_cast<std::size_t>(k)]);
    }
    rhs_vec(static_cast<Eigen::Index>(circuit.driven_port)) = circuit.amplitude;
    const Eigen::VectorXcd Y = K.fullPivLu().solve(rhs_vec);
    return {Y.data(), Y.data() + Y.size()};
}

void forced_rhs(double t, std::span<const double> x, const ForcedCircuit& circuit, std::span<double> out) {
    rhs(t, x, circuit.net, out);
    const Port& port = circuit.net.ports()[circuit.driven_port];
    const double storage = storage_slots(circuit.net)[circuit.driven_port];
    const cplx f = circuit.amplitude * std::polar(1.0, circuit.omega0 * t) / storage;
    out[port.offset] += f.real();
    out[port.offset + 1] += f.imag();
}

DecayReport shifted_hamiltonian_decay(const ForcedCircuit& circuit, const DecayOptions& options) {
    validate_forced_circuit(circuit);
    const PowerNetwork& net = circuit.net;

    DecayReport rep;
    rep.steady_state = phasor_steady_state(circuit);

    const auto storage = storage_slots(net);
    rep.lambda_min_Q = std::numeric_limits<double>::infinity();
    for (double s : storage) rep.lambda_min_Q = std::min(rep.lambda_min_Q, 1.0 / s);
    rep.lambda_min_R = std::numeric_limits<double>::infinity();
    for (const auto& d : damping_slots(net)) rep.lambda_min_R = std::min(rep.lambda_min_R, d.value);
    rep.bound = rep.lambda_min_R * rep.lambda_min_Q;

    const std::vector<double> x0 = uniform_state(net.state_size(), options.seed, options.scale);
    auto field = [&circuit](double t, std::span<const double> y, std::span<double> dy) {
        forced_rhs(t, y, circuit, dy);
    };
    IntegratorConfig cfg;
    cfg.method = Rk4Config{options.dt};
    cfg.sample_every = options.sample_every;
    cfg.derived_channels = false;
    const Trajectory rotated =
        rotating_frame(integrate_field(field, x0, 0.0, options.horizon, cfg), net, circuit.omega0);

    rep.times = rotated.times;
    rep.shifted_energy.resize(rotated.size());
    for (std::size_t i = 0; i < rotated.size(); ++i) {
        const auto x = rotated.state(i);
        double h = 0.0;
        for (std::size_t k = 0; k < net.ports().size(); ++k) {
            const std::size_t o = net.ports()[k].offset;
            const cplx e = cplx(x[o], x[o + 1]) - rep.steady_state[k];
            h += 0.5 * storage[k] * std::norm(e);
        }
        rep.shifted_energy[i] = h;
    }
    // sqrt of the shifted energy is distance-like; its rate is half the log-slope.
    rep.measured_rate = 0.5 * fit_exponential_rate(rep.times, rep.shifted_energy, rep.times.size() / 2);
    rep.margin = rep.measured_rate - rep.bound;
    return rep;
}

// ---------------------------------------------------------------------------
// Classification

const char* to_string(Classification c) noexcept {
    switch (c) {
        case Classification::Synchronized: return "Synchronized";
        case Classification::LowFreqOscillation: return "LowFreqOscillation";
        case Classification::Collapse: return "Collapse";
        case Classification::Aperiodic: return "Aperiodic";
    }
    return "?";
}

std::optional<Classification> classification_from_string(const std::string& s) {
    for (auto c : {Classification::Synchronized, Classification::LowFreqOscillation, Classification::Collapse,
                   Classification::Aperiodic}) {
        if (s == to_string(c)) return c;
    }
    return std::nullopt;
}

namespace {

std::size_t window_start(std::span<const double> times, double window) {
    if (times.size() < 2) throw GridError("trajectory too short");
    const double begin = times.back() - window;
    if (!(window > 0.0) || begin < times.front() - 1e-12) {
        throw GridError("analysis window of " + std::to_string(window) + " s does not fit the trajectory");
    }
    const auto it = std::lower_bound(times.begin(), times.end(), begin - 1e-9 * std::max(1.0, window));
    const auto first = static_cast<std::size_t>(it - times.begin());
    if (times.size() - first < 2) throw GridError("analysis window holds fewer than two samples");
    return first;
}

double uniform_spacing(std::span<const double> times, std::size_t first) {
    const std::size_t n = times.size() - first;
    const double h = (times.back() - times[first]) / static_cast<double>(n - 1);
    for (std::size_t i = first + 1; i < times.size(); ++i) {
        if (std::abs(times[i] - times[i - 1] - h) > 1e-6 * h) {
            throw GridError("spectral analysis needs a uniform time grid");
        }
    }
    return h;
}

double slope(std::span<const double> t, std::span<const double> y) {
    const double m = static_cast<double>(t.size());
    const double tm = std::accumulate(t.begin(), t.end(), 0.0) / m;
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / m;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        num += (t[i] - tm) * (y[i] - ym);
        den += (t[i] - tm) * (t[i] - tm);
    }
    return num / den;
}

}  // namespace

FrequencyEstimate estimate_frequencies(std::span<const double> times, const std::vector<std::vector<double>>& angles,
                                       double window) {
    const std::size_t first = window_start(times, window);
    FrequencyEstimate est;
    const auto t = times.subspan(first);
    for (const auto& theta : angles) {
        if (theta.size() != times.size()) throw DimensionMismatch("angle series and time grid differ in length");
        est.per_sg.push_back(slope(t, std::span<const double>(theta).subspan(first)));
    }
    if (!est.per_sg.empty()) {
        est.mean = std::accumulate(est.per_sg.begin(), est.per_sg.end(), 0.0) / static_cast<double>(est.per_sg.size());
        const auto [lo, hi] = std::minmax_element(est.per_sg.begin(), est.per_sg.end());
        if (*hi == *lo) {
            est.spread = 0.0;
        } else {
            est.spread = est.mean != 0.0 ? (*hi - *lo) / std::abs(est.mean) : std::numeric_limits<double>::infinity();
        }
    }
    return est;
}

FrequencyEstimate estimate_frequencies(const Trajectory& traj, const PowerNetwork& net, double window) {
    std::vector<std::vector<double>> angles;
    for (const Port& p : net.ports()) {
        if (p.kind == PortKind::Sg) angles.push_back(traj.channel(p.offset + 3));
    }
    return estimate_frequencies(traj.times, angles, window);
}

std::size_t default_probe_port(const PowerNetwork& net) {
    std::vector<int> degree(net.bus_count(), 0);
    for (const Edge& e : net.edges()) {
        if (e.kind() != EdgeKind::Line) continue;
        if (e.from && e.from->index < degree.size()) ++degree[e.from->index];
        if (e.to && e.to->index < degree.size()) ++degree[e.to->index];
    }
    std::optional<std::size_t> best;
    int best_degree = -1;
    for (std::size_t k = 0; k < net.ports().size(); ++k) {
        const Port& p = net.ports()[k];
        if (p.kind != PortKind::Shunt) continue;
        const Edge& e = net.edges()[p.edge];
        const int d = (e.from && e.from->index < degree.size()) ? degree[e.from->index] : 0;
        if (d > best_degree) {
            best_degree = d;
            best = k;
        }
    }
    if (!best) throw StructuralError("network has no capacitor to probe");
    return *best;
}

std::vector<double> power_spectrum(std::span<const double> signal) {
    const std::size_t n = signal.size();
    if (n < 4) throw GridError("spectrum needs at least 4 samples");
    const double mean = std::accumulate(signal.begin(), signal.end(), 0.0) / static_cast<double>(n);
    std::vector<double> windowed(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
        windowed[i] = w * (signal[i] - mean);
    }
    Eigen::FFT<double> fft;
    std::vector<cplx> spec;
    fft.fwd(spec, windowed);
    std::vector<double> power(n / 2 + 1);
    for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spec[k]);
    return power;
}

double envelope_flatness(std::span<const double> signal, std::size_t window_samples) {
    const std::size_t n = signal.size();
    if (n == 0) throw GridError("envelope of an empty signal");
    window_samples = std::clamp<std::size_t>(window_samples, 1, n);
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + signal[i] * signal[i];
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i + window_samples <= n; ++i) {
        const double rms = std::sqrt(std::max(0.0, prefix[i + window_samples] - prefix[i]) / static_cast<double>(window_samples));
        lo = std::min(lo, rms);
        hi = std::max(hi, rms);
        sum += rms;
        ++count;
    }
    const double mean = sum / static_cast<double>(count);
    return mean > 0.0 ? (hi - lo) / mean : 0.0;
}

std::vector<SpectralPeak> spectral_peaks(std::span<const double> spectrum, double bin_omega, std::size_t count,
                                         std::size_t halfwidth) {
    std::vector<double> s(spectrum.begin(), spectrum.end());
    const double total = std::accumulate(s.begin(), s.end(), 0.0);
    std::vector<SpectralPeak> peaks;
    if (!(total > 0.0)) return peaks;
    for (std::size_t p = 0; p < count; ++p) {
        const auto it = std::max_element(s.begin(), s.end());
        if (*it <= 0.0) break;
        const auto k = static_cast<std::size_t>(it - s.begin());
        const std::size_t lo = k > halfwidth ? k - halfwidth : 0;
        const std::size_t hi = std::min(s.size() - 1, k + halfwidth);
        double energy = 0.0;
        for (std::size_t i = lo; i <= hi; ++i) {
            energy += s[i];
            s[i] = 0.0;
        }
        peaks.push_back({bin_omega * static_cast<double>(k), energy / total});
    }
    return peaks;
}

ClassifierInput classifier_input(const Trajectory& traj, const PowerNetwork& net,
                                 std::optional<std::size_t> probe_port) {
    if (traj.dim != net.state_size()) throw DimensionMismatch("trajectory does not match the network");
    ClassifierInput in;
    in.times = traj.times;
    for (const Port& p : net.ports()) {
        if (p.kind == PortKind::Sg) in.angles.push_back(traj.channel(p.offset + 3));
    }
    const std::size_t probe = probe_port.value_or(default_probe_port(net));
    if (probe >= net.ports().size() || net.ports()[probe].kind != PortKind::Shunt) {
        throw Error("probe port must be a capacitor port");
    }
    in.probe = traj.channel(net.ports()[probe].offset);
    in.probe_name = net.port_name(probe) + "_Va";
    if (traj.has_derived()) {
        in.hamiltonian = traj.hamiltonian;
    } else {
        in.hamiltonian.resize(traj.size());
        for (std::size_t i = 0; i < traj.size(); ++i) in.hamiltonian[i] = total_energy(traj.state(i), net);
    }
    return in;
}

SteadyStateReport classify_steady_state(const Trajectory& traj, const PowerNetwork& net,
                                        const ClassifyOptions& options) {
    return classify_signals(classifier_input(traj, net, options.probe_port), options);
}

SteadyStateReport classify_signals(const ClassifierInput& in, const ClassifyOptions& options) {
    const std::size_t n = in.times.size();
    if (n < 16) throw GridError("trajectory too short to classify");
    if (in.probe.size() != n || in.hamiltonian.size() != n) {
        throw DimensionMismatch("classifier series differ in length");
    }
    SteadyStateReport rep;
    const double span = in.times.back() - in.times.front();
    const std::size_t first = window_start(in.times, options.window_fraction * span);
    const double h = uniform_spacing(in.times, first);

    rep.terminal_H = in.hamiltonian.back();
    const double half = in.times.front() + 0.5 * span;
    std::vector<double> transient;
    for (std::size_t i = 0; i < n && in.times[i] <= half; ++i) transient.push_back(in.hamiltonian[i]);
    std::nth_element(transient.begin(), transient.begin() + static_cast<std::ptrdiff_t>(transient.size() / 2),
                     transient.end());
    rep.median_transient_H = transient[transient.size() / 2];

    rep.frequencies = estimate_frequencies(in.times, in.angles, in.times.back() - in.times[first]);
    rep.probe = in.probe_name;
    const std::span<const double> signal = std::span<const double>(in.probe).subspan(first);

    const double omega = std::abs(rep.frequencies.mean);
    std::size_t window_samples = signal.size();
    if (omega > 0.0) {
        window_samples = static_cast<std::size_t>(std::llround(options.envelope_cycles * 2.0 * std::numbers::pi / omega / h));
    }
    rep.envelope_flatness = envelope_flatness(signal, window_samples);

    const auto spectrum = power_spectrum(signal);
    const double bin_omega = 2.0 * std::numbers::pi / (static_cast<double>(signal.size()) * h);
    rep.peaks = spectral_peaks(spectrum, bin_omega, options.line_peaks, options.peak_halfwidth);
    rep.dominant_fraction = rep.peaks.empty() ? 0.0 : rep.peaks.front().fraction;
    rep.line_fraction = 0.0;
    for (const auto& p : rep.peaks) rep.line_fraction += p.fraction;

    if (rep.terminal_H < options.collapse_frac * rep.median_transient_H) {
        rep.classification = Classification::Collapse;
    } else if (rep.frequencies.spread < options.spread_tol && rep.envelope_flatness < options.flatness_tol &&
               rep.dominant_fraction > options.peak_fraction) {
        rep.classification = Classification::Synchronized;
    } else if (rep.line_fraction >= options.line_spectrum_fraction) {
        rep.classification = Classification::LowFreqOscillation;
    } else {
        rep.classification = Classification::Aperiodic;
    }
    return rep;
}

}  // namespace phnet
