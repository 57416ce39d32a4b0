#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "exnls/experiments.hpp"

namespace exnls {

using nlohmann::json;

bool RunResult::all_pass() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

int RunResult::exit_code() const {
    if (anomaly) return 3;
    return all_pass() ? 0 : 2;
}

namespace {

std::string exponent_label(double e) {
    if (std::isinf(e)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", e);
    return buf;
}

json number_or_null(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;
}

json verdict_json(const Verdict& v) {
    return {{"name", v.name}, {"pass", v.pass}, {"value", number_or_null(v.value)},
            {"threshold", number_or_null(v.threshold)}, {"detail", v.detail}};
}

json fit_json(const FitResult& f) {
    return {{"exponent", number_or_null(f.exponent)},
            {"confidence_halfwidth", number_or_null(f.confidence_halfwidth)},
            {"window", {f.t_a, number_or_null(f.t_b)}},
            {"residual", number_or_null(f.residual)},
            {"samples", f.samples},
            {"skipped", f.skipped},
            {"note", f.note},
            {"pass", f.pass}};
}

Flow flow_of(const RunManifest& m) {
    return m.options.flow == "linear" ? Flow::Linear : Flow::Defocusing;
}

EvolveConfig evolve_config(const RunManifest& m, Flow flow, bool snapshots) {
    EvolveConfig c;
    c.dt = m.dt;
    c.steps = m.total_steps();
    c.stride = m.stride();
    c.flow = flow;
    c.horizon = m.horizon;
    c.keep_snapshots = snapshots;
    return c;
}

DomainPtr domain_of(const RunManifest& m) {
    return build_domain(m.params, m.num_radial, m.num_angular);
}

double relative_drift(double x, double x0) {
    if (x0 == 0.0) return x == 0.0 ? 0.0 : kInfinity;
    return std::abs(x - x0) / std::abs(x0);
}

struct Drifts {
    double mass = 0.0;
    double energy = 0.0;
};

Drifts drifts(const std::vector<DiagnosticsRecord>& s) {
    Drifts d;
    if (s.empty()) return d;
    for (const auto& r : s) {
        if (!r.valid) break;
        d.mass = std::max(d.mass, relative_drift(r.mass, s.front().mass));
        d.energy = std::max(d.energy, relative_drift(r.energy, s.front().energy));
    }
    return d;
}

void conservation_verdicts(const RunManifest& m, const std::vector<DiagnosticsRecord>& s,
                           Flow flow, RunResult& out, const std::string& prefix = "") {
    const Drifts d = drifts(s);
    out.verdicts.push_back({prefix + "mass_drift", d.mass < m.thresholds.mass_drift, d.mass,
                            m.thresholds.mass_drift, "max relative mass drift over valid records"});
    if (flow == Flow::Defocusing)
        out.verdicts.push_back({prefix + "energy_drift", d.energy < m.thresholds.energy_drift,
                                d.energy, m.thresholds.energy_drift,
                                "max relative energy drift over valid records"});
}

void strauss_summary(const RunManifest& m, const std::vector<DiagnosticsRecord>& s,
                     RunResult& out) {
    double worst = 0.0;
    int flagged = 0;
    for (const auto& r : s) {
        if (r.strauss_flagged()) ++flagged;
        else worst = std::max(worst, r.strauss_ratio);
    }
    const double c = strauss_constant(m.params.n);
    out.report["strauss"] = {{"max_ratio", worst}, {"flagged_records", flagged},
                             {"constant", number_or_null(c)}};
    if (m.num_angular == 1 && m.params.n >= 3)
        out.verdicts.push_back({"strauss_bound", worst <= c, worst, c,
                                "sup over records of the Strauss quotient"});
}

void uniform_bound_summary(const FieldState& u0, const std::vector<DiagnosticsRecord>& s,
                           RunResult& out) {
    double sup = 0.0;
    for (const auto& r : s)
        if (r.valid) sup = std::max(sup, r.linf);
    const double h1 = sobolev_norm(u0, 1);
    out.report["uniform_bound"] = {{"sup_linf", sup}, {"h1_initial", h1},
                                   {"ratio", h1 > 0.0 ? json(sup / h1) : json(nullptr)}};
}

void adopt(RunResult& out, Evolution& ev) {
    out.series = std::move(ev.series);
    if (ev.anomaly) {
        out.anomaly = true;
        out.anomaly_reason = ev.anomaly_reason + " at step " + std::to_string(ev.anomaly_step);
    }
    out.report["horizon_reached"] = ev.horizon_reached;
}

json audit_json(const MonotonicityReport& a) {
    json rows = json::array();
    for (const auto& r : a.rows)
        rows.push_back({{"t", r.t}, {"T", r.T}, {"pc_energy", r.pc_energy},
                        {"cone_energy", r.cone_energy}, {"cone_amplitude", r.cone_amplitude},
                        {"weighted_mass_ratio", r.weighted_mass_ratio}});
    return {{"rows", rows},
            {"violations_pc", a.violations_pc},
            {"violations_cone", a.violations_cone},
            {"tolerance_pc", a.tolerance_pc},
            {"tolerance_cone", a.tolerance_cone},
            {"max_increase_pc", a.max_increase_pc},
            {"max_increase_cone", a.max_increase_cone},
            {"assessed", a.assessed},
            {"amplitude_constant", a.amplitude_constant},
            {"strauss_constant_sq", number_or_null(a.strauss_constant_sq)},
            {"amplitude_bound_holds", a.amplitude_bound_holds}};
}

// Evolves u and every v = u + ε φ in lockstep and returns, per ε, the
// samples of (E(w), ‖w‖²).
struct PairedRuns {
    std::vector<double> times;
    std::vector<std::vector<StabilityEnergy>> w;  // per epsilon
    std::vector<std::vector<DiagnosticsRecord>> v_series;
    bool anomaly = false;
    std::string reason;
};

PairedRuns paired_runs(const RunManifest& m, const FieldState& u0, const FieldState& phi,
                       const std::vector<double>& eps, std::vector<DiagnosticsRecord>& u_series) {
    const LaplacianOp op(u0.domain_ptr());
    PropagatorConfig pc;
    pc.dt = m.dt;
    const StrangIntegrator strang(op, m.params, pc);
    PairedRuns pr;
    FieldState u = u0;
    std::vector<FieldState> v;
    for (double e : eps) v.push_back(u0 + Complex(e) * phi);
    pr.w.resize(eps.size());
    pr.v_series.resize(eps.size());
    const int stride = m.stride();
    const int samples = m.total_steps() / stride;
    for (int s = 0; s <= samples; ++s) {
        if (s > 0) {
            u = strang.advance(u, stride);
            for (auto& vi : v) vi = strang.advance(vi, stride);
        }
        pr.times.push_back(u.time());
        u_series.push_back(diagnostics(m.params, u));
        if (!std::isfinite(u_series.back().mass)) {
            pr.anomaly = true;
            pr.reason = "non-finite field at step " + std::to_string(s * stride);
            return pr;
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            pr.w[i].push_back(stability_energy(m.params, u, v[i]));
            pr.v_series[i].push_back(diagnostics(m.params, v[i]));
            if (!std::isfinite(pr.v_series[i].back().mass)) {
                pr.anomaly = true;
                pr.reason = "non-finite perturbed field at step " + std::to_string(s * stride);
                return pr;
            }
        }
    }
    return pr;
}

FieldState normalized_perturbation(const DomainPtr& dom, const RunManifest& m, int order) {
    FieldState phi = make_profile(dom, m.options.perturbation);
    const double norm = sobolev_norm(phi, order);
    if (!(norm > 0.0)) throw std::invalid_argument("perturbation profile vanishes");
    phi *= Complex(1.0 / norm);
    return phi;
}

void run_evolution_scenario(const RunManifest& m, RunResult& out) {
    const DomainPtr dom = domain_of(m);
    const FieldState u0 = make_profile(dom, m.initial_data);
    const Flow flow = flow_of(m);

    CompatReport compat;
    if (m.scenario == Scenario::NonInflation) {
        const bool nonlinear = flow == Flow::Defocusing;
        compat = nonlinear ? nonlinear_compat_sequence(m.params, u0, m.options.compat_order)
                           : linear_compat_sequence(u0, {}, m.options.compat_order);
        out.report["compatibility"] = to_json(compat);
        if (!compat.pass()) {
            const NonInflationReport ni = noninflation_audit({}, m.options.orders, &compat);
            out.report["noninflation"] = {{"refused", true}, {"reason", ni.reason}};
            out.verdicts.push_back({"noninflation", false, std::numeric_limits<double>::quiet_NaN(),
                                    m.thresholds.noninflation_ratio, "refused: " + ni.reason});
            return;
        }
    }

    const bool snapshots = m.scenario == Scenario::DecayRate;
    Evolution ev = evolve(m.params, u0, evolve_config(m, flow, snapshots));
    std::vector<FieldState> snaps = std::move(ev.snapshots);
    adopt(out, ev);
    conservation_verdicts(m, out.series, flow, out);
    strauss_summary(m, out.series, out);
    uniform_bound_summary(u0, out.series, out);

    if (m.scenario == Scenario::DecayRate) {
        bool all_zero = true;
        for (const auto& z : u0.values()) all_zero = all_zero && z == Complex{};
        if (all_zero) {
            FitResult f;
            f.t_a = m.options.fit_t0;
            f.t_b = m.options.fit_t1;
            f.skipped = true;
            f.note = "zero data; fit skipped";
            out.report["decay_fit"] = fit_json(f);
        } else {
            const double t_end = std::min(m.options.fit_t1, m.t_final);
            try {
                const FitResult f = decay_fit(out.series, m.options.fit_t0, t_end,
                                              m.thresholds.decay_exponent);
                out.report["decay_fit"] = fit_json(f);
                if (!f.skipped)
                    out.verdicts.push_back({"decay_exponent", f.pass, f.exponent,
                                            m.thresholds.decay_exponent,
                                            "slope of log sup r^{n/2-1}|u| against log<t>"});
            } catch (const std::invalid_argument& e) {
                out.report["decay_fit"] = {{"error", e.what()}};
                out.verdicts.push_back({"decay_exponent", false,
                                        std::numeric_limits<double>::quiet_NaN(),
                                        m.thresholds.decay_exponent, e.what()});
            }
        }

        const double e1_0 = out.series.front().pc_energy;
        const double wm = 0.125 * weighted_mass(u0);
        const double gap = std::abs(e1_0 - wm) / std::max(wm, std::numeric_limits<double>::min());
        out.report["pc_energy_t0"] = {{"pc_energy", e1_0}, {"eighth_weighted_mass", wm},
                                      {"relative_gap", wm > 0.0 ? json(gap) : json(0.0)}};

        if (m.num_angular == 1) {
            std::vector<FieldState> late;
            for (std::size_t i = 0; i < snaps.size(); ++i)
                if (snaps[i].time() >= 1.0 - 1e-12 && out.series[i].valid) late.push_back(snaps[i]);
            snaps.clear();
            if (!late.empty()) {
                const MonotonicityReport audit = monotonicity_audit(late, m.params, flow);
                out.report["monotonicity"] = audit_json(audit);
                if (audit.assessed)
                    out.verdicts.push_back({"pc_monotonicity", audit.pass(),
                                            static_cast<double>(audit.violations_pc + audit.violations_cone),
                                            0.0, "increases of E1 or cone energy beyond tolerance"});
            }
        }
    }

    if (m.scenario == Scenario::NonInflation) {
        const NonInflationReport ni = noninflation_audit(out.series, m.options.orders, &compat,
                                                         m.options.split_time,
                                                         m.thresholds.noninflation_ratio);
        json ratios = json::object();
        for (const auto& [k, r] : ni.ratios) ratios["h" + std::to_string(k)] = number_or_null(r);
        out.report["noninflation"] = {{"ratios", ratios}, {"skipped", ni.skipped},
                                      {"reason", ni.reason}, {"pass", ni.pass}};
        if (!ni.skipped) {
            for (const auto& [k, r] : ni.ratios)
                out.verdicts.push_back({"noninflation_h" + std::to_string(k),
                                        r <= m.thresholds.noninflation_ratio, r,
                                        m.thresholds.noninflation_ratio,
                                        "sup late / sup early of the H^k norm"});
        }
    }
}

void run_perturbed(const RunManifest& m, RunResult& out) {
    if (!(m.params.p > m.params.n + 6))
        throw std::invalid_argument("Perturbed scenario needs p > n + 6");
    const DomainPtr dom = domain_of(m);
    const FieldState u0 = make_profile(dom, m.initial_data);
    const int order = std::min(4, 2 * m.params.m_smooth);
    const double size = sobolev_norm(u0, order);
    const FieldState phi = normalized_perturbation(dom, m, order);
    std::vector<double> eps;
    for (double e : m.options.epsilons) eps.push_back(e * (size > 0.0 ? size : 1.0));

    PairedRuns pr = paired_runs(m, u0, phi, eps, out.series);
    if (pr.anomaly) {
        out.anomaly = true;
        out.anomaly_reason = pr.reason;
    }
    conservation_verdicts(m, out.series, Flow::Defocusing, out);
    json runs = json::array();
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const auto& vs = pr.v_series[i];
        const std::string tag = "eps_" + std::to_string(i) + "_";
        conservation_verdicts(m, vs, Flow::Defocusing, out, tag);
        double sup_h = 0.0, sup_w = 0.0;
        for (const auto& r : vs) sup_h = std::max(sup_h, r.sobolev.at(order));
        for (const auto& w : pr.w[i]) sup_w = std::max(sup_w, std::sqrt(w.l2_squared));
        runs.push_back({{"epsilon", m.options.epsilons[i]}, {"absolute_epsilon", eps[i]},
                        {"samples", vs.size()}, {"sup_h_norm", sup_h}, {"sobolev_order", order},
                        {"sup_w_l2_over_epsilon", sup_w / eps[i]}});
        const bool finished = vs.size() == pr.times.size() && !pr.anomaly &&
                              std::abs(vs.back().time - m.t_final) < 1e-9 * std::max(1.0, m.t_final);
        out.verdicts.push_back({tag + "global", finished, vs.empty() ? 0.0 : vs.back().time,
                                m.t_final, "perturbed run reached t_final with finite fields"});
    }
    out.report["perturbed"] = runs;
}

void run_stability(const RunManifest& m, RunResult& out) {
    const DomainPtr dom = domain_of(m);
    const FieldState u0 = make_profile(dom, m.initial_data);
    const FieldState phi = normalized_perturbation(dom, m, 0);
    PairedRuns pr = paired_runs(m, u0, phi, m.options.epsilons, out.series);
    if (pr.anomaly) {
        out.anomaly = true;
        out.anomaly_reason = pr.reason;
    }
    json fits = json::array();
    std::vector<double> le, lw;
    for (std::size_t i = 0; i < m.options.epsilons.size(); ++i) {
        const StabilityFit f = stability_fit(pr.times, pr.w[i], m.thresholds.stability_curvature);
        json ew = json::array();
        for (const auto& w : pr.w[i]) ew.push_back(w.energy);
        fits.push_back({{"epsilon", m.options.epsilons[i]}, {"C", number_or_null(f.C)},
                        {"curvature", f.curvature}, {"max_second_difference", f.max_second_difference},
                        {"E_w0", f.e_w0}, {"initial_size", f.initial_size},
                        {"identical", f.identical}, {"pass", f.pass}, {"E_w", ew}});
        out.verdicts.push_back({"stability_eps_" + std::to_string(i), f.pass, f.curvature,
                                m.thresholds.stability_curvature,
                                "curvature of log E(w); C = " + std::to_string(f.C)});
        if (f.e_w0 > 0.0) {
            le.push_back(std::log(m.options.epsilons[i]));
            lw.push_back(std::log(f.e_w0));
        }
    }
    json times = pr.times;
    out.report["stability"] = {{"times", times}, {"fits", fits}};
    if (le.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < le.size(); ++i) {
            mx += le[i];
            my += lw[i];
        }
        mx /= le.size();
        my /= le.size();
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < le.size(); ++i) {
            sxx += (le[i] - mx) * (le[i] - mx);
            sxy += (le[i] - mx) * (lw[i] - my);
        }
        const double slope = sxy / sxx;
        out.report["stability"]["epsilon_slope"] = slope;
        out.verdicts.push_back({"stability_epsilon_scaling",
                                std::abs(slope - 2.0) <= m.thresholds.epsilon_slope_tolerance, slope,
                                2.0, "log-log slope of E(w(0)) against epsilon"});
    }
}

void run_strichartz(const RunManifest& m, RunResult& out) {
    const StrichartzTable t = strichartz_quotient(m);
    json rows = json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"q", std::isinf(r.q) ? json("inf") : json(r.q)},
                        {"r", std::isinf(r.r) ? json("inf") : json(r.r)},
                        {"num_radial", r.num_radial}, {"max", r.max}, {"median", r.median},
                        {"quotients", r.quotients}});
    json var = json::array();
    for (const auto& [pr, v] : t.variation) {
        const std::string name =
            "strichartz_variation_q" + exponent_label(pr.first) + "_r" + exponent_label(pr.second);
        var.push_back({{"q", std::isinf(pr.first) ? json("inf") : json(pr.first)},
                       {"r", pr.second}, {"variation", v}});
        out.verdicts.push_back({name, v < m.thresholds.strichartz_variation, v,
                                m.thresholds.strichartz_variation,
                                "largest over smallest ensemble max across resolutions"});
    }
    for (const auto& r : t.rows) {
        if (!std::isinf(r.q) || r.r != 2.0) continue;
        double dev = 0.0;
        for (double q : r.quotients) dev = std::max(dev, std::abs(q - 1.0));
        out.verdicts.push_back({"strichartz_mass_quotient_N" + std::to_string(r.num_radial),
                                dev <= 1e-12, dev, 1e-12, "|quotient - 1| for (inf, 2)"});
    }
    out.report["strichartz"] = {{"rows", rows}, {"variation", var}};
}

void run_compat(const RunManifest& m, RunResult& out) {
    const DomainPtr dom = domain_of(m);
    const FieldState u0 = make_profile(dom, m.initial_data);
    const CompatReport rep = m.options.compat_kind == "linear"
                                 ? linear_compat_sequence(u0, {}, m.options.compat_order)
                                 : nonlinear_compat_sequence(m.params, u0, m.options.compat_order);
    out.report["compatibility"] = to_json(rep);
    out.verdicts.push_back({"compatibility", rep.pass(), static_cast<double>(rep.first_failure()),
                            static_cast<double>(m.options.compat_order),
                            "first failing j (-1 when all traces vanish)"});
}

void run_w(const RunManifest& m, RunResult& out) {
    const WConsistencyReport rep = w_consistency(m);
    json levels = json::array();
    for (const auto& l : rep.levels)
        levels.push_back({{"dt", l.dt}, {"dr", l.dr}, {"error", l.error}});
    out.report["w_consistency"] = {{"levels", levels}, {"order", rep.order}, {"pass", rep.pass}};
    out.verdicts.push_back({"w_consistency_order", rep.pass, rep.order, m.thresholds.w_order,
                            "fitted order in dt of |w - (v - u)| / |v - u|"});
}

}  // namespace

RunResult run_scenario(const RunManifest& m) {
    m.validate();
    RunResult out;
    out.report = json::object();
    switch (m.scenario) {
        case Scenario::RadialGlobal:
        case Scenario::DecayRate:
        case Scenario::NonInflation: run_evolution_scenario(m, out); break;
        case Scenario::Perturbed: run_perturbed(m, out); break;
        case Scenario::Stability: run_stability(m, out); break;
        case Scenario::LinearStrichartz: run_strichartz(m, out); break;
        case Scenario::CompatCheck: run_compat(m, out); break;
        case Scenario::WConsistency: run_w(m, out); break;
    }
    json verdicts = json::array();
    for (const auto& v : out.verdicts) verdicts.push_back(verdict_json(v));
    out.report["manifest"] = to_json(m);
    out.report["verdicts"] = verdicts;
    out.report["anomaly"] = {{"flag", out.anomaly}, {"reason", out.anomaly_reason}};
    out.report["all_pass"] = out.all_pass();
    out.report["exit_code"] = out.exit_code();
    out.report["environment"] = environment_stamp();
    return out;
}

}  // namespace exnls
