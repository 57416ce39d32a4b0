#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "exnls/experiments.hpp"

namespace exnls {

using nlohmann::json;

namespace {

const std::vector<std::pair<Scenario, std::string>>& scenario_names() {
    static const std::vector<std::pair<Scenario, std::string>> names{
        {Scenario::RadialGlobal, "RadialGlobal"},
        {Scenario::DecayRate, "DecayRate"},
        {Scenario::NonInflation, "NonInflation"},
        {Scenario::Perturbed, "Perturbed"},
        {Scenario::Stability, "Stability"},
        {Scenario::LinearStrichartz, "LinearStrichartz"},
        {Scenario::CompatCheck, "CompatCheck"},
        {Scenario::WConsistency, "WConsistency"},
    };
    return names;
}

void check_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw std::invalid_argument(where + " must be an object");
    for (const auto& [k, v] : obj.items()) {
        bool ok = false;
        for (const auto& a : allowed) ok = ok || a == k;
        if (!ok) throw std::invalid_argument("unknown key '" + k + "' in " + where);
    }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    return obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

double exponent_from_json(const json& v) {
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "infinity") return kInfinity;
        throw std::invalid_argument("exponent must be a number or \"inf\"");
    }
    return v.get<double>();
}

json exponent_to_json(double e) {
    if (std::isinf(e)) return "inf";
    return e;
}

std::string horizon_name(HorizonPolicy h) { return h == HorizonPolicy::Stop ? "stop" : "flag"; }

}  // namespace

std::string to_string(Scenario s) {
    for (const auto& [k, v] : scenario_names())
        if (k == s) return v;
    return "?";
}

Scenario scenario_from_string(const std::string& s) {
    for (const auto& [k, v] : scenario_names())
        if (v == s) return k;
    throw std::invalid_argument("unknown scenario '" + s + "'");
}

const std::vector<std::string>& scenario_option_keys(Scenario s) {
    static const std::map<Scenario, std::vector<std::string>> keys{
        {Scenario::RadialGlobal, {"flow"}},
        {Scenario::DecayRate, {"fit_window", "flow"}},
        {Scenario::NonInflation, {"split_time", "orders", "compat_order", "flow"}},
        {Scenario::Perturbed, {"epsilons", "perturbation"}},
        {Scenario::Stability, {"epsilons", "perturbation"}},
        {Scenario::LinearStrichartz,
         {"ensemble_size", "pairs", "resolutions", "mode_count", "max_mode_index"}},
        {Scenario::CompatCheck, {"compat_order", "compat_kind"}},
        {Scenario::WConsistency, {"epsilons", "perturbation", "levels"}},
    };
    return keys.at(s);
}

int RunManifest::stride() const {
    const double ratio = sample_every / dt;
    const long long k = std::llround(ratio);
    if (k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-9 * ratio)
        throw std::invalid_argument("sample_every must be a positive multiple of dt");
    return static_cast<int>(k);
}

int RunManifest::total_steps() const {
    const double ratio = t_final / dt;
    const long long k = std::llround(ratio);
    if (k < 0 || std::abs(ratio - static_cast<double>(k)) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("t_final must be a multiple of dt");
    return static_cast<int>(k);
}

void RunManifest::validate() const {
    params.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be > 0");
    if (!(t_final >= 0.0)) throw std::invalid_argument("t_final must be >= 0");
    if (num_radial < 8) throw std::invalid_argument("num_radial must be >= 8");
    if (scheme != "CrankNicolsonStrang") throw std::invalid_argument("unknown scheme '" + scheme + "'");
    stride();
    if (total_steps() % stride() != 0)
        throw std::invalid_argument("t_final must be a multiple of sample_every");
    validate_profile(initial_data);
    validate_profile(options.perturbation);
    if (options.flow != "linear" && options.flow != "defocusing")
        throw std::invalid_argument("flow must be linear or defocusing");
    if (options.compat_kind != "linear" && options.compat_kind != "nonlinear")
        throw std::invalid_argument("compat_kind must be linear or nonlinear");
    if (options.fit_t0 >= options.fit_t1) throw std::invalid_argument("fit_window must be increasing");
    if (options.levels < 2) throw std::invalid_argument("levels must be >= 2");
    if (options.ensemble_size < 1) throw std::invalid_argument("ensemble_size must be >= 1");
    for (double e : options.epsilons)
        if (!(e > 0.0)) throw std::invalid_argument("epsilons must be > 0");
}

json to_json(const ProfileSpec& p) {
    json j;
    j["profile"] = p.name;
    for (const auto& [k, v] : p.values) j[k] = v;
    if (!p.modes.empty()) {
        j["modes"] = p.modes;
        json c = json::array();
        for (const auto& z : p.coefficients) c.push_back({z.real(), z.imag()});
        j["coefficients"] = c;
    }
    return j;
}

ProfileSpec parse_profile(const json& j) {
    if (!j.is_object() || !j.contains("profile"))
        throw std::invalid_argument("initial data needs a 'profile' name");
    ProfileSpec p;
    p.name = j.at("profile").get<std::string>();
    const auto& keys = profile_keys(p.name);
    for (const auto& [k, v] : j.items()) {
        if (k == "profile") continue;
        if (k == "modes" || k == "coefficients") {
            if (p.name != "eigenmodes")
                throw std::invalid_argument("unknown key '" + k + "' in profile " + p.name);
            continue;
        }
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            throw std::invalid_argument("unknown key '" + k + "' in profile " + p.name);
        p.values[k] = v.get<double>();
    }
    if (j.contains("modes")) p.modes = j.at("modes").get<std::vector<int>>();
    if (j.contains("coefficients")) {
        for (const auto& c : j.at("coefficients")) {
            if (c.is_number()) p.coefficients.emplace_back(c.get<double>(), 0.0);
            else p.coefficients.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
        }
    }
    validate_profile(p);
    return p;
}

RunManifest parse_manifest(const json& j) {
    check_keys(j,
               {"scenario", "params", "grid", "dt", "t_final", "sample_every", "seed",
                "initial_data", "output", "horizon", "scheme", "options", "thresholds", "version"},
               "manifest");
    RunManifest m;
    m.scenario = scenario_from_string(j.at("scenario").get<std::string>());

    const json& pj = j.at("params");
    check_keys(pj, {"n", "p", "r_max"}, "params");
    m.params = ModelParams::make(pj.at("n").get<int>(), pj.at("p").get<double>(),
                                 pj.at("r_max").get<double>());

    const json& gj = j.at("grid");
    check_keys(gj, {"num_radial", "num_angular"}, "grid");
    m.num_radial = gj.at("num_radial").get<int>();
    m.num_angular = get_or(gj, "num_angular", 1);

    m.dt = j.at("dt").get<double>();
    m.t_final = j.at("t_final").get<double>();
    m.sample_every = get_or(j, "sample_every", m.dt);
    m.seed = get_or<std::uint64_t>(j, "seed", 0);
    m.initial_data = j.contains("initial_data") ? parse_profile(j.at("initial_data")) : ProfileSpec{};
    m.scheme = get_or<std::string>(j, "scheme", m.scheme);

    if (j.contains("output")) {
        const json& oj = j.at("output");
        check_keys(oj, {"dir", "csv", "report"}, "output");
        m.output_dir = get_or<std::string>(oj, "dir", "");
        m.csv_name = get_or<std::string>(oj, "csv", m.csv_name);
        m.report_name = get_or<std::string>(oj, "report", m.report_name);
    }
    if (j.contains("horizon")) {
        const auto h = j.at("horizon").get<std::string>();
        if (h == "stop") m.horizon = HorizonPolicy::Stop;
        else if (h == "flag") m.horizon = HorizonPolicy::Flag;
        else throw std::invalid_argument("horizon must be stop or flag");
    }

    if (j.contains("options")) {
        const json& o = j.at("options");
        check_keys(o, scenario_option_keys(m.scenario), "options for " + to_string(m.scenario));
        auto& op = m.options;
        if (o.contains("fit_window")) {
            const auto w = o.at("fit_window").get<std::vector<double>>();
            if (w.size() != 2) throw std::invalid_argument("fit_window needs two entries");
            op.fit_t0 = w[0];
            op.fit_t1 = w[1];
        }
        op.flow = get_or<std::string>(o, "flow", op.flow);
        op.split_time = get_or(o, "split_time", op.split_time);
        if (o.contains("orders")) op.orders = o.at("orders").get<std::vector<int>>();
        op.compat_order = get_or(o, "compat_order", op.compat_order);
        op.compat_kind = get_or<std::string>(o, "compat_kind", op.compat_kind);
        if (o.contains("epsilons")) op.epsilons = o.at("epsilons").get<std::vector<double>>();
        if (o.contains("perturbation")) op.perturbation = parse_profile(o.at("perturbation"));
        op.ensemble_size = get_or(o, "ensemble_size", op.ensemble_size);
        if (o.contains("pairs")) {
            op.pairs.clear();
            for (const auto& pr : o.at("pairs"))
                op.pairs.emplace_back(exponent_from_json(pr.at(0)), exponent_from_json(pr.at(1)));
        }
        if (o.contains("resolutions")) op.resolutions = o.at("resolutions").get<std::vector<int>>();
        op.mode_count = get_or(o, "mode_count", op.mode_count);
        op.max_mode_index = get_or(o, "max_mode_index", op.max_mode_index);
        op.levels = get_or(o, "levels", op.levels);
    }

    if (j.contains("thresholds")) {
        const json& t = j.at("thresholds");
        check_keys(t,
                   {"mass_drift", "energy_drift", "decay_exponent", "monotonicity",
                    "strichartz_variation", "noninflation_ratio", "stability_curvature",
                    "epsilon_slope_tolerance", "w_order"},
                   "thresholds");
        auto& th = m.thresholds;
        th.mass_drift = get_or(t, "mass_drift", th.mass_drift);
        th.energy_drift = get_or(t, "energy_drift", th.energy_drift);
        th.decay_exponent = get_or(t, "decay_exponent", th.decay_exponent);
        th.monotonicity = get_or(t, "monotonicity", th.monotonicity);
        th.strichartz_variation = get_or(t, "strichartz_variation", th.strichartz_variation);
        th.noninflation_ratio = get_or(t, "noninflation_ratio", th.noninflation_ratio);
        th.stability_curvature = get_or(t, "stability_curvature", th.stability_curvature);
        th.epsilon_slope_tolerance = get_or(t, "epsilon_slope_tolerance", th.epsilon_slope_tolerance);
        th.w_order = get_or(t, "w_order", th.w_order);
    }
    m.validate();
    return m;
}

RunManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("manifest " + path.string() + ": " + e.what());
    }
    return parse_manifest(j);
}

json to_json(const RunManifest& m) {
    json j;
    j["scenario"] = to_string(m.scenario);
    j["params"] = {{"n", m.params.n}, {"p", m.params.p}, {"r_max", m.params.r_max}};
    j["grid"] = {{"num_radial", m.num_radial}, {"num_angular", m.num_angular}};
    j["dt"] = m.dt;
    j["t_final"] = m.t_final;
    j["sample_every"] = m.sample_every;
    j["seed"] = m.seed;
    j["initial_data"] = to_json(m.initial_data);
    j["output"] = {{"dir", m.output_dir}, {"csv", m.csv_name}, {"report", m.report_name}};
    j["horizon"] = horizon_name(m.horizon);
    j["scheme"] = m.scheme;

    const auto& op = m.options;
    json o;
    for (const auto& key : scenario_option_keys(m.scenario)) {
        if (key == "fit_window") o[key] = {op.fit_t0, op.fit_t1};
        else if (key == "flow") o[key] = op.flow;
        else if (key == "split_time") o[key] = op.split_time;
        else if (key == "orders") o[key] = op.orders;
        else if (key == "compat_order") o[key] = op.compat_order;
        else if (key == "compat_kind") o[key] = op.compat_kind;
        else if (key == "epsilons") o[key] = op.epsilons;
        else if (key == "perturbation") o[key] = to_json(op.perturbation);
        else if (key == "ensemble_size") o[key] = op.ensemble_size;
        else if (key == "pairs") {
            json pairs = json::array();
            for (const auto& [q, r] : op.pairs) pairs.push_back({exponent_to_json(q), exponent_to_json(r)});
            o[key] = pairs;
        } else if (key == "resolutions") o[key] = op.resolutions;
        else if (key == "mode_count") o[key] = op.mode_count;
        else if (key == "max_mode_index") o[key] = op.max_mode_index;
        else if (key == "levels") o[key] = op.levels;
    }
    j["options"] = o;

    const auto& th = m.thresholds;
    j["thresholds"] = {{"mass_drift", th.mass_drift},
                       {"energy_drift", th.energy_drift},
                       {"decay_exponent", th.decay_exponent},
                       {"monotonicity", th.monotonicity},
                       {"strichartz_variation", th.strichartz_variation},
                       {"noninflation_ratio", th.noninflation_ratio},
                       {"stability_curvature", th.stability_curvature},
                       {"epsilon_slope_tolerance", th.epsilon_slope_tolerance},
                       {"w_order", th.w_order}};
    j["version"] = kVersion;
    return j;
}

}  // namespace exnls
