#pragma once

// Scenario runner: manifests, the evolution driver, fits and audits over
// diagnostic series, and the CSV / JSON artifacts.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "exnls/compatibility.hpp"
#include "exnls/functionals.hpp"
#include "exnls/profiles.hpp"
#include "exnls/pseudoconformal.hpp"

namespace exnls {

inline constexpr const char* kVersion = "exnls 1.0.0";

enum class Scenario {
    RadialGlobal,
    DecayRate,
    NonInflation,
    Perturbed,
    Stability,
    LinearStrichartz,
    CompatCheck,
    WConsistency,
};

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

/// What the driver does once the outer-shell mass fraction reaches the
/// horizon threshold: stop the run (an anomaly) or keep going with the
/// remaining records marked invalid.
enum class HorizonPolicy { Stop, Flag };

/// Calibration constants; every manifest records the values it ran with.
struct Thresholds {
    double mass_drift = 1e-10;
    double energy_drift = 1e-4;
    double decay_exponent = -0.85;
    double monotonicity = kMonotonicityTolerance;
    double strichartz_variation = 2.0;
    double noninflation_ratio = 3.0;
    double stability_curvature = 0.05;  // bound on 2a in log E(w) ≈ a t² + b t + c
    double epsilon_slope_tolerance = 0.1;
    double w_order = 1.0;
};

/// Scenario-specific settings.  Only the keys listed for a scenario in
/// `scenario_option_keys` may appear in a manifest.
struct ScenarioOptions {
    double fit_t0 = 2.0;  // DecayRate
    double fit_t1 = 40.0;
    double split_time = 5.0;          // NonInflation
    std::vector<int> orders{2, 4};
    int compat_order = 2;             // NonInflation, CompatCheck
    std::string compat_kind = "nonlinear";  // CompatCheck: linear | nonlinear
    std::vector<double> epsilons{1e-1, 1e-2, 1e-3};  // Perturbed, Stability, WConsistency
    ProfileSpec perturbation{"sine_mode", {{"k", 1.0}}, {}, {}};
    int ensemble_size = 20;           // LinearStrichartz
    std::vector<std::pair<double, double>> pairs{{kInfinity, 2.0}, {4.0, 3.0}};
    std::vector<int> resolutions;     // LinearStrichartz; default N, 2N, 4N
    int mode_count = 8;
    int max_mode_index = 24;
    int levels = 3;                   // WConsistency
    std::string flow = "defocusing";  // RadialGlobal, DecayRate, NonInflation: linear | defocusing
};

const std::vector<std::string>& scenario_option_keys(Scenario s);

struct RunManifest {
    Scenario scenario = Scenario::RadialGlobal;
    ModelParams params;
    int num_radial = 1000;
    int num_angular = 1;
    double dt = 1e-3;
    double t_final = 1.0;
    double sample_every = 0.1;
    std::uint64_t seed = 0;
    ProfileSpec initial_data;
    std::string output_dir;  // empty: no files written
    std::string csv_name = "diagnostics.csv";
    std::string report_name = "report.json";
    HorizonPolicy horizon = HorizonPolicy::Stop;
    ScenarioOptions options;
    Thresholds thresholds;
    std::string scheme = "CrankNicolsonStrang";

    /// Sampling stride in steps; sample_every must be a multiple of dt.
    int stride() const;
    int total_steps() const;
    void validate() const;
};

/// Parses a manifest; unknown keys anywhere are errors.
RunManifest parse_manifest(const nlohmann::json& j);
RunManifest load_manifest(const std::filesystem::path& path);
nlohmann::json to_json(const RunManifest& m);

nlohmann::json to_json(const ProfileSpec& p);
ProfileSpec parse_profile(const nlohmann::json& j);
nlohmann::json to_json(const CompatReport& r);
nlohmann::json to_json(const DiagnosticsRecord& r);

// ---------------------------------------------------------------------------
// Evolution driver

struct Evolution {
    std::vector<DiagnosticsRecord> series;
    std::vector<FieldState> snapshots;  // filled when requested
    bool anomaly = false;
    std::string anomaly_reason;
    long long anomaly_step = -1;
    bool horizon_reached = false;
};

struct EvolveConfig {
    double dt = 1e-3;
    int steps = 0;
    int stride = 1;
    Flow flow = Flow::Defocusing;
    HorizonPolicy horizon = HorizonPolicy::Stop;
    bool keep_snapshots = false;
};

/// Advances u0 and records diagnostics every `stride` steps (including t0).
Evolution evolve(const ModelParams& params, const FieldState& u0, const EvolveConfig& cfg);

// ---------------------------------------------------------------------------
// Fits and audits

struct FitResult {
    double exponent = 0.0;
    double confidence_halfwidth = 0.0;  // 95% Student-t
    double t_a = 0.0;
    double t_b = 0.0;
    double residual = 0.0;  // RMS of the log residuals
    int samples = 0;
    bool skipped = false;
    std::string note;
    bool pass = false;
};

/// Least squares of log(sup_weighted_amp) against log⟨t⟩ over the valid
/// records with t in [t_a, t_b].  Throws with fewer than 8 samples; a zero
/// amplitude skips the fit with a note.
FitResult decay_fit(std::span<const DiagnosticsRecord> series, double t_a, double t_b,
                    double threshold = -0.85);

struct StabilityFit {
    double C = 0.0;
    double curvature = 0.0;  // 2a of the quadratic fit of log E(w)
    double max_second_difference = 0.0;
    double e_w0 = 0.0;       // E(w(0))
    double initial_size = 0.0;  // E(w(0)) + ‖w(0)‖²
    bool identical = false;
    bool pass = false;
};

/// Smallest C with E(w(t)) ≤ C e^{Ct} (E(w(0)) + ‖w(0)‖²) on the samples, and
/// the second-difference test: the quadratic coefficient of the least-squares
/// fit of log E(w(t)) gives a curvature that must not exceed the tolerance.
StabilityFit stability_fit(std::span<const double> times, std::span<const StabilityEnergy> w,
                           double curvature_tolerance = 0.05);
StabilityFit stability_fit(const ModelParams& params, std::span<const FieldState> u_series,
                           std::span<const FieldState> v_series,
                           double curvature_tolerance = 0.05);

struct NonInflationReport {
    std::vector<std::pair<int, double>> ratios;  // (k, sup late / sup early)
    bool refused = false;
    bool skipped = false;
    std::string reason;
    bool pass = false;
};

/// sup_{t ≥ split} ‖u‖_{H^k} / sup_{t < split} ‖u‖_{H^k} over valid records.
/// Refuses when `compat` is given and failed.
NonInflationReport noninflation_audit(std::span<const DiagnosticsRecord> series,
                                      const std::vector<int>& orders,
                                      const CompatReport* compat, double split = 5.0,
                                      double threshold = 3.0);

struct StrichartzRow {
    double q = 0.0;
    double r = 0.0;
    int num_radial = 0;
    double max = 0.0;
    double median = 0.0;
    std::vector<double> quotients;
};

struct StrichartzTable {
    std::vector<StrichartzRow> rows;
    // Per pair: largest ensemble max over smallest ensemble max across the
    // resolutions.
    std::vector<std::pair<std::pair<double, double>, double>> variation;
    bool pass = false;
};

/// Linear flow of `ensemble_size` seeded eigenmode combinations on each
/// resolution; quotient ‖u‖_{L^q([0,T]; L^r)} / ‖u0‖_{L²}.
StrichartzTable strichartz_quotient(const RunManifest& m);

struct WLevel {
    double dt = 0.0;
    double dr = 0.0;
    double error = 0.0;  // ‖w_direct - (v - u)‖ / ‖v - u‖ at t_final
};

struct WConsistencyReport {
    std::vector<WLevel> levels;
    double order = 0.0;  // fitted in dt
    bool pass = false;
};

/// Evolves u, v = u + εφ and w directly with V1, V2 from u at step midpoints
/// and the remainder f(u+w) - f(u) - V1 w - V2 w̄ as forcing, on `levels`
/// jointly refined (dt, dr) grids.
WConsistencyReport w_consistency(const RunManifest& m);

// ---------------------------------------------------------------------------
// Scenarios and artifacts

struct Verdict {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct RunResult {
    std::vector<DiagnosticsRecord> series;
    std::vector<Verdict> verdicts;
    nlohmann::json report;
    bool anomaly = false;
    std::string anomaly_reason;

    bool all_pass() const;
    /// 0 all pass, 2 a verdict failed, 3 runtime anomaly.
    int exit_code() const;
};

RunResult run_scenario(const RunManifest& m);

inline constexpr const char* kCsvHeader =
    "time,mass,energy,pc_energy,strauss_ratio,sup_weighted_amp,h1,h2,h4,linf,"
    "outer_mass_fraction,valid";

std::string format_csv(std::span<const DiagnosticsRecord> series);
std::vector<DiagnosticsRecord> parse_csv(const std::string& text);

nlohmann::json environment_stamp();

/// Writes the CSV and JSON report into m.output_dir (created if needed).
void write_outputs(const RunManifest& m, const RunResult& r);

}  // namespace exnls
