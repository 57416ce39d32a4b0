#pragma once

// Pseudoconformal change of variables for radial fields,
//
//     U(T, R) = t^{n/2} u(t, tR) e^{-itR²/4},     T = -1/t,
//
// the cone energy ℰ(T) of the transformed field, and the audit of E₁ and ℰ
// along a trajectory.

#include <optional>
#include <span>
#include <vector>

#include "exnls/domain.hpp"
#include "exnls/functionals.hpp"

namespace exnls {

struct PCParams {
    ModelParams params;
    double nu = 0.0;  // (n/2)(p-1) - 2

    /// Throws unless nu > 0, i.e. p above the L²-critical power 1 + 4/n.
    static PCParams make(const ModelParams& params);
    bool supercritical() const { return nu > 0.0; }
};

/// One time slice of the transformed field on the cone R ≥ -T.  R_nodes
/// starts at -T (image of the wall r = 1) and ends at the image of r_max;
/// U vanishes at both ends.
struct ConeSlice {
    int n = 3;
    double p = 3.0;
    double nu = 0.0;
    double T = -1.0;
    std::vector<double> R_nodes;
    std::vector<Complex> U_values;
    std::vector<double> density;  // R^{n-1}(½|U_R|² + (-T)^ν |U|^{p+1}/(p+1))
};

/// Fills density from R_nodes and U_values (three-point derivatives on the
/// possibly non-uniform grid).
void compute_density(ConeSlice& slice);

ConeSlice make_cone_slice(const ModelParams& params, double T, std::vector<double> R_nodes,
                          std::vector<Complex> U_values);

/// Forward transform of a radial state at t ≥ 1.  Without `R_grid` the image
/// grid is {1/t, r_j/t, r_max/t}, which needs no interpolation; otherwise u is
/// resampled in r by monotone cubic (PCHIP) interpolation of the real and
/// imaginary parts of the demodulated field.  Custom grids must lie inside
/// [1/t, r_max/t].
ConeSlice forward_transform(const ModelParams& params, const FieldState& state,
                            const std::optional<std::vector<double>>& R_grid = std::nullopt);

/// Inverse transform onto `domain` at t = -1/T.
FieldState inverse_transform(const ConeSlice& slice, const DomainPtr& domain);

/// ℰ(T) = ω_n ∫ e(T, R) dR (composite trapezoid on the slice grid).
double cone_energy(const ConeSlice& slice);

/// sup_R R^{n-2}|U(T, R)|².
double cone_amplitude(const ConeSlice& slice);

struct AuditRow {
    double t = 0.0;
    double T = 0.0;
    double pc_energy = 0.0;    // E₁(t)
    double cone_energy = 0.0;  // ℰ(T)
    double cone_amplitude = 0.0;
    double weighted_mass_ratio = 0.0;  // ‖xu‖² / (E₁ + (t + t^{n(p-1)/2}) E)
};

struct MonotonicityReport {
    std::vector<AuditRow> rows;
    double tolerance_pc = 0.0;    // 1e-4 E₁ at the first sample
    double tolerance_cone = 0.0;  // 1e-4 ℰ at the first sample
    int violations_pc = 0;
    int violations_cone = 0;
    double max_increase_pc = 0.0;
    double max_increase_cone = 0.0;
    bool assessed = true;  // false for the linear flow: values only
    // Amplitude bound sup_T R^{n-2}|U|² ≤ 2 ℰ(-1) C² with C the Strauss constant.
    double amplitude_constant = 0.0;  // sup_T cone_amplitude / (2 ℰ(first slice))
    double strauss_constant_sq = 0.0;
    bool amplitude_bound_holds = true;

    bool pass() const { return !assessed || (violations_pc == 0 && violations_cone == 0); }
};

inline constexpr double kMonotonicityTolerance = 1e-4;

/// Audits a radial trajectory sampled at t ≥ 1.  Throws when a sample lies
/// past the validity horizon or before t = 1.
MonotonicityReport monotonicity_audit(std::span<const FieldState> trajectory,
                                      const ModelParams& params, Flow flow = Flow::Defocusing);

}  // namespace exnls
