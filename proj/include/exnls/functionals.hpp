#pragma once

// Scalar diagnostics of a field: conserved quantities, weighted and Sobolev
// norms, the Strauss quotient, the pseudoconformal energy and the mixed
// space-time norms.  Everything here is a pure function of its inputs.

#include <limits>
#include <map>
#include <span>
#include <vector>

#include "exnls/domain.hpp"
#include "exnls/operators.hpp"

namespace exnls {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// ∫|u|².
double mass(const FieldState& state);

/// ‖∇u‖²_{L²} as the discrete Dirichlet form -<Δ_h u, u>, summed by parts in
/// the symmetrized variable so that it is exactly the quadratic form of the
/// operator the time stepper uses.
double dirichlet_form(const FieldState& state);

/// ∫|u|^{exponent}.
double power_integral(const FieldState& state, double exponent);

/// ½‖∇u‖² + ∫|u|^{p+1}/(p+1).
double energy(const ModelParams& params, const FieldState& state);

/// ‖ |x| u ‖²_{L²}.
double weighted_mass(const FieldState& state);

double linf(const FieldState& state);

/// sup_x |x|^{n/2-1} |u(x)|.
double sup_weighted_amp(const FieldState& state);

/// Mass in the outer shell 0.9 r_max < r < r_max divided by the total mass
/// (0 for the zero field).
double outer_mass_fraction(const FieldState& state);

/// sup_j r_j^{n/2-1}|u(r_j)| / ‖∇u‖.  Radial fields only.  A vanishing
/// gradient makes the quotient 0/0, which is returned as NaN.
double strauss_ratio(const FieldState& state);

/// Sharp continuum constant C in |x|^{n/2-1}|u| ≤ C‖∇u‖ for radial u vanishing
/// at infinity, C = (ω_n (n-2))^{-1/2}; infinite for n = 2.
double strauss_constant(int n);

/// Time weight on the potential term of E₁.
///   Derivation: t², the weight for which E₁(t) = ℰ(-1/t) and the
///               monotonicity identity holds.
///   AsDisplayed: |t|^{n(p-1)/2}, kept for comparison runs.
enum class PotentialWeight { Derivation, AsDisplayed };

/// E₁(t) = ∫ ⅛|(x + 2it∇)u|² + w(t)/(p+1)|u|^{p+1} at t = state.time().
/// Radial fields and n = 2 angular fields are supported.
double pseudoconformal_energy(const ModelParams& params, const FieldState& state,
                              PotentialWeight weighting = PotentialWeight::Derivation);

/// Discrete H^k norm, ‖u‖²_{H^k} = Σ_{i ≤ k} <(-Δ_h)^i u, u>, for k in 0..4.
double sobolev_norm(const FieldState& state, int k);

/// ‖u‖_{L^r}; r may be kInfinity.
double lebesgue_norm(const FieldState& state, double r);

/// Nodewise radial derivative ∂_r u and angular derivative r^{-1} ∂_θ u
/// (point representation).
struct Gradient {
    FieldState radial;
    FieldState angular;
};
Gradient gradient(const FieldState& state);

struct DiagnosticsRecord {
    double time = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    double pc_energy = 0.0;
    double strauss_ratio = 0.0;  // NaN when flagged (0/0 or non-radial)
    double sup_weighted_amp = 0.0;
    std::map<int, double> sobolev;  // k in {0, 1, 2, 4}
    double linf = 0.0;
    double outer_mass_fraction = 0.0;
    bool valid = true;

    bool strauss_flagged() const { return strauss_ratio != strauss_ratio; }
};

/// Mass fraction in the outer 10% shell above which a sample is past the
/// truncation validity horizon.
inline constexpr double kHorizonMassFraction = 1e-6;

DiagnosticsRecord diagnostics(const ModelParams& params, const FieldState& state);

/// Which right-hand side generated a trajectory.
enum class Flow { Linear, Defocusing };

struct MixedNormSpec {
    double q = 2.0;  // time exponent, may be kInfinity
    double r = 2.0;  // space exponent, may be kInfinity
    int N = 0;       // derivative order
    double t0 = 0.0;
    double t1 = 0.0;

    void validate() const;
};

/// ‖u‖_{X^{q,r;N}} on [t0, t1] from a uniformly sampled trajectory, N ≤ 1.
/// Time derivatives come from the equation, ∂_t u = i(Δu - f(u)).
double mixed_norm(std::span<const FieldState> trajectory, const MixedNormSpec& spec,
                  const ModelParams& params, Flow flow);

struct Admissibility {
    bool admissible = false;
    bool endpoint = false;
};

/// 2/q + n/r = n/2 within 1e-12; endpoint (2, 2n/(n-2)).
Admissibility check_admissible(int n, double q, double r);

struct StabilityEnergy {
    double energy = 0.0;   // E(v - u)
    double l2_squared = 0.0;  // ‖v - u‖²
};

StabilityEnergy stability_energy(const ModelParams& params, const FieldState& u,
                                 const FieldState& v);

}  // namespace exnls
