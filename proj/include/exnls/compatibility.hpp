#pragma once

// Compatibility sequences for the mixed problem: the formal time derivatives
// of the solution at t = 0 computed from the equation, and the check that each
// of them vanishes on the wall r = 1.

#include <span>
#include <string>
#include <vector>

#include "exnls/domain.hpp"
#include "exnls/operators.hpp"

namespace exnls {

struct TraceCheck {
    int j = 0;
    double trace = 0.0;      // |h_j(1)| by extrapolation
    double tolerance = 0.0;  // 10 dr² ‖h_j‖_{H¹}
    bool pass = true;
};

struct CompatReport {
    std::string kind;  // "linear", "nonlinear" or "perturbed"
    int order_requested = 0;
    std::vector<TraceCheck> traces;  // j = 0..N-1
    std::vector<FieldState> fields;  // h_j or ψ_j, j = 0..N-1

    bool pass() const;
    /// First failing j, or -1.
    int first_failure() const;
};

/// Largest |3u_0 - 3u_1 + u_2| over the angular rows: the quadratic
/// extrapolation of the three innermost nodes to r = 1.
double boundary_trace(const FieldState& state);

/// 10 dr² ‖h‖_{H¹}.
double trace_tolerance(const FieldState& state);

/// Time derivatives ∂_t^k F(0) for k = 0..K-1.
using ForcingDerivatives = std::vector<FieldState>;

/// Derivatives at the first sample of a uniformly spaced slab F(t_0 + k δ),
/// by one-sided finite differences that are second-order accurate.  Needs
/// count + 1 samples for `count` derivatives (orders 0..count-1).
ForcingDerivatives forcing_derivatives_from_slab(std::span<const FieldState> slab, int count);

/// h_0 = u0, h_j = -i(∂_t^{j-1}F(0) - Δh_{j-1}).  `forcing` may be empty
/// (F = 0) or must hold at least N-1 derivatives.
CompatReport linear_compat_sequence(const FieldState& u0, const ForcingDerivatives& forcing,
                                    int N);

/// ψ_0 = u0, ψ_j = -i(∂_t^{j-1}f(u)|_{t=0} - Δψ_{j-1}) with f(z) = |z|^{p-1}z
/// and the chain rule written out through j = 3.  Requires N ≤ 3 and p > 2N.
CompatReport nonlinear_compat_sequence(const ModelParams& params, const FieldState& u0, int N);

/// Sequence for i w_t + Δw = V1 w + V2 w̄ + F, dropping time derivatives of
/// the coefficients: h_j = -i(∂_t^{j-1}F(0) + V1 h_{j-1} + V2 h̄_{j-1} - Δh_{j-1}).
CompatReport perturbed_compat_sequence(const FieldState& w0, const FieldState& v1,
                                       const FieldState& v2, const ForcingDerivatives& forcing,
                                       int N);

}  // namespace exnls
