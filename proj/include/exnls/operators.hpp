#pragma once

// Discrete Dirichlet Laplacian on the exterior grid and the time steppers built
// on it: Crank-Nicolson for the linear flow, the exact pointwise phase for the
// defocusing nonlinearity, their Strang composition, and a frozen-coefficient
// step for i w_t + Δw = V1 w + V2 w̄ + F.
//
// All linear algebra is done on the symmetrized variable v = r^{(n-1)/2} u, in
// which the radial part of Δ becomes
//
//        v'' - (c_n + ℓ²) / r² v,      c_n = (n-1)(n-3)/4,
//
// and the standard three-point stencil gives a real symmetric tridiagonal
// matrix per angular mode.  The quadrature weight in v is uniform, so the
// Cayley transform of that matrix is exactly unitary in the discrete L² norm.

#include <span>
#include <vector>

#include "exnls/domain.hpp"

namespace exnls {

/// Real symmetric tridiagonal matrix.
struct SymTridiag {
    std::vector<double> diag;
    std::vector<double> off;  // size diag.size() - 1
};

class LaplacianOp {
public:
    explicit LaplacianOp(DomainPtr domain);

    const DiscDomain& domain() const { return *domain_; }
    const DomainPtr& domain_ptr() const { return domain_; }

    /// (n-1)(n-3)/4
    double symmetrization_constant() const { return c_n_; }

    /// ℓ² for mode row a (0 for radial fields).
    double angular_eigenvalue(int mode_row) const;

    /// The symmetrized matrix acting on mode row a.
    SymTridiag matrix(int mode_row) const;

    /// Δu, returned in the representation of the input.
    FieldState apply(const FieldState& state) const;

private:
    DomainPtr domain_;
    double c_n_;
};

FieldState apply_laplacian(const LaplacianOp& op, const FieldState& state);

enum class Scheme { CrankNicolsonStrang };
enum class PotentialMode { None, FrozenCoefficient };

struct PropagatorConfig {
    double dt = 1e-3;
    Scheme scheme = Scheme::CrankNicolsonStrang;
    PotentialMode potential_mode = PotentialMode::None;

    void validate() const;
};

/// Crank-Nicolson propagator with the tridiagonal factorizations of
/// (I - i dt/2 L_ℓ) cached for every distinct ℓ².
class LinearPropagator {
public:
    LinearPropagator(const LaplacianOp& op, double dt);

    double dt() const { return dt_; }

    /// One Cayley step; advances time by dt.
    FieldState step(const FieldState& state) const;

    /// In-place step on a single symmetrized row.
    void step_symmetrized(int mode_row, std::span<Complex> v) const;

private:
    struct Factor {
        std::vector<double> diag;   // L_ℓ diagonal
        std::vector<Complex> upper; // modified super-diagonal c'_j
        std::vector<Complex> pivot; // 1 / (b_j - a c'_{j-1})
    };

    const Factor& factor_for(int mode_row) const;

    LaplacianOp op_;
    double dt_;
    double off_;  // 1/dr²
    std::vector<Factor> factors_;
    std::vector<int> factor_index_;  // mode row -> factors_
};

/// (I - i dt/2 Δ) u⁺ = (I + i dt/2 Δ) u.
FieldState linear_step(const LaplacianOp& op, const PropagatorConfig& cfg,
                       const FieldState& state);

/// u ↦ exp(-i dt |u|^{p-1}) u at every point; needs the point representation.
FieldState nonlinear_phase_step(const ModelParams& params, double dt, const FieldState& state);

/// Half phase, full Crank-Nicolson, half phase.
class StrangIntegrator {
public:
    StrangIntegrator(const LaplacianOp& op, const ModelParams& params,
                     const PropagatorConfig& cfg);

    FieldState step(const FieldState& state) const;

    /// Advances `steps` steps, fusing adjacent half phases.
    FieldState advance(const FieldState& state, int steps) const;

    const LinearPropagator& linear() const { return linear_; }
    const PropagatorConfig& config() const { return cfg_; }

private:
    void phase(FieldState& points, double tau) const;

    LaplacianOp op_;
    ModelParams params_;
    PropagatorConfig cfg_;
    LinearPropagator linear_;
};

FieldState strang_step(const LaplacianOp& op, const ModelParams& params,
                       const PropagatorConfig& cfg, const FieldState& state);

/// Exact flow of the pointwise system i w_t = V1 w + V2 w̄ + F over time tau,
/// with V1 real and V1, V2, F constant.  Exposed for testing.
Complex pointwise_potential_flow(Complex w, double v1, Complex v2, Complex forcing, double tau);

/// Strang step for i w_t + Δw = V1 w + V2 w̄ + F with V1, V2, F frozen at the
/// step midpoint: their `time()` must equal state.time() + dt/2.  V1 must be
/// real-valued.
class PerturbedIntegrator {
public:
    PerturbedIntegrator(const LaplacianOp& op, const PropagatorConfig& cfg);

    FieldState step(const FieldState& state, const FieldState& v1, const FieldState& v2,
                    const FieldState& forcing) const;

private:
    LaplacianOp op_;
    PropagatorConfig cfg_;
    LinearPropagator linear_;
};

FieldState perturbed_step(const LaplacianOp& op, const PropagatorConfig& cfg,
                          const FieldState& state, const FieldState& v1,
                          const FieldState& v2, const FieldState& forcing);

/// Exact linearization of f(z) = |z|^{p-1} z around u:
/// f(u + w) - f(u) = V1 w + V2 w̄ + O(|w|²) with V1 = (p+1)/2 |u|^{p-1},
/// V2 = (p-1)/2 |u|^{p-3} u².  Both vanish where u = 0.
struct Linearization {
    FieldState v1;
    FieldState v2;
};
Linearization linearize_nonlinearity(const ModelParams& params, const FieldState& u);

/// f(u) = |u|^{p-1} u pointwise (point representation).
FieldState nonlinearity(const ModelParams& params, const FieldState& u);

}  // namespace exnls

namespace exnls {

/// Lowest eigenpairs of -Δ_h restricted to one angular mode row: -Δ_h φ_k = λ_k φ_k,
/// λ ascending, φ_k normalized to unit discrete L² with a positive first
/// nonzero sample.  Indices are 1-based (k = first .. first+count-1).
struct Eigenmodes {
    std::vector<double> lambda;
    std::vector<FieldState> modes;
};
Eigenmodes laplacian_eigenmodes(const LaplacianOp& op, int first, int count, int mode_row = 0);

}  // namespace exnls
