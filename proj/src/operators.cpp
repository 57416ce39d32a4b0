#include "exnls/operators.hpp"

#include "exnls/functionals.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <lapacke.h>

namespace exnls {

LaplacianOp::LaplacianOp(DomainPtr domain) : domain_(std::move(domain)) {
    if (!domain_) throw std::invalid_argument("LaplacianOp needs a domain");
    const double n = domain_->dim();
    c_n_ = (n - 1.0) * (n - 3.0) / 4.0;
}

double LaplacianOp::angular_eigenvalue(int mode_row) const {
    const int ell = angular_wavenumber(mode_row, domain_->num_angular());
    return static_cast<double>(ell) * ell;
}

SymTridiag LaplacianOp::matrix(int mode_row) const {
    const int n = domain_->num_radial();
    const double inv_h2 = 1.0 / (domain_->dr() * domain_->dr());
    const double shift = c_n_ + angular_eigenvalue(mode_row);
    SymTridiag m;
    m.diag.resize(static_cast<std::size_t>(n));
    m.off.assign(static_cast<std::size_t>(n - 1), inv_h2);
    for (int j = 0; j < n; ++j) {
        const double r = domain_->node(j);
        m.diag[j] = -2.0 * inv_h2 - shift / (r * r);
    }
    return m;
}

namespace {

bool needs_mode_split(const FieldState& s) {
    return !s.is_radial() && s.representation() == Representation::AngularPoints;
}

}  // namespace

FieldState LaplacianOp::apply(const FieldState& state) const {
    if (!state.domain().same_geometry(*domain_))
        throw std::invalid_argument("apply_laplacian: state domain does not match operator");
    if (needs_mode_split(state)) return to_points(apply(to_modes(state)));

    FieldState out(state.domain_ptr(), state.time(), state.representation());
    const auto sym = domain_->sym_factors();
    const int n = domain_->num_radial();
    const double inv_h2 = 1.0 / (domain_->dr() * domain_->dr());
    std::vector<Complex> v(static_cast<std::size_t>(n));
    for (int a = 0; a < state.rows(); ++a) {
        const auto u = state.row(a);
        for (int j = 0; j < n; ++j) v[j] = sym[j] * u[j];
        const double shift = c_n_ + angular_eigenvalue(a);
        auto res = out.row(a);
        for (int j = 0; j < n; ++j) {
            const Complex left = j > 0 ? v[j - 1] : Complex{};
            const Complex right = j + 1 < n ? v[j + 1] : Complex{};
            const double r = domain_->node(j);
            const Complex lv = (left - 2.0 * v[j] + right) * inv_h2 - shift / (r * r) * v[j];
            res[j] = lv / sym[j];
        }
    }
    return out;
}

FieldState apply_laplacian(const LaplacianOp& op, const FieldState& state) {
    return op.apply(state);
}

void PropagatorConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be > 0");
}

LinearPropagator::LinearPropagator(const LaplacianOp& op, double dt) : op_(op), dt_(dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    const auto& dom = op_.domain();
    off_ = 1.0 / (dom.dr() * dom.dr());
    const int rows = dom.num_angular();
    factor_index_.assign(static_cast<std::size_t>(rows), -1);

    const Complex half_step{0.0, 0.5 * dt};
    const Complex a = -half_step * off_;  // off-diagonal of I - i dt/2 L
    for (int row = 0; row < rows; ++row) {
        const int ell = std::abs(angular_wavenumber(row, rows));
        bool reused = false;
        for (int other = 0; other < row; ++other) {
            if (std::abs(angular_wavenumber(other, rows)) == ell) {
                factor_index_[row] = factor_index_[other];
                reused = true;
                break;
            }
        }
        if (reused) continue;

        const SymTridiag m = op_.matrix(row);
        const std::size_t n = m.diag.size();
        Factor f;
        f.diag = m.diag;
        f.upper.resize(n);
        f.pivot.resize(n);
        Complex prev_upper{};
        for (std::size_t j = 0; j < n; ++j) {
            const Complex b = 1.0 - half_step * m.diag[j];
            const Complex denom = j == 0 ? b : b - a * prev_upper;
            if (std::abs(denom) < 1e-300)
                throw std::runtime_error("Crank-Nicolson factorization hit a zero pivot");
            f.pivot[j] = 1.0 / denom;
            f.upper[j] = a * f.pivot[j];
            prev_upper = f.upper[j];
        }
        factor_index_[row] = static_cast<int>(factors_.size());
        factors_.push_back(std::move(f));
    }
}

const LinearPropagator::Factor& LinearPropagator::factor_for(int mode_row) const {
    return factors_[static_cast<std::size_t>(factor_index_[static_cast<std::size_t>(mode_row)])];
}

void LinearPropagator::step_symmetrized(int mode_row, std::span<Complex> v) const {
    const Factor& f = factor_for(mode_row);
    const std::size_t n = v.size();
    const Complex half_step{0.0, 0.5 * dt_};
    const Complex a = -half_step * off_;

    // Right-hand side (I + i dt/2 L) v fused with the forward sweep.
    Complex prev_v{};
    Complex prev_d{};
    for (std::size_t j = 0; j < n; ++j) {
        const Complex next_v = j + 1 < n ? v[j + 1] : Complex{};
        const Complex lv = f.diag[j] * v[j] + off_ * (prev_v + next_v);
        const Complex rhs = v[j] + half_step * lv;
        prev_v = v[j];
        const Complex d = (j == 0 ? rhs : rhs - a * prev_d) * f.pivot[j];
        v[j] = d;
        prev_d = d;
    }
    for (std::size_t j = n - 1; j-- > 0;) v[j] -= f.upper[j] * v[j + 1];
}

FieldState LinearPropagator::step(const FieldState& state) const {
    if (!state.domain().same_geometry(op_.domain()))
        throw std::invalid_argument("linear_step: state domain does not match operator");
    if (needs_mode_split(state)) return to_points(step(to_modes(state)));

    FieldState out = state;
    const auto sym = op_.domain().sym_factors();
    for (int a = 0; a < out.rows(); ++a) {
        auto row = out.row(a);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] *= sym[j];
        step_symmetrized(a, row);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] /= sym[j];
    }
    out.set_time(state.time() + dt_);
    return out;
}

FieldState linear_step(const LaplacianOp& op, const PropagatorConfig& cfg,
                       const FieldState& state) {
    cfg.validate();
    return LinearPropagator(op, cfg.dt).step(state);
}

namespace {

void require_points(const FieldState& state, const char* what) {
    if (!state.is_radial() && state.representation() != Representation::AngularPoints)
        throw std::invalid_argument(std::string(what) +
                                    ": multi-angle state must be in point representation");
}

// |z|^{p-1}, with the continuous extension 0 at z = 0.
double power_modulus(Complex z, double pm1) {
    const double m = std::abs(z);
    return m > 0.0 ? std::pow(m, pm1) : 0.0;
}

void apply_phase(FieldState& state, double p, double tau) {
    // Rotations below 1e-20 rad leave the sample unchanged in double precision.
    const double half_pm1 = 0.5 * (p - 1.0);
    for (auto& z : state.values()) {
        const double m2 = std::norm(z);
        if (m2 == 0.0) continue;
        const double angle = tau * std::pow(m2, half_pm1);
        if (angle < 1e-20) continue;
        z *= std::polar(1.0, -angle);
    }
}

}  // namespace

FieldState nonlinear_phase_step(const ModelParams& params, double dt, const FieldState& state) {
    require_points(state, "nonlinear_phase_step");
    FieldState out = state;
    apply_phase(out, params.p, dt);
    return out;
}

StrangIntegrator::StrangIntegrator(const LaplacianOp& op, const ModelParams& params,
                                   const PropagatorConfig& cfg)
    : op_(op), params_(params), cfg_(cfg), linear_(op, cfg.dt) {
    cfg_.validate();
    params_.validate();
}

void StrangIntegrator::phase(FieldState& points, double tau) const {
    apply_phase(points, params_.p, tau);
}

FieldState StrangIntegrator::step(const FieldState& state) const { return advance(state, 1); }

FieldState StrangIntegrator::advance(const FieldState& state, int steps) const {
    if (steps < 0) throw std::invalid_argument("negative step count");
    if (steps == 0) return state;
    const bool was_modes = !state.is_radial() &&
                           state.representation() == Representation::AngularModes;
    FieldState u = to_points(state);
    const double t0 = state.time();
    const double dt = cfg_.dt;
    phase(u, 0.5 * dt);
    for (int k = 0; k < steps; ++k) {
        u = linear_.step(u);
        phase(u, k + 1 < steps ? dt : 0.5 * dt);
    }
    u.set_time(t0 + steps * dt);
    return was_modes ? to_modes(u) : u;
}

FieldState strang_step(const LaplacianOp& op, const ModelParams& params,
                       const PropagatorConfig& cfg, const FieldState& state) {
    return StrangIntegrator(op, params, cfg).step(state);
}

Complex pointwise_potential_flow(Complex w, double v1, Complex v2, Complex forcing,
                                 double tau) {
    // Real form z = (Re w, Im w): z' = M z + g with M traceless and
    // M² = (|V2|² - V1²) I, so exp(Mτ) = C I + S M exactly.
    const double c = v2.real();
    const double d = v2.imag();
    const double m11 = d, m12 = v1 - c, m21 = -v1 - c, m22 = -d;
    const double mu = std::norm(v2) - v1 * v1;
    const double x = mu * tau * tau;

    double cc, ss, aa, bb;  // C(τ), S(τ), ∫C, ∫S
    if (std::abs(x) < 1e-3) {
        const double x2 = x * x, x3 = x2 * x;
        cc = 1.0 + x / 2.0 + x2 / 24.0 + x3 / 720.0;
        ss = tau * (1.0 + x / 6.0 + x2 / 120.0 + x3 / 5040.0);
        aa = ss;
        bb = 0.5 * tau * tau * (1.0 + x / 12.0 + x2 / 360.0 + x3 / 20160.0);
    } else if (mu < 0.0) {
        const double omega = std::sqrt(-mu);
        cc = std::cos(omega * tau);
        ss = std::sin(omega * tau) / omega;
        aa = ss;
        bb = (1.0 - cc) / (omega * omega);
    } else {
        const double omega = std::sqrt(mu);
        cc = std::cosh(omega * tau);
        ss = std::sinh(omega * tau) / omega;
        aa = ss;
        bb = (cc - 1.0) / (omega * omega);
    }

    const double a0 = w.real(), b0 = w.imag();
    const double g1 = forcing.imag(), g2 = -forcing.real();
    const double a1 = cc * a0 + ss * (m11 * a0 + m12 * b0) + aa * g1 + bb * (m11 * g1 + m12 * g2);
    const double b1 = cc * b0 + ss * (m21 * a0 + m22 * b0) + aa * g2 + bb * (m21 * g1 + m22 * g2);
    return {a1, b1};
}

PerturbedIntegrator::PerturbedIntegrator(const LaplacianOp& op, const PropagatorConfig& cfg)
    : op_(op), cfg_(cfg), linear_(op, cfg.dt) {
    cfg_.validate();
}

FieldState PerturbedIntegrator::step(const FieldState& state, const FieldState& v1,
                                     const FieldState& v2, const FieldState& forcing) const {
    state.require_same_domain(v1);
    state.require_same_domain(v2);
    state.require_same_domain(forcing);
    const double mid = state.time() + 0.5 * cfg_.dt;
    const double tol = 1e-9 * std::max(1.0, std::abs(mid));
    for (const FieldState* s : {&v1, &v2, &forcing}) {
        if (std::abs(s->time() - mid) > tol)
            throw std::invalid_argument("perturbed_step: coefficients must be sampled at t + dt/2");
    }

    const bool was_modes = !state.is_radial() &&
                           state.representation() == Representation::AngularModes;
    FieldState w = to_points(state);
    const FieldState p1 = to_points(v1);
    const FieldState p2 = to_points(v2);
    const FieldState pf = to_points(forcing);
    for (const auto& z : p1.values()) {
        if (std::abs(z.imag()) > 1e-14 * std::max(1.0, std::abs(z.real())))
            throw std::invalid_argument("perturbed_step: V1 must be real-valued");
    }

    const double half = 0.5 * cfg_.dt;
    auto rotate = [&](FieldState& f) {
        auto vals = f.values();
        const auto c1 = p1.values();
        const auto c2 = p2.values();
        const auto cf = pf.values();
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] = pointwise_potential_flow(vals[i], c1[i].real(), c2[i], cf[i], half);
    };
    rotate(w);
    w = linear_.step(w);
    rotate(w);
    w.set_time(state.time() + cfg_.dt);
    return was_modes ? to_modes(w) : w;
}

FieldState perturbed_step(const LaplacianOp& op, const PropagatorConfig& cfg,
                          const FieldState& state, const FieldState& v1,
                          const FieldState& v2, const FieldState& forcing) {
    return PerturbedIntegrator(op, cfg).step(state, v1, v2, forcing);
}

Linearization linearize_nonlinearity(const ModelParams& params, const FieldState& u) {
    require_points(u, "linearize_nonlinearity");
    Linearization lin{FieldState(u.domain_ptr(), u.time()), FieldState(u.domain_ptr(), u.time())};
    const double pm1 = params.p - 1.0;
    const auto src = u.values();
    auto v1 = lin.v1.values();
    auto v2 = lin.v2.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double m = std::abs(src[i]);
        if (m == 0.0) continue;
        const double g = std::pow(m, pm1);
        const Complex phase = src[i] / m;
        v1[i] = 0.5 * (params.p + 1.0) * g;
        v2[i] = 0.5 * pm1 * g * phase * phase;
    }
    return lin;
}

FieldState nonlinearity(const ModelParams& params, const FieldState& u) {
    require_points(u, "nonlinearity");
    FieldState out = u;
    const double pm1 = params.p - 1.0;
    for (auto& z : out.values()) z *= power_modulus(z, pm1);
    return out;
}

}  // namespace exnls

namespace exnls {

Eigenmodes laplacian_eigenmodes(const LaplacianOp& op, int first, int count, int mode_row) {
    const auto& dom = op.domain();
    const int n = dom.num_radial();
    if (first < 1 || count < 1 || first + count - 1 > n)
        throw std::invalid_argument("eigenmode index range out of bounds");
    if (mode_row < 0 || mode_row >= dom.num_angular())
        throw std::invalid_argument("eigenmode angular row out of range");
    const SymTridiag m = op.matrix(mode_row);
    std::vector<double> d(m.diag.size()), e(m.diag.size());
    for (std::size_t j = 0; j < m.diag.size(); ++j) d[j] = -m.diag[j];
    for (std::size_t j = 0; j + 1 < m.diag.size(); ++j) e[j] = -m.off[j];

    const lapack_int il = first, iu = first + count - 1;
    lapack_int found = 0;
    std::vector<double> w(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n) * count);
    std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(count));
    const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0,
                                           0.0, il, iu, 0.0, &found, w.data(), z.data(), n,
                                           isuppz.data());
    if (info != 0 || found != count)
        throw std::runtime_error("tridiagonal eigensolver failed (info " + std::to_string(info) + ")");

    Eigenmodes out;
    const auto sym = dom.sym_factors();
    for (int k = 0; k < count; ++k) {
        FieldState f(op.domain_ptr(), 0.0, Representation::AngularModes);
        if (dom.radial_only()) f.set_representation(Representation::AngularPoints);
        auto row = f.row(mode_row);
        const double* col = z.data() + static_cast<std::size_t>(k) * n;
        double sign = 0.0;
        for (int j = 0; j < n && sign == 0.0; ++j)
            if (std::abs(col[j]) > 1e-12) sign = col[j] > 0 ? 1.0 : -1.0;
        for (int j = 0; j < n; ++j) row[j] = sign * col[j] / sym[j];
        f *= Complex(1.0 / std::sqrt(mass(f)));
        out.lambda.push_back(w[static_cast<std::size_t>(k)]);
        out.modes.push_back(dom.radial_only() ? f : to_points(f));
    }
    return out;
}

}  // namespace exnls
