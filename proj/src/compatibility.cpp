#include "exnls/compatibility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "exnls/functionals.hpp"

namespace exnls {

bool CompatReport::pass() const { return first_failure() < 0; }

int CompatReport::first_failure() const {
    for (const auto& t : traces)
        if (!t.pass) return t.j;
    return -1;
}

double boundary_trace(const FieldState& state) {
    const FieldState pts = to_points(state);
    double worst = 0.0;
    for (int a = 0; a < pts.rows(); ++a) {
        const auto u = pts.row(a);
        worst = std::max(worst, std::abs(3.0 * u[0] - 3.0 * u[1] + u[2]));
    }
    return worst;
}

double trace_tolerance(const FieldState& state) {
    const double dr = state.domain().dr();
    return 10.0 * dr * dr * sobolev_norm(state, 1);
}

namespace {

// Fornberg's recursion: weights[k][i] approximates d^k/dt^k at x0 from
// samples at xs[i].
std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& xs, int max_order) {
    const int n = static_cast<int>(xs.size());
    std::vector<std::vector<double>> c(max_order + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0;
    double c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

void check(CompatReport& rep, const FieldState& h, int j) {
    TraceCheck tc;
    tc.j = j;
    tc.trace = boundary_trace(h);
    tc.tolerance = trace_tolerance(h);
    tc.pass = tc.trace == 0.0 || tc.trace < tc.tolerance;
    rep.traces.push_back(tc);
    rep.fields.push_back(h);
}

const Complex kMinusI{0.0, -1.0};

}  // namespace

ForcingDerivatives forcing_derivatives_from_slab(std::span<const FieldState> slab, int count) {
    if (count < 1) return {};
    if (static_cast<int>(slab.size()) < count + 1)
        throw std::invalid_argument("forcing slab too short for the requested time derivatives");
    const int npts = count + 1;
    const double t0 = slab[0].time();
    std::vector<double> xs(npts);
    for (int i = 0; i < npts; ++i) {
        slab[static_cast<std::size_t>(i)].require_same_domain(slab[0]);
        xs[i] = slab[static_cast<std::size_t>(i)].time();
        if (i > 0 && !(xs[i] > xs[i - 1]))
            throw std::invalid_argument("forcing slab times must increase");
    }
    const auto w = fd_weights(t0, xs, count - 1);
    ForcingDerivatives out;
    for (int k = 0; k < count; ++k) {
        FieldState d(slab[0].domain_ptr(), t0, slab[0].representation());
        for (int i = 0; i < npts; ++i) d += Complex(w[k][i]) * slab[static_cast<std::size_t>(i)];
        out.push_back(std::move(d));
    }
    return out;
}

CompatReport linear_compat_sequence(const FieldState& u0, const ForcingDerivatives& forcing,
                                    int N) {
    if (N < 1) throw std::invalid_argument("compatibility order N must be >= 1");
    if (!forcing.empty() && static_cast<int>(forcing.size()) < N - 1)
        throw std::invalid_argument("not enough forcing time derivatives for order N");
    const LaplacianOp op(u0.domain_ptr());
    CompatReport rep;
    rep.kind = "linear";
    rep.order_requested = N;
    FieldState h = u0;
    check(rep, h, 0);
    for (int j = 1; j < N; ++j) {
        FieldState rhs = -1.0 * op.apply(h);
        if (!forcing.empty()) {
            u0.require_same_domain(forcing[static_cast<std::size_t>(j - 1)]);
            rhs += forcing[static_cast<std::size_t>(j - 1)];
        }
        h = kMinusI * rhs;
        check(rep, h, j);
    }
    return rep;
}

namespace {

// ∂_t^{j-1} f(u)|_{t=0} given ψ_0..ψ_{j-1}, pointwise.
Complex nonlinear_time_derivative(double p, int order, const Complex* psi) {
    const Complex z = psi[0];
    const double m = std::abs(z);
    if (order == 0) return m > 0.0 ? std::pow(m, p - 1.0) * z : Complex{};
    if (m == 0.0) return {};
    const double a = 0.5 * (p + 1.0);
    const double b = 0.5 * (p - 1.0);
    const double g = std::pow(m, p - 1.0);
    const double fz = a * g;                          // f_z
    const Complex fzb = b * g * (z / m) * (z / m);    // f_z̄
    if (order == 1) return fz * psi[1] + fzb * std::conj(psi[1]);
    const Complex fzz = a * (a - 1.0) * g / (m * m) * std::conj(z);
    const Complex fzzb = a * b * g / (m * m) * z;
    const Complex fzbzb = b * (b - 1.0) * g / (m * m) * (z / m) * (z / m) * z;
    const Complex d1 = psi[1];
    return fz * psi[2] + fzb * std::conj(psi[2]) + fzz * d1 * d1 +
           2.0 * fzzb * d1 * std::conj(d1) + fzbzb * std::conj(d1) * std::conj(d1);
}

}  // namespace

CompatReport nonlinear_compat_sequence(const ModelParams& params, const FieldState& u0, int N) {
    if (N < 1) throw std::invalid_argument("compatibility order N must be >= 1");
    if (N > 3) throw std::invalid_argument("nonlinear compatibility is expanded only through N = 3");
    if (!(params.p > 2.0 * N))
        throw std::invalid_argument("nonlinear compatibility of order N needs p > 2N");
    const LaplacianOp op(u0.domain_ptr());
    CompatReport rep;
    rep.kind = "nonlinear";
    rep.order_requested = N;

    std::vector<FieldState> psi{to_points(u0)};
    check(rep, u0, 0);
    for (int j = 1; j < N; ++j) {
        FieldState fj(u0.domain_ptr(), u0.time());
        auto out = fj.values();
        Complex local[3];
        for (std::size_t i = 0; i < out.size(); ++i) {
            for (int k = 0; k < j; ++k) local[k] = psi[static_cast<std::size_t>(k)].values()[i];
            out[i] = nonlinear_time_derivative(params.p, j - 1, local);
        }
        FieldState next = kMinusI * (fj - op.apply(psi.back()));
        check(rep, next, j);
        psi.push_back(std::move(next));
    }
    return rep;
}

CompatReport perturbed_compat_sequence(const FieldState& w0, const FieldState& v1,
                                       const FieldState& v2, const ForcingDerivatives& forcing,
                                       int N) {
    if (N < 1) throw std::invalid_argument("compatibility order N must be >= 1");
    if (!forcing.empty() && static_cast<int>(forcing.size()) < N - 1)
        throw std::invalid_argument("not enough forcing time derivatives for order N");
    w0.require_same_domain(v1);
    w0.require_same_domain(v2);
    const LaplacianOp op(w0.domain_ptr());
    const FieldState p1 = to_points(v1);
    const FieldState p2 = to_points(v2);
    CompatReport rep;
    rep.kind = "perturbed";
    rep.order_requested = N;
    FieldState h = to_points(w0);
    check(rep, h, 0);
    for (int j = 1; j < N; ++j) {
        FieldState rhs = -1.0 * op.apply(h);
        auto vals = rhs.values();
        const auto hv = h.values();
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] += p1.values()[i] * hv[i] + p2.values()[i] * std::conj(hv[i]);
        if (!forcing.empty()) rhs += to_points(forcing[static_cast<std::size_t>(j - 1)]);
        h = kMinusI * rhs;
        check(rep, h, j);
    }
    return rep;
}

}  // namespace exnls
