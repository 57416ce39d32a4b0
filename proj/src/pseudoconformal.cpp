#include "exnls/pseudoconformal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/fpclassify.hpp>  // pchip.hpp uses unqualified isnan
#include <boost/math/interpolators/pchip.hpp>

namespace exnls {

PCParams PCParams::make(const ModelParams& params) {
    params.validate();
    PCParams pc{params, 0.5 * params.n * (params.p - 1.0) - 2.0};
    if (!pc.supercritical())
        throw std::invalid_argument("pseudoconformal audit needs p > 1 + 4/n (nu > 0)");
    return pc;
}

namespace {

// Three-point derivative on a non-uniform grid.
std::vector<Complex> derivative(const std::vector<double>& x, const std::vector<Complex>& f) {
    const std::size_t n = x.size();
    std::vector<Complex> d(n);
    auto interior = [&](std::size_t i) {
        const double h1 = x[i] - x[i - 1], h2 = x[i + 1] - x[i];
        return -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] +
               h1 / (h2 * (h1 + h2)) * f[i + 1];
    };
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = interior(i);
    {
        const double h1 = x[1] - x[0], h2 = x[2] - x[1];
        d[0] = -(2 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] -
               h1 / (h2 * (h1 + h2)) * f[2];
    }
    {
        const std::size_t m = n - 1;
        const double h1 = x[m - 1] - x[m - 2], h2 = x[m] - x[m - 1];
        d[m] = h2 / (h1 * (h1 + h2)) * f[m - 2] - (h1 + h2) / (h1 * h2) * f[m - 1] +
               (2 * h2 + h1) / (h2 * (h1 + h2)) * f[m];
    }
    return d;
}

// PCHIP of a complex sampled function, real and imaginary parts separately.
class ComplexPchip {
public:
    ComplexPchip(const std::vector<double>& x, const std::vector<Complex>& f)
        : lo_(x.front()), hi_(x.back()), re_(make(x, f, false)), im_(make(x, f, true)) {}

    Complex operator()(double s) const {
        if (s < lo_ || s > hi_) return {};
        return {re_(s), im_(s)};
    }

private:
    using Spline = boost::math::interpolators::pchip<std::vector<double>>;
    static Spline make(std::vector<double> x, const std::vector<Complex>& f, bool imag) {
        std::vector<double> y(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) y[i] = imag ? f[i].imag() : f[i].real();
        return Spline(std::move(x), std::move(y));
    }

    double lo_, hi_;
    Spline re_, im_;
};

}  // namespace

void compute_density(ConeSlice& slice) {
    const std::size_t n = slice.R_nodes.size();
    if (n < 4 || slice.U_values.size() != n)
        throw std::invalid_argument("cone slice needs at least 4 matching nodes");
    for (std::size_t i = 1; i < n; ++i)
        if (!(slice.R_nodes[i] > slice.R_nodes[i - 1]))
            throw std::invalid_argument("cone slice nodes must increase");
    const auto dU = derivative(slice.R_nodes, slice.U_values);
    const double weight = std::pow(-slice.T, slice.nu) / (slice.p + 1.0);
    slice.density.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double R = slice.R_nodes[i];
        const double m = std::abs(slice.U_values[i]);
        const double pot = m > 0.0 ? weight * std::pow(m, slice.p + 1.0) : 0.0;
        slice.density[i] = std::pow(R, slice.n - 1) * (0.5 * std::norm(dU[i]) + pot);
    }
}

ConeSlice make_cone_slice(const ModelParams& params, double T, std::vector<double> R_nodes,
                          std::vector<Complex> U_values) {
    if (!(T >= -1.0 && T < 0.0)) throw std::invalid_argument("cone slice needs -1 <= T < 0");
    ConeSlice s;
    s.n = params.n;
    s.p = params.p;
    s.nu = 0.5 * params.n * (params.p - 1.0) - 2.0;
    s.T = T;
    s.R_nodes = std::move(R_nodes);
    s.U_values = std::move(U_values);
    compute_density(s);
    return s;
}

ConeSlice forward_transform(const ModelParams& params, const FieldState& state,
                            const std::optional<std::vector<double>>& R_grid) {
    if (!state.is_radial()) throw std::invalid_argument("forward_transform needs a radial state");
    const double t = state.time();
    if (!(t >= 1.0)) throw std::invalid_argument("forward_transform needs t >= 1");
    const auto& d = state.domain();
    const double scale = std::pow(t, 0.5 * d.dim());
    const auto u = state.row(0);

    // Demodulated samples g(r) = u(r) e^{-ir²/4t} on the grid with both walls.
    std::vector<double> r{1.0};
    std::vector<Complex> g{Complex{}};
    for (int j = 0; j < d.num_radial(); ++j) {
        const double rj = d.node(j);
        r.push_back(rj);
        g.push_back(u[j] * std::polar(1.0, -rj * rj / (4.0 * t)));
    }
    r.push_back(d.r_max());
    g.push_back(Complex{});

    std::vector<double> R;
    std::vector<Complex> U;
    if (!R_grid) {
        R.reserve(r.size());
        U.reserve(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            R.push_back(r[i] / t);
            U.push_back(scale * g[i]);
        }
    } else {
        R = *R_grid;
        const double lo = 1.0 / t, hi = d.r_max() / t;
        const double slack = 1e-12 * hi;
        if (R.empty() || R.front() < lo - slack || R.back() > hi + slack)
            throw std::invalid_argument("custom cone grid must lie inside [1/t, r_max/t]");
        const ComplexPchip interp(r, g);
        U.reserve(R.size());
        for (double Ri : R) U.push_back(scale * interp(std::clamp(Ri * t, 1.0, d.r_max())));
    }
    return make_cone_slice(params, -1.0 / t, std::move(R), std::move(U));
}

FieldState inverse_transform(const ConeSlice& slice, const DomainPtr& domain) {
    if (!domain->radial_only()) throw std::invalid_argument("inverse_transform needs a radial domain");
    const double t = -1.0 / slice.T;
    const double scale = std::pow(t, -0.5 * domain->dim());
    const ComplexPchip interp(slice.R_nodes, slice.U_values);
    FieldState out(domain, t);
    auto u = out.row(0);
    for (int j = 0; j < domain->num_radial(); ++j) {
        const double r = domain->node(j);
        u[j] = scale * interp(r / t) * std::polar(1.0, r * r / (4.0 * t));
    }
    return out;
}

double cone_energy(const ConeSlice& slice) {
    double sum = 0.0;
    const auto& R = slice.R_nodes;
    for (std::size_t i = 1; i < R.size(); ++i)
        sum += 0.5 * (R[i] - R[i - 1]) * (slice.density[i] + slice.density[i - 1]);
    return sphere_area(slice.n) * sum;
}

double cone_amplitude(const ConeSlice& slice) {
    double best = 0.0;
    for (std::size_t i = 0; i < slice.R_nodes.size(); ++i)
        best = std::max(best, std::pow(slice.R_nodes[i], slice.n - 2) * std::norm(slice.U_values[i]));
    return best;
}

MonotonicityReport monotonicity_audit(std::span<const FieldState> trajectory,
                                      const ModelParams& params, Flow flow) {
    MonotonicityReport rep;
    rep.assessed = flow == Flow::Defocusing;
    const double strauss = strauss_constant(params.n);
    rep.strauss_constant_sq = strauss * strauss;
    const double kin_exp = 0.5 * params.n * (params.p - 1.0);
    for (const auto& s : trajectory) {
        if (outer_mass_fraction(s) >= kHorizonMassFraction)
            throw std::runtime_error("monotonicity_audit: trajectory leaves the validity horizon");
        const double t = s.time();
        const ConeSlice slice = forward_transform(params, s);
        AuditRow row;
        row.t = t;
        row.T = slice.T;
        row.pc_energy = pseudoconformal_energy(params, s);
        row.cone_energy = cone_energy(slice);
        row.cone_amplitude = cone_amplitude(slice);
        const double denom = row.pc_energy + (t + std::pow(t, kin_exp)) * energy(params, s);
        row.weighted_mass_ratio = denom > 0.0 ? weighted_mass(s) / denom : 0.0;
        rep.rows.push_back(row);
    }
    if (rep.rows.empty()) return rep;

    rep.tolerance_pc = kMonotonicityTolerance * rep.rows.front().pc_energy;
    rep.tolerance_cone = kMonotonicityTolerance * rep.rows.front().cone_energy;
    double amp = 0.0;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        amp = std::max(amp, rep.rows[i].cone_amplitude);
        if (i == 0) continue;
        const double dpc = rep.rows[i].pc_energy - rep.rows[i - 1].pc_energy;
        const double dcone = rep.rows[i].cone_energy - rep.rows[i - 1].cone_energy;
        rep.max_increase_pc = std::max(rep.max_increase_pc, dpc);
        rep.max_increase_cone = std::max(rep.max_increase_cone, dcone);
        if (dpc > rep.tolerance_pc) ++rep.violations_pc;
        if (dcone > rep.tolerance_cone) ++rep.violations_cone;
    }
    const double e0 = rep.rows.front().cone_energy;
    rep.amplitude_constant = e0 > 0.0 ? amp / (2.0 * e0) : 0.0;
    rep.amplitude_bound_holds = rep.amplitude_constant <= rep.strauss_constant_sq;
    return rep;
}

}  // namespace exnls
