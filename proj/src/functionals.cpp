#include "exnls/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace exnls {

namespace {

// Mean over angular points of |u|^e, per radial node, for the point
// representation (mode rows are converted first).
template <class Fn>
double angular_average_sum(const FieldState& state, Fn&& per_point) {
    const FieldState pts = to_points(state);
    const auto w = pts.domain().quad_weights();
    const double inv_m = 1.0 / pts.rows();
    double sum = 0.0;
    for (int a = 0; a < pts.rows(); ++a) {
        const auto row = pts.row(a);
        for (int j = 0; j < pts.cols(); ++j) sum += w[j] * inv_m * per_point(row[j], j);
    }
    return sum;
}

double sym_exponent(const DiscDomain& d) { return 0.5 * (d.dim() - 1); }

}  // namespace

double mass(const FieldState& state) {
    // Parseval keeps the mode representation in the same units.
    if (!state.is_radial() && state.representation() == Representation::AngularModes) {
        const auto w = state.domain().quad_weights();
        double sum = 0.0;
        for (int a = 0; a < state.rows(); ++a) {
            const auto row = state.row(a);
            for (int j = 0; j < state.cols(); ++j) sum += w[j] * std::norm(row[j]);
        }
        return sum;
    }
    return angular_average_sum(state, [](Complex z, int) { return std::norm(z); });
}

double dirichlet_form(const FieldState& state) {
    const FieldState modes = to_modes(state);
    const auto& d = modes.domain();
    const auto sym = d.sym_factors();
    const double dr = d.dr();
    const double c_n = (d.dim() - 1.0) * (d.dim() - 3.0) / 4.0;
    const double scale = sphere_area(d.dim()) * dr;
    const int n = d.num_radial();
    double sum = 0.0;
    for (int a = 0; a < modes.rows(); ++a) {
        const int ell = angular_wavenumber(a, modes.rows());
        const double shift = c_n + static_cast<double>(ell) * ell;
        const auto u = modes.row(a);
        Complex prev{};
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            const Complex v = sym[j] * u[j];
            const double r = d.node(j);
            s += std::norm(v - prev) / (dr * dr) + shift / (r * r) * std::norm(v);
            prev = v;
        }
        s += std::norm(prev) / (dr * dr);  // outer wall
        sum += s;
    }
    return scale * sum;
}

double power_integral(const FieldState& state, double exponent) {
    return angular_average_sum(state, [exponent](Complex z, int) {
        const double m = std::abs(z);
        return m > 0.0 ? std::pow(m, exponent) : 0.0;
    });
}

double energy(const ModelParams& params, const FieldState& state) {
    return 0.5 * dirichlet_form(state) +
           power_integral(state, params.p + 1.0) / (params.p + 1.0);
}

double weighted_mass(const FieldState& state) {
    const auto nodes = state.domain().nodes();
    if (!state.is_radial() && state.representation() == Representation::AngularModes)
        return weighted_mass(to_points(state));
    return angular_average_sum(state, [&](Complex z, int j) {
        return nodes[j] * nodes[j] * std::norm(z);
    });
}

double linf(const FieldState& state) {
    const FieldState pts = to_points(state);
    double m = 0.0;
    for (const auto& z : pts.values()) m = std::max(m, std::abs(z));
    return m;
}

double sup_weighted_amp(const FieldState& state) {
    const FieldState pts = to_points(state);
    const auto nodes = pts.domain().nodes();
    const double e = 0.5 * pts.domain().dim() - 1.0;
    double m = 0.0;
    for (int a = 0; a < pts.rows(); ++a) {
        const auto row = pts.row(a);
        for (int j = 0; j < pts.cols(); ++j)
            m = std::max(m, std::pow(nodes[j], e) * std::abs(row[j]));
    }
    return m;
}

double outer_mass_fraction(const FieldState& state) {
    const double total = mass(state);
    if (total == 0.0) return 0.0;
    const auto nodes = state.domain().nodes();
    const double edge = 0.9 * state.domain().r_max();
    const double outer = angular_average_sum(state, [&](Complex z, int j) {
        return nodes[j] >= edge ? std::norm(z) : 0.0;
    });
    return outer / total;
}

double strauss_ratio(const FieldState& state) {
    if (!state.is_radial()) throw std::invalid_argument("strauss_ratio needs a radial field");
    const double grad = std::sqrt(dirichlet_form(state));
    const double amp = sup_weighted_amp(state);
    if (grad == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return amp / grad;
}

double strauss_constant(int n) {
    if (n <= 2) return kInfinity;
    return 1.0 / std::sqrt(sphere_area(n) * (n - 2.0));
}

double pseudoconformal_energy(const ModelParams& params, const FieldState& state,
                              PotentialWeight weighting) {
    const FieldState modes = to_modes(state);
    const auto& d = modes.domain();
    const auto sym = d.sym_factors();
    const double dr = d.dr();
    const double t = state.time();
    const double a_exp = sym_exponent(d);
    const int n = d.num_radial();
    const Complex two_it{0.0, 2.0 * t};

    // (x + 2it∇)u assembled nodewise: r^{(n-1)/2}(r u + 2it u_r) with
    // r^{(n-1)/2} u_r = v' - a v / r and v' by central differences.
    double kinetic = 0.0;
    for (int a = 0; a < modes.rows(); ++a) {
        const int ell = angular_wavenumber(a, modes.rows());
        const auto u = modes.row(a);
        for (int j = 0; j < n; ++j) {
            const double r = d.node(j);
            const Complex v = sym[j] * u[j];
            const Complex vl = j > 0 ? sym[j - 1] * u[j - 1] : Complex{};
            const Complex vr = j + 1 < n ? sym[j + 1] * u[j + 1] : Complex{};
            const Complex dv = (vr - vl) / (2.0 * dr) - a_exp * v / r;
            kinetic += std::norm(r * v + two_it * dv);
            if (ell != 0) kinetic += 4.0 * t * t * ell * ell * std::norm(v) / (r * r);
        }
    }
    kinetic *= sphere_area(d.dim()) * dr / 8.0;

    const double p = params.p;
    const double at = std::abs(t);
    const double weight = weighting == PotentialWeight::Derivation
                              ? t * t
                              : std::pow(at, 0.5 * d.dim() * (p - 1.0));
    const double potential = weight == 0.0 ? 0.0 : weight * power_integral(state, p + 1.0) / (p + 1.0);
    return kinetic + potential;
}

double sobolev_norm(const FieldState& state, int k) {
    if (k < 0 || k > 4) throw std::invalid_argument("sobolev_norm: k must be in 0..4");
    const LaplacianOp op(state.domain_ptr());
    FieldState power = to_modes(state);
    double sum = 0.0;
    for (int i = 0; i <= k; ++i) {
        if (i % 2 == 0) {
            sum += mass(power);
        } else {
            sum += dirichlet_form(power);
            power = op.apply(power);
        }
    }
    return std::sqrt(sum);
}

double lebesgue_norm(const FieldState& state, double r) {
    if (r == kInfinity) return linf(state);
    if (!(r >= 1.0)) throw std::invalid_argument("lebesgue_norm: r must be >= 1");
    return std::pow(power_integral(state, r), 1.0 / r);
}

Gradient gradient(const FieldState& state) {
    const FieldState modes = to_modes(state);
    const auto& d = modes.domain();
    const auto sym = d.sym_factors();
    const double dr = d.dr();
    const double a_exp = sym_exponent(d);
    const int n = d.num_radial();
    FieldState radial(modes.domain_ptr(), state.time(), Representation::AngularModes);
    FieldState angular(modes.domain_ptr(), state.time(), Representation::AngularModes);
    for (int a = 0; a < modes.rows(); ++a) {
        const int ell = angular_wavenumber(a, modes.rows());
        const auto u = modes.row(a);
        auto ur = radial.row(a);
        auto ut = angular.row(a);
        for (int j = 0; j < n; ++j) {
            const double r = d.node(j);
            const Complex vl = j > 0 ? sym[j - 1] * u[j - 1] : Complex{};
            const Complex vr = j + 1 < n ? sym[j + 1] * u[j + 1] : Complex{};
            const Complex v = sym[j] * u[j];
            ur[j] = ((vr - vl) / (2.0 * dr) - a_exp * v / r) / sym[j];
            ut[j] = Complex{0.0, static_cast<double>(ell)} * u[j] / r;
        }
    }
    return {to_points(radial), to_points(angular)};
}

DiagnosticsRecord diagnostics(const ModelParams& params, const FieldState& state) {
    DiagnosticsRecord rec;
    rec.time = state.time();
    rec.mass = mass(state);
    rec.energy = energy(params, state);
    rec.pc_energy = pseudoconformal_energy(params, state);
    rec.strauss_ratio = state.is_radial() ? strauss_ratio(state)
                                          : std::numeric_limits<double>::quiet_NaN();
    rec.sup_weighted_amp = sup_weighted_amp(state);
    for (int k : {0, 1, 2, 4}) rec.sobolev[k] = sobolev_norm(state, k);
    rec.linf = linf(state);
    rec.outer_mass_fraction = outer_mass_fraction(state);
    rec.valid = rec.outer_mass_fraction < kHorizonMassFraction;
    return rec;
}

void MixedNormSpec::validate() const {
    auto in_range = [](double e) { return e == kInfinity || (e >= 2.0 && std::isfinite(e)); };
    if (!in_range(q) || !in_range(r)) throw std::invalid_argument("mixed norm exponents must lie in [2, inf]");
    if (N < 0) throw std::invalid_argument("mixed norm order N must be >= 0");
    if (N > 1) throw std::invalid_argument("mixed norm order N > 1 is not supported");
    if (!(t1 >= t0)) throw std::invalid_argument("mixed norm interval must satisfy t0 <= t1");
}

namespace {

double spatial_slice_norm(const FieldState& u, const MixedNormSpec& spec,
                          const ModelParams& params, Flow flow, const LaplacianOp& op) {
    if (spec.N == 0) return lebesgue_norm(u, spec.r);

    // N = 1: ‖∂_t u‖_{L^r} + ‖u‖_{W^{2,r}}, the latter as ‖u‖ + ‖∇u‖ + ‖Δu‖.
    const FieldState lap = op.apply(to_points(u));
    FieldState rhs = lap;
    if (flow == Flow::Defocusing) rhs -= nonlinearity(params, to_points(u));
    rhs *= Complex{0.0, 1.0};

    const Gradient g = gradient(u);
    FieldState grad_mag = g.radial;
    auto gm = grad_mag.values();
    const auto ga = g.angular.values();
    for (std::size_t i = 0; i < gm.size(); ++i)
        gm[i] = std::sqrt(std::norm(gm[i]) + std::norm(ga[i]));

    return lebesgue_norm(rhs, spec.r) + lebesgue_norm(u, spec.r) +
           lebesgue_norm(grad_mag, spec.r) + lebesgue_norm(lap, spec.r);
}

}  // namespace

double mixed_norm(std::span<const FieldState> trajectory, const MixedNormSpec& spec,
                  const ModelParams& params, Flow flow) {
    spec.validate();
    if (trajectory.empty()) throw std::invalid_argument("mixed_norm: empty trajectory");
    const double tol = 1e-9 * std::max(1.0, std::abs(spec.t1));
    for (const auto& s : trajectory) {
        if (s.time() < spec.t0 - tol || s.time() > spec.t1 + tol)
            throw std::invalid_argument("mixed_norm: sample outside the interval");
        s.require_same_domain(trajectory.front());
    }
    const LaplacianOp op(trajectory.front().domain_ptr());

    std::vector<double> slice(trajectory.size());
    for (std::size_t k = 0; k < trajectory.size(); ++k)
        slice[k] = spatial_slice_norm(trajectory[k], spec, params, flow, op);

    if (spec.q == kInfinity) return *std::max_element(slice.begin(), slice.end());

    if (spec.t1 == spec.t0) return 0.0;
    if (trajectory.size() < 2) throw std::invalid_argument("mixed_norm: need at least two samples");
    if (std::abs(trajectory.front().time() - spec.t0) > tol ||
        std::abs(trajectory.back().time() - spec.t1) > tol)
        throw std::invalid_argument("mixed_norm: samples must span the interval");

    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < trajectory.size(); ++k) {
        const double h = trajectory[k + 1].time() - trajectory[k].time();
        if (!(h > 0.0)) throw std::invalid_argument("mixed_norm: trajectory not time-ordered");
        integral += 0.5 * h * (std::pow(slice[k], spec.q) + std::pow(slice[k + 1], spec.q));
    }
    return std::pow(integral, 1.0 / spec.q);
}

Admissibility check_admissible(int n, double q, double r) {
    Admissibility out;
    auto valid = [](double e) { return e == kInfinity || e >= 2.0; };
    if (!valid(q) || !valid(r) || n < 1) return out;
    const double lhs = (q == kInfinity ? 0.0 : 2.0 / q) + (r == kInfinity ? 0.0 : n / r);
    out.admissible = std::abs(lhs - 0.5 * n) <= 1e-12;
    const double r_end = n > 2 ? 2.0 * n / (n - 2.0) : kInfinity;
    out.endpoint = out.admissible && q == 2.0 &&
                   (r_end == kInfinity ? r == kInfinity : std::abs(r - r_end) <= 1e-12);
    return out;
}

StabilityEnergy stability_energy(const ModelParams& params, const FieldState& u,
                                 const FieldState& v) {
    u.require_same_domain(v);
    if (std::abs(u.time() - v.time()) > 1e-9 * std::max(1.0, std::abs(u.time())))
        throw std::invalid_argument("stability_energy: states at different times");
    const FieldState w = to_points(v) - to_points(u);
    return {energy(params, w), mass(w)};
}

}  // namespace exnls
