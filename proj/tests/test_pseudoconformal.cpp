#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "exnls/functionals.hpp"
#include "exnls/operators.hpp"
#include "exnls/pseudoconformal.hpp"

using namespace exnls;
using boost::math::quadrature::gauss_kronrod;

namespace {

FieldState ring(const DomainPtr& d, double t, double amplitude = 1.0) {
    FieldState u = sample_radial(d, [=](double r) {
        const double s = r - 1.0;
        return amplitude * s * s * std::exp(-0.5 * (s - 2.0) * (s - 2.0)) *
               std::polar(1.0, 0.3 * r);
    });
    u.set_time(t);
    return u;
}

double rel_l2(const FieldState& a, const FieldState& b) {
    return std::sqrt(mass(a - b) / mass(b));
}

}  // namespace

TEST_CASE("PCParams") {
    CHECK(PCParams::make(ModelParams::make(3, 10.0, 5.0)).nu == doctest::Approx(11.5));
    CHECK_THROWS(PCParams::make(ModelParams::make(3, 1.0 + 4.0 / 3.0, 5.0)));
    CHECK_THROWS(PCParams::make(ModelParams::make(2, 2.5, 5.0)));
    CHECK(PCParams::make(ModelParams::make(2, 3.5, 5.0)).supercritical());
}

TEST_CASE("transform at t = 1") {
    const auto params = ModelParams::make(3, 10.0, 12.0);
    const auto d = build_domain(params, 500);
    const FieldState u = ring(d, 1.0);
    const ConeSlice s = forward_transform(params, u);
    CHECK(s.T == -1.0);
    REQUIRE(s.R_nodes.size() == 502u);
    CHECK(s.R_nodes.front() == 1.0);
    CHECK(s.R_nodes.back() == 12.0);
    CHECK(s.U_values.front() == Complex{});
    CHECK(s.U_values.back() == Complex{});
    for (int j = 0; j < 500; ++j) {
        CHECK(s.R_nodes[j + 1] == d->node(j));
        CHECK(std::abs(s.U_values[j + 1]) == doctest::Approx(std::abs(u(0, j))).epsilon(1e-14));
    }
    CHECK_THROWS(forward_transform(params, ring(d, 0.5)));
}

TEST_CASE("forward then inverse transform with a custom grid") {
    const auto params = ModelParams::make(3, 10.0, 12.0);
    const auto d = build_domain(params, 2000);
    for (double t : {1.0, 1.7, 4.0}) {
        const FieldState u = ring(d, t);
        std::vector<double> R;
        const int M = 12001;
        for (int i = 0; i < M; ++i) R.push_back((1.0 + 11.0 * i / (M - 1.0)) / t);
        const ConeSlice s = forward_transform(params, u, R);
        const FieldState back = inverse_transform(s, d);
        CHECK(back.time() == doctest::Approx(t));
        CHECK(rel_l2(back, u) < 1e-6);
        // The default grid needs no interpolation at all.
        CHECK(rel_l2(inverse_transform(forward_transform(params, u), d), u) < 1e-13);
    }
    std::vector<double> outside{0.1, 0.5, 1.0};
    CHECK_THROWS(forward_transform(params, ring(d, 2.0), outside));
}

TEST_CASE("boundary image vanishes at first order") {
    const auto params = ModelParams::make(3, 10.0, 12.0);
    std::vector<double> first;
    for (int N : {199, 399, 799}) {
        const ConeSlice s = forward_transform(params, ring(build_domain(params, N), 2.0));
        first.push_back(std::abs(s.U_values[1]));
    }
    // u ~ (r-1)² here, so the first interior value falls at least linearly.
    CHECK(std::log2(first[0] / first[1]) >= 1.0);
    CHECK(std::log2(first[1] / first[2]) >= 1.0);
}

TEST_CASE("cone energy against a dense quadrature oracle") {
    const auto params = ModelParams::make(3, 5.0, 20.0);
    const double T = -0.5, nu = 0.5 * 3 * 4.0 - 2.0;
    const double R0 = -T, R1 = 10.0;
    auto U = [&](double R) { return (R - R0) * (R1 - R) * std::exp(-(R - 2.0) * (R - 2.0)) * std::polar(1.0, R); };
    auto dU = [&](double R) {
        const double a = (R - R0) * (R1 - R), da = (R1 - R) - (R - R0);
        const double e = std::exp(-(R - 2.0) * (R - 2.0)), de = -2.0 * (R - 2.0) * e;
        return (da * e + a * de) * std::polar(1.0, R) + a * e * Complex(0.0, 1.0) * std::polar(1.0, R);
    };
    auto density = [&](double R) {
        return R * R * (0.5 * std::norm(dU(R)) + std::pow(-T, nu) * std::pow(std::abs(U(R)), 6.0) / 6.0);
    };
    const double oracle = 4.0 * std::numbers::pi *
                          gauss_kronrod<double, 61>::integrate(density, R0, R1, 15, 1e-13);
    // Non-uniform grid, finer near the cone boundary.
    std::vector<double> R;
    std::vector<Complex> vals;
    const int M = 20001;
    for (int i = 0; i < M; ++i) {
        const double x = static_cast<double>(i) / (M - 1);
        R.push_back(R0 + (R1 - R0) * x * (1.0 + x) / 2.0);
        vals.push_back(U(R.back()));
    }
    const ConeSlice s = make_cone_slice(params, T, R, vals);
    CHECK(cone_energy(s) == doctest::Approx(oracle).epsilon(1e-5));

    std::vector<Complex> zeros(R.size());
    CHECK(cone_energy(make_cone_slice(params, T, R, zeros)) == 0.0);
    CHECK_THROWS(make_cone_slice(params, 0.0, R, zeros));
}

TEST_CASE("E1 and the cone energy agree at t = 1 and obey the initial estimate") {
    const auto params = ModelParams::make(3, 10.0, 12.0);
    const auto d = build_domain(params, 4000);
    const FieldState u = ring(d, 1.0, 0.8);
    const ConeSlice s = forward_transform(params, u);
    const double cone = cone_energy(s);
    CHECK(cone == doctest::Approx(pseudoconformal_energy(params, u)).epsilon(1e-4));
    const double bound = dirichlet_form(u) + weighted_mass(u) + power_integral(u, params.p + 1.0);
    CHECK(cone <= bound);
}

TEST_CASE("monotonicity audit") {
    SUBCASE("zero trajectory") {
        const auto params = ModelParams::make(3, 10.0, 12.0);
        const auto d = build_domain(params, 100);
        std::vector<FieldState> traj;
        for (int k = 0; k < 5; ++k) traj.emplace_back(d, 1.0 + k);
        const MonotonicityReport rep = monotonicity_audit(traj, params);
        CHECK(rep.pass());
        for (const auto& row : rep.rows) {
            CHECK(row.pc_energy == 0.0);
            CHECK(row.cone_energy == 0.0);
        }
    }
    SUBCASE("defocusing run, n = 3, p = 10") {
        const auto params = ModelParams::make(3, 10.0, 120.0);
        const auto d = build_domain(params, 2399);
        PropagatorConfig cfg;
        cfg.dt = 2e-3;
        const StrangIntegrator integ(LaplacianOp(d), params, cfg);
        FieldState u = ring(d, 0.0, 0.1);
        u = integ.advance(u, 500);  // t = 1
        std::vector<FieldState> traj{u};
        for (int k = 0; k < 50; ++k) traj.push_back(u = integ.advance(u, 40));
        const MonotonicityReport rep = monotonicity_audit(traj, params);
        CHECK(rep.rows.size() == 51u);
        CHECK(rep.assessed);
        CHECK(rep.violations_pc == 0);
        CHECK(rep.violations_cone == 0);
        CHECK(rep.pass());
        CHECK(rep.amplitude_bound_holds);
        CHECK(rep.rows.back().pc_energy < rep.rows.front().pc_energy);
    }
    SUBCASE("linear flow reports without a verdict") {
        const auto params = ModelParams::make(3, 10.0, 120.0);
        const auto d = build_domain(params, 1199);
        const LinearPropagator prop(LaplacianOp(d), 1e-2);
        std::vector<FieldState> traj{ring(d, 1.0)};
        for (int k = 0; k < 20; ++k) traj.push_back(prop.step(traj.back()));
        const MonotonicityReport rep = monotonicity_audit(traj, params, Flow::Linear);
        CHECK_FALSE(rep.assessed);
        CHECK(rep.pass());
        CHECK(rep.rows.size() == 21u);
    }
    SUBCASE("samples past the horizon or before t = 1 are rejected") {
        const auto params = ModelParams::make(3, 10.0, 5.0);
        const auto d = build_domain(params, 200);
        std::vector<FieldState> early{ring(d, 0.5)};
        CHECK_THROWS(monotonicity_audit(early, params));
        std::vector<FieldState> wide{sample_radial(d, [](double r) { return Complex((r - 1) * (5 - r), 0.0); })};
        wide.front().set_time(1.0);
        CHECK_THROWS(monotonicity_audit(wide, params));
    }
}
