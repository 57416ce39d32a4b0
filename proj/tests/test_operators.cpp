#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "exnls/functionals.hpp"
#include "exnls/operators.hpp"

using namespace exnls;

namespace {

FieldState random_state(const DomainPtr& d, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    FieldState s(d, 0.0);
    for (auto& z : s.values()) z = Complex(g(rng), g(rng));
    return s;
}

Complex inner(const FieldState& a, const FieldState& b) {
    const auto w = a.domain().quad_weights();
    Complex sum{};
    for (int j = 0; j < a.cols(); ++j) sum += w[j] * a(0, j) * std::conj(b(0, j));
    return sum;
}

double rel_l2(const FieldState& a, const FieldState& b) {
    return std::sqrt(mass(a - b) / mass(b));
}

FieldState smooth_data(const DomainPtr& d) {
    return sample_radial(d, [](double r) {
        const double s = r - 1.0;
        return Complex(s * s * s * std::exp(-0.5 * s * s), 0.3 * s * s * s * std::exp(-s * s));
    });
}

}  // namespace

TEST_CASE("laplacian of zero") {
    const auto d = build_domain(ModelParams::make(3, 3.0, 5.0), 64);
    const LaplacianOp op(d);
    const FieldState z = apply_laplacian(op, FieldState(d, 0.0));
    for (auto v : z.values()) CHECK(v == Complex{});
}

TEST_CASE("n=3 sine modes are eigenfunctions up to O(dr^2)") {
    const double rmax = 3.0, L = rmax - 1.0;
    std::vector<double> err;
    for (int N : {99, 199, 399}) {
        const auto d = build_domain(ModelParams::make(3, 3.0, rmax), N);
        const LaplacianOp op(d);
        const int k = 3;
        const double mu = std::pow(k * std::numbers::pi / L, 2);
        const FieldState u = sample_radial(d, [&](double r) {
            return Complex(std::sin(k * std::numbers::pi * (r - 1) / L) / r, 0.0);
        });
        const FieldState lap = op.apply(u);
        double e = 0.0;
        for (int j = 0; j < N; ++j) e = std::max(e, std::abs(lap(0, j) + mu * u(0, j)));
        err.push_back(e / mu);
    }
    CHECK(err[2] < 1e-3);
    CHECK(std::log2(err[0] / err[1]) == doctest::Approx(2.0).epsilon(0.05));
    CHECK(std::log2(err[1] / err[2]) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("n=2 stencil for angular mode 1") {
    const auto d = build_domain(ModelParams::make(2, 3.0, 4.0), 32, 8);
    const LaplacianOp op(d);
    CHECK(op.symmetrization_constant() == -0.25);
    const SymTridiag m = op.matrix(1);
    const double h = d->dr();
    for (int j = 0; j < 32; ++j) {
        const double r = d->node(j);
        CHECK(m.diag[j] == doctest::Approx(-2.0 / (h * h) - (-0.25 + 1.0) / (r * r)));
    }
    for (double o : m.off) CHECK(o == doctest::Approx(1.0 / (h * h)));
    CHECK(op.angular_eigenvalue(7) == 1.0);
}

TEST_CASE("n=2 angular application matches the per-mode radial operator") {
    const auto d = build_domain(ModelParams::make(2, 3.0, 4.0), 40, 8);
    const auto dr = build_domain(ModelParams::make(2, 3.0, 4.0), 40, 1);
    const LaplacianOp op(d);
    auto f = [](double r) { return (r - 1) * (r - 1) * (4 - r); };
    const FieldState u = sample_polar(d, [&](double r, double th) {
        return Complex(f(r) * std::cos(2 * th), 0.0);
    });
    const FieldState lap = op.apply(u);
    // Radial oracle: mode ℓ = 2 via the stencil with shift (c_2 + 4)/r².
    const SymTridiag m = op.matrix(2);
    const auto sym = d->sym_factors();
    std::vector<double> v(40), lv(40);
    for (int j = 0; j < 40; ++j) v[j] = sym[j] * f(d->node(j));
    for (int j = 0; j < 40; ++j) {
        lv[j] = m.diag[j] * v[j] + (j > 0 ? m.off[j - 1] * v[j - 1] : 0.0) +
                (j + 1 < 40 ? m.off[j] * v[j + 1] : 0.0);
    }
    for (int a = 0; a < 8; ++a) {
        const double c = std::cos(2 * 2 * std::numbers::pi * a / 8);
        for (int j = 0; j < 40; ++j) CHECK(std::abs(lap(a, j) - c * lv[j] / sym[j]) < 1e-9);
    }
    (void)dr;
}

TEST_CASE("discrete self-adjointness and negativity") {
    std::mt19937_64 rng(11);
    for (int n : {2, 3, 5}) {
        const auto d = build_domain(ModelParams::make(n, 3.0, 6.0), 120);
        const LaplacianOp op(d);
        for (int trial = 0; trial < 100; ++trial) {
            const FieldState a = random_state(d, rng), b = random_state(d, rng);
            const Complex lhs = inner(op.apply(a), b), rhs = inner(a, op.apply(b));
            CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
            CHECK(inner(op.apply(a), a).real() <= 0.0);
        }
    }
}

TEST_CASE("Crank-Nicolson step is unitary") {
    std::mt19937_64 rng(5);
    for (int n : {2, 3}) {
        const auto d = build_domain(ModelParams::make(n, 3.0, 10.0), 500);
        const LaplacianOp op(d);
        for (double dt : {1e-4, 1e-2, 1.0}) {
            const FieldState u = random_state(d, rng);
            PropagatorConfig cfg;
            cfg.dt = dt;
            const FieldState v = linear_step(op, cfg, u);
            CHECK(std::abs(mass(v) / mass(u) - 1.0) < 1e-13);
            CHECK(v.time() == doctest::Approx(dt));
        }
        const FieldState z = LinearPropagator(op, 0.1).step(FieldState(d, 0.0));
        for (auto val : z.values()) CHECK(val == Complex{});
    }
    const auto d2 = build_domain(ModelParams::make(2, 3.0, 10.0), 200, 16);
    const LaplacianOp op2(d2);
    const FieldState u = random_state(d2, rng);
    const FieldState v = LinearPropagator(op2, 0.05).step(u);
    CHECK(std::abs(mass(v) / mass(u) - 1.0) < 1e-13);
    CHECK(v.representation() == Representation::AngularPoints);
}

TEST_CASE("Crank-Nicolson acts on an eigenmode by the Cayley factor") {
    // Independent oracle: dense symmetric eigensolver on the stencil matrix.
    const int N = 150;
    const auto d = build_domain(ModelParams::make(3, 3.0, 4.0), N);
    const LaplacianOp op(d);
    const SymTridiag m = op.matrix(0);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    for (int j = 0; j < N; ++j) {
        A(j, j) = m.diag[j];
        if (j + 1 < N) A(j, j + 1) = A(j + 1, j) = m.off[j];
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const double dt = 0.01;
    const LinearPropagator prop(op, dt);
    const auto sym = d->sym_factors();
    for (int idx : {N - 1, N - 4, N / 2}) {
        const double lambda = -es.eigenvalues()(idx);
        FieldState u(d, 0.0);
        for (int j = 0; j < N; ++j) u(0, j) = es.eigenvectors()(j, idx) / sym[j];
        const FieldState v = prop.step(u);
        const Complex factor = (1.0 - Complex(0, 0.5 * dt * lambda)) / (1.0 + Complex(0, 0.5 * dt * lambda));
        for (int j = 0; j < N; ++j) CHECK(std::abs(v(0, j) - factor * u(0, j)) < 1e-12);
    }
}

TEST_CASE("nonlinear phase step") {
    const auto d = build_domain(ModelParams::make(3, 3.0, 4.0), 64);
    const auto params = ModelParams::make(3, 3.0, 4.0);
    FieldState one = sample_radial(d, [](double) { return Complex(1.0, 0.0); });
    const FieldState rotated = nonlinear_phase_step(params, std::numbers::pi, one);
    for (auto z : rotated.values()) CHECK(std::abs(z - Complex(-1.0, 0.0)) < 1e-15);

    std::mt19937_64 rng(3);
    const FieldState u = random_state(d, rng);
    const auto p7 = ModelParams::make(3, 7.5, 4.0);
    const FieldState v = nonlinear_phase_step(p7, 0.3, u);
    for (std::size_t i = 0; i < u.values().size(); ++i)
        CHECK(std::abs(std::abs(v.values()[i]) - std::abs(u.values()[i])) <= 4e-16 * std::abs(u.values()[i]));
    CHECK(std::abs(mass(v) - mass(u)) <= 1e-15 * mass(u));

    const auto d2 = build_domain(ModelParams::make(2, 3.0, 4.0), 32, 8);
    FieldState modes = to_modes(FieldState(d2, 0.0));
    CHECK_THROWS(nonlinear_phase_step(ModelParams::make(2, 3.0, 4.0), 0.1, modes));
}

TEST_CASE("Strang step conserves mass and converges at second order") {
    const auto params = ModelParams::make(3, 5.0, 20.0);
    const auto d = build_domain(params, 400);
    const LaplacianOp op(d);
    const FieldState u0 = smooth_data(d);

    SUBCASE("mass over 1e4 steps") {
        PropagatorConfig cfg;
        cfg.dt = 1e-3;
        const FieldState u = StrangIntegrator(op, params, cfg).advance(u0, 10000);
        CHECK(std::abs(mass(u) / mass(u0) - 1.0) < 1e-10);
        CHECK(u.time() == doctest::Approx(10.0));
    }
    SUBCASE("time self-convergence") {
        const double T = 0.5;
        auto run = [&](double dt) {
            PropagatorConfig cfg;
            cfg.dt = dt;
            return StrangIntegrator(op, params, cfg).advance(u0, static_cast<int>(std::lround(T / dt)));
        };
        const double dts[] = {1e-2, 5e-3, 2.5e-3};
        std::vector<double> err;
        for (double dt : dts) err.push_back(rel_l2(run(dt), run(dt / 4)));
        for (int i = 0; i + 1 < 3; ++i)
            CHECK(std::log2(err[i] / err[i + 1]) == doctest::Approx(2.0).epsilon(0.1));
    }
    SUBCASE("single steps agree with advance") {
        PropagatorConfig cfg;
        cfg.dt = 1e-2;
        FieldState a = u0;
        for (int k = 0; k < 5; ++k) a = strang_step(op, params, cfg, a);
        const FieldState b = StrangIntegrator(op, params, cfg).advance(u0, 5);
        CHECK(rel_l2(a, b) < 1e-13);
    }
    SUBCASE("zero stays zero") {
        PropagatorConfig cfg;
        cfg.dt = 1e-2;
        const FieldState z = StrangIntegrator(op, params, cfg).advance(FieldState(d, 0.0), 20);
        for (auto v : z.values()) CHECK(v == Complex{});
    }
}

TEST_CASE("Strang step converges at second order in dr") {
    const auto params = ModelParams::make(3, 5.0, 9.0);
    const double T = 0.25, dt = 1e-3;
    auto run = [&](int N) {
        const auto d = build_domain(params, N);
        PropagatorConfig cfg;
        cfg.dt = dt;
        return StrangIntegrator(LaplacianOp(d), params, cfg).advance(smooth_data(d), static_cast<int>(T / dt));
    };
    // Nested grids: N_k = 2^k (N_0 + 1) - 1 share every other node.
    const FieldState a = run(99), b = run(199), c = run(399);
    auto coarse_diff = [](const FieldState& coarse, const FieldState& fine) {
        double s = 0.0, n = 0.0;
        for (int j = 0; j < coarse.cols(); ++j) {
            s += std::norm(coarse(0, j) - fine(0, 2 * j + 1));
            n += std::norm(fine(0, 2 * j + 1));
        }
        return std::sqrt(s / n);
    };
    const double e1 = coarse_diff(a, b), e2 = coarse_diff(b, c);
    CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("pointwise potential flow against a fine RK4 oracle") {
    const double v1 = 1.7;
    const Complex v2(0.4, -0.9), F(0.3, 0.2), w0(0.8, -0.5);
    const double tau = 0.37;
    auto rhs = [&](Complex w) { return Complex(0, -1) * (v1 * w + v2 * std::conj(w) + F); };
    Complex w = w0;
    const int steps = 20000;
    const double h = tau / steps;
    for (int k = 0; k < steps; ++k) {
        const Complex k1 = rhs(w), k2 = rhs(w + 0.5 * h * k1), k3 = rhs(w + 0.5 * h * k2),
                      k4 = rhs(w + h * k3);
        w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    CHECK(std::abs(pointwise_potential_flow(w0, v1, v2, F, tau) - w) < 1e-12);
    // Hyperbolic branch |V2| > V1.
    const Complex v2b(2.5, 0.5);
    auto rhs2 = [&](Complex z) { return Complex(0, -1) * (v1 * z + v2b * std::conj(z) + F); };
    w = w0;
    for (int k = 0; k < steps; ++k) {
        const Complex k1 = rhs2(w), k2 = rhs2(w + 0.5 * h * k1), k3 = rhs2(w + 0.5 * h * k2),
                      k4 = rhs2(w + h * k3);
        w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    CHECK(std::abs(pointwise_potential_flow(w0, v1, v2b, F, tau) - w) < 1e-12);
    // Degenerate M² = 0.
    CHECK(std::abs(pointwise_potential_flow(w0, 0.0, 0.0, 0.0, tau) - w0) < 1e-15);
}

TEST_CASE("perturbed step") {
    const auto params = ModelParams::make(3, 5.0, 10.0);
    const auto d = build_domain(params, 200);
    const LaplacianOp op(d);
    PropagatorConfig cfg;
    cfg.dt = 0.01;
    cfg.potential_mode = PotentialMode::FrozenCoefficient;
    const FieldState w = smooth_data(d);
    const double mid = 0.5 * cfg.dt;
    FieldState zero(d, mid);

    SUBCASE("zero coefficients reduce to the linear step") {
        const FieldState a = perturbed_step(op, cfg, w, zero, zero, zero);
        const FieldState b = linear_step(op, cfg, w);
        for (std::size_t i = 0; i < a.values().size(); ++i) CHECK(a.values()[i] == b.values()[i]);
    }
    SUBCASE("constant real V1 adds an exact phase") {
        const double c = 2.3;
        FieldState v1 = sample_radial(d, [&](double) { return Complex(c, 0.0); });
        v1.set_time(mid);
        const FieldState a = perturbed_step(op, cfg, w, v1, zero, zero);
        const FieldState b = linear_step(op, cfg, w);
        const Complex phase = std::polar(1.0, -cfg.dt * c);
        for (std::size_t i = 0; i < a.values().size(); ++i)
            CHECK(std::abs(a.values()[i] - phase * b.values()[i]) < 1e-14);
    }
    SUBCASE("real V1 conserves mass") {
        FieldState v1 = sample_radial(d, [](double r) { return Complex(std::exp(-r), 0.0); });
        v1.set_time(mid);
        FieldState u = w;
        const PerturbedIntegrator integ(op, cfg);
        for (int k = 0; k < 50; ++k) {
            v1.set_time(u.time() + mid);
            zero.set_time(u.time() + mid);
            const FieldState next = integ.step(u, v1, zero, zero);
            CHECK(std::abs(mass(next) / mass(u) - 1.0) < 1e-12);
            u = next;
        }
    }
    SUBCASE("coefficients at the wrong time are rejected") {
        FieldState early(d, 0.0);
        CHECK_THROWS(perturbed_step(op, cfg, w, early, early, early));
        FieldState complex_v1 = sample_radial(d, [](double) { return Complex(1.0, 1.0); });
        complex_v1.set_time(mid);
        CHECK_THROWS(perturbed_step(op, cfg, w, complex_v1, zero, zero));
    }
}

TEST_CASE("exact linearization of the nonlinearity") {
    const auto params = ModelParams::make(3, 6.5, 10.0);
    const auto d = build_domain(params, 64);
    const FieldState u = smooth_data(d);
    const Linearization lin = linearize_nonlinearity(params, u);
    FieldState w = sample_radial(d, [](double r) { return Complex(std::cos(r), std::sin(2 * r)); });
    for (double h : {1e-4, 1e-5}) {
        const FieldState hw = Complex(h) * w;
        const FieldState diff = nonlinearity(params, u + hw) - nonlinearity(params, u);
        double worst = 0.0;
        for (std::size_t i = 0; i < diff.values().size(); ++i) {
            const Complex lin_part = lin.v1.values()[i] * hw.values()[i] +
                                     lin.v2.values()[i] * std::conj(hw.values()[i]);
            worst = std::max(worst, std::abs(diff.values()[i] - lin_part));
        }
        CHECK(worst < 50.0 * h * h);
    }
    const Linearization at_zero = linearize_nonlinearity(params, FieldState(d, 0.0));
    for (auto z : at_zero.v1.values()) CHECK(z == Complex{});
    for (auto z : at_zero.v2.values()) CHECK(z == Complex{});
}

TEST_CASE("LAPACK eigenmodes match the closed-form sine modes for n=3") {
    const double L = 4.0;
    const auto d = build_domain(ModelParams::make(3, 3.0, 1.0 + L), 255);
    const LaplacianOp op(d);
    const Eigenmodes eig = laplacian_eigenmodes(op, 1, 5);
    const double h = d->dr();
    const auto sym = d->sym_factors();
    for (int k = 1; k <= 5; ++k) {
        // Discrete sine eigenvalue of the second-difference matrix.
        const double exact = 4.0 / (h * h) * std::pow(std::sin(k * std::numbers::pi * h / (2 * L)), 2);
        CHECK(eig.lambda[k - 1] == doctest::Approx(exact).epsilon(1e-10));
        FieldState closed = sample_radial(d, [&](double r) {
            return Complex(std::sin(k * std::numbers::pi * (r - 1) / L) / r, 0.0);
        });
        closed *= Complex(1.0 / std::sqrt(mass(closed)));
        CHECK(rel_l2(eig.modes[k - 1], closed) < 1e-10);
    }
    (void)sym;
}
