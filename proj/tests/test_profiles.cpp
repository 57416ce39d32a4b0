#include <doctest.h>

#include <cmath>
#include <numbers>

#include "exnls/functionals.hpp"
#include "exnls/profiles.hpp"

using namespace exnls;

TEST_CASE("closed-form profiles") {
    const auto d = build_domain(ModelParams::make(3, 5.0, 11.0), 199);
    SUBCASE("gaussian ring peak normalization") {
        const ProfileSpec s{"gaussian_ring", {{"a", 3.0}, {"b", 0.5}, {"peak", 0.5}}, {}, {}};
        const FieldState u = make_profile(d, s);
        // Maximum of s³e^{-s²/2} sits at s = √3.
        const double sp = std::sqrt(3.0);
        const double at = u(0, static_cast<int>(std::lround(sp / d->dr())) - 1).real();
        CHECK(at == doctest::Approx(0.5).epsilon(1e-3));
        CHECK(linf(u) <= 0.5 + 1e-12);
    }
    SUBCASE("compact bump support") {
        const ProfileSpec s{"compact_bump", {{"center", 5.0}, {"width", 1.0}, {"amplitude", 2.0}}, {}, {}};
        const FieldState u = make_profile(d, s);
        for (int j = 0; j < d->num_radial(); ++j) {
            const double r = d->node(j);
            if (std::abs(r - 5.0) >= 1.0) CHECK(u(0, j) == Complex{});
        }
        CHECK(linf(u) == doctest::Approx(2.0));
    }
    SUBCASE("sine mode") {
        const ProfileSpec s{"sine_mode", {{"k", 2.0}}, {}, {}};
        const FieldState u = make_profile(d, s);
        const double r = d->node(40);
        CHECK(u(0, 40).real() == doctest::Approx(std::sin(2.0 * std::numbers::pi * (r - 1.0) / 10.0) / r));
    }
    SUBCASE("zero") { CHECK(linf(make_profile(d, ProfileSpec{})) == 0.0); }
}

TEST_CASE("profile validation") {
    CHECK_THROWS(validate_profile(ProfileSpec{"nope", {}, {}, {}}));
    CHECK_THROWS(validate_profile(ProfileSpec{"poly_exp", {{"width", 1.0}}, {}, {}}));
    CHECK_THROWS(validate_profile(ProfileSpec{"gaussian_ring", {{"b", -1.0}}, {}, {}}));
    CHECK_THROWS(validate_profile(ProfileSpec{"gaussian_ring", {{"peak", 1.0}, {"amplitude", 1.0}}, {}, {}}));
    CHECK_THROWS(validate_profile(ProfileSpec{"random_modes", {{"count", 9.0}}, {}, {}}));
    CHECK_NOTHROW(validate_profile(ProfileSpec{"sine_mode", {{"k", 1.0}, {"ell", 1.0}}, {}, {}}));
}

TEST_CASE("random eigenmode data") {
    const auto d = build_domain(ModelParams::make(3, 5.0, 11.0), 399);
    const FieldState a = random_mode_data(d, 42, 8, 24);
    const FieldState b = random_mode_data(d, 42, 8, 24);
    const FieldState c = random_mode_data(d, 43, 8, 24);
    CHECK(mass(a) == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 0; i < a.values().size(); ++i) CHECK(a.values()[i] == b.values()[i]);
    CHECK(mass(a - c) > 1e-2);
    CHECK_THROWS(random_mode_data(d, 1, 9, 24));
    CHECK_THROWS(random_mode_data(d, 1, 8, 4));
}

TEST_CASE("eigenmode combinations and angular factor") {
    const auto d = build_domain(ModelParams::make(2, 5.0, 11.0), 199, 8);
    ProfileSpec s{"eigenmodes", {{"ell", 1.0}}, {1, 3}, {Complex(1.0, 0.0), Complex(0.0, 0.5)}};
    const FieldState u = make_profile(d, s);
    CHECK(u.representation() == Representation::AngularPoints);
    // cos θ factor: opposite angles carry opposite signs, θ = π/2 vanishes.
    for (int j = 0; j < d->num_radial(); ++j) {
        CHECK(std::abs(u(0, j) + u(4, j)) < 1e-14);
        CHECK(std::abs(u(2, j)) < 1e-14);
    }
    const auto radial = build_domain(ModelParams::make(2, 5.0, 11.0), 199);
    CHECK_THROWS(make_profile(radial, ProfileSpec{"sine_mode", {{"ell", 2.0}}, {}, {}}));
}
