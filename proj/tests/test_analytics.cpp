#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mps/analytics.hpp"

using namespace mps;
using doctest::Approx;

namespace {

PhysicalContext ctx(double v, double V0, double hbar = 1.0, double mass = 1.0) {
    return {hbar, mass, v, V0};
}

StepScenario finite(double k1, double v, double V0, double a = 1.0, double theta = 0.0) {
    return {ctx(v, V0), k1, a, theta, StepKind::FiniteStep};
}

StepScenario infinite(double k1, double v, double a = 1.0) {
    return {ctx(v, 0.0), k1, a, 0.0, StepKind::InfiniteStep};
}

// Log-uniform sample in [lo, hi].
double log_uniform(std::mt19937& rng, double lo, double hi) {
    std::uniform_real_distribution<double> d(std::log(lo), std::log(hi));
    return std::exp(d(rng));
}

// Random finite-step scenario guaranteed to collide; flips between the two
// regimes by placing k1 on either side of the critical wavenumber.
StepScenario random_finite(std::mt19937& rng) {
    const double v = log_uniform(rng, 1e-3, 2.0);
    const double V0 = log_uniform(rng, 1e-2, 10.0);
    StepScenario s = finite(1.0, v, V0);
    const double u = s.context.drift();
    const double kc = critical_wavenumber(s.context);
    std::uniform_real_distribution<double> frac(0.05, 0.95);
    if (rng() & 1)
        s.k1 = kc * (1.0 + log_uniform(rng, 1e-3, 3.0));  // case I
    else
        s.k1 = u + (kc - u) * frac(rng);  // case II
    return s;
}

}  // namespace

TEST_CASE("dispersion relations") {
    const auto c = ctx(0.0, 0.0);
    CHECK(dispersion_free(0.0, c) == 0.0);
    CHECK(dispersion_free(2.0, c) == Approx(2.0).epsilon(1e-14));
    CHECK(dispersion_free(-3.0, c) == Approx(4.5).epsilon(1e-14));

    const auto c2 = ctx(0.0, 2.0);
    CHECK(dispersion_shifted({0.0, 0.0}, c2).real() == Approx(2.0).epsilon(1e-14));
    CHECK(dispersion_shifted({3.37228, 0.0}, c2).real() ==
          Approx(3.37228 * 3.37228 / 2.0 + 2.0).epsilon(1e-14));

    // Complex branch reproduces sigma + i v beta for k = u + i beta.
    const auto cm = ctx(0.5, 2.0);
    const double k1 = 2.0, u = 0.5;
    const double beta = std::sqrt(2.0 * 2.0 - (k1 - u) * (k1 - u));
    const Complex w3 = dispersion_shifted({u, beta}, cm);
    const double sigma = 0.5 * (k1 * k1 - 2.0 * u * k1 + 2.0 * u * u);
    CHECK(w3.real() == Approx(sigma).epsilon(1e-13));        // 1.25
    CHECK(w3.imag() == Approx(0.5 * beta).epsilon(1e-13));   // 0.66144
}

TEST_CASE("reflected wavenumber is the elastic map") {
    CHECK(reflected_wavenumber(5.0, ctx(0.0, 0.0)) == -5.0);
    CHECK(reflected_wavenumber(4.0, ctx(0.5, 0.0)) == Approx(-3.0).epsilon(1e-15));
    CHECK(reflected_wavenumber(2.0, ctx(0.5, 0.0)) == Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("critical wavenumber and effective height") {
    CHECK(critical_wavenumber(ctx(0.0, 2.0)) == Approx(2.0).epsilon(1e-14));
    CHECK(critical_wavenumber(ctx(0.5, 2.0)) == Approx(2.5).epsilon(1e-14));
    CHECK(critical_wavenumber(ctx(0.5, 0.0)) == Approx(0.5).epsilon(1e-14));

    CHECK(effective_step_height(ctx(0.0, 2.0)) == Approx(2.0).epsilon(1e-14));
    CHECK(effective_step_height(ctx(0.5, 2.0)) == Approx(3.125).epsilon(1e-14));
    CHECK(effective_step_height(ctx(0.5, 0.0)) == Approx(0.125).epsilon(1e-14));
}

TEST_CASE("regime classification") {
    CHECK(classify_regime(finite(4.0, 0.5, 2.0)).tag == RegimeTag::CaseI);
    CHECK(classify_regime(finite(4.0, 0.5, 2.0)).critical_k1 == Approx(2.5));
    CHECK(classify_regime(finite(2.0, 0.5, 2.0)).tag == RegimeTag::CaseII);
    CHECK(classify_regime(finite(0.4, 0.5, 2.0)).tag == RegimeTag::NoCollision);
    CHECK(classify_regime(finite(2.5, 0.5, 2.0)).tag == RegimeTag::Critical);

    const Regime inf_regime = classify_regime(infinite(4.0, 0.5));
    CHECK(inf_regime.tag == RegimeTag::CaseI);
    CHECK(std::isinf(inf_regime.critical_k1));
    CHECK(std::isinf(inf_regime.effective_height));
    CHECK(classify_regime(infinite(0.4, 0.5)).tag == RegimeTag::NoCollision);
}

TEST_CASE("transmitted wavenumber") {
    CHECK(transmitted_wavenumber(finite(4.0, 0.5, 2.0)).real() ==
          Approx(3.3722813232690143).epsilon(1e-14));
    CHECK(transmitted_wavenumber(finite(4.0, 0.5, 2.0)).imag() == 0.0);
    CHECK(transmitted_wavenumber(finite(4.0, 0.0, 2.0)).real() ==
          Approx(std::sqrt(12.0)).epsilon(1e-14));
    const Complex k3 = transmitted_wavenumber(finite(2.0, 0.5, 2.0));
    CHECK(k3.real() == Approx(0.5).epsilon(1e-14));
    CHECK(k3.imag() == Approx(1.3228756555322954).epsilon(1e-14));
    CHECK(transmitted_wavenumber(finite(2.5, 0.5, 2.0)) == Complex(0.5, 0.0));

    CHECK_THROWS_AS((void)transmitted_wavenumber(finite(0.4, 0.5, 2.0)), std::invalid_argument);
    CHECK_THROWS_AS((void)transmitted_wavenumber(infinite(4.0, 0.5)), std::invalid_argument);
}

TEST_CASE("amplitude ratios") {
    const auto r = amplitude_ratios(finite(4.0, 0.5, 2.0));
    CHECK(r.b_over_a == Approx(0.09850768427922493).epsilon(1e-14));
    CHECK(r.c_over_a == Approx(1.09850768427922493).epsilon(1e-14));

    const auto rs = amplitude_ratios(finite(4.0, 0.0, 2.0));
    CHECK(rs.b_over_a == Approx(0.07179676972449085).epsilon(1e-14));
    CHECK(rs.c_over_a == Approx(1.07179676972449085).epsilon(1e-14));

    const auto r2 = amplitude_ratios(finite(2.0, 0.5, 2.0));
    CHECK(r2.b_over_a == 1.0);
    CHECK(r2.c_over_a == 2.0);

    CHECK_THROWS_AS((void)amplitude_ratios(finite(0.4, 0.5, 2.0)), std::invalid_argument);
    CHECK_THROWS_AS((void)amplitude_ratios(infinite(4.0, 0.5)), std::invalid_argument);
}

TEST_CASE("finite step solution assembly") {
    const auto sol = solve_finite_step(finite(4.0, 0.5, 2.0));
    CHECK(sol.regime.tag == RegimeTag::CaseI);
    CHECK(sol.incident.wavenumber.real() == 4.0);
    CHECK(sol.reflected.wavenumber.real() == Approx(-3.0).epsilon(1e-15));
    CHECK(sol.transmitted->wavenumber.real() == Approx(3.3722813232690143).epsilon(1e-14));
    CHECK(std::abs(sol.incident.amplitude) == Approx(1.0));
    CHECK(std::abs(sol.reflected.amplitude) == Approx(0.09850768427922493).epsilon(1e-13));
    CHECK(std::abs(sol.transmitted->amplitude) == Approx(1.09850768427922493).epsilon(1e-13));

    // Zero step: full transmission.
    const auto free_sol = solve_finite_step(finite(3.0, 0.0, 0.0));
    CHECK(free_sol.transmitted->wavenumber.real() == Approx(3.0).epsilon(1e-15));
    CHECK(std::abs(free_sol.reflected.amplitude) == Approx(0.0));
    CHECK(std::abs(free_sol.transmitted->amplitude) == Approx(1.0));

    const auto evan = solve_finite_step(finite(2.0, 0.5, 2.0));
    CHECK(std::abs(evan.transmitted->amplitude) == Approx(2.0));
    CHECK(evan.transmitted->wavenumber.imag() == Approx(1.3228756555322954).epsilon(1e-14));
    CHECK(!evan.notes.empty());  // k1 < 4u is false here but k1 < 10u holds

    CHECK_THROWS_AS((void)solve_finite_step(finite(0.4, 0.5, 2.0)), std::invalid_argument);
}

TEST_CASE("infinite step solution assembly") {
    const auto sol = solve_infinite_step(infinite(4.0, 0.5));
    CHECK(sol.incident.amplitude == Complex(1.0, 0.0));
    CHECK(sol.reflected.amplitude == Complex(-1.0, 0.0));
    CHECK(sol.reflected.wavenumber.real() == Approx(-3.0).epsilon(1e-15));
    CHECK(!sol.transmitted.has_value());
    CHECK(!sol.ratios.has_value());

    const auto mirror = solve_infinite_step(infinite(5.0, 0.0, 2.0));
    CHECK(mirror.reflected.amplitude == Complex(-2.0, 0.0));
    CHECK(mirror.reflected.wavenumber.real() == -5.0);

    // k1 = 2u: reflected wave degenerates to zero wavenumber.
    const auto degen = solve_infinite_step(infinite(1.0, 0.5));
    CHECK(degen.reflected.wavenumber.real() == 0.0);
    CHECK(degen.degenerate_reflection);

    CHECK_THROWS_AS((void)solve_infinite_step(infinite(0.4, 0.5)), std::invalid_argument);
}

TEST_CASE("density field") {
    const auto wall = solve_infinite_step(infinite(4.0, 0.5));
    const double t = 1.7, vt = 0.5 * t;
    CHECK(std::abs(density_field(wall, vt, t)) <= 1e-12);
    // Nodes at (k1 - u)(x - vt) = n pi, antinodes (density 4a^2) halfway between.
    const double spacing = std::numbers::pi / 3.5;
    CHECK(std::abs(density_field(wall, vt - spacing, t)) <= 1e-12);
    CHECK(density_field(wall, vt - spacing / 2.0, t) == Approx(4.0).epsilon(1e-12));
    CHECK(density_field(wall, vt + 1.0, t) == 0.0);

    const auto sol = solve_finite_step(finite(4.0, 0.5, 2.0));
    const double c2 = 1.09850768427922493 * 1.09850768427922493;
    CHECK(density_field(sol, vt + 1e-9, t) == Approx(c2).epsilon(1e-8));
    CHECK(density_field(sol, vt, t) == Approx(c2).epsilon(1e-12));  // continuity
}

TEST_CASE("current field") {
    const auto wall = solve_infinite_step(infinite(4.0, 0.5));
    const double t = 0.3, vt = 0.5 * t;
    CHECK(current_field(wall, vt - std::numbers::pi / 7.0, t) == Approx(2.0).epsilon(1e-12));

    const auto sol = solve_finite_step(finite(4.0, 0.5, 2.0));
    CHECK(current_field(sol, vt + 2.0, t) == Approx(4.069396392693059).epsilon(1e-13));
    // Continuity at the boundary.
    CHECK(current_field(sol, vt, t) ==
          Approx(current_field(sol, std::nextafter(vt, 1e300), t)).epsilon(1e-9));
}

TEST_CASE("reflectivity") {
    const auto sol = solve_finite_step(finite(4.0, 0.5, 2.0));
    CHECK(reflectivity(sol, 0.0, 0.0) == Approx(-0.01734909817326464).epsilon(1e-12));

    const auto evan = solve_finite_step(finite(2.0, 0.5, 2.0));
    CHECK(std::abs(reflectivity(evan, 0.0, 0.0)) <= 1e-14);

    // Static case II: total reflection everywhere.
    const auto stat = solve_finite_step(finite(1.0, 0.0, 2.0));
    for (double x : {-0.3, -1.7, -4.0}) CHECK(reflectivity(stat, x, 0.0) == Approx(1.0));

    CHECK_THROWS_AS((void)reflectivity(sol, 1.0, 0.0), std::invalid_argument);
    const auto wall = solve_infinite_step(infinite(4.0, 0.5));
    CHECK_THROWS_AS((void)reflectivity(wall, -1.0, 0.0), std::invalid_argument);
}

TEST_CASE("transmissivity") {
    const auto sol = solve_finite_step(finite(4.0, 0.5, 2.0));
    for (double x : {0.0, 1.0, 7.5})
        CHECK(transmissivity(sol, x, 0.0) == Approx(1.0173490981732647).epsilon(1e-13));

    const auto evan = solve_finite_step(finite(2.0, 0.5, 2.0));
    CHECK(transmissivity(evan, 0.0, 0.0) == Approx(1.0).epsilon(1e-13));
    CHECK(transmissivity(evan, 1.0, 0.0) == Approx(0.07095202666684558).epsilon(1e-12));

    const auto stat = solve_finite_step(finite(1.0, 0.0, 2.0));
    CHECK(transmissivity(stat, 0.5, 0.0) == 0.0);  // v = 0 case II: T = 0

    CHECK_THROWS_AS((void)transmissivity(sol, -1.0, 0.0), std::invalid_argument);
}

TEST_CASE("boundary unitarity at pinned examples") {
    CHECK(boundary_unitarity(solve_finite_step(finite(4.0, 0.5, 2.0))) <= 1e-12);
    CHECK(boundary_unitarity(solve_finite_step(finite(2.0, 0.5, 2.0))) <= 1e-12);
    CHECK(boundary_unitarity(solve_finite_step(finite(4.0, 0.0, 2.0))) <= 1e-12);
}

TEST_CASE("group velocity") {
    const auto wall = solve_infinite_step(infinite(4.0, 0.5));
    CHECK(group_velocity(wall, Region::A, -0.37, 0.2) == Approx(0.5).epsilon(1e-13));
    CHECK_THROWS_AS((void)group_velocity(wall, Region::A, 0.5 * 2.0, 2.0), NodeSingularity);

    const auto evan = solve_finite_step(finite(2.0, 0.5, 2.0));
    CHECK(group_velocity(evan, Region::B, 1.3, 0.0) == Approx(0.5).epsilon(1e-13));

    const auto sol = solve_finite_step(finite(4.0, 0.5, 2.0));
    CHECK(group_velocity(sol, Region::B, 2.0, 0.0) ==
          Approx(3.3722813232690143).epsilon(1e-13));
}

TEST_CASE("input validation") {
    CHECK_THROWS_WITH_AS((void)classify_regime(finite(4.0, -0.5, 2.0)), "v must be >= 0",
                         std::invalid_argument);
    CHECK_THROWS_AS((void)classify_regime(finite(-4.0, 0.5, 2.0)), std::invalid_argument);
    StepScenario bad = finite(4.0, 0.5, 2.0);
    bad.a = 0.0;
    CHECK_THROWS_AS((void)classify_regime(bad), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Property tests over randomized scenarios (fixed seed, hand-rolled sampling).
// ---------------------------------------------------------------------------

TEST_CASE("properties: conservation laws and identities") {
    std::mt19937 rng(20260824);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const StepScenario s = random_finite(rng);
        const auto sol = solve_finite_step(s);
        const double u = s.context.drift();
        const double k1 = s.k1;
        const double k2 = sol.reflected.wavenumber.real();
        const double ba = sol.ratios->b_over_a;
        const double ca = sol.ratios->c_over_a;

        // Elastic map, exact.
        CHECK(k1 + k2 == doctest::Approx(2.0 * u).epsilon(1e-15));

        // Amplitude continuity, exact as computed.
        CHECK(ca - (1.0 + ba) == 0.0);

        // Phase matching: k v - Re(omega) identical across components.
        const double p1 = k1 * s.context.v - sol.incident.omega.real();
        const double p2 = k2 * s.context.v - sol.reflected.omega.real();
        const double p3 = sol.transmitted->wavenumber.real() * s.context.v -
                          sol.transmitted->omega.real();
        const double scale = std::abs(p1) + 1e-30;
        CHECK(std::abs(p2 - p1) / scale <= 1e-12);
        CHECK(std::abs(p3 - p1) / scale <= 1e-12);
        // Imaginary part consistency: Im(k3) v = Im(omega3).
        CHECK(std::abs(sol.transmitted->wavenumber.imag() * s.context.v -
                       sol.transmitted->omega.imag()) <= 1e-12 * (1.0 + std::abs(p1)));

        // Flux continuity (Eq. 23 / Eq. 35 shape).
        const double lhs = k1 + k2 * ba * ba + 2.0 * u * ba;
        const double rhs = sol.transmitted->wavenumber.real() * ca * ca;
        CHECK(std::abs(lhs - rhs) / (std::abs(rhs) + 1e-30) <= 1e-12);

        // Boundary unitarity.
        CHECK(boundary_unitarity(sol) <= 1e-12);

        // Field continuity at the boundary.
        const double t = 10.0 * unit(rng);
        const double vt = s.context.v * t;
        const double rho_a = density_field(sol, vt, t);
        const double rho_b = density_field(sol, std::nextafter(vt, 1e300), t);
        CHECK(std::abs(rho_a - rho_b) / rho_a <= 1e-9);
        const double j_a = current_field(sol, vt, t);
        const double j_b = current_field(sol, std::nextafter(vt, 1e300), t);
        CHECK(std::abs(j_a - j_b) / (std::abs(j_a) + 1e-30) <= 1e-9);

        // Galilean consistency: the moving-step ratio equals the static-step
        // ratio evaluated at drift-shifted wavenumbers.
        const double k1p = k1 - u;
        const double k3p = sol.transmitted->wavenumber.real() - u +
                           sol.transmitted->wavenumber.imag();  // beta folds in as 0 for case I
        if (sol.regime.tag == RegimeTag::CaseI) {
            const double static_ratio = (k1p - (sol.transmitted->wavenumber.real() - u)) /
                                        (k1p + (sol.transmitted->wavenumber.real() - u));
            CHECK(std::abs(ba - static_ratio) / (std::abs(ba) + 1e-30) <= 1e-12);
        }
        (void)k3p;
    }
}

TEST_CASE("properties: static reduction at v = 0") {
    std::mt19937 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double V0 = log_uniform(rng, 1e-2, 10.0);
        const double k1 = std::sqrt(2.0 * V0) * (1.0 + log_uniform(rng, 1e-3, 3.0));
        const auto sol = solve_finite_step(finite(k1, 0.0, V0));
        const double k3 = sol.transmitted->wavenumber.real();
        const double ba_ref = (k1 - k3) / (k1 + k3);
        const double ca_ref = 2.0 * k1 / (k1 + k3);
        const double T_ref = 4.0 * k1 * k3 / ((k1 + k3) * (k1 + k3));
        CHECK(std::abs(sol.ratios->b_over_a - ba_ref) <= 1e-12 * std::abs(ba_ref) + 1e-15);
        CHECK(std::abs(sol.ratios->c_over_a - ca_ref) <= 1e-12 * ca_ref);
        CHECK(std::abs(transmissivity(sol, 0.0, 0.0) - T_ref) <= 1e-12 * T_ref);
        // R constant in x at v = 0, equal to (b/a)^2.
        const double R1 = reflectivity(sol, -0.3, 0.0);
        const double R2 = reflectivity(sol, -2.9, 0.0);
        CHECK(std::abs(R1 - R2) <= 1e-12);
        CHECK(std::abs(R1 - ba_ref * ba_ref) <= 1e-12);
    }
}

TEST_CASE("properties: case I spatial structure") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        StepScenario s = random_finite(rng);
        s.k1 = critical_wavenumber(s.context) * (1.0 + log_uniform(rng, 1e-2, 2.0));
        const auto sol = solve_finite_step(s);
        const double u = s.context.drift();
        const double period = std::numbers::pi / (s.k1 - u);
        const double t = 5.0 * unit(rng);
        const double vt = s.context.v * t;
        const double T0 = transmissivity(sol, vt, t);
        const double R0 = reflectivity(sol, vt - 0.37 * period, t);
        // T constant in x and t; R periodic with period pi/(k1 - u).
        CHECK(transmissivity(sol, vt + 3.1, t) == doctest::Approx(T0).epsilon(1e-12));
        CHECK(transmissivity(solve_finite_step(s), s.context.v * (t + 2.0), t + 2.0) ==
              doctest::Approx(T0).epsilon(1e-12));
        CHECK(reflectivity(sol, vt - 0.37 * period - 3.0 * period, t) ==
              doctest::Approx(R0).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("properties: infinite-step node structure and group velocity") {
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double v = log_uniform(rng, 1e-3, 2.0);
        const double k1 = v * (1.0 + log_uniform(rng, 1e-2, 50.0));
        const auto sol = solve_infinite_step(infinite(k1, v));
        const double u = sol.scenario.context.drift();
        const double t = 5.0 * unit(rng);
        const double vt = v * t;
        // Exact zeros at (k1 - u)(x - vt) = n pi.
        for (int n : {1, 2, 5}) {
            const double x = vt - n * std::numbers::pi / (k1 - u);
            CHECK(density_field(sol, x, t) <= 4.0 * 1e-12);
        }
        // Group velocity v at non-node points.
        const double x = vt - (0.1 + 0.8 * unit(rng)) * std::numbers::pi / (k1 - u);
        CHECK(std::abs(group_velocity(sol, Region::A, x, t) - v) <= 1e-12 * v);
    }
}

TEST_CASE("properties: case II evanescent tail") {
    std::mt19937 rng(55);
    for (int i = 0; i < 200; ++i) {
        StepScenario s = random_finite(rng);
        const double u = s.context.drift();
        const double kc = critical_wavenumber(s.context);
        s.k1 = u + 0.6 * (kc - u);
        const auto sol = solve_finite_step(s);
        const double beta = sol.transmitted->wavenumber.imag();
        REQUIRE(beta > 0.0);
        // log density affine in (x - vt) with slope -2 beta.
        const double t = 1.3;
        const double vt = s.context.v * t;
        const double d = std::min(1.0, 3.0 / beta);
        const double slope = (std::log(density_field(sol, vt + 2.0 * d, t)) -
                              std::log(density_field(sol, vt + d, t))) / d;
        CHECK(std::abs(slope + 2.0 * beta) <= 1e-12 * 2.0 * beta + 1e-13);
        // Group velocity exactly v in region B.
        CHECK(std::abs(group_velocity(sol, Region::B, vt + d, t) - s.context.v) <=
              1e-12 * s.context.v);
    }
}
