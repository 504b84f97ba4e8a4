#include "mps/analytics.hpp"

#include <cmath>
#include <limits>

namespace mps {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double signed_b(const AnalyticSolution& sol) {
    // Reflected amplitude with the common phase factored out; negative for the
    // infinite step (B = -A), a * b_over_a otherwise.
    if (sol.scenario.kind == StepKind::InfiniteStep) return -sol.scenario.a;
    return sol.scenario.a * sol.ratios->b_over_a;
}

double region_a_density(const AnalyticSolution& sol, double xi) {
    // |A e^{i k1 x} + B e^{i k2 x}|^2 with equal phases; xi = x - vt.
    const double a = sol.scenario.a;
    const double b = signed_b(sol);
    const double u = sol.scenario.context.drift();
    const double phase = 2.0 * (sol.scenario.k1 - u) * xi;
    return a * a + b * b + 2.0 * a * b * std::cos(phase);
}

double region_a_current(const AnalyticSolution& sol, double xi) {
    const auto& ctx = sol.scenario.context;
    const double a = sol.scenario.a;
    const double b = signed_b(sol);
    const double u = ctx.drift();
    const double k1 = sol.scenario.k1;
    const double k2 = sol.reflected.wavenumber.real();
    const double phase = 2.0 * (k1 - u) * xi;
    return (ctx.hbar / ctx.mass) *
           (k1 * a * a + k2 * b * b + 2.0 * u * a * b * std::cos(phase));
}

}  // namespace

const char* to_string(RegimeTag tag) {
    switch (tag) {
        case RegimeTag::NoCollision: return "NoCollision";
        case RegimeTag::CaseI: return "CaseI";
        case RegimeTag::Critical: return "Critical";
        case RegimeTag::CaseII: return "CaseII";
    }
    return "?";
}

const char* to_string(StepKind kind) {
    return kind == StepKind::InfiniteStep ? "infinite" : "finite";
}

void PhysicalContext::validate() const {
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw std::invalid_argument("hbar must be > 0");
    if (!(mass > 0.0) || !std::isfinite(mass)) throw std::invalid_argument("mass must be > 0");
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("v must be >= 0");
    if (!(V0 >= 0.0) || !std::isfinite(V0)) throw std::invalid_argument("V0 must be >= 0");
}

void StepScenario::validate() const {
    context.validate();
    if (!(k1 > 0.0) || !std::isfinite(k1)) throw std::invalid_argument("k1 must be > 0");
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("a must be > 0");
    if (!std::isfinite(theta)) throw std::invalid_argument("theta must be finite");
}

double dispersion_free(double k, const PhysicalContext& ctx) {
    return ctx.hbar * k * k / (2.0 * ctx.mass);
}

Complex dispersion_shifted(Complex k, const PhysicalContext& ctx) {
    return ctx.hbar * k * k / (2.0 * ctx.mass) + ctx.V0 / ctx.hbar;
}

double reflected_wavenumber(double k1, const PhysicalContext& ctx) {
    return -k1 + 2.0 * ctx.drift();
}

double critical_wavenumber(const PhysicalContext& ctx) {
    return ctx.drift() + std::sqrt(2.0 * ctx.mass * ctx.V0) / ctx.hbar;
}

double effective_step_height(const PhysicalContext& ctx) {
    const double s = std::sqrt(ctx.mass / 2.0) * ctx.v + std::sqrt(ctx.V0);
    return s * s;
}

Regime classify_regime(const StepScenario& scenario) {
    scenario.validate();
    const double u = scenario.context.drift();
    if (scenario.kind == StepKind::InfiniteStep) {
        const RegimeTag tag = scenario.k1 > u ? RegimeTag::CaseI : RegimeTag::NoCollision;
        return {tag, kInf, kInf};
    }
    const double kc = critical_wavenumber(scenario.context);
    const double veff = effective_step_height(scenario.context);
    RegimeTag tag;
    if (scenario.k1 <= u)
        tag = RegimeTag::NoCollision;
    else if (scenario.k1 > kc)
        tag = RegimeTag::CaseI;
    else if (scenario.k1 == kc)
        tag = RegimeTag::Critical;
    else
        tag = RegimeTag::CaseII;
    return {tag, kc, veff};
}

Complex transmitted_wavenumber(const StepScenario& scenario) {
    if (scenario.kind == StepKind::InfiniteStep)
        throw std::invalid_argument("transmitted_wavenumber: infinite step has no transmitted wave");
    const Regime regime = classify_regime(scenario);
    if (regime.tag == RegimeTag::NoCollision)
        throw std::invalid_argument("transmitted_wavenumber: k1 <= m v / hbar, no collision");
    const auto& ctx = scenario.context;
    const double u = ctx.drift();
    const double rel = scenario.k1 - u;
    const double disc = rel * rel - 2.0 * ctx.mass * ctx.V0 / (ctx.hbar * ctx.hbar);
    switch (regime.tag) {
        case RegimeTag::CaseI: return Complex(u + std::sqrt(disc), 0.0);
        case RegimeTag::Critical: return Complex(u, 0.0);
        default: return Complex(u, std::sqrt(-disc));  // CaseII, beta > 0
    }
}

AmplitudeRatios amplitude_ratios(const StepScenario& scenario) {
    if (scenario.kind == StepKind::InfiniteStep)
        throw std::invalid_argument("amplitude_ratios: infinite step has fixed b/a = -1");
    const Regime regime = classify_regime(scenario);
    if (regime.tag == RegimeTag::NoCollision)
        throw std::invalid_argument("amplitude_ratios: k1 <= m v / hbar, no collision");
    if (regime.tag == RegimeTag::CaseII) return {1.0, 2.0};
    const double u = scenario.context.drift();
    const double k1 = scenario.k1;
    const double k3 = transmitted_wavenumber(scenario).real();
    const double b_over_a = (k1 - k3) / (k1 + k3 - 2.0 * u);
    return {b_over_a, 1.0 + b_over_a};
}

AnalyticSolution solve_finite_step(const StepScenario& scenario) {
    if (scenario.kind != StepKind::FiniteStep)
        throw std::invalid_argument("solve_finite_step: scenario is not a finite step");
    const Regime regime = classify_regime(scenario);
    if (regime.tag == RegimeTag::NoCollision)
        throw std::invalid_argument("solve_finite_step: k1 <= m v / hbar, no collision");

    const auto& ctx = scenario.context;
    const Complex phase = std::polar(1.0, scenario.theta);
    const double k1 = scenario.k1;
    const double k2 = reflected_wavenumber(k1, ctx);
    const Complex k3 = transmitted_wavenumber(scenario);
    const AmplitudeRatios ratios = amplitude_ratios(scenario);

    AnalyticSolution sol;
    sol.scenario = scenario;
    sol.regime = regime;
    sol.incident = {scenario.a * phase, Complex(k1, 0.0),
                    Complex(dispersion_free(k1, ctx), 0.0), Region::A};
    sol.reflected = {scenario.a * ratios.b_over_a * phase, Complex(k2, 0.0),
                     Complex(dispersion_free(k2, ctx), 0.0), Region::A};
    sol.transmitted = PlaneWaveComponent{scenario.a * ratios.c_over_a * phase, k3,
                                         dispersion_shifted(k3, ctx), Region::B};
    sol.ratios = ratios;
    sol.degenerate_reflection = (k2 == 0.0);

    const double u = ctx.drift();
    if (regime.tag == RegimeTag::CaseII && k1 < 4.0 * u)
        sol.notes.push_back("warning: k1 < 4u, boundary transmissivity 4u/k1 exceeds 1");
    if (u > 0.0 && k1 < 10.0 * u)
        sol.notes.push_back("note: k1 < 10u, outside the semi-classical regime");
    return sol;
}

AnalyticSolution solve_infinite_step(const StepScenario& scenario) {
    if (scenario.kind != StepKind::InfiniteStep)
        throw std::invalid_argument("solve_infinite_step: scenario is not an infinite step");
    const Regime regime = classify_regime(scenario);
    if (regime.tag == RegimeTag::NoCollision)
        throw std::invalid_argument("solve_infinite_step: k1 <= m v / hbar, no collision");

    const auto& ctx = scenario.context;
    const Complex phase = std::polar(1.0, scenario.theta);
    const double k1 = scenario.k1;
    const double k2 = reflected_wavenumber(k1, ctx);

    AnalyticSolution sol;
    sol.scenario = scenario;
    sol.regime = regime;
    sol.incident = {scenario.a * phase, Complex(k1, 0.0),
                    Complex(dispersion_free(k1, ctx), 0.0), Region::A};
    sol.reflected = {-scenario.a * phase, Complex(k2, 0.0),
                     Complex(dispersion_free(k2, ctx), 0.0), Region::A};
    sol.degenerate_reflection = (k2 == 0.0);
    return sol;
}

AnalyticSolution solve(const StepScenario& scenario) {
    return scenario.kind == StepKind::FiniteStep ? solve_finite_step(scenario)
                                                 : solve_infinite_step(scenario);
}

double density_field(const AnalyticSolution& sol, double x, double t) {
    const double xi = x - sol.scenario.context.v * t;
    if (xi <= 0.0) return region_a_density(sol, xi);
    if (sol.scenario.kind == StepKind::InfiniteStep) return 0.0;
    const double c = std::abs(sol.transmitted->amplitude);
    const double beta = sol.transmitted->wavenumber.imag();
    return c * c * std::exp(-2.0 * beta * xi);
}

double current_field(const AnalyticSolution& sol, double x, double t) {
    const double xi = x - sol.scenario.context.v * t;
    if (xi <= 0.0) return region_a_current(sol, xi);
    if (sol.scenario.kind == StepKind::InfiniteStep) return 0.0;
    const auto& ctx = sol.scenario.context;
    const double c = std::abs(sol.transmitted->amplitude);
    const double gamma = sol.transmitted->wavenumber.real();
    const double beta = sol.transmitted->wavenumber.imag();
    return (ctx.hbar / ctx.mass) * gamma * c * c * std::exp(-2.0 * beta * xi);
}

double reflectivity(const AnalyticSolution& sol, double x, double t) {
    if (sol.scenario.kind == StepKind::InfiniteStep)
        throw std::invalid_argument("reflectivity: infinite step reflects totally (R = 1)");
    const double xi = x - sol.scenario.context.v * t;
    if (xi > 0.0) throw std::invalid_argument("reflectivity: defined in region A (x <= vt) only");
    const double u = sol.scenario.context.drift();
    const double k1 = sol.scenario.k1;
    const double a = sol.scenario.a;
    if (sol.regime.tag == RegimeTag::CaseII) {
        const double c = std::cos((k1 - u) * xi);
        return 1.0 - 4.0 * (u / k1) * c * c;
    }
    const double b = a * sol.ratios->b_over_a;
    const double k2 = sol.reflected.wavenumber.real();
    const double phase = 2.0 * (k1 - u) * xi;
    return (-k2 * b * b - 2.0 * u * a * b * std::cos(phase)) / (k1 * a * a);
}

double transmissivity(const AnalyticSolution& sol, double x, double t) {
    if (sol.scenario.kind == StepKind::InfiniteStep)
        throw std::invalid_argument("transmissivity: infinite step transmits nothing");
    const double xi = x - sol.scenario.context.v * t;
    if (xi < 0.0) throw std::invalid_argument("transmissivity: defined in region B (x >= vt) only");
    const double k1 = sol.scenario.k1;
    const double a = sol.scenario.a;
    const double c = std::abs(sol.transmitted->amplitude);
    const double gamma = sol.transmitted->wavenumber.real();
    const double beta = sol.transmitted->wavenumber.imag();
    return gamma * c * c * std::exp(-2.0 * beta * xi) / (k1 * a * a);
}

double boundary_unitarity(const AnalyticSolution& sol) {
    const double t0 = 0.0;
    const double x0 = sol.scenario.context.v * t0;
    return std::abs(reflectivity(sol, x0, t0) + transmissivity(sol, x0, t0) - 1.0);
}

double group_velocity(const AnalyticSolution& sol, Region region, double x, double t,
                      double node_eps_rel) {
    const double xi = x - sol.scenario.context.v * t;
    if (region == Region::A && xi > 0.0)
        throw std::invalid_argument("group_velocity: region A requires x <= vt");
    if (region == Region::B && xi <= 0.0)
        throw std::invalid_argument("group_velocity: region B requires x > vt");

    double peak;  // per-region density maximum, scale for the node guard
    if (region == Region::A) {
        const double a = sol.scenario.a;
        const double b = std::abs(signed_b(sol));
        peak = (a + b) * (a + b);
    } else if (sol.scenario.kind == StepKind::InfiniteStep) {
        peak = 0.0;  // region B is empty behind an infinite step
    } else {
        const double c = std::abs(sol.transmitted->amplitude);
        peak = c * c;
    }

    const double density = density_field(sol, x, t);
    if (!(density > node_eps_rel * peak))
        throw NodeSingularity("group_velocity: density at a standing-wave node");
    return current_field(sol, x, t) / density;
}

}  // namespace mps
