#pragma once

// Closed-form scattering solutions for a potential step moving at constant
// velocity v toward +x: plane-wave components, regime classification,
// density/current fields, reflectivity and transmissivity.

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mps {

using Complex = std::complex<double>;

/// Constants and step parameters shared by every formula.
struct PhysicalContext {
    double hbar = 1.0;
    double mass = 1.0;
    double v = 0.0;   // step velocity, >= 0 (step recedes from the incident wave)
    double V0 = 0.0;  // step height; ignored for the infinite step

    /// Drift wavenumber u = m v / hbar.
    double drift() const { return mass * v / hbar; }

    void validate() const;

    friend bool operator==(const PhysicalContext&, const PhysicalContext&) = default;
};

enum class StepKind { InfiniteStep, FiniteStep };
enum class Region { A, B };  // A: x <= vt, B: x > vt

enum class RegimeTag { NoCollision, CaseI, Critical, CaseII };

const char* to_string(RegimeTag tag);
const char* to_string(StepKind kind);

struct Regime {
    RegimeTag tag;
    double critical_k1;       // u + sqrt(2 m V0)/hbar; +inf for the infinite step
    double effective_height;  // (sqrt(m/2) v + sqrt(V0))^2; +inf for the infinite step
};

/// A fully specified scattering experiment.
struct StepScenario {
    PhysicalContext context;
    double k1 = 0.0;    // incident wavenumber, must exceed u for a collision
    double a = 1.0;     // incident amplitude modulus
    double theta = 0.0; // common phase of all components
    StepKind kind = StepKind::FiniteStep;

    void validate() const;
};

struct PlaneWaveComponent {
    Complex amplitude;
    Complex wavenumber;
    Complex omega;
    Region region;
};

struct AmplitudeRatios {
    double b_over_a;
    double c_over_a;  // always 1 + b_over_a
};

struct AnalyticSolution {
    StepScenario scenario;
    Regime regime;
    PlaneWaveComponent incident;
    PlaneWaveComponent reflected;
    std::optional<PlaneWaveComponent> transmitted;  // absent for the infinite step
    std::optional<AmplitudeRatios> ratios;          // absent for the infinite step
    bool degenerate_reflection = false;             // k2 == 0 (k1 == 2u)
    std::vector<std::string> notes;                 // semi-classical warnings
};

/// Thrown by group_velocity at standing-wave nodes (0/0).
struct NodeSingularity : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- dispersion and wavenumber maps ---

/// omega = hbar k^2 / (2 m), region A.
double dispersion_free(double k, const PhysicalContext& ctx);

/// omega = hbar k^2 / (2 m) + V0 / hbar, region B (complex k allowed).
Complex dispersion_shifted(Complex k, const PhysicalContext& ctx);

/// k2 = -k1 + 2 m v / hbar (elastic reflection off the moving boundary).
double reflected_wavenumber(double k1, const PhysicalContext& ctx);

/// k1c = u + sqrt(2 m V0) / hbar; separates oscillating from evanescent transmission.
double critical_wavenumber(const PhysicalContext& ctx);

/// (sqrt(m/2) v + sqrt(V0))^2, the step height the incident wave effectively sees.
double effective_step_height(const PhysicalContext& ctx);

Regime classify_regime(const StepScenario& scenario);

/// Case I: real k3 = u + sqrt((k1-u)^2 - 2mV0/hbar^2).
/// Case II: k3 = u + i beta, beta > 0. Critical: k3 = u exactly.
Complex transmitted_wavenumber(const StepScenario& scenario);

/// b/a and c/a for the finite step; throws on NoCollision or InfiniteStep.
AmplitudeRatios amplitude_ratios(const StepScenario& scenario);

// --- solution assembly ---

AnalyticSolution solve_finite_step(const StepScenario& scenario);
AnalyticSolution solve_infinite_step(const StepScenario& scenario);

/// Dispatches on scenario.kind.
AnalyticSolution solve(const StepScenario& scenario);

// --- fields and observables ---

/// |Psi|^2 at (x, t); region A for x <= vt, region B otherwise.
double density_field(const AnalyticSolution& sol, double x, double t);

/// Probability current density j at (x, t).
double current_field(const AnalyticSolution& sol, double x, double t);

/// Region-A reflectivity R(x, t); defined for x <= vt, finite step only.
/// Not clamped: the interference term can drive R negative near the boundary.
double reflectivity(const AnalyticSolution& sol, double x, double t);

/// The infinite step reflects everything; reported as a constant rather than
/// through reflectivity(), which rejects infinite-step solutions.
inline constexpr double kInfiniteStepReflectivity = 1.0;

/// Region-B transmissivity T(x, t); defined for x >= vt, finite step only.
/// Constant in case I, exponentially damped in case II. Not clamped.
double transmissivity(const AnalyticSolution& sol, double x, double t);

/// |R(vt,t) + T(vt,t) - 1|; contract: <= 1e-12 for every valid scenario.
double boundary_unitarity(const AnalyticSolution& sol);

/// j / |Psi|^2. Throws NodeSingularity when the density is below
/// node_eps_rel * peak density (0/0 at standing-wave nodes).
double group_velocity(const AnalyticSolution& sol, Region region, double x, double t,
                      double node_eps_rel = 1e-12);

}  // namespace mps
