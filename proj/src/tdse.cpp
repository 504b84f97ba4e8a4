#include "mps/tdse.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mps::tdse {

namespace {

// The sharply sampled moving step radiates broadband numerical noise with
// amplitude that saturates near 2e-4 at the grid edges regardless of dx and
// dt; the threshold sits above that floor but far below any real packet tail.
constexpr double kEdgeAmplitudeLimit = 1e-3;

// One Crank-Nicolson step on psi[first, last) with Dirichlet zeros just
// outside the range. V holds the potential sampled at the half-step time.
// (1 + i dt H / 2hbar) psi' = (1 - i dt H / 2hbar) psi, H tridiagonal.
class CrankNicolson {
public:
    CrankNicolson(int n, double dx, double dt, const PhysicalContext& ctx)
        : r_(ctx.hbar * dt / (4.0 * ctx.mass * dx * dx)),
          half_dt_over_hbar_(dt / (2.0 * ctx.hbar)),
          diag_(n), rhs_(n), scratch_(n) {}

    void step(std::vector<Complex>& psi, const std::vector<double>& V, int first, int last) {
        const Complex ir(0.0, r_);
        for (int i = first; i < last; ++i) {
            const double h = 2.0 * r_ + half_dt_over_hbar_ * V[i];
            diag_[i] = Complex(1.0, h);
            const Complex left = (i > first) ? psi[i - 1] : Complex(0.0);
            const Complex right = (i + 1 < last) ? psi[i + 1] : Complex(0.0);
            rhs_[i] = Complex(1.0, -h) * psi[i] + ir * (left + right);
        }
        // Thomas elimination with constant off-diagonal -i r.
        const Complex off(0.0, -r_);
        scratch_[first] = off / diag_[first];
        rhs_[first] /= diag_[first];
        for (int i = first + 1; i < last; ++i) {
            const Complex denom = diag_[i] - off * scratch_[i - 1];
            scratch_[i] = off / denom;
            rhs_[i] = (rhs_[i] - off * rhs_[i - 1]) / denom;
        }
        psi[last - 1] = rhs_[last - 1];
        for (int i = last - 2; i >= first; --i) psi[i] = rhs_[i] - scratch_[i] * psi[i + 1];
    }

private:
    double r_;
    double half_dt_over_hbar_;
    std::vector<Complex> diag_, rhs_, scratch_;
};

void check_edges(const GridState& s) {
    const int n = s.grid.n_points;
    for (int i : {0, 1, 2, n - 3, n - 2, n - 1}) {
        if (std::abs(s.psi[i]) > kEdgeAmplitudeLimit)
            throw BoundaryContamination("wave packet reached the grid edge");
    }
}

// Free evolution of an already-boosted comoving state with a Dirichlet wall at
// the origin (psi pinned to zero for x >= 0).
void wall_step_comoving(GridState& s, const PhysicalContext& ctx, double dt, int n_steps) {
    const int n = s.grid.n_points;
    int i_wall = n;
    for (int i = 0; i < n; ++i) {
        if (s.grid.x(i) >= 0.0) { i_wall = i; break; }
    }
    for (int i = i_wall; i < n; ++i) {
        if (std::abs(s.psi[i]) > kEdgeAmplitudeLimit)
            throw BoundaryContamination("amplitude behind the hard wall");
        s.psi[i] = 0.0;
    }
    const std::vector<double> V(n, 0.0);
    CrankNicolson cn(n, s.grid.dx(), dt, ctx);
    for (int step = 0; step < n_steps; ++step) {
        cn.step(s.psi, V, 0, i_wall);
        s.t += dt;
        if ((step + 1) % 1000 == 0) check_edges(s);
    }
    check_edges(s);
}

CheckEntry make_entry(std::string name, double predicted, double measured, double tolerance,
                      bool relative) {
    const double bound = relative ? tolerance * std::abs(predicted) : tolerance;
    return {std::move(name), predicted, measured, tolerance, relative,
            std::abs(measured - predicted) <= bound};
}

// Parabolic refinement of a discrete local minimum.
double refine_min(const Grid& g, int i, double ym, double y0, double yp) {
    const double denom = ym - 2.0 * y0 + yp;
    const double offset = denom > 0.0 ? 0.5 * (ym - yp) / denom : 0.0;
    return g.x(i) + offset * g.dx();
}

// Spacing between standing-wave nodes left of the comoving wall, averaged over
// the first few interior minima.
std::optional<double> node_spacing_near_wall(const GridState& s, double scan_width) {
    const int n = s.grid.n_points;
    int i_wall = n - 1;
    for (int i = 0; i < n; ++i) {
        if (s.grid.x(i) >= 0.0) { i_wall = i; break; }
    }
    std::vector<double> density(n);
    for (int i = 0; i < n; ++i) density[i] = std::norm(s.psi[i]);
    const double peak = *std::max_element(density.begin(), density.begin() + i_wall);

    std::vector<double> minima;
    for (int i = i_wall - 2; i > 1 && s.grid.x(i) > -scan_width; --i) {
        if (density[i] < density[i - 1] && density[i] <= density[i + 1] &&
            density[i] < 0.05 * peak) {
            minima.push_back(refine_min(s.grid, i, density[i - 1], density[i], density[i + 1]));
        }
    }
    if (minima.size() < 2) return std::nullopt;
    double total = 0.0;
    for (size_t i = 1; i < minima.size(); ++i) total += minima[i - 1] - minima[i];
    return total / static_cast<double>(minima.size() - 1);
}

struct Timeline {
    double t_contact;
    double t_end;
    double x_reflected_end;
    double x_transmitted_end;
};

Timeline plan_timeline(const AnalyticSolution& sol, const PacketSpec& packet) {
    const auto& ctx = sol.scenario.context;
    const double vg1 = ctx.hbar * sol.scenario.k1 / ctx.mass;
    const double vg2 = ctx.hbar * sol.reflected.wavenumber.real() / ctx.mass;
    const double t_contact = -packet.x0 / (vg1 - ctx.v);
    double rate = ctx.v - vg2;  // reflected separation speed, > 0
    double vgt = 0.0;
    const bool transmits = sol.regime.tag == RegimeTag::CaseI && sol.transmitted.has_value();
    if (transmits) {
        vgt = ctx.hbar * sol.transmitted->wavenumber.real() / ctx.mass;
        rate = std::min(rate, vgt - ctx.v);
    }
    const double t_end = t_contact + 6.0 * packet.sigma_x / rate;
    Timeline tl;
    tl.t_contact = t_contact;
    tl.t_end = t_end;
    tl.x_reflected_end = ctx.v * t_contact + vg2 * (t_end - t_contact);
    tl.x_transmitted_end =
        transmits ? ctx.v * t_contact + vgt * (t_end - t_contact) : ctx.v * t_end;
    return tl;
}

double pick_dt(const RunParams& params, double dx, const PhysicalContext& ctx, double k_max) {
    if (params.dt) return *params.dt;
    double dt = dx * ctx.mass / (4.0 * ctx.hbar * k_max);
    if (ctx.v > 0.0) dt = std::min(dt, dx / (4.0 * ctx.v));  // boundary never skips a cell
    return dt;
}

}  // namespace

void Grid::validate() const {
    if (n_points < 16) throw std::invalid_argument("grid needs at least 16 points");
    if (!(x_min < x_max)) throw std::invalid_argument("grid requires x_min < x_max");
}

double GridState::norm() const {
    double s = 0.0;
    for (const Complex& c : psi) s += std::norm(c);
    return s * grid.dx();
}

GridState gaussian_packet(const Grid& grid, const PacketSpec& spec) {
    grid.validate();
    if (!(spec.sigma_x > 0.0)) throw std::invalid_argument("sigma_x must be > 0");
    if (spec.x0 - 5.0 * spec.sigma_x < grid.x_min || spec.x0 + 5.0 * spec.sigma_x > grid.x_max)
        throw std::invalid_argument("packet does not fit: x0 +- 5 sigma_x exceeds the grid");

    GridState state{grid, 0.0, std::vector<Complex>(grid.n_points)};
    for (int i = 0; i < grid.n_points; ++i) {
        const double x = grid.x(i);
        const double arg = (x - spec.x0) / (2.0 * spec.sigma_x);
        state.psi[i] = std::polar(std::exp(-arg * arg), spec.k0 * x);
    }
    const double scale = 1.0 / std::sqrt(state.norm());
    for (Complex& c : state.psi) c *= scale;

    if (std::abs(state.psi.front()) > 1e-10 || std::abs(state.psi.back()) > 1e-10)
        throw std::invalid_argument("packet tail clipped by the grid edge");
    return state;
}

std::vector<double> step_potential(const Grid& grid, double t, const PhysicalContext& ctx,
                                   StepKind kind) {
    if (kind == StepKind::InfiniteStep)
        throw std::invalid_argument("step_potential: use hard_wall_comoving for the infinite step");
    ctx.validate();
    std::vector<double> V(grid.n_points, 0.0);
    const double boundary = ctx.v * t;
    for (int i = 0; i < grid.n_points; ++i)
        if (grid.x(i) > boundary) V[i] = ctx.V0;
    return V;
}

void propagate(GridState& state, const PhysicalContext& ctx, StepKind kind, double dt,
               int n_steps) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    if (kind == StepKind::InfiniteStep)
        throw std::invalid_argument("propagate: use hard_wall_comoving for the infinite step");
    const int n = state.grid.n_points;
    CrankNicolson cn(n, state.grid.dx(), dt, ctx);
    for (int step = 0; step < n_steps; ++step) {
        const auto V = step_potential(state.grid, state.t + 0.5 * dt, ctx, kind);
        cn.step(state.psi, V, 0, n);
        state.t += dt;
        if ((step + 1) % 1000 == 0) check_edges(state);
    }
    check_edges(state);
}

void galilean_boost(GridState& state, const PhysicalContext& ctx, BoostDirection dir) {
    const double sign = dir == BoostDirection::ToComoving ? -1.0 : 1.0;
    const double mv = ctx.mass * ctx.v;
    const double time_term = 0.5 * mv * ctx.v * state.t;
    for (int i = 0; i < state.grid.n_points; ++i) {
        const double phase = sign * (mv * state.grid.x(i) - time_term) / ctx.hbar;
        state.psi[i] *= std::polar(1.0, phase);
    }
}

void hard_wall_comoving(GridState& state, const PhysicalContext& ctx, double dt, int n_steps) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    const double t0 = state.t;
    galilean_boost(state, ctx, BoostDirection::ToComoving);
    state.grid.x_min -= ctx.v * t0;  // relabel to comoving coordinates
    state.grid.x_max -= ctx.v * t0;
    wall_step_comoving(state, ctx, dt, n_steps);
    state.grid.x_min += ctx.v * state.t;  // back to lab coordinates
    state.grid.x_max += ctx.v * state.t;
    galilean_boost(state, ctx, BoostDirection::ToLab);
}

SplitNorms measure_split_norms(const GridState& state, double boundary_x) {
    double left = 0.0, right = 0.0;
    for (int i = 0; i < state.grid.n_points; ++i) {
        const double d = std::norm(state.psi[i]);
        (state.grid.x(i) <= boundary_x ? left : right) += d;
    }
    const double dx = state.grid.dx();
    return {left * dx, right * dx};
}

double mean_momentum(const GridState& state, const std::function<bool(double)>& mask) {
    const int n = state.grid.n_points;
    const double dx = state.grid.dx();
    double norm = 0.0, num = 0.0;
    for (int i = 2; i < n - 2; ++i) {
        if (!mask(state.grid.x(i))) continue;
        norm += std::norm(state.psi[i]);
        // 4th-order first derivative; psi* (-i d/dx) psi contributes Im(psi* psi').
        const Complex dpsi = (-state.psi[i + 2] + 8.0 * state.psi[i + 1] -
                              8.0 * state.psi[i - 1] + state.psi[i - 2]) / (12.0 * dx);
        num += std::imag(std::conj(state.psi[i]) * dpsi);
    }
    norm *= dx;
    if (norm < 1e-6) throw InsufficientNorm("mean_momentum: masked norm below 1e-6");
    return num * dx / norm;
}

double fit_evanescent_tail(const GridState& state, const PhysicalContext& ctx, double x_lo,
                           double x_hi) {
    (void)ctx;
    const int n = state.grid.n_points;
    double peak = 0.0;
    for (int i = 0; i < n; ++i) peak = std::max(peak, std::norm(state.psi[i]));

    std::vector<double> xs, ys;
    for (int i = 0; i < n; ++i) {
        const double x = state.grid.x(i);
        if (x < x_lo || x > x_hi) continue;
        const double d = std::norm(state.psi[i]);
        if (d <= 1e-12 * peak) continue;
        xs.push_back(x);
        ys.push_back(std::log(d));
    }
    if (xs.size() < 4)
        throw InsufficientNorm("fit_evanescent_tail: too little density in the window");

    const double m = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

bool ValidationReport::all_pass() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const CheckEntry& e) { return e.pass; });
}

namespace {

ValidationReport validate_finite(const StepScenario& scenario, const PacketSpec& packet,
                                 const RunParams& params) {
    const AnalyticSolution sol = solve_finite_step(scenario);
    const auto& ctx = scenario.context;
    const double k2 = sol.reflected.wavenumber.real();
    const Complex k3 = sol.transmitted->wavenumber;
    const double ba = sol.ratios->b_over_a;

    ValidationReport report;
    report.scenario = scenario;
    report.predicted_k2 = k2;
    report.predicted_k3 = k3;
    report.predicted_b_over_a = ba;
    report.predicted_c_over_a = sol.ratios->c_over_a;
    report.R_boundary = reflectivity(sol, 0.0, 0.0);
    report.T_boundary = transmissivity(sol, 0.0, 0.0);
    report.packet_R = ba * ba;
    report.packet_T = 1.0 - ba * ba;

    const Timeline tl = plan_timeline(sol, packet);
    const double t_end = params.t_final.value_or(tl.t_end);
    Grid grid;
    grid.n_points = params.n_points;
    grid.x_min = params.x_min.value_or(std::min(packet.x0, tl.x_reflected_end) -
                                       12.0 * packet.sigma_x);
    grid.x_max = params.x_max.value_or(
        std::max(ctx.v * t_end, tl.x_transmitted_end) + 12.0 * packet.sigma_x);

    const double k_max = std::max({scenario.k1, std::abs(k2), std::abs(k3)}) +
                         3.0 * packet.sigma_k();
    const double dt = pick_dt(params, grid.dx(), ctx, k_max);
    const int n_steps = static_cast<int>(std::ceil(t_end / dt));

    GridState state = gaussian_packet(grid, packet);
    CrankNicolson cn(grid.n_points, grid.dx(), dt, ctx);

    const bool evanescent = sol.regime.tag == RegimeTag::CaseII;
    const double beta = k3.imag();
    double best_contact = 0.0;
    double tail_slope = 0.0;
    bool have_slope = false;

    const int chunk = params.snapshot_every > 0 ? params.snapshot_every : 200;
    int done = 0;
    while (done < n_steps) {
        const int burst = std::min(chunk, n_steps - done);
        for (int s = 0; s < burst; ++s) {
            const auto V = step_potential(grid, state.t + 0.5 * dt, ctx, StepKind::FiniteStep);
            cn.step(state.psi, V, 0, grid.n_points);
            state.t += dt;
        }
        done += burst;
        check_edges(state);
        if (params.snapshot && params.snapshot_every > 0)
            params.snapshot(state, step_potential(grid, state.t, ctx, StepKind::FiniteStep));

        if (evanescent) {
            // Track the moment of maximal barrier contact and fit the tail there.
            const double boundary = ctx.v * state.t;
            const int ib = std::clamp(
                static_cast<int>(std::round((boundary - grid.x_min) / grid.dx())), 0,
                grid.n_points - 1);
            const double contact = std::norm(state.psi[ib]);
            if (contact > best_contact) {
                best_contact = contact;
                try {
                    tail_slope = fit_evanescent_tail(
                        state, ctx, boundary + 2.0 * grid.dx(),
                        boundary + 2.0 * grid.dx() + 3.0 / beta);
                    have_slope = true;
                } catch (const InsufficientNorm&) {
                }
            }
        }
    }

    const double boundary = ctx.v * state.t;
    const auto split = measure_split_norms(state, boundary);
    const double total = split.left + split.right;
    report.norm_drift = std::abs(total - 1.0);

    const double reflected_k =
        mean_momentum(state, [boundary](double x) { return x <= boundary; });

    auto& e = report.entries;
    e.push_back(make_entry("reflected_mean_k", k2, reflected_k, 0.02, true));
    switch (sol.regime.tag) {
        case RegimeTag::CaseI: {
            const double transmitted_k =
                mean_momentum(state, [boundary](double x) { return x > boundary; });
            e.push_back(make_entry("transmitted_mean_k", k3.real(), transmitted_k, 0.02, true));
            e.push_back(make_entry("reflected_norm", ba * ba, split.left, 0.01, false));
            e.push_back(make_entry("transmitted_norm", 1.0 - ba * ba, split.right, 0.01, false));
            break;
        }
        case RegimeTag::CaseII: {
            e.push_back(make_entry("transmitted_norm", 0.0, split.right, 1e-3, false));
            e.push_back(make_entry("tail_slope", -2.0 * beta,
                                   have_slope ? tail_slope : 0.0, 0.10, true));
            break;
        }
        default:
            // Critical regime: packet averaging across the branch point is not
            // covered by the closed form; only momentum map and norm are checked.
            break;
    }
    e.push_back(make_entry("norm_drift", 0.0, report.norm_drift, 1e-6, false));
    return report;
}

ValidationReport validate_infinite(const StepScenario& scenario, const PacketSpec& packet,
                                   const RunParams& params) {
    const AnalyticSolution sol = solve_infinite_step(scenario);
    const auto& ctx = scenario.context;
    const double u = ctx.drift();
    const double k2 = sol.reflected.wavenumber.real();

    ValidationReport report;
    report.scenario = scenario;
    report.predicted_k2 = k2;
    report.R_boundary = kInfiniteStepReflectivity;
    report.T_boundary = 0.0;
    report.packet_R = 1.0;
    report.packet_T = 0.0;

    // Entire run happens in the comoving frame: static wall at the origin,
    // incident comoving wavenumber k1 - u.
    const double v_rel = ctx.hbar * (scenario.k1 - u) / ctx.mass;
    const double t_contact = -packet.x0 / v_rel;
    const double t_end = params.t_final.value_or(t_contact + 6.0 * packet.sigma_x / v_rel);

    Grid grid;
    grid.n_points = params.n_points;
    grid.x_min = params.x_min.value_or(packet.x0 - 12.0 * packet.sigma_x);
    grid.x_max =
        params.x_max.value_or(std::max(2.0 * packet.sigma_x, packet.x0 + 12.0 * packet.sigma_x));

    const double k_max = scenario.k1 + 3.0 * packet.sigma_k();
    const double dt = pick_dt(params, grid.dx(), ctx, k_max);
    const int n_steps = static_cast<int>(std::ceil(t_end / dt));

    GridState state = gaussian_packet(grid, packet);
    galilean_boost(state, ctx, BoostDirection::ToComoving);

    const double spacing_pred = std::numbers::pi / (scenario.k1 - u);
    const double antinode = -0.5 * spacing_pred;
    double best_contact = 0.0;
    double node_spacing = 0.0;
    bool have_spacing = false;

    const int chunk = params.snapshot_every > 0 ? params.snapshot_every : 200;
    int done = 0;
    while (done < n_steps) {
        const int burst = std::min(chunk, n_steps - done);
        wall_step_comoving(state, ctx, dt, burst);
        done += burst;
        if (params.snapshot && params.snapshot_every > 0)
            params.snapshot(state, std::vector<double>(grid.n_points, 0.0));

        const int ia = std::clamp(
            static_cast<int>(std::round((antinode - grid.x_min) / grid.dx())), 0,
            grid.n_points - 1);
        const double contact = std::norm(state.psi[ia]);
        if (contact > best_contact) {
            best_contact = contact;
            if (auto spacing = node_spacing_near_wall(state, 4.0 * spacing_pred)) {
                node_spacing = *spacing;
                have_spacing = true;
            }
        }
    }

    report.norm_drift = std::abs(state.norm() - 1.0);
    const double comoving_k = mean_momentum(state, [](double) { return true; });
    const double reflected_k_lab = comoving_k + u;

    auto& e = report.entries;
    e.push_back(make_entry("reflected_mean_k", k2, reflected_k_lab, 0.02, true));
    if (have_spacing)
        e.push_back(make_entry("node_spacing", spacing_pred, node_spacing, grid.dx(), false));
    else
        e.push_back({"node_spacing", spacing_pred, 0.0, grid.dx(), false, false});
    e.push_back(make_entry("norm_drift", 0.0, report.norm_drift, 1e-6, false));
    return report;
}

}  // namespace

ValidationReport validate_scenario(const StepScenario& scenario, const PacketSpec& packet,
                                   const RunParams& params) {
    const Regime regime = classify_regime(scenario);
    if (regime.tag == RegimeTag::NoCollision)
        throw std::invalid_argument("validate_scenario: k1 <= m v / hbar, no collision");
    if (!(packet.x0 + 5.0 * packet.sigma_x < 0.0))
        throw std::invalid_argument("validate_scenario: packet must start in region A");
    if (scenario.kind == StepKind::InfiniteStep)
        return validate_infinite(scenario, packet, params);
    return validate_finite(scenario, packet, params);
}

}  // namespace mps::tdse
