#include "kslab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kslab::solver {

namespace {
constexpr double kLinearRelTol = 1e-12;
constexpr double kDtFloor = 1e-12;
}  // namespace

void SolverConfig::validate() const {
    if (!(dt_init > 0.0) || !(dt_max > 0.0) || dt_init > dt_max)
        throw std::invalid_argument("solver: require 0 < dt_init <= dt_max");
    if (!(cfl_safety > 0.0) || cfl_safety > 1.0)
        throw std::invalid_argument("solver: cfl_safety must lie in (0, 1]");
    if (!(t_end > 0.0)) throw std::invalid_argument("solver: t_end must be positive");
    if (output_stride < 1) throw std::invalid_argument("solver: output_stride must be >= 1");
    if (!(tol_conv > 0.0)) throw std::invalid_argument("solver: tol_conv must be positive");
    if (!(divergence_guard > 1.0))
        throw std::invalid_argument("solver: divergence_guard must exceed 1");
}

const char* status_name(RunStatus s) {
    switch (s) {
        case RunStatus::Converged: return "converged";
        case RunStatus::TEndReached: return "undecided";
        default: return "diverged";
    }
}

Field laplacian_neumann(const Field& f) {
    const Grid& g = f.grid;
    Field out(g);
    const int nx = g.n[0], ny = g.n[1];
    const double ihx2 = 1.0 / (g.h[0] * g.h[0]);
    const double ihy2 = g.dim == 2 ? 1.0 / (g.h[1] * g.h[1]) : 0.0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int c = g.index(i, j);
            // reflected ghosts: the missing neighbor collapses onto the cell
            const double fw = f[i > 0 ? c - 1 : c];
            const double fe = f[i + 1 < nx ? c + 1 : c];
            double lap = (fw - 2.0 * f[c] + fe) * ihx2;
            if (g.dim == 2) {
                const double fs = f[j > 0 ? c - nx : c];
                const double fn = f[j + 1 < ny ? c + nx : c];
                lap += (fs - 2.0 * f[c] + fn) * ihy2;
            }
            out[c] = lap;
        }
    }
    return out;
}

FaceData chemotactic_flux(const Field& u, const Field& v, double chi,
                          const model::SensitivitySpec& sensitivity, double a, double k) {
    const Grid& g = u.grid;
    if (!g.same_shape(v.grid)) throw std::invalid_argument("flux: u and v grids differ");
    const int nx = g.n[0], ny = g.n[1];
    FaceData fd;
    fd.speed_x.assign(static_cast<std::size_t>(nx + 1) * ny, 0.0);
    fd.flux_x.assign(fd.speed_x.size(), 0.0);
    if (g.dim == 2) {
        fd.speed_y.assign(static_cast<std::size_t>(nx) * (ny + 1), 0.0);
        fd.flux_y.assign(fd.speed_y.size(), 0.0);
    }
    if (chi == 0.0) return fd;

    auto face = [&](int cl, int cr, double ih) {
        const double vf = 0.5 * (v[cl] + v[cr]);
        if (a == 0.0 && vf <= 0.0)
            throw SolverError("singular sensitivity: nonpositive face value of v with a = 0");
        const double w = chi * model::eval_sensitivity(sensitivity, a, k, vf) *
                         (v[cr] - v[cl]) * ih;
        return w;
    };

    const double ihx = 1.0 / g.h[0];
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
            const int cl = g.index(i - 1, j), cr = g.index(i, j);
            const double w = face(cl, cr, ihx);
            const std::size_t fi = static_cast<std::size_t>(nx + 1) * j + i;
            fd.speed_x[fi] = w;
            fd.flux_x[fi] = w * (w > 0.0 ? u[cl] : u[cr]);
            fd.max_speed = std::max(fd.max_speed, std::abs(w));
        }
    if (g.dim == 2) {
        const double ihy = 1.0 / g.h[1];
        for (int j = 1; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const int cl = g.index(i, j - 1), cr = g.index(i, j);
                const double w = face(cl, cr, ihy);
                const std::size_t fi = static_cast<std::size_t>(nx) * j + i;
                fd.speed_y[fi] = w;
                fd.flux_y[fi] = w * (w > 0.0 ? u[cl] : u[cr]);
                fd.max_speed = std::max(fd.max_speed, std::abs(w));
            }
    }
    return fd;
}

double adaptive_dt(const State& state, const SolverConfig& cfg,
                   const model::ModelParams& params) {
    double dt = cfg.dt_max;
    const FaceData fd = chemotactic_flux(state.u, state.v, params.chi, params.sensitivity,
                                         params.a, params.k);
    if (fd.max_speed > 0.0)
        dt = std::min(dt, cfg.cfl_safety * state.u.grid.min_h() / fd.max_speed);
    if (!cfg.reaction_implicit)
        dt = std::min(dt, cfg.cfl_safety);  // unit decay rate of the explicit -v term
    if (dt < kDtFloor)
        throw DtUnderflowError("dt underflow: suspected blow-up or instability",
                               state.step, state.t);
    return dt;
}

namespace {

// Thomas algorithm for (c0 I - c1 Lap) on a 1-D Neumann stencil.
void solve_tridiag_neumann(const Grid& g, double c0, double c1,
                           const std::vector<double>& rhs, std::vector<double>& x) {
    const int n = g.n[0];
    const double w = c1 / (g.h[0] * g.h[0]);
    std::vector<double> diag(n), cp(n), dp(n);
    for (int i = 0; i < n; ++i) {
        const int nbrs = (i == 0 || i == n - 1) ? 1 : 2;
        diag[i] = c0 + nbrs * w;
    }
    const double off = -w;
    cp[0] = off / diag[0];
    dp[0] = rhs[0] / diag[0];
    for (int i = 1; i < n; ++i) {
        const double m = diag[i] - off * cp[i - 1];
        cp[i] = off / m;
        dp[i] = (rhs[i] - off * dp[i - 1]) / m;
    }
    x.resize(n);
    x[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
}

// Matrix-free (c0 I - c1 Lap) x for the 2-D Neumann stencil.
void apply_helmholtz(const Grid& g, double c0, double c1, const std::vector<double>& x,
                     std::vector<double>& out) {
    const int nx = g.n[0], ny = g.n[1];
    const double wx = c1 / (g.h[0] * g.h[0]);
    const double wy = c1 / (g.h[1] * g.h[1]);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int c = j * nx + i;
            double acc = c0 * x[c];
            acc += wx * (2.0 * x[c] - x[i > 0 ? c - 1 : c] - x[i + 1 < nx ? c + 1 : c]);
            acc += wy * (2.0 * x[c] - x[j > 0 ? c - nx : c] - x[j + 1 < ny ? c + nx : c]);
            out[c] = acc;
        }
}

// Sequential long-double dot: deterministic order, ~2^-64 rounding.
double dot(const std::vector<double>& a, const std::vector<double>& b) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += static_cast<long double>(a[i]) * b[i];
    return static_cast<double>(acc);
}

int solve_cg(const Grid& g, double c0, double c1, const std::vector<double>& rhs,
             std::vector<double>& x) {
    const std::size_t n = rhs.size();
    x = rhs;  // warm start: solution stays near rhs for small dt
    std::vector<double> r(n), p(n), ap(n);
    apply_helmholtz(g, c0, c1, x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];
    const double bb = dot(rhs, rhs);
    if (bb == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return 0;
    }
    double rr = dot(r, r);
    const double tol2 = kLinearRelTol * kLinearRelTol * bb;
    if (rr <= tol2) return 0;
    p = r;
    const int max_iters = static_cast<int>(20 * n) + 100;
    for (int it = 1; it <= max_iters; ++it) {
        apply_helmholtz(g, c0, c1, p, ap);
        const double pap = dot(p, ap);
        const double alpha = rr / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        const double rr_new = dot(r, r);
        if (rr_new <= tol2) return it;
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    throw SolverError("conjugate gradient failed to reach relative residual " +
                      std::to_string(kLinearRelTol));
}

}  // namespace

int solve_helmholtz_neumann(const Grid& grid, double c0, double c1,
                            const std::vector<double>& rhs, std::vector<double>& x) {
    if (grid.dim == 1) {
        solve_tridiag_neumann(grid, c0, c1, rhs, x);
        return 1;
    }
    return solve_cg(grid, c0, c1, rhs, x);
}

StepStats step(State& state, const SolverConfig& cfg, const model::ModelParams& params,
               double dt, double target_sum) {
    const Grid& g = state.u.grid;
    const int nx = g.n[0], ny = g.n[1];
    StepStats stats;

    const FaceData fd = chemotactic_flux(state.u, state.v, params.chi, params.sensitivity,
                                         params.a, params.k);

    // hard positivity bound for the donor-cell update: the per-cell outgoing
    // speed sum must satisfy dt * outflow_rate <= 1
    double max_outflow = 0.0;
    const double ihx = 1.0 / g.h[0];
    const double ihy = g.dim == 2 ? 1.0 / g.h[1] : 0.0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const std::size_t fw = static_cast<std::size_t>(nx + 1) * j + i;
            double rate = (std::max(fd.speed_x[fw + 1], 0.0) +
                           std::max(-fd.speed_x[fw], 0.0)) * ihx;
            if (g.dim == 2) {
                const std::size_t fs = static_cast<std::size_t>(nx) * j + i;
                rate += (std::max(fd.speed_y[fs + nx], 0.0) +
                         std::max(-fd.speed_y[fs], 0.0)) * ihy;
            }
            max_outflow = std::max(max_outflow, rate);
        }
    if (max_outflow > 0.0 && dt * max_outflow > 0.999) {
        dt = 0.9 / max_outflow;
        stats.cfl_reductions = 1;
        if (dt < kDtFloor)
            throw DtUnderflowError("dt underflow in positivity bound", state.step, state.t);
    }
    stats.dt_used = dt;

    // explicit drift divergence, flux form
    std::vector<double> ustar(state.u.values);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int c = g.index(i, j);
            const std::size_t fw = static_cast<std::size_t>(nx + 1) * j + i;
            double div = (fd.flux_x[fw + 1] - fd.flux_x[fw]) * ihx;
            if (g.dim == 2) {
                const std::size_t fs = static_cast<std::size_t>(nx) * j + i;
                div += (fd.flux_y[fs + nx] - fd.flux_y[fs]) * ihy;
            }
            ustar[c] -= dt * div;
        }

    // implicit diffusion on u
    std::vector<double> unew;
    stats.iters_u = solve_helmholtz_neumann(g, 1.0, dt, ustar, unew);

    // conservative re-target of the discrete sum (absorbs solver residue)
    const double correction = (target_sum - pairwise_sum(unew)) / g.cells();
    for (double& x : unew) x += correction;

    const double u_scale = std::max(1.0, sup_distance(state.u, 0.0));
    double umin = std::numeric_limits<double>::infinity();
    for (double x : unew) umin = std::min(umin, x);
    if (umin < -1e-10 * u_scale)
        throw SolverError("positivity of u violated: min = " + std::to_string(umin),
                          state.step, state.t);

    // v update; source from the fresh u by default
    const std::vector<double>& usrc = cfg.v_source_old_u ? state.u.values : unew;
    std::vector<double> rhs(state.v.values.size());
    std::vector<double> vnew;
    if (cfg.reaction_implicit) {
        for (std::size_t i = 0; i < rhs.size(); ++i)
            rhs[i] = state.v[i] + dt * usrc[i];
        stats.iters_v = solve_helmholtz_neumann(g, 1.0 + dt, dt, rhs, vnew);
    } else {
        for (std::size_t i = 0; i < rhs.size(); ++i)
            rhs[i] = state.v[i] + dt * (usrc[i] - state.v[i]);
        stats.iters_v = solve_helmholtz_neumann(g, 1.0, dt, rhs, vnew);
    }

    double vmin = std::numeric_limits<double>::infinity();
    for (double x : vnew) vmin = std::min(vmin, x);
    const double v_scale = std::max(1.0, sup_distance(state.v, 0.0));
    if (vmin < -1e-10 * v_scale)
        throw SolverError("positivity of v violated: min = " + std::to_string(vmin),
                          state.step, state.t);

    state.u.values = std::move(unew);
    state.v.values = std::move(vnew);
    if (!field_all_finite(state.u) || !field_all_finite(state.v))
        throw SolverError("non-finite field values after step", state.step, state.t);
    state.t += dt;
    state.step += 1;
    return stats;
}

}  // namespace kslab::solver
