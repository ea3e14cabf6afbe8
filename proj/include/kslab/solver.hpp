#pragma once

// Time integration of the discrete system with an IMEX finite-volume scheme:
// explicit donor-cell upwinding for the drift term under an advective CFL
// bound, implicit treatment of diffusion and of the -v + u reaction. Mass of
// u is conserved in flux form and pinned against linear-solver residue; u
// stays nonnegative and v strictly positive under the scheme's M-matrix
// structure.

#include <vector>

#include "kslab/model.hpp"

namespace kslab::solver {

struct SolverConfig {
    double dt_init = 1e-3;
    double dt_max = 1e-2;
    double cfl_safety = 0.45;       // in (0, 1]
    double t_end = 10.0;
    int output_stride = 1;
    double tol_conv = 1e-8;         // convergence on ||u - mean u0||_inf
    double divergence_guard = 1e3;  // x initial ||u||_inf
    bool reaction_implicit = true;  // -v + u treated implicitly (default)
    bool v_source_old_u = false;    // alternative ordering for refinement studies

    void validate() const;
};

struct State {
    double t = 0.0;
    Field u;
    Field v;
    long step = 0;
};

enum class RunStatus { Converged, TEndReached, Diverged };

const char* status_name(RunStatus s);

// Second-order 5-point (3-point in 1-D) stencil with reflected ghost cells;
// the cell sum of the output telescopes to zero.
Field laplacian_neumann(const Field& f);

// Face speeds w = chi S(v_face) grad v (arithmetic face average, two-point
// gradient) and donor-cell fluxes w * u_upwind. Boundary faces carry zero.
struct FaceData {
    // x faces indexed (nx+1)*j + i, i in [0,nx]; y faces nx*j + i, j in [0,ny]
    std::vector<double> speed_x, flux_x;
    std::vector<double> speed_y, flux_y;
    double max_speed = 0.0;
};

FaceData chemotactic_flux(const Field& u, const Field& v, double chi,
                          const model::SensitivitySpec& sensitivity, double a, double k);

// dt = min(dt_max, cfl_safety * h_min / max_face_speed, explicit reaction
// scale when enabled). Throws DtUnderflowError below 1e-12.
double adaptive_dt(const State& state, const SolverConfig& cfg,
                   const model::ModelParams& params);

// Solves (c0 I - c1 Lap) x = rhs on the grid: direct tridiagonal in 1-D,
// conjugate gradient (relative residual 1e-12) in 2-D. Returns iterations.
int solve_helmholtz_neumann(const Grid& grid, double c0, double c1,
                            const std::vector<double>& rhs, std::vector<double>& x);

struct StepStats {
    double dt_used = 0.0;
    int cfl_reductions = 0;
    int iters_u = 0;
    int iters_v = 0;
};

// One IMEX step: explicit upwind drift divergence on u, implicit diffusion
// solve, conservative re-target of the discrete u sum to target_sum, then the
// v update sourced by the fresh u (or the old one when cfg.v_source_old_u).
// Positivity is enforced; violations beyond solver tolerance are hard errors.
StepStats step(State& state, const SolverConfig& cfg, const model::ModelParams& params,
               double dt, double target_sum);

}  // namespace kslab::solver
