#include "kslab/run.hpp"

#include <algorithm>
#include <cmath>

#include "kslab/theory.hpp"

namespace kslab::solver {

namespace {

// Weight parameters for the int u^p phi(v) column. Prefers the certified
// (p, eps) pair at chi0 = chi; falls back to a fixed interior choice when the
// pair is infeasible (chi at or above the threshold) or eta is unavailable.
// The fallback r is pinned to the threshold scale so the weight stays
// evaluable even when chi itself is far beyond it.
void pick_lp_weight(const model::ModelParams& params, double eta, double& p, double& r) {
    p = std::max(1.5, 0.75 * params.dim_n);
    double chi_ref = std::clamp(params.chi, 1e-6, 1e6);
    if (eta > 0.0) {
        const double cap = theory::chi_star(params.a, params.k, params.dim_n, eta);
        if (params.chi > 0.0 && params.chi < cap) {
            try {
                const auto pe = theory::find_admissible_pe(params.chi, params.a, params.k,
                                                           params.dim_n, eta);
                p = pe.p;
                r = pe.r;
                return;
            } catch (const InfeasibleError&) {
            }
        }
        chi_ref = std::min(chi_ref, 0.999 * cap);
    }
    r = std::min(theory::r_coefficient(p, 0.5, chi_ref), 1.0);
}

}  // namespace

RunResult run(const model::ModelParams& params, const Grid& grid,
              const model::InitialData& init, const SolverConfig& cfg,
              const diag::DiagnosticsConfig& dcfg) {
    params.validate();
    cfg.validate();

    RunResult res;
    res.mass = init.mass;
    res.u0_mean = init.mass / grid.volume();
    res.v_star = init.v_star;

    State state;
    state.u = init.u0;
    state.v = init.v0;
    const double target_sum = pairwise_sum(init.u0.values);
    const double sup_u0 = sup_distance(init.u0, 0.0);
    const double min_v0 = init.v_star;

    const std::array<double, 2> lens{grid.length[0], grid.length[1]};
    const double C_P =
        theory::poincare_constant(std::span<const double>(lens.data(), grid.dim));
    const double K1 = dcfg.K1_override.value_or(1.0 / (2.0 * grid.volume()));
    const double K5 = dcfg.K5_override.value_or(2.0 / grid.volume());

    // Lyapunov weight for the F column; interior fallback when the bracket is
    // empty (chi too large) or degenerate (chi = 0).
    try {
        const auto kc = diag::choose_K(params.chi, params.a, params.k, init.mass, K1, K5, C_P);
        res.K_used = kc.K > 0.0 ? kc.K : std::min(1.0, 0.5 * kc.upper);
    } catch (const BracketError&) {
        res.K_used = std::min(1.0, 0.5 / C_P);
    }

    double eta_run = 0.0;
    if (init.v_star > 0.0)
        eta_run = theory::eta_lower_bound(dcfg.c0, init.mass, init.v_star);
    pick_lp_weight(params, eta_run, res.lp_p, res.lp_r);

    Field prev_u = state.u, prev_v = state.v;
    double last_dt = 0.0;

    auto make_record = [&](bool first) {
        diag::DiagRecord rec;
        rec.t = state.t;
        rec.mass = field_mass(state.u);
        rec.min_v = field_min(state.v);
        rec.max_u = field_max(state.u);
        rec.sup_u_dist = sup_distance(state.u, res.u0_mean);
        rec.sup_v_dist = sup_distance(state.v, res.u0_mean);
        rec.l2_u_dist = l2_distance(state.u, res.u0_mean);
        rec.l2_v_dist = l2_distance(state.v, res.u0_mean);
        rec.F = diag::lyapunov_F(state.u, state.v, res.u0_mean, res.K_used);
        rec.K_used = res.K_used;
        try {
            rec.lp_weighted =
                diag::weighted_lp(state.u, state.v, res.lp_p, res.lp_r, params.a, params.k);
        } catch (const SaturationError& e) {
            throw SolverError(std::string("weight saturation while recording: ") + e.what(),
                              state.step, state.t);
        }
        rec.uSv_sup = diag::usv_sup(state.u, state.v, params.sensitivity, params.a, params.k);
        if (!first) {
            rec.lemma32_residual = diag::residual_v_energy(prev_u, state.u, prev_v, state.v,
                                                           last_dt, res.u0_mean);
            rec.lemma31_residual =
                diag::residual_u_energy(prev_u, state.u, prev_v, state.v, last_dt,
                                        res.u0_mean, params.chi, params.a, params.k, K1, K5,
                                        res.mass);
        }
        res.records.push_back(rec);
        res.max_mass_drift =
            std::max(res.max_mass_drift, std::abs(rec.mass - res.mass) / res.mass);
    };

    make_record(true);

    bool done = false;
    while (!done) {
        if (state.t + 1e-12 >= cfg.t_end) {
            res.status = RunStatus::TEndReached;
            break;
        }
        double dt;
        try {
            dt = adaptive_dt(state, cfg, params);
        } catch (const DtUnderflowError& e) {
            res.status = RunStatus::Diverged;
            res.note = e.what();
            break;
        }
        dt = std::min(dt, cfg.t_end - state.t);
        if (state.step == 0) dt = std::min(dt, cfg.dt_init);

        prev_u = state.u;
        prev_v = state.v;
        const StepStats st = step(state, cfg, params, dt, target_sum);
        last_dt = st.dt_used;

        // discrete comparison bound: min v decays no faster than e^{-t} under
        // the implicit reaction treatment
        if (cfg.reaction_implicit) {
            const double bound = std::exp(-state.t) * min_v0;
            if (field_min(state.v) < bound - 1e-10 * std::max(1.0, min_v0))
                throw SolverError("v fell below its comparison bound", state.step, state.t);
        }

        bool record_now = (state.step % cfg.output_stride == 0);
        const double sup_u = sup_distance(state.u, res.u0_mean);
        if (sup_u < cfg.tol_conv) {
            res.status = RunStatus::Converged;
            done = true;
            record_now = true;
        } else if (sup_distance(state.u, 0.0) > cfg.divergence_guard * sup_u0) {
            res.status = RunStatus::Diverged;
            res.note = "divergence guard tripped";
            done = true;
            record_now = true;
        } else if (state.t + 1e-12 >= cfg.t_end) {
            res.status = RunStatus::TEndReached;
            done = true;
            record_now = true;
        }
        if (record_now) make_record(false);
    }

    res.t_final = state.t;
    res.steps = state.step;
    return res;
}

}  // namespace kslab::solver
