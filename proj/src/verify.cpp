#include "kslab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "kslab/run.hpp"

namespace kslab::cli {

PhiBatteryResult phi_identity_battery(int n_tuples, std::uint64_t seed) {
    PhiBatteryResult res;
    res.residuals_ok = true;
    res.richardson_ok = true;
    res.worst_ratio_low = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> us(0.1, 10.0), ur(0.1, 3.0), ua(0.0, 2.0),
        uk(1.2, 3.0);
    for (int i = 0; i < n_tuples; ++i) {
        const double s = us(rng), r = ur(rng), a = ua(rng), k = uk(rng);
        const double res5 = theory::phi_identity_residual(s, r, a, k, 1e-5);
        res.worst_residual = std::max(res.worst_residual, res5);
        if (!(res5 < 1e-6)) res.residuals_ok = false;
        // second-order decay, measured where truncation dominates roundoff
        const double h = 1e-3;
        const double r1 = theory::phi_identity_residual(s, r, a, k, h);
        const double r2 = theory::phi_identity_residual(s, r, a, k, 0.5 * h);
        if (r1 >= 1e-8 && r2 > 0.0) {
            ++res.richardson_eligible;
            const double ratio = r1 / r2;
            res.worst_ratio_low = std::min(res.worst_ratio_low, ratio);
            res.worst_ratio_high = std::max(res.worst_ratio_high, ratio);
            if (ratio < 2.0 || ratio > 8.0) res.richardson_ok = false;
        }
        ++res.tuples;
    }
    if (res.richardson_eligible == 0) res.richardson_ok = false;
    return res;
}

namespace {

using solver::RunResult;

std::string fmt(double x) {
    std::ostringstream ss;
    ss << x;
    return ss.str();
}

double worst_positive_v_residual(const RunResult& res) {
    double worst = 0.0;
    for (std::size_t i = 1; i < res.records.size(); ++i)
        worst = std::max(worst, res.records[i].lemma32_residual);
    return worst;
}

}  // namespace

std::vector<PropertyResult> run_verify_battery(const RunConfig& cfg) {
    std::vector<PropertyResult> out;
    auto add = [&](const std::string& name, PropertyOutcome oc, const std::string& detail) {
        out.push_back({name, oc, detail});
    };
    auto pass_fail = [](bool ok) {
        return ok ? PropertyOutcome::Pass : PropertyOutcome::Fail;
    };

    // 1. weight-derivative identity
    {
        const auto phi = phi_identity_battery(100, 0x5eed);
        add("phi_identity", pass_fail(phi.residuals_ok && phi.richardson_ok),
            "worst residual " + fmt(phi.worst_residual) + ", ratio range [" +
                fmt(phi.worst_ratio_low) + ", " + fmt(phi.worst_ratio_high) + "]");
    }

    // initial data once; several properties share the short run
    model::InitialData init;
    try {
        init = model::build_initial_data(cfg.grid, cfg.u0, cfg.v0);
    } catch (const std::exception& e) {
        add("initial_data", PropertyOutcome::Fail, e.what());
        return out;
    }

    // 2. H certification at half the threshold
    {
        const double eta_t = init.v_star > 0.0 ? init.v_star : 1.0;
        try {
            const double cap = theory::chi_star(cfg.model.a, cfg.model.k, cfg.model.dim_n, eta_t);
            theory::AdmissiblePE pe;
            try {
                pe = theory::find_admissible_pe(0.5 * cap, cfg.model.a, cfg.model.k,
                                                cfg.model.dim_n, eta_t);
            } catch (const InfeasibleError&) {
                pe = theory::find_admissible_pe(0.5 * cap, cfg.model.a, cfg.model.k,
                                                cfg.model.dim_n, eta_t, 4);
            }
            const auto cert = theory::certify_H_nonpositive(
                pe, pe.chi0, cfg.model.a, cfg.model.k, cfg.model.sensitivity, eta_t,
                1e3 * eta_t, 2000);
            add("H_certification", pass_fail(cert.passed),
                "max H = " + fmt(cert.max_H) + " at s = " + fmt(cert.worst_s));
        } catch (const std::exception& e) {
            add("H_certification", PropertyOutcome::Fail, e.what());
        }
    }

    // short run shared by the remaining properties
    solver::SolverConfig short_cfg = cfg.solver_cfg;
    short_cfg.t_end = std::min(short_cfg.t_end, 2.0);
    short_cfg.output_stride = 1;
    RunResult run_res;
    try {
        run_res = solver::run(cfg.model, cfg.grid, init, short_cfg, cfg.diag_cfg);
    } catch (const std::exception& e) {
        add("short_run", PropertyOutcome::Fail, e.what());
        return out;
    }

    // 3. mass conservation across every emitted record
    add("mass_conservation", pass_fail(run_res.max_mass_drift <= 1e-10),
        "max relative drift " + fmt(run_res.max_mass_drift));

    // 4. comparison bound for min v
    {
        bool ok = true;
        double worst = 0.0;
        for (const auto& rec : run_res.records) {
            const double bound = std::exp(-rec.t) * init.v_star;
            const double slack = rec.min_v - bound;
            worst = std::min(worst, slack);
            if (slack < -1e-10 * std::max(1.0, init.v_star)) ok = false;
        }
        add("v_lower_bound", pass_fail(ok), "worst slack " + fmt(worst));
    }

    // 5. v-energy residual refinement at two resolutions; the tolerance model
    // was calibrated in the converging regime, so diverged runs are skipped
    if (run_res.status == solver::RunStatus::Diverged) {
        add("v_energy_residual_refinement", PropertyOutcome::Skip,
            "short run diverged; tolerance model inapplicable");
    } else try {
        solver::SolverConfig base_cfg = short_cfg;
        base_cfg.t_end = std::min(base_cfg.t_end, 1.0);
        const RunResult base = solver::run(cfg.model, cfg.grid, init, base_cfg, cfg.diag_cfg);

        Grid fine_grid = cfg.grid.dim == 1
                             ? Grid::interval(2 * cfg.grid.n[0], cfg.grid.length[0])
                             : Grid::rectangle(2 * cfg.grid.n[0], 2 * cfg.grid.n[1],
                                               cfg.grid.length[0], cfg.grid.length[1]);
        const auto fine_init = model::build_initial_data(fine_grid, cfg.u0, cfg.v0);
        solver::SolverConfig fine_cfg = base_cfg;
        fine_cfg.dt_max = 0.5 * base_cfg.dt_max;
        fine_cfg.dt_init = 0.5 * base_cfg.dt_init;
        const RunResult fine = solver::run(cfg.model, fine_grid, fine_init, fine_cfg,
                                           cfg.diag_cfg);

        const double exc_base = worst_positive_v_residual(base);
        const double exc_fine = worst_positive_v_residual(fine);
        const double tol = diag::residual_tolerance(cfg.grid.min_h(), base_cfg.dt_max);
        const double floor = 1e-12 * std::max(1.0, run_res.mass);
        bool ok = exc_base <= tol;
        std::string detail = "excursions " + fmt(exc_base) + " -> " + fmt(exc_fine) +
                             " (tol " + fmt(tol) + ")";
        if (ok && exc_base > floor && !(exc_fine <= exc_base / 1.8)) ok = false;
        add("v_energy_residual_refinement", pass_fail(ok), detail);
    } catch (const std::exception& e) {
        add("v_energy_residual_refinement", PropertyOutcome::Fail, e.what());
    }

    // 6. Lyapunov monotonicity, gated on the smallness precondition chi < delta
    try {
        const double vol = cfg.grid.volume();
        const std::array<double, 2> lens{cfg.grid.length[0], cfg.grid.length[1]};
        const double C_P =
            theory::poincare_constant(std::span<const double>(lens.data(), cfg.grid.dim));
        double K1 = cfg.diag_cfg.K1_override.value_or(1.0 / (2.0 * vol));
        double K5 = cfg.diag_cfg.K5_override.value_or(2.0 / vol);
        if (run_res.status == solver::RunStatus::Converged) {
            try {
                const auto ec = diag::estimate_constants(run_res.records, run_res.mass,
                                                         cfg.diag_cfg.tail_fraction);
                K1 = ec.K1_est;
                K5 = ec.K5_est;
            } catch (const ShortTrajectoryError&) {
            }
        }
        const double delta1 = theory::delta1_smallness(K5, C_P);
        const double eta = theory::eta_lower_bound(cfg.diag_cfg.c0, run_res.mass,
                                                   std::max(init.v_star, 1e-12));
        const double cap = theory::chi_star(cfg.model.a, cfg.model.k, cfg.model.dim_n, eta);
        const double delta = theory::delta_threshold(cap, cfg.model.a, cfg.model.k,
                                                     cfg.model.dim_n, K1, run_res.mass,
                                                     run_res.mass, delta1);
        if (!(cfg.model.chi < delta)) {
            add("lyapunov_monotonicity", PropertyOutcome::Skip,
                "precondition chi < delta not met (chi = " + fmt(cfg.model.chi) +
                    ", delta = " + fmt(delta) + ")");
        } else {
            const auto kc = diag::choose_K(cfg.model.chi, cfg.model.a, cfg.model.k,
                                           run_res.mass, K1, K5, C_P);
            const double K = kc.K > 0.0 ? kc.K : 0.5 * kc.upper;
            const double floor = 100.0 * short_cfg.tol_conv * short_cfg.tol_conv * vol *
                                 (1.0 + K);
            const auto t_star = diag::detect_t_star(run_res.records, K, floor);
            if (!t_star) {
                add("lyapunov_monotonicity", PropertyOutcome::Fail,
                    "no monotone-decay onset detected");
            } else {
                const double tol = diag::residual_tolerance(cfg.grid.min_h(),
                                                            short_cfg.dt_max);
                bool ok = true;
                double worst = 0.0;
                for (std::size_t i = *t_star + 1; i < run_res.records.size(); ++i) {
                    const double f0 = diag::lyapunov_from_record(run_res.records[i - 1], K);
                    const double f1 = diag::lyapunov_from_record(run_res.records[i], K);
                    if (f0 <= floor && f1 <= floor) continue;
                    worst = std::max(worst, f1 - f0);
                    if (f1 - f0 > tol) ok = false;
                }
                add("lyapunov_monotonicity", pass_fail(ok),
                    "t* = " + fmt(run_res.records[*t_star].t) + ", worst increment " +
                        fmt(worst));
            }
        }
    } catch (const std::exception& e) {
        add("lyapunov_monotonicity", PropertyOutcome::Fail, e.what());
    }

    return out;
}

}  // namespace kslab::cli
