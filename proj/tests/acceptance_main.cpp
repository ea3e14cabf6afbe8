// Acceptance suite: one pass/fail line per criterion, exit 1 on any failure.
//
// The standard run: 64x64 unit square, a = 1, k = 2, power-law sensitivity,
// chi = 0.25 * chi_star(a, k, 2, 1), u0 = 1 + 0.3 cosine mode, v0 = 1,
// t_end = 50. Several criteria share it; the refinement criterion repeats it
// at (h/2, dt/2), and the mass-mechanism criterion runs the (chi, M) sweep.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kslab/experiments.hpp"
#include "kslab/run.hpp"
#include "kslab/theory.hpp"
#include "kslab/verify.hpp"

using namespace kslab;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] %02d %s — %s\n", ok ? "PASS" : "FAIL", idx, name.c_str(),
                detail.c_str());
    if (!ok) ++g_failures;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

struct StandardRun {
    model::ModelParams params;
    Grid grid;
    model::InitialData init;
    solver::SolverConfig cfg;
    solver::RunResult res;
};

StandardRun standard_run(int cells, double dt_max) {
    StandardRun sr;
    sr.params.chi = 0.25 * theory::chi_star(1.0, 2.0, 2, 1.0);
    sr.params.a = 1.0;
    sr.params.k = 2.0;
    sr.params.dim_n = 2;
    sr.grid = Grid::rectangle(cells, cells, 1.0, 1.0);
    sr.init = model::build_initial_data(sr.grid, model::CosineSpec{1.0, 0.3, {1, 1}},
                                        model::CosineSpec{1.0, 0.0, {0, 0}});
    sr.cfg.t_end = 50.0;
    sr.cfg.dt_max = dt_max;
    sr.cfg.dt_init = dt_max;
    sr.cfg.output_stride = 1;
    sr.res = solver::run(sr.params, sr.grid, sr.init, sr.cfg, {});
    return sr;
}

std::string records_csv(const std::vector<diag::DiagRecord>& records) {
    std::ostringstream os;
    os << diag::kTrajectoryCsvHeader << '\n';
    for (const auto& r : records) diag::write_record_csv(os, r);
    return os.str();
}

double worst_positive_v_residual(const solver::RunResult& res) {
    double worst = 0.0;
    for (std::size_t i = 1; i < res.records.size(); ++i)
        worst = std::max(worst, res.records[i].lemma32_residual);
    return worst;
}

bool check_v_lower_bound(const solver::RunResult& res, double min_v0, double* worst) {
    bool ok = true;
    for (const auto& rec : res.records) {
        const double slack = rec.min_v - std::exp(-rec.t) * min_v0;
        *worst = std::min(*worst, slack);
        if (slack < -1e-10 * std::max(1.0, min_v0)) ok = false;
    }
    return ok;
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");

    // shared standard run
    const StandardRun base = standard_run(64, 0.01);

    // 1. mass conservation
    report(1, "mass conservation on the standard run",
           base.res.max_mass_drift <= 1e-10,
           "max relative drift " + fmt(base.res.max_mass_drift) + " over " +
               std::to_string(base.res.records.size()) + " records");

    // 2. exponential convergence with a tight log-linear fit
    {
        bool ok = base.res.status == solver::RunStatus::Converged;
        std::string detail = "status " + std::string(solver::status_name(base.res.status));
        if (ok) {
            std::vector<double> ts, ys;
            for (const auto& r : base.res.records) {
                ts.push_back(r.t);
                ys.push_back(r.sup_u_dist + r.sup_v_dist);
            }
            try {
                const auto fit = diag::fit_kappa(ts, ys, base.cfg.tol_conv);
                double worst_resid = 0.0;
                for (std::size_t i = 0; i < ts.size(); ++i) {
                    if (ts[i] < fit.t_lo || ts[i] > fit.t_hi || !(ys[i] > 0.0)) continue;
                    worst_resid = std::max(
                        worst_resid, std::log(ys[i]) - (fit.intercept - fit.kappa * ts[i]));
                }
                ok = fit.kappa > 0.0 && fit.r_squared >= 0.99 &&
                     worst_resid <= 3.0 * fit.stderr_log;
                detail = "kappa " + fmt(fit.kappa) + ", r^2 " + fmt(fit.r_squared) +
                         ", worst log-envelope excess " + fmt(worst_resid) + " vs 3*se " +
                         fmt(3.0 * fit.stderr_log);
            } catch (const std::exception& e) {
                ok = false;
                detail = e.what();
            }
        }
        report(2, "exponential convergence of the standard run", ok, detail);
    }

    // 3. H certification across the chi ladder
    {
        bool ok = true;
        std::string detail;
        try {
            const double eta_t = 1.0;
            const double chi0 = 0.5 * theory::chi_star(1.0, 2.0, 2, eta_t);
            const auto pe = theory::find_admissible_pe(chi0, 1.0, 2.0, 2, eta_t);
            double worst = -1e300;
            for (int i = 1; i <= 8; ++i) {
                const auto cert = theory::certify_H_nonpositive(
                    pe, chi0 * i / 8.0, 1.0, 2.0, model::SensitivitySpec::power_law(),
                    eta_t, 1e3 * eta_t, 10000);
                worst = std::max(worst, cert.max_H);
                if (!cert.passed) ok = false;
            }
            detail = "max H " + fmt(worst) + " over 8 chi values x 10^4 samples";
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        report(3, "H certification for chi in (0, chi0]", ok, detail);
    }

    // 4. weight-derivative identity battery
    {
        const auto phi = cli::phi_identity_battery(100, 0xACCE);
        report(4, "weight-derivative identity on 100 random tuples",
               phi.residuals_ok && phi.richardson_ok,
               "worst residual " + fmt(phi.worst_residual) + ", Richardson ratios in [" +
                   fmt(phi.worst_ratio_low) + ", " + fmt(phi.worst_ratio_high) + "] (" +
                   std::to_string(phi.richardson_eligible) + " eligible)");
    }

    // 5. v-energy residual bounded and refining
    const double tol_base = diag::residual_tolerance(base.grid.h[0], base.cfg.dt_max);
    {
        bool ok = true;
        std::string detail;
        const double exc_base = worst_positive_v_residual(base.res);
        if (exc_base > tol_base) ok = false;
        const StandardRun fine = standard_run(128, 0.005);
        const double exc_fine = worst_positive_v_residual(fine.res);
        const double floor = 1e-12;
        if (exc_base > floor && !(exc_fine <= exc_base / 1.8)) ok = false;
        detail = "excursions " + fmt(exc_base) + " -> " + fmt(exc_fine) + " (tol " +
                 fmt(tol_base) + ")";
        if (exc_base <= floor) detail += "; base excursion at floor";
        report(5, "v-energy residual bounded and refining", ok, detail);

        // fine-run bookkeeping feeds criterion 10 as well
        double worst_slack = 0.0;
        if (!check_v_lower_bound(fine.res, fine.init.v_star, &worst_slack)) ++g_failures;
    }

    // 6. Lyapunov monotonicity from the detected onset
    {
        bool ok = true;
        std::string detail;
        try {
            const auto ec = diag::estimate_constants(base.res.records, base.res.mass, 0.25);
            const std::vector<double> lens{1.0, 1.0};
            const double C_P = theory::poincare_constant(lens);
            const auto kc = diag::choose_K(base.params.chi, base.params.a, base.params.k,
                                           base.res.mass, ec.K1_est, ec.K5_est, C_P);
            const double floor = 100.0 * base.cfg.tol_conv * base.cfg.tol_conv *
                                 base.grid.volume() * (1.0 + kc.K);
            const auto t_star = diag::detect_t_star(base.res.records, kc.K, floor);
            if (!t_star) {
                ok = false;
                detail = "no onset";
            } else {
                double worst = 0.0;
                for (std::size_t i = *t_star + 1; i < base.res.records.size(); ++i) {
                    const double f0 =
                        diag::lyapunov_from_record(base.res.records[i - 1], kc.K);
                    const double f1 = diag::lyapunov_from_record(base.res.records[i], kc.K);
                    if (f0 <= floor && f1 <= floor) continue;
                    worst = std::max(worst, f1 - f0);
                    if (f1 - f0 > tol_base) ok = false;
                }
                detail = "K " + fmt(kc.K) + ", t* " + fmt(base.res.records[*t_star].t) +
                         ", worst increment " + fmt(worst);
            }
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        report(6, "Lyapunov functional nonincreasing from the onset", ok, detail);
    }

    // 7. mass mechanism sweep
    {
        bool ok = true;
        std::string detail;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            sweep::SweepSpec spec;
            spec.chis = {25.0};
            spec.Ms = {1.0, 2.0, 4.0, 8.0, 16.0};
            spec.base_model.chi = 25.0;
            spec.base_model.a = 0.0;
            spec.base_model.k = 2.0;
            spec.base_model.dim_n = 2;
            spec.grid = Grid::rectangle(32, 32, 1.0, 1.0);
            spec.u0_template = model::CosineSpec{1.0, 0.3, {1, 1}};
            spec.v0_template = model::CosineSpec{1.0, 0.0, {0, 0}};
            spec.solver_cfg.t_end = 30.0;
            spec.solver_cfg.dt_max = 0.02;
            spec.solver_cfg.divergence_guard = 50.0;
            spec.workers = 4;
            const auto result = sweep::run_sweep(spec);

            // upward-closed converged set with at most one boundary exception
            std::vector<int> conv;
            for (const auto& c : result.cells)
                conv.push_back(c.status == sweep::CellStatus::Converged ? 1 : 0);
            int exceptions = 0;
            for (std::size_t i = 0; i + 1 < conv.size(); ++i)
                if (conv[i] == 1 && conv[i + 1] == 0) ++exceptions;
            if (exceptions > 1) ok = false;
            int n_conv = 0;
            for (int c : conv) n_conv += c;
            if (n_conv == 0) ok = false;

            // theory threshold strictly increasing across the mass grid
            for (std::size_t i = 0; i + 1 < result.cells.size(); ++i)
                if (!(result.cells[i + 1].delta_theory > result.cells[i].delta_theory))
                    ok = false;

            const auto cmp = sweep::compare_threshold(result);
            if (!cmp.consistent) ok = false;

            std::string statuses;
            for (std::size_t i = 0; i < conv.size(); ++i)
                statuses += (i ? "," : "") + std::string(conv[i] ? "C" : "n");
            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (wall > 900.0) ok = false;
            detail = "statuses [" + statuses + "], delta(M) " +
                     fmt(result.cells.front().delta_theory) + " .. " +
                     fmt(result.cells.back().delta_theory) + ", wall " + fmt(wall) + " s";
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        report(7, "mass mechanism: upward-closed convergence, rising threshold", ok,
               detail);
    }

    // 8. asymptotic bound on u S(v)
    {
        bool ok = true;
        std::string detail;
        try {
            const auto ec = diag::estimate_constants(base.res.records, base.res.mass, 0.25);
            const std::size_t n = base.res.records.size();
            const std::size_t start = n - static_cast<std::size_t>(std::ceil(0.25 * n));
            double tail_sup = 0.0;
            for (std::size_t i = start; i < n; ++i)
                tail_sup = std::max(tail_sup, base.res.records[i].uSv_sup);
            const double bound = 1.1 * ec.K5_est * base.res.mass /
                                 std::pow(base.params.a + ec.K1_est * base.res.mass,
                                          base.params.k);
            ok = tail_sup <= bound;
            detail = "tail sup " + fmt(tail_sup) + " vs bound " + fmt(bound);
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        report(8, "tail bound on u S(v)", ok, detail);
    }

    // 9. pure-diffusion decay oracle
    {
        bool ok = true;
        std::string detail;
        try {
            model::ModelParams params = base.params;
            params.chi = 0.0;
            const auto init =
                model::build_initial_data(base.grid, model::CosineSpec{1.0, 0.3, {1, 0}},
                                          model::CosineSpec{1.0, 0.0, {0, 0}});
            const auto res = solver::run(params, base.grid, init, base.cfg, {});
            std::vector<double> ts, ys;
            for (const auto& r : res.records) {
                ts.push_back(r.t);
                ys.push_back(r.sup_u_dist + r.sup_v_dist);
            }
            const auto fit = diag::fit_kappa(ts, ys, base.cfg.tol_conv);
            const double pi = std::acos(-1.0);
            const double h = base.grid.h[0];
            const double lambda1 = 2.0 / (h * h) * (1.0 - std::cos(pi * h));
            ok = res.status == solver::RunStatus::Converged &&
                 std::abs(fit.kappa - lambda1) / lambda1 < 0.10;
            detail = "kappa " + fmt(fit.kappa) + " vs grid mode " + fmt(lambda1) +
                     " (rel err " + fmt(std::abs(fit.kappa - lambda1) / lambda1) + ")";

            double worst_slack = 0.0;
            if (!check_v_lower_bound(res, init.v_star, &worst_slack)) ok = false;
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        report(9, "pure-diffusion rate matches the slowest grid mode", ok, detail);
    }

    // 10. comparison lower bound for v across the suite runs
    {
        double worst_slack = 0.0;
        const bool ok = check_v_lower_bound(base.res, base.init.v_star, &worst_slack);
        report(10, "min v dominates e^{-t} min v0 on every record", ok,
               "worst slack " + fmt(worst_slack) +
                   " (per-step bound enforced inside the stepper)");
    }

    // 11. determinism
    {
        const StandardRun again = standard_run(64, 0.01);
        const bool ok = records_csv(base.res.records) == records_csv(again.res.records);
        report(11, "repeating the standard run reproduces trajectory.csv", ok,
               ok ? "byte-identical" : "differs");
    }

    if (g_failures == 0) {
        std::printf("ACCEPTANCE: all criteria passed\n");
        return 0;
    }
    std::printf("ACCEPTANCE: %d criteria FAILED\n", g_failures);
    return 1;
}
