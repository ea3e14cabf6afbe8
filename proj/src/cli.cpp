#include "kslab/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "kslab/run.hpp"
#include "kslab/verify.hpp"

namespace kslab::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string resolve_output_dir(const std::optional<std::string>& flag_out,
                               const std::string& config_out) {
    if (flag_out && !flag_out->empty()) return *flag_out;
    if (!config_out.empty()) return config_out;
    if (const char* env = std::getenv("KS_LAB_OUT"); env && *env) return env;
    return "out";
}

namespace {

json load_with_overrides(const CommonOpts& opts) {
    json j = load_json_file(opts.config_path);
    for (const auto& ov : opts.overrides) apply_override(j, ov);
    return j;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

// Post-run closed-form block for the summary: empirical constants when the
// tail supplied them, configured surrogates otherwise.
ojson summary_theory_block(const RunConfig& cfg, const solver::RunResult& res,
                           const std::optional<diag::EmpiricalConstants>& ec) {
    ojson out;
    try {
        if (!(res.v_star > 0.0)) throw std::domain_error("v_star = 0: eta undefined");
        theory::TheoryInputs in;
        in.a = cfg.model.a;
        in.k = cfg.model.k;
        in.dim_n = cfg.model.dim_n;
        in.c0 = cfg.diag_cfg.c0;
        in.M = res.mass;
        in.v_star = res.v_star;
        const std::array<double, 2> lens{cfg.grid.length[0], cfg.grid.length[1]};
        in.C_P = theory::poincare_constant(
            std::span<const double>(lens.data(), cfg.grid.dim));
        const double vol = cfg.grid.volume();
        in.K1_est = ec ? ec->K1_est
                       : cfg.diag_cfg.K1_override.value_or(1.0 / (2.0 * vol));
        in.K5_est = ec ? ec->K5_est : cfg.diag_cfg.K5_override.value_or(2.0 / vol);
        in.k_estimates_empirical = ec.has_value();
        const double eta = theory::eta_lower_bound(in.c0, in.M, in.v_star);
        const double cap = theory::chi_star(in.a, in.k, in.dim_n, eta);
        in.chi0 = (cfg.model.chi > 0.0 && cfg.model.chi < cap) ? cfg.model.chi : 0.5 * cap;
        out = theory_report_json(theory::build_report(in));
    } catch (const std::exception& e) {
        out = ojson{{"error", e.what()}};
    }
    return out;
}

}  // namespace

int cmd_run(const CommonOpts& opts, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    model::InitialData init;
    try {
        json j = load_with_overrides(opts);
        cfg = parse_run_config(j);
        if (opts.seed) cfg.seed = *opts.seed;
        cfg.output_dir = resolve_output_dir(opts.out_dir, cfg.output_dir);
        init = model::build_initial_data(cfg.grid, cfg.u0, cfg.v0);
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        const fs::path dir(cfg.output_dir);
        fs::create_directories(dir);
        write_text_file(dir / "config_resolved.json", resolved_run_config(cfg).dump(2) + "\n");

        const auto res = solver::run(cfg.model, cfg.grid, init, cfg.solver_cfg, cfg.diag_cfg);

        {
            std::ofstream os(dir / "trajectory.csv", std::ios::binary);
            os << diag::kTrajectoryCsvHeader << '\n';
            for (const auto& rec : res.records) diag::write_record_csv(os, rec);
        }

        ojson summary;
        summary["status"] = solver::status_name(res.status);
        if (!res.note.empty()) summary["note"] = res.note;
        summary["t_final"] = res.t_final;
        summary["steps"] = res.steps;
        summary["mass"] = {{"initial", res.mass}, {"max_rel_drift", res.max_mass_drift}};
        summary["u0_mean"] = res.u0_mean;
        summary["v_star"] = res.v_star;
        summary["K_used"] = res.K_used;
        summary["lp_weight"] = {{"p", res.lp_p}, {"r", res.lp_r}};

        std::vector<double> ts, ys;
        for (const auto& rec : res.records) {
            ts.push_back(rec.t);
            ys.push_back(rec.sup_u_dist + rec.sup_v_dist);
        }
        try {
            const auto fit = diag::fit_kappa(ts, ys, cfg.solver_cfg.tol_conv);
            summary["kappa_fit"] = {{"kappa", fit.kappa},     {"intercept", fit.intercept},
                                    {"r_squared", fit.r_squared}, {"t_lo", fit.t_lo},
                                    {"t_hi", fit.t_hi},        {"stderr_log", fit.stderr_log},
                                    {"samples", fit.samples}};
        } catch (const FitWindowError& e) {
            summary["kappa_fit"] = nullptr;
            summary["kappa_fit_error"] = e.what();
        }

        std::optional<diag::EmpiricalConstants> ec;
        try {
            ec = diag::estimate_constants(res.records, res.mass, cfg.diag_cfg.tail_fraction);
            summary["empirical"] = {{"K1_est", ec->K1_est},
                                    {"K5_est", ec->K5_est},
                                    {"eta_emp", ec->eta_emp},
                                    {"tail_from_t", ec->tail_from_t},
                                    {"tail_records", ec->tail_records}};
        } catch (const ShortTrajectoryError& e) {
            summary["empirical"] = nullptr;
            summary["empirical_error"] = e.what();
        }

        // onset of monotone Lyapunov decay, reported with the F-column weight
        const double floor = 100.0 * cfg.solver_cfg.tol_conv * cfg.solver_cfg.tol_conv *
                             cfg.grid.volume() * (1.0 + res.K_used);
        if (const auto ts_idx = diag::detect_t_star(res.records, res.K_used, floor))
            summary["t_star"] = res.records[*ts_idx].t;
        else
            summary["t_star"] = nullptr;

        summary["theory"] = summary_theory_block(cfg, res, ec);
        write_text_file(dir / "summary.json", summary.dump(2) + "\n");

        out << "status: " << solver::status_name(res.status) << " (t=" << res.t_final
            << ", steps=" << res.steps << ")\n";
        switch (res.status) {
            case solver::RunStatus::Converged: return kExitConverged;
            case solver::RunStatus::TEndReached: return kExitUndecided;
            default: return kExitDiverged;
        }
    } catch (const std::exception& e) {
        err << "internal solver error: " << e.what() << "\n";
        return kExitInternal;
    }
}

int cmd_theory(const CommonOpts& opts, std::ostream& out, std::ostream& err) {
    TheoryConfig cfg;
    try {
        json j = load_with_overrides(opts);
        cfg = parse_theory_config(j);
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        const auto rep = theory::build_report(cfg.inputs);
        out << theory_report_json(rep).dump(2) << "\n";
        return 0;
    } catch (const InfeasibleError& e) {
        out << ojson{{"error", {{"type", "infeasible_pe"}, {"message", e.what()}}}}.dump(2)
            << "\n";
        return kExitFailure;
    } catch (const std::domain_error& e) {
        out << ojson{{"error", {{"type", "hypothesis_violation"}, {"message", e.what()}}}}
                   .dump(2)
            << "\n";
        return kExitFailure;
    }
}

int cmd_sweep(const CommonOpts& opts, std::ostream& out, std::ostream& err) {
    SweepConfig cfg;
    try {
        json j = load_with_overrides(opts);
        cfg = parse_sweep_config(j);
        if (opts.seed) cfg.spec.seed = *opts.seed;
        if (opts.workers) cfg.spec.workers = *opts.workers;
        cfg.output_dir = resolve_output_dir(opts.out_dir, cfg.output_dir);
        cfg.spec.validate();
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        const auto result = sweep::run_sweep(cfg.spec);
        const auto cmp = sweep::compare_threshold(result);
        const fs::path dir(cfg.output_dir);
        fs::create_directories(dir);
        {
            std::ofstream os(dir / "sweep.csv", std::ios::binary);
            sweep::write_sweep_csv(os, result);
        }
        write_text_file(dir / "sweep_summary.json", sweep::summary_json(result, cmp));
        int converged = 0, errors = 0;
        for (const auto& c : result.cells) {
            if (c.status == sweep::CellStatus::Converged) ++converged;
            if (c.status == sweep::CellStatus::Error) ++errors;
        }
        out << "sweep: " << result.cells.size() << " cells, " << converged
            << " converged, " << errors << " failed; consistency "
            << (cmp.consistent ? "ok" : "VIOLATED") << "\n";
        for (const auto& v : cmp.violations) err << "consistency: " << v << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

int cmd_verify(const CommonOpts& opts, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        json j = load_with_overrides(opts);
        cfg = parse_run_config(j);
        if (opts.seed) cfg.seed = *opts.seed;
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        const auto results = run_verify_battery(cfg);
        bool any_fail = false;
        for (const auto& r : results) {
            const char* tag = r.outcome == PropertyOutcome::Pass ? "PASS"
                              : r.outcome == PropertyOutcome::Skip ? "SKIP" : "FAIL";
            out << "[" << tag << "] " << r.name;
            if (!r.detail.empty()) out << ": " << r.detail;
            out << "\n";
            if (r.outcome == PropertyOutcome::Fail) any_fail = true;
        }
        return any_fail ? kExitFailure : 0;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace kslab::cli
