#pragma once

// Parameter sweeps over (chi, M): scaled initial data per cell, parallel
// execution across cells with a deterministic gather, outcome classification,
// and the comparison of the empirical stability boundary against the
// closed-form thresholds.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kslab/run.hpp"

namespace kslab::sweep {

struct SweepSpec {
    std::vector<double> chis;
    std::vector<double> Ms;
    int repetitions = 1;
    model::ModelParams base_model;  // chi field ignored; set per cell
    Grid grid;
    model::FieldSpec u0_template;
    model::FieldSpec v0_template;
    solver::SolverConfig solver_cfg;
    diag::DiagnosticsConfig diag_cfg;
    std::uint64_t seed = 0;
    int workers = 1;
    int max_runs = 256;

    void validate() const;
};

enum class CellStatus { Converged, Undecided, Diverged, Error };

const char* cell_status_name(CellStatus s);

struct CellResult {
    double chi = 0.0;
    double M = 0.0;
    std::uint64_t seed = 0;
    CellStatus status = CellStatus::Error;
    std::optional<double> kappa;
    std::optional<double> r2;
    double t_final = 0.0;
    double delta_theory = 0.0;
    double chi_star_theory = 0.0;
    double wall_ms = 0.0;
    std::optional<double> K1_est, K5_est;
    double v_star = 0.0;
    std::string error;
};

struct SweepResult {
    std::vector<CellResult> cells;  // chi-major, then M, then repetition
    std::vector<double> chis, Ms;
    double K1_used = 0.0, K5_used = 0.0;
    std::string constants_source;  // which cell supplied the K estimates
    double c0 = 0.0;
    double C_P = 0.0;
    double a = 0.0, k = 2.0;
    int dim_n = 2;
};

// Executes every (chi, M, repetition) cell; per-cell failures are recorded,
// never aborting the sweep. The u0/v0 templates are scaled so the cell's
// discrete mass equals M with the relative perturbation shape fixed.
SweepResult run_sweep(const SweepSpec& spec);

struct ThresholdRow {
    double M = 0.0;
    std::optional<double> chi_emp;  // largest converged chi at this M
    double delta_theory = 0.0;
    double chi_star_theory = 0.0;
    int n_converged = 0;
    int n_cells = 0;
};

struct ThresholdComparison {
    std::vector<ThresholdRow> rows;
    bool consistent = true;          // delta(M) <= chi_emp(M) + one chi step
    std::vector<std::string> violations;
};

// Sufficiency check: the guaranteed threshold must not exceed the empirical
// boundary by more than one chi-grid step, and no cell below the guarantee
// may have diverged. Violations are flagged loudly as suspected bugs.
ThresholdComparison compare_threshold(const SweepResult& result);

void write_sweep_csv(std::ostream& os, const SweepResult& result);
std::string summary_json(const SweepResult& result, const ThresholdComparison& cmp);

}  // namespace kslab::sweep
