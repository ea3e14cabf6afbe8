#pragma once

// Monitored quantities along a trajectory: the Lyapunov functional and its
// weight, the discrete residuals of the two energy inequalities, the weighted
// L^p functional, the decay-rate fit, and the empirical surrogate constants
// estimated from the trajectory tail.

#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "kslab/grid.hpp"
#include "kslab/model.hpp"

namespace kslab::diag {

// One trajectory record; serializes as one CSV row, columns in field order.
struct DiagRecord {
    double t = 0.0;
    double mass = 0.0;
    double min_v = 0.0;
    double max_u = 0.0;
    double sup_u_dist = 0.0;  // ||u - mean u0||_inf
    double sup_v_dist = 0.0;  // ||v - mean u0||_inf
    double l2_u_dist = 0.0;
    double l2_v_dist = 0.0;
    double F = 0.0;           // Lyapunov value at K_used
    double K_used = 0.0;
    double lp_weighted = 0.0;  // int u^p phi(v)
    double uSv_sup = 0.0;      // ||u S(v)||_inf
    double lemma31_residual = 0.0;
    double lemma32_residual = 0.0;
};

extern const char* const kTrajectoryCsvHeader;
void write_record_csv(std::ostream& os, const DiagRecord& rec);

struct DiagnosticsConfig {
    double tail_fraction = 0.25;
    double c0 = 0.05;  // fundamental-solution lower bound (configuration value)
    std::optional<double> K1_override;
    std::optional<double> K5_override;
};

// F = int (u - u0_mean)^2 + K int (v - u0_mean)^2, cell-sum quadrature.
double lyapunov_F(const Field& u, const Field& v, double u0_mean, double K);

struct KChoice {
    double K = 0.0;
    double lower = 0.0;  // 2 K5^2 M^2 chi^2 / (a + K1 M)^{2k}
    double upper = 0.0;  // 1 / C_P
};

// Geometric mean of the admissible bracket; throws BracketError when the
// bracket is empty (the smallness condition chi M/(a+K1 M)^k < delta1 fails).
KChoice choose_K(double chi, double a, double k, double M, double K1_est, double K5_est,
                 double C_P);

// Signed discrete excess of the v-energy inequality
//   [int (v-m)^2]' + 2 int |grad v|^2 + int (v-m)^2 - int (u-m)^2  (<= 0 in
// the continuum), midpoint-in-time values, face-difference gradients.
double residual_v_energy(const Field& u_n, const Field& u_np1, const Field& v_n,
                         const Field& v_np1, double dt, double u0_mean);

// Signed discrete excess of the u-energy inequality
//   [int (u-m)^2]' + int |grad u|^2 - 4 K5^2 M^2 chi^2/(a+K1 M)^{2k} int |grad v|^2.
double residual_u_energy(const Field& u_n, const Field& u_np1, const Field& v_n,
                         const Field& v_np1, double dt, double u0_mean, double chi,
                         double a, double k, double K1_est, double K5_est, double M);

struct RateFit {
    double kappa = 0.0;
    double intercept = 0.0;  // of the log-linear fit
    double r_squared = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double stderr_log = 0.0;  // standard error of the log residuals
    int samples = 0;
};

// Least-squares line on (t, log y) inside the window [first y < y0/10,
// last y > 100 tol_conv]; kappa = -slope. Needs >= 20 in-window samples,
// else FitWindowError.
RateFit fit_kappa(const std::vector<double>& t, const std::vector<double>& y,
                  double tol_conv);

struct EmpiricalConstants {
    double K1_est = 0.0;   // (tail min of min_v) / (2 M)
    double K5_est = 0.0;   // 2 (tail max of max_u) / M
    double eta_emp = 0.0;  // tail min of min_v
    double tail_from_t = 0.0;
    int tail_records = 0;
};

// Tail-window surrogates for the asymptotic constants; the tail is the final
// `tail_fraction` of records and must contain >= 10 of them.
EmpiricalConstants estimate_constants(const std::vector<DiagRecord>& records, double M,
                                      double tail_fraction = 0.25);

// int u^p phi(v); saturation of phi propagates.
double weighted_lp(const Field& u, const Field& v, double p, double r, double a, double k);

double usv_sup(const Field& u, const Field& v, const model::SensitivitySpec& sensitivity,
               double a, double k);

// First record index from which F (recomputed at weight K from the stored l2
// columns) decreases monotonically; records with F below `floor` are ignored.
// Returns nullopt when no such onset exists.
std::optional<std::size_t> detect_t_star(const std::vector<DiagRecord>& records, double K,
                                         double floor);

// F at weight K reconstructed from a record's l2 distance columns.
double lyapunov_from_record(const DiagRecord& rec, double K);

// Discretization tolerance tol = C (h^2 + dt) for the residual and the
// F-monotonicity checks; C was calibrated once by the refinement study kept
// with the test fixtures.
double residual_tolerance(double h, double dt);

}  // namespace kslab::diag
