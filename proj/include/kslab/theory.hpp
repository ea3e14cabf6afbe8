#pragma once

// Closed-form constants and inequality certification for the stabilization
// argument: the signal lower bound eta, the drift threshold chi_star, the
// exponential weight phi, the energy coefficient H with its (p, eps) search,
// the Poincare constant of box domains, and the smallness thresholds delta1,
// delta together with the mass threshold of the large-mass regime.

#include <map>
#include <optional>
#include <span>
#include <string>

#include "kslab/model.hpp"

namespace kslab::theory {

// eta = 4 (1 + sqrt(1 + 4 v*/(c0 M)))^{-2} v*; always in (0, v*),
// strictly increasing in M and c0.
double eta_lower_bound(double c0, double M, double v_star);

// chi_star = k (a+eta)^{k-1} sqrt(2/n).
double chi_star(double a, double k, int n, double eta);

// phi(s) = exp{ r / ((k-1)(a+s)^{k-1}) }. Throws SaturationError when the
// exponent exceeds exp_cap (default 700, near the double exp limit) instead
// of overflowing to infinity.
double phi_weight(double s, double r, double a, double k, double exp_cap = 700.0);

// |centered difference of phi at s  -  (-r/(a+s)^k) phi(s)| / |phi'(s)|.
double phi_identity_residual(double s, double r, double a, double k, double h);

// H(s) = -chi p r S(s)/(a+s)^k - r^2/(a+s)^{2k} - k r/(a+s)^{k+1}
//        + (2 p r/(a+s)^k + chi p(p-1) S(s))^2 / (4(1-eps) p(p-1)).
// Requires p > 1 + 1e-6 (division guard).
double eval_H(double s, double eps, double p, double r, double chi, double a, double k,
              const model::SensitivitySpec& sensitivity);

// r = (p-1) chi0 / 2 * sqrt(p / (1 + eps p - eps)).
double r_coefficient(double p, double eps, double chi0);

struct AdmissiblePE {
    double p = 0.0;
    double eps = 0.0;
    double r = 0.0;
    double margin = 0.0;  // slack in the defining inequality
    double chi0 = 0.0;    // the bound the pair was certified for
};

// Grid search (64x64 points, refinable x4) for (p, eps) with
//   chi0/(k(1-eps)) sqrt(p(1+eps p-eps)) + eps p chi0 <= (a+eta_tilde)^{k-1},
// maximizing the margin; ties broken by smaller eps, then smaller p.
// Requires 0 < chi0 < chi_star(a,k,n,eta_tilde); throws InfeasibleError when
// no grid point qualifies. For n = 1 the p-range widens to (1, 2) since the
// nominal (n/2, n) would leave H's domain.
AdmissiblePE find_admissible_pe(double chi0, double a, double k, int n, double eta_tilde,
                                int grid_refine = 1);

struct HCertificate {
    bool passed = false;
    double max_H = 0.0;
    double worst_s = 0.0;
    // max over samples of H(s) - k r ((a+eta~)^{k-1} - (a+s)^{k-1})/(a+s)^{2k};
    // nonpositive when the analytic domination bound holds at every sample.
    double max_excess_over_bound = 0.0;
    int samples = 0;
};

// Samples H on a log-spaced grid over [eta_tilde, s_max] plus a dense band
// just above eta_tilde; passes iff max H <= 1e-12. Requires chi <= pe.chi0
// and n_samples >= 1000.
HCertificate certify_H_nonpositive(const AdmissiblePE& pe, double chi, double a, double k,
                                   const model::SensitivitySpec& sensitivity,
                                   double eta_tilde, double s_max, int n_samples);

// Sharp Neumann-Poincare constant of a box: (max_i L_i / pi)^2.
double poincare_constant(std::span<const double> lengths);

// delta1 = (1/K5) sqrt(1/(2 C_P)).
double delta1_smallness(double K5_est, double C_P);

// delta = min{ chi0, k(a+K1 M0)^{k-1} sqrt(2/n), ((a+K1 M)^k / M) delta1 }.
// Throws std::domain_error when a = 0 and M0 = 0 (degenerate).
double delta_threshold(double chi0, double a, double k, int n, double K1_est, double M0,
                       double M, double delta1);

// inf over mu > 0 of (a+K1 mu)^k / mu, for a > 0 (mass-independent variant of
// the third delta branch). Golden-section on the unimodal objective.
double mass_branch_infimum(double a, double k, double K1_est);

// Smallest grid-searched M0 such that (i) chi_star(a,k,n,eta(c0,M0,v*)) > chi0,
// (ii) k(a+K1 M0)^{k-1} sqrt(2/n) > chi0, and (iii) (a+K1 M)^k/M > chi0/delta1
// for all M >= M0 (checked through the objective's unimodal tail).
// Requires chi0 < k(a+v*)^{k-1} sqrt(2/n); throws SearchRangeError when the
// search range is exhausted.
double min_mass_threshold(double chi0, double a, double k, int n, double v_star, double c0,
                          double K1_est, double delta1);

enum class Provenance { ClosedForm, Configured, Empirical };

const char* provenance_name(Provenance p);

struct TheoryInputs {
    double chi0 = 0.0;
    double a = 0.0;
    double k = 2.0;
    int dim_n = 2;
    std::optional<double> eta_tilde;  // defaults to eta(c0, M, v_star)
    double c0 = 0.05;
    double M = 1.0;
    double v_star = 1.0;
    std::optional<double> M0;  // defaults to M
    double K1_est = 0.0;
    double K5_est = 0.0;
    bool k_estimates_empirical = false;  // true when K1/K5 came from a run tail
    double C_P = 0.0;
};

struct TheoryReport {
    double eta = 0.0;
    double chi_star = 0.0;
    AdmissiblePE pe;
    double C_P = 0.0;
    double delta1 = 0.0;
    double delta = 0.0;
    std::optional<double> delta_mass_independent;  // a > 0 only
    std::map<std::string, Provenance> provenance;
};

// Evaluates every closed-form constant for one parameter set. Propagates
// InfeasibleError from the (p, eps) search.
TheoryReport build_report(const TheoryInputs& in);

}  // namespace kslab::theory
