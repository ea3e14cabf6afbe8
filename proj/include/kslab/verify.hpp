#pragma once

// Fast property battery behind the `verify` subcommand: the weight-derivative
// identity, the H certification, mass conservation and the v lower bound on a
// short run, the v-energy residual refinement, and the (precondition-gated)
// Lyapunov monotonicity check.

#include <cstdint>
#include <string>
#include <vector>

#include "kslab/config.hpp"

namespace kslab::cli {

enum class PropertyOutcome { Pass, Fail, Skip };

struct PropertyResult {
    std::string name;
    PropertyOutcome outcome = PropertyOutcome::Fail;
    std::string detail;
};

struct PhiBatteryResult {
    bool residuals_ok = false;    // every tuple below 1e-6 at h = 1e-5
    bool richardson_ok = false;   // second-order decay observed
    double worst_residual = 0.0;
    double worst_ratio_low = 0.0;   // smallest observed res(h)/res(h/2)
    double worst_ratio_high = 0.0;  // largest
    int tuples = 0;
    int richardson_eligible = 0;
};

// Random (s, r, a, k) tuples from a fixed stream; the Richardson ratio is
// measured at h = 1e-3 where truncation dominates roundoff.
PhiBatteryResult phi_identity_battery(int n_tuples, std::uint64_t seed);

std::vector<PropertyResult> run_verify_battery(const RunConfig& cfg);

}  // namespace kslab::cli
