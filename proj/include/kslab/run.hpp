#pragma once

// Time-integration driver: advances the state until convergence to the
// homogeneous value, the time horizon, or the divergence guard, recording one
// diagnostics row every output stride. Deterministic given config and seed.

#include <string>
#include <vector>

#include "kslab/diagnostics.hpp"
#include "kslab/solver.hpp"

namespace kslab::solver {

struct RunResult {
    RunStatus status = RunStatus::TEndReached;
    std::vector<diag::DiagRecord> records;
    double t_final = 0.0;
    long steps = 0;
    std::string note;        // populated on dt underflow / guard trips
    double K_used = 0.0;     // Lyapunov weight of the F column
    double lp_p = 0.0;       // exponent of the weighted L^p column
    double lp_r = 0.0;
    double mass = 0.0;       // discrete initial mass M
    double u0_mean = 0.0;
    double v_star = 0.0;     // min of v0
    double max_mass_drift = 0.0;  // max |mass - M|/M over records
};

RunResult run(const model::ModelParams& params, const Grid& grid,
              const model::InitialData& init, const SolverConfig& cfg,
              const diag::DiagnosticsConfig& dcfg);

}  // namespace kslab::solver
