#pragma once

// Shared error types and small numeric helpers.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace kslab {

// Configuration / input-file problems (maps to CLI exit code 64).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The (p, eps) search found no feasible grid point.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The exponent of the weight function exceeded the overflow cap.
struct SaturationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Empty bracket in the Lyapunov-weight selection.
struct BracketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mass-threshold grid search exhausted its range.
struct SearchRangeError : std::runtime_error {
    double largest_tried = 0.0;
    SearchRangeError(const std::string& msg, double largest)
        : std::runtime_error(msg), largest_tried(largest) {}
};

// Decay-rate fit could not assemble a usable window.
struct FitWindowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Trajectory too short for tail statistics.
struct ShortTrajectoryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Hard failure inside the time stepper (maps to CLI exit code 70).
struct SolverError : std::runtime_error {
    long step = -1;
    double t = 0.0;
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
    SolverError(const std::string& msg, long step_, double t_)
        : std::runtime_error(msg + " (step " + std::to_string(step_) +
                             ", t=" + std::to_string(t_) + ")"),
          step(step_), t(t_) {}
};

// Time step fell below the hard floor; reported as suspected blow-up.
struct DtUnderflowError : SolverError {
    using SolverError::SolverError;
};

// Deterministic pairwise summation. Fixed reduction order so that repeated
// runs and reordered parallel callers reproduce results bit for bit.
double pairwise_sum(std::span<const double> xs);

}  // namespace kslab
