#pragma once

// Continuous problem definition: parameters of the drift-diffusion system
//
//   u_t = Lap u - chi div(u S(v) grad v),   v_t = Lap v - v + u,
//
// the admissible sensitivity family S(s) = c/(a+s)^k (0 < c <= 1, k > 1,
// a >= 0), and the initial-data builders with their validity checks.

#include <array>
#include <cstdint>
#include <span>
#include <variant>

#include "kslab/grid.hpp"

namespace kslab::model {

enum class SensitivityKind { PowerLaw, ScaledPowerLaw };

// PowerLaw is ScaledPowerLaw with c = 1; both sit inside the envelope
// 0 <= S(s) <= (a+s)^{-k} by construction.
struct SensitivitySpec {
    SensitivityKind kind = SensitivityKind::PowerLaw;
    double scale = 1.0;  // c in (0, 1]

    double c() const { return kind == SensitivityKind::PowerLaw ? 1.0 : scale; }
    static SensitivitySpec power_law() { return {}; }
    static SensitivitySpec scaled(double c);
};

struct ModelParams {
    double chi = 1.0;  // > 0
    double a = 0.0;    // >= 0
    double k = 2.0;    // > 1
    int dim_n = 2;     // spatial dimension, 1 or 2
    SensitivitySpec sensitivity;

    void validate() const;
};

// S(s) = c/(a+s)^k. Throws std::domain_error for a = 0, s = 0 (singular).
double eval_sensitivity(const SensitivitySpec& spec, double a, double k, double s);

struct EnvelopeReport {
    bool ok = true;
    double max_rel_slack = 0.0;  // max over samples of 1 - S(s)(a+s)^k
    double min_rel_slack = 0.0;
    int samples = 0;
};

// Report-only check of the envelope 0 <= S(s) <= (a+s)^{-k} on a sample set.
EnvelopeReport validate_envelope(const SensitivitySpec& spec, double a, double k,
                                 std::span<const double> samples);

// ---- initial data -------------------------------------------------------

// mean + amplitude * prod_d cos(modes[d] pi x_d / L_d); mode 0 = flat axis.
struct CosineSpec {
    double mean = 1.0;
    double amplitude = 0.0;
    std::array<int, 2> modes{1, 0};
};

// mean + amplitude * U(-1,1) per cell, mt19937_64 stream from `seed`.
struct NoiseSpec {
    double mean = 1.0;
    double amplitude = 0.0;
    std::uint64_t seed = 0;
};

// floor + A exp(-|x-center|^2 / (2 width^2)) with A fixed by the target mass.
struct BumpSpec {
    double mass = 1.0;
    std::array<double, 2> center{0.5, 0.5};
    double width = 0.1;
    double floor_value = 0.0;
};

using FieldSpec = std::variant<CosineSpec, NoiseSpec, BumpSpec>;

struct InitialData {
    Field u0;
    Field v0;
    double mass = 0.0;    // discrete cell-sum quadrature of u0
    double v_star = 0.0;  // discrete min of v0
};

// Evaluates one spec on the grid (no admissibility checks).
Field build_field(const Grid& grid, const FieldSpec& spec);

// Builds (u0, v0) and validates the data conditions: both fields nonnegative,
// neither identically zero, M > 0. Throws std::invalid_argument on rejection.
InitialData build_initial_data(const Grid& grid, const FieldSpec& u0_spec,
                               const FieldSpec& v0_spec);

}  // namespace kslab::model
