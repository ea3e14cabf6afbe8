#include "kslab/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace kslab::model {

SensitivitySpec SensitivitySpec::scaled(double c) {
    if (!(c > 0.0) || c > 1.0)
        throw std::invalid_argument("sensitivity scale must lie in (0, 1]");
    return {SensitivityKind::ScaledPowerLaw, c};
}

void ModelParams::validate() const {
    if (!(chi >= 0.0)) throw std::invalid_argument("chi must be nonnegative");
    if (!(a >= 0.0)) throw std::invalid_argument("a must be nonnegative");
    if (!(k > 1.0)) throw std::invalid_argument("k must exceed 1");
    if (dim_n != 1 && dim_n != 2) throw std::invalid_argument("dim_n must be 1 or 2");
    const double c = sensitivity.c();
    if (!(c > 0.0) || c > 1.0)
        throw std::invalid_argument("sensitivity scale must lie in (0, 1]");
}

double eval_sensitivity(const SensitivitySpec& spec, double a, double k, double s) {
    if (a == 0.0 && s <= 0.0)
        throw std::domain_error("sensitivity is singular at s = 0 when a = 0");
    if (s < 0.0) throw std::domain_error("signal value must be nonnegative");
    return spec.c() * std::pow(a + s, -k);
}

EnvelopeReport validate_envelope(const SensitivitySpec& spec, double a, double k,
                                 std::span<const double> samples) {
    EnvelopeReport rep;
    rep.min_rel_slack = 1.0;
    for (double s : samples) {
        const double env = std::pow(a + s, -k);
        const double val = eval_sensitivity(spec, a, k, s);
        if (val < 0.0 || val > env * (1.0 + 1e-15)) rep.ok = false;
        const double slack = 1.0 - val / env;
        if (slack > rep.max_rel_slack) rep.max_rel_slack = slack;
        if (slack < rep.min_rel_slack) rep.min_rel_slack = slack;
        ++rep.samples;
    }
    if (rep.samples == 0) rep.min_rel_slack = 0.0;
    return rep;
}

namespace {

double cell_center(const Grid& g, int axis, int i) {
    return (i + 0.5) * g.h[axis];
}

Field build_cosine(const Grid& g, const CosineSpec& s) {
    Field f(g);
    const double pi = std::acos(-1.0);
    for (int j = 0; j < g.n[1]; ++j) {
        const double cy = (g.dim == 2 && s.modes[1] != 0)
                              ? std::cos(s.modes[1] * pi * cell_center(g, 1, j) / g.length[1])
                              : 1.0;
        for (int i = 0; i < g.n[0]; ++i) {
            const double cx = (s.modes[0] != 0)
                                  ? std::cos(s.modes[0] * pi * cell_center(g, 0, i) / g.length[0])
                                  : 1.0;
            f[g.index(i, j)] = s.mean + s.amplitude * cx * cy;
        }
    }
    return f;
}

Field build_noise(const Grid& g, const NoiseSpec& s) {
    Field f(g);
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& v : f.values) v = s.mean + s.amplitude * uni(rng);
    return f;
}

Field build_bump(const Grid& g, const BumpSpec& s) {
    if (!(s.width > 0.0)) throw std::invalid_argument("bump width must be positive");
    Field shape(g);
    const double inv2w2 = 1.0 / (2.0 * s.width * s.width);
    for (int j = 0; j < g.n[1]; ++j)
        for (int i = 0; i < g.n[0]; ++i) {
            double d2 = 0.0;
            const double dx = cell_center(g, 0, i) - s.center[0];
            d2 += dx * dx;
            if (g.dim == 2) {
                const double dy = cell_center(g, 1, j) - s.center[1];
                d2 += dy * dy;
            }
            shape[g.index(i, j)] = std::exp(-d2 * inv2w2);
        }
    const double shape_mass = field_mass(shape);
    const double amp = (s.mass - s.floor_value * g.volume()) / shape_mass;
    Field f(g);
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = s.floor_value + amp * shape[i];
    return f;
}

}  // namespace

Field build_field(const Grid& grid, const FieldSpec& spec) {
    return std::visit(
        [&](const auto& s) -> Field {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CosineSpec>) return build_cosine(grid, s);
            else if constexpr (std::is_same_v<T, NoiseSpec>) return build_noise(grid, s);
            else return build_bump(grid, s);
        },
        spec);
}

InitialData build_initial_data(const Grid& grid, const FieldSpec& u0_spec,
                               const FieldSpec& v0_spec) {
    InitialData d;
    d.u0 = build_field(grid, u0_spec);
    d.v0 = build_field(grid, v0_spec);
    if (field_min(d.u0) < 0.0)
        throw std::invalid_argument("initial data rejected: u0 has negative cell values");
    if (field_min(d.v0) < 0.0)
        throw std::invalid_argument("initial data rejected: v0 has negative cell values");
    if (field_max(d.u0) <= 0.0)
        throw std::invalid_argument("initial data rejected: u0 is identically zero");
    if (field_max(d.v0) <= 0.0)
        throw std::invalid_argument("initial data rejected: v0 is identically zero");
    d.mass = field_mass(d.u0);
    if (!(d.mass > 0.0))
        throw std::invalid_argument("initial data rejected: zero total mass");
    d.v_star = field_min(d.v0);
    return d;
}

}  // namespace kslab::model
