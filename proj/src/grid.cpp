#include "kslab/grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kslab {

double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n <= 32) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

static void check_axis(int nc, double len) {
    if (nc < 4) throw std::invalid_argument("grid needs at least 4 cells per axis");
    if (!(len > 0.0)) throw std::invalid_argument("grid lengths must be positive");
}

Grid Grid::interval(int nx, double lx) {
    check_axis(nx, lx);
    Grid g;
    g.dim = 1;
    g.n = {nx, 1};
    g.length = {lx, 0.0};
    g.h = {lx / nx, 0.0};
    return g;
}

Grid Grid::rectangle(int nx, int ny, double lx, double ly) {
    check_axis(nx, lx);
    check_axis(ny, ly);
    Grid g;
    g.dim = 2;
    g.n = {nx, ny};
    g.length = {lx, ly};
    g.h = {lx / nx, ly / ny};
    return g;
}

bool Grid::same_shape(const Grid& o) const {
    return dim == o.dim && n == o.n && length == o.length;
}

double field_min(const Field& f) {
    double m = std::numeric_limits<double>::infinity();
    for (double x : f.values)
        if (x < m) m = x;
    return m;
}

double field_max(const Field& f) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : f.values)
        if (x > m) m = x;
    return m;
}

bool field_all_finite(const Field& f) {
    for (double x : f.values)
        if (!std::isfinite(x)) return false;
    return true;
}

double field_sum(const Field& f) { return pairwise_sum(f.values); }

double field_mass(const Field& f) { return f.grid.cell_volume() * field_sum(f); }

double field_mean(const Field& f) { return field_mass(f) / f.grid.volume(); }

double sup_distance(const Field& f, double ref) {
    double m = 0.0;
    for (double x : f.values) {
        const double d = std::abs(x - ref);
        if (d > m) m = d;
    }
    return m;
}

double l2_distance(const Field& f, double ref) {
    std::vector<double> sq(f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const double d = f.values[i] - ref;
        sq[i] = d * d;
    }
    return std::sqrt(f.grid.cell_volume() * pairwise_sum(sq));
}

double grad_sq_integral(const Field& f) {
    const Grid& g = f.grid;
    const int nx = g.n[0], ny = g.n[1];
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(g.cells()) * g.dim);
    const double vol = g.cell_volume();
    // x faces
    const double ihx = 1.0 / g.h[0];
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const double d = (f[g.index(i + 1, j)] - f[g.index(i, j)]) * ihx;
            terms.push_back(d * d * vol);
        }
    // y faces
    if (g.dim == 2) {
        const double ihy = 1.0 / g.h[1];
        for (int j = 0; j + 1 < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const double d = (f[g.index(i, j + 1)] - f[g.index(i, j)]) * ihy;
                terms.push_back(d * d * vol);
            }
    }
    return pairwise_sum(terms);
}

}  // namespace kslab
