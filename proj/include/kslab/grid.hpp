#pragma once

// Uniform structured cell grids over an interval or a rectangle, plus the
// cell-averaged scalar fields that live on them. Homogeneous Neumann boundary
// semantics throughout: ghost values by reflection, zero boundary flux.

#include <array>
#include <cstddef>
#include <vector>

#include "kslab/common.hpp"

namespace kslab {

// Cell (i,j) has center ((i+0.5)h0, (j+0.5)h1) and linear index j*n[0]+i
// (row-major, x fastest). In 1-D the y axis is degenerate (n[1]=1).
struct Grid {
    int dim = 1;
    std::array<int, 2> n{4, 1};
    std::array<double, 2> length{1.0, 0.0};
    std::array<double, 2> h{0.25, 0.0};

    static Grid interval(int nx, double lx);
    static Grid rectangle(int nx, int ny, double lx, double ly);

    int cells() const { return n[0] * n[1]; }
    double cell_volume() const { return dim == 1 ? h[0] : h[0] * h[1]; }
    double volume() const { return dim == 1 ? length[0] : length[0] * length[1]; }
    int index(int i, int j = 0) const { return j * n[0] + i; }
    double min_h() const { return dim == 1 ? h[0] : (h[0] < h[1] ? h[0] : h[1]); }
    bool same_shape(const Grid& o) const;
};

// Cell-averaged scalar function on a Grid (houses u and v snapshots).
struct Field {
    Grid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0)
        : grid(g), values(static_cast<std::size_t>(g.cells()), fill) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

double field_min(const Field& f);
double field_max(const Field& f);
bool field_all_finite(const Field& f);

// Discrete cell-sum quadratures (deterministic pairwise reductions).
double field_sum(const Field& f);                    // plain sum of cell values
double field_mass(const Field& f);                   // cell_volume * sum
double field_mean(const Field& f);                   // mass / |Omega|
double sup_distance(const Field& f, double ref);     // ||f - ref||_inf
double l2_distance(const Field& f, double ref);      // sqrt(int (f-ref)^2)

// Face-difference quadrature of int |grad f|^2 (interior faces only; Neumann
// faces contribute zero).
double grad_sq_integral(const Field& f);

}  // namespace kslab
