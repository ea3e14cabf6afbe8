#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kslab/experiments.hpp"

using namespace kslab;
using namespace kslab::sweep;

namespace {

SweepSpec small_1d_spec() {
    SweepSpec spec;
    spec.base_model.chi = 0.0;  // set per cell
    spec.base_model.a = 0.0;
    spec.base_model.k = 2.0;
    spec.base_model.dim_n = 1;
    spec.grid = Grid::interval(24, 1.0);
    spec.u0_template = model::CosineSpec{1.0, 0.3, {1, 0}};
    spec.v0_template = model::CosineSpec{1.0, 0.0, {0, 0}};
    spec.solver_cfg.t_end = 40.0;
    spec.solver_cfg.dt_max = 0.02;
    spec.solver_cfg.divergence_guard = 50.0;
    spec.workers = 2;
    return spec;
}

}  // namespace

TEST_CASE("sweep validation") {
    SweepSpec spec = small_1d_spec();
    spec.chis = {};
    spec.Ms = {1.0};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.chis = {1.0};
    spec.Ms = {-1.0};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.Ms = {1.0};
    spec.max_runs = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("single pure-diffusion cell converges") {
    SweepSpec spec = small_1d_spec();
    spec.chis = {0.0};
    spec.Ms = {1.0};
    const auto result = run_sweep(spec);
    REQUIRE(result.cells.size() == 1);
    CHECK(result.cells[0].status == CellStatus::Converged);
    CHECK(result.cells[0].kappa.value_or(0.0) > 0.0);
}

TEST_CASE("mass mechanism: converged set is upward-closed and delta grows") {
    // 1-D, a = 0, k = 2: the homogeneous state is linearly stable iff
    // chi < (lambda_1 + 1) M / |Omega|; chi = 8 splits M = 0.5 from M = 4
    SweepSpec spec = small_1d_spec();
    spec.chis = {8.0};
    spec.Ms = {0.5, 4.0};
    const auto result = run_sweep(spec);
    REQUIRE(result.cells.size() == 2);
    CHECK(result.cells[0].status != CellStatus::Converged);
    CHECK(result.cells[1].status == CellStatus::Converged);
    CHECK(result.cells[1].delta_theory > result.cells[0].delta_theory);
    CHECK(result.cells[1].chi_star_theory > result.cells[0].chi_star_theory);
    CHECK(result.constants_source.find("M=4") != std::string::npos);

    const auto cmp = compare_threshold(result);
    CHECK(cmp.consistent);
    REQUIRE(cmp.rows.size() == 2);
    CHECK_FALSE(cmp.rows[0].chi_emp.has_value());
    CHECK(cmp.rows[1].chi_emp.value_or(0.0) == doctest::Approx(8.0));

    std::ostringstream csv;
    write_sweep_csv(csv, result);
    CHECK(csv.str().find("chi,M,seed,status,kappa,r2,t_final,delta_theory,"
                         "chi_star_theory,wall_ms") == 0);
    const std::string summary = summary_json(result, cmp);
    CHECK(summary.find("\"per_M\"") != std::string::npos);
    CHECK(summary.find("caveat") != std::string::npos);
}

TEST_CASE("sweep reruns reproduce statuses and rates") {
    SweepSpec spec = small_1d_spec();
    spec.chis = {0.5, 8.0};
    spec.Ms = {0.5, 2.0};
    spec.solver_cfg.t_end = 20.0;
    const auto r1 = run_sweep(spec);
    const auto r2 = run_sweep(spec);
    REQUIRE(r1.cells.size() == r2.cells.size());
    for (std::size_t i = 0; i < r1.cells.size(); ++i) {
        CHECK(r1.cells[i].status == r2.cells[i].status);
        CHECK(r1.cells[i].kappa.value_or(-1.0) == r2.cells[i].kappa.value_or(-1.0));
        CHECK(r1.cells[i].t_final == r2.cells[i].t_final);
    }
}

TEST_CASE("no cell below the guaranteed threshold diverges") {
    SweepSpec spec = small_1d_spec();
    spec.chis = {0.05, 0.2};
    spec.Ms = {1.0, 4.0};
    spec.solver_cfg.t_end = 30.0;
    const auto result = run_sweep(spec);
    for (const auto& c : result.cells)
        if (c.chi < c.delta_theory) CHECK(c.status != CellStatus::Diverged);
    const auto cmp = compare_threshold(result);
    CHECK(cmp.consistent);
}

TEST_CASE("per-cell failures are recorded without aborting") {
    SweepSpec spec = small_1d_spec();
    spec.base_model.a = 0.0;
    // v0 vanishes away from the bump tail: singular sensitivity faces
    spec.v0_template = model::BumpSpec{1.0, {0.5, 0.0}, 0.01, 0.0};
    spec.chis = {1.0};
    spec.Ms = {1.0};
    const auto result = run_sweep(spec);
    REQUIRE(result.cells.size() == 1);
    CHECK(result.cells[0].status == CellStatus::Error);
    CHECK_FALSE(result.cells[0].error.empty());
    CHECK(result.constants_source == "equilibrium_default");
}

TEST_CASE("empty sweep comparison") {
    SweepResult empty;
    const auto cmp = compare_threshold(empty);
    CHECK(cmp.rows.empty());
    CHECK(cmp.consistent);
}
