#include <doctest.h>

#include <cmath>
#include <random>

#include "kslab/model.hpp"

using namespace kslab;
using namespace kslab::model;

TEST_CASE("sensitivity closed form") {
    CHECK(eval_sensitivity(SensitivitySpec::power_law(), 0.0, 2.0, 1.0) == doctest::Approx(1.0));
    CHECK(eval_sensitivity(SensitivitySpec::power_law(), 1.0, 2.0, 1.0) == doctest::Approx(0.25));
    CHECK(eval_sensitivity(SensitivitySpec::scaled(0.5), 1.0, 3.0, 0.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(eval_sensitivity(SensitivitySpec::power_law(), 0.0, 2.0, 0.0),
                    std::domain_error);
    CHECK_THROWS_AS(SensitivitySpec::scaled(1.1), std::invalid_argument);
    CHECK_THROWS_AS(SensitivitySpec::scaled(0.0), std::invalid_argument);
}

TEST_CASE("sensitivity decays strictly in s") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ua(0.0, 2.0), uk(1.1, 4.0), us(1e-3, 50.0);
    for (int i = 0; i < 200; ++i) {
        const double a = ua(rng), k = uk(rng);
        double s1 = us(rng), s2 = us(rng);
        if (s1 == s2) continue;
        if (s1 > s2) std::swap(s1, s2);
        const auto spec = SensitivitySpec::power_law();
        CHECK(eval_sensitivity(spec, a, k, s2) < eval_sensitivity(spec, a, k, s1));
    }
}

TEST_CASE("envelope report") {
    const std::vector<double> samples{0.1, 1.0, 5.0, 42.0};
    auto rep = validate_envelope(SensitivitySpec::power_law(), 1.0, 2.0, samples);
    CHECK(rep.ok);
    CHECK(rep.max_rel_slack == doctest::Approx(0.0).epsilon(1e-14));
    rep = validate_envelope(SensitivitySpec::scaled(0.5), 0.5, 2.5, samples);
    CHECK(rep.ok);
    CHECK(rep.max_rel_slack == doctest::Approx(0.5));
    CHECK(rep.min_rel_slack == doctest::Approx(0.5));
}

TEST_CASE("cosine builder: flat, zero-mean perturbation, rejection") {
    const Grid g = Grid::rectangle(16, 16, 1.0, 1.0);

    SUBCASE("zero amplitude gives the constant field") {
        const auto d = build_initial_data(g, CosineSpec{1.0, 0.0, {1, 1}},
                                          CosineSpec{1.0, 0.0, {0, 0}});
        CHECK(d.mass == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(d.v_star == doctest::Approx(1.0));
        CHECK(field_max(d.u0) == doctest::Approx(1.0));
    }
    SUBCASE("full cosine periods integrate away") {
        const auto d = build_initial_data(g, CosineSpec{1.0, 0.5, {1, 1}},
                                          CosineSpec{1.0, 0.0, {0, 0}});
        CHECK(std::abs(d.mass - 1.0) < 1e-12);
    }
    SUBCASE("amplitude above the mean is rejected") {
        CHECK_THROWS_AS(build_initial_data(g, CosineSpec{1.0, 1.5, {1, 1}},
                                           CosineSpec{1.0, 0.0, {0, 0}}),
                        std::invalid_argument);
    }
}

TEST_CASE("mass report matches an independent recomputation") {
    const Grid g = Grid::interval(64, 2.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uamp(0.0, 0.9);
    for (int trial = 0; trial < 20; ++trial) {
        const double amp = uamp(rng);
        const auto d = build_initial_data(g, CosineSpec{1.0, amp, {2, 0}},
                                          CosineSpec{1.0, 0.0, {0, 0}});
        long double ref = 0.0L;
        for (double x : d.u0.values) ref += x;
        const double mass_ref = static_cast<double>(ref) * g.cell_volume();
        CHECK(std::abs(d.mass - mass_ref) <= 1e-12 * mass_ref);
        CHECK(field_min(d.u0) >= 0.0);
        CHECK(field_max(d.u0) > 0.0);
    }
}

TEST_CASE("noise builder is deterministic in the seed") {
    const Grid g = Grid::interval(32, 1.0);
    const Field a = build_field(g, NoiseSpec{1.0, 0.5, 42});
    const Field b = build_field(g, NoiseSpec{1.0, 0.5, 42});
    const Field c = build_field(g, NoiseSpec{1.0, 0.5, 43});
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(field_min(a) >= 0.5);
}

TEST_CASE("gaussian bump hits the requested mass") {
    const Grid g = Grid::rectangle(32, 32, 1.0, 1.0);
    const auto d = build_initial_data(g, BumpSpec{2.0, {0.5, 0.5}, 0.1, 0.1},
                                      BumpSpec{1.0, {0.5, 0.5}, 0.2, 0.05});
    CHECK(d.mass == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(d.v_star > 0.0);
    CHECK(field_min(d.u0) >= 0.1 - 1e-15);
}

TEST_CASE("builders reject nonpositive data") {
    const Grid g = Grid::interval(16, 1.0);
    CHECK_THROWS_AS(build_initial_data(g, CosineSpec{0.0, 0.0, {0, 0}},
                                       CosineSpec{1.0, 0.0, {0, 0}}),
                    std::invalid_argument);
    // negative floor of the bump
    CHECK_THROWS_AS(build_initial_data(g, BumpSpec{1.0, {0.5, 0.0}, 0.05, -0.2},
                                       CosineSpec{1.0, 0.0, {0, 0}}),
                    std::invalid_argument);
}

TEST_CASE("model params validation") {
    ModelParams p;
    p.chi = 1.0;
    p.a = 0.0;
    p.k = 2.0;
    p.dim_n = 2;
    CHECK_NOTHROW(p.validate());
    p.k = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.k = 2.0;
    p.a = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.a = 0.0;
    p.dim_n = 3;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
