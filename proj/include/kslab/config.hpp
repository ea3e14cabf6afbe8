#pragma once

// JSON run configuration: strict schema (unknown keys rejected), defaults
// materialized on resolve, dotted-path overrides. JSON is the single
// structured format; CSV is reserved for dense time series.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kslab/diagnostics.hpp"
#include "kslab/experiments.hpp"
#include "kslab/model.hpp"
#include "kslab/solver.hpp"
#include "kslab/theory.hpp"

namespace kslab::cli {

struct RunConfig {
    model::ModelParams model;
    Grid grid;
    model::FieldSpec u0 = model::CosineSpec{};
    model::FieldSpec v0 = model::CosineSpec{};
    solver::SolverConfig solver_cfg;
    diag::DiagnosticsConfig diag_cfg;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
};

// Throws ConfigError on schema violations (unknown keys, bad types/values).
RunConfig parse_run_config(const nlohmann::json& j);

// Full effective configuration; feeding it back reproduces the run.
nlohmann::ordered_json resolved_run_config(const RunConfig& c);

struct TheoryConfig {
    theory::TheoryInputs inputs;
    std::vector<double> lengths;
};

TheoryConfig parse_theory_config(const nlohmann::json& j);

struct SweepConfig {
    sweep::SweepSpec spec;
    std::string output_dir = "out";
};

SweepConfig parse_sweep_config(const nlohmann::json& j);

// Applies a --set key.path=value override onto raw JSON; the value is parsed
// as JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::json& j, const std::string& key_eq_value);

nlohmann::ordered_json theory_report_json(const theory::TheoryReport& rep);

// Reads + parses a JSON file; throws ConfigError with a path-bearing message.
nlohmann::json load_json_file(const std::string& path);

}  // namespace kslab::cli
