#include "kslab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace kslab::cli {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// Tracks consumed keys so typos like "chi0" vs "chi" fail loudly.
class StrictObj {
public:
    StrictObj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& child(const std::string& key) {
        mark(key);
        if (!j_.contains(key)) throw ConfigError(path_ + "." + key + ": missing");
        return j_.at(key);
    }

    double num(const std::string& key) {
        const json& v = child(key);
        if (!v.is_number()) throw ConfigError(path_ + "." + key + ": expected a number");
        return v.get<double>();
    }
    double num_or(const std::string& key, double dflt) {
        return has(key) ? num(key) : dflt;
    }
    std::optional<double> num_opt(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return num(key);
    }
    long long integer(const std::string& key) {
        const json& v = child(key);
        if (!v.is_number_integer())
            throw ConfigError(path_ + "." + key + ": expected an integer");
        return v.get<long long>();
    }
    long long integer_or(const std::string& key, long long dflt) {
        return has(key) ? integer(key) : dflt;
    }
    bool boolean_or(const std::string& key, bool dflt) {
        if (!has(key)) return dflt;
        const json& v = child(key);
        if (!v.is_boolean()) throw ConfigError(path_ + "." + key + ": expected a boolean");
        return v.get<bool>();
    }
    std::string str(const std::string& key) {
        const json& v = child(key);
        if (!v.is_string()) throw ConfigError(path_ + "." + key + ": expected a string");
        return v.get<std::string>();
    }
    std::string str_or(const std::string& key, const std::string& dflt) {
        return has(key) ? str(key) : dflt;
    }

    void done() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key()))
                throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }

    const std::string& path() const { return path_; }

private:
    void mark(const std::string& key) { used_.insert(key); }
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

std::vector<double> num_array(const json& v, const std::string& path, std::size_t lo,
                              std::size_t hi) {
    if (!v.is_array() || v.size() < lo || v.size() > hi)
        throw ConfigError(path + ": expected an array of " + std::to_string(lo) +
                          (hi != lo ? ".." + std::to_string(hi) : "") + " numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(path + ": expected numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::vector<long long> int_array(const json& v, const std::string& path, std::size_t lo,
                                 std::size_t hi) {
    if (!v.is_array() || v.size() < lo || v.size() > hi)
        throw ConfigError(path + ": expected an array of integers");
    std::vector<long long> out;
    for (const auto& x : v) {
        if (!x.is_number_integer()) throw ConfigError(path + ": expected integers");
        out.push_back(x.get<long long>());
    }
    return out;
}

model::SensitivitySpec parse_sensitivity(const json& j, const std::string& path) {
    StrictObj o(j, path);
    const std::string kind = o.str_or("kind", "power_law");
    model::SensitivitySpec spec;
    if (kind == "power_law") {
        spec = model::SensitivitySpec::power_law();
    } else if (kind == "scaled_power_law") {
        spec = model::SensitivitySpec::scaled(o.num("scale"));
    } else {
        throw ConfigError(path + ".kind: expected power_law or scaled_power_law");
    }
    o.done();
    return spec;
}

model::ModelParams parse_model(const json& j, const std::string& path) {
    StrictObj o(j, path);
    model::ModelParams p;
    p.chi = o.num("chi");
    p.a = o.num("a");
    p.k = o.num("k");
    p.dim_n = static_cast<int>(o.integer("dim_n"));
    if (o.has("sensitivity")) p.sensitivity = parse_sensitivity(o.child("sensitivity"), path + ".sensitivity");
    o.done();
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return p;
}

Grid parse_grid(const json& j, const std::string& path, int dim_n) {
    StrictObj o(j, path);
    const auto ncells = int_array(o.child("n_cells"), path + ".n_cells", 1, 2);
    const auto lens = num_array(o.child("lengths"), path + ".lengths", 1, 2);
    o.done();
    if (ncells.size() != lens.size())
        throw ConfigError(path + ": n_cells and lengths must have matching size");
    if (static_cast<int>(ncells.size()) != dim_n)
        throw ConfigError(path + ": grid dimension must equal model.dim_n");
    try {
        if (ncells.size() == 1)
            return Grid::interval(static_cast<int>(ncells[0]), lens[0]);
        return Grid::rectangle(static_cast<int>(ncells[0]), static_cast<int>(ncells[1]),
                               lens[0], lens[1]);
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

model::FieldSpec parse_field_spec(const json& j, const std::string& path, int dim,
                                  std::uint64_t default_seed) {
    StrictObj o(j, path);
    const std::string kind = o.str("kind");
    model::FieldSpec spec;
    if (kind == "constant_plus_cosine") {
        model::CosineSpec s;
        s.mean = o.num("mean");
        s.amplitude = o.num_or("amplitude", 0.0);
        if (o.has("modes")) {
            const auto m = int_array(o.child("modes"), path + ".modes", dim, dim);
            s.modes = {static_cast<int>(m[0]), m.size() > 1 ? static_cast<int>(m[1]) : 0};
        } else {
            s.modes = {0, 0};
        }
        spec = s;
    } else if (kind == "constant_plus_random_noise") {
        model::NoiseSpec s;
        s.mean = o.num("mean");
        s.amplitude = o.num_or("amplitude", 0.0);
        s.seed = o.has("seed") ? static_cast<std::uint64_t>(o.integer("seed")) : default_seed;
        spec = s;
    } else if (kind == "gaussian_bump") {
        model::BumpSpec s;
        s.mass = o.num("mass");
        const auto c = num_array(o.child("center"), path + ".center", dim, dim);
        s.center = {c[0], c.size() > 1 ? c[1] : 0.0};
        s.width = o.num("width");
        s.floor_value = o.num_or("floor", 0.0);
        spec = s;
    } else {
        throw ConfigError(path + ".kind: expected constant_plus_cosine, "
                          "constant_plus_random_noise or gaussian_bump");
    }
    o.done();
    return spec;
}

solver::SolverConfig parse_solver(const json& j, const std::string& path) {
    StrictObj o(j, path);
    solver::SolverConfig c;
    c.dt_init = o.num_or("dt_init", c.dt_init);
    c.dt_max = o.num_or("dt_max", c.dt_max);
    c.cfl_safety = o.num_or("cfl_safety", c.cfl_safety);
    c.t_end = o.num("t_end");
    c.output_stride = static_cast<int>(o.integer_or("output_stride", c.output_stride));
    c.tol_conv = o.num_or("tol_conv", c.tol_conv);
    c.divergence_guard = o.num_or("divergence_guard", c.divergence_guard);
    const std::string reaction = o.str_or("reaction_treatment", "implicit");
    if (reaction == "implicit") c.reaction_implicit = true;
    else if (reaction == "explicit") c.reaction_implicit = false;
    else throw ConfigError(path + ".reaction_treatment: expected implicit or explicit");
    c.v_source_old_u = o.boolean_or("v_source_old_u", false);
    o.done();
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return c;
}

diag::DiagnosticsConfig parse_diag(const json& j, const std::string& path) {
    StrictObj o(j, path);
    diag::DiagnosticsConfig c;
    c.tail_fraction = o.num_or("tail_fraction", c.tail_fraction);
    c.c0 = o.num_or("c0", c.c0);
    c.K1_override = o.num_opt("K1_override");
    c.K5_override = o.num_opt("K5_override");
    o.done();
    if (!(c.tail_fraction > 0.0) || c.tail_fraction > 1.0)
        throw ConfigError(path + ".tail_fraction: must lie in (0, 1]");
    if (!(c.c0 > 0.0)) throw ConfigError(path + ".c0: must be positive");
    return c;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
    StrictObj o(j, "config");
    RunConfig c;
    c.seed = static_cast<std::uint64_t>(o.integer_or("seed", 0));
    c.model = parse_model(o.child("model"), "config.model");
    c.grid = parse_grid(o.child("grid"), "config.grid", c.model.dim_n);
    {
        StrictObj init(o.child("initial"), "config.initial");
        c.u0 = parse_field_spec(init.child("u0"), "config.initial.u0", c.grid.dim, c.seed);
        c.v0 = parse_field_spec(init.child("v0"), "config.initial.v0", c.grid.dim, c.seed);
        init.done();
    }
    c.solver_cfg = parse_solver(o.child("solver"), "config.solver");
    if (o.has("diagnostics"))
        c.diag_cfg = parse_diag(o.child("diagnostics"), "config.diagnostics");
    c.output_dir = o.str_or("output_dir", "");
    o.done();
    return c;
}

namespace {

ojson field_spec_json(const model::FieldSpec& spec, int dim) {
    ojson j;
    if (const auto* s = std::get_if<model::CosineSpec>(&spec)) {
        j["kind"] = "constant_plus_cosine";
        j["mean"] = s->mean;
        j["amplitude"] = s->amplitude;
        j["modes"] = dim == 1 ? ojson::array({s->modes[0]})
                              : ojson::array({s->modes[0], s->modes[1]});
    } else if (const auto* s2 = std::get_if<model::NoiseSpec>(&spec)) {
        j["kind"] = "constant_plus_random_noise";
        j["mean"] = s2->mean;
        j["amplitude"] = s2->amplitude;
        j["seed"] = s2->seed;
    } else {
        const auto& s3 = std::get<model::BumpSpec>(spec);
        j["kind"] = "gaussian_bump";
        j["mass"] = s3.mass;
        j["center"] = dim == 1 ? ojson::array({s3.center[0]})
                               : ojson::array({s3.center[0], s3.center[1]});
        j["width"] = s3.width;
        j["floor"] = s3.floor_value;
    }
    return j;
}

}  // namespace

ojson resolved_run_config(const RunConfig& c) {
    ojson j;
    j["model"] = {{"chi", c.model.chi},
                  {"a", c.model.a},
                  {"k", c.model.k},
                  {"dim_n", c.model.dim_n}};
    ojson sens;
    if (c.model.sensitivity.kind == model::SensitivityKind::PowerLaw) {
        sens["kind"] = "power_law";
    } else {
        sens["kind"] = "scaled_power_law";
        sens["scale"] = c.model.sensitivity.scale;
    }
    j["model"]["sensitivity"] = sens;
    j["grid"]["n_cells"] = c.grid.dim == 1 ? ojson::array({c.grid.n[0]})
                                           : ojson::array({c.grid.n[0], c.grid.n[1]});
    j["grid"]["lengths"] = c.grid.dim == 1
                               ? ojson::array({c.grid.length[0]})
                               : ojson::array({c.grid.length[0], c.grid.length[1]});
    j["initial"]["u0"] = field_spec_json(c.u0, c.grid.dim);
    j["initial"]["v0"] = field_spec_json(c.v0, c.grid.dim);
    j["solver"] = {{"dt_init", c.solver_cfg.dt_init},
                   {"dt_max", c.solver_cfg.dt_max},
                   {"cfl_safety", c.solver_cfg.cfl_safety},
                   {"t_end", c.solver_cfg.t_end},
                   {"output_stride", c.solver_cfg.output_stride},
                   {"tol_conv", c.solver_cfg.tol_conv},
                   {"divergence_guard", c.solver_cfg.divergence_guard},
                   {"reaction_treatment",
                    c.solver_cfg.reaction_implicit ? "implicit" : "explicit"},
                   {"v_source_old_u", c.solver_cfg.v_source_old_u}};
    j["diagnostics"]["tail_fraction"] = c.diag_cfg.tail_fraction;
    j["diagnostics"]["c0"] = c.diag_cfg.c0;
    if (c.diag_cfg.K1_override) j["diagnostics"]["K1_override"] = *c.diag_cfg.K1_override;
    if (c.diag_cfg.K5_override) j["diagnostics"]["K5_override"] = *c.diag_cfg.K5_override;
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    return j;
}

TheoryConfig parse_theory_config(const json& j) {
    StrictObj o(j, "theory config");
    TheoryConfig c;
    c.inputs.chi0 = o.num("chi0");
    c.inputs.a = o.num("a");
    c.inputs.k = o.num("k");
    c.inputs.dim_n = static_cast<int>(o.integer("dim_n"));
    c.inputs.M = o.num("M");
    c.inputs.v_star = o.num("v_star");
    c.inputs.c0 = o.num_or("c0", 0.05);
    c.inputs.eta_tilde = o.num_opt("eta_tilde");
    c.inputs.M0 = o.num_opt("M0");
    c.lengths = num_array(o.child("lengths"), "theory config.lengths", 1, 2);
    const double vol = c.lengths.size() == 1 ? c.lengths[0] : c.lengths[0] * c.lengths[1];
    // homogeneous-state surrogates unless the caller supplies run estimates
    c.inputs.K1_est = o.num_or("K1_est", 1.0 / (2.0 * vol));
    c.inputs.K5_est = o.num_or("K5_est", 2.0 / vol);
    c.inputs.k_estimates_empirical = false;
    o.done();
    if (static_cast<int>(c.lengths.size()) != c.inputs.dim_n)
        throw ConfigError("theory config.lengths: size must equal dim_n");
    c.inputs.C_P = theory::poincare_constant(c.lengths);
    return c;
}

SweepConfig parse_sweep_config(const json& j) {
    StrictObj o(j, "sweep config");
    SweepConfig c;

    auto parse_axis = [&](const json& jv, const std::string& path) {
        StrictObj ax(jv, path);
        std::vector<double> values;
        if (ax.has("values")) {
            values = num_array(ax.child("values"), path + ".values", 1, 4096);
        } else if (ax.has("log_range")) {
            StrictObj lr(ax.child("log_range"), path + ".log_range");
            const double from = lr.num("from"), to = lr.num("to");
            const long long count = lr.integer("count");
            lr.done();
            if (!(from > 0.0) || !(to > from) || count < 2)
                throw ConfigError(path + ".log_range: need 0 < from < to and count >= 2");
            for (long long i = 0; i < count; ++i)
                values.push_back(from * std::pow(to / from,
                                                 static_cast<double>(i) / (count - 1)));
        } else {
            throw ConfigError(path + ": expected values or log_range");
        }
        ax.done();
        return values;
    };

    c.spec.chis = parse_axis(o.child("chi"), "sweep config.chi");
    c.spec.Ms = parse_axis(o.child("M"), "sweep config.M");
    c.spec.repetitions = static_cast<int>(o.integer_or("repetitions", 1));
    c.spec.workers = static_cast<int>(o.integer_or("workers", 1));
    c.spec.max_runs = static_cast<int>(o.integer_or("max_runs", 256));
    c.spec.seed = static_cast<std::uint64_t>(o.integer_or("seed", 0));

    {
        StrictObj tmpl(o.child("template"), "sweep config.template");
        c.spec.base_model = parse_model(tmpl.child("model"), "sweep config.template.model");
        c.spec.grid = parse_grid(tmpl.child("grid"), "sweep config.template.grid",
                                 c.spec.base_model.dim_n);
        {
            StrictObj init(tmpl.child("initial"), "sweep config.template.initial");
            c.spec.u0_template = parse_field_spec(init.child("u0"),
                                                  "sweep config.template.initial.u0",
                                                  c.spec.grid.dim, c.spec.seed);
            c.spec.v0_template = parse_field_spec(init.child("v0"),
                                                  "sweep config.template.initial.v0",
                                                  c.spec.grid.dim, c.spec.seed);
            init.done();
        }
        c.spec.solver_cfg = parse_solver(tmpl.child("solver"), "sweep config.template.solver");
        if (tmpl.has("diagnostics"))
            c.spec.diag_cfg =
                parse_diag(tmpl.child("diagnostics"), "sweep config.template.diagnostics");
        tmpl.done();
    }
    c.output_dir = o.str_or("output_dir", "");
    o.done();
    return c;
}

void apply_override(json& j, const std::string& key_eq_value) {
    const auto eq = key_eq_value.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key.path=value, got '" + key_eq_value + "'");
    const std::string path = key_eq_value.substr(0, eq);
    const std::string raw = key_eq_value.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;  // plain string
    }
    json* node = &j;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw ConfigError("--set: empty path segment in '" + path + "'");
        parts.push_back(part);
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &((*node)[parts[i]]);
    (*node)[parts.back()] = value;
}

ojson theory_report_json(const theory::TheoryReport& rep) {
    ojson j;
    j["eta"] = rep.eta;
    j["chi_star"] = rep.chi_star;
    j["p"] = rep.pe.p;
    j["eps"] = rep.pe.eps;
    j["r"] = rep.pe.r;
    j["margin"] = rep.pe.margin;
    j["C_P"] = rep.C_P;
    j["delta1"] = rep.delta1;
    j["delta"] = rep.delta;
    if (rep.delta_mass_independent)
        j["delta_mass_independent"] = *rep.delta_mass_independent;
    ojson prov;
    for (const auto& [key, p] : rep.provenance) prov[key] = theory::provenance_name(p);
    j["provenance"] = prov;
    return j;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
}

}  // namespace kslab::cli
