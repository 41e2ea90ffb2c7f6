// config.hpp
//
// JSON configuration, profile serialization and CSV/JSON report writers.
// Requires nlohmann/json.
#pragma once

#include "bounds.hpp"
#include "error.hpp"
#include "kernel.hpp"
#include "markov.hpp"
#include "montecarlo.hpp"
#include "proof_checks.hpp"
#include "ustatistic.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace ustat {

using json = nlohmann::json;

/// Any malformed or inconsistent configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("ConfigError: " + msg) {}
};

struct PropositionSettings {
    std::size_t n_max = 8;
    std::vector<double> p_values{0.5, 1.0};
    std::size_t lemma6_instances = 1000;
    std::size_t lemma6_points = 10;
    std::size_t count_n_max = 10;
};

/// Everything a CLI run needs. The chain, initial law and kernel are resolved;
/// sections a subcommand does not use keep their defaults.
struct RunConfig {
    explicit RunConfig(ExperimentConfig e) : experiment(std::move(e)) {}

    ExperimentConfig experiment;
    std::size_t simulate_n = 1000;
    PropositionSettings propositions;
    std::vector<std::string> notes;
};

inline const char* config_schema() {
    return R"schema({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "ustat run configuration",
  "type": "object",
  "required": ["chain"],
  "properties": {
    "chain": {
      "type": "object",
      "required": ["states", "matrix"],
      "properties": {
        "states": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "matrix": {"type": "array", "items": {"type": "array", "items": {"type": "number", "minimum": 0}}},
        "v": {"type": "array", "items": {"type": "number", "minimum": 1}},
        "labels": {"type": "array", "items": {"type": "string"}}
      }
    },
    "initial": {
      "description": "\"stationary\", \"uniform\", {\"dirac\": index} or a probability vector",
      "oneOf": [
        {"enum": ["stationary", "uniform"]},
        {"type": "object", "required": ["dirac"], "properties": {"dirac": {"type": "integer", "minimum": 0}}},
        {"type": "array", "items": {"type": "number", "minimum": 0}}
      ]
    },
    "kernel": {"$ref": "#/$defs/kernel"},
    "canonicalize": {"type": "boolean", "description": "replace h by its canonical part under pi"},
    "profile": {"$ref": "#/$defs/profile"},
    "k_max": {"type": "integer", "minimum": 1},
    "n_grid": {"type": "array", "items": {"type": "integer", "minimum": 1}},
    "replicates": {"type": "integer", "minimum": 2},
    "master_seed": {"type": "integer", "minimum": 0},
    "exact_max_n": {"type": "integer", "minimum": 0},
    "bounds": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["kind"],
        "properties": {
          "kind": {"enum": ["theorem1", "corollary2", "corollary3"]},
          "p": {"type": "number", "exclusiveMinimum": 0}
        }
      }
    },
    "slln": {
      "type": "object",
      "properties": {
        "n_max": {"type": "integer", "minimum": 1},
        "checkpoints": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "delta": {"type": "number", "exclusiveMinimum": 0}
      }
    },
    "simulate": {"type": "object", "properties": {"n": {"type": "integer", "minimum": 1}}},
    "propositions": {
      "type": "object",
      "properties": {
        "n_max": {"type": "integer", "minimum": 2},
        "p_values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "lemma6_instances": {"type": "integer", "minimum": 0},
        "lemma6_points": {"type": "integer", "minimum": 1},
        "count_n_max": {"type": "integer", "minimum": 1}
      }
    }
  },
  "$defs": {
    "kernel": {
      "type": "object",
      "description": "builtin kernel or dense table (nested arrays of depth m)",
      "properties": {
        "builtin": {"enum": ["product", "additive", "indicator-diag", "gaussian-rbf", "constant", "sum"]},
        "degree": {"type": "integer", "minimum": 1},
        "center": {"description": "number or \"stationary-mean\"", "oneOf": [{"type": "number"}, {"const": "stationary-mean"}]},
        "bandwidth": {"type": "number", "exclusiveMinimum": 0},
        "value": {"type": "number"},
        "terms": {
          "type": "array",
          "items": {"type": "object", "required": ["weight", "kernel"],
                    "properties": {"weight": {"type": "number"}, "kernel": {"$ref": "#/$defs/kernel"}}}
        },
        "table": {"type": "array"}
      }
    },
    "profile": {
      "type": "object",
      "required": ["provenance", "rho"],
      "properties": {
        "provenance": {"enum": ["certified", "declared"]},
        "v": {"type": "array", "items": {"type": "number", "minimum": 1}},
        "rho": {
          "oneOf": [
            {"type": "object", "required": ["geometric"],
             "properties": {"geometric": {"type": "object", "required": ["c", "varrho"]}}},
            {"type": "object", "required": ["table"],
             "properties": {"table": {"type": "array", "items": {"type": "number", "minimum": 0}},
                            "tail_factor": {"type": "number"}, "tail_block": {"type": "integer"}}},
            {"const": "zero"}
          ]
        },
        "drift": {"type": "object", "properties": {"lambda": {"type": "number"}, "b": {"type": "number"}}},
        "m": {"type": "number", "minimum": 1}
      }
    }
  }
}
)schema";
}

namespace detail {

inline const json& need(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing \"" + key + "\"");
    return j.at(key);
}

inline double as_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

inline std::uint64_t as_count(const json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0)
        throw ConfigError(where + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
}

inline std::vector<double> as_numbers(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("\"") + key + "\": " + e.what());
    }
}

inline void flatten_table(const json& j, std::size_t depth, std::size_t s, std::vector<double>& out,
                          const std::string& where) {
    if (depth == 0) {
        out.push_back(as_number(j, where));
        return;
    }
    if (!j.is_array() || j.size() != s)
        throw ConfigError(where + ": dense kernel table must have " + std::to_string(s) + " entries per level");
    for (std::size_t i = 0; i < s; ++i) flatten_table(j[i], depth - 1, s, out, where + "[" + std::to_string(i) + "]");
}

inline std::size_t table_depth(const json& j) {
    std::size_t d = 0;
    const json* cur = &j;
    while (cur->is_array() && !cur->empty()) {
        ++d;
        cur = &(*cur)[0];
    }
    return d;
}

}  // namespace detail

inline FiniteKernel parse_chain(const json& j) {
    const std::string where = "chain";
    auto states = detail::as_numbers(detail::need(j, "states", where), "chain.states");
    const json& rows = detail::need(j, "matrix", where);
    if (!rows.is_array() || rows.size() != states.size())
        throw ConfigError("chain.matrix must have one row per state");
    Eigen::MatrixXd p(static_cast<Eigen::Index>(states.size()), static_cast<Eigen::Index>(states.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto row = detail::as_numbers(rows[i], "chain.matrix[" + std::to_string(i) + "]");
        if (row.size() != states.size()) throw ConfigError("chain.matrix must be square");
        for (std::size_t k = 0; k < row.size(); ++k) p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
    }
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = detail::get_or<std::vector<std::string>>(j, "labels", {});
    try {
        return FiniteKernel(std::move(states), std::move(p), std::move(labels));
    } catch (const Error& e) {
        throw ConfigError(std::string("chain: ") + e.what());
    }
}

inline std::vector<double> parse_v(const json& chain) {
    if (!chain.contains("v")) return {};
    return detail::as_numbers(chain.at("v"), "chain.v");
}

inline Distribution parse_initial(const json& j, const FiniteKernel& chain) {
    const std::size_t s = chain.size();
    try {
        if (j.is_null() || (j.is_string() && j.get<std::string>() == "stationary")) return stationary(chain);
        if (j.is_string() && j.get<std::string>() == "uniform") return Distribution::uniform(s);
        if (j.is_object() && j.contains("dirac")) return Distribution::dirac(s, detail::as_count(j.at("dirac"), "initial.dirac"));
        if (j.is_array()) return Distribution(detail::as_numbers(j, "initial"));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("initial: ") + e.what());
    }
    throw ConfigError("initial must be \"stationary\", \"uniform\", {\"dirac\": i} or a probability vector");
}

/// Builtin kernel; "stationary-mean" centres are resolved against pi.
inline SymmetricKernel parse_builtin(const json& j, const Distribution& pi, const FiniteKernel& chain,
                                     std::optional<std::size_t> inherited_degree = std::nullopt) {
    const std::string name = detail::get_or<std::string>(j, "builtin", "");
    std::size_t m = inherited_degree.value_or(0);
    if (j.contains("degree")) m = detail::as_count(j.at("degree"), "kernel.degree");
    if (m == 0 && name != "sum") throw ConfigError("kernel.degree must be >= 1");
    auto center = [&]() -> double {
        if (!j.contains("center")) return 0.0;
        const json& c = j.at("center");
        if (c.is_string() && c.get<std::string>() == "stationary-mean") return pi.expect(chain.values());
        return detail::as_number(c, "kernel.center");
    };
    if (name == "product") return kernels::product(m, center());
    if (name == "additive") return kernels::additive(m, center());
    if (name == "indicator-diag") return kernels::indicator_diag(m);
    if (name == "gaussian-rbf") return kernels::gaussian_rbf(m, detail::as_number(detail::need(j, "bandwidth", "kernel"), "kernel.bandwidth"));
    if (name == "constant") return kernels::constant(m, detail::as_number(detail::need(j, "value", "kernel"), "kernel.value"));
    if (name == "sum") {
        const json& terms = detail::need(j, "terms", "kernel");
        if (!terms.is_array() || terms.empty()) throw ConfigError("kernel.terms must be a non-empty array");
        std::vector<std::pair<double, SymmetricKernel>> parts;
        for (const auto& t : terms) {
            const double w = detail::as_number(detail::need(t, "weight", "kernel.terms"), "kernel.terms.weight");
            parts.emplace_back(w, parse_builtin(detail::need(t, "kernel", "kernel.terms"), pi, chain,
                                                m ? std::optional<std::size_t>(m) : std::nullopt));
        }
        try {
            return kernels::weighted_sum(std::move(parts));
        } catch (const Error& e) {
            throw ConfigError(std::string("kernel: ") + e.what());
        }
    }
    throw ConfigError("unknown kernel builtin \"" + name + "\"");
}

inline TabulatedKernel parse_kernel(const json& j, const Distribution& pi, const FiniteKernel& chain,
                                    std::uint64_t budget) {
    if (!j.is_object()) throw ConfigError("kernel must be an object");
    if (j.contains("table")) {
        const json& t = j.at("table");
        const std::size_t m = j.contains("degree") ? detail::as_count(j.at("degree"), "kernel.degree") : detail::table_depth(t);
        if (m == 0) throw ConfigError("kernel.table must be a nested array");
        std::vector<double> flat;
        detail::flatten_table(t, m, chain.size(), flat, "kernel.table");
        TabulatedKernel h(chain.size(), m, std::move(flat));
        if (!h.is_symmetric(1e-12)) throw ConfigError("kernel.table is not symmetric under argument permutation");
        return h;
    }
    try {
        return TabulatedKernel::tabulate(parse_builtin(j, pi, chain), chain.values(), budget);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("kernel: ") + e.what());
    }
}

inline ErgodicityProfile parse_profile(const json& j, std::vector<double> default_v) {
    const std::string prov_text = detail::get_or<std::string>(j, "provenance", "");
    Provenance prov;
    if (prov_text == "certified") prov = Provenance::certified;
    else if (prov_text == "declared") prov = Provenance::declared;
    else throw ConfigError("profile.provenance must be \"certified\" or \"declared\"");
    std::vector<double> v = j.contains("v") ? detail::as_numbers(j.at("v"), "profile.v") : std::move(default_v);
    const json& rho = detail::need(j, "rho", "profile");
    try {
        std::optional<ErgodicityProfile> out;
        if (rho.is_string() && rho.get<std::string>() == "zero") {
            out = ErgodicityProfile::zero(std::move(v), prov);
        } else if (rho.is_object() && rho.contains("geometric")) {
            const json& g = rho.at("geometric");
            out = ErgodicityProfile::geometric(std::move(v), detail::as_number(detail::need(g, "c", "rho.geometric"), "c"),
                                               detail::as_number(detail::need(g, "varrho", "rho.geometric"), "varrho"), prov);
        } else if (rho.is_object() && rho.contains("table")) {
            ExplicitRho e;
            e.table = detail::as_numbers(rho.at("table"), "rho.table");
            e.tail_factor = detail::get_or<double>(rho, "tail_factor", 0.0);
            e.tail_block = detail::get_or<std::size_t>(rho, "tail_block", 1);
            out = ErgodicityProfile(std::move(v), std::move(e), prov);
        } else {
            throw ConfigError("profile.rho must be \"zero\", {\"geometric\": ...} or {\"table\": ...}");
        }
        if (j.contains("drift")) {
            const json& d = j.at("drift");
            if (d.contains("lambda")) out->drift_lambda = detail::as_number(d.at("lambda"), "drift.lambda");
            if (d.contains("b")) out->drift_b = detail::as_number(d.at("b"), "drift.b");
        }
        if (j.contains("m")) out->declared_m = detail::as_number(j.at("m"), "profile.m");
        return *out;
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("profile: ") + e.what());
    }
}

inline json profile_to_json(const ErgodicityProfile& p) {
    json j;
    j["provenance"] = to_string(p.provenance());
    j["v"] = std::vector<double>(p.v().begin(), p.v().end());
    if (const auto* e = std::get_if<ExplicitRho>(&p.rho_spec())) {
        j["rho"] = {{"table", e->table}, {"tail_factor", e->tail_factor}, {"tail_block", e->tail_block}};
    } else {
        const auto& g = std::get<GeometricRho>(p.rho_spec());
        j["rho"] = {{"geometric", {{"c", g.c}, {"varrho", g.varrho}}}};
    }
    if (p.drift_lambda || p.drift_b) {
        j["drift"] = json::object();
        if (p.drift_lambda) j["drift"]["lambda"] = *p.drift_lambda;
        if (p.drift_b) j["drift"]["b"] = *p.drift_b;
    }
    if (p.declared_m) j["m"] = *p.declared_m;
    return j;
}

inline BoundKind parse_bound_kind(const std::string& s) {
    if (s == "theorem1") return BoundKind::theorem1;
    if (s == "corollary2") return BoundKind::corollary2;
    if (s == "corollary3") return BoundKind::corollary3;
    throw ConfigError("unknown bound kind \"" + s + "\"");
}

inline RunConfig parse_config(const json& j, std::uint64_t budget = kDefaultEnumerationBudget) {
    if (!j.is_object()) throw ConfigError("top level must be an object");
    static const std::vector<std::string> known{"chain",  "initial", "kernel",      "canonicalize", "profile",
                                                "k_max",  "n_grid",  "replicates",  "master_seed",  "exact_max_n",
                                                "bounds", "slln",    "simulate",    "propositions"};
    for (const auto& item : j.items())
        if (std::find(known.begin(), known.end(), item.key()) == known.end())
            throw ConfigError("unknown key \"" + item.key() + "\"");

    const FiniteKernel chain = parse_chain(detail::need(j, "chain", "config"));
    const std::vector<double> v = parse_v(j.at("chain"));
    if (!v.empty() && v.size() != chain.size()) throw ConfigError("chain.v must have one entry per state");
    Distribution pi;
    try {
        pi = stationary(chain);
    } catch (const Error& e) {
        throw ConfigError(std::string("chain: ") + e.what());
    }
    Distribution mu = parse_initial(j.contains("initial") ? j.at("initial") : json(), chain);

    RunConfig rc(ExperimentConfig(chain, mu, TabulatedKernel(chain.size(), 1, std::vector<double>(chain.size(), 0.0)), v));
    ExperimentConfig& e = rc.experiment;
    if (j.contains("kernel")) {
        e.h = parse_kernel(j.at("kernel"), pi, chain, budget);
        e.kernel_name = detail::get_or<std::string>(j.at("kernel"), "builtin", "table");
    } else {
        e.kernel_name = "none";
    }
    if (detail::get_or<bool>(j, "canonicalize", false)) {
        e.h = canonical_part(e.h, pi);
        e.kernel_name += "/canonical";
    }
    if (j.contains("profile")) e.profile = parse_profile(j.at("profile"), e.v_or_one());
    e.k_max = detail::get_or<std::size_t>(j, "k_max", e.k_max);
    e.replicates = detail::get_or<std::size_t>(j, "replicates", e.replicates);
    e.master_seed = detail::get_or<std::uint64_t>(j, "master_seed", e.master_seed);
    e.exact_max_n = detail::get_or<std::size_t>(j, "exact_max_n", e.exact_max_n);
    e.budget = budget;
    if (j.contains("n_grid")) {
        for (const auto& x : j.at("n_grid")) e.n_grid.push_back(detail::as_count(x, "n_grid"));
    }
    if (j.contains("bounds")) {
        for (const auto& b : j.at("bounds")) {
            BoundRequest r;
            r.kind = parse_bound_kind(detail::get_or<std::string>(b, "kind", ""));
            if (b.contains("p")) r.p = detail::as_number(b.at("p"), "bounds.p");
            e.bounds.push_back(r);
        }
    }
    if (j.contains("slln")) {
        const json& s = j.at("slln");
        e.slln.n_max = detail::get_or<std::size_t>(s, "n_max", e.slln.n_max);
        e.slln.delta = detail::get_or<double>(s, "delta", e.slln.delta);
        if (s.contains("checkpoints"))
            for (const auto& x : s.at("checkpoints")) e.slln.checkpoints.push_back(detail::as_count(x, "slln.checkpoints"));
    }
    if (j.contains("simulate")) rc.simulate_n = detail::get_or<std::size_t>(j.at("simulate"), "n", rc.simulate_n);
    if (j.contains("propositions")) {
        const json& p = j.at("propositions");
        auto& ps = rc.propositions;
        ps.n_max = detail::get_or<std::size_t>(p, "n_max", ps.n_max);
        ps.p_values = detail::get_or<std::vector<double>>(p, "p_values", ps.p_values);
        ps.lemma6_instances = detail::get_or<std::size_t>(p, "lemma6_instances", ps.lemma6_instances);
        ps.lemma6_points = detail::get_or<std::size_t>(p, "lemma6_points", ps.lemma6_points);
        ps.count_n_max = detail::get_or<std::size_t>(p, "count_n_max", ps.count_n_max);
    }
    try {
        e.validate();
    } catch (const Error& err) {
        throw ConfigError(err.what());
    }
    return rc;
}

inline RunConfig load_config(const std::string& path, std::uint64_t budget = kDefaultEnumerationBudget) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j, budget);
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

inline void write_variance_csv(std::ostream& os, const std::vector<BoundReport>& rows) {
    os << "n,estimate,stderr,bound_name,bound,margin,pass\n";
    for (const auto& r : rows)
        os << r.n << ',' << (r.estimate ? format_number(*r.estimate) : "") << ',' << format_number(r.std_error) << ','
           << r.bound_name << ',' << format_number(r.bound) << ',' << (r.margin ? format_number(*r.margin) : "") << ','
           << (r.pass ? "true" : "false") << '\n';
}

inline void write_bounds_csv(std::ostream& os, const std::vector<BoundReport>& rows) {
    os << "n,m,bound_name,value,empirical_l2,margin,provenance\n";
    for (const auto& r : rows)
        os << r.n << ',' << r.m << ',' << r.bound_name << ',' << format_number(r.bound) << ','
           << (r.estimate ? format_number(*r.estimate) : "") << ',' << (r.margin ? format_number(*r.margin) : "") << ','
           << r.provenance << '\n';
}

inline json report_to_json(const BoundReport& r) {
    json j{{"n", r.n},           {"m", r.m},         {"bound_name", r.bound_name}, {"value", r.bound},
           {"stderr", r.std_error}, {"pass", r.pass}, {"provenance", r.provenance}, {"inputs_hash", r.inputs_hash}};
    j["empirical_l2"] = r.estimate ? json(*r.estimate) : json();
    j["margin"] = r.margin ? json(*r.margin) : json();
    return j;
}

inline void write_slln_csv(std::ostream& os, const SllnExperiment& s) {
    os << "n,u_n,target,abs_error\n";
    for (const auto& r : s.rows)
        os << r.n << ',' << format_number(r.u_n) << ',' << format_number(r.target) << ',' << format_number(r.abs_error)
           << '\n';
}

inline json summary_to_json(const CheckSummary& c) {
    return json{{"name", c.name},
                {"instances", c.instances},
                {"violations", c.violations},
                {"max_ratio", c.max_ratio},
                {"worst_case_tuple", c.worst_case_tuple},
                {"worst_case_sigma", c.worst_case_sigma},
                {"pass", c.passed()}};
}

}  // namespace ustat
