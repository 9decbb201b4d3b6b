#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "asied/lr.hpp"
#include "asied/simulator.hpp"
#include "asied/util.hpp"

namespace asied {

using nlohmann::json;

namespace detail {

inline void require_object(const json& j, const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + " must be an object");
}

inline void reject_unknown_keys(const json& obj, const std::string& context,
                                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown key \"" + it.key() + "\" in " + context);
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& context) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for \"" + std::string(key) + "\" in " + context);
    }
}

inline BiomarkerKind parse_biomarker_kind(const std::string& spec, double lo, double hi) {
    if (spec == "continuous") return BiomarkerKind::continuous(lo, hi);
    if (spec == "binary") return BiomarkerKind::binary();
    const auto colon = spec.find(':');
    if (colon != std::string::npos) {
        const std::string base = spec.substr(0, colon);
        int v = 0;
        try {
            v = std::stoi(spec.substr(colon + 1));
        } catch (...) {
            throw ConfigError("bad level count in biomarker spec: " + spec);
        }
        if (base == "ordinal") return BiomarkerKind::ordinal(v);
        if (base == "categorical") return BiomarkerKind::categorical(v);
    }
    throw ConfigError("unknown biomarker spec: " + spec);
}

inline ScenarioSpec parse_scenario(const json& j, const std::string& context) {
    require_object(j, context);
    reject_unknown_keys(j, context,
                        {"name", "biomarkers", "baseline", "beta0", "beta1", "noise_sd",
                         "region", "range"});
    ScenarioSpec s;
    s.name = get_or<std::string>(j, "name", "scenario", context);
    double lo = -1.0, hi = 1.0;
    if (j.contains("range")) {
        const auto range = j.at("range");
        if (!range.is_array() || range.size() != 2)
            throw ConfigError(context + ".range must be [lo, hi]");
        lo = range.at(0).get<double>();
        hi = range.at(1).get<double>();
    }
    if (!j.contains("biomarkers") || !j.at("biomarkers").is_array())
        throw ConfigError(context + " needs a biomarkers array");
    int index = 0;
    for (const auto& spec : j.at("biomarkers")) {
        s.panel.names.push_back("x" + std::to_string(++index));
        s.panel.kinds.push_back(parse_biomarker_kind(spec.get<std::string>(), lo, hi));
    }
    s.baseline = get_or<double>(j, "baseline", 0.75, context);
    s.beta0 = get_or<double>(j, "beta0", 0.0, context);
    s.beta1 = get_or<double>(j, "beta1", 0.0, context);
    s.noise_sd = get_or<double>(j, "noise_sd", 0.5, context);
    if (j.contains("region")) {
        for (const auto& cj : j.at("region")) {
            require_object(cj, context + ".region[]");
            reject_unknown_keys(cj, context + ".region[]", {"biomarker", "op", "value"});
            AxisCondition cond;
            cond.axis = get_or<int>(cj, "biomarker", 1, context) - 1;
            const std::string op = get_or<std::string>(cj, "op", ">", context);
            if (op == ">") {
                cond.op = AxisCondition::Op::Gt;
            } else if (op == "<") {
                cond.op = AxisCondition::Op::Lt;
            } else if (op == "==") {
                cond.op = AxisCondition::Op::Eq;
            } else {
                throw ConfigError(context + ".region op must be one of >, <, ==");
            }
            cond.value = get_or<double>(cj, "value", 0.0, context);
            s.region.push_back(cond);
        }
    }
    check_scenario(s);
    return s;
}

}  // namespace detail

// Parsed, schema-checked run configuration. Every field defaults except the
// command (a CLI subcommand) and the seed (config "seed" or --seed).
struct RunConfig {
    std::optional<std::uint64_t> seed;
    int decimals = 4;
    TrialConfig trial;
    std::optional<ScenarioSpec> scenario;
    int replicates = 100;
    // calibrate
    std::vector<double> xi1_grid{0.7, 0.8, 0.9};
    std::vector<double> xi2_grid{0.05, 0.1, 0.2};
    RiskCaps caps;
    std::vector<ScenarioSpec> calibrate_scenarios;
    // sensitivity
    std::vector<int> sensitivity_n1{40, 60, 80, 100};
    // identify / baseline-lr
    double identify_xi = 0.9;
    int identify_grid = 20;
    std::string identify_outcome = "auto";
    LrConfig lr;
};

inline RunConfig parse_config(const json& j) {
    detail::require_object(j, "config");
    detail::reject_unknown_keys(j, "config",
                                {"schema_version", "seed", "output", "trial", "chain",
                                 "conjugate", "partition", "scenario", "oc", "calibrate",
                                 "sensitivity", "identify", "lr"});
    const int version = detail::get_or<int>(j, "schema_version", 1, "config");
    if (version != 1) throw ConfigError("unsupported schema_version");

    RunConfig cfg;
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();

    if (j.contains("output")) {
        const auto& out = j.at("output");
        detail::require_object(out, "output");
        detail::reject_unknown_keys(out, "output", {"decimals"});
        cfg.decimals = detail::get_or<int>(out, "decimals", 4, "output");
        if (cfg.decimals < 1 || cfg.decimals > 12)
            throw ConfigError("output.decimals must lie in [1, 12]");
    }

    if (j.contains("trial")) {
        const auto& t = j.at("trial");
        detail::require_object(t, "trial");
        detail::reject_unknown_keys(
            t, "trial", {"N", "n1", "n2", "lrv", "tv", "xi1", "xi2", "candidate_xi", "grid_points"});
        cfg.trial.max_n = detail::get_or<int>(t, "N", 180, "trial");
        cfg.trial.first_interim = detail::get_or<int>(t, "n1", 100, "trial");
        cfg.trial.second_cohort = detail::get_or<int>(t, "n2", 40, "trial");
        cfg.trial.analysis.tpp.lrv = detail::get_or<double>(t, "lrv", 2.37, "trial");
        cfg.trial.analysis.tpp.tv = detail::get_or<double>(t, "tv", 3.08, "trial");
        cfg.trial.analysis.tpp.xi1 = detail::get_or<double>(t, "xi1", 0.8, "trial");
        cfg.trial.analysis.tpp.xi2 = detail::get_or<double>(t, "xi2", 0.1, "trial");
        cfg.trial.analysis.candidate_xi = detail::get_or<double>(t, "candidate_xi", 0.9, "trial");
        cfg.trial.grid_points = detail::get_or<int>(t, "grid_points", 20, "trial");
    }

    if (j.contains("chain")) {
        const auto& c = j.at("chain");
        detail::require_object(c, "chain");
        detail::reject_unknown_keys(c, "chain", {"iterations", "burnin", "thinning", "walk_sd_frac"});
        auto& chain = cfg.trial.analysis.chain;
        chain.iterations = detail::get_or<int>(c, "iterations", 5000, "chain");
        chain.burnin = detail::get_or<int>(c, "burnin", 2000, "chain");
        chain.thinning = detail::get_or<int>(c, "thinning", 1, "chain");
        chain.walk_sd_frac = detail::get_or<double>(c, "walk_sd_frac", 0.1, "chain");
        check_chain_config(chain);
    }

    if (j.contains("conjugate")) {
        const auto& c = j.at("conjugate");
        detail::require_object(c, "conjugate");
        detail::reject_unknown_keys(
            c, "conjugate",
            {"beta_a", "beta_b", "kappa0", "nu0", "empirical_center", "theta0", "sigma0_sq"});
        auto& a = cfg.trial.analysis;
        a.beta_a = detail::get_or<double>(c, "beta_a", 1.0, "conjugate");
        a.beta_b = detail::get_or<double>(c, "beta_b", 1.0, "conjugate");
        a.kappa0 = detail::get_or<double>(c, "kappa0", 0.1, "conjugate");
        a.nu0 = detail::get_or<double>(c, "nu0", 1.0, "conjugate");
        a.empirical_center = detail::get_or<bool>(c, "empirical_center", true, "conjugate");
        a.theta0 = detail::get_or<double>(c, "theta0", 0.0, "conjugate");
        a.sigma0_sq = detail::get_or<double>(c, "sigma0_sq", 1.0, "conjugate");
    }

    if (j.contains("partition")) {
        const auto& p = j.at("partition");
        detail::require_object(p, "partition");
        detail::reject_unknown_keys(p, "partition", {"nu"});
        if (p.contains("nu")) cfg.trial.analysis.nu = p.at("nu").get<std::vector<double>>();
    }

    if (j.contains("scenario"))
        cfg.scenario = detail::parse_scenario(j.at("scenario"), "scenario");

    if (j.contains("oc")) {
        const auto& o = j.at("oc");
        detail::require_object(o, "oc");
        detail::reject_unknown_keys(o, "oc", {"replicates"});
        cfg.replicates = detail::get_or<int>(o, "replicates", 100, "oc");
        if (cfg.replicates < 1) throw ConfigError("oc.replicates must be >= 1");
    }

    if (j.contains("calibrate")) {
        const auto& c = j.at("calibrate");
        detail::require_object(c, "calibrate");
        detail::reject_unknown_keys(c, "calibrate", {"xi1", "xi2", "caps", "scenarios"});
        if (c.contains("xi1")) cfg.xi1_grid = c.at("xi1").get<std::vector<double>>();
        if (c.contains("xi2")) cfg.xi2_grid = c.at("xi2").get<std::vector<double>>();
        if (c.contains("caps")) {
            const auto& caps = c.at("caps");
            detail::require_object(caps, "calibrate.caps");
            detail::reject_unknown_keys(caps, "calibrate.caps", {"fsr", "fgr", "fer"});
            cfg.caps.fsr = detail::get_or<double>(caps, "fsr", 0.05, "calibrate.caps");
            cfg.caps.fgr = detail::get_or<double>(caps, "fgr", 0.10, "calibrate.caps");
            cfg.caps.fer = detail::get_or<double>(caps, "fer", 0.15, "calibrate.caps");
        }
        if (c.contains("scenarios")) {
            int i = 0;
            for (const auto& sj : c.at("scenarios"))
                cfg.calibrate_scenarios.push_back(
                    detail::parse_scenario(sj, "calibrate.scenarios[" + std::to_string(i++) + "]"));
        }
    }

    if (j.contains("sensitivity")) {
        const auto& s = j.at("sensitivity");
        detail::require_object(s, "sensitivity");
        detail::reject_unknown_keys(s, "sensitivity", {"n1"});
        if (s.contains("n1")) cfg.sensitivity_n1 = s.at("n1").get<std::vector<int>>();
    }

    if (j.contains("identify")) {
        const auto& id = j.at("identify");
        detail::require_object(id, "identify");
        detail::reject_unknown_keys(id, "identify", {"lrv", "tv", "xi", "grid_points", "outcome"});
        cfg.trial.analysis.tpp.lrv = detail::get_or<double>(id, "lrv", cfg.trial.analysis.tpp.lrv, "identify");
        cfg.trial.analysis.tpp.tv = detail::get_or<double>(id, "tv", cfg.trial.analysis.tpp.tv, "identify");
        cfg.identify_xi = detail::get_or<double>(id, "xi", 0.9, "identify");
        cfg.identify_grid = detail::get_or<int>(id, "grid_points", 20, "identify");
        cfg.identify_outcome = detail::get_or<std::string>(id, "outcome", "auto", "identify");
        if (cfg.identify_outcome != "auto" && cfg.identify_outcome != "binary" &&
            cfg.identify_outcome != "continuous")
            throw ConfigError("identify.outcome must be auto, binary, or continuous");
    }

    if (j.contains("lr")) {
        const auto& l = j.at("lr");
        detail::require_object(l, "lr");
        detail::reject_unknown_keys(l, "lr",
                                    {"coef_prior_scale", "precision_shape", "precision_rate"});
        cfg.lr.coef_prior_scale = detail::get_or<double>(l, "coef_prior_scale", 20.0, "lr");
        cfg.lr.precision_shape = detail::get_or<double>(l, "precision_shape", 0.1, "lr");
        cfg.lr.precision_rate = detail::get_or<double>(l, "precision_rate", 0.1, "lr");
    }
    cfg.lr.chain = cfg.trial.analysis.chain;

    check_tpp(cfg.trial.analysis.tpp);
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    return parse_config(j);
}

}  // namespace asied
