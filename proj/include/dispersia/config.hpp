#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dispersia/distributions.hpp"
#include "dispersia/errors.hpp"
#include "dispersia/mc.hpp"

// JSON experiment configuration. Schema (unknown keys are rejected):
//   family          string, required: exponential|gamma|weibull|lognormal|poisson|binomial
//   parameter_grid  array of numbers, required, non-empty
//   fixed_params    object name->number; together with the grid it must cover
//                   the family's parameters, leaving exactly one to sweep
//   sample_sizes    array of integers >= 2, required, non-empty
//   replicates      integer >= 1, default 10000
//   master_seed     unsigned integer, default 42
//   level           number in (0,1), default 0.05
//   fit_family      string, optional (custom rejection scenarios only)

namespace dispersia {

namespace detail {

inline double config_number(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw config_error(path + ": expected a number");
    return j.get<double>();
}

inline long config_integer(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number_integer()) throw config_error(path + ": expected an integer");
    return j.get<long>();
}

}  // namespace detail

inline ExperimentConfig parse_config_json(const nlohmann::json& root) {
    if (!root.is_object()) throw config_error("$: config must be a JSON object");
    static const std::set<std::string> known = {"family",       "parameter_grid", "fixed_params",
                                                "sample_sizes", "replicates",     "master_seed",
                                                "level",        "fit_family"};
    for (const auto& [key, value] : root.items()) {
        (void)value;
        if (!known.count(key)) throw config_error("$." + key + ": unknown key");
    }

    ExperimentConfig config;
    if (!root.contains("family") || !root["family"].is_string())
        throw config_error("$.family: required string");
    config.family = root["family"].get<std::string>();
    const auto& names = [&]() -> const std::vector<std::string>& {
        try {
            return param_names(config.family);
        } catch (const parameter_error& e) {
            throw config_error(std::string("$.family: ") + e.what());
        }
    }();

    if (!root.contains("parameter_grid") || !root["parameter_grid"].is_array() ||
        root["parameter_grid"].empty())
        throw config_error("$.parameter_grid: required non-empty array");
    for (std::size_t i = 0; i < root["parameter_grid"].size(); ++i)
        config.parameter_grid.push_back(detail::config_number(
            root["parameter_grid"][i], "$.parameter_grid[" + std::to_string(i) + "]"));

    if (root.contains("fixed_params")) {
        if (!root["fixed_params"].is_object())
            throw config_error("$.fixed_params: expected an object");
        for (const auto& [key, value] : root["fixed_params"].items()) {
            if (std::find(names.begin(), names.end(), key) == names.end())
                throw config_error("$.fixed_params." + key + ": family '" + config.family +
                                   "' has no such parameter");
            config.fixed_params[key] =
                detail::config_number(value, "$.fixed_params." + key);
        }
    }

    std::vector<std::string> open;
    for (const auto& name : names)
        if (!config.fixed_params.count(name)) open.push_back(name);
    if (open.size() != 1)
        throw config_error("$.fixed_params: family '" + config.family + "' has parameters [" +
                           [&] {
                               std::string s;
                               for (const auto& name : names) s += (s.empty() ? "" : ", ") + name;
                               return s;
                           }() +
                           "]; exactly one must be left free for the grid, found " +
                           std::to_string(open.size()));
    config.varying_param = open.front();

    if (!root.contains("sample_sizes") || !root["sample_sizes"].is_array() ||
        root["sample_sizes"].empty())
        throw config_error("$.sample_sizes: required non-empty array");
    for (std::size_t i = 0; i < root["sample_sizes"].size(); ++i) {
        const long n = detail::config_integer(root["sample_sizes"][i],
                                              "$.sample_sizes[" + std::to_string(i) + "]");
        if (n < 2)
            throw config_error("$.sample_sizes[" + std::to_string(i) + "]: must be >= 2, got " +
                               std::to_string(n));
        config.sample_sizes.push_back(n);
    }

    if (root.contains("replicates")) {
        config.replicates = detail::config_integer(root["replicates"], "$.replicates");
        if (config.replicates < 1) throw config_error("$.replicates: must be >= 1");
    }
    if (root.contains("master_seed")) {
        if (!root["master_seed"].is_number_unsigned() && !root["master_seed"].is_number_integer())
            throw config_error("$.master_seed: expected a non-negative integer");
        const auto seed = root["master_seed"].get<std::int64_t>();
        if (root["master_seed"].is_number_integer() && seed < 0)
            throw config_error("$.master_seed: must be >= 0");
        config.master_seed = root["master_seed"].get<std::uint64_t>();
    }
    if (root.contains("level")) {
        config.level = detail::config_number(root["level"], "$.level");
        if (!(config.level > 0.0 && config.level < 1.0))
            throw config_error("$.level: must lie in (0,1)");
    }
    if (root.contains("fit_family")) {
        if (!root["fit_family"].is_string()) throw config_error("$.fit_family: expected a string");
        config.fit_family = root["fit_family"].get<std::string>();
        try {
            fit_family_from_string(config.fit_family);
        } catch (const parameter_error& e) {
            throw config_error(std::string("$.fit_family: ") + e.what());
        }
    }

    // Validate every grid cell eagerly so bad parameters fail at parse time.
    for (std::size_t i = 0; i < config.parameter_grid.size(); ++i) {
        auto params = config.fixed_params;
        params[config.varying_param] = config.parameter_grid[i];
        try {
            make_spec(config.family, params);
        } catch (const parameter_error& e) {
            throw config_error("$.parameter_grid[" + std::to_string(i) + "]: " + e.what());
        }
    }
    return config;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config_json(root);
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

}  // namespace dispersia
