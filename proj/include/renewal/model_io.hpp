#pragma once

// JSON ingestion of distributions and run configurations.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "renewal/bounds.hpp"
#include "renewal/dist.hpp"
#include "renewal/error.hpp"
#include "renewal/optimize.hpp"

namespace renewal {

// Config problem tied to a field path such as "distribution.components[1].weight".
class ConfigError : public InvalidInput {
public:
    ConfigError(const std::string& field, const std::string& message)
        : InvalidInput(field.empty() ? message : field + ": " + message), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// Kinds: exponential {rate}, uniform {a, b}, folded_gaussian {sigma}, shifted {shift, base},
// mixture {components: [{weight, dist}]}, table {points: [[t, f], ...]}; optional alpha.
InterArrivalModel parse_distribution(const nlohmann::json& j, const std::string& path = "distribution");
UniformComponent parse_component(const nlohmann::json& j, const std::string& path = "component");
BoundParams parse_params(const nlohmann::json& j, const std::string& path = "params");

struct SimulationConfig {
    std::uint64_t replicas = 10000;
    std::uint64_t seed = 1;
    std::vector<double> x{0.0};
    std::vector<double> t_grid;  // empty: default grid per x
    int t_points = 32;
    double h = 1.0;

    nlohmann::json to_json() const;
};

struct RunConfig {
    nlohmann::json distribution;
    InterArrivalModel model;
    std::optional<UniformComponent> component;
    std::optional<ComponentGrid> component_search;
    std::optional<BoundParams> params;
    std::optional<double> gamma;
    SearchSpace search;
    int budget = 400;
    std::optional<SimulationConfig> simulation;
    std::string output = "out";
};

// Parse errors carry line and column; semantic errors carry the field path.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

}  // namespace renewal
