#include "renewal/model_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace renewal {

namespace {

using nlohmann::json;

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : j.items())
        if (!ok.count(item.key())) throw ConfigError(path + "." + item.key(), "unknown field");
}

std::string sub(const std::string& path, const std::string& key) { return path + "." + key; }

double number(const json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) throw ConfigError(sub(path, key), "missing required number");
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(sub(path, key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(sub(path, key), "must be finite");
    return d;
}

double number_or(const json& j, const std::string& path, const std::string& key, double fallback) {
    return j.contains(key) ? number(j, path, key) : fallback;
}

std::uint64_t count(const json& j, const std::string& path, const std::string& key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(sub(path, key), "expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

std::vector<double> numbers(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nonempty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

Range range(const json& j, const std::string& path) {
    const auto v = numbers(j, path);
    if (v.size() != 2) throw ConfigError(path, "expected [lo, hi]");
    if (!(v[0] <= v[1])) throw ConfigError(path, "empty range, lo > hi");
    return {v[0], v[1]};
}

// Either an explicit list or {"lo", "hi", "points"} with even spacing.
std::vector<double> values(const json& j, const std::string& path) {
    if (j.is_array()) return numbers(j, path);
    only_keys(j, path, {"lo", "hi", "points"});
    const double lo = number(j, path, "lo"), hi = number(j, path, "hi");
    const auto n = count(j, path, "points", 1);
    if (!(lo <= hi)) throw ConfigError(path, "empty range, lo > hi");
    if (n == 0) throw ConfigError(sub(path, "points"), "must be positive");
    return linspace(lo, hi, static_cast<int>(n));
}

std::pair<int, std::size_t> line_col(const std::string& text, std::size_t byte) {
    int line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

template <class F>
auto guarded(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
    }
}

}  // namespace

InterArrivalModel parse_distribution(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError(sub(path, "kind"), "missing kind string");
    const std::string kind = j.at("kind").get<std::string>();
    std::optional<double> alpha;
    if (j.contains("alpha")) alpha = number(j, path, "alpha");
    auto with_alpha = [&](const InterArrivalModel& m) {
        return alpha ? guarded(sub(path, "alpha"), [&] { return InterArrivalModel(m.law_ptr(), alpha); }) : m;
    };

    if (kind == "exponential") {
        only_keys(j, path, {"kind", "rate", "alpha", "component"});
        const double rate = number_or(j, path, "rate", 1.0);
        return with_alpha(guarded(path, [&] { return make_exponential(rate); }));
    }
    if (kind == "uniform") {
        only_keys(j, path, {"kind", "a", "b", "alpha", "component"});
        const double a = number(j, path, "a"), b = number(j, path, "b");
        return with_alpha(guarded(path, [&] { return make_uniform(a, b); }));
    }
    if (kind == "folded_gaussian") {
        only_keys(j, path, {"kind", "sigma", "alpha", "component"});
        const double sigma = number_or(j, path, "sigma", 1.0);
        return with_alpha(guarded(path, [&] { return make_folded_gaussian(sigma); }));
    }
    if (kind == "shifted") {
        only_keys(j, path, {"kind", "shift", "base", "alpha", "component"});
        if (!j.contains("base")) throw ConfigError(sub(path, "base"), "missing base distribution");
        const auto base = parse_distribution(j.at("base"), sub(path, "base"));
        const double shift = number(j, path, "shift");
        return with_alpha(guarded(path, [&] { return make_shifted(base, shift); }));
    }
    if (kind == "mixture") {
        only_keys(j, path, {"kind", "components", "alpha", "component"});
        const std::string cp = sub(path, "components");
        if (!j.contains("components") || !j.at("components").is_array() || j.at("components").empty())
            throw ConfigError(cp, "expected a nonempty array");
        std::vector<double> w;
        std::vector<InterArrivalModel> parts;
        for (std::size_t i = 0; i < j.at("components").size(); ++i) {
            const auto& e = j.at("components")[i];
            const std::string ep = cp + "[" + std::to_string(i) + "]";
            only_keys(e, ep, {"weight", "dist"});
            w.push_back(number(e, ep, "weight"));
            if (!e.contains("dist")) throw ConfigError(sub(ep, "dist"), "missing distribution");
            parts.push_back(parse_distribution(e.at("dist"), sub(ep, "dist")));
        }
        return with_alpha(guarded(path, [&] { return make_mixture(w, parts); }));
    }
    if (kind == "table") {
        only_keys(j, path, {"kind", "points", "alpha", "component"});
        const std::string pp = sub(path, "points");
        if (!j.contains("points") || !j.at("points").is_array()) throw ConfigError(pp, "expected an array of [t, f] pairs");
        std::vector<double> t, f;
        for (std::size_t i = 0; i < j.at("points").size(); ++i) {
            const auto pair = numbers(j.at("points")[i], pp + "[" + std::to_string(i) + "]");
            if (pair.size() != 2) throw ConfigError(pp + "[" + std::to_string(i) + "]", "expected [t, f]");
            t.push_back(pair[0]);
            f.push_back(pair[1]);
        }
        return with_alpha(guarded(path, [&] { return make_table(t, f); }));
    }
    throw ConfigError(sub(path, "kind"), "unknown kind '" + kind + "'");
}

UniformComponent parse_component(const json& j, const std::string& path) {
    only_keys(j, path, {"c", "L", "eta_tilde"});
    UniformComponent comp{number(j, path, "c"), number(j, path, "L"), number(j, path, "eta_tilde")};
    guarded(path, [&] {
        comp.validate();
        return 0;
    });
    return comp;
}

BoundParams parse_params(const json& j, const std::string& path) {
    only_keys(j, path, {"beta", "delta", "theta"});
    BoundParams p{number(j, path, "beta"), number(j, path, "delta"), number(j, path, "theta")};
    guarded(path, [&] {
        p.validate();
        return 0;
    });
    return p;
}

nlohmann::json SimulationConfig::to_json() const {
    return {{"replicas", replicas}, {"seed", seed}, {"x", x}, {"t_grid", t_grid}, {"t_points", t_points}, {"h", h}};
}

RunConfig parse_run_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        std::ostringstream os;
        os << "line " << line << ", column " << col << ": " << e.what();
        throw ConfigError("", os.str());
    }
    only_keys(j, "config",
              {"distribution", "component", "component_search", "params", "gamma", "search", "simulation", "output"});
    if (!j.contains("distribution")) throw ConfigError("distribution", "missing");

    RunConfig cfg{j.at("distribution"), parse_distribution(j.at("distribution")), {}, {}, {}, {}, {}, 400, {}, "out"};
    if (j.contains("component")) {
        cfg.component = parse_component(j.at("component"));
    } else if (j.at("distribution").contains("component")) {
        cfg.component = parse_component(j.at("distribution").at("component"), "distribution.component");
    }
    if (j.contains("component_search")) {
        const auto& cs = j.at("component_search");
        only_keys(cs, "component_search", {"c", "L", "eta_tilde"});
        for (const char* k : {"c", "L", "eta_tilde"})
            if (!cs.contains(k)) throw ConfigError(std::string("component_search.") + k, "missing");
        cfg.component_search = ComponentGrid{values(cs.at("c"), "component_search.c"),
                                             values(cs.at("L"), "component_search.L"),
                                             values(cs.at("eta_tilde"), "component_search.eta_tilde")};
    }
    if (j.contains("params")) cfg.params = parse_params(j.at("params"));
    if (j.contains("gamma")) cfg.gamma = number(j, "config", "gamma");
    if (j.contains("search")) {
        const auto& s = j.at("search");
        only_keys(s, "search", {"beta", "delta", "theta", "points", "refine_top", "budget"});
        if (s.contains("beta")) cfg.search.beta = range(s.at("beta"), "search.beta");
        if (s.contains("delta")) cfg.search.delta = range(s.at("delta"), "search.delta");
        if (s.contains("theta")) cfg.search.theta = range(s.at("theta"), "search.theta");
        if (s.contains("points")) {
            const auto p = numbers(s.at("points"), "search.points");
            if (p.size() != 3) throw ConfigError("search.points", "expected [beta, delta, theta] counts");
            for (double v : p)
                if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("search.points", "counts must be positive integers");
            cfg.search.beta_points = static_cast<int>(p[0]);
            cfg.search.delta_points = static_cast<int>(p[1]);
            cfg.search.theta_points = static_cast<int>(p[2]);
        }
        cfg.search.refine_top = static_cast<int>(count(s, "search", "refine_top", 8));
        cfg.budget = static_cast<int>(count(s, "search", "budget", 400));
    }
    if (j.contains("simulation")) {
        const auto& s = j.at("simulation");
        only_keys(s, "simulation", {"replicas", "seed", "x", "t_grid", "h"});
        SimulationConfig sim;
        sim.replicas = count(s, "simulation", "replicas", sim.replicas);
        sim.seed = count(s, "simulation", "seed", sim.seed);
        if (s.contains("x")) sim.x = numbers(s.at("x"), "simulation.x");
        for (double x : sim.x)
            if (!(x >= 0.0)) throw ConfigError("simulation.x", "delays must be nonnegative");
        if (s.contains("t_grid")) {
            const auto& g = s.at("t_grid");
            if (g.is_array()) {
                sim.t_grid = numbers(g, "simulation.t_grid");
                for (std::size_t i = 1; i < sim.t_grid.size(); ++i)
                    if (!(sim.t_grid[i] > sim.t_grid[i - 1]))
                        throw ConfigError("simulation.t_grid", "must be strictly increasing");
            } else {
                only_keys(g, "simulation.t_grid", {"points"});
                sim.t_points = static_cast<int>(count(g, "simulation.t_grid", "points", 32));
                if (sim.t_points < 2) throw ConfigError("simulation.t_grid.points", "must be at least 2");
            }
        }
        sim.h = number_or(s, "simulation", "h", sim.h);
        if (!(sim.h > 0.0)) throw ConfigError("simulation.h", "must be positive");
        if (sim.replicas < 100) throw ConfigError("simulation.replicas", "must be at least 100");
        cfg.simulation = sim;
    }
    if (j.contains("output")) {
        if (!j.at("output").is_string()) throw ConfigError("output", "expected a directory name");
        cfg.output = j.at("output").get<std::string>();
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_run_config(os.str());
}

}  // namespace renewal
