#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "renewal/bounds.hpp"
#include "renewal/cli.hpp"
#include "renewal/model_io.hpp"
#include "renewal/report.hpp"

using namespace renewal;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("renewal_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
    const auto p = dir / name;
    std::ofstream(p) << text;
    return p;
}

const char* kExpConfig = R"({
  "distribution": {"kind": "exponential", "rate": 1.0},
  "component": {"c": 1.0, "L": 1.0, "eta_tilde": 0.2706705664732254},
  "params": {"beta": 0.5, "delta": 0.5, "theta": 0.0002}
})";

const char* kUniConfig = R"({
  "distribution": {"kind": "uniform", "a": 1.0, "b": 2.0},
  "component": {"c": 1.5, "L": 0.5, "eta_tilde": 0.9},
  "params": {"beta": 2.0, "delta": 0.5, "theta": 0.005},
  "simulation": {"replicas": 4000, "seed": 42, "x": [0.0, 3.0], "t_grid": {"points": 12}}
})";

int run(std::vector<std::string> args) {
    args.push_back("--quiet");
    return run_command(args);
}

}  // namespace

TEST_CASE("config: distribution kinds") {
    CHECK(parse_distribution(json::parse(R"({"kind": "exponential", "rate": 2})")).mean() == doctest::Approx(0.5));
    CHECK(parse_distribution(json::parse(R"({"kind": "uniform", "a": 1, "b": 3})")).mean() == doctest::Approx(2.0));
    CHECK(parse_distribution(json::parse(R"({"kind": "folded_gaussian"})")).mean() ==
          doctest::Approx(std::sqrt(2.0 / M_PI)));
    const auto sh = parse_distribution(json::parse(R"({"kind": "shifted", "shift": 1, "base": {"kind": "exponential"}})"));
    CHECK(sh.mean() == doctest::Approx(2.0));
    const auto mix = parse_distribution(json::parse(R"({"kind": "mixture", "components": [
        {"weight": 0.25, "dist": {"kind": "exponential", "rate": 1}},
        {"weight": 0.75, "dist": {"kind": "uniform", "a": 1, "b": 2}}]})"));
    CHECK(mix.mean() == doctest::Approx(0.25 + 0.75 * 1.5));
    const auto tab = parse_distribution(json::parse(R"({"kind": "table", "points": [[0, 0], [1, 2], [2, 0]]})"));
    CHECK(tab.mean() == doctest::Approx(1.0));
    const auto a = parse_distribution(json::parse(R"({"kind": "exponential", "alpha": 0.5})"));
    CHECK(a.alpha() == 0.5);
}

TEST_CASE("config: field diagnostics") {
    auto field_of = [](const std::string& text) {
        try {
            parse_run_config(text);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    CHECK(field_of(R"({"distribution": {"kind": "gamma"}})") == "distribution.kind");
    CHECK(field_of(R"({"distribution": {"kind": "uniform", "a": 1}})") == "distribution.b");
    CHECK(field_of(R"({"distribution": {"kind": "uniform", "a": 2, "b": 1}})") == "distribution");
    CHECK(field_of(R"({"distribution": {"kind": "exponential", "rte": 1}})") == "distribution.rte");
    CHECK(field_of(R"({"distribution": {"kind": "mixture", "components": [{"weight": "x", "dist": {}}]}})") ==
          "distribution.components[0].weight");
    CHECK(field_of(R"({"distribution": {"kind": "exponential"}, "component": {"c": 0.5, "L": 1, "eta_tilde": 0.1}})") ==
          "component");
    CHECK(field_of(R"({"distribution": {"kind": "exponential"}, "params": {"beta": -1, "delta": 0.5, "theta": 0.1}})") ==
          "params");
    CHECK(field_of(R"({"distribution": {"kind": "exponential"}, "search": {"beta": [2, 1]}})") == "search.beta");
    CHECK(field_of(R"({"distribution": {"kind": "exponential"}, "simulation": {"replicas": 10}})") ==
          "simulation.replicas");
    CHECK(field_of(R"({"distribution": {"kind": "exponential"}, "simulation": {"t_grid": [1, 1]}})") ==
          "simulation.t_grid");
    CHECK(field_of(R"({"distribution": {"kind": "exponential"}, "extra": 1})") == "config.extra");
    CHECK(field_of(R"({})") == "distribution");

    try {
        parse_run_config("{\n  \"distribution\": {\n    \"kind\": \"exponential\",\n  }\n}");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
}

TEST_CASE("config: full run configuration") {
    const auto cfg = parse_run_config(R"({
      "distribution": {"kind": "uniform", "a": 1, "b": 2, "component": {"c": 1.5, "L": 0.5, "eta_tilde": 0.9}},
      "component_search": {"c": [1.5], "L": {"lo": 0.25, "hi": 0.5, "points": 2}, "eta_tilde": [0.5, 0.9]},
      "params": {"beta": 2, "delta": 0.5, "theta": 0.005},
      "gamma": 0.004,
      "search": {"beta": [0.1, 4], "points": [4, 3, 2], "refine_top": 2, "budget": 50},
      "simulation": {"replicas": 1000, "seed": 9, "x": [1, 2], "t_grid": [1, 2, 3], "h": 0.5},
      "output": "somewhere"
    })");
    REQUIRE(cfg.component);
    CHECK(cfg.component->eta_tilde == 0.9);
    REQUIRE(cfg.component_search);
    CHECK(cfg.component_search->L == std::vector<double>{0.25, 0.5});
    CHECK(cfg.params->theta == 0.005);
    CHECK(*cfg.gamma == 0.004);
    CHECK(cfg.search.beta.hi == 4.0);
    CHECK(cfg.search.theta_points == 2);
    CHECK(cfg.search.refine_top == 2);
    CHECK(cfg.budget == 50);
    CHECK(cfg.simulation->seed == 9);
    CHECK(cfg.simulation->t_grid.size() == 3);
    CHECK(cfg.output == "somewhere");
}

TEST_CASE("cli: usage errors") {
    CHECK(run({}) == kExitUsage);
    CHECK(run({"frobnicate"}) == kExitUsage);
    CHECK(run({"bound", "--no-such-flag"}) == kExitUsage);
    CHECK(run({"bound", "--threads", "0"}) == kExitUsage);
    CHECK(run_command(std::vector<std::string>{"--help"}) == kExitOk);
}

TEST_CASE("cli: bound writes the assembled certificate") {
    const auto dir = scratch("bound");
    const auto cfg = write(dir, "exp.json", kExpConfig);
    REQUIRE(run({"bound", "--config", cfg.string(), "--out", (dir / "o").string()}) == kExitOk);
    const auto got = json::parse(slurp(dir / "o" / "certificate.json"));
    auto expect = assemble_certificate(make_exponential(1.0), {1.0, 1.0, 2.0 * std::exp(-2.0)}, {0.5, 0.5, 2e-4}).to_json();
    expect["distribution"] = make_exponential(1.0).describe();
    CHECK(got == json::parse(expect.dump()));
    CHECK(json::parse(slurp(dir / "o" / "summary.json")).at("exit_code") == 0);
}

TEST_CASE("cli: infeasible and malformed configs") {
    const auto dir = scratch("errors");
    const auto bad = write(dir, "bad.json", R"({"distribution": {"kind": "exponential"},
      "component": {"c": 1.0, "L": 1.0, "eta_tilde": 0.2706705664732254},
      "params": {"beta": 0.1, "delta": 0.5, "theta": 0.05}})");
    CHECK(run({"bound", "--config", bad.string(), "--out", (dir / "o1").string()}) == kExitInfeasible);
    CHECK(json::parse(slurp(dir / "o1" / "certificate.json")).at("valid") == false);

    const auto broken = write(dir, "broken.json", "{\"distribution\": ");
    CHECK(run({"bound", "--config", broken.string(), "--out", (dir / "o2").string()}) == kExitConfig);
    const auto summary = json::parse(slurp(dir / "o2" / "summary.json"));
    CHECK(summary.at("exit_code") == kExitConfig);
    CHECK(summary.at("result").at("error").get<std::string>().find("line 1") != std::string::npos);

    const auto typo = write(dir, "typo.json", R"({"distribution": {"kind": "uniform", "a": 1, "bb": 2}})");
    CHECK(run({"bound", "--config", typo.string(), "--out", (dir / "o3").string()}) == kExitConfig);
    CHECK(json::parse(slurp(dir / "o3" / "summary.json")).at("result").at("field") == "distribution.bb");

    const auto partial = write(dir, "partial.json", R"({"distribution": {"kind": "exponential"}})");
    CHECK(run({"bound", "--config", partial.string(), "--out", (dir / "o4").string()}) == kExitConfig);
    CHECK(run({"bound", "--config", (dir / "missing.json").string(), "--out", (dir / "o5").string()}) == kExitConfig);
    CHECK(run({"report", "--out", (dir / "empty").string()}) == kExitConfig);
}

TEST_CASE("cli: verify passes on the uniform model") {
    const auto dir = scratch("verify");
    const auto cfg = write(dir, "uni.json", kUniConfig);
    CHECK(run({"verify", "--config", cfg.string(), "--out", (dir / "o").string(), "--seed", "42"}) == kExitOk);
    const auto rep = json::parse(slurp(dir / "o" / "verify.json"));
    CHECK(rep.at("passed") == true);
    CHECK(rep.at("checks").size() == 8);
}

TEST_CASE("cli: simulate and report are reproducible") {
    const auto dir = scratch("simulate");
    const auto cfg = write(dir, "uni.json", kUniConfig);
    for (const char* threads : {"1", "3"}) {
        const auto out = (dir / (std::string("t") + threads)).string();
        REQUIRE(run({"simulate", "--config", cfg.string(), "--out", out, "--threads", threads}) == kExitOk);
        REQUIRE(run({"report", "--out", out}) == kExitOk);
    }
    for (const char* f : {"tail.csv", "tail.json", "certificate.json", "report.json", "report_curves.csv", "summary.json"})
        CHECK(slurp(dir / "t1" / f) == slurp(dir / "t3" / f));

    const auto rows = read_tail_csv((dir / "t1" / "tail.csv").string());
    CHECK(rows.size() == 24);
    const auto rep = json::parse(slurp(dir / "t1" / "report.json"));
    CHECK(rep.at("certified_rate") == doctest::Approx(0.005));
    CHECK(rep.at("empirical").size() == 2);

    // Bound-only report once the tail table is gone.
    fs::remove(dir / "t1" / "tail.csv");
    REQUIRE(run({"report", "--out", (dir / "t1").string()}) == kExitOk);
    CHECK(json::parse(slurp(dir / "t1" / "report.json")).at("empirical").is_null());
}

TEST_CASE("cli: optimize writes the grid and the best certificate") {
    const auto dir = scratch("optimize");
    const auto cfg = write(dir, "uni.json", R"({
      "distribution": {"kind": "uniform", "a": 1, "b": 2},
      "component_search": {"c": [1.5], "L": [0.5], "eta_tilde": [0.9]},
      "search": {"beta": [0.5, 4], "points": [4, 3, 3], "refine_top": 1, "budget": 40}
    })");
    REQUIRE(run({"optimize", "--config", cfg.string(), "--out", (dir / "o").string()}) == kExitOk);
    const auto csv = slurp(dir / "o" / "gridpoints.csv");
    CHECK(csv.rfind("beta,delta,theta,c,L,eta_tilde,q,rate\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 3 * 3);
    const auto cert = json::parse(slurp(dir / "o" / "certificate.json"));
    CHECK(cert.at("valid") == true);
    CHECK(cert.at("rate").get<double>() > 0.0);
}
