#include "renewal/cli.hpp"

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "renewal/bounds.hpp"
#include "renewal/model_io.hpp"
#include "renewal/optimize.hpp"
#include "renewal/report.hpp"
#include "renewal/sim.hpp"
#include "renewal/verify.hpp"

namespace renewal {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 1;
    bool quiet = false;
    bool debug = false;
};

struct Outcome {
    int code = kExitOk;
    json summary = json::object();
};

void set_logging(const Flags& f) {
    static auto logger = spdlog::stderr_logger_mt("renewal");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(f.quiet ? spdlog::level::warn : f.debug ? spdlog::level::debug : spdlog::level::info);
}

std::string out_dir(const Flags& f, const RunConfig* cfg) {
    if (!f.out.empty()) return f.out;
    return cfg ? cfg->output : std::string("out");
}

RunConfig load(const Flags& f) {
    if (f.config.empty()) throw ConfigError("--config", "a config file is required");
    return load_run_config(f.config);
}

void write_json(const fs::path& dir, const std::string& name, const json& j) {
    write_text((dir / name).string(), dump_json(j));
}

json certificate_json(const RunConfig& cfg, const BoundCertificate& cert) {
    json j = cert.to_json();
    j["distribution"] = cfg.model.describe();
    return j;
}

BoundCertificate certificate_from(const RunConfig& cfg) {
    if (!cfg.component) throw ConfigError("component", "required by this command");
    if (!cfg.params) throw ConfigError("params", "required by this command");
    return assemble_certificate(cfg.model, *cfg.component, *cfg.params, cfg.gamma);
}

Outcome cmd_bound(const RunConfig& cfg, const fs::path& dir) {
    const auto cert = certificate_from(cfg);
    write_json(dir, "certificate.json", certificate_json(cfg, cert));
    Outcome o;
    o.summary = {{"valid", cert.valid}, {"q", cert.q}, {"rate", cert.rate}, {"R", cert.R}};
    if (!cert.valid) o.code = kExitInfeasible;
    return o;
}

Outcome cmd_optimize(const RunConfig& cfg, const fs::path& dir, const Flags& f) {
    SearchSpace space = cfg.search;
    if (cfg.component_search) {
        space.components = enumerate_components(cfg.model, *cfg.component_search);
        if (space.components.empty()) throw ConfigError("component_search", "no candidate is dominated by the density");
    } else if (cfg.component) {
        space.components = {*cfg.component};
    } else {
        throw ConfigError("component", "optimize needs component or component_search");
    }
    OptimizeOptions opt;
    opt.budget = cfg.budget;
    opt.threads = f.threads;
    opt.record_grid = true;
    const auto res = optimize_rate(cfg.model, space, opt);

    std::ostringstream csv;
    csv << std::setprecision(17) << "beta,delta,theta,c,L,eta_tilde,q,rate\n";
    for (const auto& g : res.grid) {
        const auto& c = space.components[g.component];
        csv << g.params.beta << ',' << g.params.delta << ',' << g.params.theta << ',' << c.c << ',' << c.L << ','
            << c.eta_tilde << ',' << g.q << ',' << g.params.rate() << '\n';
    }
    write_text((dir / "gridpoints.csv").string(), csv.str());

    json result = res.to_json();
    result["search"] = space.to_json();
    write_json(dir, "optimize.json", result);
    Outcome o;
    o.summary = {{"feasible", res.feasible}, {"candidates", space.components.size()}, {"evaluations", res.evaluations}};
    if (!res.feasible) {
        o.summary["best_q"] = res.best_q;
        o.code = kExitInfeasible;
        return o;
    }
    auto cert = *res.cert;
    if (cfg.gamma) cert = assemble_certificate(cfg.model, res.comp, res.params, cfg.gamma);
    write_json(dir, "certificate.json", certificate_json(cfg, cert));
    o.summary["rate"] = res.params.rate();
    o.summary["params"] = res.params.to_json();
    o.summary["component"] = res.comp.to_json();
    return o;
}

Outcome cmd_simulate(const RunConfig& cfg, const fs::path& dir, const Flags& f) {
    const auto cert = certificate_from(cfg);
    write_json(dir, "certificate.json", certificate_json(cfg, cert));
    Outcome o;
    if (!cert.valid) {
        o.code = kExitInfeasible;
        o.summary = {{"valid", false}, {"q", cert.q}};
        return o;
    }
    auto sim = cfg.simulation.value_or(SimulationConfig{});
    if (f.seed) sim.seed = *f.seed;

    std::vector<TailRow> rows;
    json tails = json::array();
    for (double x : sim.x) {
        const auto grid = sim.t_grid.empty() ? default_t_grid(x, cert.rate, sim.t_points) : sim.t_grid;
        const auto est = estimate_tail(cfg.model, cert, x, grid, sim.replicas, sim.seed, f.threads);
        json t = est.to_json();
        t["x"] = x;
        std::vector<double> bound;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double b = grid[i] >= x ? theorem1_bound(cert, x, grid[i]) : kInf;
            bound.push_back(b);
            rows.push_back({x, grid[i], est.survival[i], est.stderr_[i], b, sim.replicas});
        }
        t["bound"] = bound;
        tails.push_back(t);
    }
    write_tail_csv((dir / "tail.csv").string(), rows);
    write_json(dir, "tail.json", {{"simulation", sim.to_json()}, {"tails", tails}});

    if (f.debug) {
        json traces = json::array();
        CouplingOptions opt;
        for (std::uint64_t i = 0; i < 5; ++i) {
            RngStream rng(sim.seed, i);
            traces.push_back(run_coupling(cfg.model, cert, sim.x.front(), rng, opt).to_json());
        }
        write_json(dir, "traces.json", traces);
    }
    o.summary = {{"valid", true}, {"rate", cert.rate}, {"replicas", sim.replicas}, {"seed", sim.seed}, {"x", sim.x}};
    return o;
}

Outcome cmd_verify(const RunConfig& cfg, const fs::path& dir, const Flags& f) {
    const auto cert = certificate_from(cfg);
    Outcome o;
    if (!cert.valid) {
        o.code = kExitInfeasible;
        o.summary = {{"valid", false}, {"q", cert.q}};
        return o;
    }
    VerifyOptions opt;
    if (cfg.simulation) {
        opt.replicas = cfg.simulation->replicas;
        opt.seed = cfg.simulation->seed;
        opt.x = cfg.simulation->x;
        opt.t_points = cfg.simulation->t_points;
    }
    if (f.seed) opt.seed = *f.seed;
    opt.threads = f.threads;
    const auto rep = run_verification(cfg.model, cert, opt);
    json j = rep.to_json();
    j["certificate"] = certificate_json(cfg, cert);
    j["replicas"] = opt.replicas;
    j["seed"] = opt.seed;
    write_json(dir, "verify.json", j);
    json names = json::object();
    for (const auto& c : rep.checks) names[c.name] = c.passed;
    o.summary = {{"passed", rep.passed}, {"checks", names}};
    if (!rep.passed) o.code = kExitCheckFailed;
    return o;
}

Outcome cmd_report(const fs::path& dir) {
    const auto rep = emit_report(dir.string());
    Outcome o;
    o.summary = {{"certified_rate", rep.at("certified_rate")}, {"empirical", rep.at("empirical")}};
    return o;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"Explicit renewal coupling bounds and their Monte-Carlo checks", "renewal"};
    app.require_subcommand(1, 1);
    Flags f;
    auto add_common = [&f](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", f.config, "run configuration (JSON)");
        if (needs_config) c->check(CLI::ExistingFile);
        sub->add_option("--seed", f.seed, "seed, overrides the config");
        sub->add_option("--out", f.out, "output directory, overrides the config");
        sub->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
        auto* q = sub->add_flag("--quiet", f.quiet, "warnings only");
        sub->add_flag("--debug", f.debug, "debug logging and coupling traces")->excludes(q);
    };
    for (const char* name : {"bound", "optimize", "simulate", "verify"}) add_common(app.add_subcommand(name), false);
    add_common(app.add_subcommand("report", "merge outputs in --out and fit the empirical rate"), false);
    app.get_subcommand("bound")->description("assemble the certificate for the configured parameters");
    app.get_subcommand("optimize")->description("maximise the certified rate over the search space");
    app.get_subcommand("simulate")->description("estimate the coupling-time tail");
    app.get_subcommand("verify")->description("run the Monte-Carlo property suite");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }
    set_logging(f);
    const std::string command = app.get_subcommands().front()->get_name();

    std::unique_ptr<RunConfig> cfg;
    Outcome o;
    fs::path dir = out_dir(f, nullptr);
    try {
        if (command != "report" || !f.config.empty()) cfg = std::make_unique<RunConfig>(load(f));
        dir = out_dir(f, cfg.get());
        fs::create_directories(dir);
        if (command == "bound") o = cmd_bound(*cfg, dir);
        else if (command == "optimize") o = cmd_optimize(*cfg, dir, f);
        else if (command == "simulate") o = cmd_simulate(*cfg, dir, f);
        else if (command == "verify") o = cmd_verify(*cfg, dir, f);
        else o = cmd_report(dir);
    } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        o.code = kExitConfig;
        o.summary = {{"error", e.what()}, {"field", e.field()}};
    } catch (const InvalidCertificate& e) {
        spdlog::error("{}", e.what());
        o.code = kExitInfeasible;
        o.summary = {{"error", e.what()}};
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        o.code = kExitCheckFailed;
        o.summary = {{"error", e.what()}};
    }
    json summary = {{"command", command}, {"exit_code", o.code}, {"result", o.summary}};
    try {
        fs::create_directories(dir);
        write_json(dir, "summary.json", summary);
    } catch (const std::exception& e) {
        spdlog::error("cannot write summary: {}", e.what());
    }
    if (!f.quiet) std::cout << dump_json(summary);
    return o.code;
}

int run_command(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_command(args);
}

}  // namespace renewal
