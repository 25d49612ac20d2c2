#include "renewal/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

#include "renewal/bounds.hpp"
#include "renewal/model_io.hpp"
#include "renewal/sim.hpp"

namespace renewal {

namespace fs = std::filesystem;

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

void write_tail_csv(const std::string& path, const std::vector<TailRow>& rows) {
    std::ostringstream os;
    os << std::setprecision(17) << "x,t,survival,stderr,bound,n\n";
    for (const auto& r : rows)
        os << r.x << ',' << r.t << ',' << r.survival << ',' << r.stderr_ << ',' << r.bound << ',' << r.n << '\n';
    write_text(path, os.str());
}

std::vector<TailRow> read_tail_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot read tail table");
    std::string line;
    std::getline(in, line);
    if (line != "x,t,survival,stderr,bound,n") throw ConfigError(path, "unexpected header");
    std::vector<TailRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        TailRow r;
        char c1, c2, c3, c4, c5;
        if (!(ls >> r.x >> c1 >> r.t >> c2 >> r.survival >> c3 >> r.stderr_ >> c4 >> r.bound >> c5 >> r.n))
            throw ConfigError(path + ":" + std::to_string(lineno), "malformed row");
        rows.push_back(r);
    }
    return rows;
}

namespace {

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json emit_report(const std::string& dir) {
    const fs::path cert_path = fs::path(dir) / "certificate.json";
    if (!fs::exists(cert_path)) throw ConfigError(cert_path.string(), "missing; run bound or optimize first");
    nlohmann::json cert;
    try {
        std::ifstream in(cert_path);
        cert = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(cert_path.string(), e.what());
    }
    if (!cert.contains("rate") || !cert.at("rate").is_number())
        throw ConfigError(cert_path.string() + ".rate", "missing certified rate");
    const double certified = cert.at("rate").get<double>();

    nlohmann::json report = {{"certified_rate", certified}, {"certificate", cert}};
    const fs::path tail_path = fs::path(dir) / "tail.csv";
    if (!fs::exists(tail_path)) {
        report["empirical"] = nullptr;
        write_text((fs::path(dir) / "report.json").string(), dump_json(report));
        return report;
    }

    const auto rows = read_tail_csv(tail_path.string());
    std::map<double, std::vector<TailRow>> by_x;
    for (const auto& r : rows) by_x[r.x].push_back(r);

    nlohmann::json fits = nlohmann::json::array();
    std::ostringstream curves;
    curves << std::setprecision(17) << "x,t,survival,stderr,bound,fitted\n";
    for (const auto& [x, rs] : by_x) {
        // Points past the delay with at least ten exceedances carry usable signal.
        std::vector<double> t, v;
        for (const auto& r : rs)
            if (r.t > x && r.survival * static_cast<double>(r.n) >= 10.0) {
                t.push_back(r.t);
                v.push_back(r.survival);
            }
        nlohmann::json f = {{"x", x}, {"points", t.size()}};
        std::optional<ExponentialFit> fit;
        if (t.size() >= 3) {
            fit = fit_exponential_rate(t, v);
            f["amplitude"] = fit->amplitude;
            f["empirical_rate"] = fit->rate;
            f["residual"] = fit->residual;
            f["ratio"] = num(fit->rate / certified);
        } else {
            spdlog::warn("report: too few tail points for x = {}", x);
            f["empirical_rate"] = nullptr;
        }
        fits.push_back(f);
        for (const auto& r : rs) {
            curves << r.x << ',' << r.t << ',' << r.survival << ',' << r.stderr_ << ',' << r.bound << ',';
            if (fit) curves << fit->amplitude * std::exp(-fit->rate * r.t);
            curves << '\n';
        }
    }
    report["empirical"] = fits;
    write_text((fs::path(dir) / "report_curves.csv").string(), curves.str());
    write_text((fs::path(dir) / "report.json").string(), dump_json(report));
    return report;
}

}  // namespace renewal
