#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "exnls/experiments.hpp"

#ifndef EXNLS_BUILD_TYPE
#define EXNLS_BUILD_TYPE "unknown"
#endif

namespace exnls {

using nlohmann::json;

namespace {

void put(std::string& out, double x) {
    char buf[40];
    if (std::isnan(x)) std::snprintf(buf, sizeof buf, "nan");
    else if (std::isinf(x)) std::snprintf(buf, sizeof buf, x > 0 ? "inf" : "-inf");
    else std::snprintf(buf, sizeof buf, "%.17g", x);
    out += buf;
}

double parse_number(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    // strtod, unlike stod, accepts subnormals.
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw std::invalid_argument("bad CSV number '" + s + "'");
    return v;
}

json finite_or_null(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;
}

}  // namespace

std::string format_csv(std::span<const DiagnosticsRecord> series) {
    std::string out = kCsvHeader;
    out += '\n';
    auto sob = [](const DiagnosticsRecord& r, int k) {
        const auto it = r.sobolev.find(k);
        return it == r.sobolev.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
    };
    for (const auto& r : series) {
        const double cols[] = {r.time, r.mass, r.energy, r.pc_energy, r.strauss_ratio,
                               r.sup_weighted_amp, sob(r, 1), sob(r, 2), sob(r, 4), r.linf,
                               r.outer_mass_fraction};
        for (double c : cols) {
            put(out, c);
            out += ',';
        }
        out += r.valid ? "1\n" : "0\n";
    }
    return out;
}

std::vector<DiagnosticsRecord> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw std::invalid_argument("CSV header does not match the diagnostics layout");
    std::vector<DiagnosticsRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 12) throw std::invalid_argument("CSV row has wrong column count");
        DiagnosticsRecord r;
        r.time = parse_number(cells[0]);
        r.mass = parse_number(cells[1]);
        r.energy = parse_number(cells[2]);
        r.pc_energy = parse_number(cells[3]);
        r.strauss_ratio = parse_number(cells[4]);
        r.sup_weighted_amp = parse_number(cells[5]);
        r.sobolev[0] = std::sqrt(r.mass);
        r.sobolev[1] = parse_number(cells[6]);
        r.sobolev[2] = parse_number(cells[7]);
        r.sobolev[4] = parse_number(cells[8]);
        r.linf = parse_number(cells[9]);
        r.outer_mass_fraction = parse_number(cells[10]);
        if (cells[11] != "0" && cells[11] != "1") throw std::invalid_argument("bad valid flag");
        r.valid = cells[11] == "1";
        out.push_back(std::move(r));
    }
    return out;
}

json to_json(const CompatReport& r) {
    json traces = json::array();
    for (const auto& t : r.traces)
        traces.push_back({{"j", t.j}, {"trace", t.trace}, {"tolerance", t.tolerance}, {"pass", t.pass}});
    return {{"kind", r.kind}, {"order_requested", r.order_requested}, {"traces", traces},
            {"pass", r.pass()}, {"first_failure", r.first_failure()}};
}

json to_json(const DiagnosticsRecord& r) {
    json sob = json::object();
    for (const auto& [k, v] : r.sobolev) sob[std::to_string(k)] = finite_or_null(v);
    return {{"time", r.time},
            {"mass", r.mass},
            {"energy", r.energy},
            {"pc_energy", r.pc_energy},
            {"strauss_ratio", finite_or_null(r.strauss_ratio)},
            {"strauss_flagged", r.strauss_flagged()},
            {"sup_weighted_amp", r.sup_weighted_amp},
            {"sobolev", sob},
            {"linf", r.linf},
            {"outer_mass_fraction", r.outer_mass_fraction},
            {"valid", r.valid}};
}

json environment_stamp() {
    json env;
    env["version"] = kVersion;
#if defined(__clang__)
    env["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
    env["compiler"] = std::string("gcc ") + __VERSION__;
#else
    env["compiler"] = "unknown";
#endif
    env["build_type"] = EXNLS_BUILD_TYPE;
#if defined(__linux__)
    env["platform"] = "linux";
#elif defined(__APPLE__)
    env["platform"] = "darwin";
#else
    env["platform"] = "other";
#endif
    env["cplusplus"] = static_cast<long>(__cplusplus);
    return env;
}

void write_outputs(const RunManifest& m, const RunResult& r) {
    if (m.output_dir.empty()) return;
    const std::filesystem::path dir(m.output_dir);
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(dir / m.csv_name, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write " + (dir / m.csv_name).string());
        csv << format_csv(r.series);
    }
    {
        std::ofstream rep(dir / m.report_name, std::ios::binary);
        if (!rep) throw std::runtime_error("cannot write " + (dir / m.report_name).string());
        rep << r.report.dump(2) << '\n';
    }
}

}  // namespace exnls
