// Command-line front end for the scenario runner.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "exnls/experiments.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void print_verdicts(const exnls::RunResult& r) {
    for (const auto& v : r.verdicts)
        std::printf("%-4s %-40s value=%-14.6g threshold=%-12.6g %s\n", v.pass ? "PASS" : "FAIL",
                    v.name.c_str(), v.value, v.threshold, v.detail.c_str());
    if (r.anomaly) std::printf("ANOMALY %s\n", r.anomaly_reason.c_str());
}

int run_manifest(const exnls::RunManifest& m) {
    const exnls::RunResult r = exnls::run_scenario(m);
    exnls::write_outputs(m, r);
    print_verdicts(r);
    if (!m.output_dir.empty()) std::printf("wrote %s\n", m.output_dir.c_str());
    return r.exit_code();
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    return json::parse(in);
}

int worst(int a, int b) {
    auto rank = [](int c) { return c == 3 ? 3 : c == 2 ? 2 : c == 0 ? 0 : 1; };
    return rank(a) >= rank(b) ? a : b;
}

int sweep(const fs::path& tmpl_path, const std::string& axis, unsigned jobs) {
    const auto eq = axis.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("axis must look like /json/pointer=v1,v2,...");
    const json::json_pointer ptr(axis.substr(0, eq));
    std::vector<json> values;
    {
        std::stringstream ss(axis.substr(eq + 1));
        std::string item;
        while (std::getline(ss, item, ',')) values.push_back(json::parse(item));
    }
    if (values.empty()) throw std::invalid_argument("sweep axis has no values");

    const json tmpl = read_json(tmpl_path);
    std::string base = "sweep";
    if (tmpl.contains("output") && tmpl["output"].contains("dir")) base = tmpl["output"]["dir"];

    std::vector<exnls::RunManifest> manifests;
    for (std::size_t i = 0; i < values.size(); ++i) {
        json j = tmpl;
        if (!j.contains(ptr)) throw std::invalid_argument("sweep axis " + ptr.to_string() + " not in template");
        j[ptr] = values[i];
        j["output"]["dir"] = (fs::path(base) / ("run_" + std::to_string(i))).string();
        manifests.push_back(exnls::parse_manifest(j));
    }

    std::vector<exnls::RunResult> results(manifests.size());
    std::vector<std::string> errors(manifests.size());
    std::mutex next_mutex;
    std::size_t next = 0;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(next_mutex);
                if (next >= manifests.size()) return;
                i = next++;
            }
            try {
                results[i] = exnls::run_scenario(manifests[i]);
                exnls::write_outputs(manifests[i], results[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(manifests.size())));
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    json summary;
    summary["axis"] = ptr.to_string();
    summary["runs"] = json::array();
    int code = 0;
    for (std::size_t i = 0; i < manifests.size(); ++i) {
        json row{{"value", values[i]}, {"dir", manifests[i].output_dir}};
        if (!errors[i].empty()) {
            row["error"] = errors[i];
            code = worst(code, 3);
        } else {
            row["exit_code"] = results[i].exit_code();
            row["verdicts"] = results[i].report["verdicts"];
            code = worst(code, results[i].exit_code());
        }
        std::printf("%s = %s -> %s (%s)\n", ptr.to_string().c_str(), values[i].dump().c_str(),
                    errors[i].empty() ? std::to_string(results[i].exit_code()).c_str() : errors[i].c_str(),
                    manifests[i].output_dir.c_str());
        summary["runs"].push_back(row);
    }
    fs::create_directories(base);
    std::ofstream(fs::path(base) / "sweep_summary.json") << summary.dump(2) << '\n';
    return code;
}

int compat(const fs::path& spec_path) {
    json spec = read_json(spec_path);
    const std::vector<std::string> allowed{"params", "grid", "initial_data", "order", "kind"};
    for (const auto& [k, v] : spec.items())
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw std::invalid_argument("unknown key '" + k + "' in data spec");
    json m{{"scenario", "CompatCheck"},
           {"params", spec.at("params")},
           {"grid", spec.at("grid")},
           {"dt", 1.0},
           {"t_final", 0.0},
           {"initial_data", spec.at("initial_data")},
           {"options",
            {{"compat_order", spec.value("order", 2)}, {"compat_kind", spec.value("kind", "nonlinear")}}}};
    const exnls::RunResult r = exnls::run_scenario(exnls::parse_manifest(m));
    for (const auto& t : r.report["compatibility"]["traces"])
        std::printf("j=%d trace=%.6e tolerance=%.6e %s\n", t["j"].get<int>(), t["trace"].get<double>(),
                    t["tolerance"].get<double>(), t["pass"].get<bool>() ? "pass" : "FAIL");
    print_verdicts(r);
    return r.exit_code();
}

int report(const fs::path& dir) {
    const json rep = read_json(dir / "report.json");
    const std::string csv_name = rep["manifest"]["output"].value("csv", "diagnostics.csv");
    std::ifstream in(dir / csv_name);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto series = exnls::parse_csv(buf.str());
    std::size_t valid = 0;
    for (const auto& r : series) valid += r.valid ? 1 : 0;
    std::printf("scenario %s\n", rep["manifest"]["scenario"].get<std::string>().c_str());
    std::printf("records %zu (valid %zu)", series.size(), valid);
    if (!series.empty())
        std::printf(", t = %.6g .. %.6g", series.front().time, series.back().time);
    std::printf("\n");
    for (const auto& v : rep["verdicts"]) {
        const auto num = [](const json& x) { return x.is_number() ? x.get<double>() : std::nan(""); };
        std::printf("%-4s %-40s value=%-14.6g threshold=%-12.6g\n", v["pass"].get<bool>() ? "PASS" : "FAIL",
                    v["name"].get<std::string>().c_str(), num(v["value"]), num(v["threshold"]));
    }
    if (rep["anomaly"]["flag"].get<bool>())
        std::printf("ANOMALY %s\n", rep["anomaly"]["reason"].get<std::string>().c_str());
    return rep["exit_code"].get<int>();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exterior defocusing NLS laboratory"};
    app.require_subcommand(1);

    std::string manifest_path, out_override, axis, spec_path, run_dir;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

    auto* run = app.add_subcommand("run", "Run one manifest");
    run->add_option("manifest", manifest_path, "Manifest (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_override, "Override the output directory");

    auto* sw = app.add_subcommand("sweep", "Run a manifest template over one axis");
    sw->add_option("manifest-template", manifest_path)->required()->check(CLI::ExistingFile);
    sw->add_option("axis", axis, "/json/pointer=v1,v2,...")->required();
    sw->add_option("--jobs", jobs, "Parallel runs");

    auto* cp = app.add_subcommand("compat", "Check compatibility conditions of initial data");
    cp->add_option("data-spec", spec_path)->required()->check(CLI::ExistingFile);

    auto* st = app.add_subcommand("strichartz", "Strichartz quotient table for a manifest");
    st->add_option("manifest", manifest_path)->required()->check(CLI::ExistingFile);
    st->add_option("--out", out_override, "Override the output directory");

    auto* rp = app.add_subcommand("report", "Summarize a run directory");
    rp->add_option("run-dir", run_dir)->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed() || st->parsed()) {
            exnls::RunManifest m = exnls::load_manifest(manifest_path);
            if (!out_override.empty()) m.output_dir = out_override;
            if (st->parsed() && m.scenario != exnls::Scenario::LinearStrichartz)
                throw std::invalid_argument("strichartz needs a LinearStrichartz manifest");
            return run_manifest(m);
        }
        if (sw->parsed()) return sweep(manifest_path, axis, jobs);
        if (cp->parsed()) return compat(spec_path);
        if (rp->parsed()) return report(run_dir);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 1;
}
