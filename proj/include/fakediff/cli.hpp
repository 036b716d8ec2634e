#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fakediff/embed.hpp"
#include "fakediff/error.hpp"
#include "fakediff/grid.hpp"
#include "fakediff/mixture.hpp"
#include "fakediff/simulate.hpp"
#include "fakediff/timechange.hpp"
#include "fakediff/verify.hpp"

namespace fakediff::cli {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_config_error = 2 };

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string law = "ebm";
    double K = 0.5;
    double c = 0.25;
    double T = 1.0;
    std::size_t n_paths = 50'000;
    std::size_t n_steps = 1000;
    std::uint64_t seed = 42;
    std::string out = ".";
    unsigned threads = 0;

    std::size_t inspect_times = 100; // t_i = i T / n, i = 1..n
    std::size_t inspect_states = 201;
    std::size_t export_paths = 100;  // rows of paths.csv come from the first paths only
    double bm_step = 1e-4;
    bool madan_yor = false;          // verify: also run the embedding checks
    bool decreasing_barycentre = false; // madan-yor negative control
};

inline nlohmann::json to_json(const RunConfig& c) {
    return {
        {"law", c.law},
        {"K", c.K},
        {"c", c.c},
        {"T", c.T},
        {"n_paths", c.n_paths},
        {"n_steps", c.n_steps},
        {"seed", c.seed},
        {"out", c.out},
        {"threads", c.threads},
        {"inspect_times", c.inspect_times},
        {"inspect_states", c.inspect_states},
        {"export_paths", c.export_paths},
        {"bm_step", c.bm_step},
        {"madan_yor", c.madan_yor},
        {"decreasing_barycentre", c.decreasing_barycentre},
    };
}

/// The echo written into output headers: every setting that affects results.
/// The output directory and the thread count are left out so that outputs stay
/// byte-identical across locations and parallelism degrees.
inline nlohmann::json echo_json(const RunConfig& c) {
    auto j = to_json(c);
    j.erase("out");
    j.erase("threads");
    return j;
}

/// Overwrites the fields present in `j`; unknown keys are a configuration error.
inline void apply_json(RunConfig& c, const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError(ValidationCode::bad_config, "config file must hold a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "law") c.law = v.get<std::string>();
            else if (key == "K") c.K = v.get<double>();
            else if (key == "c") c.c = v.get<double>();
            else if (key == "T") c.T = v.get<double>();
            else if (key == "n_paths") c.n_paths = v.get<std::size_t>();
            else if (key == "n_steps") c.n_steps = v.get<std::size_t>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "out") c.out = v.get<std::string>();
            else if (key == "threads") c.threads = v.get<unsigned>();
            else if (key == "inspect_times") c.inspect_times = v.get<std::size_t>();
            else if (key == "inspect_states") c.inspect_states = v.get<std::size_t>();
            else if (key == "export_paths") c.export_paths = v.get<std::size_t>();
            else if (key == "bm_step") c.bm_step = v.get<double>();
            else if (key == "madan_yor") c.madan_yor = v.get<bool>();
            else if (key == "decreasing_barycentre") c.decreasing_barycentre = v.get<bool>();
            else throw ValidationError(ValidationCode::bad_config, "unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(ValidationCode::bad_config, std::string("config file: ") + e.what());
    }
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(ValidationCode::bad_config, "cannot open config file '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(ValidationCode::bad_config, "config file '" + path + "': " + e.what());
    }
}

/// Range checks on the run parameters, then the full spec validation.
inline FakeSpec validate(const RunConfig& c) {
    if (!(c.T > 0.0) || !std::isfinite(c.T)) throw ValidationError(ValidationCode::bad_config, "T must be > 0");
    if (c.n_paths < 1) throw ValidationError(ValidationCode::bad_config, "paths must be >= 1");
    if (c.n_steps < 1) throw ValidationError(ValidationCode::bad_config, "steps must be >= 1");
    if (c.inspect_times < 1 || c.inspect_states < 1)
        throw ValidationError(ValidationCode::bad_config, "inspect grids must be nonempty");
    if (!(c.bm_step > 0.0)) throw ValidationError(ValidationCode::bad_config, "bm_step must be > 0");
    if (!(c.K > 0.0 && c.K < 1.0)) throw ValidationError(ValidationCode::invalid_k, "K must lie in (0,1)");
    DiffusionLaw law = [&] {
        try {
            return DiffusionLaw::from_name(c.law);
        } catch (const DomainError& e) {
            throw ValidationError(ValidationCode::bad_config, e.what());
        }
    }();
    return validate_spec(law, make_timechange(law, c.K), c.c);
}

/// CSV writer with the config echo as its first line and round-trip number formatting.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const RunConfig& cfg, const std::string& header) : path_(path) {
        f_ = std::fopen(path.string().c_str(), "wb");
        if (!f_) throw IoError("cannot write '" + path.string() + "'");
        std::fprintf(f_, "# config: %s\n%s\n", echo_json(cfg).dump().c_str(), header.c_str());
    }
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;
    ~CsvWriter() {
        if (f_) std::fclose(f_);
    }

    void row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            std::fprintf(f_, first ? "%.17g" : ",%.17g", v);
            first = false;
        }
        std::fputc('\n', f_);
    }

    /// path_id, label, then numeric fields.
    void labelled(std::size_t id, std::string_view label, std::initializer_list<double> values) {
        std::fprintf(f_, "%zu,%.*s", id, static_cast<int>(label.size()), label.data());
        for (double v : values) std::fprintf(f_, ",%.17g", v);
        std::fputc('\n', f_);
    }

    void close() {
        if (f_ && std::fclose(f_) != 0) {
            f_ = nullptr;
            throw IoError("error while writing '" + path_.string() + "'");
        }
        f_ = nullptr;
    }

    std::FILE* handle() { return f_; }

private:
    std::filesystem::path path_;
    std::FILE* f_ = nullptr;
};

inline std::filesystem::path prepare_out(const RunConfig& c) {
    std::filesystem::path dir(c.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + c.out + "': " + ec.message());
    return dir;
}

inline std::vector<double> inspect_times(const RunConfig& c) {
    std::vector<double> t(c.inspect_times);
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = i + 1 == t.size() ? c.T : c.T * static_cast<double>(i + 1) / static_cast<double>(t.size());
    return t;
}

inline std::string_view component_label(Component c) {
    switch (c) {
    case Component::x_exact: return "X";
    case Component::g: return "G";
    case Component::h: return "H";
    }
    return "?";
}

/// clock.csv, eta_surface.csv, h_density.csv.
inline int cmd_inspect(const RunConfig& c) {
    const FakeSpec spec = validate(c);
    const auto dir = prepare_out(c);
    const auto times = inspect_times(c);
    AuditGrid g;
    g.n_states = c.inspect_states;
    {
        CsvWriter w(dir / "clock.csv", c, "t,a,a_dot");
        for (double t : times) w.row({t, spec.clock().a(t), spec.clock().a_dot(t)});
        w.close();
    }
    {
        CsvWriter eta(dir / "eta_surface.csv", c, "t,y,eta");
        CsvWriter h(dir / "h_density.csv", c, "t,y,h");
        for (double t : times) {
            for (double y : g.states(spec.law(), t)) {
                eta.row({t, y, local_vol_eta(spec, t, y)});
                h.row({t, y, residual_density(spec, t, y)});
            }
        }
        eta.close();
        h.close();
    }
    return exit_ok;
}

/// paths.csv for the first export_paths paths, qv.csv for all of them.
inline int cmd_simulate(const RunConfig& c) {
    const FakeSpec spec = validate(c);
    const auto dir = prepare_out(c);
    const PathGrid grid(c.T, c.n_steps);
    const auto e = sample_fake(spec, grid, c.n_paths, {c.seed, c.threads});
    {
        CsvWriter w(dir / "paths.csv", c, "path_id,component,t,value");
        const std::size_t n = std::min(c.export_paths, e.n_paths);
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t j = 0; j < grid.n_records(); ++j)
                w.labelled(p, component_label(e.component[p]), {grid.record_time(j), e.value(p, j)});
        w.close();
    }
    {
        const auto qv = realized_qv_for(spec.law(), e);
        CsvWriter w(dir / "qv.csv", c, "path_id,component,qv");
        for (std::size_t p = 0; p < e.n_paths; ++p) w.labelled(p, component_label(e.component[p]), {qv[p]});
        w.close();
    }
    return exit_ok;
}

inline VerificationConfig verification_config(const RunConfig& c) {
    VerificationConfig v;
    v.rng = {c.seed, c.threads};
    v.T = c.T;
    v.n_paths = c.n_paths;
    v.n_steps = c.n_steps;
    v.madan_yor = c.madan_yor;
    v.embed_paths = c.n_paths;
    v.bm_step = c.bm_step;
    if (c.decreasing_barycentre) v.barycentre_family = [](double t, double x) { return barycentre_lognormal(1.0 / t, x); };
    return v;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("error while writing '" + path.string() + "'");
}

/// report.json from full_verification; exit 0 iff no check failed.
inline int cmd_verify(const RunConfig& c) {
    const FakeSpec spec = validate(c);
    const auto dir = prepare_out(c);
    const auto report = full_verification(spec, verification_config(c));
    auto j = to_json(report);
    j["run_config"] = echo_json(c);
    write_json(dir / "report.json", j);
    return report.all_passed() ? exit_ok : exit_check_failed;
}

/// Same-named checks already in `report` are replaced, the rest appended.
inline void merge_checks(nlohmann::json& report, const std::vector<CheckResult>& checks) {
    if (!report.contains("checks") || !report["checks"].is_array()) report["checks"] = nlohmann::json::array();
    auto& arr = report["checks"];
    for (const auto& c : checks) {
        const auto entry = to_json(c);
        bool replaced = false;
        for (auto& old : arr) {
            if (old.value("check", "") == c.name) {
                old = entry;
                replaced = true;
                break;
            }
        }
        if (!replaced) arr.push_back(entry);
    }
    bool pass = true;
    for (const auto& e : arr) pass = pass && e.value("pass", false);
    report["pass"] = pass;
}

/// embedded.csv and the embedding checks merged into report.json.
inline int cmd_madan_yor(const RunConfig& c) {
    validate(c);
    const auto dir = prepare_out(c);
    VerificationConfig v = verification_config(c);
    std::vector<double> times;
    for (double f : v.report_fractions) times.push_back(f * c.T);
    EmbedOptions eo;
    eo.bm_step = c.bm_step;
    eo.throw_on_exhaustion = false;
    eo.family = v.barycentre_family;
    const auto e = madan_yor_paths(times, c.n_paths, v.rng, eo);
    {
        CsvWriter w(dir / "embedded.csv", c, "path_id,t_report,value");
        for (std::size_t p = 0; p < e.n_paths; ++p)
            for (std::size_t j = 0; j < e.n_times(); ++j) {
                std::fprintf(w.handle(), "%zu,%.17g,%.17g\n", p, e.report_times[j], e.value(p, j));
            }
        w.close();
    }
    auto checks = barycentre_checks(v);
    for (auto& r : madan_yor_checks(e, v)) checks.push_back(std::move(r));

    const auto path = dir / "report.json";
    nlohmann::json report = nlohmann::json::object();
    if (std::filesystem::exists(path)) {
        std::ifstream in(path);
        try {
            report = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception&) {
            throw IoError("existing '" + path.string() + "' is not valid JSON");
        }
    }
    if (!report.contains("config")) report["config"] = echo_json(c);
    report["madan_yor_config"] = echo_json(c);
    merge_checks(report, checks);
    write_json(path, report);
    const bool ok = std::none_of(checks.begin(), checks.end(),
                                 [](const CheckResult& r) { return r.status == CheckStatus::fail; });
    return ok ? exit_ok : exit_check_failed;
}

} // namespace fakediff::cli
