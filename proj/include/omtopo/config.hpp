#pragma once

// Config files. A scenario config is
//   {"kind": "scenario", "name": ..., "base": <catalog name>, "spec": {...},
//    "set": {"kappa[1]": 5}, "settings": {...}, "outputs": [...]}
// and a sweep config is
//   {"kind": "sweep", "name": ..., "base" | "spec", "set", "parameter",
//    "values": [...] | "range": {"start", "stop", "count"}, "observable",
//    "calibration", "steady_tol", "rel_tol", "jobs"}.
// "base" starts from a built-in scenario; "spec" and "set" override it.

#include <filesystem>
#include <string>
#include <variant>

#include "omtopo/error.hpp"
#include "omtopo/json_io.hpp"
#include "omtopo/manifest.hpp"
#include "omtopo/scenario.hpp"
#include "omtopo/sweep.hpp"

namespace omtopo {

using Config = std::variant<Scenario, SweepSpec>;

namespace detail {

/// Line and column (1-based) of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

inline std::optional<CalibrationSetting> calibration_from_json(const json& j, const std::string& path) {
    if (j.is_null()) return std::nullopt;
    check_keys(j, path, {"adjust", "bond_a", "bond_b", "tol"});
    CalibrationSetting c;
    auto index = [&](const char* key, std::size_t fallback) {
        if (!j.contains(key)) return fallback;
        const int v = read_int(j.at(key), join_path(path, key));
        if (v < 0) throw ConfigError(join_path(path, key), "must be >= 0");
        return static_cast<std::size_t>(v);
    };
    c.adjust = index("adjust", c.adjust);
    c.target.bond_a = index("bond_a", c.target.bond_a);
    c.target.bond_b = index("bond_b", c.target.bond_b);
    if (j.contains("tol")) c.tol = read_number(j.at("tol"), join_path(path, "tol"));
    return c;
}

inline void settings_from_json(const json& j, ScenarioSettings& s) {
    const std::string path = "settings";
    check_keys(j, path, {"steady_tol", "dt", "t_end", "sample_every", "calibration", "pss_tol", "max_periods",
                         "n_samples", "transfer_dt", "record_every", "coupling_source"});
    auto num = [&](const char* key, double& out) {
        if (j.contains(key)) out = read_number(j.at(key), join_path(path, key));
    };
    auto integer = [&](const char* key, int& out) {
        if (j.contains(key)) out = read_int(j.at(key), join_path(path, key));
    };
    num("steady_tol", s.steady_tol);
    num("dt", s.dt);
    num("t_end", s.t_end);
    integer("sample_every", s.sample_every);
    if (j.contains("calibration")) s.calibration = calibration_from_json(j.at("calibration"), join_path(path, "calibration"));
    num("pss_tol", s.pss_tol);
    integer("max_periods", s.max_periods);
    integer("n_samples", s.n_samples);
    num("transfer_dt", s.transfer_dt);
    integer("record_every", s.record_every);
    if (j.contains("coupling_source")) {
        const auto v = read_string(j.at("coupling_source"), join_path(path, "coupling_source"));
        if (v != "steady_state" && v != "analytic")
            throw ConfigError(join_path(path, "coupling_source"), "expected \"steady_state\" or \"analytic\"");
        s.coupling_source = v;
    }
}

/// Applies "base", "spec" and "set"; returns the catalog entry (or a blank
/// scenario) with the spec resolved.
inline Scenario resolve_base(const json& j) {
    Scenario sc;
    if (j.contains("base")) sc = find_scenario(read_string(j.at("base"), "base"));
    else if (!j.contains("spec")) throw ConfigError("spec", "missing: give \"spec\" or \"base\"");
    if (j.contains("spec")) sc.spec = spec_from_json(j.at("spec"), "spec");
    if (j.contains("set")) {
        const json& set = j.at("set");
        require_object(set, "set");
        for (const auto& [key, value] : set.items())
            set_parameter(sc.spec, key, read_number(value, join_path("set", key)));
    }
    return sc;
}

inline Scenario scenario_from_json(const json& j) {
    check_keys(j, "", {"kind", "name", "base", "spec", "set", "settings", "outputs"});
    Scenario sc = resolve_base(j);
    if (j.contains("name")) sc.name = read_string(j.at("name"), "name");
    if (sc.name.empty()) throw ConfigError("name", "missing: give \"name\" or \"base\"");
    if (j.contains("settings")) settings_from_json(j.at("settings"), sc.settings);
    if (j.contains("outputs")) {
        const json& o = j.at("outputs");
        if (!o.is_array()) throw ConfigError("outputs", "expected an array of output kinds");
        sc.outputs.clear();
        for (std::size_t i = 0; i < o.size(); ++i) sc.outputs.push_back(read_string(o[i], index_path("outputs", i)));
    } else if (!j.contains("base")) {
        const bool constant = std::all_of(sc.spec.drive.begin(), sc.spec.drive.end(), is_constant);
        sc.outputs = constant ? static_output_kinds() : std::vector<std::string>{"periodic_trajectory"};
    }
    check_scenario(sc);
    return sc;
}

inline std::vector<double> range_values(const json& r) {
    check_keys(r, "range", {"start", "stop", "count"});
    const double start = read_number(require_key(r, "range", "start"), "range.start");
    const double stop = read_number(require_key(r, "range", "stop"), "range.stop");
    const int count = read_int(require_key(r, "range", "count"), "range.count");
    if (count < 0) throw ConfigError("range.count", "must be >= 0");
    std::vector<double> v;
    for (int i = 0; i < count; ++i)
        v.push_back(count == 1 ? start : start + (stop - start) * static_cast<double>(i) / (count - 1));
    return v;
}

inline SweepSpec sweep_from_json(const json& j) {
    check_keys(j, "", {"kind", "name", "base", "spec", "set", "parameter", "values", "range", "observable",
                       "calibration", "steady_tol", "rel_tol", "jobs"});
    const Scenario sc = resolve_base(j);
    SweepSpec s;
    s.base = sc.spec;
    s.calibration = sc.settings.calibration;
    s.name = j.contains("name") ? read_string(j.at("name"), "name") : (sc.name.empty() ? "sweep" : sc.name + "_sweep");
    s.parameter = read_string(require_key(j, "", "parameter"), "parameter");
    if (j.contains("values") == j.contains("range")) throw ConfigError("values", "give exactly one of \"values\" or \"range\"");
    s.values = j.contains("values") ? read_numbers(j.at("values"), "values") : range_values(j.at("range"));
    s.observable = observable_from_string(read_string(require_key(j, "", "observable"), "observable"));
    if (j.contains("calibration")) s.calibration = calibration_from_json(j.at("calibration"), "calibration");
    if (j.contains("steady_tol")) s.steady_tol = read_number(j.at("steady_tol"), "steady_tol");
    if (j.contains("rel_tol")) s.rel_tol = read_number(j.at("rel_tol"), "rel_tol");
    if (j.contains("jobs")) s.jobs = read_int(j.at("jobs"), "jobs");
    check_sweep(s);
    return s;
}

} // namespace detail

inline json to_json(const Scenario& sc) {
    return json{{"kind", "scenario"},
                {"name", sc.name},
                {"spec", to_json(sc.spec)},
                {"settings", to_json(sc.settings)},
                {"outputs", sc.outputs}};
}

inline json config_to_json(const Config& c) {
    return std::visit([](const auto& x) { return to_json(x); }, c);
}

inline Config config_from_json(const json& j) {
    detail::require_object(j, "");
    const auto kind = detail::read_string(detail::require_key(j, "", "kind"), "kind");
    if (kind == "scenario") return detail::scenario_from_json(j);
    if (kind == "sweep") return detail::sweep_from_json(j);
    throw ConfigError("kind", "expected \"scenario\" or \"sweep\", got \"" + kind + "\"");
}

/// Parses config text; syntax errors report line and column.
inline Config parse_config(const std::string& text, const std::string& source = "<config>") {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col), "JSON syntax error");
    }
    return config_from_json(j);
}

inline Config load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError(path.string(), "file not found");
    return parse_config(read_file(path), path.string());
}

/// Fully resolved form: loading it back yields an equal Config.
inline std::string dump_config(const Config& c) { return config_to_json(c).dump(2) + "\n"; }

inline void save_config(const Config& c, const std::filesystem::path& path) { write_file(path, dump_config(c)); }

} // namespace omtopo
