#pragma once

// JSON (de)serialization of LatticeSpec. Readers are strict: unknown keys and
// wrong types raise ConfigError carrying the offending key path.

#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "omtopo/error.hpp"
#include "omtopo/model.hpp"

namespace omtopo {

using json = nlohmann::ordered_json;

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

inline std::string index_path(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

inline void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
}

/// Rejects keys outside `allowed`.
inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    require_object(j, path);
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(join_path(path, key), "unknown key");
    }
}

inline const json& require_key(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw ConfigError(join_path(path, key), "missing required key");
    return j.at(key);
}

inline double read_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

inline int read_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<int>();
}

inline std::string read_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

inline bool read_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
    return j.get<bool>();
}

inline std::vector<double> read_numbers(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_number(j[i], index_path(path, i)));
    return out;
}

} // namespace detail

inline json to_json(const DriveProtocol& d) {
    if (const auto* c = std::get_if<ConstantDrive>(&d)) {
        json j{{"type", "constant"}, {"amplitude", c->amplitude}};
        if (c->phase != 0.0) j["phase"] = c->phase;
        return j;
    }
    const auto& cs = std::get<CosineDrive>(d);
    return json{{"type", "cosine"}, {"base", cs.base}, {"sign", cs.sign}, {"nu", cs.nu}};
}

inline DriveProtocol drive_from_json(const json& j, const std::string& path) {
    detail::require_object(j, path);
    const auto type = detail::read_string(detail::require_key(j, path, "type"), detail::join_path(path, "type"));
    if (type == "constant") {
        detail::check_keys(j, path, {"type", "amplitude", "phase"});
        ConstantDrive c;
        c.amplitude = detail::read_number(detail::require_key(j, path, "amplitude"), detail::join_path(path, "amplitude"));
        if (j.contains("phase")) c.phase = detail::read_number(j.at("phase"), detail::join_path(path, "phase"));
        return c;
    }
    if (type == "cosine") {
        detail::check_keys(j, path, {"type", "base", "sign", "nu"});
        CosineDrive c;
        c.base = detail::read_number(detail::require_key(j, path, "base"), detail::join_path(path, "base"));
        c.sign = detail::read_int(detail::require_key(j, path, "sign"), detail::join_path(path, "sign"));
        c.nu = detail::read_number(detail::require_key(j, path, "nu"), detail::join_path(path, "nu"));
        return c;
    }
    throw ConfigError(detail::join_path(path, "type"), "expected \"constant\" or \"cosine\", got \"" + type + "\"");
}

inline json to_json(const LatticeSpec& s) {
    json drives = json::array();
    for (const auto& d : s.drive) drives.push_back(to_json(d));
    return json{{"topology", {{"kind", to_string(s.topology.kind())}, {"n", s.topology.n()}}},
                {"delta_a", s.delta_a},
                {"omega_b", s.omega_b},
                {"g", s.g},
                {"kappa", s.kappa},
                {"gamma", s.gamma},
                {"drive", drives}};
}

/// Parses and validates a LatticeSpec; `path` prefixes reported key paths.
inline LatticeSpec spec_from_json(const json& j, const std::string& path = "") {
    detail::check_keys(j, path, {"topology", "delta_a", "omega_b", "g", "kappa", "gamma", "drive"});
    const std::string tpath = detail::join_path(path, "topology");
    const json& t = detail::require_key(j, path, "topology");
    detail::check_keys(t, tpath, {"kind", "n"});
    const auto kind = detail::read_string(detail::require_key(t, tpath, "kind"), detail::join_path(tpath, "kind"));
    const int n = detail::read_int(detail::require_key(t, tpath, "n"), detail::join_path(tpath, "n"));

    LatticeSpec s;
    try {
        if (kind == "CellChain")
            s.topology = Topology::cell_chain(n);
        else if (kind == "OddChain")
            s.topology = Topology::odd_chain(n);
        else
            throw ConfigError(detail::join_path(tpath, "kind"), "expected \"CellChain\" or \"OddChain\"");
    } catch (const SpecError& e) {
        throw ConfigError(detail::join_path(tpath, "n"), e.reason());
    }
    auto numbers = [&](const char* key) {
        return detail::read_numbers(detail::require_key(j, path, key), detail::join_path(path, key));
    };
    s.delta_a = numbers("delta_a");
    s.omega_b = numbers("omega_b");
    s.g = numbers("g");
    s.kappa = numbers("kappa");
    s.gamma = numbers("gamma");
    const std::string dpath = detail::join_path(path, "drive");
    const json& drives = detail::require_key(j, path, "drive");
    if (!drives.is_array()) throw ConfigError(dpath, "expected an array of drives");
    for (std::size_t i = 0; i < drives.size(); ++i) s.drive.push_back(drive_from_json(drives[i], detail::index_path(dpath, i)));
    try {
        validate_spec(s);
    } catch (const SpecError& e) {
        throw ConfigError(detail::join_path(path, e.field()), e.reason());
    }
    return s;
}

inline json to_json(const MeanFieldState& st) {
    auto pairs = [](const std::vector<cplx>& v) {
        json a = json::array();
        for (const auto& z : v) a.push_back(json::array({z.real(), z.imag()}));
        return a;
    };
    return json{{"t", st.t}, {"alpha", pairs(st.alpha)}, {"beta", pairs(st.beta)}};
}

} // namespace omtopo
