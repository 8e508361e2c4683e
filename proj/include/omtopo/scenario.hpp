#pragma once

// Named, reproducible runs: each scenario is a LatticeSpec plus solver
// settings plus the list of artifacts to write.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "omtopo/csv.hpp"
#include "omtopo/dynamics.hpp"
#include "omtopo/error.hpp"
#include "omtopo/json_io.hpp"
#include "omtopo/manifest.hpp"
#include "omtopo/meanfield.hpp"
#include "omtopo/model.hpp"
#include "omtopo/spectral.hpp"

namespace omtopo {

inline constexpr const char* version_string = "0.1.0";

/// Re-run calibrate_g on g[adjust] so that |G_{bond_a}| == |G_{bond_b}|.
struct CalibrationSetting {
    std::size_t adjust = 0;
    CouplingEquality target{};
    double tol = 1e-8;
    friend bool operator==(const CalibrationSetting&, const CalibrationSetting&) = default;
};

struct ScenarioSettings {
    double steady_tol = 1e-12;  ///< normalized residual for the fixed-point steady state
    double dt = 0.0;            ///< RK4 step; 0 selects default_dt
    double t_end = 0.0;         ///< trajectory horizon; 0 selects 50 / min(kappa)
    int sample_every = 100;     ///< RK4 steps between trajectory rows
    std::optional<CalibrationSetting> calibration;
    double pss_tol = 1e-10;     ///< periodic steady state: stroboscopic tolerance
    int max_periods = 60;
    int n_samples = 121;        ///< spectrum / zero-mode samples over one period
    double transfer_dt = 0.05;
    int record_every = 100;     ///< propagation steps between transfer rows
    std::string coupling_source = "steady_state"; ///< or "analytic"
    friend bool operator==(const ScenarioSettings&, const ScenarioSettings&) = default;
};

struct Scenario {
    std::string name;
    LatticeSpec spec;
    ScenarioSettings settings;
    std::vector<std::string> outputs; ///< artifact kinds, each written to <kind>.csv
    friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline const std::vector<std::string>& static_output_kinds() {
    static const std::vector<std::string> k{"trajectory", "steady_state", "couplings", "spectrum", "gap_state"};
    return k;
}

inline const std::vector<std::string>& periodic_output_kinds() {
    static const std::vector<std::string> k{"periodic_trajectory", "spectrum_series", "zero_mode", "transfer"};
    return k;
}

namespace detail {

inline LatticeSpec two_cell_base() {
    LatticeSpec s;
    s.topology = Topology::cell_chain(2);
    s.delta_a = {1.0, 1.0};
    s.omega_b = {1.0, 1.0};
    s.g = {1e-6, 1e-6};
    s.kappa = {0.1, 0.1};
    s.gamma = {1e-5, 1e-5};
    s.drive = {ConstantDrive{1e5}, ConstantDrive{1e5}};
    return s;
}

inline LatticeSpec three_site_base() {
    LatticeSpec s;
    s.topology = Topology::odd_chain(2);
    s.delta_a = {1.0, 1.0};
    s.omega_b = {1.0};
    s.g = {1e-6};
    s.kappa = {0.1, 0.1};
    s.gamma = {1e-5};
    s.drive = {CosineDrive{1e5, -1, 0.006}, CosineDrive{1e5, 1, 0.006}};
    return s;
}

inline Scenario make(std::string name, LatticeSpec spec, std::vector<std::string> outputs,
                     std::optional<CalibrationSetting> cal = std::nullopt) {
    Scenario s{std::move(name), std::move(spec), {}, std::move(outputs)};
    s.settings.calibration = cal;
    return s;
}

} // namespace detail

/// Built-in scenarios, one per figure.
inline const std::vector<Scenario>& scenario_catalog() {
    static const std::vector<Scenario> catalog = [] {
        using detail::make;
        std::vector<Scenario> c;
        const CalibrationSetting first{0, {0, 2}, 1e-8};
        const CalibrationSetting second{1, {0, 2}, 1e-8};

        auto s = detail::two_cell_base();
        c.push_back(make("fig2a", s, {"trajectory", "steady_state", "couplings"}));

        s.g[0] = 1.023e-6;
        c.push_back(make("fig2d", s, {"trajectory", "steady_state", "couplings"}, first));
        c.push_back(make("fig3", s, {"steady_state", "couplings", "spectrum", "gap_state"}, first));

        s = detail::two_cell_base();
        s.g[0] = 2.015e-6;
        s.kappa[0] = 3.5;
        c.push_back(make("fig4", s, static_output_kinds(), first));

        s = detail::two_cell_base();
        s.g[0] = 5.12e-6;
        s.kappa[0] = 10.0;
        c.push_back(make("fig5", s, static_output_kinds(), first));

        s = detail::two_cell_base();
        s.topology = Topology::cell_chain(3);
        s.delta_a = {1.0, 1.0, 1.0};
        s.omega_b = {1.0, 1.0, 1.0};
        s.g = {1.028e-6, 1.0e-6, 0.975e-6};
        s.kappa = {0.5, 0.2, 0.1};
        s.gamma = {1e-5, 1e-5, 1e-5};
        s.drive.assign(3, ConstantDrive{1e5});
        c.push_back(make("fig6", s, static_output_kinds()));

        s = detail::two_cell_base();
        s.kappa[1] = 0.412;
        c.push_back(make("fig7", s, static_output_kinds()));

        s = detail::two_cell_base();
        s.g[1] = 2.7375e-6;
        s.kappa[1] = 5.0;
        c.push_back(make("fig8", s, static_output_kinds(), second));

        const auto odd = detail::three_site_base();
        c.push_back(make("fig10a", odd, {"periodic_trajectory"}));
        c.push_back(make("fig10b", odd, {"spectrum_series"}));
        c.push_back(make("fig10c", odd, {"zero_mode"}));
        c.push_back(make("transfer", odd, {"transfer"}));
        return c;
    }();
    return catalog;
}

inline const Scenario& find_scenario(const std::string& name) {
    for (const auto& s : scenario_catalog())
        if (s.name == name) return s;
    std::string known;
    for (const auto& s : scenario_catalog()) known += (known.empty() ? "" : ", ") + s.name;
    throw ConfigError("scenario", "unknown scenario \"" + name + "\" (known: " + known + ")");
}

// ---------------------------------------------------------------------------
// Parameter paths: "kappa[1]", "g[0]", "drive[1].nu", ...

namespace detail {

inline double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) throw ConfigError(key, "expected a number, got \"" + text + "\"");
    return v;
}

inline int parse_int(const std::string& key, const std::string& text) {
    int v = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) throw ConfigError(key, "expected an integer, got \"" + text + "\"");
    return v;
}

inline std::vector<double>* spec_array(LatticeSpec& s, const std::string& name) {
    if (name == "delta_a") return &s.delta_a;
    if (name == "omega_b") return &s.omega_b;
    if (name == "g") return &s.g;
    if (name == "kappa") return &s.kappa;
    if (name == "gamma") return &s.gamma;
    return nullptr;
}

} // namespace detail

/// Reads the scalar addressed by `path`.
inline double get_parameter(const LatticeSpec& spec, const std::string& path) {
    static const std::regex array_re(R"(^([a-z_]+)\[(\d+)\]$)");
    static const std::regex drive_re(R"(^drive\[(\d+)\]\.(amplitude|phase|base|sign|nu)$)");
    std::smatch m;
    if (std::regex_match(path, m, drive_re)) {
        const auto i = static_cast<std::size_t>(std::stoul(m[1]));
        if (i >= spec.drive.size()) throw ConfigError(path, "index out of range");
        const std::string field = m[2];
        if (const auto* c = std::get_if<ConstantDrive>(&spec.drive[i])) {
            if (field == "amplitude") return c->amplitude;
            if (field == "phase") return c->phase;
            throw ConfigError(path, "drive is not cosine");
        }
        const auto& c = std::get<CosineDrive>(spec.drive[i]);
        if (field == "base") return c.base;
        if (field == "sign") return c.sign;
        if (field == "nu") return c.nu;
        throw ConfigError(path, "drive is not constant");
    }
    if (std::regex_match(path, m, array_re)) {
        auto* arr = detail::spec_array(const_cast<LatticeSpec&>(spec), m[1]);
        if (!arr) throw ConfigError(path, "unknown parameter \"" + std::string(m[1]) + "\"");
        const auto i = static_cast<std::size_t>(std::stoul(m[2]));
        if (i >= arr->size()) throw ConfigError(path, "index out of range (size " + std::to_string(arr->size()) + ")");
        return (*arr)[i];
    }
    throw ConfigError(path, "unknown parameter path (expected e.g. kappa[1] or drive[0].nu)");
}

/// Sets one scalar of the spec addressed by `path`; the result is validated.
inline void set_parameter(LatticeSpec& spec, const std::string& path, double value) {
    static const std::regex array_re(R"(^([a-z_]+)\[(\d+)\]$)");
    static const std::regex drive_re(R"(^drive\[(\d+)\]\.(amplitude|phase|base|sign|nu)$)");
    std::smatch m;
    if (std::regex_match(path, m, drive_re)) {
        const auto i = static_cast<std::size_t>(std::stoul(m[1]));
        if (i >= spec.drive.size()) throw ConfigError(path, "index out of range");
        const std::string field = m[2];
        auto& d = spec.drive[i];
        if (field == "amplitude" || field == "phase") {
            auto* c = std::get_if<ConstantDrive>(&d);
            if (!c) throw ConfigError(path, "drive is not constant");
            (field == "amplitude" ? c->amplitude : c->phase) = value;
        } else {
            auto* c = std::get_if<CosineDrive>(&d);
            if (!c) throw ConfigError(path, "drive is not cosine");
            if (field == "base") c->base = value;
            if (field == "nu") c->nu = value;
            if (field == "sign") {
                if (value != 1.0 && value != -1.0) throw ConfigError(path, "sign must be +1 or -1");
                c->sign = static_cast<int>(value);
            }
        }
    } else if (std::regex_match(path, m, array_re)) {
        auto* arr = detail::spec_array(spec, m[1]);
        if (!arr) throw ConfigError(path, "unknown parameter \"" + std::string(m[1]) + "\"");
        const auto i = static_cast<std::size_t>(std::stoul(m[2]));
        if (i >= arr->size()) throw ConfigError(path, "index out of range (size " + std::to_string(arr->size()) + ")");
        (*arr)[i] = value;
    } else {
        throw ConfigError(path, "unknown parameter path (expected e.g. kappa[1] or drive[0].nu)");
    }
    try {
        validate_spec(spec);
    } catch (const SpecError& e) {
        throw ConfigError(path, e.what());
    }
}

/// Applies one `key=value` override; keys starting with "settings." address
/// ScenarioSettings, everything else is a spec parameter path.
inline void apply_override(Scenario& sc, const std::string& key, const std::string& value) {
    constexpr std::string_view prefix = "settings.";
    if (key.rfind(prefix, 0) != 0) {
        set_parameter(sc.spec, key, detail::parse_double(key, value));
        return;
    }
    const std::string f = key.substr(prefix.size());
    auto& st = sc.settings;
    if (f == "steady_tol") st.steady_tol = detail::parse_double(key, value);
    else if (f == "dt") st.dt = detail::parse_double(key, value);
    else if (f == "t_end") st.t_end = detail::parse_double(key, value);
    else if (f == "sample_every") st.sample_every = detail::parse_int(key, value);
    else if (f == "pss_tol") st.pss_tol = detail::parse_double(key, value);
    else if (f == "max_periods") st.max_periods = detail::parse_int(key, value);
    else if (f == "n_samples") st.n_samples = detail::parse_int(key, value);
    else if (f == "transfer_dt") st.transfer_dt = detail::parse_double(key, value);
    else if (f == "record_every") st.record_every = detail::parse_int(key, value);
    else if (f == "coupling_source") {
        if (value != "steady_state" && value != "analytic") throw ConfigError(key, "expected steady_state or analytic");
        st.coupling_source = value;
    } else if (f == "calibration") {
        if (value != "none") throw ConfigError(key, "only \"none\" can be set from the command line");
        st.calibration.reset();
    } else {
        throw ConfigError(key, "unknown setting");
    }
}

/// Parses "key=value".
inline std::pair<std::string, std::string> split_override(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(kv, "override must look like key=value");
    return {kv.substr(0, eq), kv.substr(eq + 1)};
}

inline void check_settings(const ScenarioSettings& s) {
    auto positive = [](const char* k, double v) {
        if (!(v > 0.0)) throw ConfigError(std::string("settings.") + k, "must be > 0");
    };
    auto non_negative = [](const char* k, double v) {
        if (!(v >= 0.0)) throw ConfigError(std::string("settings.") + k, "must be >= 0");
    };
    positive("steady_tol", s.steady_tol);
    non_negative("dt", s.dt);
    non_negative("t_end", s.t_end);
    positive("sample_every", s.sample_every);
    positive("pss_tol", s.pss_tol);
    positive("max_periods", s.max_periods);
    if (s.n_samples < 2) throw ConfigError("settings.n_samples", "must be >= 2");
    positive("transfer_dt", s.transfer_dt);
    positive("record_every", s.record_every);
    if (s.calibration) positive("calibration.tol", s.calibration->tol);
}

/// Rejects output kinds that do not fit the scenario's drive type.
inline void check_scenario(const Scenario& sc) {
    validate_spec(sc.spec);
    check_settings(sc.settings);
    bool constant = std::all_of(sc.spec.drive.begin(), sc.spec.drive.end(), is_constant);
    const auto& allowed = constant ? static_output_kinds() : periodic_output_kinds();
    for (std::size_t i = 0; i < sc.outputs.size(); ++i) {
        if (std::find(sc.outputs.begin(), sc.outputs.begin() + static_cast<std::ptrdiff_t>(i), sc.outputs[i]) !=
            sc.outputs.begin() + static_cast<std::ptrdiff_t>(i))
            throw ConfigError("outputs[" + std::to_string(i) + "]", "duplicate output \"" + sc.outputs[i] + "\"");
        if (std::find(allowed.begin(), allowed.end(), sc.outputs[i]) == allowed.end())
            throw ConfigError("outputs[" + std::to_string(i) + "]",
                              "\"" + sc.outputs[i] + "\" is not available for " +
                                  (constant ? "constant" : "periodic") + " drives");
    }
    if (!constant) {
        const bool odd = sc.spec.topology.kind() == Topology::Kind::OddChain;
        for (const char* k : {"zero_mode", "transfer"})
            if (!odd && std::find(sc.outputs.begin(), sc.outputs.end(), k) != sc.outputs.end())
                throw ConfigError("outputs", std::string(k) + " needs an OddChain topology");
        if (sc.settings.coupling_source == "analytic" && sc.spec.topology != Topology::odd_chain(2))
            throw ConfigError("settings.coupling_source", "analytic couplings describe the 3-site chain only");
        if (sc.settings.calibration) throw ConfigError("settings.calibration", "needs constant drives");
    }
}

// ---------------------------------------------------------------------------

namespace detail {

inline json chain_json(const EffectiveChain& c) {
    json a = json::array();
    for (const auto& z : c.couplings) a.push_back(std::abs(z));
    return a;
}

inline json run_static(const Scenario& sc, LatticeSpec& spec, Manifest& out) {
    json results;
    const auto& st = sc.settings;
    if (st.calibration) {
        const auto cal = calibrate_g(spec, st.calibration->adjust, st.calibration->target, st.calibration->tol);
        spec = cal.spec;
        results["calibration"] = {{"index", st.calibration->adjust},
                                  {"caption_g", sc.spec.g[st.calibration->adjust]},
                                  {"calibrated_g", cal.g},
                                  {"iterations", cal.iterations},
                                  {"mismatch", cal.mismatch}};
    }
    const auto ss = find_steady_state(spec, st.steady_tol);
    results["steady_state"] = to_json(ss.state);
    results["steady_state"]["method"] = to_string(ss.method);
    results["steady_state"]["residual"] = ss.residual;
    results["steady_state"]["iterations"] = ss.iterations_or_time;
    json abs_alpha = json::array();
    for (const auto& a : ss.state.alpha) abs_alpha.push_back(std::abs(a));
    results["steady_state"]["abs_alpha"] = abs_alpha;

    const auto chain = effective_chain(spec, ss.state);
    results["abs_couplings"] = chain_json(chain);
    if (chain.num_sites() % 2 == 0 && chain.couplings.size() >= 3) {
        results["coupling_ratio"] = coupling_ratio(chain);
        results["phase"] = to_string(classify_phase(chain));
    }
    const auto spectrum = chain_spectrum(chain);
    json gap = json::array();
    for (auto k : spectrum.gap_state_indices)
        gap.push_back({{"index", k + 1},
                       {"energy", spectrum.eigenvalues[k]},
                       {"edge_weight", edge_weight(spectrum.eigenvectors[k])},
                       {"ipr", ipr(spectrum.eigenvectors[k])}});
    results["gap_states"] = gap;

    for (const auto& kind : sc.outputs) {
        if (kind == "trajectory") {
            const double dt = st.dt > 0.0 ? st.dt : default_dt(spec);
            const double t_end =
                st.t_end > 0.0 ? st.t_end : 50.0 / *std::min_element(spec.kappa.begin(), spec.kappa.end());
            results["trajectory"] = {{"dt", dt}, {"t_end", t_end}};
            const auto traj = integrate(spec, MeanFieldState::vacuum(spec), t_end, dt, st.sample_every);
            out.add(kind, kind + ".csv", csv::trajectory_table(traj).str());
        } else if (kind == "steady_state") {
            out.add(kind, kind + ".csv", csv::steady_state_table(ss.state).str());
        } else if (kind == "couplings") {
            out.add(kind, kind + ".csv", csv::couplings_table(chain).str());
        } else if (kind == "spectrum") {
            out.add(kind, kind + ".csv", csv::spectrum_table(spectrum).str());
        } else if (kind == "gap_state") {
            const auto& v = spectrum.eigenvectors[spectrum.gap_state_indices.front()];
            out.add(kind, kind + ".csv", csv::distribution_table(v).str());
        }
    }
    return results;
}

inline json run_periodic(const Scenario& sc, const LatticeSpec& spec, Manifest& out) {
    json results;
    const auto& st = sc.settings;
    const auto nu = drive_frequency(spec);
    if (!nu) throw ConfigError("spec.drive", "periodic scenario needs cosine drives");
    results["nu"] = *nu;

    std::optional<PeriodicSteadyState> pss;
    auto need_pss = [&]() -> const PeriodicSteadyState& {
        if (!pss) {
            PeriodicOptions opt;
            opt.dt = st.dt;
            opt.sample_every = st.sample_every;
            pss = periodic_steady_state(spec, st.pss_tol, st.max_periods, opt);
            results["periodic_steady_state"] = {{"period", pss->period},
                                                {"convergence_error", pss->convergence_error},
                                                {"periods_integrated", pss->periods_integrated}};
        }
        return *pss;
    };
    const bool analytic = st.coupling_source == "analytic";
    auto schedule = [&]() -> CouplingSchedule {
        if (analytic) return analytic_schedule(*nu);
        return steady_state_schedule(spec, need_pss());
    };
    // Periodic outputs use a time origin at the start of the recorded period.
    for (const auto& kind : sc.outputs) {
        if (kind == "periodic_trajectory") {
            auto traj = need_pss().samples;
            const double t0 = traj.times.front();
            for (auto& t : traj.times) t -= t0;
            for (auto& s : traj.states) s.t -= t0;
            double dev1 = 0.0, dev2 = 0.0;
            for (std::size_t k = 0; k < traj.times.size(); ++k) {
                const double c = std::cos(*nu * traj.times[k]);
                dev1 = std::max(dev1, std::abs(std::abs(traj.states[k].alpha.front()) - (1.0 - c) * 1e5));
                dev2 = std::max(dev2, std::abs(std::abs(traj.states[k].alpha.back()) - (1.0 + c) * 1e5));
            }
            results["cosine_envelope_deviation"] = {dev1, dev2};
            out.add(kind, kind + ".csv", csv::trajectory_table(traj).str());
        } else if (kind == "spectrum_series") {
            const double period = 2.0 * std::numbers::pi / *nu;
            const auto series = instantaneous_spectrum_series(schedule(), 0.0, period, st.n_samples);
            double max_zero = 0.0, min_gap = std::numeric_limits<double>::infinity();
            for (const auto& s : series) {
                max_zero = std::max(max_zero, std::abs(s.spectrum.eigenvalues[s.spectrum.gap_state_indices.front()]));
                min_gap = std::min(min_gap, s.spectrum.eigenvalues.back());
            }
            results["max_abs_zero_energy"] = max_zero;
            results["min_gap"] = min_gap;
            out.add(kind, kind + ".csv", csv::spectrum_series_table(series).str());
        } else if (kind == "zero_mode") {
            const double period = 2.0 * std::numbers::pi / *nu;
            const auto z = zero_mode_trajectory(schedule(), 0.0, period, st.n_samples);
            out.add(kind, kind + ".csv", csv::zero_mode_table(z).str());
        } else if (kind == "transfer") {
            const auto r = transfer_fidelity(schedule(), *nu, st.transfer_dt, st.record_every);
            results["fidelity"] = r.fidelity;
            results["norm_drift"] = r.norm_drift;
            out.add(kind, kind + ".csv", csv::transfer_table(r).str());
        }
    }
    results["coupling_source"] = st.coupling_source;
    return results;
}

} // namespace detail

inline json to_json(const CalibrationSetting& c) {
    return json{{"adjust", c.adjust}, {"bond_a", c.target.bond_a}, {"bond_b", c.target.bond_b}, {"tol", c.tol}};
}

inline json to_json(const ScenarioSettings& s) {
    return json{{"steady_tol", s.steady_tol},
                {"dt", s.dt},
                {"t_end", s.t_end},
                {"sample_every", s.sample_every},
                {"calibration", s.calibration ? to_json(*s.calibration) : json(nullptr)},
                {"pss_tol", s.pss_tol},
                {"max_periods", s.max_periods},
                {"n_samples", s.n_samples},
                {"transfer_dt", s.transfer_dt},
                {"record_every", s.record_every},
                {"coupling_source", s.coupling_source}};
}

/// Runs the full pipeline and writes <out_dir>/<kind>.csv plus manifest.json.
/// CSV bytes depend only on the scenario; the manifest also records wall time.
inline json run_scenario(const Scenario& sc, const std::filesystem::path& out_dir) {
    check_scenario(sc);
    const auto start = std::chrono::steady_clock::now();
    Manifest out(out_dir);
    LatticeSpec spec = sc.spec;
    const bool constant = std::all_of(spec.drive.begin(), spec.drive.end(), is_constant);
    json results = constant ? detail::run_static(sc, spec, out) : detail::run_periodic(sc, spec, out);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json manifest{{"scenario", sc.name},
                  {"resolved_spec", to_json(spec)},
                  {"settings", to_json(sc.settings)},
                  {"results", results},
                  {"outputs", out.outputs_json()},
                  {"versions", {{"omtopo", version_string}, {"compiler", __VERSION__}, {"cxx", __cplusplus}}},
                  {"wall_time", wall}};
    write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

inline json run_scenario(const std::string& name, const std::map<std::string, std::string>& overrides,
                         const std::filesystem::path& out_dir) {
    Scenario sc = find_scenario(name);
    for (const auto& [k, v] : overrides) apply_override(sc, k, v);
    return run_scenario(sc, out_dir);
}

} // namespace omtopo
