#pragma once

// One-parameter sweeps over a base spec. Points are independent and may run
// on several threads; results are stored by index so output order is fixed.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "omtopo/csv.hpp"
#include "omtopo/json_io.hpp"
#include "omtopo/manifest.hpp"
#include "omtopo/meanfield.hpp"
#include "omtopo/model.hpp"
#include "omtopo/scenario.hpp"
#include "omtopo/spectral.hpp"

namespace omtopo {

enum class Observable { EdgeWeight, GapSplitting, CouplingRatio, SteadyAlphaAbs, PhaseClass };

inline std::string to_string(Observable o) {
    switch (o) {
    case Observable::EdgeWeight: return "edge_weight_of_gap_state";
    case Observable::GapSplitting: return "gap_state_splitting";
    case Observable::CouplingRatio: return "coupling_ratio";
    case Observable::SteadyAlphaAbs: return "steady_alpha_abs";
    case Observable::PhaseClass: return "phase_class";
    }
    return "?";
}

inline Observable observable_from_string(const std::string& s, const std::string& key = "observable") {
    for (auto o : {Observable::EdgeWeight, Observable::GapSplitting, Observable::CouplingRatio,
                   Observable::SteadyAlphaAbs, Observable::PhaseClass})
        if (to_string(o) == s) return o;
    throw ConfigError(key, "unknown observable \"" + s + "\"");
}

struct SweepSpec {
    std::string name = "sweep";
    LatticeSpec base;
    std::string parameter;          ///< parameter path, e.g. "kappa[1]"
    std::vector<double> values;     ///< strictly monotone
    Observable observable = Observable::SteadyAlphaAbs;
    std::optional<CalibrationSetting> calibration;
    double steady_tol = 1e-12;
    double rel_tol = 0.02;          ///< phase_class: relative width of the critical band
    int jobs = 1;
    friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct SweepPoint {
    double value = 0.0;
    bool ok = false;
    std::string error;
    std::vector<double> observables; ///< one per numeric column
    std::string phase;               ///< phase_class only
    std::optional<double> calibrated_g;
};

/// Numeric observable columns (phase_class adds a text column before them).
inline std::vector<std::string> observable_columns(const SweepSpec& s) {
    switch (s.observable) {
    case Observable::EdgeWeight: return {"edge_weight"};
    case Observable::GapSplitting: return {"splitting", "lambda_low", "lambda_high"};
    case Observable::CouplingRatio: return {"coupling_ratio"};
    case Observable::SteadyAlphaAbs: return csv::numbered("abs_alpha_", s.base.num_cavities());
    case Observable::PhaseClass: return {"coupling_ratio"};
    }
    return {};
}

/// Rejects sweeps that cannot be evaluated before any work is done.
inline void check_sweep(const SweepSpec& s) {
    validate_spec(s.base);
    if (!std::all_of(s.base.drive.begin(), s.base.drive.end(), is_constant))
        throw ConfigError("spec.drive", "sweeps need constant drives");
    if (s.parameter.empty()) throw ConfigError("parameter", "missing parameter path");
    get_parameter(s.base, s.parameter);
    for (std::size_t i = 0; i < s.values.size(); ++i)
        if (!std::isfinite(s.values[i])) throw ConfigError("values[" + std::to_string(i) + "]", "must be finite");
    if (s.values.size() >= 2) {
        const bool up = s.values[1] > s.values[0];
        for (std::size_t i = 1; i < s.values.size(); ++i)
            if ((up && !(s.values[i] > s.values[i - 1])) || (!up && !(s.values[i] < s.values[i - 1])))
                throw ConfigError("values[" + std::to_string(i) + "]", "values must be strictly monotone");
    }
    const bool even = s.base.topology.kind() == Topology::Kind::CellChain;
    if ((s.observable == Observable::CouplingRatio || s.observable == Observable::PhaseClass) &&
        !(even && s.base.topology.n() >= 2))
        throw ConfigError("observable", to_string(s.observable) + " needs a CellChain with at least 2 cells");
    if (s.observable == Observable::GapSplitting && !even)
        throw ConfigError("observable", "gap_state_splitting needs a CellChain");
    if (!(s.steady_tol > 0.0)) throw ConfigError("steady_tol", "must be > 0");
    if (!(s.rel_tol >= 0.0)) throw ConfigError("rel_tol", "must be >= 0");
    if (s.jobs < 1) throw ConfigError("jobs", "must be >= 1");
    if (s.calibration && s.calibration->adjust >= s.base.g.size())
        throw ConfigError("calibration.adjust", "index out of range");
}

inline SweepPoint evaluate_sweep_point(const SweepSpec& s, double value) {
    SweepPoint p;
    p.value = value;
    try {
        LatticeSpec spec = s.base;
        set_parameter(spec, s.parameter, value);
        if (s.calibration) {
            const auto cal = calibrate_g(spec, s.calibration->adjust, s.calibration->target, s.calibration->tol);
            spec = cal.spec;
            p.calibrated_g = cal.g;
        }
        const auto ss = find_steady_state(spec, s.steady_tol);
        const auto chain = effective_chain(spec, ss.state);
        switch (s.observable) {
        case Observable::EdgeWeight: {
            const auto r = chain_spectrum(chain);
            p.observables = {edge_weight(r.eigenvectors[r.gap_state_indices.front()])};
            break;
        }
        case Observable::GapSplitting: {
            const auto r = chain_spectrum(chain);
            const double lo = r.eigenvalues[r.gap_state_indices.front()];
            const double hi = r.eigenvalues[r.gap_state_indices.back()];
            p.observables = {hi - lo, lo, hi};
            break;
        }
        case Observable::CouplingRatio:
            p.observables = {coupling_ratio(chain)};
            break;
        case Observable::SteadyAlphaAbs:
            for (const auto& a : ss.state.alpha) p.observables.push_back(std::abs(a));
            break;
        case Observable::PhaseClass:
            p.observables = {coupling_ratio(chain)};
            p.phase = to_string(classify_phase(chain, s.rel_tol));
            break;
        }
        p.ok = true;
    } catch (const Error& e) {
        p.ok = false;
        p.error = e.what();
    }
    return p;
}

/// Evaluates every point with up to `jobs` worker threads.
inline std::vector<SweepPoint> evaluate_sweep(const SweepSpec& s) {
    check_sweep(s);
    std::vector<SweepPoint> points(s.values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) points[i] = evaluate_sweep_point(s, s.values[i]);
    };
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(s.jobs), points.size());
    std::vector<std::future<void>> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.push_back(std::async(std::launch::async, worker));
    worker();
    for (auto& f : pool) f.get();
    return points;
}

inline csv::Table sweep_table(const SweepSpec& s, const std::vector<SweepPoint>& points) {
    const auto cols = observable_columns(s);
    std::vector<std::string> header{"value"};
    if (s.observable == Observable::PhaseClass) header.push_back("phase_class");
    header.insert(header.end(), cols.begin(), cols.end());
    if (s.calibration) header.push_back("calibrated_g");
    header.push_back("status");
    csv::Table t(header);
    for (const auto& p : points) {
        std::vector<std::string> row{csv::format(p.value)};
        if (s.observable == Observable::PhaseClass) row.push_back(p.ok ? p.phase : "");
        for (std::size_t c = 0; c < cols.size(); ++c)
            row.push_back(p.ok ? csv::format(p.observables[c]) : "nan");
        if (s.calibration) row.push_back(p.calibrated_g ? csv::format(*p.calibrated_g) : "nan");
        row.push_back(p.ok ? "ok" : "failed");
        t.add_row_text(row);
    }
    return t;
}

inline json to_json(const SweepSpec& s) {
    return json{{"kind", "sweep"},
                {"name", s.name},
                {"spec", to_json(s.base)},
                {"parameter", s.parameter},
                {"values", s.values},
                {"observable", to_string(s.observable)},
                {"calibration", s.calibration ? to_json(*s.calibration) : json(nullptr)},
                {"steady_tol", s.steady_tol},
                {"rel_tol", s.rel_tol},
                {"jobs", s.jobs}};
}

/// Writes <out_dir>/sweep.csv and manifest.json. Failed points are kept in
/// the CSV with status "failed" and listed under "failures" in the manifest.
inline json run_sweep(const SweepSpec& s, const std::filesystem::path& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    const auto points = evaluate_sweep(s);
    Manifest out(out_dir);
    out.add("sweep", "sweep.csv", sweep_table(s, points).str());
    json failures = json::array();
    for (std::size_t i = 0; i < points.size(); ++i)
        if (!points[i].ok) failures.push_back({{"index", i}, {"value", points[i].value}, {"error", points[i].error}});
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json manifest{{"sweep", s.name},
                  {"resolved_spec", to_json(s.base)},
                  {"settings", to_json(s)},
                  {"failures", failures},
                  {"outputs", out.outputs_json()},
                  {"versions", {{"omtopo", version_string}, {"compiler", __VERSION__}, {"cxx", __cplusplus}}},
                  {"wall_time", wall}};
    write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

} // namespace omtopo
