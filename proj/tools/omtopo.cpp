// omtopo: command-line front end for scenarios, sweeps and manifests.
//
// Exit codes: 0 success, 1 solver failure, 2 configuration or usage error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "omtopo/omtopo.hpp"

namespace fs = std::filesystem;
using namespace omtopo;

namespace {

constexpr int exit_solver = 1;
constexpr int exit_config = 2;

fs::path output_root(const std::string& out) {
    if (!out.empty()) return out;
    if (const char* env = std::getenv("OMTOPO_OUT"); env && *env) return env;
    return "out";
}

std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& sets) {
    std::map<std::string, std::string> m;
    for (const auto& kv : sets) {
        auto [k, v] = split_override(kv);
        m[k] = v;
    }
    return m;
}

Scenario resolve(const std::string& name, const std::string& config, const std::vector<std::string>& sets) {
    Scenario sc;
    if (!config.empty()) {
        auto c = load_config(config);
        if (!std::holds_alternative<Scenario>(c)) throw ConfigError("kind", "expected a scenario config");
        sc = std::get<Scenario>(c);
    } else {
        sc = find_scenario(name);
    }
    for (const auto& [k, v] : parse_overrides(sets)) apply_override(sc, k, v);
    check_scenario(sc);
    return sc;
}

void print_outputs(const json& manifest, const fs::path& dir) {
    for (const auto& o : manifest["outputs"])
        std::cout << "  " << (dir / o["path"].get<std::string>()).string() << "\n";
    std::cout << "  " << (dir / "manifest.json").string() << "\n";
}

int cmd_list() {
    for (const auto& sc : scenario_catalog()) {
        std::cout << sc.name << "  " << to_string(sc.spec.topology.kind()) << "(" << sc.spec.topology.n() << ")  ";
        for (std::size_t i = 0; i < sc.outputs.size(); ++i) std::cout << (i ? "," : "") << sc.outputs[i];
        if (sc.settings.calibration) std::cout << "  [calibrates g[" << sc.settings.calibration->adjust << "]]";
        std::cout << "\n";
    }
    return 0;
}

int cmd_scenario(const Scenario& sc, const std::string& out) {
    const fs::path dir = output_root(out) / sc.name;
    const json m = run_scenario(sc, dir);
    std::cout << "scenario " << sc.name << " done in " << m["wall_time"].get<double>() << " s\n";
    if (m["results"].contains("calibration"))
        std::cout << "calibrated g = " << m["results"]["calibration"]["calibrated_g"].get<double>() << "\n";
    if (m["results"].contains("phase")) std::cout << "phase: " << m["results"]["phase"].get<std::string>() << "\n";
    if (m["results"].contains("fidelity")) std::cout << "fidelity: " << m["results"]["fidelity"].get<double>() << "\n";
    print_outputs(m, dir);
    return 0;
}

int cmd_sweep(const std::string& config, const std::string& out, int jobs) {
    auto c = load_config(config);
    if (!std::holds_alternative<SweepSpec>(c)) throw ConfigError("kind", "expected a sweep config");
    auto s = std::get<SweepSpec>(c);
    if (jobs > 0) s.jobs = jobs;
    const fs::path dir = output_root(out) / s.name;
    const json m = run_sweep(s, dir);
    std::cout << "sweep " << s.name << ": " << s.values.size() << " points, " << m["failures"].size()
              << " failed, " << m["wall_time"].get<double>() << " s\n";
    for (const auto& f : m["failures"])
        std::cerr << "  point " << f["index"].get<std::size_t>() << " (" << f["value"].get<double>()
                  << "): " << f["error"].get<std::string>() << "\n";
    print_outputs(m, dir);
    return 0;
}

int cmd_steady(const Scenario& sc) {
    LatticeSpec spec = sc.spec;
    json r;
    if (sc.settings.calibration) {
        const auto& c = *sc.settings.calibration;
        const auto cal = calibrate_g(spec, c.adjust, c.target, c.tol);
        spec = cal.spec;
        r["calibrated_g"] = cal.g;
    }
    const auto ss = find_steady_state(spec, sc.settings.steady_tol);
    r["state"] = to_json(ss.state);
    r["method"] = to_string(ss.method);
    r["residual"] = ss.residual;
    const auto chain = effective_chain(spec, ss.state);
    json g = json::array();
    for (const auto& z : chain.couplings) g.push_back(std::abs(z));
    r["abs_couplings"] = g;
    if (chain.num_sites() % 2 == 0 && chain.couplings.size() >= 3) r["phase"] = to_string(classify_phase(chain));
    std::cout << r.dump(2) << "\n";
    return 0;
}

int cmd_transfer(double nu, double dt, const std::string& source, const std::string& out) {
    Scenario sc = find_scenario("transfer");
    for (auto& d : sc.spec.drive) std::get<CosineDrive>(d).nu = nu;
    sc.settings.transfer_dt = dt;
    sc.settings.coupling_source = source;
    validate_spec(sc.spec);
    return cmd_scenario(sc, out);
}

int cmd_verify(const std::string& manifest) {
    const auto issues = verify_manifest(manifest);
    if (issues.empty()) {
        std::cout << "OK " << manifest << "\n";
        return 0;
    }
    for (const auto& i : issues) std::cerr << i.problem << ": " << i.path << "\n";
    return exit_solver;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optomechanical topological lattice simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string);

    app.add_subcommand("list", "List built-in scenarios");

    std::string name, config, out;
    std::vector<std::string> sets;
    auto* scen = app.add_subcommand("scenario", "Run a built-in scenario or a scenario config");
    scen->add_option("name", name, "Scenario name");
    scen->add_option("--config", config, "Scenario config file")->check(CLI::ExistingFile);
    scen->add_option("--set", sets, "Override, e.g. kappa[1]=5 or settings.dt=0.001");
    scen->add_option("--out", out, "Output root (default $OMTOPO_OUT or ./out)");

    auto* show = app.add_subcommand("show", "Print the resolved scenario config");
    show->add_option("name", name, "Scenario name");
    show->add_option("--config", config, "Scenario config file")->check(CLI::ExistingFile);
    show->add_option("--set", sets, "Override, e.g. kappa[1]=5");

    int jobs = 0;
    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    sweep->add_option("--config", config, "Sweep config file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", out, "Output root (default $OMTOPO_OUT or ./out)");
    sweep->add_option("--jobs", jobs, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);

    auto* steady = app.add_subcommand("steady", "Print the steady state and effective couplings");
    steady->add_option("name", name, "Scenario name");
    steady->add_option("--config", config, "Scenario config file")->check(CLI::ExistingFile);
    steady->add_option("--set", sets, "Override, e.g. kappa[1]=5");

    double nu = 0.006, dt = 0.05;
    std::string source = "steady_state";
    auto* transfer = app.add_subcommand("transfer", "Adiabatic transfer along the 3-site chain");
    transfer->add_option("--nu", nu, "Drive modulation frequency")->check(CLI::PositiveNumber);
    transfer->add_option("--dt", dt, "Propagation step")->check(CLI::PositiveNumber);
    transfer->add_option("--source", source, "Coupling schedule")->check(CLI::IsMember({"steady_state", "analytic"}));
    transfer->add_option("--out", out, "Output root (default $OMTOPO_OUT or ./out)");

    std::string manifest;
    auto* verify = app.add_subcommand("verify", "Check output checksums against a manifest");
    verify->add_option("manifest", manifest, "manifest.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : exit_config;
    }

    auto need_name = [&](CLI::App* sub) {
        if (name.empty() == config.empty())
            throw ConfigError(sub->get_name(), "give either a scenario name or --config");
    };
    try {
        if (app.got_subcommand("list")) return cmd_list();
        if (app.got_subcommand(scen)) {
            need_name(scen);
            return cmd_scenario(resolve(name, config, sets), out);
        }
        if (app.got_subcommand(show)) {
            need_name(show);
            std::cout << dump_config(resolve(name, config, sets));
            return 0;
        }
        if (app.got_subcommand(sweep)) return cmd_sweep(config, out, jobs);
        if (app.got_subcommand(steady)) {
            need_name(steady);
            return cmd_steady(resolve(name, config, sets));
        }
        if (app.got_subcommand(transfer)) return cmd_transfer(nu, dt, source, out);
        if (app.got_subcommand(verify)) return cmd_verify(manifest);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const SpecError& e) {
        std::cerr << "invalid spec: " << e.what() << "\n";
        return exit_config;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return exit_solver;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_solver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_solver;
    }
    return exit_config;
}
