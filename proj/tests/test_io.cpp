#include <catch_amalgamated.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include <unistd.h>

#include "omtopo/omtopo.hpp"

using namespace omtopo;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
    const auto p = fs::temp_directory_path() / ("omtopo_test_io_" + std::to_string(::getpid()) + "_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string config_error_path(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.key_path();
    }
    return "<no error>";
}

} // namespace

TEST_CASE("csv::format round-trips doubles exactly") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-300, 300);
    for (int i = 0; i < 2000; ++i) {
        const double x = std::ldexp(mant(rng), expo(rng));
        const auto text = csv::format(x);
        double back = 0.0;
        std::from_chars(text.data(), text.data() + text.size(), back);
        CHECK(back == x);
    }
    CHECK(csv::format(0.5) == "0.5");
    CHECK(csv::format(1e5) == "100000");
    CHECK(csv::format(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(csv::format(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("csv::Table") {
    csv::Table t({"a", "b"});
    t.row({1.0, 0.25});
    t.add_row_text({"x", "y"});
    CHECK(t.str() == "a,b\n1,0.25\nx,y\n");
    CHECK_THROWS_AS(t.row({1.0}), InvalidArgument);
    CHECK(csv::numbered("w_", 3) == std::vector<std::string>{"w_1", "w_2", "w_3"});
}

TEST_CASE("csv schemas") {
    auto chain = EffectiveChain::from_couplings({-0.1, 0.2});
    CHECK(csv::couplings_table(chain).str().rfind("bond,re,im,abs\n1,-0.10000000000000001,0,0.10000000000000001\n", 0) == 0);
    const auto spectrum = chain_spectrum(chain);
    CHECK(csv::spectrum_table(spectrum).str().rfind("index,eigenvalue\n", 0) == 0);
    CHECK(csv::distribution_table(spectrum.eigenvectors[1]).str().rfind("site,weight\n1,", 0) == 0);

    MeanFieldState st;
    st.t = 2.0;
    st.alpha = {{1.0, -2.0}};
    st.beta = {{0.5, 0.0}};
    CHECK(csv::steady_state_table(st).str() ==
          "mode,index,re,im,abs\nalpha,1,1,-2,2.2360679774997898\nbeta,1,0.5,0,0.5\n");
    Trajectory traj;
    traj.times = {2.0};
    traj.states = {st};
    CHECK(csv::trajectory_table(traj).str() ==
          "t,re_alpha_1,im_alpha_1,re_beta_1,im_beta_1,abs_alpha_1\n2,1,-2,0.5,0,2.2360679774997898\n");
    CHECK_THROWS_AS(csv::trajectory_table(Trajectory{}), InvalidArgument);

    TransferResult tr;
    tr.times = {0.0};
    tr.populations = {{1.0, 0.0, 0.0}};
    tr.norms = {1.0};
    CHECK(csv::transfer_table(tr).str() == "t,pop_site_1,pop_site_2,pop_site_3,norm\n0,1,0,0,1\n");
    CHECK(csv::zero_mode_table({{0.0, 0.0, {1.0, 0.0, 0.0}}}).str() == "t,w_site_1,w_site_2,w_site_3\n0,1,0,0\n");
}

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifest verification detects tampering and missing files") {
    const auto dir = scratch_dir("manifest");
    Manifest m(dir);
    m.add("a", "a.csv", "x,y\n1,2\n");
    m.add("b", "sub/b.csv", "z\n");
    write_file(dir / "manifest.json", json{{"outputs", m.outputs_json()}}.dump(2));
    CHECK(verify_manifest(dir / "manifest.json").empty());

    write_file(dir / "a.csv", "x,y\n1,3\n");
    fs::remove(dir / "sub/b.csv");
    const auto issues = verify_manifest(dir / "manifest.json");
    REQUIRE(issues.size() == 2);
    CHECK(issues[0].path == "a.csv");
    CHECK(issues[0].problem == "checksum mismatch");
    CHECK(issues[1].path == "sub/b.csv");
    CHECK(issues[1].problem == "missing");

    write_file(dir / "bad.json", "{");
    CHECK_THROWS_AS(verify_manifest(dir / "bad.json"), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("LatticeSpec JSON round trip") {
    for (const auto& sc : scenario_catalog()) {
        INFO(sc.name);
        const auto j = to_json(sc.spec);
        CHECK(spec_from_json(j) == sc.spec);
        CHECK(spec_from_json(json::parse(j.dump())) == sc.spec);
    }
    auto s = find_scenario("fig2a").spec;
    s.drive[1] = ConstantDrive{1e5, 0.25};
    CHECK(spec_from_json(to_json(s)) == s);
}

TEST_CASE("LatticeSpec JSON errors carry key paths") {
    const auto good = to_json(find_scenario("fig2a").spec);
    auto with = [&](auto edit) {
        json j = good;
        edit(j);
        return config_error_path([&] { spec_from_json(j, "spec"); });
    };
    CHECK(with([](json& j) { j["kapa"] = json::array({0.1, 0.1}); }) == "spec.kapa");
    CHECK(with([](json& j) { j.erase("gamma"); }) == "spec.gamma");
    CHECK(with([](json& j) { j["g"][1] = "big"; }) == "spec.g[1]");
    CHECK(with([](json& j) { j["drive"][1]["amplitud"] = 1; }) == "spec.drive[1].amplitud");
    CHECK(with([](json& j) { j["drive"][0]["type"] = "square"; }) == "spec.drive[0].type");
    CHECK(with([](json& j) { j["topology"]["kind"] = "Ring"; }) == "spec.topology.kind");
    CHECK(with([](json& j) { j["topology"]["n"] = 0; }) == "spec.topology.n");
    CHECK(with([](json& j) { j["kappa"] = json::array({0.1}); }).rfind("spec.kappa", 0) == 0);
    CHECK(with([](json& j) { j["kappa"][0] = -1.0; }).rfind("spec.kappa", 0) == 0);
}

TEST_CASE("parameter paths") {
    auto s = find_scenario("fig2a").spec;
    set_parameter(s, "kappa[1]", 5.0);
    CHECK(s.kappa[1] == 5.0);
    CHECK(get_parameter(s, "kappa[1]") == 5.0);
    set_parameter(s, "drive[0].amplitude", 2e5);
    CHECK(std::get<ConstantDrive>(s.drive[0]).amplitude == 2e5);
    CHECK(config_error_path([&] { set_parameter(s, "kapa[1]", 1.0); }) == "kapa[1]");
    CHECK(config_error_path([&] { set_parameter(s, "kappa[7]", 1.0); }) == "kappa[7]");
    CHECK(config_error_path([&] { set_parameter(s, "kappa", 1.0); }) == "kappa");
    CHECK(config_error_path([&] { set_parameter(s, "kappa[0]", -1.0); }) == "kappa[0]");
    CHECK(config_error_path([&] { set_parameter(s, "drive[0].nu", 1.0); }) == "drive[0].nu");

    auto odd = find_scenario("fig10a").spec;
    set_parameter(odd, "drive[1].nu", 0.012);
    CHECK(std::get<CosineDrive>(odd.drive[1]).nu == 0.012);
    CHECK(config_error_path([&] { set_parameter(odd, "drive[1].sign", 0.5); }) == "drive[1].sign");
    CHECK(get_parameter(odd, "drive[0].sign") == -1.0);
}

TEST_CASE("scenario overrides") {
    auto sc = find_scenario("fig7");
    apply_override(sc, "settings.dt", "0.001");
    apply_override(sc, "settings.sample_every", "7");
    apply_override(sc, "g[0]", "1.5e-6");
    CHECK(sc.settings.dt == 0.001);
    CHECK(sc.settings.sample_every == 7);
    CHECK(sc.spec.g[0] == 1.5e-6);
    CHECK(config_error_path([&] { apply_override(sc, "settings.dt", "fast"); }) == "settings.dt");
    CHECK(config_error_path([&] { apply_override(sc, "settings.sample_every", "2.5"); }) == "settings.sample_every");
    CHECK(config_error_path([&] { apply_override(sc, "settings.speed", "1"); }) == "settings.speed");
    CHECK(split_override("kappa[1]=5") == std::pair<std::string, std::string>{"kappa[1]", "5"});
    CHECK_THROWS_AS(split_override("kappa[1]"), ConfigError);
    CHECK_THROWS_AS(split_override("=5"), ConfigError);
}

TEST_CASE("config: built-in scenarios round-trip bit-identically") {
    const auto dir = scratch_dir("roundtrip");
    for (const auto& sc : scenario_catalog()) {
        INFO(sc.name);
        const auto path = dir / (sc.name + ".json");
        save_config(sc, path);
        const auto loaded = load_config(path);
        REQUIRE(std::holds_alternative<Scenario>(loaded));
        CHECK(std::get<Scenario>(loaded) == sc);
        CHECK(dump_config(loaded) == read_file(path));
    }
    fs::remove_all(dir);
}

TEST_CASE("config: typo names the offending key") {
    const std::string text = R"({"kind": "scenario", "base": "fig2a", "spec": )" +
                             to_json(find_scenario("fig2a").spec).dump() + "}";
    auto j = json::parse(text);
    j["spec"]["kapa"] = j["spec"]["kappa"];
    j["spec"].erase("kappa");
    try {
        parse_config(j.dump());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key_path() == "spec.kapa");
        CHECK(std::string(e.what()).find("kapa") != std::string::npos);
    }
    CHECK(config_error_path([] { parse_config(R"({"kind": "scenario", "base": "fig2a", "setings": {}})"); }) ==
          "setings");
    CHECK(config_error_path([] { parse_config(R"({"kind": "scenario", "base": "fig2a", "settings": {"dtt": 1}})"); }) ==
          "settings.dtt");
}

TEST_CASE("config: overriding kappa[1]=5 on the two-cell base gives the fig8 decay layout") {
    const auto c = parse_config(R"({"kind": "scenario", "base": "fig2a", "set": {"kappa[1]": 5}})");
    const auto& sc = std::get<Scenario>(c);
    CHECK(sc.name == "fig2a");
    CHECK(sc.spec.kappa == find_scenario("fig8").spec.kappa);
    CHECK(sc.spec.g == find_scenario("fig2a").spec.g);
}

TEST_CASE("config: syntax errors report line and column") {
    const std::string text = "{\n  \"kind\": \"scenario\",\n  \"base\": fig2a\n}\n";
    try {
        parse_config(text, "bad.json");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key_path() == "bad.json:3:12");
    }
    CHECK(config_error_path([] { load_config("/nonexistent/omtopo.json"); }) == "/nonexistent/omtopo.json");
}

TEST_CASE("config: schema violations") {
    CHECK(config_error_path([] { parse_config(R"({"kind": "plot"})"); }) == "kind");
    CHECK(config_error_path([] { parse_config(R"([1, 2])"); }) == "<root>");
    CHECK(config_error_path([] { parse_config(R"({"kind": "scenario"})"); }) == "spec");
    CHECK(config_error_path([] { parse_config(R"({"kind": "scenario", "base": "fig9"})"); }) == "scenario");
    CHECK(config_error_path([] {
        parse_config(R"({"kind": "scenario", "base": "fig2a", "outputs": ["zero_mode"]})");
    }) == "outputs[0]");
    CHECK(config_error_path([] {
        parse_config(R"({"kind": "scenario", "base": "fig2a", "outputs": ["spectrum", "spectrum"]})");
    }) == "outputs[1]");
    CHECK(config_error_path([] {
        parse_config(R"({"kind": "scenario", "base": "fig2a", "settings": {"steady_tol": 0}})");
    }) == "settings.steady_tol");
    CHECK(config_error_path([] {
        parse_config(R"({"kind": "scenario", "base": "fig2a", "settings": {"coupling_source": "fit"}})");
    }) == "settings.coupling_source");
}

TEST_CASE("config: sweeps") {
    const auto c = parse_config(R"({
        "kind": "sweep", "name": "k2", "base": "fig7", "parameter": "kappa[1]",
        "range": {"start": 0.1, "stop": 0.5, "count": 5},
        "observable": "phase_class", "calibration": {"adjust": 0}, "jobs": 3})");
    REQUIRE(std::holds_alternative<SweepSpec>(c));
    const auto& s = std::get<SweepSpec>(c);
    CHECK(s.name == "k2");
    CHECK(s.base == find_scenario("fig7").spec);
    REQUIRE(s.values.size() == 5);
    CHECK(s.values.front() == 0.1);
    CHECK(s.values.back() == 0.5);
    CHECK(s.values[2] == Catch::Approx(0.3));
    CHECK(s.observable == Observable::PhaseClass);
    REQUIRE(s.calibration);
    CHECK(s.calibration->adjust == 0);
    CHECK(s.calibration->target == CouplingEquality{0, 2});
    CHECK(s.jobs == 3);

    const auto again = parse_config(dump_config(c));
    CHECK(std::get<SweepSpec>(again) == s);
    CHECK(dump_config(again) == dump_config(c));

    const std::string head = R"({"kind": "sweep", "base": "fig7", "parameter": "kappa[1]", )";
    CHECK(config_error_path([&] { parse_config(head + R"("values": [0.3, 0.2, 0.4], "observable": "phase_class"})"); }) ==
          "values[2]");
    CHECK(config_error_path([&] { parse_config(head + R"("values": [0.3], "observable": "gap"})"); }) == "observable");
    CHECK(config_error_path([&] { parse_config(head + R"("observable": "phase_class"})"); }) == "values");
    CHECK(config_error_path([&] {
        parse_config(head + R"("values": [1], "range": {"start": 0, "stop": 1, "count": 2}, "observable": "phase_class"})");
    }) == "values");
    CHECK(config_error_path([] {
        parse_config(R"({"kind": "sweep", "base": "fig7", "parameter": "kapa[1]", "values": [], "observable": "phase_class"})");
    }) == "kapa[1]");
    CHECK(config_error_path([] {
        parse_config(R"({"kind": "sweep", "base": "fig10a", "parameter": "kappa[1]", "values": [], "observable": "steady_alpha_abs"})");
    }) == "spec.drive");
    CHECK(config_error_path([] {
        parse_config(R"({"kind": "sweep", "base": "fig6", "parameter": "kappa[1]", "values": [], "observable": "phase_class", "jobs": 0})");
    }) == "jobs");
}
