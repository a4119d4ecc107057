#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ncwwlab/runner.hpp"

using namespace ncwwlab;
namespace fs = std::filesystem;

namespace {

const std::string kScenarioDir = NCWWLAB_SCENARIO_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path unique_tmp(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("ncwwlab_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
}

}  // namespace

TEST_CASE("minimal scenario: identity operator gives all-zero Cauchy residuals") {
    const auto out = unique_tmp("minimal");
    Overrides ov;
    ov.out_dir = (out / "run").string();
    const auto res = run_scenario_file(kScenarioDir + "/minimal.json", ov);
    CHECK(res.exit_code == 0);
    const std::string csv = slurp(res.rows_path);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    CHECK(line ==
          "experiment,weight,n,residual_cauchy_2,residual_cauchy_inf,residual_to_limit_2,"
          "trunc_tau_perp,trunc_residual_inf");
    int rows = 0;
    while (std::getline(lines, line)) {
        CHECK(line.find(",0,0,0,") != std::string::npos);
        ++rows;
    }
    CHECK(rows == 5);
}

TEST_CASE("determinism: identical seeds give bit-identical rows.csv") {
    const auto out = unique_tmp("determinism");
    Overrides a, b;
    a.out_dir = (out / "a").string();
    b.out_dir = (out / "b").string();
    const auto ra = run_scenario_file(kScenarioDir + "/eigenvector_minus.json", a);
    const auto rb = run_scenario_file(kScenarioDir + "/eigenvector_minus.json", b);
    CHECK(slurp(ra.rows_path) == slurp(rb.rows_path));
    CHECK(slurp(ra.summary_path) == slurp(rb.summary_path));
}

TEST_CASE("determinism across thread counts") {
    const auto out = unique_tmp("threads");
    Overrides one, eight;
    one.out_dir = (out / "t1").string();
    one.threads = 1;
    eight.out_dir = (out / "t8").string();
    eight.threads = 8;
    const auto r1 = run_scenario_file(kScenarioDir + "/heat_flight.json", one);
    const auto r8 = run_scenario_file(kScenarioDir + "/heat_flight.json", eight);
    CHECK(slurp(r1.rows_path) == slurp(r8.rows_path));
    CHECK(slurp(r1.summary_path) == slurp(r8.summary_path));
}

TEST_CASE("seed override changes random fixtures deterministically") {
    const auto out = unique_tmp("seeds");
    Overrides s1, s2, s1_again;
    s1.out_dir = (out / "s1").string();
    s1.seed = 100;
    s2.out_dir = (out / "s2").string();
    s2.seed = 101;
    s1_again.out_dir = (out / "s1b").string();
    s1_again.seed = 100;
    const std::string path = kScenarioDir + "/heat_flight.json";
    const auto r1 = run_scenario_file(path, s1);
    const auto r2 = run_scenario_file(path, s2);
    const auto r1b = run_scenario_file(path, s1_again);
    CHECK(slurp(r1.rows_path) == slurp(r1b.rows_path));
    CHECK(slurp(r1.rows_path) != slurp(r2.rows_path));
}

TEST_CASE("require_ds rejects a non-contractive operator naming the check") {
    const auto out = unique_tmp("require_ds");
    write_file(out / "bad.json", R"({
        "algebra": {"blocks": [{"dim": 2, "weight": 1.0}]},
        "operator": {"kind": "matrix", "data": [
            [2,0,0,0],[0,2,0,0],[0,0,2,0],[0,0,0,2]]},
        "initial_element": {"kind": "identity"},
        "experiments": [{"kind": "validate"}],
        "n_max": 4,
        "require_ds": true,
        "seed": 1
    })");
    Overrides ov;
    ov.out_dir = (out / "run").string();
    try {
        run_scenario_file((out / "bad.json").string(), ov);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("l1_contraction") != std::string::npos);
    }
}

TEST_CASE("random specs without a seed are rejected") {
    const auto out = unique_tmp("noseed");
    write_file(out / "noseed.json", R"({
        "algebra": {"blocks": [{"dim": 2, "weight": 1.0}]},
        "operator": {"kind": "identity"},
        "initial_element": {"kind": "random", "seed": 3},
        "experiments": [{"kind": "validate"}],
        "n_max": 4
    })");
    CHECK_THROWS_AS(load_scenario((out / "noseed.json").string()), ValidationError);
    Overrides with_seed;
    with_seed.seed = 5;
    CHECK_NOTHROW(load_scenario((out / "noseed.json").string(), with_seed));
}

TEST_CASE("parse errors carry context") {
    const auto out = unique_tmp("parse");
    CHECK_THROWS_AS(load_scenario((out / "missing.json").string()), ParseError);

    write_file(out / "broken.json", "{ not json");
    CHECK_THROWS_AS(load_scenario((out / "broken.json").string()), ParseError);

    write_file(out / "nofield.json", R"({"operator": {"kind": "identity"}})");
    try {
        load_scenario((out / "nofield.json").string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("algebra") != std::string::npos);
    }
}

TEST_CASE("describe reports the heat scenario dimensions and tags") {
    const std::string text = describe_scenario_file(kScenarioDir + "/heat_flight.json");
    CHECK(text.find("hs dim = 9") != std::string::npos);
    CHECK(text.find("nc_torus_heat") != std::string::npos);
    CHECK(text.find("l2-self-adjoint") != std::string::npos);
    CHECK(text.find("estimated total T-applications") != std::string::npos);
}

TEST_CASE("summary discloses policies, tolerances and weight classes") {
    const auto out = unique_tmp("summary");
    Overrides ov;
    ov.out_dir = (out / "run").string();
    const auto res = run_scenario_file(kScenarioDir + "/heat_flight.json", ov);
    const auto doc = nlohmann::json::parse(slurp(res.summary_path));
    CHECK(doc.at("schema") == "ncwwlab-summary-v1");
    CHECK(doc.at("policies").contains("limsup_tail_window"));
    CHECK(doc.at("tolerances").contains("verdict_residual_threshold"));
    CHECK(doc.at("disclosures").size() >= 3);
    bool found_vm = false;
    for (const auto& w : doc.at("weights"))
        if (w.at("class") == "ergodic_sample") found_vm = true;
    CHECK(found_vm);
    // every stream carries the e = 1 curve next to the budgeted one
    for (const auto& e : doc.at("experiments"))
        if (e.contains("streams"))
            for (const auto& s : e.at("streams"))
                CHECK(s.contains("full_residual_inf_curve"));
}

TEST_CASE("the installed binary runs end to end") {
    const auto out = unique_tmp("binary");
    const std::string bin = NCWWLAB_BIN;
    if (!fs::exists(bin)) return;  // binary target not built in this configuration

    std::string cmd = bin + " run " + kScenarioDir + "/minimal.json --out " +
                      (out / "cli").string() + " > " + (out / "stdout.txt").string() + " 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(out / "cli" / "rows.csv"));
    CHECK(fs::exists(out / "cli" / "summary.json"));

    cmd = bin + " describe " + kScenarioDir + "/minimal.json > " +
          (out / "describe.txt").string() + " 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(slurp(out / "describe.txt").find("conjugation") != std::string::npos);

    // parse failure maps to exit code 2
    cmd = bin + " run " + (out / "nope.json").string() + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(rc) == 2);
}
