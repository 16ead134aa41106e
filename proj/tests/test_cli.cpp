#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "routing/datafit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
    int exit_code = 0;
    std::string output;  // stdout + stderr
};

fs::path work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "routing_cli_tests";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

CliResult run_cli(const std::string& args) {
    const fs::path out = work_dir() / "cli_output.txt";
    const std::string cmd =
        std::string(ROUTING_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

fs::path write_file(const std::string& name, const std::string& content) {
    const fs::path p = work_dir() / name;
    std::ofstream f(p, std::ios::binary);
    f << content;
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kMinimalConfig = R"({
  "network": {"c0": 3.0, "paths": [{"c_low": 0.0, "c_high": 10.0, "q_lh": 0.2, "q_hh": 0.8}]},
  "run": {"rho": 0.9, "epsilon": 0.001, "horizon": 10, "episodes": 5, "seed": 3, "x0": [0.5]},
  "mechanisms": ["sharing"]
})";

}  // namespace

TEST_CASE("simulate prints one summary row per mechanism") {
    auto cfg = write_file("minimal.json", kMinimalConfig);
    auto r = run_cli("simulate " + cfg.string());
    CHECK(r.exit_code == 0);
    std::stringstream ss(r.output);
    std::string header, row, extra;
    std::getline(ss, header);
    CHECK(header == "mechanism,mean,std_error,episodes");
    CHECK(std::getline(ss, row));
    CHECK(row.substr(0, 8) == "sharing,");
    CHECK(row.substr(row.rfind(',') + 1) == "5");
    CHECK_FALSE(std::getline(ss, extra));
}

TEST_CASE("repeat runs with the same seed are byte-identical") {
    json j = json::parse(kMinimalConfig);
    const fs::path summary = work_dir() / "summary.csv";
    j["output"] = {{"summary", summary.string()}};
    auto cfg = write_file("seeded.json", j.dump());
    REQUIRE(run_cli("simulate " + cfg.string()).exit_code == 0);
    const std::string first = read_file(summary);
    REQUIRE(run_cli("simulate " + cfg.string()).exit_code == 0);
    CHECK(read_file(summary) == first);
    CHECK_FALSE(first.empty());
}

TEST_CASE("missing rho is rejected with the field name") {
    json j = json::parse(kMinimalConfig);
    j["run"].erase("rho");
    auto cfg = write_file("no_rho.json", j.dump());
    auto r = run_cli("simulate " + cfg.string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("rho") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected by name") {
    json j = json::parse(kMinimalConfig);
    j["run"]["discount"] = 0.9;
    auto cfg = write_file("unknown_key.json", j.dump());
    auto r = run_cli("simulate " + cfg.string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("discount") != std::string::npos);
}

TEST_CASE("missing config file and bad mechanism names fail cleanly") {
    auto r = run_cli("simulate /nonexistent/config.json");
    CHECK(r.exit_code == 2);
    json j = json::parse(kMinimalConfig);
    j["mechanisms"] = {"teleport"};
    auto cfg = write_file("bad_mech.json", j.dump());
    auto r2 = run_cli("simulate " + cfg.string());
    CHECK(r2.exit_code == 2);
    CHECK(r2.output.find("teleport") != std::string::npos);
}

TEST_CASE("adversarial planner scenario reproduces the known ratio") {
    auto r = run_cli("poa --scenario prop3 --paths 1 --episodes 5 --seed 1");
    REQUIRE(r.exit_code == 0);
    std::stringstream ss(r.output);
    std::string header, row;
    std::getline(ss, header);
    CHECK(header == "scenario,dial,n_paths,mechanism,empirical_ratio,bound,gap");
    REQUIRE(std::getline(ss, row));
    std::stringstream rs(row);
    std::string scenario, dial, n, mech, ratio;
    std::getline(rs, scenario, ',');
    std::getline(rs, dial, ',');
    std::getline(rs, n, ',');
    std::getline(rs, mech, ',');
    std::getline(rs, ratio, ',');
    CHECK(scenario == "prop3");
    CHECK(mech == "upr");
    CHECK(std::stod(ratio) == doctest::Approx(8.0 / 7.0).epsilon(0.02));
}

TEST_CASE("the known ratio falls with a second stochastic path") {
    auto r = run_cli("poa --scenario prop3 --paths 2 --episodes 5 --seed 1");
    REQUIRE(r.exit_code == 0);
    std::stringstream ss(r.output);
    std::string header, row;
    std::getline(ss, header);
    REQUIRE(std::getline(ss, row));
    const auto last = row.rfind(',');
    const auto prev = row.rfind(',', last - 1);
    const double ratio = std::stod(row.substr(row.find("upr,") + 4, prev));
    CHECK(ratio == doctest::Approx(12.0 / 11.0).epsilon(0.02));
}

TEST_CASE("fit recovers a sampled chain and echoes the fixture shape") {
    const auto& ncd = routing::road_chain_fixtures()[0];
    auto states = routing::sample_chain(ncd.matrix, 50000, 7);
    std::stringstream csv;
    csv << "timestamp,road_id,speed_band\n";
    for (std::size_t t = 0; t < states.size(); ++t)
        csv << (300 * t) << ",n_cd," << (states[t] ? 2.0 : 6.0) << "\n";
    auto path = write_file("speeds.csv", csv.str());
    auto r = run_cli("fit " + path.string() + " --threshold 4");
    REQUIRE(r.exit_code == 0);
    const json out = json::parse(r.output);
    REQUIRE(out.contains("n_cd"));
    CHECK_FALSE(out["n_cd"]["degenerate"].get<bool>());
    const auto m = out["n_cd"]["matrix"];
    const double row0 = ncd.matrix[0][0] + ncd.matrix[0][1];
    const double row1 = ncd.matrix[1][0] + ncd.matrix[1][1];
    CHECK(m[0][1].get<double>() == doctest::Approx(ncd.matrix[0][1] / row0).epsilon(0.1));
    CHECK(m[1][1].get<double>() == doctest::Approx(ncd.matrix[1][1] / row1).epsilon(0.1));
}

TEST_CASE("fit rejects an empty csv") {
    auto path = write_file("empty.csv", "");
    auto r = run_cli("fit " + path.string() + " --threshold 4");
    CHECK(r.exit_code == 2);
}

TEST_CASE("road-network comparison emits the full table") {
    auto r = run_cli("hybrid --episodes 3 --horizon 6 --seed 2 --mechanisms sharing upr");
    REQUIRE(r.exit_code == 0);
    std::stringstream ss(r.output);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "mechanism,mean_cost,std_error,ratio_to_optimum");
    int rows = 0;
    bool saw_optimum = false;
    std::string row;
    while (std::getline(ss, row)) {
        ++rows;
        if (row.substr(0, 8) == "optimum,") saw_optimum = true;
    }
    CHECK(rows == 3);  // sharing, upr, optimum
    CHECK(saw_optimum);
}

TEST_CASE("unknown subcommands exit with the config code") {
    auto r = run_cli("frobnicate");
    CHECK(r.exit_code == 2);
}
