#include <catch2/catch_amalgamated.hpp>

#include "minkgs/cli.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace minkgs;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Json = nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "minkgs");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path scratch_dir() {
    auto dir = std::filesystem::temp_directory_path() / "minkgs_cli_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("thresholds for the power family", "[cli]") {
    const auto r = run_cli({"thresholds", "--family", "power", "--lambda", "1", "--q", "3", "--N", "3"});
    REQUIRE(r.code == 0);
    const auto j = Json::parse(r.out);
    CHECK_THAT(j["thresholds"]["alpha"].get<double>(), WithinAbs(1.0, 1e-10));
    CHECK_THAT(j["thresholds"]["xi0"].get<double>(), WithinAbs(1.4142136, 1e-7));
    CHECK(j["thresholds"]["beta"].is_null());
    CHECK(j["assumption_report"]["passed"].get<bool>());
    CHECK(j["version"] == cli::kVersion);
    CHECK(j.contains("config"));
    CHECK(j.contains("timings"));
    CHECK_FALSE(j["timings"].contains("wall_seconds"));
}

TEST_CASE("thresholds reports the f4 failure of sine q = 2 in dimension 3", "[cli]") {
    const auto r = run_cli({"thresholds", "--family", "sine", "--q", "2", "--N", "3"});
    CHECK(r.code == 2);
    const auto j = Json::parse(r.out);
    CHECK(j["assumption_report"]["status"]["f4"] == "fail");
}

TEST_CASE("missing parameters are configuration errors", "[cli]") {
    const auto r = run_cli({"thresholds", "--family", "power", "--lambda", "1", "--N", "3"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("--q"));
    CHECK_THAT(r.err, ContainsSubstring("Usage"));

    CHECK(run_cli({"thresholds", "--family", "cosine", "--q", "1"}).code == 1);
    CHECK(run_cli({"thresholds", "--family", "power", "--lambda", "1", "--q", "3", "--N", "1"}).code == 1);
    CHECK(run_cli({"thresholds", "--family", "power", "--lambda", "1", "--q", "3", "--bogus"}).code == 1);
    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("shoot writes a turning summary and a strided profile", "[cli]") {
    const auto csv = scratch_dir() / "shoot.csv";
    const auto r = run_cli({"shoot", "--xi", "1.2", "--family", "power", "--lambda", "1", "--q", "3", "--N", "3",
                            "--profile", csv.string()});
    REQUIRE(r.code == 0);
    const auto j = Json::parse(r.out);
    CHECK(j["outcome"]["outcome"]["class"] == "Turning");
    // a turning shot is not a ground state
    CHECK_FALSE(j["verification"]["passed"].get<bool>());
    const double r_turn = j["outcome"]["outcome"]["r_turn"].get<double>();

    const auto rows = read_csv(csv);
    REQUIRE(rows.size() >= 2);
    CHECK(rows[0] == std::vector<std::string>{"r", "u", "uprime", "q", "D", "energy_residual"});
    CHECK(rows.size() - 1 == static_cast<std::size_t>(std::ceil(r_turn / 0.01)) + 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].size() == 6);
        CHECK(std::abs(std::stod(rows[i][2])) < 1.0);
    }
    CHECK_THAT(std::stod(rows.back()[0]), WithinAbs(r_turn, 1e-15));
}

TEST_CASE("shoot rejects heights outside the admissible interval", "[cli]") {
    CHECK(run_cli({"shoot", "--xi", "0.5", "--family", "power", "--lambda", "1", "--q", "3"}).code == 1);
    CHECK(run_cli({"shoot", "--xi", "0.9999", "--family", "power", "--lambda", "1", "--q", "3"}).code == 1);
    CHECK(run_cli({"shoot", "--family", "power", "--lambda", "1", "--q", "3"}).code == 1);
}

TEST_CASE("solve finds a verified ground state", "[cli]") {
    const auto csv = scratch_dir() / "solve.csv";
    const auto r = run_cli({"solve", "--family", "power", "--lambda", "1", "--q", "3", "--N", "3", "--profile", csv.string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    const auto j = Json::parse(r.out);
    CHECK(j["verification"]["passed"].get<bool>());
    CHECK(j["solution"]["bracket_width"].get<double>() <= 1e-10);
    const auto rows = read_csv(csv);
    REQUIRE(rows.size() > 100);
    for (std::size_t i = 2; i < rows.size(); ++i) CHECK(std::stod(rows[i][1]) < std::stod(rows[i - 1][1]));
}

TEST_CASE("solve exits 2 when the hypotheses fail", "[cli]") {
    CHECK(run_cli({"solve", "--family", "sine", "--q", "2", "--N", "3"}).code == 2);
}

TEST_CASE("scan is deterministic across workers and reruns", "[cli]") {
    const auto dir = scratch_dir();
    const auto table = dir / "scan.csv";
    std::vector<std::string> base{"scan", "--family", "power", "--lambda", "1", "--q", "3", "--N", "3",
                                  "--xi-min", "1.01", "--xi-max", "3", "--points", "101", "--output", table.string()};
    auto with_workers = [&](const char* w) {
        auto args = base;
        args.insert(args.end(), {"--workers", w});
        return run_cli(args);
    };
    const auto a = with_workers("1");
    const std::string table_a = slurp(table);
    const auto b = with_workers("8");
    const std::string table_b = slurp(table);
    const auto c = with_workers("8");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(b.out == c.out);
    CHECK(table_a == table_b);

    const auto j = Json::parse(a.out);
    CHECK(j["outcome"]["rows"].size() == 101);
    CHECK(read_csv(table).size() == 102);
    CHECK(j["outcome"]["counts"]["Turning"].get<int>() > 0);
    CHECK(j["outcome"]["counts"]["Crossing"].get<int>() > 0);
    CHECK_FALSE(j["outcome"]["transitions"].empty());
    for (const auto& t : j["outcome"]["transitions"]) CHECK(t["gap"].get<double>() > 0.0);
}

TEST_CASE("TOML configuration with command-line override", "[cli]") {
    const auto dir = scratch_dir();
    const auto conf = dir / "run.toml";
    {
        std::ofstream os(conf);
        os << "family = \"power\"\nlambda = 4\nq = 3\nN = 3\n\n[shoot]\nxi = 2.1\n";
    }
    const auto r = run_cli({"shoot", "--config", conf.string()});
    const auto j = Json::parse(r.out);
    CHECK(j["config"]["family"]["lambda"].get<double>() == 4.0);
    CHECK(j["config"]["xi"].get<double>() == 2.1);
    CHECK(j["thresholds"]["alpha"].get<double>() == Catch::Approx(2.0).epsilon(1e-10));

    const auto o = run_cli({"shoot", "--config", conf.string(), "--lambda", "1", "--xi", "1.2"});
    const auto jo = Json::parse(o.out);
    CHECK(jo["config"]["family"]["lambda"].get<double>() == 1.0);
    CHECK(jo["config"]["xi"].get<double>() == 1.2);
    CHECK(jo["outcome"]["outcome"]["class"] == "Turning");

    CHECK(run_cli({"thresholds", "--config", (dir / "missing.toml").string()}).code == 1);
}

TEST_CASE("tabulated family from a file", "[cli]") {
    const auto path = scratch_dir() / "table.csv";
    {
        std::ofstream os(path);
        os << "s,f\n";
        for (int i = 0; i <= 300; ++i) {
            const double s = i * 0.01;
            os << s << ',' << (-s + s * s * s) << '\n';
        }
    }
    const auto r = run_cli({"thresholds", "--family", "table", "--table", path.string()});
    REQUIRE(r.code == 0);
    const auto j = Json::parse(r.out);
    CHECK_THAT(j["thresholds"]["alpha"].get<double>(), WithinAbs(1.0, 1e-4));
    CHECK(run_cli({"thresholds", "--family", "table", "--table", (scratch_dir() / "nope.csv").string()}).code == 1);
}

TEST_CASE("summary file output", "[cli]") {
    const auto path = scratch_dir() / "summary.json";
    const auto r = run_cli({"thresholds", "--family", "power", "--lambda", "1", "--q", "3", "--summary", path.string(), "--wall-clock"});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    const auto j = Json::parse(slurp(path));
    CHECK(j["timings"].contains("wall_seconds"));
}

TEST_CASE("profile CSV writer", "[cli]") {
    std::ostringstream os;
    cli::write_profile_csv(os, {{0.0, 1.5, 0.0, 0.0, 0.0, 0.0}, {0.01, 1.4999, -0.01, -0.0100005, 1e-6, 1e-17}});
    const std::string s = os.str();
    CHECK(s.rfind("r,u,uprime,q,D,energy_residual\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 3);
    CHECK_THAT(s, ContainsSubstring("1.0000000000000001e-17"));
}
