#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cefbounds/cli.hpp"

using namespace cefb;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct Result {
    int code;
    std::string out, err;
};

Result call(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("cefb_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }

    std::string file(const std::string& name, const std::string& body) {
        auto p = dir / name;
        std::ofstream(p) << body;
        return p.string();
    }

    std::string two_bin() { return file("two.csv", "bin_lo,bin_hi,mean\n0,6,2\n6,10,8\n"); }
};

}  // namespace

TEST(Parsing, Statistics) {
    EXPECT_EQ(io::parse_statistic("point:3").describe(), "point:3");
    EXPECT_EQ(io::parse_statistic("mu:0, 7").describe(), "mu:0,7");
    EXPECT_EQ(io::parse_statistic("slope").kind, StatisticSpec::Kind::best_linear_slope);
    EXPECT_EQ(io::parse_statistic("linear:2.5").a, 2.5);
    for (const char* bad : {"", "point", "point:", "mu:1", "mu:a,b", "slope:1", "median:3"})
        EXPECT_THROW((void)io::parse_statistic(bad), ValidationError) << bad;
    EXPECT_TRUE(std::isinf(io::parse_limit("inf")));
    EXPECT_EQ(io::parse_limit("0.25"), 0.25);
    EXPECT_THROW((void)io::parse_limit("lots"), ValidationError);
}

TEST(Parsing, CsvReaders) {
    std::istringstream s("\xEF\xBB\xBF" "bin_lo,bin_hi,mean,count\n0, 6 ,2,10\n\n6,10,8,4\n");
    auto b = io::read_sample(s, "s.csv", {0, 10}, Direction::increasing);
    EXPECT_EQ(b.boundaries, (std::vector<double>{0, 6, 10}));
    EXPECT_EQ(b.means, (std::vector<double>{2, 8}));
    std::istringstream hdr("lo,hi,mean\n0,1,2\n");
    EXPECT_THROW((void)io::read_sample(hdr, "s.csv", {0, 10}, Direction::increasing), ValidationError);
    std::istringstream gap("bin_lo,bin_hi,mean\n0,5,1\n6,10,2\n");
    try {
        (void)io::read_sample(gap, "s.csv", {0, 10}, Direction::increasing);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("s.csv:3"), std::string::npos) << e.what();
    }
    std::istringstream cdf("x,cdf\n0,0\n50,0.3\n100,1\n");
    auto d = io::read_distribution(cdf, "d.csv");
    EXPECT_NEAR(d.mass(0, 50), 0.3, 1e-15);
    std::istringstream badcdf("x,cdf\n0,0\n50,0.7\n100,0.5\n");
    EXPECT_THROW((void)io::read_distribution(badcdf, "d.csv"), ValidationError);
    EXPECT_EQ(io::format_number(0.1 + 0.2), "0.3");
    EXPECT_EQ(io::format_number(1e6), "1000000");
}

TEST_F(Cli, VersionAndUsage) {
    auto r = call({"--version"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("cefbounds 1.0.0 (constraints-v1)"), std::string::npos) << r.out;
    EXPECT_EQ(call({}).code, cli::kExitInvalid);
    EXPECT_EQ(call({"frobnicate"}).code, cli::kExitInvalid);
    EXPECT_EQ(call({"bounds", two_bin()}).code, cli::kExitInvalid);  // --range is required
    EXPECT_EQ(call({"--help"}).code, 0);
}

TEST_F(Cli, AnalyticStatMatchesClosedForm) {
    auto r = call({"stat", two_bin(), "--range", "0,10", "--engine", "analytic", "--stat", "point:3"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = json::parse(r.out);
    EXPECT_NEAR(j["lower"].get<double>(), 0.0, 1e-12);
    EXPECT_NEAR(j["upper"].get<double>(), 4.0, 1e-12);
    EXPECT_EQ(j["spec"], "point:3");
    EXPECT_EQ(j["constraint_tag"], "monotone; curvature unbounded");

    r = call({"stat", two_bin(), "--range", "0,10", "--stat", "mu:0,6"});
    ASSERT_EQ(r.code, 0) << r.err;
    j = json::parse(r.out);
    EXPECT_NEAR(j["lower"].get<double>(), 2.0, 1e-12);
    EXPECT_NEAR(j["upper"].get<double>(), 2.0, 1e-12);
    EXPECT_TRUE(j["point_identified"].get<bool>());
}

TEST_F(Cli, BoundsWritesEnvelopeAndSummary) {
    auto out = (dir / "env.csv").string(), summary = (dir / "sum.json").string();
    auto r = call({"bounds", two_bin(), "--range", "0,10", "--grid", "20", "--out", out, "--summary", summary,
                   "--display-scale", "10"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    std::ifstream env(out);
    std::string header;
    std::getline(env, header);
    EXPECT_EQ(header, "x,lower,upper");
    int rows = 0;
    for (std::string line; std::getline(env, line);) {
        ++rows;
        double x = 0, lo = 0, hi = 0;
        char c1 = 0, c2 = 0;
        std::istringstream(line) >> x >> c1 >> lo >> c2 >> hi;
        EXPECT_LE(lo, hi);
        EXPECT_GE(lo, 0.0);
        EXPECT_LE(hi, 100.0);
    }
    EXPECT_EQ(rows, 20);
    std::ifstream js(summary);
    auto j = json::parse(js);
    EXPECT_EQ(j["engine"], "numeric");
    EXPECT_EQ(j["points"], 20);
    EXPECT_EQ(j["display_scale"], 10.0);

    auto a = call({"bounds", two_bin(), "--range", "0,10", "--grid", "20", "--engine", "analytic"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out.substr(0, 13), "x,lower,upper");
}

TEST_F(Cli, ExitCodes) {
    // a mean outside the outcome range
    auto bad = file("bad.csv", "bin_lo,bin_hi,mean\n0,6,2\n6,10,80\n");
    auto r = call({"stat", bad, "--range", "0,10", "--stat", "slope"});
    EXPECT_EQ(r.code, cli::kExitInvalid);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
    EXPECT_EQ(call({"stat", two_bin(), "--range", "0,10", "--stat", "point:11"}).code, cli::kExitInvalid);
    EXPECT_EQ(call({"stat", (dir / "missing.csv").string(), "--range", "0,10", "--stat", "slope"}).code,
              cli::kExitInvalid);
    EXPECT_EQ(call({"bounds", two_bin(), "--range", "0,10", "--engine", "analytic", "--curvature", "1"}).code,
              cli::kExitInvalid);
    // decreasing means declared increasing
    auto rev = file("rev.csv", "bin_lo,bin_hi,mean\n0,6,8\n6,10,2\n");
    EXPECT_EQ(call({"stat", rev, "--range", "0,10", "--stat", "slope"}).code, cli::kExitInvalid);
    auto ok = call({"stat", rev, "--range", "0,10", "--stat", "slope", "--allow-direction-violation"});
    ASSERT_EQ(ok.code, 0) << ok.err;
    auto j = json::parse(ok.out);
    EXPECT_GT(j["min_mse"].get<double>(), 0.0);
    EXPECT_FALSE(j["warnings"].empty());
}

TEST_F(Cli, BootstrapArchiveIsReproducible) {
    auto counts = file("counts.csv", "bin_lo,bin_hi,mean,sd,n\n0,39,20,12,400\n39,68,45,15,300\n68,100,70,10,330\n");
    auto a1 = (dir / "a1.csv").string(), a2 = (dir / "a2.csv").string();
    std::vector<std::string> base{"stat", counts, "--input-kind", "counts", "--range", "0,100", "--grid", "20",
                                  "--stat", "mu:10,50", "--bootstrap", "100", "--seed", "7", "--archive"};
    auto args1 = base, args2 = base;
    args1.push_back(a1);
    args2.push_back(a2);
    auto r1 = call(args1), r2 = call(args2);
    ASSERT_EQ(r1.code, 0) << r1.err;
    EXPECT_EQ(r1.out, r2.out);
    std::ifstream f1(a1), f2(a2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    EXPECT_EQ(s1.str(), s2.str());
    auto j = json::parse(r1.out);
    EXPECT_LE(j["confidence_set"]["lower"].get<double>(), j["lower"].get<double>());
    EXPECT_GE(j["confidence_set"]["upper"].get<double>(), j["upper"].get<double>());
    EXPECT_EQ(j["confidence_set"]["rng_version"], 1);

    auto few = base;
    few[11] = "50";
    few.push_back(a1);
    EXPECT_EQ(call(few).code, cli::kExitInvalid);
}

TEST_F(Cli, CalibrateSuggestsCap) {
    std::string body = "x,y\n";
    for (int i = 0; i <= 100; ++i) body += std::to_string(i) + "," + std::to_string(i * i / 2.0) + "\n";
    auto r = call({"calibrate", file("curve.csv", body), "--knots", "20,40,60,80", "--boundary", "free"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = json::parse(r.out);
    EXPECT_NEAR(j["max_curvature"].get<double>(), 1.0, 1e-8);
    EXPECT_NEAR(j["suggested_cap"].get<double>(), 2.0, 1e-8);
    EXPECT_EQ(j["manifest"]["constraint_semantics"], "constraints-v1");
    EXPECT_EQ(j["manifest"]["inputs_hash"].get<std::string>().size(), 16u);
}

TEST_F(Cli, DoubleCensorUnion) {
    auto m = file("tm.csv", "parent\\child,0,27,100\n0,0.1485,0.3515\n50,0.1215,0.3785\n100\n");
    auto r = call({"doublecensor", m, "--stat", "mu:0,50", "--grid", "20"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = json::parse(r.out);
    ASSERT_EQ(j["scenarios"].size(), 2u);
    EXPECT_NEAR(j["scenarios"][0]["placement"][0][0][1].get<double>(), 14.85, 1e-9);
    for (const auto& s : j["scenarios"]) {
        EXPECT_LE(j["lower"].get<double>(), s["lower"].get<double>());
        EXPECT_GE(j["upper"].get<double>(), s["upper"].get<double>());
    }
}

TEST_F(Cli, SimulateWritesManifest) {
    json truth = json::array();
    for (int i = 0; i <= 100; i += 5) truth.push_back({i, 10 + 0.3 * i});
    json cfg = {{"truth", {{"points", truth}}},
                {"boundaries", {0, 39, 68, 100}},
                {"range", {0, 100}},
                {"grid", 20},
                {"constraints", {{{"monotone", true}, {"curvature", "inf"}}}},
                {"statistics", {"slope"}},
                {"output_dir", "sim"}};
    auto r = call({"simulate", file("sim.json", cfg.dump())});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = json::parse(r.out);
    EXPECT_EQ(j["runs"][0]["coverage"].get<double>(), 1.0);
    EXPECT_TRUE(fs::exists(dir / "sim" / "manifest.json"));
    EXPECT_EQ(call({"simulate", file("broken.json", "{")}).code, cli::kExitInvalid);
}
