#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bplab/exact.hpp"
#include "bplab/network_io.hpp"
#include "cli.hpp"
#include "support.hpp"

using namespace bplab;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::cli_main(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("bplab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::filesystem::path dir_;
};

}  // namespace

TEST_F(CliTest, InferExactOnDiamondMatchesEnumeration) {
    save_network(support::diamond(), path("d.json"));
    Evidence ev;
    ev.observe(3, 1);
    save_evidence(ev, path("e.json"));
    const CliRun r = run_cli({"infer", "--net", path("d.json"), "--evidence", path("e.json"), "--method", "exact",
                          "--exact-engine", "enum"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Beliefs expected = enumerate_marginals(support::diamond(), ev);
    std::istringstream in(r.out);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "method exact");
    for (NodeId i = 0; i < 4; ++i) {
        std::size_t id;
        std::string name;
        double p0, p1;
        in >> id >> name >> p0 >> p1;
        EXPECT_EQ(id, i);
        EXPECT_NEAR(p0, expected[i][0], 1e-9);
        EXPECT_NEAR(p1, expected[i][1], 1e-9);
    }
}

TEST_F(CliTest, InferLoopyAndSamplingReportStatus) {
    save_network(support::diamond(), path("d.json"));
    const CliRun loopy = run_cli({"infer", "--net", path("d.json"), "--method", "loopy", "--momentum", "0.1"});
    ASSERT_EQ(loopy.code, 0);
    EXPECT_EQ(loopy.out.rfind("method loopy status converged iterations ", 0), 0u);
    const CliRun lw = run_cli({"infer", "--net", path("d.json"), "--method", "lw", "--samples", "100", "--seed", "3"});
    ASSERT_EQ(lw.code, 0);
    EXPECT_EQ(lw.out.rfind("method lw samples 100", 0), 0u);
}

TEST_F(CliTest, GenerateEveryKind) {
    for (const std::string kind : {"pyramid", "toyqmr", "polytree", "single-loop"}) {
        const CliRun r = run_cli({"generate", "--kind", kind, "--seed", "4", "-o", path(kind + ".json")});
        ASSERT_EQ(r.code, 0) << kind << ": " << r.err;
        EXPECT_TRUE(validate(load_network(path(kind + ".json"))).ok());
    }
    run_cli({"generate", "--kind", "toyqmr", "--seed", "4", "--diseases", "3", "--findings", "5", "-o", path("q.json")});
    EXPECT_EQ(load_network(path("q.json")).size(), 8u);
    run_cli({"generate", "--kind", "pyramid", "--seed", "4", "--layers", "2,4", "--window", "1", "--typed", "-o",
         path("p.json")});
    EXPECT_EQ(load_network(path("p.json")).size(), 6u);
}

TEST_F(CliTest, GenerateIsDeterministic) {
    run_cli({"generate", "--kind", "toyqmr", "--seed", "9", "-o", path("a.json")});
    run_cli({"generate", "--kind", "toyqmr", "--seed", "9", "-o", path("b.json")});
    EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
}

TEST_F(CliTest, ExperimentPyramidRerunIsByteIdentical) {
    ASSERT_EQ(run_cli({"experiment", "pyramid", "--runs", "3", "--seed", "7", "--out", path("a.csv")}).code, 0);
    ASSERT_EQ(run_cli({"experiment", "pyramid", "--runs", "3", "--seed", "7", "--out", path("b.csv")}).code, 0);
    const std::string a = slurp(path("a.csv"));
    EXPECT_EQ(a, slurp(path("b.csv")));
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 4);
}

TEST_F(CliTest, SweepWritesSummaryAndRuns) {
    const CliRun r = run_cli({"sweep", "--u-grid", "0.01,1", "--runs-per-u", "3", "--seed", "2", "--out", path("s.csv"),
                          "--runs-out", path("r.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string s = slurp(path("s.csv"));
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
    const std::string runs = slurp(path("r.csv"));
    EXPECT_EQ(std::count(runs.begin(), runs.end(), '\n'), 7);
}

TEST_F(CliTest, UntypicalAndMomentumExperiments) {
    ASSERT_EQ(run_cli({"experiment", "untypical", "--runs", "2", "--seed", "1", "--out", path("u.csv")}).code, 0);
    const std::string u = slurp(path("u.csv"));
    EXPECT_EQ(std::count(u.begin(), u.end(), '\n'), 1 + 2 * 2 * 2);
    ASSERT_EQ(run_cli({"experiment", "momentum", "--runs", "2", "--seed", "1", "--prior-upper", "0.01", "--out",
                   path("m.csv")})
                  .code,
              0);
    const std::string m = slurp(path("m.csv"));
    EXPECT_EQ(std::count(m.begin(), m.end(), '\n'), 1 + 2 * 2);
}

TEST_F(CliTest, LeavesExperimentNeedsNetwork) {
    EXPECT_NE(run_cli({"experiment", "leaves", "--runs", "2", "--seed", "1", "--out", path("l.csv")}).code, 0);
    save_network(support::diamond(), path("d.json"));
    EXPECT_EQ(run_cli({"experiment", "leaves", "--runs", "2", "--seed", "1", "--net", path("d.json"), "--out",
                   path("l.csv")})
                  .code,
              0);
}

TEST_F(CliTest, ErrorsExitNonzeroWithDiagnostic) {
    EXPECT_NE(run_cli({"infer", "--bogus"}).code, 0);
    EXPECT_NE(run_cli({}).code, 0);
    EXPECT_NE(run_cli({"generate", "--kind", "spiral", "--seed", "1", "-o", path("x.json")}).code, 0);
    std::ofstream(path("bad.json")) << "{ not json";
    const CliRun bad = run_cli({"infer", "--net", path("bad.json")});
    EXPECT_NE(bad.code, 0);
    EXPECT_FALSE(bad.err.empty());
}
