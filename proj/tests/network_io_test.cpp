#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "bplab/generators.hpp"
#include "bplab/network_io.hpp"
#include "support.hpp"

using namespace bplab;

namespace {

void expect_same_net(const BayesNet& a, const BayesNet& b) {
    ASSERT_EQ(a.size(), b.size());
    for (NodeId i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.node(i).name, b.node(i).name);
        EXPECT_EQ(a.arity(i), b.arity(i));
        EXPECT_EQ(a.parents(i), b.parents(i));
        EXPECT_EQ(a.node(i).cpd.index(), b.node(i).cpd.index());
        if (const auto* t = std::get_if<TableCpd>(&a.node(i).cpd)) {
            EXPECT_EQ(t->rows, std::get<TableCpd>(b.node(i).cpd).rows);
        } else {
            const auto& x = std::get<NoisyOrCpd>(a.node(i).cpd);
            const auto& y = std::get<NoisyOrCpd>(b.node(i).cpd);
            EXPECT_EQ(x.theta0, y.theta0);
            EXPECT_EQ(x.thetas, y.thetas);
        }
    }
}

}  // namespace

TEST(NetworkIo, TableRoundTripIsExact) {
    Rng rng(4);
    const BayesNet net = gen_polytree(9, 4, rng);
    const std::string text = format_network(net);
    const BayesNet back = parse_network(text);
    expect_same_net(net, back);
    EXPECT_EQ(format_network(back), text);
}

TEST(NetworkIo, NoisyOrRoundTripIsExact) {
    Rng rng(8);
    const BayesNet net = gen_toyqmr({}, rng);
    expect_same_net(net, parse_network(format_network(net)));
}

TEST(NetworkIo, FileRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "bplab_io_test";
    std::filesystem::create_directories(dir);
    const BayesNet net = support::diamond();
    save_network(net, dir / "d.json");
    expect_same_net(net, load_network(dir / "d.json"));

    Evidence ev;
    ev.observe(3, 1);
    ev.observe(0, 0);
    save_evidence(ev, dir / "e.json");
    EXPECT_EQ(load_evidence(dir / "e.json").items(), ev.items());
    std::filesystem::remove_all(dir);
}

TEST(NetworkIo, RejectsMalformedDocuments) {
    EXPECT_THROW(parse_network("not json"), FormatError);
    EXPECT_THROW(parse_network(R"({"version": 2, "nodes": []})"), FormatError);
    EXPECT_THROW(parse_network(R"({"version": 1})"), FormatError);
    EXPECT_THROW(parse_network(R"({"version": 1, "nodes": [{"id": 0, "name": "A", "arity": 2, "parents": [],
                                   "cpd": {"type": "gaussian"}}]})"),
                 FormatError);
    EXPECT_THROW(parse_network(R"({"version": 1, "nodes": [{"id": 3, "name": "A", "arity": 2, "parents": [],
                                   "cpd": {"type": "table", "rows": [[0.5, 0.5]]}}]})"),
                 FormatError);
    EXPECT_THROW(parse_evidence(R"({"observations": [{"node": 0}]})"), FormatError);
    EXPECT_THROW(parse_evidence(R"({"observations": [{"node": 0, "state": 1}, {"node": 0, "state": 0}]})"),
                 std::exception);
    EXPECT_THROW(load_network("/nonexistent/net.json"), FormatError);
}

TEST(NetworkIo, ParsesHandWrittenDocument) {
    const BayesNet net = parse_network(R"({
      "version": 1,
      "nodes": [
        {"id": 0, "name": "rain", "arity": 2, "parents": [], "cpd": {"type": "table", "rows": [[0.8, 0.2]]}},
        {"id": 1, "name": "wet", "arity": 2, "parents": [0], "cpd": {"type": "noisy_or", "theta0": 0.1, "thetas": [2.0]}}
      ]})");
    ASSERT_EQ(net.size(), 2u);
    EXPECT_EQ(net.node(1).name, "wet");
    EXPECT_TRUE(validate(net).ok());
    EXPECT_NEAR(net.conditional(1, 0, {1}), std::exp(-2.1), 1e-15);
}
