#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "mlp/network_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mlp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("small.json", R"({"generator": {"N": 40, "M": 4, "K": 2, "community_probs": [0.5, 0.5],
      "mu": {"diag_mean": -0.3, "offdiag_mean": -1.0, "variance": 0.01},
      "sigma": {"kind": "first_offdiag_uniform", "scale": 0.2}, "tau": 0.0, "seed": 5}})");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int run(const std::string& args) const {
    const std::string cmd = std::string(MLP_CLI) + " " + args + " > " + path("stdout.txt") + " 2> " + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateIsDeterministicAndRoundTrips) {
  ASSERT_EQ(run("--config " + path("small.json") + " generate -o " + path("a.txt")), 0);
  ASSERT_EQ(run("--config " + path("small.json") + " generate -o " + path("b.txt")), 0);
  EXPECT_EQ(read("a.txt"), read("b.txt"));
  EXPECT_EQ(read("a.txt.truth.json"), read("b.txt.truth.json"));
  const auto net = mlp::io::load_network(path("a.txt"));
  EXPECT_EQ(net.n_nodes(), 40);
  EXPECT_EQ(net.n_layers(), 4);
  ASSERT_EQ(run("--config " + path("small.json") + " generate -o " + path("a.mlpn")), 0);
  EXPECT_EQ(mlp::io::load_network(path("a.mlpn")), net);
  const json truth = json::parse(read("a.txt.truth.json"));
  EXPECT_TRUE(truth.contains("generator"));
  EXPECT_TRUE(truth.contains("version"));
}

TEST_F(Cli, PresetGenerateRoundTrips) {
  ASSERT_EQ(run("generate --example 1 --knob 0.4 --seed 2 -o " + path("p.mlpn")), 0);
  const auto net = mlp::io::load_network(path("p.mlpn"));
  EXPECT_EQ(net.n_nodes(), 100);
  std::stringstream ss;
  mlp::io::write_network_text(ss, net);
  EXPECT_EQ(mlp::io::read_network_text(ss), net);
}

TEST_F(Cli, FitWithAndWithoutTruth) {
  ASSERT_EQ(run("--config " + path("small.json") + " generate -o " + path("n.txt")), 0);
  ASSERT_EQ(run("fit " + path("n.txt") + " -K 2 --truth " + path("n.txt.truth.json") + " -o " + path("r.json")), 0);
  const json r = json::parse(read("r.json"));
  ASSERT_TRUE(r.contains("eval"));
  EXPECT_TRUE(r["eval"].contains("err_pair"));
  EXPECT_TRUE(r["eval"].contains("dist_perm"));
  EXPECT_LE(r["eval"]["err_pair"].get<double>(), 0.2);
  EXPECT_TRUE(r.contains("config"));
  EXPECT_TRUE(r.contains("version"));

  ASSERT_EQ(run("fit " + path("n.txt") + " -K 2 -o " + path("r2.json")), 0);
  const json r2 = json::parse(read("r2.json"));
  EXPECT_FALSE(r2.contains("eval"));
  EXPECT_TRUE(r2.contains("fit"));

  ASSERT_EQ(run("eval --truth " + path("n.txt.truth.json") + " --result " + path("r2.json") + " -o " + path("e.json")), 0);
  EXPECT_TRUE(json::parse(read("e.json")).contains("err_pair"));

  ASSERT_EQ(run("fit " + path("n.txt") + " -K 2 --unknown-support -o " + path("u.json")), 0);
  EXPECT_TRUE(json::parse(read("u.json"))["fit"].contains("lambda"));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("fit " + path("missing.txt") + " -K 2"), 3);
  write("bad.txt", "3 1\nlayer 1\n1 9\n");
  EXPECT_EQ(run("fit " + path("bad.txt") + " -K 2"), 3);
  EXPECT_EQ(run("generate --example 2 --knob 0.7 -o " + path("x.txt")), 2);
  EXPECT_EQ(run("bogus"), 2);
  write("typo.json", R"({"fitt": {}})");
  EXPECT_EQ(run("--config " + path("typo.json") + " generate -o " + path("x.txt")), 2);
  ASSERT_EQ(run("--config " + path("small.json") + " generate -o " + path("n.txt")), 0);
  EXPECT_EQ(run("fit " + path("n.txt") + " -K 0"), 2);
}

TEST_F(Cli, IngestNormalizesAndWarns) {
  write("edges.txt", "A 2 1\nA 1 2\nB 3 1\n");
  ASSERT_EQ(run("ingest " + path("edges.txt") + " -o " + path("g.txt")), 0);
  EXPECT_EQ(read("g.txt"), "3 2\nlayer 1\n1 2\nlayer 2\n1 3\n");
  EXPECT_NE(read("stderr.txt").find("line 2"), std::string::npos);
  write("oob.txt", "A 1 5\n");
  EXPECT_EQ(run("ingest " + path("oob.txt") + " --nodes 3 -o " + path("h.txt")), 3);
}
