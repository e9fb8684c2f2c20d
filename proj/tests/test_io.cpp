#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "mlp/error.hpp"
#include "mlp/netgen.hpp"
#include "mlp/network_io.hpp"
#include "mlp/results.hpp"
#include "oracles.hpp"

using namespace mlp;
namespace fs = std::filesystem;

namespace {

std::string data_error_message(const std::string& text) {
  std::istringstream is(text);
  try {
    io::read_network_text(is);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

std::string ingest_error_message(const std::string& text, io::LayerSpec spec = {}) {
  std::istringstream is(text);
  try {
    io::ingest_edge_list(is, spec);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(NetworkText, RoundTripRandom) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const auto net = oracle::random_network(1 + t * 7, 1 + t % 4, 0.2, rng);
    std::stringstream ss;
    io::write_network_text(ss, net);
    EXPECT_EQ(io::read_network_text(ss), net);
  }
}

TEST(NetworkText, Format) {
  MultilayerNetwork net(3, 2);
  net.set_edge(0, 2, 0);
  std::ostringstream os;
  io::write_network_text(os, net);
  EXPECT_EQ(os.str(), "3 2\nlayer 1\n1 3\nlayer 2\n");
}

TEST(NetworkText, MalformedInputNamesLine) {
  EXPECT_NE(data_error_message("3 1\nlayer 1\n1 4\n").find("line 3"), std::string::npos);
  EXPECT_NE(data_error_message("3 1\nlayer 1\n2 2\n").find("self loop"), std::string::npos);
  EXPECT_NE(data_error_message("3 2\nlayer 1\n").find("declares"), std::string::npos);
  EXPECT_NE(data_error_message("x y\n").find("line 1"), std::string::npos);
  EXPECT_NE(data_error_message("3 1\n1 2\n").find("before first layer"), std::string::npos);
}

TEST(NetworkBinary, RoundTripAndCorruption) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 10; ++t) {
    const auto net = oracle::random_network(5 + t * 13, 1 + t % 3, 0.3, rng);
    std::stringstream ss;
    io::write_network_binary(ss, net);
    const std::string bytes = ss.str();
    std::stringstream in(bytes);
    EXPECT_EQ(io::read_network_binary(in), net);
    std::stringstream cut(bytes.substr(0, bytes.size() - 1));
    EXPECT_THROW(io::read_network_binary(cut), DataError);
  }
  std::stringstream bad("XXXXjunk");
  EXPECT_THROW(io::read_network_binary(bad), DataError);
}

TEST(NetworkFiles, ExtensionSelectsFormat) {
  std::mt19937_64 rng(12);
  const auto net = oracle::random_network(30, 3, 0.2, rng);
  const fs::path dir = fs::temp_directory_path() / "mlp_io_test";
  fs::create_directories(dir);
  io::save_network(dir / "a.txt", net);
  io::save_network(dir / "a.mlpn", net);
  EXPECT_EQ(io::load_network(dir / "a.txt"), net);
  EXPECT_EQ(io::load_network(dir / "a.mlpn"), net);
  EXPECT_THROW(io::load_network(dir / "missing.txt"), DataError);
  fs::remove_all(dir);
}

TEST(Ingest, NormalizesDeduplicatesAndRoundTrips) {
  std::istringstream is("# trade\nA 1 2\nB 3 1\nA 2 1\nB 2 3\n");
  auto r = io::ingest_edge_list(is, {});
  EXPECT_EQ(r.network.n_nodes(), 3);
  EXPECT_EQ(r.layer_labels, (std::vector<std::string>{"A", "B"}));
  EXPECT_TRUE(r.network.edge(1, 0, 2));
  EXPECT_EQ(r.network.edge_count(0), 1u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("line 4"), std::string::npos);
  std::stringstream ss;
  io::write_network_text(ss, r.network);
  EXPECT_EQ(io::read_network_text(ss), r.network);
}

TEST(Ingest, ErrorsCarryLineNumbers) {
  io::LayerSpec spec;
  spec.n_nodes = 3;
  EXPECT_NE(ingest_error_message("A 1 2\nA 1 4\n", spec).find("line 2"), std::string::npos);
  EXPECT_NE(ingest_error_message("A 1\n").find("line 1"), std::string::npos);
  EXPECT_NE(ingest_error_message("A 0 1\n").find("1-based"), std::string::npos);
  EXPECT_NE(ingest_error_message("A 2 2\n").find("self loop"), std::string::npos);
  io::LayerSpec fixed;
  fixed.layer_labels = {"A"};
  EXPECT_NE(ingest_error_message("A 1 2\nB 1 2\n", fixed).find("unknown layer"), std::string::npos);
}

TEST(Results, TruthRoundTrip) {
  auto cfg = gen::preset(2, 0.5, 4);
  cfg.N = 30;
  cfg.M = 4;
  cfg.tau = 0.0;
  auto [net, truth] = gen::sample_network(cfg);
  const auto j = io::to_json(truth);
  const auto back = io::truth_from_json(j);
  EXPECT_EQ(back.membership, truth.membership);
  EXPECT_EQ(back.supports, truth.supports);
  for (int k = 0; k < cfg.K; ++k)
    for (int l = k; l < cfg.K; ++l) {
      EXPECT_EQ(back.theta.mu(k, l), truth.theta.mu(k, l));
      EXPECT_EQ(back.theta.sigma(k, l), truth.theta.sigma(k, l));
    }
  EXPECT_THROW(io::truth_from_json(io::json{{"format", "other"}}), DataError);
}

TEST(Results, ConfigsRoundTripAndRejectUnknownKeys) {
  FitConfig fc;
  fc.restarts = 7;
  fc.delta1 = 1e-9;
  const auto fc2 = io::fitconfig_from_json(io::to_json(fc));
  EXPECT_EQ(fc2.restarts, 7);
  EXPECT_EQ(fc2.delta1, 1e-9);
  EXPECT_THROW(io::fitconfig_from_json(io::json{{"restrats", 2}}), ConfigError);
  EXPECT_THROW(io::fitconfig_from_json(io::json{{"restarts", -1}}), ConfigError);

  const auto g = gen::preset(6, 0.05, 3);
  const auto g2 = io::genconfig_from_json(io::to_json(g));
  EXPECT_EQ(io::to_json(g2), io::to_json(g));
  EXPECT_THROW(io::genconfig_from_json(io::json{{"NN", 3}}), ConfigError);

  SupportConfig sc;
  sc.lambda = 0.2;
  sc.pair_set = {{0, 1}, {1, 3}};
  const auto sc2 = io::supportconfig_from_json(io::to_json(sc));
  EXPECT_EQ(sc2.lambda, 0.2);
  EXPECT_EQ(sc2.pair_set, sc.pair_set);
}
