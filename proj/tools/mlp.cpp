// mlp: generate, fit, bench, eval and ingest multilayer networks.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
// error, 3 data error, 4 numerical failure, 5 argument outside a domain.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "mlp/bench.hpp"
#include "mlp/error.hpp"
#include "mlp/fit.hpp"
#include "mlp/kernels.hpp"
#include "mlp/metrics.hpp"
#include "mlp/netgen.hpp"
#include "mlp/network_io.hpp"
#include "mlp/results.hpp"
#include "mlp/support.hpp"

namespace fs = std::filesystem;
using mlp::io::json;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumerical = 4, kDomain = 5 };

int exit_code(mlp::ErrorKind k) {
  switch (k) {
    case mlp::ErrorKind::kConfig: return kConfig;
    case mlp::ErrorKind::kData: return kData;
    case mlp::ErrorKind::kNumerical: return kNumerical;
    case mlp::ErrorKind::kDomain: return kDomain;
  }
  return kOther;
}

// Config file: one JSON object with optional sections "generator", "preset",
// "fit", "support", "omega" and "bench". See docs/config.md.
struct RunConfig {
  json raw = json::object();
  std::optional<mlp::gen::GenConfig> generator;
  mlp::FitConfig fit;
  mlp::SupportConfig support;
  double c_l = 0.1, c_u = 10.0, D = 0.9;
  json preset = json::object();
  json bench = json::object();
};

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw mlp::ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw mlp::ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

RunConfig load_config(const std::string& path) {
  RunConfig rc;
  if (path.empty()) return rc;
  rc.raw = mlp::io::read_json_file(path);
  reject_unknown(rc.raw, {"generator", "preset", "fit", "support", "omega", "bench"}, "config");
  try {
    if (rc.raw.contains("generator")) {
      rc.generator = mlp::io::genconfig_from_json(rc.raw["generator"]);
      rc.generator->validate();
    }
    if (rc.raw.contains("preset")) {
      rc.preset = rc.raw["preset"];
      reject_unknown(rc.preset, {"example", "knob", "seed"}, "preset");
    }
    if (rc.raw.contains("fit")) rc.fit = mlp::io::fitconfig_from_json(rc.raw["fit"]);
    if (rc.raw.contains("support")) rc.support = mlp::io::supportconfig_from_json(rc.raw["support"]);
    if (rc.raw.contains("omega")) {
      const json& o = rc.raw["omega"];
      reject_unknown(o, {"c_l", "c_u", "D"}, "omega");
      rc.c_l = o.value("c_l", rc.c_l);
      rc.c_u = o.value("c_u", rc.c_u);
      rc.D = o.value("D", rc.D);
    }
    if (rc.raw.contains("bench")) {
      rc.bench = rc.raw["bench"];
      reject_unknown(rc.bench, {"example", "knobs", "replicates", "seed", "methods", "workers"}, "bench");
    }
  } catch (const json::exception& ex) {
    throw mlp::ConfigError(path + ": " + ex.what());
  }
  rc.fit.validate();
  return rc;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw mlp::DataError("cannot write " + path);
  os << text;
  if (!os) throw mlp::DataError("write failed for " + path);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json omega_json(double c_l, double c_u, double D, double rho) {
  return {{"c_l", c_l}, {"c_u", c_u}, {"D", D}, {"rho", rho}};
}

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
  int example = 2;
  double knob = 0.5;
  std::uint64_t seed = 1;
  std::string out = "network.txt";
  std::string truth;
};

int cmd_generate(const RunConfig& rc, const GenerateArgs& a, const CLI::App& sub) {
  mlp::gen::GenConfig cfg;
  const bool flags_given = sub.count("--example") + sub.count("--knob") > 0;
  if (rc.generator && !flags_given) {
    cfg = *rc.generator;
    if (sub.count("--seed")) cfg.seed = a.seed;
  } else {
    int ex = rc.preset.value("example", a.example);
    double knob = rc.preset.value("knob", a.knob);
    std::uint64_t seed = rc.preset.value("seed", a.seed);
    if (sub.count("--example")) ex = a.example;
    if (sub.count("--knob")) knob = a.knob;
    if (sub.count("--seed")) seed = a.seed;
    cfg = mlp::gen::preset(ex, knob, seed);
  }
  auto [net, truth] = mlp::gen::sample_network(cfg);
  const std::string truth_path = a.truth.empty() ? a.out + ".truth.json" : a.truth;
  mlp::io::save_network(a.out, net);
  json tj = mlp::io::to_json(truth);
  tj["generator"] = mlp::io::to_json(cfg);
  tj["version"] = mlp::io::kVersion;
  write_text(truth_path, tj.dump(1) + "\n");
  std::cerr << "wrote " << a.out << " (N=" << net.n_nodes() << ", M=" << net.n_layers() << ") and " << truth_path
            << "\n";
  return kOk;
}

// --- fit --------------------------------------------------------------------

struct FitArgs {
  std::string network;
  int K = 0;
  std::string truth;
  std::string out = "-";
  bool unknown_support = false;
  int restarts = -1;
  std::uint64_t seed = 0;
  double c_l = 0.1, c_u = 10.0, D = 0.9;
  double lambda = 0.0;
  std::string supports = "empty";
};

// "empty", "full", "band:W", or a JSON file holding a supports array or a
// ground-truth record. A truth record also supplies the labels the block
// indices refer to.
std::vector<mlp::SupportSet> parse_supports(const std::string& spec, int K, int M,
                                            std::optional<mlp::Membership>& labels) {
  const int nb = mlp::n_blocks(K);
  if (spec == "empty") return std::vector<mlp::SupportSet>(nb, mlp::SupportSet::empty(M));
  if (spec == "full") return std::vector<mlp::SupportSet>(nb, mlp::SupportSet::full(M));
  if (spec.rfind("band:", 0) == 0) {
    int w = 0;
    try {
      w = std::stoi(spec.substr(5));
    } catch (const std::exception&) {
      throw mlp::ConfigError("bad band width in --supports " + spec);
    }
    return std::vector<mlp::SupportSet>(nb, mlp::SupportSet::band(M, w));
  }
  const json j = mlp::io::read_json_file(spec);
  if (j.is_object() && j.value("format", std::string()) == "mlp-truth") {
    mlp::gen::GroundTruth t = mlp::io::truth_from_json(j);
    if (t.membership.K != K || t.theta.M() != M) throw mlp::DataError(spec + ": truth does not match K or M");
    labels = t.membership;
    return t.supports;
  }
  return mlp::io::supports_from_json(j.is_object() ? j.at("supports") : j, K, M);
}

int cmd_fit(const RunConfig& rc, const FitArgs& a, const CLI::App& sub) {
  mlp::FitConfig fc = rc.fit;
  if (a.restarts >= 0) fc.restarts = a.restarts;
  if (sub.count("--seed")) fc.seed = a.seed;
  fc.validate();
  const double c_l = sub.count("--c-l") ? a.c_l : rc.c_l;
  const double c_u = sub.count("--c-u") ? a.c_u : rc.c_u;
  const double D = sub.count("--D") ? a.D : rc.D;
  mlp::SupportConfig sc = rc.support;
  if (sub.count("--lambda")) sc.lambda = a.lambda;
  if (a.K < 1) throw mlp::ConfigError("--K must be at least 1");

  const auto t0 = std::chrono::steady_clock::now();
  const mlp::MultilayerNetwork net = mlp::io::load_network(a.network);
  std::optional<mlp::gen::GroundTruth> truth;
  if (!a.truth.empty()) {
    truth = mlp::io::load_truth(a.truth);
    if (truth->membership.n_nodes() != net.n_nodes()) throw mlp::DataError("truth file does not match the network size");
  }
  const double t_load = seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  mlp::FitResult res;
  json extra = json::object();
  std::string rec_supports = "estimated";
  if (a.unknown_support) {
    sc.final_fit = fc;
    const mlp::ParameterSpace tmpl = mlp::default_space(net, a.K, {}, c_l, c_u, D);
    mlp::UnknownSupportResult us = mlp::fit_unknown_support(net, a.K, tmpl, sc);
    extra["lambda"] = us.lambda;
    extra["block_lambda"] = us.block_lambda;
    json failed = json::array();
    for (auto [b, d] : us.failed_pairs) failed.push_back({b, d});
    extra["failed_pairs"] = failed;
    res = std::move(us.fit);
  } else {
    std::optional<mlp::Membership> labels;
    auto supports = parse_supports(a.supports, a.K, net.n_layers(), labels);
    if (labels && labels->n_nodes() != net.n_nodes()) throw mlp::DataError("support labels do not match N");
    const mlp::ParameterSpace space = mlp::default_space(net, a.K, std::move(supports), c_l, c_u, D);
    res = mlp::fit(net, a.K, space, fc, nullptr, labels ? &*labels : nullptr);
    res.supports = space.supports;
    rec_supports = a.supports;
  }
  const double t_fit = seconds_since(t1);

  const double rho = std::clamp(mlp::empirical_density(net), 1e-6, 1.0 - 1e-6);
  json rec{{"version", mlp::io::kVersion},
           {"command", "fit"},
           {"config", {{"network", a.network},
                       {"K", a.K},
                       {"method", a.unknown_support ? "unknown_support" : "known_support"},
                       {"supports", rec_supports},
                       {"omega", omega_json(c_l, c_u, D, rho)},
                       {"fit", mlp::io::to_json(fc)}}},
           {"fit", mlp::io::to_json(res)},
           {"timings", {{"load_seconds", t_load}, {"fit_seconds", t_fit}}},
           {"kernels", std::string(mlp::kernels::isa_name(mlp::kernels::active_isa()))}};
  if (a.unknown_support) rec["config"]["support"] = mlp::io::to_json(sc);
  for (auto it = extra.begin(); it != extra.end(); ++it) rec["fit"][it.key()] = it.value();
  if (truth) {
    mlp::TruthView tv{&truth->membership, &truth->theta, &truth->supports};
    if (truth->membership.K != a.K) tv.theta = nullptr;
    const mlp::EvalReport rep =
        mlp::evaluate(res.membership_hat, res.theta_hat, &res.supports, tv, D, rho);
    rec["eval"] = mlp::io::to_json(rep);
    rec["config"]["truth"] = a.truth;
  }
  write_text(a.out, rec.dump(1) + "\n");
  return kOk;
}

// --- bench ------------------------------------------------------------------

struct BenchArgs {
  int example = 2;
  std::vector<double> knobs;
  int replicates = 10;
  bool full = false;
  std::uint64_t seed = 1;
  std::vector<std::string> methods;
  int workers = 1;
  std::string csv = "-";
  std::string records;
  std::string plot;
};

int cmd_bench(const RunConfig& rc, const BenchArgs& a, const CLI::App& sub) {
  mlp::bench::BenchSpec spec;
  spec.fit = rc.fit;
  spec.support = rc.support;
  spec.c_l = rc.c_l;
  spec.c_u = rc.c_u;
  spec.D = rc.D;
  try {
    spec.example = rc.bench.value("example", spec.example);
    spec.knobs = rc.bench.value("knobs", spec.knobs);
    spec.replicates = rc.bench.value("replicates", spec.replicates);
    spec.seed = rc.bench.value("seed", spec.seed);
    spec.workers = rc.bench.value("workers", spec.workers);
    for (const auto& m : rc.bench.value("methods", std::vector<std::string>{}))
      spec.methods.push_back(mlp::bench::method_from_name(m));
  } catch (const json::exception& ex) {
    throw mlp::ConfigError(std::string("bench section: ") + ex.what());
  }
  if (sub.count("--example")) spec.example = a.example;
  if (sub.count("--knobs")) spec.knobs = a.knobs;
  if (sub.count("--replicates")) spec.replicates = a.replicates;
  if (a.full) spec.replicates = 50;
  if (sub.count("--seed")) spec.seed = a.seed;
  if (sub.count("--workers")) spec.workers = a.workers;
  if (sub.count("--methods")) {
    spec.methods.clear();
    for (const auto& m : a.methods) spec.methods.push_back(mlp::bench::method_from_name(m));
  }

  std::ofstream rec_os;
  if (!a.records.empty()) {
    rec_os.open(a.records, std::ios::binary);
    if (!rec_os) throw mlp::DataError("cannot write " + a.records);
  }
  json echo{{"example", spec.example},
            {"replicates", spec.replicates},
            {"seed", spec.seed},
            {"omega", {{"c_l", spec.c_l}, {"c_u", spec.c_u}, {"D", spec.D}}},
            {"fit", mlp::io::to_json(spec.fit)},
            {"support", mlp::io::to_json(spec.support)}};
  auto on_record = [&](const mlp::bench::ReplicateRecord& r) {
    json j{{"version", mlp::io::kVersion},
           {"example", spec.example},
           {"cell", r.cell},
           {"knob", r.knob},
           {"replicate", r.replicate},
           {"method", mlp::bench::method_name(r.method)},
           {"seed", r.seed},
           {"ok", r.ok},
           {"timings", {{"generate_seconds", r.seconds_generate}, {"fit_seconds", r.seconds_fit}}}};
    if (r.ok) {
      j["eval"] = mlp::io::to_json(r.report);
      j["loglik"] = r.loglik;
      if (r.method == mlp::bench::Method::kUnknownSupport) j["lambda"] = r.lambda;
    } else {
      j["error"] = r.error;
    }
    if (rec_os.is_open()) {
      j["config"] = echo;
      rec_os << j.dump() << '\n';
      rec_os.flush();
    }
    std::cerr << mlp::gen::preset_knob_name(spec.example) << "=" << r.knob << " rep " << r.replicate << " "
              << mlp::bench::method_name(r.method) << ": "
              << (r.ok ? "Err " + std::to_string(r.report.err_pair) : "failed: " + r.error) << "\n";
  };
  const mlp::bench::BenchResult result = mlp::bench::run_bench(spec, on_record);
  write_text(a.csv, mlp::bench::to_csv(result));
  if (!a.plot.empty()) write_text(a.plot, mlp::bench::to_svg(result));
  return kOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string truth;
  std::string result;
  std::string network;
  double D = 0.9;
  std::string out = "-";
};

int cmd_eval(const EvalArgs& a, const CLI::App& sub) {
  const mlp::gen::GroundTruth truth = mlp::io::load_truth(a.truth);
  const json r = mlp::io::read_json_file(a.result);
  const json& f = r.contains("fit") ? r["fit"] : r;
  mlp::Membership e_hat;
  std::optional<mlp::BlockParams> theta_hat;
  std::vector<mlp::SupportSet> supports;
  double rho = -1.0, D = a.D;
  try {
    e_hat = mlp::io::membership_from_json(f.at("membership"));
    if (f.contains("theta")) theta_hat = mlp::io::theta_from_json(f["theta"]);
    if (f.contains("supports") && theta_hat)
      supports = mlp::io::supports_from_json(f["supports"], e_hat.K, theta_hat->M());
    if (r.contains("config") && r["config"].contains("omega")) {
      rho = r["config"]["omega"].value("rho", rho);
      if (!sub.count("--D")) D = r["config"]["omega"].value("D", D);
    }
  } catch (const json::exception& ex) {
    throw mlp::DataError(a.result + ": " + ex.what());
  }
  if (!a.network.empty()) rho = std::clamp(mlp::empirical_density(mlp::io::load_network(a.network)), 1e-6, 1.0 - 1e-6);
  if (e_hat.n_nodes() != truth.membership.n_nodes()) throw mlp::DataError("result and truth disagree on N");

  mlp::TruthView tv{&truth.membership, nullptr, nullptr};
  if (theta_hat && rho > 0.0 && e_hat.K == truth.membership.K) tv.theta = &truth.theta;
  if (!supports.empty()) tv.supports = &truth.supports;
  const mlp::BlockParams th = theta_hat ? *theta_hat : mlp::BlockParams{};
  const mlp::EvalReport rep = mlp::evaluate(e_hat, th, supports.empty() ? nullptr : &supports, tv, D, rho);
  json out = mlp::io::to_json(rep);
  if (!tv.theta) {
    for (const char* k : {"hellinger_sq", "mu_mse", "sigma_weighted_mse", "param_error"}) out.erase(k);
  }
  write_text(a.out, out.dump(1) + "\n");
  return kOk;
}

// --- ingest -----------------------------------------------------------------

struct IngestArgs {
  std::string input;
  std::string out = "network.txt";
  int nodes = 0;
  std::vector<std::string> layers;
};

int cmd_ingest(const IngestArgs& a) {
  mlp::io::LayerSpec spec;
  spec.n_nodes = a.nodes;
  spec.layer_labels = a.layers;
  const mlp::io::IngestResult res = mlp::io::ingest_edge_list(fs::path(a.input), spec);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  mlp::io::save_network(a.out, res.network);
  std::cerr << "wrote " << a.out << " (N=" << res.network.n_nodes() << ", M=" << res.network.n_layers()
            << "); layers:";
  for (const auto& l : res.layer_labels) std::cerr << ' ' << l;
  std::cerr << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Community detection in multilayer networks with inter-layer and edge dependence"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration (docs/config.md)");
  app.set_version_flag("--version", std::string(mlp::io::kVersion));

  GenerateArgs ga;
  auto* g = app.add_subcommand("generate", "Sample a network from a simulation preset or generator config");
  g->add_option("--example", ga.example, "Preset example id (1-9)")->capture_default_str();
  g->add_option("--knob", ga.knob, "Preset knob value")->capture_default_str();
  g->add_option("--seed", ga.seed, "Generator seed")->capture_default_str();
  g->add_option("-o,--out", ga.out, "Network file (.mlpn for binary)")->capture_default_str();
  g->add_option("--truth", ga.truth, "Ground-truth file (default <out>.truth.json)");

  FitArgs fa;
  auto* f = app.add_subcommand("fit", "Fit memberships and block parameters");
  f->add_option("network", fa.network, "Network file")->required();
  f->add_option("-K,--K", fa.K, "Number of communities")->required();
  f->add_option("--truth", fa.truth, "Optional ground-truth file for metrics");
  f->add_option("-o,--out", fa.out, "Results file ('-' for stdout)")->capture_default_str();
  f->add_flag("--unknown-support", fa.unknown_support, "Estimate supports by pairwise fits and thresholding");
  f->add_option("--restarts", fa.restarts, "Warm-up restarts (default 3)");
  f->add_option("--seed", fa.seed, "Fit seed (default 1)");
  f->add_option("--c-l", fa.c_l, "Lower edge-probability factor")->capture_default_str();
  f->add_option("--c-u", fa.c_u, "Upper edge-probability factor")->capture_default_str();
  f->add_option("--D", fa.D, "Correlation magnitude bound")->capture_default_str();
  f->add_option("--lambda", fa.lambda, "Support threshold (<= 0: default rule)");
  f->add_option("--supports", fa.supports, "Known supports: empty, full, band:W, or a JSON/truth file")
      ->capture_default_str();

  BenchArgs ba;
  auto* b = app.add_subcommand("bench", "Run a simulation grid and report mean (sd) Err per cell");
  b->add_option("--example", ba.example, "Preset example id (1-9)")->capture_default_str();
  b->add_option("--knobs", ba.knobs, "Knob values (default: the example's grid)");
  b->add_option("--replicates", ba.replicates, "Replicates per cell")->capture_default_str();
  b->add_flag("--full", ba.full, "Use 50 replicates per cell");
  b->add_option("--seed", ba.seed, "Base seed")->capture_default_str();
  b->add_option("--methods", ba.methods, "known_support and/or unknown_support");
  b->add_option("--workers", ba.workers, "Concurrent replicates (capped by MLP_WORKERS)")->capture_default_str();
  b->add_option("--csv", ba.csv, "Summary table ('-' for stdout)")->capture_default_str();
  b->add_option("--records", ba.records, "Per-replicate JSON lines");
  b->add_option("--plot", ba.plot, "Write an SVG plot of mean Err");

  EvalArgs ea;
  auto* e = app.add_subcommand("eval", "Score a fit result against a ground-truth file");
  e->add_option("--truth", ea.truth, "Ground-truth file")->required();
  e->add_option("--result", ea.result, "Result file written by 'fit'")->required();
  e->add_option("--network", ea.network, "Network file (recomputes rho)");
  e->add_option("--D", ea.D, "Correlation magnitude bound")->capture_default_str();
  e->add_option("-o,--out", ea.out, "Report file ('-' for stdout)")->capture_default_str();

  IngestArgs ia;
  auto* in = app.add_subcommand("ingest", "Convert an edge list '<layer> <i> <j>' to a network file");
  in->add_option("input", ia.input, "Edge-list file")->required();
  in->add_option("-o,--out", ia.out, "Network file")->capture_default_str();
  in->add_option("--nodes", ia.nodes, "Node count (0: largest id)")->capture_default_str();
  in->add_option("--layers", ia.layers, "Layer labels in order (default: first appearance)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int rc = app.exit(ex);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    const RunConfig rc = load_config(config_path);
    if (*g) return cmd_generate(rc, ga, *g);
    if (*f) return cmd_fit(rc, fa, *f);
    if (*b) return cmd_bench(rc, ba, *b);
    if (*e) return cmd_eval(ea, *e);
    if (*in) return cmd_ingest(ia);
  } catch (const mlp::Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return exit_code(ex.kind());
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kOther;
  }
  return kOther;
}
