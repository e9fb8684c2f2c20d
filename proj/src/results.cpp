#include "mlp/results.hpp"

#include <fstream>
#include <set>
#include <string>

#include "mlp/error.hpp"

namespace mlp::io {
namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError(std::string("unknown key '") + it.key() + "' in " + what);
  }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("bad value for '") + key + "': " + ex.what());
  }
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) throw DataError("matrix has the wrong number of rows");
  Eigen::MatrixXd m(n, n);
  for (int r = 0; r < n; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != n) throw DataError("matrix row has the wrong length");
    for (int c = 0; c < n; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

const char* sigma_kind_name(gen::SigmaScheme::Kind k) {
  using K = gen::SigmaScheme::Kind;
  switch (k) {
    case K::kIdentity: return "identity";
    case K::kFirstOffDiagonalUniform: return "first_offdiag_uniform";
    case K::kBandNormal: return "band_normal";
    case K::kRandomPositions: return "random_positions";
  }
  return "identity";
}

gen::SigmaScheme::Kind sigma_kind_from(const std::string& s) {
  using K = gen::SigmaScheme::Kind;
  if (s == "identity") return K::kIdentity;
  if (s == "first_offdiag_uniform") return K::kFirstOffDiagonalUniform;
  if (s == "band_normal") return K::kBandNormal;
  if (s == "random_positions") return K::kRandomPositions;
  throw ConfigError("unknown sigma kind '" + s + "'");
}

}  // namespace

json to_json(const Membership& e) { return json{{"K", e.K}, {"assign", e.assign}}; }

Membership membership_from_json(const json& j) {
  try {
    return Membership(j.at("assign").get<std::vector<int>>(), j.at("K").get<int>());
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad membership record: ") + ex.what());
  }
}

json to_json(const BlockParams& theta) {
  json blocks = json::array();
  for (int k = 0; k < theta.K(); ++k) {
    for (int l = k; l < theta.K(); ++l) {
      const auto& mu = theta.mu(k, l);
      blocks.push_back({{"k", k},
                        {"l", l},
                        {"mu", std::vector<double>(mu.data(), mu.data() + mu.size())},
                        {"sigma", matrix_json(theta.sigma(k, l))}});
    }
  }
  return json{{"K", theta.K()}, {"M", theta.M()}, {"blocks", std::move(blocks)}};
}

BlockParams theta_from_json(const json& j) {
  try {
    const int K = j.at("K").get<int>();
    const int M = j.at("M").get<int>();
    BlockParams theta(K, M);
    for (const auto& b : j.at("blocks")) {
      const int k = b.at("k").get<int>();
      const int l = b.at("l").get<int>();
      if (k < 0 || l < 0 || k >= K || l >= K) throw DataError("block index out of range");
      const auto mu = b.at("mu").get<std::vector<double>>();
      if (static_cast<int>(mu.size()) != M) throw DataError("mu vector has the wrong length");
      theta.mu(k, l) = Eigen::Map<const Eigen::VectorXd>(mu.data(), M);
      theta.sigma(k, l) = matrix_from(b.at("sigma"), M);
    }
    return theta;
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad parameter record: ") + ex.what());
  }
}

json to_json(const std::vector<SupportSet>& supports, int K) {
  json out = json::array();
  for (int k = 0; k < K; ++k) {
    for (int l = k; l < K; ++l) {
      json pairs = json::array();
      for (auto [b, d] : supports[block_index(k, l, K)].pairs()) pairs.push_back({b, d});
      out.push_back({{"k", k}, {"l", l}, {"pairs", std::move(pairs)}});
    }
  }
  return out;
}

std::vector<SupportSet> supports_from_json(const json& j, int K, int M) {
  std::vector<SupportSet> out(n_blocks(K), SupportSet::empty(M));
  try {
    for (const auto& rec : j) {
      const int k = rec.at("k").get<int>();
      const int l = rec.at("l").get<int>();
      if (k < 0 || l < 0 || k >= K || l >= K) throw DataError("support block index out of range");
      std::vector<std::pair<int, int>> pairs;
      for (const auto& p : rec.at("pairs")) pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
      out[block_index(k, l, K)] = SupportSet(M, std::move(pairs));
    }
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad support record: ") + ex.what());
  }
  return out;
}

json to_json(const gen::GroundTruth& truth, int max_entries_dim) {
  const int K = truth.membership.K;
  json r{{"dim", truth.R.dim},
         {"tau", truth.R.tau},
         {"corr_range", {truth.R.corr_range.first, truth.R.corr_range.second}},
         {"zeta", truth.R.zeta},
         {"lambda_min", truth.R.lambda_min},
         {"repair_rounds", truth.R.repair_rounds},
         {"nnz_offdiag", truth.R.nnz_offdiag()},
         {"seed", truth.R.seed}};
  if (truth.R.dim <= max_entries_dim) {
    json entries = json::array();
    for (int c = 0; c < truth.R.offdiag.outerSize(); ++c) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(truth.R.offdiag, c); it; ++it) {
        if (it.row() < it.col()) entries.push_back({it.row(), it.col(), it.value()});
      }
    }
    r["entries"] = std::move(entries);
  }
  return json{{"format", "mlp-truth"},
              {"version", 1},
              {"model", truth.model},
              {"membership", to_json(truth.membership)},
              {"theta", to_json(truth.theta)},
              {"supports", to_json(truth.supports, K)},
              {"edge_correlation", std::move(r)}};
}

gen::GroundTruth truth_from_json(const json& j) {
  gen::GroundTruth t;
  try {
    if (j.value("format", std::string()) != "mlp-truth") throw DataError("not a ground-truth file");
    t.model = j.value("model", std::string("probit"));
    t.membership = membership_from_json(j.at("membership"));
    t.theta = theta_from_json(j.at("theta"));
    t.supports = supports_from_json(j.at("supports"), t.theta.K(), t.theta.M());
    const auto& r = j.at("edge_correlation");
    t.R.dim = r.at("dim").get<int>();
    t.R.tau = r.at("tau").get<double>();
    t.R.corr_range = {r.at("corr_range").at(0).get<double>(), r.at("corr_range").at(1).get<double>()};
    t.R.zeta = r.at("zeta").get<double>();
    t.R.lambda_min = r.at("lambda_min").get<double>();
    t.R.repair_rounds = r.value("repair_rounds", 0);
    t.R.seed = r.at("seed").get<std::uint64_t>();
    t.R.offdiag.resize(t.R.dim, t.R.dim);
    if (r.contains("entries")) {
      std::vector<Eigen::Triplet<double>> trip;
      for (const auto& e : r.at("entries")) {
        const int a = e.at(0).get<int>(), b = e.at(1).get<int>();
        const double v = e.at(2).get<double>();
        trip.emplace_back(a, b, v);
        trip.emplace_back(b, a, v);
      }
      t.R.offdiag.setFromTriplets(trip.begin(), trip.end());
    }
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad ground-truth file: ") + ex.what());
  }
  if (t.membership.K != t.theta.K()) throw DataError("ground truth K is inconsistent");
  return t;
}

void save_truth(const std::filesystem::path& path, const gen::GroundTruth& truth) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << to_json(truth).dump(1) << '\n';
  if (!os) throw DataError("failed writing " + path.string());
}

gen::GroundTruth load_truth(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& ex) {
    throw DataError(path.string() + ": " + ex.what());
  }
  return truth_from_json(j);
}

json to_json(const gen::GenConfig& c) {
  json j{{"N", c.N},
         {"M", c.M},
         {"K", c.K},
         {"community_probs", c.community_probs},
         {"mu", {{"diag_mean", c.mu.diag_mean}, {"offdiag_mean", c.mu.offdiag_mean}, {"variance", c.mu.variance}}},
         {"sigma",
          {{"kind", sigma_kind_name(c.sigma.kind)},
           {"scale", c.sigma.scale},
           {"band", c.sigma.band},
           {"slope", c.sigma.slope},
           {"variance", c.sigma.variance},
           {"positions", c.sigma.positions},
           {"lo", c.sigma.lo},
           {"hi", c.sigma.hi},
           {"pd_floor", c.sigma.pd_floor}}},
         {"tau", c.tau},
         {"corr_range", {c.corr_range.first, c.corr_range.second}},
         {"seed", c.seed},
         {"label", c.label}};
  if (c.ising) {
    j["ising"] = {{"u", c.ising->u},
                  {"field_scale", c.ising->field_scale},
                  {"field_offset", c.ising->field_offset},
                  {"assortative", c.ising->assortative},
                  {"coupling", c.ising->coupling},
                  {"sweeps", c.ising->sweeps}};
  }
  return j;
}

gen::GenConfig genconfig_from_json(const json& j) {
  reject_unknown(j, {"N", "M", "K", "community_probs", "mu", "sigma", "tau", "corr_range", "seed", "label", "ising"},
                 "generator config");
  gen::GenConfig c;
  take(j, "N", c.N);
  take(j, "M", c.M);
  take(j, "K", c.K);
  take(j, "community_probs", c.community_probs);
  if (c.community_probs.empty() && c.K > 0) c.community_probs.assign(c.K, 1.0 / c.K);
  if (j.contains("mu")) {
    const auto& m = j["mu"];
    reject_unknown(m, {"diag_mean", "offdiag_mean", "variance"}, "mu scheme");
    take(m, "diag_mean", c.mu.diag_mean);
    take(m, "offdiag_mean", c.mu.offdiag_mean);
    take(m, "variance", c.mu.variance);
  }
  if (j.contains("sigma")) {
    const auto& s = j["sigma"];
    reject_unknown(s, {"kind", "scale", "band", "slope", "variance", "positions", "lo", "hi", "pd_floor"},
                   "sigma scheme");
    std::string kind = sigma_kind_name(c.sigma.kind);
    take(s, "kind", kind);
    c.sigma.kind = sigma_kind_from(kind);
    take(s, "scale", c.sigma.scale);
    take(s, "band", c.sigma.band);
    take(s, "slope", c.sigma.slope);
    take(s, "variance", c.sigma.variance);
    take(s, "positions", c.sigma.positions);
    take(s, "lo", c.sigma.lo);
    take(s, "hi", c.sigma.hi);
    take(s, "pd_floor", c.sigma.pd_floor);
  }
  take(j, "tau", c.tau);
  if (j.contains("corr_range")) {
    std::vector<double> r;
    take(j, "corr_range", r);
    if (r.size() != 2) throw ConfigError("corr_range must have two entries");
    c.corr_range = {r[0], r[1]};
  }
  take(j, "seed", c.seed);
  take(j, "label", c.label);
  if (j.contains("ising")) {
    const auto& s = j["ising"];
    reject_unknown(s, {"u", "field_scale", "field_offset", "assortative", "coupling", "sweeps"}, "ising scheme");
    gen::IsingScheme is;
    take(s, "u", is.u);
    take(s, "field_scale", is.field_scale);
    take(s, "field_offset", is.field_offset);
    take(s, "assortative", is.assortative);
    take(s, "coupling", is.coupling);
    take(s, "sweeps", is.sweeps);
    c.ising = is;
  }
  c.validate();
  return c;
}

json to_json(const FitConfig& c) {
  return json{{"delta1", c.delta1},
              {"delta2", c.delta2},
              {"t1_max", c.t1_max},
              {"t2_max", c.t2_max},
              {"step0", c.step0},
              {"backtrack", c.backtrack},
              {"armijo", c.armijo},
              {"max_backtracks", c.max_backtracks},
              {"restarts", c.restarts},
              {"seed", c.seed},
              {"pd_floor", c.pd_floor},
              {"kmeans_init", c.kmeans_init},
              {"kmeans_iterations", c.kmeans_iterations},
              {"warmup_mu_sd", c.warmup_mu_sd},
              {"warmup_sigma", c.warmup_sigma}};
}

FitConfig fitconfig_from_json(const json& j, FitConfig c) {
  reject_unknown(j,
                 {"delta1", "delta2", "t1_max", "t2_max", "step0", "backtrack", "armijo", "max_backtracks", "restarts",
                  "seed", "pd_floor", "kmeans_init", "kmeans_iterations", "warmup_mu_sd", "warmup_sigma"},
                 "fit config");
  take(j, "delta1", c.delta1);
  take(j, "delta2", c.delta2);
  take(j, "t1_max", c.t1_max);
  take(j, "t2_max", c.t2_max);
  take(j, "step0", c.step0);
  take(j, "backtrack", c.backtrack);
  take(j, "armijo", c.armijo);
  take(j, "max_backtracks", c.max_backtracks);
  take(j, "restarts", c.restarts);
  take(j, "seed", c.seed);
  take(j, "pd_floor", c.pd_floor);
  take(j, "kmeans_init", c.kmeans_init);
  take(j, "kmeans_iterations", c.kmeans_iterations);
  take(j, "warmup_mu_sd", c.warmup_mu_sd);
  take(j, "warmup_sigma", c.warmup_sigma);
  c.validate();
  return c;
}

json to_json(const SupportConfig& c) {
  json pairs = json::array();
  for (auto [b, d] : c.pair_set) pairs.push_back({b, d});
  return json{{"lambda", c.lambda},
              {"lambda_rule", c.lambda_rule == LambdaRule::kPerBlock ? "per_block" : "min_block"},
              {"pair_set", std::move(pairs)},
              {"band_budget", c.band_budget},
              {"pair_sweeps", c.pair_sweeps},
              {"inner_fit", to_json(c.inner_fit)},
              {"final_fit", to_json(c.final_fit)}};
}

SupportConfig supportconfig_from_json(const json& j, SupportConfig c) {
  reject_unknown(j, {"lambda", "lambda_rule", "pair_set", "band_budget", "pair_sweeps", "inner_fit", "final_fit"},
                 "support config");
  take(j, "lambda", c.lambda);
  if (j.contains("lambda_rule")) {
    const std::string rule = j["lambda_rule"].get<std::string>();
    if (rule == "per_block") {
      c.lambda_rule = LambdaRule::kPerBlock;
    } else if (rule == "min_block") {
      c.lambda_rule = LambdaRule::kMinBlock;
    } else {
      throw ConfigError("support config: lambda_rule must be per_block or min_block");
    }
  }
  take(j, "band_budget", c.band_budget);
  take(j, "pair_sweeps", c.pair_sweeps);
  if (j.contains("pair_set")) {
    c.pair_set.clear();
    for (const auto& p : j["pair_set"]) c.pair_set.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  }
  if (j.contains("inner_fit")) c.inner_fit = fitconfig_from_json(j["inner_fit"], c.inner_fit);
  if (j.contains("final_fit")) c.final_fit = fitconfig_from_json(j["final_fit"], c.final_fit);
  return c;
}

json to_json(const FitResult& r, bool include_theta) {
  json j{{"loglik", r.loglik()},
         {"loglik_trace", r.loglik_trace},
         {"converged", r.converged},
         {"outer_iterations", r.outer_iterations},
         {"inner_iterations", r.inner_iterations},
         {"restart_index", r.restart_index},
         {"restart_logliks", r.restart_logliks},
         {"line_search_failures", r.line_search_failures},
         {"projection_flags", r.projection_flags},
         {"membership", to_json(r.membership_hat)}};
  if (include_theta) j["theta"] = to_json(r.theta_hat);
  if (!r.supports.empty()) j["supports"] = to_json(r.supports, r.membership_hat.K);
  return j;
}

json to_json(const EvalReport& r) {
  json j{{"err_pair", r.err_pair},
         {"dist_perm", r.dist_perm},
         {"hellinger_sq", r.hellinger_sq},
         {"mu_mse", r.mu_mse},
         {"sigma_weighted_mse", r.sigma_weighted_mse},
         {"param_error", r.param_error}};
  if (r.has_support) {
    j["support_fpr"] = r.support_fpr;
    j["support_fnr"] = r.support_fnr;
  }
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(is, nullptr, true, true);
  } catch (const json::exception& ex) {
    throw ConfigError(path.string() + ": " + ex.what());
  }
}

}  // namespace mlp::io
