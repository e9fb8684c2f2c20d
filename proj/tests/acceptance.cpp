// Acceptance checks. Each criterion prints one PASS/FAIL line with its
// measured values; the exit status is nonzero if any selected criterion fails.
//
//   acceptance                 run all criteria
//   acceptance --criterion N   run criterion N (repeatable)

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mlp/bench.hpp"
#include "mlp/fit.hpp"
#include "mlp/likelihood.hpp"
#include "mlp/metrics.hpp"
#include "mlp/model.hpp"
#include "mlp/netgen.hpp"
#include "mlp/probkit.hpp"
#include "oracles.hpp"

using namespace mlp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// --- 1: bivariate normal CDF against quadrature ------------------------------

Outcome kernel_accuracy() {
  double worst = 0.0;
  for (int ix = 0; ix < 21; ++ix)
    for (int iy = 0; iy < 21; ++iy)
      for (int ir = 0; ir < 9; ++ir) {
        const double x = -5.0 + 0.5 * ix, y = -5.0 + 0.5 * iy, r = -0.95 + 0.2375 * ir;
        worst = std::max(worst, std::abs(prob::bivariate_normal_cdf(x, y, r) - oracle::bvn_cdf_quadrature(x, y, r)));
      }
  double worst_id = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double r = -0.999 + i * (1.998 / 200.0);
    const double exact = 0.25 + std::asin(r) / (2.0 * oracle::kPi);
    worst_id = std::max(worst_id, std::abs(prob::bivariate_normal_cdf(0.0, 0.0, r) - exact));
  }
  return {worst <= 1e-10 && worst_id <= 1e-10,
          fmt("max |error| grid %.2e, arcsin identity %.2e (bound 1e-10)", worst, worst_id)};
}

// --- 2: gradient against central differences ---------------------------------

Outcome gradient_correctness() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mu_u(-2.0, 0.5), sig_u(-0.6, 0.6), unit(0.0, 1.0);
  std::uniform_int_distribution<int> count_u(0, 400);
  double worst = 0.0;
  for (int draw = 0; draw < 500; ++draw) {
    const int M = 2 + draw % 5;
    std::vector<std::pair<int, int>> pairs;
    for (int b = 0; b < M; ++b)
      for (int d = b + 1; d < M; ++d)
        if (unit(rng) < 0.7) pairs.emplace_back(b, d);
    const SupportSet sup(M, pairs);
    Eigen::VectorXd mu(M);
    for (int b = 0; b < M; ++b) mu(b) = mu_u(rng);
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(M, M);
    for (auto [b, d] : pairs) S(b, d) = S(d, b) = sig_u(rng);
    S = shrink_to_floor(S, 0.05);
    std::vector<std::int64_t> counts(4 * n_layer_pairs(M));
    for (auto& c : counts) c = count_u(rng);

    const BlockGradient g = grad_block(mu, S, counts, sup);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); };
    for (int b = 0; b < M; ++b) {
      const double h = 1e-6;
      Eigen::VectorXd p = mu, m = mu;
      p(b) += h;
      m(b) -= h;
      const double fd = (block_loglik(p, S, counts) - block_loglik(m, S, counts)) / (2 * h);
      worst = std::max(worst, rel(g.mu(b), fd));
    }
    for (auto [b, d] : pairs) {
      const double h = 1e-6;
      Eigen::MatrixXd p = S, m = S;
      p(b, d) += h;
      p(d, b) += h;
      m(b, d) -= h;
      m(d, b) -= h;
      const double fd = (block_loglik(mu, p, counts) - block_loglik(mu, m, counts)) / (2 * h);
      worst = std::max(worst, rel(g.sigma(b, d), fd));
    }
  }
  return {worst <= 1e-5, fmt("max relative error %.2e over 500 draws (bound 1e-5)", worst)};
}

// --- 3: Fisher consistency on a 0.01 grid ------------------------------------

Outcome fisher_consistency() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> mu_u(-1.5, 0.0), sig_u(-0.8, 0.8), off(0.0, 0.01);
  int hits = 0;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double mb = mu_u(rng), md = mu_u(rng), s = sig_u(rng);
    const auto a = oracle::cells_quadrature(mb, md, s);
    std::vector<std::int64_t> counts(4);
    for (int c = 0; c < 4; ++c) counts[c] = std::llround(1e12 * a[c]);
    // Grid offset at random so that the truth is not a grid point.
    const double ob = off(rng), od = off(rng), os = off(rng);
    Eigen::VectorXd mu(2);
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(2, 2);
    double best = -std::numeric_limits<double>::infinity();
    double bb = 0, bd = 0, bs = 0;
    for (int i = 0; i <= 220; ++i) {
      mu(0) = -2.0 + ob + 0.01 * i;
      for (int j = 0; j <= 220; ++j) {
        mu(1) = -2.0 + od + 0.01 * j;
        for (int k = 0; k <= 189; ++k) {
          const double r = -0.95 + os + 0.01 * k;
          S(0, 1) = S(1, 0) = r;
          const double v = block_loglik(mu, S, counts);
          if (v > best) best = v, bb = mu(0), bd = mu(1), bs = r;
        }
      }
    }
    const double err = std::max({std::abs(bb - mb), std::abs(bd - md), std::abs(bs - s)});
    worst = std::max(worst, err);
    hits += err <= 0.01;
  }
  return {hits == 20, fmt("%d/20 grid maxima within one step of the truth, max offset %.4f", hits, worst)};
}

// --- 4: exhaustive small-instance oracle ------------------------------------

// Max over (mu_b, mu_d, sigma) of one block's pairwise log-likelihood within the
// mean box and |sigma| <= D: closed form when the free optimum is feasible,
// otherwise coordinate ascent with golden-section line maximization.
double profile_block(const std::array<std::int64_t, 4>& n, double lo, double hi, double D) {
  const double total = static_cast<double>(n[0] + n[1] + n[2] + n[3]);
  if (total == 0) return 0.0;
  auto f = [&](double a, double b, double s) {
    const double a1 = prob::bivariate_normal_cdf(a, b, s);
    const double pa = prob::std_normal_cdf(a), pb = prob::std_normal_cdf(b);
    const double c[4] = {a1, pa - a1, pb - a1, 1.0 - pa - pb + a1};
    double v = 0.0;
    for (int k = 0; k < 4; ++k) v += n[k] * std::log(std::max(c[k], 1e-12));
    return v;
  };
  if (n[0] > 0 && n[1] > 0 && n[2] > 0 && n[3] > 0) {
    const double a = prob::std_normal_quantile((n[0] + n[1]) / total);
    const double b = prob::std_normal_quantile((n[0] + n[2]) / total);
    double sl = -0.999999, sh = 0.999999;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (sl + sh);
      (prob::bivariate_normal_cdf(a, b, mid) < n[0] / total ? sl : sh) = mid;
    }
    const double s = 0.5 * (sl + sh);
    if (a >= lo && a <= hi && b >= lo && b <= hi && std::abs(s) <= D) {
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += n[k] * std::log(n[k] / total);
      return v;
    }
  }
  const double top = std::min(hi, 6.0);
  auto golden = [](const std::function<double(double)>& g, double l, double h) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = h - r * (h - l), x2 = l + r * (h - l), f1 = g(x1), f2 = g(x2);
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        l = x1, x1 = x2, f1 = f2, x2 = l + r * (h - l), f2 = g(x2);
      } else {
        h = x2, x2 = x1, f2 = f1, x1 = h - r * (h - l), f1 = g(x1);
      }
    }
    double best = 0.5 * (l + h), fb = g(best);
    if (g(l) > fb) best = l, fb = g(l);
    if (g(h) > fb) best = h;
    return best;
  };
  double best = -std::numeric_limits<double>::infinity();
  for (double s0 : {-0.5, 0.0, 0.5}) {
    double a = std::clamp(prob::std_normal_quantile(std::clamp((n[0] + n[1]) / total, 1e-6, 1 - 1e-6)), lo, top);
    double b = std::clamp(prob::std_normal_quantile(std::clamp((n[0] + n[2]) / total, 1e-6, 1 - 1e-6)), lo, top);
    double s = s0, prev = f(a, b, s);
    for (int sweep = 0; sweep < 500; ++sweep) {
      a = golden([&](double x) { return f(x, b, s); }, lo, top);
      b = golden([&](double x) { return f(a, x, s); }, lo, top);
      s = golden([&](double x) { return f(a, b, x); }, -D, D);
      const double cur = f(a, b, s);
      if (cur - prev < 1e-13) break;
      prev = cur;
    }
    best = std::max(best, f(a, b, s));
  }
  return best;
}

double profile_loglik(const MultilayerNetwork& net, const std::vector<int>& e, double lo, double hi, double D) {
  const auto c = oracle::brute_counts(net, e, 2);
  double v = 0.0;
  for (int blk = 0; blk < 3; ++blk) v += profile_block({c.at(blk, 0, 0), c.at(blk, 0, 1), c.at(blk, 0, 2), c.at(blk, 0, 3)}, lo, hi, D);
  return v;
}

Outcome small_instance_oracle() {
  int ok = 0, truth_best = 0;
  double worst_gap = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 20; ++s) {
    gen::GenConfig c;
    c.N = 12;
    c.M = 2;
    c.K = 2;
    c.community_probs = {0.5, 0.5};
    c.mu = {-0.1, -1.3, 0.01};
    c.sigma.kind = gen::SigmaScheme::Kind::kFirstOffDiagonalUniform;
    c.sigma.scale = 0.3;
    c.tau = 0.0;
    c.seed = 500 + s;
    const auto [net, truth] = gen::sample_network(c);
    const double rho = static_cast<double>(net.total_edges()) / (2.0 * 66.0);
    const double c_u = std::min(10.0, 1.0 / rho);
    const double lo = prob::std_normal_quantile(0.1 * rho);
    const double hi = c_u * rho >= 1.0 ? std::numeric_limits<double>::infinity() : prob::std_normal_quantile(c_u * rho);

    const double at_truth = profile_loglik(net, truth.membership.assign, lo, hi, 0.9);
    double global = -std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < (1 << 11); ++mask) {
      std::vector<int> e(12, 0);
      for (int i = 1; i < 12; ++i) e[i] = (mask >> (i - 1)) & 1;
      global = std::max(global, profile_loglik(net, e, lo, hi, 0.9));
    }
    truth_best += at_truth >= global - 1e-9;

    FitConfig fc;
    fc.delta1 = 1e-13;
    fc.delta2 = 1e-13;
    fc.t1_max = 20000;
    fc.t2_max = 200;
    const auto r = fit(net, 2, default_space(net, 2, std::vector<SupportSet>(3, SupportSet::full(2))), fc);
    const double gap = r.loglik() - at_truth;
    worst_gap = std::min(worst_gap, gap);
    ok += gap >= -1e-6;
    std::printf("  instance %2d: fit %.8f truth-profile %.8f global-profile %.8f\n", s, r.loglik(), at_truth, global);
  }
  return {ok >= 18, fmt("%d/20 fits reach the truth-partition profile likelihood - 1e-6 (min gap %.2e); "
                        "truth partition is the global profile maximum on %d/20",
                        ok, worst_gap, truth_best)};
}

// --- 5: metric oracles ------------------------------------------------------

Outcome metric_oracles() {
  std::mt19937_64 rng(55);
  int dist_ok = 0, err_ok = 0;
  for (int t = 0; t < 200; ++t) {
    const int K = 1 + t % 6, N = 5 + static_cast<int>(rng() % 60);
    const auto a = oracle::random_labels(N, K, rng), b = oracle::random_labels(N, K, rng);
    dist_ok += dist_min_permutation(Membership(a, K), Membership(b, K)).value == oracle::dist_enumerate(a, b, K);
  }
  for (int t = 0; t < 200; ++t) {
    const int K = 1 + t % 6, N = 5 + static_cast<int>(rng() % 60);
    const auto a = oracle::random_labels(N, K, rng), b = oracle::random_labels(N, K, rng);
    std::vector<int> p(K), q(K);
    std::iota(p.begin(), p.end(), 0);
    std::iota(q.begin(), q.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    std::shuffle(q.begin(), q.end(), rng);
    auto ra = a, rb = b;
    for (auto& x : ra) x = p[x];
    for (auto& x : rb) x = q[x];
    const double base = err_pair_mismatch(Membership(a, K), Membership(b, K));
    err_ok += base == err_pair_mismatch(Membership(ra, K), Membership(rb, K)) && base == oracle::err_enumerate(a, b);
  }
  return {dist_ok == 200 && err_ok == 200,
          fmt("dist exact on %d/200, Err label-invariant and exact on %d/200", dist_ok, err_ok)};
}

// --- 6: projection contract --------------------------------------------------

Outcome projection_contract() {
  std::mt19937_64 rng(66);
  std::normal_distribution<double> z(0.0, 0.7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int feasible = 0;
  double idem = 0.0, clamp_err = 0.0;
  for (int t = 0; t < 500; ++t) {
    const int M = 2 + t % 7;
    Eigen::MatrixXd S(M, M);
    for (int i = 0; i < M; ++i)
      for (int j = i; j < M; ++j) S(i, j) = S(j, i) = (i == j ? 1.0 + 0.3 * z(rng) : z(rng));
    std::vector<std::pair<int, int>> pairs;
    for (int b = 0; b < M; ++b)
      for (int d = b + 1; d < M; ++d)
        if (unit(rng) < 0.6) pairs.emplace_back(b, d);
    const SupportSet sup(M, pairs);
    const double D = 0.5 + 0.45 * unit(rng);
    const double floor = t % 3 == 0 ? 1e-6 : (t % 3 == 1 ? 1e-3 : 1e-2);
    const auto X = project_sigma(S, sup, D, floor).value;
    bool ok = min_eigenvalue(X) >= floor - 1e-10;
    for (int b = 0; b < M; ++b)
      for (int d = 0; d < M; ++d) {
        if (b == d) {
          ok = ok && X(b, d) == 1.0;
          continue;
        }
        ok = ok && X(b, d) == X(d, b) && std::abs(X(b, d)) <= D;
        if (!sup.contains(b, d)) ok = ok && X(b, d) == 0.0;
      }
    feasible += ok;
    idem = std::max(idem, (project_sigma(X, sup, D, floor).value - X).cwiseAbs().maxCoeff());
  }
  for (int t = 0; t < 200; ++t) {
    Eigen::Matrix2d S;
    const double s = 3.0 * z(rng);
    S << 1.0, s, s, 1.0;
    const double D = 0.5 + 0.45 * unit(rng);
    const auto X = project_sigma(S, SupportSet::full(2), D, 1e-6).value;
    clamp_err = std::max(clamp_err, std::abs(X(0, 1) - std::clamp(s, -D, D)));
    const auto Y = project_sigma(S, SupportSet::empty(2), D, 1e-6).value;
    clamp_err = std::max(clamp_err, std::abs(Y(0, 1)));
  }
  return {feasible == 500 && idem <= 1e-8 && clamp_err <= 1e-8,
          fmt("%d/500 feasible, idempotence %.2e, M=2 clamp error %.2e", feasible, idem, clamp_err)};
}

// --- 7: generator statistical validity ---------------------------------------

Outcome generator_validity() {
  long cells = 0, within = 0;
  for (int s = 0; s < 5; ++s) {
    const auto cfg = gen::preset(2, 0.5, 700 + s);
    const auto [net, truth] = gen::sample_network(cfg);
    const int K = cfg.K, M = cfg.M;
    const auto c = oracle::brute_counts(net, truth.membership.assign, K);
    for (int k = 0; k < K; ++k)
      for (int l = k; l < K; ++l) {
        const int blk = oracle::unordered_block(k, l, K);
        const double n = static_cast<double>(c.node_pairs[blk]);
        if (n == 0) continue;
        const auto& mu = truth.theta.mu(k, l);
        const auto& S = truth.theta.sigma(k, l);
        int pair = 0;
        std::vector<double> layer_freq(M, 0.0);
        for (int b = 0; b < M; ++b)
          for (int d = b + 1; d < M; ++d, ++pair) {
            const auto a = oracle::cells_quadrature(mu(b), mu(d), S(b, d));
            for (int slot = 0; slot < 4; ++slot) {
              const double f = c.at(blk, pair, slot) / n;
              ++cells;
              within += std::abs(f - a[slot]) <= 3.0 * std::sqrt(a[slot] * (1 - a[slot]) / n);
            }
            if (b == 0) {
              layer_freq[0] = (c.at(blk, pair, 0) + c.at(blk, pair, 1)) / n;
              layer_freq[d] = (c.at(blk, pair, 0) + c.at(blk, pair, 2)) / n;
            }
          }
        for (int b = 0; b < M; ++b) {
          const double p = oracle::Phi(mu(b));
          ++cells;
          within += std::abs(layer_freq[b] - p) <= 3.0 * std::sqrt(p * (1 - p) / n);
        }
      }
  }
  const double frac = static_cast<double>(within) / cells;
  return {frac >= 0.95, fmt("%.4f of %ld cells within 3 standard errors (need 0.95)", frac, cells)};
}

// --- 8-10: simulation studies -----------------------------------------------

std::vector<double> mean_err(const bench::BenchResult& r, bench::Method m) {
  std::vector<double> out;
  for (const auto& s : bench::summarize(r))
    if (s.method == m) out.push_back(s.mean);
  return out;
}

int failures(const bench::BenchResult& r) {
  int n = 0;
  for (const auto& rec : r.records) n += !rec.ok;
  return n;
}

void print_records(const bench::BenchResult& r) {
  for (const auto& rec : r.records)
    std::printf("  knob %g rep %d %s: Err %.4f%s\n", rec.knob, rec.replicate, bench::method_name(rec.method),
                rec.report.err_pair, rec.ok ? "" : (" failed: " + rec.error).c_str());
  std::fflush(stdout);
}

Outcome example2_levels() {
  bench::BenchSpec spec;
  spec.example = 2;
  spec.knobs = {0.5, 0.8, 1.2};
  spec.replicates = 10;
  const auto r = bench::run_bench(spec);
  print_records(r);
  const auto m = mean_err(r, bench::Method::kKnownSupport);
  const bool pass = failures(r) == 0 && m[0] <= 0.10 && m[0] <= m[1] && m[1] <= m[2];
  return {pass, fmt("mean Err %.4f / %.4f / %.4f at v = 0.5 / 0.8 / 1.2 (need <= 0.10 and nondecreasing), %d failed",
                    m[0], m[1], m[2], failures(r))};
}

Outcome example5_trend() {
  bench::BenchSpec spec;
  spec.example = 5;
  spec.knobs = {10, 40};
  spec.replicates = 10;
  const auto r = bench::run_bench(spec);
  print_records(r);
  const auto m = mean_err(r, bench::Method::kKnownSupport);
  return {failures(r) == 0 && m[1] <= m[0] - 0.10,
          fmt("mean Err %.4f at M=10, %.4f at M=40 (need a drop of at least 0.10), %d failed", m[0], m[1],
              failures(r))};
}

Outcome unknown_support() {
  bench::BenchSpec spec;
  spec.example = 9;
  spec.knobs = {20};
  spec.replicates = 10;
  spec.methods = {bench::Method::kKnownSupport, bench::Method::kUnknownSupport};
  const auto r = bench::run_bench(spec);
  double rates = 0.0;
  int n_us = 0;
  for (const auto& rec : r.records) {
    if (rec.method != bench::Method::kUnknownSupport || !rec.ok) continue;
    std::printf("  rep %d: FPR %.4f FNR %.4f\n", rec.replicate, rec.report.support_fpr, rec.report.support_fnr);
    rates += rec.report.support_fpr + rec.report.support_fnr;
    ++n_us;
  }
  print_records(r);
  rates /= std::max(1, n_us);
  const double ks = mean_err(r, bench::Method::kKnownSupport)[0];
  const double us = mean_err(r, bench::Method::kUnknownSupport)[0];
  return {failures(r) == 0 && std::abs(us - ks) <= 0.05 && rates <= 0.2,
          fmt("mean Err known %.4f, unknown %.4f (need |diff| <= 0.05); mean FPR+FNR %.4f (need <= 0.2); %d failed",
              ks, us, rates, failures(r))};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "bivariate normal CDF accuracy", kernel_accuracy},
    {2, "likelihood gradient", gradient_correctness},
    {3, "Fisher consistency", fisher_consistency},
    {4, "small-instance exhaustive oracle", small_instance_oracle},
    {5, "metric oracles", metric_oracles},
    {6, "correlation projection contract", projection_contract},
    {7, "generator statistical validity", generator_validity},
    {8, "Example 2 error level and trend", example2_levels},
    {9, "Example 5 layer-count trend", example5_trend},
    {10, "unknown-support robustness", unknown_support},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
      return 2;
    }
  }
  int failed = 0;
  for (const auto& c : kCriteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = c.run();
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), sec);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
