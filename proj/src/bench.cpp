#include "mlp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "mlp/error.hpp"

namespace mlp::bench {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

const char* method_name(Method m) { return m == Method::kKnownSupport ? "known_support" : "unknown_support"; }

Method method_from_name(const std::string& s) {
  if (s == "known_support" || s == "ks") return Method::kKnownSupport;
  if (s == "unknown_support" || s == "us") return Method::kUnknownSupport;
  throw ConfigError("unknown method '" + s + "' (known_support | unknown_support)");
}

std::uint64_t replicate_seed(std::uint64_t base, int r) {
  return gen::derive_seed(base, 0xbe9c0000ULL + static_cast<std::uint64_t>(r));
}

int worker_cap(int requested) {
  int cap = std::max(1, requested);
  if (const char* env = std::getenv("MLP_WORKERS")) {
    const int v = std::atoi(env);
    if (v >= 1) cap = std::min(cap, v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  if (hw > 0) cap = std::min<int>(cap, static_cast<int>(hw));
  return cap;
}

FitResult fit_known_support(const MultilayerNetwork& net, const gen::GroundTruth& truth, int K, const FitConfig& fit_cfg,
                            double c_l, double c_u, double D) {
  const ParameterSpace space = default_space(net, K, truth.supports, c_l, c_u, D);
  return fit(net, K, space, fit_cfg, nullptr, &truth.membership);
}

std::vector<ReplicateRecord> run_replicate(const gen::GenConfig& config, const std::vector<Method>& methods,
                                           const BenchSpec& spec) {
  std::vector<ReplicateRecord> out;
  auto t0 = std::chrono::steady_clock::now();
  MultilayerNetwork net;
  gen::GroundTruth truth;
  std::string gen_error;
  try {
    std::tie(net, truth) = gen::sample_network(config);
  } catch (const std::exception& ex) {
    gen_error = ex.what();
  }
  const double t_gen = seconds_since(t0);
  for (Method m : methods) {
    ReplicateRecord rec;
    rec.method = m;
    rec.seed = config.seed;
    rec.seconds_generate = t_gen;
    if (!gen_error.empty()) {
      rec.error = "generation failed: " + gen_error;
      out.push_back(std::move(rec));
      continue;
    }
    auto t1 = std::chrono::steady_clock::now();
    try {
      FitConfig fc = spec.fit;
      fc.seed = gen::derive_seed(config.seed, 77);
      FitResult res;
      double lambda = 0.0;
      if (m == Method::kKnownSupport) {
        res = fit_known_support(net, truth, config.K, fc, spec.c_l, spec.c_u, spec.D);
      } else {
        SupportConfig sc = spec.support;
        sc.inner_fit.seed = gen::derive_seed(config.seed, 78);
        sc.final_fit = fc;
        ParameterSpace tmpl = default_space(net, config.K, {}, spec.c_l, spec.c_u, spec.D);
        UnknownSupportResult us = fit_unknown_support(net, config.K, tmpl, sc);
        res = std::move(us.fit);
        lambda = us.lambda;
      }
      rec.seconds_fit = seconds_since(t1);
      const double rho = std::clamp(empirical_density(net), 1e-6, 1.0 - 1e-6);
      TruthView tv{&truth.membership, &truth.theta, &truth.supports};
      rec.report = evaluate(res.membership_hat, res.theta_hat, &res.supports, tv, spec.D, rho);
      rec.loglik = res.loglik();
      rec.lambda = lambda;
      rec.ok = true;
    } catch (const std::exception& ex) {
      rec.seconds_fit = seconds_since(t1);
      rec.error = ex.what();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

BenchResult run_bench(const BenchSpec& spec, const std::function<void(const ReplicateRecord&)>& on_record) {
  if (spec.replicates < 1) throw ConfigError("replicates must be at least 1");
  BenchResult result;
  result.spec = spec;
  result.knobs = spec.knobs.empty() ? gen::preset_grid(spec.example) : spec.knobs;
  result.methods = spec.methods;
  if (result.methods.empty()) {
    result.methods.push_back(Method::kKnownSupport);
    if (spec.example == 9) result.methods.push_back(Method::kUnknownSupport);
  }
  // Validate every cell before running anything.
  for (double knob : result.knobs) (void)gen::preset(spec.example, knob, spec.seed);

  const int n_tasks = static_cast<int>(result.knobs.size()) * spec.replicates;
  std::vector<std::vector<ReplicateRecord>> slots(n_tasks);
  std::vector<char> done(n_tasks, 0);
  std::atomic<int> next{0};
  std::mutex mu;
  int emitted = 0;

  auto work = [&]() {
    for (;;) {
      const int task = next.fetch_add(1);
      if (task >= n_tasks) return;
      const int cell = task / spec.replicates;
      const int r = task % spec.replicates;
      const double knob = result.knobs[cell];
      gen::GenConfig cfg = gen::preset(spec.example, knob, replicate_seed(spec.seed, r));
      auto recs = run_replicate(cfg, result.methods, spec);
      for (auto& rec : recs) {
        rec.cell = cell;
        rec.knob = knob;
        rec.replicate = r;
      }
      std::lock_guard<std::mutex> lock(mu);
      slots[task] = std::move(recs);
      done[task] = 1;
      while (emitted < n_tasks && done[emitted]) {
        if (on_record) {
          for (const auto& rec : slots[emitted]) on_record(rec);
        }
        ++emitted;
      }
    }
  };
  const int workers = std::min(worker_cap(spec.workers), std::max(1, n_tasks));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& s : slots) {
    for (auto& rec : s) result.records.push_back(std::move(rec));
  }
  return result;
}

std::vector<CellSummary> summarize(const BenchResult& r) {
  std::vector<CellSummary> out;
  for (std::size_t c = 0; c < r.knobs.size(); ++c) {
    for (Method m : r.methods) {
      CellSummary s;
      s.knob = r.knobs[c];
      s.method = m;
      std::vector<double> v;
      for (const auto& rec : r.records) {
        if (rec.cell != static_cast<int>(c) || rec.method != m) continue;
        if (rec.ok) {
          v.push_back(rec.report.err_pair);
        } else {
          ++s.n_failed;
        }
      }
      s.n_ok = static_cast<int>(v.size());
      if (!v.empty()) {
        double sum = 0.0;
        for (double x : v) sum += x;
        s.mean = sum / v.size();
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
      }
      out.push_back(s);
    }
  }
  return out;
}

std::string to_csv(const BenchResult& r) {
  const auto cells = summarize(r);
  std::ostringstream os;
  os << gen::preset_knob_name(r.spec.example);
  for (Method m : r.methods) os << ',' << method_name(m);
  os << ",replicates\n";
  std::size_t idx = 0;
  for (double knob : r.knobs) {
    std::ostringstream knob_s;
    knob_s << knob;
    os << knob_s.str();
    int n_ok = 0, n_all = 0;
    for (std::size_t m = 0; m < r.methods.size(); ++m, ++idx) {
      const CellSummary& s = cells[idx];
      os << ',';
      if (s.n_ok == 0) {
        os << "failed";
      } else {
        os << '"' << fmt3(s.mean) << " (" << fmt3(s.sd) << ")\"";
      }
      n_ok += s.n_ok;
      n_all += s.n_ok + s.n_failed;
    }
    os << ',' << n_ok << '/' << n_all << '\n';
  }
  return os.str();
}

std::string to_svg(const BenchResult& r) {
  const auto cells = summarize(r);
  const double W = 480, H = 320, L = 60, R = 20, T = 20, B = 50;
  double kmin = *std::min_element(r.knobs.begin(), r.knobs.end());
  double kmax = *std::max_element(r.knobs.begin(), r.knobs.end());
  if (kmax == kmin) kmax = kmin + 1.0;
  double ymax = 0.05;
  for (const auto& c : cells) ymax = std::max(ymax, c.mean + c.sd);
  auto X = [&](double k) { return L + (k - kmin) / (kmax - kmin) * (W - L - R); };
  auto Y = [&](double v) { return H - B - v / ymax * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (double k : r.knobs) {
    os << "<text x=\"" << X(k) << "\" y=\"" << H - B + 18 << "\" font-size=\"11\" text-anchor=\"middle\">" << k
       << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double v = ymax * t / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << Y(v) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << fmt3(v)
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" font-size=\"12\" text-anchor=\"middle\">"
     << gen::preset_knob_name(r.spec.example) << "</text>\n";
  os << "<text x=\"14\" y=\"" << (T + H - B) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 "
     << (T + H - B) / 2 << ")\" text-anchor=\"middle\">mean Err</text>\n";
  for (std::size_t m = 0; m < r.methods.size(); ++m) {
    std::ostringstream pts;
    for (const auto& c : cells) {
      if (c.method != r.methods[m] || c.n_ok == 0) continue;
      pts << X(c.knob) << ',' << Y(c.mean) << ' ';
      os << "<line x1=\"" << X(c.knob) << "\" y1=\"" << Y(c.mean - c.sd) << "\" x2=\"" << X(c.knob) << "\" y2=\""
         << Y(c.mean + c.sd) << "\" stroke=\"" << colors[m % 2] << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << colors[m % 2] << "\" stroke-width=\"2\" points=\"" << pts.str()
       << "\"/>\n";
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 + 14 * m << "\" font-size=\"11\" text-anchor=\"end\" fill=\""
       << colors[m % 2] << "\">" << method_name(r.methods[m]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace mlp::bench
