#pragma once

// Simulation harness: replicates over an example's knob grid, per-replicate
// records, and the summary table.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mlp/fit.hpp"
#include "mlp/metrics.hpp"
#include "mlp/netgen.hpp"
#include "mlp/support.hpp"

namespace mlp::bench {

enum class Method { kKnownSupport, kUnknownSupport };
const char* method_name(Method m);
Method method_from_name(const std::string& s);

struct BenchSpec {
  int example = 2;
  std::vector<double> knobs;  // empty: the example's full grid
  int replicates = 10;
  std::uint64_t seed = 1;
  std::vector<Method> methods;  // empty: known support (plus unknown for example 9)
  FitConfig fit;
  SupportConfig support;
  double c_l = 0.1;
  double c_u = 10.0;
  double D = 0.9;
  int workers = 1;
};

struct ReplicateRecord {
  int cell = 0;
  double knob = 0.0;
  int replicate = 0;
  Method method = Method::kKnownSupport;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EvalReport report;
  double loglik = 0.0;
  double seconds_generate = 0.0;
  double seconds_fit = 0.0;
  double lambda = 0.0;
};

/// Generator seed of replicate r (shared across knob values).
std::uint64_t replicate_seed(std::uint64_t base, int r);

/// One replicate: generate, fit with each method, evaluate against truth.
std::vector<ReplicateRecord> run_replicate(const gen::GenConfig& config, const std::vector<Method>& methods,
                                           const BenchSpec& spec);

/// Known-support fit: the truth's supports with the spectral start relabeled
/// to the true labels so that block supports line up.
FitResult fit_known_support(const MultilayerNetwork& net, const gen::GroundTruth& truth, int K,
                            const FitConfig& fit, double c_l, double c_u, double D);

struct BenchResult {
  BenchSpec spec;
  std::vector<double> knobs;
  std::vector<Method> methods;
  std::vector<ReplicateRecord> records;  // ordered by (cell, replicate, method)
};

/// Runs the grid. Workers are capped by spec.workers and by the MLP_WORKERS
/// environment variable; ordering of records never depends on scheduling.
BenchResult run_bench(const BenchSpec& spec,
                      const std::function<void(const ReplicateRecord&)>& on_record = {});

/// Mean and sample sd of err_pair per (knob, method) over successful replicates.
struct CellSummary {
  double knob = 0.0;
  Method method = Method::kKnownSupport;
  int n_ok = 0;
  int n_failed = 0;
  double mean = 0.0;
  double sd = 0.0;
};
std::vector<CellSummary> summarize(const BenchResult& r);

/// Table with one row per knob value and "mean (sd)" cells per method.
std::string to_csv(const BenchResult& r);

/// Static SVG line plot of mean Err against the knob.
std::string to_svg(const BenchResult& r);

int worker_cap(int requested);

}  // namespace mlp::bench
