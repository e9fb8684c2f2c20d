#pragma once

// JSON encodings of configurations, ground truth, fit results and
// evaluation reports. Memberships are stored 0-based.

#include <filesystem>
#include <json.hpp>

#include "mlp/fit.hpp"
#include "mlp/metrics.hpp"
#include "mlp/netgen.hpp"
#include "mlp/support.hpp"

namespace mlp::io {

using nlohmann::json;

inline constexpr const char* kVersion = "0.3.0";

json to_json(const Membership& e);
Membership membership_from_json(const json& j);

json to_json(const BlockParams& theta);
BlockParams theta_from_json(const json& j);

json to_json(const std::vector<SupportSet>& supports, int K);
std::vector<SupportSet> supports_from_json(const json& j, int K, int M);

/// R is summarized (dim, tau, range, zeta, lambda_min, nnz, seed); entries
/// are included when dim <= max_entries_dim.
json to_json(const gen::GroundTruth& truth, int max_entries_dim = 200);
gen::GroundTruth truth_from_json(const json& j);

void save_truth(const std::filesystem::path& path, const gen::GroundTruth& truth);
gen::GroundTruth load_truth(const std::filesystem::path& path);

json to_json(const gen::GenConfig& c);
/// Unknown keys raise ConfigError.
gen::GenConfig genconfig_from_json(const json& j);

json to_json(const FitConfig& c);
/// Applies the keys present in j on top of base; unknown keys raise ConfigError.
FitConfig fitconfig_from_json(const json& j, FitConfig base = {});

json to_json(const SupportConfig& c);
SupportConfig supportconfig_from_json(const json& j, SupportConfig base = {});

json to_json(const FitResult& r, bool include_theta = true);
json to_json(const EvalReport& r);

/// Reads a whole JSON file; parse errors raise ConfigError with the path.
json read_json_file(const std::filesystem::path& path);

}  // namespace mlp::io
