#pragma once

// Network file formats.
//
// Text format (".txt"): a header line "N M", then for each layer b = 1..M a
// line "layer b" followed by one "i j" line per edge (1-based, i < j, sorted).
// Binary format (".mlpn"): see docs/formats.md.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mlp/model.hpp"

namespace mlp::io {

void write_network_text(std::ostream& os, const MultilayerNetwork& net);
MultilayerNetwork read_network_text(std::istream& is);

void write_network_binary(std::ostream& os, const MultilayerNetwork& net);
MultilayerNetwork read_network_binary(std::istream& is);

/// Picks the format from the extension (".mlpn" is binary, anything else text).
void save_network(const std::filesystem::path& path, const MultilayerNetwork& net);
MultilayerNetwork load_network(const std::filesystem::path& path);

/// Layout hints for edge-list ingestion.
struct LayerSpec {
  int n_nodes = 0;                      // 0: infer from the largest node id
  std::vector<std::string> layer_labels;  // empty: order of first appearance
};

struct IngestResult {
  MultilayerNetwork network;
  std::vector<std::string> layer_labels;
  std::vector<std::string> warnings;
};

/// Reads "<layer> <i> <j>" lines (1-based node ids, '#' comments). Edges
/// given as (j, i) are normalized; duplicates are dropped with a warning.
/// Malformed lines, self loops and out-of-range ids raise DataError with the
/// line number.
IngestResult ingest_edge_list(std::istream& is, const LayerSpec& spec);
IngestResult ingest_edge_list(const std::filesystem::path& path, const LayerSpec& spec);

}  // namespace mlp::io
