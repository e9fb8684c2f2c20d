#include "mlp/network_io.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "mlp/error.hpp"

namespace mlp::io {
namespace {

constexpr std::array<char, 4> kMagic = {'M', 'L', 'P', 'N'};
constexpr std::uint32_t kBinaryVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw DataError("truncated binary network");
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

// Strips comments and surrounding whitespace; returns false for blank lines.
bool clean_line(std::string& line) {
  if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
  const auto first = line.find_first_not_of(" \t\r");
  if (first == std::string::npos) return false;
  const auto last = line.find_last_not_of(" \t\r");
  line = line.substr(first, last - first + 1);
  return true;
}

std::string at_line(std::size_t n) { return "line " + std::to_string(n) + ": "; }

}  // namespace

void write_network_text(std::ostream& os, const MultilayerNetwork& net) {
  const int n = net.n_nodes();
  os << n << ' ' << net.n_layers() << '\n';
  for (int b = 0; b < net.n_layers(); ++b) {
    os << "layer " << b + 1 << '\n';
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (net.edge(b, i, j)) os << i + 1 << ' ' << j + 1 << '\n';
  }
}

MultilayerNetwork read_network_text(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  int n = -1;
  int m = -1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!clean_line(line)) continue;
    std::istringstream ss(line);
    std::string extra;
    if (!(ss >> n >> m) || (ss >> extra) || n < 0 || m < 0) {
      throw DataError(at_line(line_no) + "expected header \"N M\"");
    }
    break;
  }
  if (n < 0) throw DataError("empty network file");

  MultilayerNetwork net(n, m);
  int layer = -1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!clean_line(line)) continue;
    std::istringstream ss(line);
    std::string first;
    ss >> first;
    if (first == "layer") {
      int b = 0;
      std::string extra;
      if (!(ss >> b) || (ss >> extra)) throw DataError(at_line(line_no) + "malformed layer line");
      if (b != layer + 2) {
        throw DataError(at_line(line_no) + "layers must appear in order 1.." + std::to_string(m));
      }
      layer = b - 1;
      if (layer >= m) throw DataError(at_line(line_no) + "more layers than declared");
      continue;
    }
    if (layer < 0) throw DataError(at_line(line_no) + "edge before first layer line");
    int i = 0;
    int j = 0;
    std::string extra;
    std::istringstream es(line);
    if (!(es >> i >> j) || (es >> extra)) throw DataError(at_line(line_no) + "expected \"i j\"");
    if (i < 1 || j < 1 || i > n || j > n) {
      throw DataError(at_line(line_no) + "node index out of range");
    }
    if (i == j) throw DataError(at_line(line_no) + "self loop");
    net.set_edge(layer, i - 1, j - 1);
  }
  if (layer != m - 1) throw DataError("network file declares " + std::to_string(m) +
                                      " layers but contains " + std::to_string(layer + 1));
  return net;
}

void write_network_binary(std::ostream& os, const MultilayerNetwork& net) {
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, kBinaryVersion);
  put_u32(os, static_cast<std::uint32_t>(net.n_nodes()));
  put_u32(os, static_cast<std::uint32_t>(net.n_layers()));
  const std::size_t n = net.n_nodes();
  const std::size_t n_pairs = n * (n - (n > 0 ? 1 : 0)) / 2;
  std::vector<unsigned char> buf((n_pairs + 7) / 8);
  for (int b = 0; b < net.n_layers(); ++b) {
    std::fill(buf.begin(), buf.end(), 0);
    std::size_t t = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j, ++t)
        if (net.edge(b, static_cast<int>(i), static_cast<int>(j))) buf[t / 8] |= 1u << (t % 8);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
}

MultilayerNetwork read_network_binary(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("not a binary network file (bad magic)");
  }
  const std::uint32_t version = get_u32(is);
  if (version != kBinaryVersion) throw DataError("unsupported binary network version");
  const std::uint32_t n = get_u32(is);
  const std::uint32_t m = get_u32(is);
  MultilayerNetwork net(static_cast<int>(n), static_cast<int>(m));
  const std::size_t n_pairs = static_cast<std::size_t>(n) * (n > 0 ? n - 1 : 0) / 2;
  std::vector<unsigned char> buf((n_pairs + 7) / 8);
  for (std::uint32_t b = 0; b < m; ++b) {
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw DataError("truncated binary network");
    }
    std::size_t t = 0;
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j, ++t)
        if ((buf[t / 8] >> (t % 8)) & 1u) net.set_edge(static_cast<int>(b), i, j);
    if (n_pairs % 8 != 0 && (buf.back() >> (n_pairs % 8)) != 0) {
      throw DataError("nonzero padding bits in binary network");
    }
  }
  return net;
}

void save_network(const std::filesystem::path& path, const MultilayerNetwork& net) {
  const bool binary = path.extension() == ".mlpn";
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  if (binary) {
    write_network_binary(os, net);
  } else {
    write_network_text(os, net);
  }
  if (!os) throw DataError("write failed: " + path.string());
}

MultilayerNetwork load_network(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  char head[4] = {};
  is.read(head, 4);
  is.clear();
  is.seekg(0);
  if (std::memcmp(head, kMagic.data(), 4) == 0) return read_network_binary(is);
  try {
    return read_network_text(is);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

IngestResult ingest_edge_list(std::istream& is, const LayerSpec& spec) {
  struct RawEdge {
    int layer;
    int i;
    int j;
    std::size_t line;
  };
  std::vector<RawEdge> edges;
  std::vector<std::string> labels = spec.layer_labels;
  std::map<std::string, int> label_index;
  for (std::size_t t = 0; t < labels.size(); ++t) label_index.emplace(labels[t], static_cast<int>(t));
  const bool fixed_labels = !labels.empty();

  std::string line;
  std::size_t line_no = 0;
  int max_node = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!clean_line(line)) continue;
    std::istringstream ss(line);
    std::string label;
    long long i = 0;
    long long j = 0;
    std::string extra;
    if (!(ss >> label >> i >> j) || (ss >> extra)) {
      throw DataError(at_line(line_no) + "expected \"<layer> <i> <j>\"");
    }
    if (i < 1 || j < 1) throw DataError(at_line(line_no) + "node ids are 1-based");
    if (spec.n_nodes > 0 && (i > spec.n_nodes || j > spec.n_nodes)) {
      throw DataError(at_line(line_no) + "node index out of range (N = " +
                      std::to_string(spec.n_nodes) + ")");
    }
    if (i > (1LL << 30) || j > (1LL << 30)) throw DataError(at_line(line_no) + "node id too large");
    if (i == j) throw DataError(at_line(line_no) + "self loop");
    auto it = label_index.find(label);
    if (it == label_index.end()) {
      if (fixed_labels) throw DataError(at_line(line_no) + "unknown layer label \"" + label + "\"");
      it = label_index.emplace(label, static_cast<int>(labels.size())).first;
      labels.push_back(label);
    }
    const int a = static_cast<int>(std::min(i, j)) - 1;
    const int c = static_cast<int>(std::max(i, j)) - 1;
    max_node = std::max(max_node, c + 1);
    edges.push_back({it->second, a, c, line_no});
  }

  IngestResult out;
  const int n = spec.n_nodes > 0 ? spec.n_nodes : max_node;
  out.network = MultilayerNetwork(n, static_cast<int>(labels.size()));
  for (const auto& e : edges) {
    if (out.network.edge(e.layer, e.i, e.j)) {
      out.warnings.push_back(at_line(e.line) + "duplicate edge (" + std::to_string(e.i + 1) + "," +
                             std::to_string(e.j + 1) + ") in layer \"" + labels[e.layer] +
                             "\" ignored");
      continue;
    }
    out.network.set_edge(e.layer, e.i, e.j);
  }
  out.layer_labels = std::move(labels);
  return out;
}

IngestResult ingest_edge_list(const std::filesystem::path& path, const LayerSpec& spec) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  return ingest_edge_list(is, spec);
}

}  // namespace mlp::io
