#include "lpgnet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "lpgnet/rng.hpp"

namespace lpgnet {
namespace {

[[noreturn]] void fail(const std::filesystem::path& path, size_t line, const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

bool blank_or_comment(const std::string& line) {
  for (char ch : line) {
    if (ch == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

std::vector<std::pair<int, int>> read_edge_pairs(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<std::pair<int, int>> pairs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_or_comment(line)) continue;
    std::istringstream ss(line);
    long long u = -1, v = -1;
    std::string extra;
    if (!(ss >> u >> v)) fail(path, lineno, "expected two node ids");
    if (ss >> extra) fail(path, lineno, "trailing content after edge pair");
    if (u < 0 || v < 0) fail(path, lineno, "negative node id");
    if (u == v) fail(path, lineno, "self-loop on node " + std::to_string(u));
    pairs.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  return pairs;
}

DenseMatrix read_feature_matrix(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<double> values;
  std::string line;
  size_t lineno = 0;
  int cols = -1, rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_or_comment(line)) continue;
    std::istringstream ss(line);
    int count = 0;
    double x;
    while (ss >> x) {
      values.push_back(x);
      ++count;
    }
    if (!ss.eof()) fail(path, lineno, "malformed decimal");
    if (count == 0) fail(path, lineno, "empty feature row");
    if (cols == -1) cols = count;
    if (count != cols)
      fail(path, lineno, "row has " + std::to_string(count) + " values, expected " + std::to_string(cols));
    ++rows;
  }
  if (rows == 0) throw std::runtime_error(path.string() + ": no feature rows");
  return DenseMatrix(rows, cols, std::move(values));
}

std::vector<int> read_label_vector(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<int> labels;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_or_comment(line)) continue;
    std::istringstream ss(line);
    long long y;
    std::string extra;
    if (!(ss >> y)) fail(path, lineno, "expected integer label");
    if (ss >> extra) fail(path, lineno, "trailing content after label");
    if (y < 0) fail(path, lineno, "negative label");
    labels.push_back(static_cast<int>(y));
  }
  return labels;
}

std::vector<int> parse_id_list(const std::string& text, const std::filesystem::path& path, size_t lineno) {
  std::vector<int> ids;
  std::istringstream ss(text);
  long long id;
  while (ss >> id) {
    if (id < 0) fail(path, lineno, "negative node id in split");
    ids.push_back(static_cast<int>(id));
  }
  if (!ss.eof()) fail(path, lineno, "malformed id in split");
  return ids;
}

Split read_split(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto first = text.find_first_not_of(" \t\r\n");
  Split split;
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j = nlohmann::json::parse(text);
    for (const auto& [key, target] :
         {std::pair{"train", &split.train}, {"val", &split.validation}, {"test", &split.test}}) {
      if (!j.contains(key)) throw std::runtime_error(path.string() + ": split JSON misses \"" + key + "\"");
      *target = j.at(key).get<std::vector<int>>();
    }
    return split;
  }
  std::istringstream lines(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (blank_or_comment(line)) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) fail(path, lineno, "expected \"train:\"/\"val:\"/\"test:\" prefix");
    const std::string key = line.substr(0, colon);
    const auto ids = parse_id_list(line.substr(colon + 1), path, lineno);
    if (key == "train") split.train = ids;
    else if (key == "val") split.validation = ids;
    else if (key == "test") split.test = ids;
    else fail(path, lineno, "unknown split section \"" + key + "\"");
  }
  return split;
}

void check_ids_in_range(const std::vector<int>& ids, int n, const char* what) {
  for (int id : ids)
    if (id < 0 || id >= n)
      throw std::runtime_error(std::string(what) + ": node id " + std::to_string(id) + " out of range");
}

void format_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

Split make_split(int n, RngStream& rng) {
  // Half the nodes train, half test; 30% of the training half becomes the
  // validation set.
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.next_below(static_cast<uint64_t>(i) + 1));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  const int train_pool = n / 2;
  const int val_count = static_cast<int>(std::floor(0.3 * train_pool));
  Split split;
  split.validation.assign(order.begin(), order.begin() + val_count);
  split.train.assign(order.begin() + val_count, order.begin() + train_pool);
  split.test.assign(order.begin() + train_pool, order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace

void Dataset::validate() const {
  const int n = graph.num_nodes();
  if (features.rows() != n) throw std::runtime_error("dataset: feature rows != num nodes");
  if (static_cast<int>(labels.size()) != n) throw std::runtime_error("dataset: labels length != num nodes");
  if (num_classes <= 0) throw std::runtime_error("dataset: num_classes must be positive");
  for (int y : labels)
    if (y < 0 || y >= num_classes)
      throw std::runtime_error("dataset: label " + std::to_string(y) + " out of range [0," +
                               std::to_string(num_classes) + ")");
  check_ids_in_range(split.train, n, "split train");
  check_ids_in_range(split.validation, n, "split val");
  check_ids_in_range(split.test, n, "split test");
  std::vector<int8_t> seen(static_cast<size_t>(n), 0);
  for (const auto* part : {&split.train, &split.validation, &split.test})
    for (int id : *part) {
      if (seen[static_cast<size_t>(id)])
        throw std::runtime_error("dataset: split sets overlap at node " + std::to_string(id));
      seen[static_cast<size_t>(id)] = 1;
    }
}

Dataset load_dataset(const std::filesystem::path& graph_path,
                     const std::filesystem::path& features_path,
                     const std::filesystem::path& labels_path,
                     const std::filesystem::path& split_path) {
  Dataset d;
  d.features = read_feature_matrix(features_path);
  const int n = d.features.rows();
  d.labels = read_label_vector(labels_path);
  if (static_cast<int>(d.labels.size()) != n)
    throw std::runtime_error(labels_path.string() + ": " + std::to_string(d.labels.size()) +
                             " labels for " + std::to_string(n) + " feature rows");
  d.num_classes = d.labels.empty() ? 0 : *std::max_element(d.labels.begin(), d.labels.end()) + 1;
  try {
    d.graph = Graph::from_edges(n, read_edge_pairs(graph_path));
  } catch (const std::invalid_argument& ex) {
    throw std::runtime_error(graph_path.string() + ": " + ex.what());
  }
  d.split = read_split(split_path);
  d.validate();
  return d;
}

void save_graph(const Graph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [u, v] : graph.edge_list()) out << u << ' ' << v << '\n';
}

Graph load_graph(const std::filesystem::path& path, int num_nodes) {
  return Graph::from_edges(num_nodes, read_edge_pairs(path));
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_graph(dataset.graph, dir / "graph.txt");

  std::string buf;
  for (int i = 0; i < dataset.features.rows(); ++i) {
    const auto r = dataset.features.row(i);
    for (int j = 0; j < dataset.features.cols(); ++j) {
      if (j) buf += ' ';
      format_double(buf, r[static_cast<size_t>(j)]);
    }
    buf += '\n';
  }
  std::ofstream(dir / "features.txt") << buf;

  std::string lbl;
  for (int y : dataset.labels) {
    lbl += std::to_string(y);
    lbl += '\n';
  }
  std::ofstream(dir / "labels.txt") << lbl;

  std::ostringstream sp;
  const auto write_ids = [&sp](const char* key, const std::vector<int>& ids) {
    sp << key << ':';
    for (int id : ids) sp << ' ' << id;
    sp << '\n';
  };
  write_ids("train", dataset.split.train);
  write_ids("val", dataset.split.validation);
  write_ids("test", dataset.split.test);
  std::ofstream(dir / "split.txt") << sp.str();
}

Dataset generate_bipartite(const BipartiteParams& params, uint64_t seed) {
  if (params.n1 <= 0 || params.n2 <= 0)
    throw std::invalid_argument("generate_bipartite: cluster sizes must be positive");
  for (double p : {params.p_edge, params.flip1, params.flip2})
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("generate_bipartite: probability outside [0,1]");

  const int n = params.n1 + params.n2;
  Dataset d;
  d.num_classes = 2;
  d.labels.assign(static_cast<size_t>(n), 0);
  for (int v = params.n1; v < n; ++v) d.labels[static_cast<size_t>(v)] = 1;

  d.features = DenseMatrix(n, 2);
  for (int v = 0; v < n; ++v) {
    const double sign = v < params.n1 ? 1.0 : -1.0;
    d.features.at(v, 0) = sign;
    d.features.at(v, 1) = -sign;
  }

  // Swap the feature pair of exactly floor(flip*n) nodes per cluster,
  // chosen by partial Fisher-Yates on the cluster's node list.
  const auto flip_cluster = [&d](int begin, int count, double frac, RngStream& rng) {
    std::vector<int> ids(static_cast<size_t>(count));
    std::iota(ids.begin(), ids.end(), begin);
    const int k = static_cast<int>(std::floor(frac * count));
    for (int i = 0; i < k; ++i) {
      const auto j = i + static_cast<int>(rng.next_below(static_cast<uint64_t>(count - i)));
      std::swap(ids[static_cast<size_t>(i)], ids[static_cast<size_t>(j)]);
      const int v = ids[static_cast<size_t>(i)];
      std::swap(d.features.at(v, 0), d.features.at(v, 1));
    }
  };
  RngStream flip_rng(derive_seed(seed, {stream::kGenerator, 1}));
  flip_cluster(0, params.n1, params.flip1, flip_rng);
  flip_cluster(params.n1, params.n2, params.flip2, flip_rng);

  RngStream edge_rng(derive_seed(seed, {stream::kGenerator, 2}));
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < params.n1; ++u)
    for (int v = params.n1; v < n; ++v)
      if (edge_rng.next_unit() < params.p_edge) edges.emplace_back(u, v);
  d.graph = Graph::from_edges(n, std::move(edges));

  RngStream split_rng(derive_seed(seed, {stream::kGenerator, 3}));
  d.split = make_split(n, split_rng);
  d.validate();
  return d;
}

Dataset generate_erdos_renyi(int num_nodes, int64_t num_edges, int num_classes, uint64_t seed) {
  if (num_nodes < 2) throw std::invalid_argument("generate_erdos_renyi: need at least 2 nodes");
  if (num_classes < 2) throw std::invalid_argument("generate_erdos_renyi: need at least 2 classes");
  const int64_t max_edges = static_cast<int64_t>(num_nodes) * (num_nodes - 1) / 2;
  if (num_edges < 0 || num_edges > max_edges)
    throw std::invalid_argument("generate_erdos_renyi: edge count outside [0, N(N-1)/2]");

  RngStream edge_rng(derive_seed(seed, {stream::kGenerator, 2}));
  std::unordered_set<int64_t> chosen;
  chosen.reserve(static_cast<size_t>(num_edges) * 2);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<size_t>(num_edges));
  while (static_cast<int64_t>(edges.size()) < num_edges) {
    auto u = static_cast<int>(edge_rng.next_below(static_cast<uint64_t>(num_nodes)));
    auto v = static_cast<int>(edge_rng.next_below(static_cast<uint64_t>(num_nodes)));
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    const int64_t key = static_cast<int64_t>(u) * num_nodes + v;
    if (chosen.insert(key).second) edges.emplace_back(u, v);
  }

  Dataset d;
  d.num_classes = num_classes;
  d.graph = Graph::from_edges(num_nodes, std::move(edges));

  RngStream label_rng(derive_seed(seed, {stream::kGenerator, 1}));
  d.labels.resize(static_cast<size_t>(num_nodes));
  d.features = DenseMatrix(num_nodes, num_classes);
  for (int v = 0; v < num_nodes; ++v) {
    const auto y = static_cast<int>(label_rng.next_below(static_cast<uint64_t>(num_classes)));
    d.labels[static_cast<size_t>(v)] = y;
    for (int c = 0; c < num_classes; ++c) d.features.at(v, c) = c == y ? 1.0 : -1.0;
  }

  RngStream split_rng(derive_seed(seed, {stream::kGenerator, 3}));
  d.split = make_split(num_nodes, split_rng);
  d.validate();
  return d;
}

}  // namespace lpgnet
