#include "funcpool/data.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "funcpool/rng.hpp"

namespace funcpool {
namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("missing or unreadable dataset file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  // trailing blank lines are tolerated
  while (!lines.empty() && lines.back().find_first_not_of(" \t\r") == std::string::npos)
    lines.pop_back();
  return lines;
}

int parse_int(const std::string& token, const std::filesystem::path& path, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(token, &pos);
    if (token.find_first_not_of(" \t\r", pos) != std::string::npos) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected integer, got '" +
                      token + "'");
  }
}

std::vector<int> read_int_file(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  std::vector<int> values;
  values.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) values.push_back(parse_int(lines[i], path, i + 1));
  return values;
}

// raw values -> contiguous 0-based indices, ordered by raw value
std::map<int, int> contiguous_map(const std::vector<int>& raw) {
  std::set<int> distinct(raw.begin(), raw.end());
  std::map<int, int> m;
  int next = 0;
  for (int v : distinct) m[v] = next++;
  return m;
}

}  // namespace

Dataset parse_tu_dataset(const std::filesystem::path& directory, const std::string& name) {
  auto file = [&](const std::string& suffix) { return directory / (name + suffix); };

  auto indicator = read_int_file(file("_graph_indicator.txt"));
  auto raw_graph_labels = read_int_file(file("_graph_labels.txt"));
  auto raw_node_labels = read_int_file(file("_node_labels.txt"));

  const std::size_t num_vertices = indicator.size();
  if (raw_node_labels.size() != num_vertices)
    throw FormatError(file("_node_labels.txt").string() + ": has " +
                      std::to_string(raw_node_labels.size()) + " lines but indicator file has " +
                      std::to_string(num_vertices));

  const std::size_t num_graphs = raw_graph_labels.size();
  std::vector<std::size_t> graph_of(num_vertices);   // 0-based graph id per global vertex
  std::vector<std::size_t> local_of(num_vertices);   // local vertex index within its graph
  std::vector<std::size_t> graph_size(num_graphs, 0);
  for (std::size_t v = 0; v < num_vertices; ++v) {
    int g = indicator[v];
    if (g < 1 || static_cast<std::size_t>(g) > num_graphs)
      throw FormatError(file("_graph_indicator.txt").string() + ":" + std::to_string(v + 1) +
                        ": graph id " + std::to_string(g) + " out of range [1, " +
                        std::to_string(num_graphs) + "]");
    graph_of[v] = static_cast<std::size_t>(g - 1);
    local_of[v] = graph_size[graph_of[v]]++;
  }

  auto node_label_map = contiguous_map(raw_node_labels);
  auto class_label_map = contiguous_map(raw_graph_labels);

  Dataset ds;
  ds.name = name;
  ds.num_vertex_labels = static_cast<int>(node_label_map.size());
  ds.num_classes = static_cast<int>(class_label_map.size());
  ds.raw_vertex_labels.resize(node_label_map.size());
  for (auto [raw, idx] : node_label_map) ds.raw_vertex_labels[idx] = raw;
  ds.raw_class_labels.resize(class_label_map.size());
  for (auto [raw, idx] : class_label_map) ds.raw_class_labels[idx] = raw;

  ds.graphs.resize(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) {
    ds.graphs[g].num_vertices = graph_size[g];
    ds.graphs[g].class_label = class_label_map[raw_graph_labels[g]];
    ds.graphs[g].vertex_labels.resize(graph_size[g]);
  }
  for (std::size_t v = 0; v < num_vertices; ++v)
    ds.graphs[graph_of[v]].vertex_labels[local_of[v]] = node_label_map[raw_node_labels[v]];

  // edge file: "i, j" per line, 1-based global vertex ids, arcs usually listed twice
  auto edge_path = file("_A.txt");
  auto edge_lines = read_lines(edge_path);
  std::vector<std::set<std::pair<int, int>>> edge_sets(num_graphs);
  for (std::size_t ln = 0; ln < edge_lines.size(); ++ln) {
    std::string line = edge_lines[ln];
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream iss(line);
    std::string ta, tb;
    if (!(iss >> ta >> tb))
      throw FormatError(edge_path.string() + ":" + std::to_string(ln + 1) +
                        ": expected 'i, j', got '" + edge_lines[ln] + "'");
    long a = parse_int(ta, edge_path, ln + 1);
    long b = parse_int(tb, edge_path, ln + 1);
    if (a < 1 || static_cast<std::size_t>(a) > num_vertices || b < 1 ||
        static_cast<std::size_t>(b) > num_vertices)
      throw FormatError(edge_path.string() + ":" + std::to_string(ln + 1) +
                        ": vertex index out of range [1, " + std::to_string(num_vertices) + "]");
    std::size_t va = static_cast<std::size_t>(a - 1), vb = static_cast<std::size_t>(b - 1);
    if (graph_of[va] != graph_of[vb])
      throw FormatError(edge_path.string() + ":" + std::to_string(ln + 1) +
                        ": edge spans two graphs");
    int u = static_cast<int>(local_of[va]), w = static_cast<int>(local_of[vb]);
    edge_sets[graph_of[va]].insert({std::min(u, w), std::max(u, w)});
  }
  for (std::size_t g = 0; g < num_graphs; ++g)
    ds.graphs[g].edges.assign(edge_sets[g].begin(), edge_sets[g].end());

  return ds;
}

void write_tu_dataset(const Dataset& ds, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  auto open = [&](const std::string& suffix) {
    auto path = directory / (ds.name + suffix);
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write dataset file: " + path.string());
    return out;
  };

  std::vector<std::size_t> graph_offset(ds.graphs.size() + 1, 0);
  for (std::size_t g = 0; g < ds.graphs.size(); ++g)
    graph_offset[g + 1] = graph_offset[g] + ds.graphs[g].num_vertices;

  auto a_out = open("_A.txt");
  for (std::size_t g = 0; g < ds.graphs.size(); ++g)
    for (auto [u, v] : ds.graphs[g].edges) {
      std::size_t gu = graph_offset[g] + u + 1, gv = graph_offset[g] + v + 1;
      a_out << gu << ", " << gv << "\n";
      if (gu != gv) a_out << gv << ", " << gu << "\n";
    }

  auto ind_out = open("_graph_indicator.txt");
  for (std::size_t g = 0; g < ds.graphs.size(); ++g)
    for (std::size_t v = 0; v < ds.graphs[g].num_vertices; ++v) ind_out << g + 1 << "\n";

  auto gl_out = open("_graph_labels.txt");
  for (const auto& graph : ds.graphs) gl_out << ds.raw_class_labels[graph.class_label] << "\n";

  auto nl_out = open("_node_labels.txt");
  for (const auto& graph : ds.graphs)
    for (int l : graph.vertex_labels) nl_out << ds.raw_vertex_labels[l] << "\n";
}

Matrix one_hot_features(const LabeledGraph& g, int num_labels) {
  Matrix out(g.num_vertices, static_cast<std::size_t>(num_labels));
  for (std::size_t v = 0; v < g.num_vertices; ++v) {
    int l = g.vertex_labels[v];
    if (l < 0 || l >= num_labels)
      throw FormatError("vertex label " + std::to_string(l) + " out of range [0, " +
                        std::to_string(num_labels) + ")");
    out(v, static_cast<std::size_t>(l)) = 1.0;
  }
  return out;
}

Matrix adjacency(const LabeledGraph& g) {
  Matrix a(g.num_vertices, g.num_vertices);
  for (auto [u, v] : g.edges) {
    a(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) = 1.0;
    a(static_cast<std::size_t>(v), static_cast<std::size_t>(u)) = 1.0;
  }
  return a;
}

std::vector<FoldSplit> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold_split: k must be >= 2");
  if (k > n)
    throw std::invalid_argument("kfold_split: k = " + std::to_string(k) + " exceeds n = " +
                                std::to_string(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  shuffle_in_place(order, rng);

  std::vector<FoldSplit> folds(k);
  for (std::size_t i = 0; i < n; ++i) folds[i % k].test_indices.push_back(order[i]);
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(folds[f].test_indices.begin(), folds[f].test_indices.end());
    for (std::size_t g = 0; g < k; ++g)
      if (g != f)
        folds[f].train_indices.insert(folds[f].train_indices.end(), folds[g].test_indices.begin(),
                                      folds[g].test_indices.end());
    std::sort(folds[f].train_indices.begin(), folds[f].train_indices.end());
  }
  return folds;
}

std::vector<FoldSplit> stratified_kfold_split(const std::vector<int>& labels, std::size_t k,
                                              std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (k < 2) throw std::invalid_argument("stratified_kfold_split: k must be >= 2");
  if (k > n) throw std::invalid_argument("stratified_kfold_split: k exceeds n");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<FoldSplit> folds(k);
  std::size_t deal = 0;  // continues across classes so fold sizes stay balanced
  for (auto& [cls, members] : by_class) {
    shuffle_in_place(members, rng);
    for (std::size_t idx : members) folds[deal++ % k].test_indices.push_back(idx);
  }
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(folds[f].test_indices.begin(), folds[f].test_indices.end());
    for (std::size_t g = 0; g < k; ++g)
      if (g != f)
        folds[f].train_indices.insert(folds[f].train_indices.end(), folds[g].test_indices.begin(),
                                      folds[g].test_indices.end());
    std::sort(folds[f].train_indices.begin(), folds[f].train_indices.end());
  }
  return folds;
}

}  // namespace funcpool
