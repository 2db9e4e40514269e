#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "funcpool/matrix.hpp"

namespace funcpool {

/// A required dataset file is missing or unreadable.
struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File content violates the TU-Dortmund format; message carries the line number.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LabeledGraph {
  std::size_t num_vertices = 0;
  std::vector<std::pair<int, int>> edges;  // undirected, 0-based, deduplicated
  std::vector<int> vertex_labels;          // contiguous indices in [0, num_vertex_labels)
  int class_label = 0;                     // contiguous index in [0, num_classes)

  bool operator==(const LabeledGraph&) const = default;
};

struct Dataset {
  std::vector<LabeledGraph> graphs;
  int num_vertex_labels = 0;
  int num_classes = 0;
  std::string name;
  // raw file values by contiguous index, so the original encoding round-trips
  std::vector<int> raw_vertex_labels;
  std::vector<int> raw_class_labels;

  bool operator==(const Dataset&) const = default;
};

/// Reads NAME_A.txt, NAME_graph_indicator.txt, NAME_graph_labels.txt and
/// NAME_node_labels.txt from `directory`. 1-based file indices become 0-based,
/// duplicate arcs collapse to one undirected edge, and raw label values are
/// remapped to contiguous 0-based indices (mapping kept on the Dataset).
Dataset parse_tu_dataset(const std::filesystem::path& directory, const std::string& name);

/// Inverse of parse_tu_dataset, emitting raw label values.
void write_tu_dataset(const Dataset& ds, const std::filesystem::path& directory);

/// |V| x num_labels one-hot matrix, row i marking vertex_labels[i].
Matrix one_hot_features(const LabeledGraph& g, int num_labels);

/// Symmetric 0/1 adjacency, no self-loops.
Matrix adjacency(const LabeledGraph& g);

struct FoldSplit {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Seeded shuffle of [0, n) dealt into k near-equal disjoint test folds.
std::vector<FoldSplit> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

/// Same, but shuffling within each class so folds get near-equal class mixes.
std::vector<FoldSplit> stratified_kfold_split(const std::vector<int>& labels, std::size_t k,
                                              std::uint64_t seed);

}  // namespace funcpool
