#include "graft/dataset.hpp"

#include "graft/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace graft {

namespace fs = std::filesystem;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "test";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  throw DatasetError("unknown split tag '" + std::string(text) + "'");
}

AdjacencyCsr AdjacencyCsr::from_undirected(Index node_count, std::span<const std::pair<Index, Index>> edges) {
  AdjacencyCsr csr;
  std::vector<Index> degree(static_cast<std::size_t>(node_count), 0);
  for (const auto& [u, v] : edges) {
    ++degree[u];
    ++degree[v];
  }
  csr.offsets_.assign(static_cast<std::size_t>(node_count) + 1, 0);
  for (Index v = 0; v < node_count; ++v) {
    csr.offsets_[v + 1] = csr.offsets_[v] + degree[v];
  }
  csr.neighbors_.resize(static_cast<std::size_t>(csr.offsets_.back()));
  std::vector<Index> cursor(csr.offsets_.begin(), csr.offsets_.end() - 1);
  for (const auto& [u, v] : edges) {
    csr.neighbors_[cursor[u]++] = v;
    csr.neighbors_[cursor[v]++] = u;
  }
  for (Index v = 0; v < node_count; ++v) {
    std::sort(csr.neighbors_.begin() + csr.offsets_[v], csr.neighbors_.begin() + csr.offsets_[v + 1]);
  }
  return csr;
}

std::vector<std::pair<Index, Index>> AdjacencyCsr::undirected_edges() const {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(undirected_edge_count());
  for (Index u = 0; u < node_count(); ++u) {
    for (Index v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

std::vector<Index> Dataset::nodes_in(Split which) const {
  std::vector<Index> out;
  for (Index v = 0; v < node_count(); ++v) {
    if (split[v] == which) out.push_back(v);
  }
  return out;
}

std::vector<Index> Dataset::class_nodes(int class_id) const {
  std::vector<Index> out;
  for (Index v = 0; v < node_count(); ++v) {
    if (labels[v] == class_id) out.push_back(v);
  }
  return out;
}

std::vector<Index> Dataset::class_nodes(int class_id, Split which) const {
  std::vector<Index> out;
  for (Index v = 0; v < node_count(); ++v) {
    if (labels[v] == class_id && split[v] == which) out.push_back(v);
  }
  return out;
}

std::string Dataset::feature_name(Index feature) const {
  if (!feature_names.empty() && !feature_names[feature].empty()) {
    return feature_names[feature];
  }
  return "word_" + std::to_string(feature);
}

Dataset make_dataset(std::string name, Index node_count, Index feature_dim,
                     std::vector<std::pair<Index, Index>> edges, std::span<const FeatureEntry> features,
                     std::vector<int> labels, std::vector<Split> split, std::vector<std::string> feature_names) {
  if (node_count <= 0) throw DatasetError("node_count must be positive");
  if (feature_dim <= 0) throw DatasetError("feature_dim must be positive");
  for (auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= node_count || v >= node_count) {
      throw DatasetError("endpoint out of range: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                         ") with node_count " + std::to_string(node_count));
    }
    if (u > v) std::swap(u, v);
  }
  std::erase_if(edges, [](const auto& e) { return e.first == e.second; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  Dataset ds;
  ds.name = std::move(name);
  ds.adjacency = AdjacencyCsr::from_undirected(node_count, edges);

  std::vector<Eigen::Triplet<double, Index>> triplets;
  triplets.reserve(features.size());
  for (const auto& entry : features) {
    if (entry.node < 0 || entry.node >= node_count) {
      throw DatasetError("feature row out of range: node " + std::to_string(entry.node));
    }
    if (entry.feature < 0 || entry.feature >= feature_dim) {
      throw DatasetError("feature column out of range: feature " + std::to_string(entry.feature));
    }
    if (!std::isfinite(entry.value)) {
      throw DatasetError("non-finite feature value at node " + std::to_string(entry.node) + ", feature " +
                         std::to_string(entry.feature));
    }
    if (entry.value != 0.0) triplets.emplace_back(entry.node, entry.feature, entry.value);
  }
  ds.features.resize(node_count, feature_dim);
  ds.features.setFromTriplets(triplets.begin(), triplets.end(), [](double, double) -> double {
    throw DatasetError("duplicate feature entry");
  });
  ds.features.makeCompressed();

  ds.labels = std::move(labels);
  ds.split = std::move(split);
  ds.feature_names = std::move(feature_names);
  ds.class_count = ds.labels.empty() ? 0 : *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  validate(ds);
  return ds;
}

void validate(const Dataset& ds) {
  const Index n = ds.node_count();
  if (ds.adjacency.node_count() != n) throw DatasetError("adjacency size differs from label count");
  if (static_cast<Index>(ds.split.size()) != n) throw DatasetError("split length differs from label count");
  if (ds.features.rows() != n) throw DatasetError("feature rows differ from label count");
  if (!ds.feature_names.empty() && static_cast<Index>(ds.feature_names.size()) != ds.feature_dim()) {
    throw DatasetError("feature_names length differs from feature_dim");
  }
  for (Index u = 0; u < n; ++u) {
    for (Index v : ds.adjacency.neighbors(u)) {
      if (v < 0 || v >= n) throw DatasetError("endpoint out of range");
      if (v == u) throw DatasetError("self-loop stored in adjacency");
      const auto back = ds.adjacency.neighbors(v);
      if (!std::binary_search(back.begin(), back.end(), u)) throw DatasetError("adjacency is not symmetric");
    }
    const auto nb = ds.adjacency.neighbors(u);
    if (std::adjacent_find(nb.begin(), nb.end()) != nb.end()) throw DatasetError("duplicate edge");
  }
  for (int label : ds.labels) {
    if (label < 0 || label >= ds.class_count) throw DatasetError("label out of range");
  }
  std::vector<Index> train_per_class(static_cast<std::size_t>(ds.class_count), 0);
  for (Index v = 0; v < n; ++v) {
    if (ds.split[v] == Split::Train) ++train_per_class[ds.labels[v]];
  }
  for (int c = 0; c < ds.class_count; ++c) {
    if (train_per_class[c] == 0) {
      throw DatasetError("class " + std::to_string(c) + " has zero training nodes");
    }
  }
  for (Index k = 0; k < ds.features.nonZeros(); ++k) {
    const double value = ds.features.valuePtr()[k];
    if (!std::isfinite(value)) throw DatasetError("non-finite feature value");
    if (value == 0.0) throw DatasetError("explicit zero stored in features");
  }
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

struct LineReader {
  fs::path path;
  std::ifstream in;
  std::size_t line_no = 0;

  explicit LineReader(const fs::path& p) : path(p), in(p) {
    if (!in) throw DatasetError("missing file: " + p.string());
  }

  // Returns false at EOF; skips blank lines.
  bool next(std::vector<std::string_view>& fields, std::string& storage, std::size_t expected) {
    while (std::getline(in, storage)) {
      ++line_no;
      if (!storage.empty() && storage.back() == '\r') storage.pop_back();
      if (storage.empty()) continue;
      fields = split_tabs(storage);
      if (fields.size() != expected) fail("expected " + std::to_string(expected) + " tab-separated fields");
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DatasetError(path.filename().string() + ":" + std::to_string(line_no) + ": " + what);
  }

  Index integer(std::string_view text) const {
    Index value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || value < 0) {
      fail("invalid non-negative integer '" + std::string(text) + "'");
    }
    return value;
  }

  double real(std::string_view text) const {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) fail("invalid real '" + std::string(text) + "'");
    if (!std::isfinite(value)) fail("non-finite value '" + std::string(text) + "'");
    return value;
  }
};

std::string format_real(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

}  // namespace

Dataset load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw DatasetError("missing dataset directory: " + root.string());
  std::vector<std::string_view> fields;
  std::string line;

  // labels.tsv fixes node_count.
  std::map<Index, int> label_map;
  {
    LineReader reader(root / "labels.tsv");
    while (reader.next(fields, line, 2)) {
      const Index node = reader.integer(fields[0]);
      const Index label = reader.integer(fields[1]);
      if (!label_map.emplace(node, static_cast<int>(label)).second) reader.fail("duplicate label for node");
    }
  }
  if (label_map.empty()) throw DatasetError("labels.tsv is empty");
  const Index node_count = label_map.rbegin()->first + 1;
  if (static_cast<Index>(label_map.size()) != node_count) {
    throw DatasetError("labels.tsv must label every node 0.." + std::to_string(node_count - 1));
  }
  std::vector<int> labels;
  labels.reserve(label_map.size());
  for (const auto& [node, label] : label_map) labels.push_back(label);

  std::vector<Split> split(static_cast<std::size_t>(node_count), Split::Test);
  {
    std::vector<bool> seen(static_cast<std::size_t>(node_count), false);
    LineReader reader(root / "splits.tsv");
    while (reader.next(fields, line, 2)) {
      const Index node = reader.integer(fields[0]);
      if (node >= node_count) reader.fail("split node out of range");
      if (seen[node]) reader.fail("duplicate split for node");
      seen[node] = true;
      try {
        split[node] = parse_split(fields[1]);
      } catch (const DatasetError& e) {
        reader.fail(e.what());
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw DatasetError("splits.tsv does not cover every node");
    }
  }

  std::vector<std::pair<Index, Index>> edges;
  {
    LineReader reader(root / "graph.edges");
    while (reader.next(fields, line, 2)) {
      const Index u = reader.integer(fields[0]);
      const Index v = reader.integer(fields[1]);
      if (u >= node_count || v >= node_count) {
        reader.fail("endpoint out of range: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                    ") with node_count " + std::to_string(node_count));
      }
      edges.emplace_back(u, v);
    }
  }

  std::vector<FeatureEntry> entries;
  Index feature_dim = 0;
  {
    LineReader reader(root / "features.tsv");
    while (reader.next(fields, line, 3)) {
      FeatureEntry entry{reader.integer(fields[0]), reader.integer(fields[1]), reader.real(fields[2])};
      if (entry.node >= node_count) reader.fail("feature row out of range");
      feature_dim = std::max(feature_dim, entry.feature + 1);
      entries.push_back(entry);
    }
  }

  std::vector<std::string> names;
  if (fs::exists(root / "feature_names.tsv")) {
    std::map<Index, std::string> name_map;
    LineReader reader(root / "feature_names.tsv");
    while (reader.next(fields, line, 2)) {
      const Index feature = reader.integer(fields[0]);
      if (!name_map.emplace(feature, std::string(fields[1])).second) reader.fail("duplicate feature name");
    }
    if (!name_map.empty()) feature_dim = std::max(feature_dim, name_map.rbegin()->first + 1);
    names.resize(static_cast<std::size_t>(feature_dim));
    for (auto& [feature, name] : name_map) names[feature] = std::move(name);
  }

  return make_dataset(root.filename().string(), node_count, feature_dim, std::move(edges), entries,
                      std::move(labels), std::move(split), std::move(names));
}

void save_dataset(const Dataset& ds, const fs::path& root) {
  fs::create_directories(root);
  auto open = [&](const char* file) {
    std::ofstream out(root / file, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError("cannot write " + (root / file).string());
    return out;
  };
  {
    auto out = open("graph.edges");
    for (const auto& [u, v] : ds.adjacency.undirected_edges()) out << u << '\t' << v << '\n';
  }
  {
    auto out = open("features.tsv");
    for (Index v = 0; v < ds.features.outerSize(); ++v) {
      for (FeatureMatrix::InnerIterator it(ds.features, v); it; ++it) {
        out << v << '\t' << it.col() << '\t' << format_real(it.value()) << '\n';
      }
    }
  }
  {
    auto out = open("labels.tsv");
    for (Index v = 0; v < ds.node_count(); ++v) out << v << '\t' << ds.labels[v] << '\n';
  }
  {
    auto out = open("splits.tsv");
    for (Index v = 0; v < ds.node_count(); ++v) out << v << '\t' << to_string(ds.split[v]) << '\n';
  }
  if (!ds.feature_names.empty()) {
    auto out = open("feature_names.tsv");
    for (std::size_t i = 0; i < ds.feature_names.size(); ++i) out << i << '\t' << ds.feature_names[i] << '\n';
  } else if (fs::exists(root / "feature_names.tsv")) {
    fs::remove(root / "feature_names.tsv");
  }
}

PlantedDataset generate_planted(const PlantedSpec& spec) {
  if (spec.node_count <= 0 || spec.class_count < 2 || spec.feature_dim <= 0 || spec.planted_per_class <= 0) {
    throw DatasetError("planted spec: counts must be positive and class_count >= 2");
  }
  if (spec.planted_per_class * spec.class_count > spec.feature_dim) {
    throw DatasetError("planted spec: planted_per_class * class_count exceeds feature_dim");
  }
  const auto is_prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!is_prob(spec.intra_edge_prob) || !is_prob(spec.inter_edge_prob) || !is_prob(spec.feature_flip_noise) ||
      spec.feature_flip_noise >= 0.5) {
    throw DatasetError("planted spec: probabilities out of range (flip noise must be < 0.5)");
  }
  if (spec.train_fraction <= 0.0 || spec.val_fraction < 0.0 || spec.train_fraction + spec.val_fraction >= 1.0) {
    throw DatasetError("planted spec: split fractions must leave a non-empty test split");
  }
  if (spec.node_count < 3 * spec.class_count) throw DatasetError("planted spec: too few nodes per class");

  Rng rng(spec.seed);
  const Index n = spec.node_count;
  const int classes = spec.class_count;

  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index v = 0; v < n; ++v) labels[v] = static_cast<int>(v % classes);

  std::vector<std::pair<Index, Index>> edges;
  for (Index u = 0; u < n; ++u) {
    for (Index v = u + 1; v < n; ++v) {
      const double p = labels[u] == labels[v] ? spec.intra_edge_prob : spec.inter_edge_prob;
      if (rng.bernoulli(p)) edges.emplace_back(u, v);
    }
  }

  PlantedDataset out;
  out.planted.resize(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) {
    for (Index j = 0; j < spec.planted_per_class; ++j) out.planted[c].push_back(c * spec.planted_per_class + j);
  }

  std::vector<FeatureEntry> entries;
  for (Index v = 0; v < n; ++v) {
    const Index own_begin = labels[v] * spec.planted_per_class;
    const Index own_end = own_begin + spec.planted_per_class;
    for (Index j = 0; j < spec.feature_dim; ++j) {
      const bool own = j >= own_begin && j < own_end;
      const double p_on = own ? 1.0 - spec.feature_flip_noise : spec.feature_flip_noise;
      if (rng.bernoulli(p_on)) entries.push_back({v, j, 1.0});
    }
  }

  // Stratified split: a per-class shuffle, then train / val / test by fraction.
  std::vector<Split> split(static_cast<std::size_t>(n), Split::Test);
  for (int c = 0; c < classes; ++c) {
    std::vector<Index> members;
    for (Index v = c; v < n; v += classes) members.push_back(v);
    const auto order = sample_without_replacement(members.size(), members.size(), rng);
    const auto m = static_cast<double>(members.size());
    const auto n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(spec.train_fraction * m)));
    const auto n_val = static_cast<std::size_t>(std::floor(spec.val_fraction * m));
    for (std::size_t r = 0; r < order.size(); ++r) {
      const Index v = members[order[r]];
      split[v] = r < n_train ? Split::Train : (r < n_train + n_val ? Split::Val : Split::Test);
    }
  }

  out.dataset = make_dataset("planted", n, spec.feature_dim, std::move(edges), entries, std::move(labels),
                             std::move(split));
  return out;
}

Dataset inject_bias(const Dataset& dataset, const BiasSpec& spec) {
  if (spec.target_class < 0 || spec.target_class >= dataset.class_count) {
    throw DatasetError("bias target class out of range");
  }
  if (!(spec.noise >= 0.0 && spec.noise < 0.5)) {
    throw DatasetError("bias noise must lie in [0, 0.5)");
  }
  const Index n = dataset.node_count();
  const Index d = dataset.feature_dim();
  Rng rng(spec.seed);

  std::vector<Eigen::Triplet<double, Index>> triplets;
  triplets.reserve(static_cast<std::size_t>(dataset.features.nonZeros() + n));
  for (Index v = 0; v < n; ++v) {
    for (FeatureMatrix::InnerIterator it(dataset.features, v); it; ++it) {
      triplets.emplace_back(v, it.col(), it.value());
    }
    const double p_on = dataset.labels[v] == spec.target_class ? 1.0 - spec.noise : spec.noise;
    if (rng.bernoulli(p_on)) triplets.emplace_back(v, d, 1.0);
  }

  Dataset out = dataset;
  out.features = FeatureMatrix(n, d + 1);
  out.features.setFromTriplets(triplets.begin(), triplets.end());
  out.features.makeCompressed();
  if (!out.feature_names.empty()) out.feature_names.push_back("injected_bias");
  return out;
}

}  // namespace graft
