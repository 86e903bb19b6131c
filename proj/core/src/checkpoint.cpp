#include "graft/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <memory>

namespace graft {

namespace {

constexpr std::array<char, 8> kMagic = {'G', 'R', 'A', 'F', 'T', 'C', 'K', 'P'};

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) throw CheckpointError("checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto size = get<std::uint32_t>(in);
  if (size > (1u << 20)) throw CheckpointError("checkpoint string field too long");
  std::string s(size, '\0');
  if (!in.read(s.data(), size)) throw CheckpointError("checkpoint truncated");
  return s;
}

}  // namespace

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path, const std::string& provenance) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.arch()));
  const auto& hp = model.hyperparams();
  put<std::uint64_t>(out, static_cast<std::uint64_t>(hp.layers));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(hp.hidden_dim));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(hp.epochs));
  put<double>(out, hp.learning_rate);
  put<double>(out, hp.weight_decay);
  put<std::uint64_t>(out, hp.seed);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(model.feature_dim()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(model.class_count()));
  const auto& s = model.summary();
  put<double>(out, s.initial_train_accuracy);
  put<double>(out, s.train_accuracy);
  put<double>(out, s.val_accuracy);
  put<double>(out, s.test_accuracy);
  put<double>(out, s.final_loss);
  put_string(out, provenance);
  put<std::uint64_t>(out, model.weights().size());
  for (const auto& t : model.weights()) {
    put_string(out, t.name);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.cols()));
    for (Index r = 0; r < t.value.rows(); ++r) {
      for (Index c = 0; c < t.value.cols(); ++c) put<double>(out, t.value(r, c));
    }
  }
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const Dataset& dataset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("missing checkpoint: " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw CheckpointError("not a graft checkpoint");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto arch_tag = get<std::uint32_t>(in);
  if (arch_tag > static_cast<std::uint32_t>(Architecture::GIN)) throw CheckpointError("unknown architecture tag");
  Hyperparams hp;
  hp.layers = static_cast<int>(get<std::uint64_t>(in));
  hp.hidden_dim = static_cast<Index>(get<std::uint64_t>(in));
  hp.epochs = static_cast<int>(get<std::uint64_t>(in));
  hp.learning_rate = get<double>(in);
  hp.weight_decay = get<double>(in);
  hp.seed = get<std::uint64_t>(in);
  const auto feature_dim = static_cast<Index>(get<std::uint64_t>(in));
  const auto class_count = static_cast<int>(get<std::uint64_t>(in));
  TrainingSummary summary;
  summary.initial_train_accuracy = get<double>(in);
  summary.train_accuracy = get<double>(in);
  summary.val_accuracy = get<double>(in);
  summary.test_accuracy = get<double>(in);
  summary.final_loss = get<double>(in);
  std::string provenance = get_string(in);

  if (feature_dim != dataset.feature_dim()) {
    throw CheckpointError("checkpoint feature_dim " + std::to_string(feature_dim) + " differs from dataset " +
                          std::to_string(dataset.feature_dim()));
  }
  if (class_count != dataset.class_count) throw CheckpointError("checkpoint class count differs from dataset");

  const auto count = get<std::uint64_t>(in);
  if (count > 64) throw CheckpointError("implausible tensor count");
  std::vector<NamedTensor> weights;
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = get_string(in);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows > (1ull << 24) || cols > (1ull << 24)) throw CheckpointError("implausible tensor shape");
    t.value.resize(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index r = 0; r < t.value.rows(); ++r) {
      for (Index c = 0; c < t.value.cols(); ++c) t.value(r, c) = get<double>(in);
    }
    weights.push_back(std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes after checkpoint");

  try {
    TrainedModel model(static_cast<Architecture>(arch_tag), hp, feature_dim, class_count, std::move(weights),
                       std::make_shared<const GraphOperators>(GraphOperators::build(dataset.adjacency)),
                       std::make_shared<const AdjacencyCsr>(dataset.adjacency));
    model.set_summary(summary);
    return {std::move(model), std::move(provenance)};
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid checkpoint: ") + e.what());
  }
}

}  // namespace graft
