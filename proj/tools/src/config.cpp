#include "config.hpp"

#include "graft/hashing.hpp"

#include <fstream>
#include <set>
#include <type_traits>

namespace graft::cli {

using nlohmann::json;

namespace {

template <typename T>
struct is_vector : std::false_type {};
template <typename T>
struct is_vector<std::vector<T>> : std::true_type {};

// nlohmann converts -3 to a huge unsigned value and 2.5 to 2; refuse both.
template <typename T>
bool fits(const json& value) {
  if constexpr (is_vector<T>::value) {
    if (!value.is_array()) return false;
    for (const auto& item : value) {
      if (!fits<typename T::value_type>(item)) return false;
    }
    return true;
  } else if constexpr (std::is_same_v<T, bool>) {
    return value.is_boolean();
  } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
    return value.is_number_unsigned();
  } else if constexpr (std::is_integral_v<T>) {
    return value.is_number_integer();
  } else if constexpr (std::is_floating_point_v<T>) {
    return value.is_number();
  } else {
    return true;
  }
}

class Reader {
 public:
  Reader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& target) {
    seen_.insert(key);
    const auto it = object_.find(key);
    if (it == object_.end()) return;
    if (!fits<T>(*it)) throw ConfigError(field(key) + ": wrong type or sign");
    try {
      target = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key) + ": wrong type");
    }
  }

  template <typename T, typename Parse>
  void read_enum(const char* key, T& target, Parse parse) {
    std::string text;
    read(key, text);
    if (text.empty()) return;
    try {
      target = parse(text);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(field(key) + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  std::string field(const std::string& key) const { return path_ + "." + key; }

  void reject_unknown() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key) + ": unknown key");
    }
  }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

RunConfig parse_config(const json& document) {
  RunConfig c;
  Reader r(document, "config");
  r.read("dataset", c.dataset);
  if (const json* p = r.child("planted")) {
    Reader pr(*p, "config.planted");
    pr.read("nodes", c.planted.node_count);
    pr.read("classes", c.planted.class_count);
    pr.read("feature_dim", c.planted.feature_dim);
    pr.read("planted_per_class", c.planted.planted_per_class);
    pr.read("intra_edge_prob", c.planted.intra_edge_prob);
    pr.read("inter_edge_prob", c.planted.inter_edge_prob);
    pr.read("flip_noise", c.planted.feature_flip_noise);
    pr.read("seed", c.planted.seed);
    pr.read("train_fraction", c.planted.train_fraction);
    pr.read("val_fraction", c.planted.val_fraction);
    pr.reject_unknown();
  }
  if (const json* a = r.child("arch")) {
    if (!a->is_array()) throw ConfigError("config.arch: expected a list");
    c.arch.clear();
    for (std::size_t i = 0; i < a->size(); ++i) {
      const auto& item = (*a)[i];
      if (!item.is_string()) throw ConfigError("config.arch[" + std::to_string(i) + "]: expected a string");
      try {
        c.arch.push_back(parse_architecture(item.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config.arch[" + std::to_string(i) + "]: " + e.what());
      }
    }
  }
  r.read("seeds", c.seeds);
  r.read("k", c.k);
  r.read("top_k", c.top_k);
  r.read("steps", c.steps);
  r.read_enum("quadrature", c.quadrature, parse_quadrature);
  r.read_enum("aggregation", c.aggregation, parse_aggregation);
  r.read_enum("exemplar_mode", c.exemplar_mode, parse_selection_mode);
  r.read_enum("method", c.method, parse_attribution_method);
  r.read("hidden", c.hidden);
  r.read("epochs", c.epochs);
  r.read("lr", c.lr);
  r.read("weight_decay", c.weight_decay);
  r.read("sigma", c.sigma);
  r.read("target_class", c.target_class);
  r.read("tau", c.tau);
  r.read("fidelity", c.fidelity);
  r.read("stability", c.stability);
  r.read("consensus", c.consensus);
  r.read("transfer", c.transfer);
  r.read("offline_rules", c.offline_rules);
  if (const json* rules = r.child("rules")) {
    Reader rr(*rules, "config.rules");
    rr.read_enum("provider", c.rules.endpoint.provider, parse_provider);
    rr.read("base_url", c.rules.endpoint.base_url);
    rr.read("path", c.rules.endpoint.path);
    rr.read("model", c.rules.endpoint.model);
    rr.read("token_env", c.rules.endpoint.token_env);
    rr.read("timeout_seconds", c.rules.endpoint.timeout_seconds);
    rr.read("max_retries", c.rules.endpoint.max_retries);
    rr.read("backoff_seconds", c.rules.endpoint.backoff_seconds);
    rr.read("context", c.rules.context);
    rr.read("class_names", c.rules.class_names);
    rr.read("concurrency", c.rules.concurrency);
    rr.reject_unknown();
  }
  r.read("out", c.out);
  r.read("workers", c.workers);
  r.reject_unknown();
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  json document = json::parse(in, nullptr, false);
  if (document.is_discarded()) throw ConfigError("config: " + path.string() + " is not valid JSON");
  return parse_config(document);
}

json config_to_json(const RunConfig& c) {
  json arch = json::array();
  for (Architecture a : c.arch) arch.push_back(std::string(to_string(a)));
  return {{"dataset", c.dataset},
          {"planted",
           {{"nodes", c.planted.node_count},
            {"classes", c.planted.class_count},
            {"feature_dim", c.planted.feature_dim},
            {"planted_per_class", c.planted.planted_per_class},
            {"intra_edge_prob", c.planted.intra_edge_prob},
            {"inter_edge_prob", c.planted.inter_edge_prob},
            {"flip_noise", c.planted.feature_flip_noise},
            {"seed", c.planted.seed},
            {"train_fraction", c.planted.train_fraction},
            {"val_fraction", c.planted.val_fraction}}},
          {"arch", arch},
          {"seeds", c.seeds},
          {"k", c.k},
          {"top_k", c.top_k},
          {"steps", c.steps},
          {"quadrature", std::string(to_string(c.quadrature))},
          {"aggregation", std::string(to_string(c.aggregation))},
          {"exemplar_mode", std::string(to_string(c.exemplar_mode))},
          {"method", std::string(to_string(c.method))},
          {"hidden", c.hidden},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"sigma", c.sigma},
          {"target_class", c.target_class},
          {"tau", c.tau},
          {"fidelity", c.fidelity},
          {"stability", c.stability},
          {"consensus", c.consensus},
          {"transfer", c.transfer},
          {"offline_rules", c.offline_rules},
          {"rules",
           {{"provider", std::string(to_string(c.rules.endpoint.provider))},
            {"base_url", c.rules.endpoint.base_url},
            {"path", c.rules.endpoint.path},
            {"model", c.rules.endpoint.model},
            {"token_env", c.rules.endpoint.token_env},
            {"timeout_seconds", c.rules.endpoint.timeout_seconds},
            {"max_retries", c.rules.endpoint.max_retries},
            {"backoff_seconds", c.rules.endpoint.backoff_seconds},
            {"context", c.rules.context},
            {"class_names", c.rules.class_names},
            {"concurrency", c.rules.concurrency}}},
          {"out", c.out},
          {"workers", c.workers}};
}

void validate(const RunConfig& c) {
  if (c.dataset.empty()) throw ConfigError("config.dataset: must not be empty");
  if (c.arch.empty()) throw ConfigError("config.arch: at least one architecture is required");
  for (std::size_t i = 0; i < c.arch.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (c.arch[i] == c.arch[j]) throw ConfigError("config.arch[" + std::to_string(i) + "]: duplicate architecture");
    }
  }
  if (c.seeds.empty()) throw ConfigError("config.seeds: at least one seed is required");
  for (std::size_t i = 0; i < c.seeds.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (c.seeds[i] == c.seeds[j]) {
        throw ConfigError("config.seeds[" + std::to_string(i) + "]: duplicate seed " + std::to_string(c.seeds[i]));
      }
    }
  }
  if (c.k == 0) throw ConfigError("config.k: must be positive");
  if (c.top_k == 0) throw ConfigError("config.top_k: must be positive");
  if (c.steps <= 0) throw ConfigError("config.steps: must be positive");
  if (c.hidden <= 0) throw ConfigError("config.hidden: must be positive");
  if (c.epochs <= 0) throw ConfigError("config.epochs: must be positive");
  if (!(c.lr > 0.0)) throw ConfigError("config.lr: must be positive");
  if (!(c.weight_decay >= 0.0)) throw ConfigError("config.weight_decay: must be non-negative");
  for (std::size_t i = 0; i < c.sigma.size(); ++i) {
    if (!(c.sigma[i] >= 0.0 && c.sigma[i] < 0.5)) {
      throw ConfigError("config.sigma[" + std::to_string(i) + "]: must lie in [0, 0.5)");
    }
  }
  if (c.sigma.empty()) throw ConfigError("config.sigma: at least one noise level is required");
  if (c.target_class.empty()) throw ConfigError("config.target_class: at least one class is required");
  for (std::size_t i = 0; i < c.target_class.size(); ++i) {
    if (c.target_class[i] < 0) throw ConfigError("config.target_class[" + std::to_string(i) + "]: must be >= 0");
  }
  if (c.tau <= 0) throw ConfigError("config.tau: must be positive");
  if (c.workers <= 0) throw ConfigError("config.workers: must be positive");
  if (c.rules.concurrency <= 0) throw ConfigError("config.rules.concurrency: must be positive");
  if (c.rules.endpoint.max_retries < 0) throw ConfigError("config.rules.max_retries: must be >= 0");
  if (!(c.rules.endpoint.timeout_seconds > 0.0)) throw ConfigError("config.rules.timeout_seconds: must be positive");
  if (c.out.empty()) throw ConfigError("config.out: must not be empty");
}

std::string config_hash(const RunConfig& config) {
  json canonical = config_to_json(config);
  canonical.erase("out");
  canonical.erase("workers");
  canonical["rules"].erase("base_url");
  canonical["rules"].erase("path");
  canonical["rules"].erase("token_env");
  canonical["rules"].erase("timeout_seconds");
  canonical["rules"].erase("max_retries");
  canonical["rules"].erase("backoff_seconds");
  canonical["rules"].erase("concurrency");
  return sha256_hex(canonical.dump());
}

Hyperparams hyperparams(const RunConfig& config, std::uint64_t seed) {
  Hyperparams hp;
  hp.hidden_dim = config.hidden;
  hp.epochs = config.epochs;
  hp.learning_rate = config.lr;
  hp.weight_decay = config.weight_decay;
  hp.seed = seed;
  return hp;
}

ExplainSettings explain_settings(const RunConfig& config) {
  ExplainSettings s;
  s.exemplars = config.k;
  s.top_k = config.top_k;
  s.steps = config.steps;
  s.quadrature = config.quadrature;
  s.method = config.method;
  s.aggregation = config.aggregation;
  s.selection = config.exemplar_mode;
  return s;
}

}  // namespace graft::cli
