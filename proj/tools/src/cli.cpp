#include "cli.hpp"

#include "commands.hpp"
#include "config.hpp"

#include <CLI11.hpp>

#include <map>
#include <ostream>
#include <sstream>

namespace graft::cli {

namespace {

using nlohmann::json;

enum class Kind { String, Number, Bool, StringList, NumberList };

struct Flag {
  std::string name;  // without leading dashes
  std::string key;   // config key, dotted for nested
  Kind kind;
  std::string help;
};

const std::vector<Flag>& flags() {
  static const std::vector<Flag> table{
      {"dataset", "dataset", Kind::String, "'planted' or a dataset bundle directory"},
      {"arch", "arch", Kind::StringList, "comma-separated architectures (GCN,GAT,SAGE,GIN)"},
      {"seeds", "seeds", Kind::NumberList, "comma-separated model seeds"},
      {"k", "k", Kind::Number, "exemplars per class"},
      {"top-k", "top_k", Kind::Number, "profile size K"},
      {"steps", "steps", Kind::Number, "integrated-gradient steps"},
      {"quadrature", "quadrature", Kind::String, "GAUSS_LEGENDRE or RIEMANN_MID"},
      {"aggregation", "aggregation", Kind::String, "MEAN, CONF_WEIGHTED, MEDIAN or MAX"},
      {"exemplar-mode", "exemplar_mode", Kind::String, "FPS, CS_FPS or RANDOM"},
      {"method", "method", Kind::String, "IG or GRAD_X_INPUT"},
      {"hidden", "hidden", Kind::Number, "hidden width"},
      {"epochs", "epochs", Kind::Number, "training epochs"},
      {"lr", "lr", Kind::Number, "learning rate"},
      {"weight-decay", "weight_decay", Kind::Number, "L2 weight decay"},
      {"sigma", "sigma", Kind::NumberList, "comma-separated audit noise levels"},
      {"target-class", "target_class", Kind::NumberList, "comma-separated audit target classes"},
      {"tau", "tau", Kind::Number, "consensus threshold"},
      {"out", "out", Kind::String, "output root"},
      {"workers", "workers", Kind::Number, "parallel (arch, seed) jobs"},
      {"rules-provider", "rules.provider", Kind::String, "rule endpoint provider"},
      {"rules-base-url", "rules.base_url", Kind::String, "rule endpoint base URL"},
      {"rules-model", "rules.model", Kind::String, "rule endpoint model name"},
  };
  return table;
}

json scalar(const Flag& flag, const std::string& text) {
  if (flag.kind == Kind::String || flag.kind == Kind::StringList) return text;
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    if (text.find_first_of(".eE") == std::string::npos) {
      if (text.front() == '-') return std::stoll(text);
      return std::stoull(text);
    }
    return value;
  } catch (const std::exception&) {
    throw ConfigError("--" + flag.name + ": '" + text + "' is not a number");
  }
}

json flag_value(const Flag& flag, const std::string& text) {
  if (flag.kind == Kind::StringList || flag.kind == Kind::NumberList) {
    json list = json::array();
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!item.empty()) list.push_back(scalar(flag, item));
    }
    return list;
  }
  return scalar(flag, text);
}

void set_key(json& doc, const std::string& key, json value) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) {
    doc[key] = std::move(value);
  } else {
    json& child = doc[key.substr(0, dot)];
    if (!child.is_object()) child = json::object();
    child[key.substr(dot + 1)] = std::move(value);
  }
}

struct Overrides {
  std::string config_path;
  std::map<std::string, std::string> values;
  bool offline_rules = false;
};

void add_common(CLI::App& sub, Overrides& o) {
  sub.add_option("--config", o.config_path, "JSON config file; flags override its keys");
  for (const auto& f : flags()) sub.add_option("--" + f.name, o.values[f.name], f.help);
  sub.add_flag("--offline-rules", o.offline_rules, "write rule prompts instead of calling the endpoint");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Class-level feature explanations for graph neural networks"};
  app.require_subcommand(1);
  Overrides overrides;
  const std::map<std::string, std::string> descriptions{
      {"run", "train, explain, evaluate and summarise"},
      {"generate", "write a planted dataset bundle to --out"},
      {"train", "train one model per (arch, seed)"},
      {"explain", "build class profiles from trained models"},
      {"fidelity", "Fid- and Fid+ for profiles and baselines"},
      {"stability", "cross-seed Jaccard per architecture"},
      {"consensus", "cross-architecture consensus per seed"},
      {"transfer", "logistic regression on profile features"},
      {"audit", "inject a shortcut feature, retrain and look for it"},
      {"rules", "turn profiles into natural-language rules"},
      {"ablate", "fidelity under K, method, aggregation and exemplar variants"},
      {"summary", "collect metrics into summary.tsv"}};
  for (const auto& name : command_names()) add_common(*app.add_subcommand(name, descriptions.at(name)), overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    json doc = json::object();
    if (!overrides.config_path.empty()) doc = config_to_json(load_config(overrides.config_path));
    for (const auto& f : flags()) {
      const auto& text = overrides.values[f.name];
      if (!text.empty()) set_key(doc, f.key, flag_value(f, text));
    }
    if (overrides.offline_rules) doc["offline_rules"] = true;
    const RunConfig config = parse_config(doc);
    run_command(app.get_subcommands().front()->get_name(), config, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace graft::cli
