#include "commands.hpp"

#include "graft/audit.hpp"
#include "graft/checkpoint.hpp"
#include "graft/evaluation.hpp"
#include "graft/report_io.hpp"
#include "graft/rules.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

namespace graft::cli {

namespace fs = std::filesystem;

namespace {

std::mutex log_mutex;

template <typename... Parts>
void say(const Context& ctx, const Parts&... parts) {
  std::lock_guard lock(log_mutex);
  ((*ctx.log) << ... << parts) << '\n';
}

struct Job {
  Architecture arch;
  std::uint64_t seed;
};

// Runs `fn` for every (arch, seed) pair on up to config.workers threads.
void for_each_job(const Context& ctx, const std::function<void(const Job&)>& fn) {
  std::vector<Job> jobs;
  for (Architecture arch : ctx.config.arch) {
    for (std::uint64_t seed : ctx.config.seeds) jobs.push_back({arch, seed});
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        fn(jobs[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(ctx.config.workers), jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

RunInfo run_info(const Context& ctx, Architecture arch, std::uint64_t seed) {
  return {ctx.dataset.name, std::string(to_string(arch)), seed, ctx.hash};
}

fs::path require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw MissingArtifact("missing " + path.filename().string() + " at " + path.string() + "; run `graft " +
                          producer + "` first");
  }
  return path;
}

TrainedModel load_model(const Context& ctx, const Job& job) {
  const fs::path path = require(ctx.run_dir(job.arch, job.seed) / "model.ckpt", "train");
  return load_checkpoint(path, ctx.dataset).model;
}

std::vector<FeatureSet> load_profile_sets(const Context& ctx, Architecture arch, std::uint64_t seed) {
  const fs::path path = require(ctx.run_dir(arch, seed) / "profiles.json", "explain");
  auto sets = top_k_sets_from_json(read_json(path));
  if (static_cast<int>(sets.size()) != ctx.dataset.class_count) {
    throw std::runtime_error(path.string() + " does not hold one profile per class");
  }
  return sets;
}

std::vector<FeatureSet> random_sets(const Context& ctx, std::uint64_t seed, std::size_t K) {
  std::vector<FeatureSet> out;
  const auto k = std::min<std::size_t>(K, static_cast<std::size_t>(ctx.dataset.feature_dim()));
  for (int c = 0; c < ctx.dataset.class_count; ++c) {
    out.push_back(random_profile(ctx.dataset.feature_dim(), k, seed * 1000 + static_cast<std::uint64_t>(c), c).top_k);
  }
  return out;
}

std::vector<FeatureSet> frequency_sets(const Context& ctx, std::size_t K) {
  std::vector<FeatureSet> out;
  for (int c = 0; c < ctx.dataset.class_count; ++c) out.push_back(frequency_profile(ctx.dataset, c, K).top_k);
  return out;
}

void write_tsv(const fs::path& path, const std::string& hash, const std::string& header,
               const std::vector<std::string>& rows) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# config_hash=" << hash << '\n' << header << '\n';
  for (const auto& row : rows) out << row << '\n';
}

std::string class_name(const Context& ctx, int c) {
  const auto& names = ctx.config.rules.class_names;
  return names.empty() ? "class_" + std::to_string(c) : names[static_cast<std::size_t>(c)];
}

}  // namespace

fs::path Context::arch_dir(Architecture arch) const { return root / std::string(to_string(arch)); }

fs::path Context::run_dir(Architecture arch, std::uint64_t seed) const { return arch_dir(arch) / std::to_string(seed); }

Context make_context(const RunConfig& config, std::ostream& log) {
  validate(config);
  Context ctx;
  ctx.config = config;
  ctx.hash = config_hash(config);
  ctx.log = &log;
  if (config.dataset == "planted") {
    try {
      ctx.dataset = generate_planted(config.planted).dataset;
    } catch (const DatasetError& e) {
      throw ConfigError(std::string("config.planted: ") + e.what());
    }
  } else {
    if (!fs::is_directory(config.dataset)) {
      throw ConfigError("config.dataset: '" + config.dataset + "' is neither 'planted' nor a bundle directory");
    }
    ctx.dataset = load_dataset(config.dataset);
  }
  for (std::size_t i = 0; i < config.target_class.size(); ++i) {
    if (config.target_class[i] >= ctx.dataset.class_count) {
      throw ConfigError("config.target_class[" + std::to_string(i) + "]: dataset has only " +
                        std::to_string(ctx.dataset.class_count) + " classes");
    }
  }
  if (!config.rules.class_names.empty() &&
      static_cast<int>(config.rules.class_names.size()) != ctx.dataset.class_count) {
    throw ConfigError("config.rules.class_names: expected one name per class (" +
                      std::to_string(ctx.dataset.class_count) + ")");
  }
  ctx.root = fs::path(config.out) / ctx.dataset.name;
  return ctx;
}

void cmd_generate(const RunConfig& config, std::ostream& log) {
  validate(config);
  PlantedDataset pd;
  try {
    pd = generate_planted(config.planted);
  } catch (const DatasetError& e) {
    throw ConfigError(std::string("config.planted: ") + e.what());
  }
  save_dataset(pd.dataset, config.out);
  json planted = json::array();
  for (const auto& p : pd.planted) planted.push_back(p);
  write_json(fs::path(config.out) / "planted.json", {{"planted", planted}, {"config_hash", config_hash(config)}});
  std::lock_guard lock(log_mutex);
  log << "generate: wrote " << pd.dataset.node_count() << "-node planted bundle to " << config.out << '\n';
}

void cmd_train(const Context& ctx) {
  for_each_job(ctx, [&](const Job& job) {
    const TrainedModel model = train(ctx.dataset, job.arch, hyperparams(ctx.config, job.seed));
    const fs::path dir = ctx.run_dir(job.arch, job.seed);
    fs::create_directories(dir);
    save_checkpoint(model, dir / "model.ckpt", "config_hash=" + ctx.hash);
    write_json(dir / "training.json", training_to_json(model.summary(), run_info(ctx, job.arch, job.seed)));
    say(ctx, "train ", to_string(job.arch), " seed ", job.seed, ": test accuracy ", model.summary().test_accuracy);
  });
}

void cmd_explain(const Context& ctx) {
  const ExplainSettings settings = explain_settings(ctx.config);
  for_each_job(ctx, [&](const Job& job) {
    const TrainedModel model = load_model(ctx, job);
    ExplainSettings s = settings;
    s.selection_seed = job.seed;
    const auto profiles = explain(model, ctx.dataset, s);
    const fs::path dir = ctx.run_dir(job.arch, job.seed);
    const RunInfo run = run_info(ctx, job.arch, job.seed);
    write_json(dir / "profiles.json", profiles_to_json(profiles, ctx.dataset, run));
    {
      json contrast = json::array();
      for (const auto& cp : contrastive(profiles, s.top_k)) {
        json top = json::array();
        for (const auto& f : cp.top_k) {
          json entry = {{"index", f.index}};
          if (!ctx.dataset.feature_names.empty()) entry["name"] = ctx.dataset.feature_name(f.index);
          entry["score"] = f.score;
          top.push_back(entry);
        }
        contrast.push_back({{"dataset", run.dataset},
                            {"arch", run.arch},
                            {"seed", run.seed},
                            {"config_hash", run.config_hash},
                            {"class_id", cp.class_id},
                            {"top_k", top}});
      }
      write_json(dir / "contrastive.json", contrast);
    }
    say(ctx, "explain ", to_string(job.arch), " seed ", job.seed, ": ", profiles.size(), " class profiles");
  });
}

void cmd_fidelity(const Context& ctx) {
  const std::size_t K = ctx.config.top_k;
  for_each_job(ctx, [&](const Job& job) {
    const TrainedModel model = load_model(ctx, job);
    const auto sets = load_profile_sets(ctx, job.arch, job.seed);
    const fs::path dir = ctx.run_dir(job.arch, job.seed);
    const RunInfo run = run_info(ctx, job.arch, job.seed);
    const auto graft = fidelity(model, ctx.dataset, sets, K);
    write_json(dir / "fidelity.json", fidelity_to_json(graft, run));
    write_json(dir / "fidelity_random.json",
               fidelity_to_json(fidelity(model, ctx.dataset, random_sets(ctx, job.seed, K), K), run));
    write_json(dir / "fidelity_frequency.json",
               fidelity_to_json(fidelity(model, ctx.dataset, frequency_sets(ctx, K), K), run));
    say(ctx, "fidelity ", to_string(job.arch), " seed ", job.seed, ": Fid- ", graft.fid_minus, " Fid+ ",
        graft.fid_plus);
  });
}

void cmd_stability(const Context& ctx) {
  if (ctx.config.seeds.size() < 2) throw ConfigError("config.seeds: stability needs at least two seeds");
  for (Architecture arch : ctx.config.arch) {
    std::vector<std::vector<FeatureSet>> per_seed;
    for (std::uint64_t seed : ctx.config.seeds) per_seed.push_back(load_profile_sets(ctx, arch, seed));
    const auto report = stability_report(per_seed, ctx.config.seeds);
    RunInfo run = run_info(ctx, arch, 0);
    write_json(ctx.arch_dir(arch) / "stability.json", stability_to_json(report, run));
    say(ctx, "stability ", to_string(arch), ": mean Jaccard ", report.mean);
  }
}

void cmd_consensus(const Context& ctx) {
  if (static_cast<int>(ctx.config.arch.size()) < ctx.config.tau) {
    throw ConfigError("config.arch: consensus needs at least tau=" + std::to_string(ctx.config.tau) +
                      " architectures");
  }
  std::vector<std::string> names;
  for (Architecture a : ctx.config.arch) names.emplace_back(to_string(a));
  for (std::uint64_t seed : ctx.config.seeds) {
    std::vector<std::vector<FeatureSet>> per_arch;
    for (Architecture arch : ctx.config.arch) per_arch.push_back(load_profile_sets(ctx, arch, seed));
    const auto report = consensus_report(per_arch, names, ctx.config.tau, ctx.config.top_k);
    RunInfo run{ctx.dataset.name, "", seed, ctx.hash};
    write_json(ctx.root / "consensus" / std::to_string(seed) / "consensus.json", consensus_to_json(report, run));
    say(ctx, "consensus seed ", seed, ": mean ", report.mean);
  }
}

void cmd_transfer(const Context& ctx) {
  const std::size_t K = ctx.config.top_k;
  for_each_job(ctx, [&](const Job& job) {
    const TrainedModel model = load_model(ctx, job);
    const auto sets = load_profile_sets(ctx, job.arch, job.seed);
    const auto report =
        transfer_eval(ctx.dataset, sets, frequency_sets(ctx, K), K, job.seed, model.summary().test_accuracy);
    write_json(ctx.run_dir(job.arch, job.seed) / "transfer.json",
               transfer_to_json(report, run_info(ctx, job.arch, job.seed)));
    say(ctx, "transfer ", to_string(job.arch), " seed ", job.seed, ": GRAFT-LR ", report.graft_lr, " random-LR ",
        report.random_lr);
  });
}

void cmd_audit(const Context& ctx) {
  const ExplainSettings settings = explain_settings(ctx.config);
  for_each_job(ctx, [&](const Job& job) {
    const Hyperparams hp = audit_hyperparams(hyperparams(ctx.config, job.seed));
    for (int target : ctx.config.target_class) {
      for (double sigma : ctx.config.sigma) {
        const auto report = run_bias_audit(ctx.dataset, job.arch, {target, sigma, job.seed}, hp, settings);
        const std::string name = "bias_target" + std::to_string(target) + "_sigma" + format_double(sigma) + ".json";
        write_json(ctx.run_dir(job.arch, job.seed) / "audit" / name, bias_to_json(report, ctx.hash));
        say(ctx, "audit ", to_string(job.arch), " seed ", job.seed, " target ", target, " sigma ", sigma, ": rank ",
            report.rank ? std::to_string(*report.rank) : std::string("none"));
      }
    }
  });
}

void cmd_rules(const Context& ctx) {
  const bool offline = ctx.config.offline_rules;
  if (!offline && ctx.config.rules.endpoint.base_url.empty()) {
    throw ConfigError("config.rules.base_url: required unless offline_rules is set");
  }
  const std::string context =
      ctx.config.rules.context.empty() ? "Dataset: " + ctx.dataset.name + "." : ctx.config.rules.context;
  for_each_job(ctx, [&](const Job& job) {
    const fs::path dir = ctx.run_dir(job.arch, job.seed);
    const json profiles = read_json(require(dir / "profiles.json", "explain"));
    std::vector<RuleRequest> requests;
    for (const auto& p : profiles) {
      ClassProfile profile;
      profile.class_id = p.at("class_id").get<int>();
      for (const auto& entry : p.at("top_k")) {
        profile.top_k.push_back({entry.at("index").get<Index>(), entry.at("score").get<double>()});
      }
      requests.push_back(make_rule_request(profile, ctx.dataset, class_name(ctx, profile.class_id), context));
    }
    std::vector<Rule> rules;
    if (offline) {
      for (const auto& r : requests) rules.push_back(write_rule_prompts(r, dir / "rules"));
    } else {
      HttpLlmClient client(ctx.config.rules.endpoint);
      rules = generate_rules(client, requests, ctx.config.rules.concurrency);
    }
    json out = json::array();
    for (const auto& r : rules) out.push_back(rule_to_json(r, ctx.hash));
    write_json(dir / "rules.json", out);
    say(ctx, "rules ", to_string(job.arch), " seed ", job.seed, ": ", rules.size(),
        offline ? " prompt pairs written" : " rules generated");
  });
}

void cmd_ablate(const Context& ctx) {
  const ExplainSettings base = explain_settings(ctx.config);
  for_each_job(ctx, [&](const Job& job) {
    const TrainedModel model = load_model(ctx, job);
    std::vector<std::string> rows;
    const auto add = [&](const std::string& study, const std::string& variant, std::size_t K,
                         const std::vector<ClassProfile>& profiles) {
      const auto f = fidelity(model, ctx.dataset, std::span<const ClassProfile>(profiles), K);
      rows.push_back(study + '\t' + variant + '\t' + std::to_string(K) + '\t' + format_double(f.fid_minus) + '\t' +
                     format_double(f.fid_plus));
    };
    const auto with = [&](const std::function<void(ExplainSettings&)>& edit) {
      ExplainSettings s = base;
      s.top_k = std::max<std::size_t>(s.top_k, 20);
      edit(s);
      return explain(model, ctx.dataset, s);
    };

    const auto reference = with([](ExplainSettings&) {});
    for (std::size_t K : {5u, 10u, 20u}) add("top_k", "K=" + std::to_string(K), K, reference);
    const std::size_t K = ctx.config.top_k;
    for (AttributionMethod m : {AttributionMethod::IG, AttributionMethod::GRAD_X_INPUT}) {
      add("method", std::string(to_string(m)), K, with([&](ExplainSettings& s) { s.method = m; }));
    }
    for (Aggregation a : {Aggregation::MEAN, Aggregation::MEDIAN, Aggregation::MAX}) {
      add("aggregation", std::string(to_string(a)), K, with([&](ExplainSettings& s) { s.aggregation = a; }));
    }
    add("exemplars", "FPS", K, with([](ExplainSettings& s) { s.selection = SelectionMode::FPS; }));
    for (std::uint64_t r = 0; r < 5; ++r) {
      add("exemplars", "RANDOM/" + std::to_string(r), K, with([&](ExplainSettings& s) {
            s.selection = SelectionMode::RANDOM;
            s.selection_seed = r;
          }));
    }
    write_tsv(ctx.run_dir(job.arch, job.seed) / "ablation.tsv", ctx.hash, "study\tvariant\tK\tfid_minus\tfid_plus",
              rows);
    say(ctx, "ablate ", to_string(job.arch), " seed ", job.seed, ": ", rows.size(), " variants");
  });
}

void cmd_summary(const Context& ctx) {
  const auto number = [](const fs::path& path, const char* key) -> std::optional<double> {
    if (!fs::exists(path)) return std::nullopt;
    const json j = read_json(path);
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) return std::nullopt;
    return it->get<double>();
  };
  std::vector<SummaryRow> rows;
  for (Architecture arch : ctx.config.arch) {
    const auto jac = number(ctx.arch_dir(arch) / "stability.json", "mean");
    for (std::uint64_t seed : ctx.config.seeds) {
      const fs::path dir = ctx.run_dir(arch, seed);
      SummaryRow row{ctx.dataset.name, std::string(to_string(arch)), seed};
      row.fid_minus = number(dir / "fidelity.json", "fid_minus");
      row.fid_plus = number(dir / "fidelity.json", "fid_plus");
      row.jaccard = jac;
      row.consensus = number(ctx.root / "consensus" / std::to_string(seed) / "consensus.json", "mean");
      row.transfer_graft = number(dir / "transfer.json", "graft_lr");
      row.transfer_freq = number(dir / "transfer.json", "freq_lr");
      row.transfer_full = number(dir / "transfer.json", "full_lr");
      row.compression = number(dir / "transfer.json", "compression");
      rows.push_back(row);
    }
  }
  write_summary_tsv(ctx.root / "summary.tsv", rows, ctx.hash);
  say(ctx, "summary: ", rows.size(), " rows in ", (ctx.root / "summary.tsv").string());
}

void cmd_run(const Context& ctx) {
  cmd_train(ctx);
  cmd_explain(ctx);
  if (ctx.config.fidelity) cmd_fidelity(ctx);
  if (ctx.config.transfer) cmd_transfer(ctx);
  if (ctx.config.stability && ctx.config.seeds.size() >= 2) cmd_stability(ctx);
  if (ctx.config.consensus && static_cast<int>(ctx.config.arch.size()) >= ctx.config.tau) cmd_consensus(ctx);
  cmd_summary(ctx);
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"run",       "generate", "train", "explain", "fidelity", "stability",
                                              "consensus", "transfer", "audit", "rules",   "ablate",   "summary"};
  return names;
}

void run_command(const std::string& name, const RunConfig& config, std::ostream& log) {
  if (name == "generate") return cmd_generate(config, log);
  static const std::map<std::string, void (*)(const Context&)> table{
      {"run", cmd_run},           {"train", cmd_train},       {"explain", cmd_explain}, {"fidelity", cmd_fidelity},
      {"stability", cmd_stability}, {"consensus", cmd_consensus}, {"transfer", cmd_transfer}, {"audit", cmd_audit},
      {"rules", cmd_rules},       {"ablate", cmd_ablate},     {"summary", cmd_summary}};
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("command: unknown subcommand '" + name + "'");
  it->second(make_context(config, log));
}

}  // namespace graft::cli
