#pragma once

#include "config.hpp"

#include "graft/dataset.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace graft::cli {

/// A stage was asked to run before the artifact it depends on exists.
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  RunConfig config;
  std::string hash;
  Dataset dataset;
  std::filesystem::path root;  // <out>/<dataset name>
  std::ostream* log = nullptr;

  std::filesystem::path run_dir(Architecture arch, std::uint64_t seed) const;
  std::filesystem::path arch_dir(Architecture arch) const;
};

/// Loads or generates the dataset and checks config fields that depend on it.
Context make_context(const RunConfig& config, std::ostream& log);

void cmd_generate(const RunConfig& config, std::ostream& log);
void cmd_train(const Context& ctx);
void cmd_explain(const Context& ctx);
void cmd_fidelity(const Context& ctx);
void cmd_stability(const Context& ctx);
void cmd_consensus(const Context& ctx);
void cmd_transfer(const Context& ctx);
void cmd_audit(const Context& ctx);
void cmd_rules(const Context& ctx);
void cmd_ablate(const Context& ctx);
void cmd_summary(const Context& ctx);
/// train, explain, then each enabled metric and the summary table.
void cmd_run(const Context& ctx);

/// Names accepted by run_command, in help order.
const std::vector<std::string>& command_names();

/// Dispatches one subcommand by name.
void run_command(const std::string& name, const RunConfig& config, std::ostream& log);

}  // namespace graft::cli
