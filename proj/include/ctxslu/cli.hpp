#pragma once

// Subcommands behind the ctxslu binary. Everything is callable in-process so
// tests can check outputs and exit codes without spawning the tool.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctxslu/diffcore.hpp"
#include "ctxslu/evalmetrics.hpp"
#include "ctxslu/run_config.hpp"

namespace ctxslu::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigFailure = 2,
  kDataFailure = 3,
  kNumericFailure = 4,
  kGenerationFailure = 5,
  kVersionFailure = 6,
};

/// Maps a library exception onto the documented exit code.
int exit_code_for(const std::exception& e);

struct Splits {
  data::ProfileSchema schema;
  std::vector<data::Sample> train;
  std::vector<data::Sample> valid;
  std::vector<data::Sample> test;
};

/// Reads train/valid/test.jsonl; the schema comes from schema.json when present.
Splits load_splits(const std::filesystem::path& dir);

void cmd_generate(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out);

/// Trains on the train split with validation-based selection and reports the
/// best model on valid and test. Writes the run directory.
eval::MetricsReport cmd_train(const RunConfig& cfg, const std::filesystem::path& data_dir,
                              const std::filesystem::path& out_dir, std::ostream& out);

/// Loads the checkpoint before touching the dataset, so a bad checkpoint
/// leaves no report behind.
eval::MetricsReport cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset,
                             const std::optional<std::filesystem::path>& report_path, std::ostream& out);

/// Finite differences on the joint loss of the first gradcheck_batch
/// training samples, dropout off.
diff::GradCheckReport cmd_gradcheck(const RunConfig& cfg, std::ostream& out);

using AblationRows = std::vector<std::pair<std::string, eval::MetricsReport>>;

/// The variant grid, in table order.
std::vector<std::pair<std::string, model::ModelConfig>> ablation_grid(const model::ModelConfig& base);

/// Trains every grid variant with the same data and seed; test-split results.
AblationRows cmd_ablate(const RunConfig& cfg, const std::filesystem::path& data_dir,
                        const std::filesystem::path& out_dir, std::ostream& out);

/// Full command line, program name first.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctxslu::cli
