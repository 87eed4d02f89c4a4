#pragma once

// Flat key = value run configuration shared by every CLI command.
//
//   # comment
//   n_samples = 3000
//   fusion = hierarchical
//
// `seed` feeds the generator, parameter initialization and training alike.

#include <filesystem>
#include <string>
#include <string_view>

#include "ctxslu/datagen.hpp"
#include "ctxslu/slu_model.hpp"
#include "ctxslu/training.hpp"

namespace ctxslu::cli {

struct RunConfig {
  gen::GeneratorConfig generator;
  model::ModelConfig model;
  train::TrainConfig train;
  std::string data_dir = "data";
  std::string out_dir = "runs";
  std::size_t gradcheck_batch = 4;
  /// Largest-|gradient| entries checked per tensor; 0 checks all.
  std::size_t gradcheck_entries = 32;
  double gradcheck_eps = 1e-5;

  void set_seed(std::uint64_t seed);
  /// Throws ConfigError.
  void validate() const;
};

/// Throws ConfigError naming the line for unknown or repeated keys and bad values.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Every key with its current value, in a form parse_run_config reads back.
std::string to_text(const RunConfig& cfg);
/// One line per key: name, default, description.
std::string run_config_reference();

}  // namespace ctxslu::cli
