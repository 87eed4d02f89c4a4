#pragma once

// Joint loss, Adam with decoupled weight decay, and the epoch loop with
// validation-based model selection.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ctxslu/datamodel.hpp"
#include "ctxslu/diffcore.hpp"
#include "ctxslu/evalmetrics.hpp"
#include "ctxslu/slu_model.hpp"

namespace ctxslu::train {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 2;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2_lambda = 1e-6;
  double dropout = 0.4;
  std::uint64_t seed = 1;
  /// Stop after this many epochs without a new best; 0 disables.
  std::size_t patience = 8;
  /// Feed the decoder its own previous prediction during training.
  bool greedy_in_training = false;

  /// Throws ConfigError.
  void validate() const;
};

nlohmann::json config_to_json(const TrainConfig& cfg);

/// L_I + sum_t L_S,t for one teacher-forced output.
diff::Var joint_loss(const model::ModelOutput& output, const model::EncodedSample& gold);
/// The same loss as separate terms, intent first.
std::vector<diff::Var> joint_loss_terms(const model::ModelOutput& output, const model::EncodedSample& gold);

struct AdamState {
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// theta -= lr * m_hat / (sqrt(v_hat) + eps) + lr * l2 * theta. Parameters
/// absent from `grads` are treated as having zero gradient. A non-finite
/// gradient raises NumericError naming the parameter before anything changes.
void adam_step(diff::ParameterStore& params, const diff::GradientMap& grads, AdamState& state,
               const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_slot_f1 = 0.0;
  double val_intent_acc = 0.0;
  double val_overall_acc = 0.0;
};

nlohmann::json to_json(const EpochRecord& r);
EpochRecord epoch_record_from_json(const nlohmann::json& j);

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  eval::MetricsReport best_validation;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains `model` in place and leaves it holding the best-validation
/// parameters. With `run_dir`, writes config.json, train_log.jsonl,
/// final.ckpt and best.ckpt there.
TrainResult train(model::SluModel& model, const TrainConfig& cfg, std::span<const data::Sample> train_set,
                  std::span<const data::Sample> valid_set, const std::optional<std::filesystem::path>& run_dir = {},
                  const EpochCallback& on_epoch = {});

}  // namespace ctxslu::train
