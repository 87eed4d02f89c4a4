#include <cmath>
#include <fstream>

#include "ctxslu/errors.hpp"
#include "ctxslu/training.hpp"

namespace ctxslu::train {

using namespace ctxslu::diff;

nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"train_loss", r.train_loss},
          {"val_slot_f1", r.val_slot_f1},
          {"val_intent_acc", r.val_intent_acc},
          {"val_overall_acc", r.val_overall_acc}};
}

EpochRecord epoch_record_from_json(const nlohmann::json& j) {
  return {j.at("epoch").get<std::size_t>(), j.at("train_loss").get<double>(), j.at("val_slot_f1").get<double>(),
          j.at("val_intent_acc").get<double>(), j.at("val_overall_acc").get<double>()};
}

TrainResult train(model::SluModel& model, const TrainConfig& cfg, std::span<const data::Sample> train_set,
                  std::span<const data::Sample> valid_set, const std::optional<std::filesystem::path>& run_dir,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw DomainError("cannot train on an empty training set");

  std::vector<model::EncodedSample> encoded;
  encoded.reserve(train_set.size());
  for (const auto& s : train_set) encoded.push_back(model.encode(s));

  std::ofstream log_file;
  if (run_dir) {
    std::filesystem::create_directories(*run_dir);
    std::ofstream config_file(*run_dir / "config.json", std::ios::binary);
    config_file << nlohmann::json{{"model", model::config_to_json(model.config())}, {"train", config_to_json(cfg)}}.dump(2)
                << "\n";
    log_file.open(*run_dir / "train_log.jsonl", std::ios::binary);
  }

  Rng order_rng = make_rng(cfg.seed, 101);
  Rng dropout_rng = make_rng(cfg.seed, 202);
  std::vector<std::size_t> order(encoded.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  AdamState adam;
  TrainResult result;
  std::vector<Tensor> best_params;
  double best_score = -1.0;
  std::size_t since_best = 0;
  const model::ForwardOptions options{
      cfg.greedy_in_training ? model::DecodeMode::kGreedy : model::DecodeMode::kTeacherForced, cfg.dropout,
      &dropout_rng};
  auto& store = model.params();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, order_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      GradientMap grads;
      for (std::size_t k = start; k < end; ++k) {
        const auto& sample = encoded[order[k]];
        Graph g(store);
        const model::ModelOutput out = model.forward(g, sample, options);
        Var loss = joint_loss(out, sample);
        const double value = loss.scalar();
        if (!std::isfinite(value)) {
          throw NumericError("loss diverged at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(start / cfg.batch_size + 1));
        }
        loss_sum += value;
        g.backward(scale(loss, inv), grads);
      }
      adam_step(store, grads, adam, cfg);
    }

    const eval::MetricsReport report = eval::evaluate(model, valid_set);
    const EpochRecord record{epoch, loss_sum / static_cast<double>(encoded.size()), report.slot_f1,
                             report.intent_accuracy, report.overall_accuracy};
    result.log.push_back(record);
    if (log_file.is_open()) log_file << to_json(record).dump() << "\n" << std::flush;
    if (on_epoch) on_epoch(record);

    // Ties keep the earlier epoch.
    if (report.overall_accuracy > best_score) {
      best_score = report.overall_accuracy;
      result.best_epoch = epoch;
      result.best_validation = report;
      best_params.clear();
      for (ParamId id : store.ids()) best_params.push_back(store.tensor(id));
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }

  if (run_dir) model::save_checkpoint(model, *run_dir / "final.ckpt");
  for (ParamId id : store.ids()) store.tensor(id) = best_params[index_of(id)];
  if (run_dir) model::save_checkpoint(model, *run_dir / "best.ckpt");
  return result;
}

}  // namespace ctxslu::train
