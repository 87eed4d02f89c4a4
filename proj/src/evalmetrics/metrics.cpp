#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "ctxslu/errors.hpp"
#include "ctxslu/evalmetrics.hpp"
#include "ctxslu/slu_model.hpp"

namespace ctxslu::eval {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

PrecisionRecall slot_f1(std::span<const std::vector<std::string>> predicted,
                        std::span<const std::vector<std::string>> gold) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("slot_f1: " + std::to_string(predicted.size()) + " predictions for " +
                          std::to_string(gold.size()) + " gold sequences");
  }
  PrecisionRecall r;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i].size() != gold[i].size()) {
      throw ValidationError("slot_f1: length mismatch at sample " + std::to_string(i));
    }
    const auto p = data::bio_spans_lenient(predicted[i]);
    const auto g = data::bio_spans_lenient(gold[i]);
    const std::set<data::Span> gold_set(g.begin(), g.end());
    r.predicted += p.size();
    r.gold += g.size();
    for (const auto& span : p) r.correct += gold_set.count(span);
  }
  r.precision = ratio(r.correct, r.predicted);
  r.recall = ratio(r.correct, r.gold);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

double intent_accuracy(std::span<const std::string> predicted, std::span<const std::string> gold) {
  if (predicted.size() != gold.size()) throw ValidationError("intent_accuracy: prediction count mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += predicted[i] == gold[i];
  return ratio(hits, gold.size());
}

double overall_accuracy(std::span<const Prediction> predicted, std::span<const data::Sample> gold) {
  if (predicted.size() != gold.size()) throw ValidationError("overall_accuracy: prediction count mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i].slots.size() != gold[i].slot_labels.size()) {
      throw ValidationError("overall_accuracy: length mismatch at sample " + std::to_string(i));
    }
    hits += predicted[i].intent == gold[i].intent && predicted[i].slots == gold[i].slot_labels;
  }
  return ratio(hits, gold.size());
}

MetricsReport compute_report(std::span<const Prediction> predicted, std::span<const data::Sample> gold) {
  if (predicted.size() != gold.size()) throw ValidationError("report: prediction count mismatch");
  std::vector<std::vector<std::string>> pred_slots, gold_slots;
  std::vector<std::string> pred_intents, gold_intents;
  MetricsReport r;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    pred_slots.push_back(predicted[i].slots);
    gold_slots.push_back(gold[i].slot_labels);
    pred_intents.push_back(predicted[i].intent);
    gold_intents.push_back(gold[i].intent);
    ++r.confusion[gold[i].intent][predicted[i].intent];
  }
  const auto prf = slot_f1(pred_slots, gold_slots);
  r.slot_precision = prf.precision;
  r.slot_recall = prf.recall;
  r.slot_f1 = prf.f1;
  r.intent_accuracy = intent_accuracy(pred_intents, gold_intents);
  r.overall_accuracy = overall_accuracy(predicted, gold);
  r.n_samples = gold.size();
  return r;
}

std::vector<Prediction> predict_all(const model::SluModel& model, std::span<const data::Sample> samples) {
  std::vector<Prediction> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    auto [intent, slots] = model.predict(s);
    out.push_back({std::move(intent), std::move(slots)});
  }
  return out;
}

MetricsReport evaluate(const model::SluModel& model, std::span<const data::Sample> samples) {
  const auto predictions = predict_all(model, samples);
  return compute_report(predictions, samples);
}

nlohmann::json report_to_json(const MetricsReport& r) {
  return {{"slot_precision", r.slot_precision}, {"slot_recall", r.slot_recall},
          {"slot_f1", r.slot_f1},               {"intent_accuracy", r.intent_accuracy},
          {"overall_accuracy", r.overall_accuracy}, {"n_samples", r.n_samples},
          {"confusion", r.confusion}};
}

std::string report_table(std::span<const std::pair<std::string, MetricsReport>> rows) {
  std::size_t width = 5;
  for (const auto& [name, r] : rows) width = std::max(width, name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width) + 2) << "Model" << std::right << std::setw(10) << "Slot F1"
      << std::setw(12) << "Intent Acc" << std::setw(13) << "Overall Acc" << std::setw(8) << "n" << "\n";
  out << std::fixed << std::setprecision(2);
  for (const auto& [name, r] : rows) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << name << std::right << std::setw(10)
        << 100.0 * r.slot_f1 << std::setw(12) << 100.0 * r.intent_accuracy << std::setw(13)
        << 100.0 * r.overall_accuracy << std::setw(8) << r.n_samples << "\n";
  }
  return out.str();
}

}  // namespace ctxslu::eval
