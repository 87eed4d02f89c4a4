#pragma once

// Span-level slot F1, intent accuracy and sentence-level overall accuracy.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ctxslu/datamodel.hpp"

namespace ctxslu::model {
class SluModel;
}

namespace ctxslu::eval {

struct Prediction {
  std::string intent;
  std::vector<std::string> slots;
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t correct = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

/// Micro-averaged exact span match. Spans come from lenient BIO extraction,
/// so a dangling I-X in a prediction opens a span of X.
PrecisionRecall slot_f1(std::span<const std::vector<std::string>> predicted,
                        std::span<const std::vector<std::string>> gold);
double intent_accuracy(std::span<const std::string> predicted, std::span<const std::string> gold);
/// Intent right and the whole slot sequence identical.
double overall_accuracy(std::span<const Prediction> predicted, std::span<const data::Sample> gold);

struct MetricsReport {
  double slot_precision = 0.0;
  double slot_recall = 0.0;
  double slot_f1 = 0.0;
  double intent_accuracy = 0.0;
  double overall_accuracy = 0.0;
  std::size_t n_samples = 0;
  /// gold intent -> predicted intent -> count
  std::map<std::string, std::map<std::string, std::size_t>> confusion;
};

MetricsReport compute_report(std::span<const Prediction> predicted, std::span<const data::Sample> gold);

/// Greedy decoding, dropout off.
std::vector<Prediction> predict_all(const model::SluModel& model, std::span<const data::Sample> samples);
MetricsReport evaluate(const model::SluModel& model, std::span<const data::Sample> samples);

nlohmann::json report_to_json(const MetricsReport& report);
/// Rows of name + report rendered as an aligned table in percent.
std::string report_table(std::span<const std::pair<std::string, MetricsReport>> rows);

}  // namespace ctxslu::eval
