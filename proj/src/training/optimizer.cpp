#include <cmath>

#include "ctxslu/errors.hpp"
#include "ctxslu/training.hpp"

namespace ctxslu::train {

using namespace ctxslu::diff;

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(l2_lambda >= 0.0)) throw ConfigError("l2_lambda must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

nlohmann::json config_to_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},       {"batch_size", cfg.batch_size}, {"learning_rate", cfg.learning_rate},
          {"beta1", cfg.beta1},         {"beta2", cfg.beta2},           {"epsilon", cfg.epsilon},
          {"l2_lambda", cfg.l2_lambda}, {"dropout", cfg.dropout},       {"seed", cfg.seed},
          {"patience", cfg.patience},   {"greedy_in_training", cfg.greedy_in_training}};
}

std::vector<Var> joint_loss_terms(const model::ModelOutput& output, const model::EncodedSample& gold) {
  if (!gold.intent) throw IndexError("gold intent is not in the vocabulary");
  if (gold.slots.size() != output.slot_probs.size()) throw DimensionError("slot output length does not match gold");
  std::vector<Var> terms{cross_entropy(output.intent_probs, *gold.intent)};
  for (std::size_t t = 0; t < gold.slots.size(); ++t) {
    if (!gold.slots[t]) throw IndexError("gold slot label at position " + std::to_string(t) + " is not in the vocabulary");
    terms.push_back(cross_entropy(output.slot_probs[t], *gold.slots[t]));
  }
  return terms;
}

Var joint_loss(const model::ModelOutput& output, const model::EncodedSample& gold) {
  const auto terms = joint_loss_terms(output, gold);
  Var loss = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) loss = add(loss, terms[i]);
  return loss;
}

void adam_step(ParameterStore& params, const GradientMap& grads, AdamState& state, const TrainConfig& cfg) {
  for (const auto& [index, g] : grads) {
    for (double x : g) {
      if (!std::isfinite(x)) {
        throw NumericError("non-finite gradient in parameter " + params.name(static_cast<ParamId>(index)));
      }
    }
  }
  if (state.m.size() != params.size()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (ParamId id : params.ids()) {
    auto& theta = params.tensor(id).values;
    auto& m = state.m[index_of(id)];
    auto& v = state.v[index_of(id)];
    if (m.size() != theta.size()) {
      m.assign(theta.size(), 0.0);
      v.assign(theta.size(), 0.0);
    }
    const std::vector<double>* g = grads.contains(id) ? &grads.at(id) : nullptr;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g ? (*g)[i] : 0.0;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon) + cfg.learning_rate * cfg.l2_lambda * theta[i];
    }
  }
}

}  // namespace ctxslu::train
