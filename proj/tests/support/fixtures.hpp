#pragma once

// Small generated datasets and tiny models shared by the model-level tests.

#include "ctxslu/datagen.hpp"
#include "ctxslu/slu_model.hpp"

namespace ctxslu::testing {

inline const gen::World& world() {
  static const gen::World w = gen::default_world();
  return w;
}

inline gen::GeneratedDataset small_dataset(std::size_t n = 120, std::uint64_t seed = 5) {
  gen::GeneratorConfig cfg;
  cfg.n_samples = n;
  cfg.seed = seed;
  return gen::generate_dataset(cfg, world());
}

inline model::ModelConfig tiny_config() {
  model::ModelConfig cfg;
  cfg.d_emb = 6;
  cfg.d_r = 8;
  cfg.d_a = 4;
  cfg.d_i = 6;
  cfg.d_int = 3;
  cfg.d_slot = 3;
  cfg.h_s = 7;
  return cfg;
}

inline model::SluModel make_model(const std::vector<data::Sample>& train, model::ModelConfig cfg = tiny_config()) {
  return model::SluModel(cfg, data::build_vocabularies(train), world().schema.u(), world().schema.c());
}

/// Nudges every parameter so that zero-initialized biases do not hide bugs.
inline void jitter(diff::ParameterStore& store, std::uint64_t seed, double amount = 0.2) {
  Rng rng = make_rng(seed, 77);
  for (auto id : store.ids()) {
    for (double& v : store.tensor(id).values) v += uniform(rng, -amount, amount);
  }
}

}  // namespace ctxslu::testing
