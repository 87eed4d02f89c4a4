#include "ctxslu/profile_encoders.hpp"

#include "ctxslu/errors.hpp"

namespace ctxslu::model {

using namespace ctxslu::diff;

void add_profile_encoder_params(ParameterStore& store, const ProfileEncoderDims& dims, Rng& rng) {
  if (dims.d_i == 0 || dims.d_i % 2 != 0) throw DimensionError("d_i must be a positive even number");
  store.add("kg.embedding", {dims.kg_vocab, dims.d_emb}, Init::kXavier, rng);
  add_lstm_params(store, "kg.fwd", dims.d_emb, dims.d_i / 2, rng);
  add_lstm_params(store, "kg.bwd", dims.d_emb, dims.d_i / 2, rng);
  store.add("up.W", {dims.u, dims.d_i}, Init::kXavier, rng);
  store.add("ca.W", {dims.c, dims.d_i}, Init::kXavier, rng);
}

namespace {

LstmState zero_state(Graph& g, std::size_t h) {
  return {g.constant(Tensor::zeros({h})), g.constant(Tensor::zeros({h}))};
}

}  // namespace

Var encode_kg(Graph& g, std::span<const EntityTokens> entities, std::size_t d_i) {
  if (entities.empty()) return g.constant(Tensor::zeros({d_i}));
  const Var table = g.param("kg.embedding");
  const LstmParams fwd = lstm_params(g, "kg.fwd");
  const LstmParams bwd = lstm_params(g, "kg.bwd");
  if (fwd.hidden_size * 2 != d_i) throw DimensionError("kg encoder hidden size does not match d_i");
  std::vector<Var> finals;
  finals.reserve(entities.size());
  for (const auto& ids : entities) {
    if (ids.empty()) throw ValidationError("kg entity linearizes to no tokens");
    std::vector<Var> inputs;
    inputs.reserve(ids.size());
    for (std::size_t id : ids) inputs.push_back(embedding_lookup(table, id));
    LstmState f = zero_state(g, fwd.hidden_size);
    for (const Var& x : inputs) f = lstm_step(fwd, x, f);
    LstmState b = zero_state(g, bwd.hidden_size);
    for (auto it = inputs.rbegin(); it != inputs.rend(); ++it) b = lstm_step(bwd, *it, b);
    finals.push_back(concat({f.h, b.h}));
  }
  if (finals.size() == 1) return finals.front();
  Var total = finals.front();
  for (std::size_t i = 1; i < finals.size(); ++i) total = add(total, finals[i]);
  return scale(total, 1.0 / static_cast<double>(finals.size()));
}

Var project_up(Graph& g, Var x_up) { return vecmat(x_up, g.param("up.W")); }

Var project_ca(Graph& g, Var x_ca) { return vecmat(x_ca, g.param("ca.W")); }

}  // namespace ctxslu::model
