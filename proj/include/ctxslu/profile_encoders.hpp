#pragma once

// Fixed-size encodings of the three supporting sources: KG entity lists
// through a BiLSTM with mean pooling, UP and CA vectors through linear maps.

#include <cstddef>
#include <span>
#include <vector>

#include "ctxslu/diffcore.hpp"

namespace ctxslu::model {

struct ProfileEncoderDims {
  std::size_t kg_vocab = 1;
  std::size_t d_emb = 32;
  std::size_t d_i = 32;  // must be even: d_i/2 per direction
  std::size_t u = 11;
  std::size_t c = 15;
};

/// Creates kg.embedding, kg.fwd.*, kg.bwd.*, up.W and ca.W.
void add_profile_encoder_params(diff::ParameterStore& store, const ProfileEncoderDims& dims, Rng& rng);

/// Token ids of one linearized entity, truncated to `cap` tokens.
using EntityTokens = std::vector<std::size_t>;

/// BiLSTM over each entity's tokens; the final state is the forward final
/// hidden state joined with the backward final hidden state. Entities are
/// mean-pooled. An empty list gives a zero vector of length d_i.
diff::Var encode_kg(diff::Graph& g, std::span<const EntityTokens> entities, std::size_t d_i);

/// h = W^T x without bias.
diff::Var project_up(diff::Graph& g, diff::Var x_up);
diff::Var project_ca(diff::Graph& g, diff::Var x_ca);

}  // namespace ctxslu::model
