#include <cmath>

#include "ctxslu/errors.hpp"
#include "ctxslu/slu_model.hpp"

namespace ctxslu::model {

using namespace ctxslu::diff;

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw DomainError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

EncoderOutput encode_utterance(Graph& g, std::span<const std::size_t> token_ids) {
  if (token_ids.empty()) throw DomainError("cannot encode an empty utterance");
  const Var table = g.param("enc.embedding");
  const LstmParams fwd = lstm_params(g, "enc.fwd");
  const LstmParams bwd = lstm_params(g, "enc.bwd");
  const std::size_t n = token_ids.size();
  std::vector<Var> x;
  x.reserve(n);
  for (std::size_t id : token_ids) x.push_back(embedding_lookup(table, id));

  std::vector<Var> forward_states(n), backward_states(n);
  LstmState f{g.constant(Tensor::zeros({fwd.hidden_size})), g.constant(Tensor::zeros({fwd.hidden_size}))};
  for (std::size_t t = 0; t < n; ++t) forward_states[t] = (f = lstm_step(fwd, x[t], f)).h;
  LstmState b{g.constant(Tensor::zeros({bwd.hidden_size})), g.constant(Tensor::zeros({bwd.hidden_size}))};
  for (std::size_t t = n; t-- > 0;) backward_states[t] = (b = lstm_step(bwd, x[t], b)).h;
  std::vector<Var> rows(n);
  for (std::size_t t = 0; t < n; ++t) rows[t] = concat({forward_states[t], backward_states[t]});
  const Var h = stack_rows(rows);

  const Var q = matmul(h, g.param("enc.Q"));
  const Var k = matmul(h, g.param("enc.K"));
  const Var v = matmul(h, g.param("enc.V"));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.shape()[1]));
  const Var attention = softmax_rows(scale(matmul_nt(q, k), inv_sqrt));
  return {concat_cols(h, matmul(attention, v)), attention};
}

Attended sentence_summary(Var e, Var w_g) {
  const Var alpha = softmax(matvec(e, w_g));
  return {vecmat(alpha, e), alpha};
}

Attended knowledge_adapter(Var q, Var h_info, Var w) {
  const Var alpha = softmax(matvec(h_info, vecmat(q, w)));
  return {vecmat(alpha, h_info), alpha};
}

Var fuse_concat(Var h_info_flat, Var proj) { return vecmat(h_info_flat, proj); }

Var fuse_mlp(Var h_info_flat, Var w1, Var b1, Var w2, Var b2) {
  const Var hidden = tanh(add(matvec(w1, h_info_flat), b1));
  return add(matvec(w2, hidden), b2);
}

}  // namespace ctxslu::model
