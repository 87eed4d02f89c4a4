#include "ctxslu/errors.hpp"
#include "ctxslu/slu_model.hpp"

namespace ctxslu::model {

using namespace ctxslu::diff;

std::string_view to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kHierarchical: return "hierarchical";
    case FusionMode::kConcat: return "concat";
    case FusionMode::kMlp: return "mlp";
  }
  return "hierarchical";
}

FusionMode parse_fusion_mode(std::string_view name) {
  for (auto m : {FusionMode::kHierarchical, FusionMode::kConcat, FusionMode::kMlp}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown fusion mode '" + std::string(name) + "' (hierarchical, concat, mlp)");
}

void ModelConfig::validate() const {
  for (auto [name, value] : {std::pair{"d_emb", d_emb}, {"d_r", d_r}, {"d_a", d_a}, {"d_i", d_i}, {"d_int", d_int},
                             {"d_slot", d_slot}, {"h_s", h_s}, {"kg_token_cap", kg_token_cap}}) {
    if (value == 0) throw ConfigError(std::string(name) + " must be positive");
  }
  if (d_r % 2 != 0) throw ConfigError("d_r must be even");
  if (d_i % 2 != 0) throw ConfigError("d_i must be even");
}

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return {{"d_emb", cfg.d_emb},
          {"d_r", cfg.d_r},
          {"d_a", cfg.d_a},
          {"d_i", cfg.d_i},
          {"d_int", cfg.d_int},
          {"d_slot", cfg.d_slot},
          {"h_s", cfg.h_s},
          {"kg_token_cap", cfg.kg_token_cap},
          {"fusion", to_string(cfg.fusion)},
          {"use_sentence_adapter", cfg.use_sentence_adapter},
          {"use_word_adapter", cfg.use_word_adapter},
          {"use_profile", cfg.use_profile},
          {"init_seed", cfg.init_seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.d_emb = j.at("d_emb").get<std::size_t>();
  cfg.d_r = j.at("d_r").get<std::size_t>();
  cfg.d_a = j.at("d_a").get<std::size_t>();
  cfg.d_i = j.at("d_i").get<std::size_t>();
  cfg.d_int = j.at("d_int").get<std::size_t>();
  cfg.d_slot = j.at("d_slot").get<std::size_t>();
  cfg.h_s = j.at("h_s").get<std::size_t>();
  cfg.kg_token_cap = j.at("kg_token_cap").get<std::size_t>();
  cfg.fusion = parse_fusion_mode(j.at("fusion").get<std::string>());
  cfg.use_sentence_adapter = j.at("use_sentence_adapter").get<bool>();
  cfg.use_word_adapter = j.at("use_word_adapter").get<bool>();
  cfg.use_profile = j.at("use_profile").get<bool>();
  cfg.init_seed = j.at("init_seed").get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

EncodedSample encode_sample(const data::Sample& s, const data::Vocabularies& vocab, std::size_t kg_token_cap) {
  EncodedSample out;
  for (const auto& tok : s.tokens) out.tokens.push_back(vocab.tokens.index_or_unknown(tok));
  for (const auto& entity : s.kg) {
    EntityTokens ids;
    for (const auto& tok : entity.linearize()) {
      if (ids.size() == kg_token_cap) break;
      ids.push_back(vocab.kg_tokens.index_or_unknown(tok));
    }
    out.kg.push_back(std::move(ids));
  }
  out.up = s.up;
  out.ca = s.ca;
  out.intent = vocab.intents.find(s.intent);
  for (const auto& label : s.slot_labels) out.slots.push_back(vocab.slots.find(label));
  return out;
}

SluModel::SluModel(ModelConfig cfg, data::Vocabularies vocab, std::size_t u, std::size_t c)
    : cfg_(cfg), vocab_(std::move(vocab)), u_(u), c_(c) {
  cfg_.validate();
  if (vocab_.intents.size() == 0 || vocab_.slots.size() == 0) throw ConfigError("empty intent or slot vocabulary");
  create_params();
}

void SluModel::create_params() {
  Rng rng = make_rng(cfg_.init_seed, 0x5eed);
  const std::size_t d = cfg_.d();
  auto& p = params_;
  p.add("enc.embedding", {vocab_.tokens.size(), cfg_.d_emb}, Init::kXavier, rng);
  add_lstm_params(p, "enc.fwd", cfg_.d_emb, cfg_.d_r / 2, rng);
  add_lstm_params(p, "enc.bwd", cfg_.d_emb, cfg_.d_r / 2, rng);
  p.add("enc.Q", {cfg_.d_r, cfg_.d_a}, Init::kXavier, rng);
  p.add("enc.K", {cfg_.d_r, cfg_.d_a}, Init::kXavier, rng);
  p.add("enc.V", {cfg_.d_r, cfg_.d_a}, Init::kXavier, rng);
  p.add("head.w_g", {d}, Init::kXavier, rng);
  p.add("head.W_I", {n_intents(), d + cfg_.d_i}, Init::kXavier, rng);
  p.add("dec.intent_emb", {n_intents(), cfg_.d_int}, Init::kXavier, rng);
  p.add("dec.slot_emb", {n_slots() + 1, cfg_.d_slot}, Init::kXavier, rng);  // last row: start
  add_lstm_params(p, "dec.lstm", d + cfg_.d_int + cfg_.d_slot + cfg_.d_i, cfg_.h_s, rng);
  p.add("dec.W_S", {n_slots(), cfg_.h_s}, Init::kXavier, rng);
  if (!cfg_.use_profile) return;

  add_profile_encoder_params(p, {vocab_.kg_tokens.size(), cfg_.d_emb, cfg_.d_i, u_, c_}, rng);
  const bool any_adapter = cfg_.use_sentence_adapter || cfg_.use_word_adapter;
  switch (cfg_.fusion) {
    case FusionMode::kHierarchical:
      if (cfg_.use_sentence_adapter) p.add("adapter.W_sent", {d, cfg_.d_i}, Init::kXavier, rng);
      if (cfg_.use_word_adapter) p.add("adapter.W_word", {d, cfg_.d_i}, Init::kXavier, rng);
      break;
    case FusionMode::kConcat:
      if (any_adapter) p.add("fuse.proj", {3 * cfg_.d_i, cfg_.d_i}, Init::kXavier, rng);
      break;
    case FusionMode::kMlp:
      if (any_adapter) {
        p.add("fuse.W1", {cfg_.d_i, 3 * cfg_.d_i}, Init::kXavier, rng);
        p.add("fuse.b1", {cfg_.d_i}, Init::kZeros, rng);
        p.add("fuse.W2", {cfg_.d_i, cfg_.d_i}, Init::kXavier, rng);
        p.add("fuse.b2", {cfg_.d_i}, Init::kZeros, rng);
      }
      break;
  }
}

namespace {

std::vector<double> copy(Var v) {
  auto s = v.values();
  return {s.begin(), s.end()};
}

Var dropout_mask(Graph& g, Var x, double rate, Rng& rng) {
  Tensor mask = Tensor::zeros(x.shape());
  const double keep = 1.0 / (1.0 - rate);
  for (double& m : mask.values) m = uniform01(rng) < rate ? 0.0 : keep;
  return mul(x, g.constant(std::move(mask)));
}

}  // namespace

ModelOutput SluModel::forward(Graph& g, const EncodedSample& sample, const ForwardOptions& options) const {
  const std::size_t n = sample.tokens.size();
  const bool teacher = options.mode == DecodeMode::kTeacherForced;
  if (teacher && sample.slots.size() != n) {
    throw DimensionError("teacher forcing needs " + std::to_string(n) + " gold slots, got " +
                         std::to_string(sample.slots.size()));
  }
  const bool drop = options.dropout > 0.0;
  if (drop && !options.dropout_rng) throw StateError("dropout requested without an RNG");
  if (options.dropout < 0.0 || options.dropout >= 1.0) throw DomainError("dropout rate must lie in [0, 1)");

  ModelOutput out;
  const EncoderOutput enc = encode_utterance(g, sample.tokens);
  for (std::size_t t = 0; t < n; ++t) {
    auto r = row(enc.attention, t).values();
    out.encoder_attention.emplace_back(r.begin(), r.end());
  }
  Var e = enc.e;
  if (drop) e = dropout_mask(g, e, options.dropout, *options.dropout_rng);

  const Attended summary = sentence_summary(e, g.param("head.w_g"));
  out.summary_weights = copy(summary.weights);

  const Var zero_info = g.constant(Tensor::zeros({cfg_.d_i}));
  Var h_info, fused;
  if (cfg_.use_profile) {
    if (sample.up.size() != u_ || sample.ca.size() != c_) throw DimensionError("profile vectors do not match the model");
    const Var h_kg = encode_kg(g, sample.kg, cfg_.d_i);
    const Var h_up = project_up(g, g.constant(Tensor::vector(sample.up)));
    const Var h_ca = project_ca(g, g.constant(Tensor::vector(sample.ca)));
    const Var parts[] = {h_kg, h_up, h_ca};
    if (cfg_.fusion == FusionMode::kHierarchical) {
      h_info = stack_rows(parts);
    } else if (cfg_.use_sentence_adapter || cfg_.use_word_adapter) {
      const Var flat = concat(parts);
      fused = cfg_.fusion == FusionMode::kConcat
                  ? fuse_concat(flat, g.param("fuse.proj"))
                  : fuse_mlp(flat, g.param("fuse.W1"), g.param("fuse.b1"), g.param("fuse.W2"), g.param("fuse.b2"));
    }
  }

  Var s_info = zero_info;
  if (cfg_.use_profile && cfg_.use_sentence_adapter) {
    if (cfg_.fusion == FusionMode::kHierarchical) {
      const Attended a = knowledge_adapter(summary.value, h_info, g.param("adapter.W_sent"));
      s_info = a.value;
      out.sentence_info_weights = copy(a.weights);
    } else {
      s_info = fused;
    }
  }

  out.intent_probs = softmax(matvec(g.param("head.W_I"), concat({summary.value, s_info})));
  out.predicted_intent = argmax(out.intent_probs.values());

  const Var intent_vec = embedding_lookup(g.param("dec.intent_emb"), out.predicted_intent);
  const Var slot_table = g.param("dec.slot_emb");
  const Var w_word = cfg_.use_profile && cfg_.use_word_adapter && cfg_.fusion == FusionMode::kHierarchical
                         ? g.param("adapter.W_word")
                         : Var{};
  const LstmParams dec = lstm_params(g, "dec.lstm");
  const Var w_s = g.param("dec.W_S");
  LstmState state{g.constant(Tensor::zeros({cfg_.h_s})), g.constant(Tensor::zeros({cfg_.h_s}))};
  std::size_t prev = n_slots();  // start row
  for (std::size_t t = 0; t < n; ++t) {
    const Var e_t = row(e, t);
    Var info = zero_info;
    if (cfg_.use_profile && cfg_.use_word_adapter) {
      if (w_word.valid()) {
        const Attended a = knowledge_adapter(e_t, h_info, w_word);
        info = a.value;
        out.word_info_weights.push_back(copy(a.weights));
      } else {
        info = fused;
      }
    }
    Var input = concat({e_t, intent_vec, embedding_lookup(slot_table, prev), info});
    if (drop) input = dropout_mask(g, input, options.dropout, *options.dropout_rng);
    state = lstm_step(dec, input, state);
    const Var probs = softmax(matvec(w_s, state.h));
    out.slot_probs.push_back(probs);
    out.predicted_slots.push_back(argmax(probs.values()));
    if (teacher) {
      if (!sample.slots[t]) throw IndexError("gold slot label at position " + std::to_string(t) + " is not in the vocabulary");
      prev = *sample.slots[t];
    } else {
      prev = out.predicted_slots.back();
    }
  }
  return out;
}

std::pair<std::string, std::vector<std::string>> SluModel::predict(const data::Sample& sample) const {
  Graph g(params_);
  const ModelOutput out = forward(g, encode(sample));
  std::vector<std::string> slots;
  for (std::size_t id : out.predicted_slots) slots.push_back(vocab_.slots.label(id));
  return {vocab_.intents.label(out.predicted_intent), std::move(slots)};
}

}  // namespace ctxslu::model
