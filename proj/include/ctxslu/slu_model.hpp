#pragma once

// Joint intent detection and slot filling with a knowledge adapter that
// mixes KG, UP and CA encodings into the intent head (sentence level) and
// into every step of the slot decoder (word level).

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ctxslu/datamodel.hpp"
#include "ctxslu/diffcore.hpp"
#include "ctxslu/profile_encoders.hpp"

namespace ctxslu::model {

enum class FusionMode { kHierarchical, kConcat, kMlp };

std::string_view to_string(FusionMode mode);
/// Throws ConfigError.
FusionMode parse_fusion_mode(std::string_view name);

struct ModelConfig {
  std::size_t d_emb = 32;
  std::size_t d_r = 64;  // BiLSTM output, d_r/2 per direction
  std::size_t d_a = 32;  // self-attention width
  std::size_t d_i = 32;  // supporting-information width
  std::size_t d_int = 16;
  std::size_t d_slot = 16;
  std::size_t h_s = 64;  // slot decoder hidden size
  std::size_t kg_token_cap = 64;
  FusionMode fusion = FusionMode::kHierarchical;
  bool use_sentence_adapter = true;
  bool use_word_adapter = true;
  bool use_profile = true;
  std::uint64_t init_seed = 1;

  std::size_t d() const { return d_r + d_a; }
  /// Throws ConfigError on inconsistent sizes.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const nlohmann::json& j);

/// A sample mapped onto vocabulary indices.
struct EncodedSample {
  std::vector<std::size_t> tokens;
  std::vector<EntityTokens> kg;
  std::vector<double> up;
  std::vector<double> ca;
  std::optional<std::size_t> intent;            // absent when unseen in training
  std::vector<std::optional<std::size_t>> slots;  // per token; absent when unseen
};

EncodedSample encode_sample(const data::Sample& sample, const data::Vocabularies& vocab, std::size_t kg_token_cap);

// ---- building blocks ------------------------------------------------------------

struct EncoderOutput {
  diff::Var e;          // [T, d]
  diff::Var attention;  // [T, T]
};

/// Embedding -> BiLSTM -> scaled dot-product self-attention; e_t joins the
/// BiLSTM state and the attention output.
EncoderOutput encode_utterance(diff::Graph& g, std::span<const std::size_t> token_ids);

struct Attended {
  diff::Var value;
  diff::Var weights;
};

/// g = sum_t alpha_t e_t with alpha = softmax(E w_g).
Attended sentence_summary(diff::Var e, diff::Var w_g);
/// alpha_i = softmax_i(q W h_i), q' = sum_i alpha_i h_i, with h_i the rows of H_info [3, d_i].
Attended knowledge_adapter(diff::Var q, diff::Var h_info, diff::Var w);
diff::Var fuse_concat(diff::Var h_info_flat, diff::Var proj);
diff::Var fuse_mlp(diff::Var h_info_flat, diff::Var w1, diff::Var b1, diff::Var w2, diff::Var b2);

/// Index of the largest value; lowest index wins ties.
std::size_t argmax(std::span<const double> values);

// ---- the model ------------------------------------------------------------------

enum class DecodeMode { kGreedy, kTeacherForced };

struct ForwardOptions {
  DecodeMode mode = DecodeMode::kGreedy;
  double dropout = 0.0;
  Rng* dropout_rng = nullptr;  // required when dropout > 0
};

struct ModelOutput {
  diff::Var intent_probs;
  std::size_t predicted_intent = 0;
  std::vector<diff::Var> slot_probs;
  std::vector<std::size_t> predicted_slots;

  // Inspection copies.
  std::vector<std::vector<double>> encoder_attention;  // rows of [T, T]
  std::vector<double> summary_weights;                 // alpha over tokens
  std::vector<double> sentence_info_weights;           // adapter alpha, empty unless hierarchical
  std::vector<std::vector<double>> word_info_weights;  // per token
};

class SluModel {
 public:
  /// Creates freshly initialized parameters from cfg.init_seed.
  SluModel(ModelConfig cfg, data::Vocabularies vocab, std::size_t u, std::size_t c);

  const ModelConfig& config() const { return cfg_; }
  const data::Vocabularies& vocab() const { return vocab_; }
  diff::ParameterStore& params() { return params_; }
  const diff::ParameterStore& params() const { return params_; }
  std::size_t u() const { return u_; }
  std::size_t c() const { return c_; }
  std::size_t n_intents() const { return vocab_.intents.size(); }
  std::size_t n_slots() const { return vocab_.slots.size(); }

  EncodedSample encode(const data::Sample& sample) const { return encode_sample(sample, vocab_, cfg_.kg_token_cap); }

  /// Teacher forcing needs gold slots for every token; unseen gold labels
  /// raise IndexError.
  ModelOutput forward(diff::Graph& g, const EncodedSample& sample, const ForwardOptions& options = {}) const;

  /// Greedy prediction as label strings.
  std::pair<std::string, std::vector<std::string>> predict(const data::Sample& sample) const;

 private:
  void create_params();

  ModelConfig cfg_;
  data::Vocabularies vocab_;
  std::size_t u_;
  std::size_t c_;
  diff::ParameterStore params_;
};

// ---- checkpoints ----------------------------------------------------------------

inline constexpr std::string_view kCheckpointFormat = "ctxslu-checkpoint";
inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_text(const SluModel& model);
/// Throws VersionError for wrong format/version or a malformed file.
SluModel checkpoint_from_text(std::string_view text);
void save_checkpoint(const SluModel& model, const std::filesystem::path& path);
SluModel load_checkpoint(const std::filesystem::path& path);

}  // namespace ctxslu::model
