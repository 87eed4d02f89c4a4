#include "ctxslu/datamodel.hpp"
#include "ctxslu/errors.hpp"

namespace ctxslu::data {

Vocabulary::Vocabulary(bool reserve_unknown) : reserve_unknown_(reserve_unknown) {
  if (reserve_unknown_) add(std::string(kUnknown));
}

std::size_t Vocabulary::add(const std::string& label) {
  auto [it, inserted] = index_.try_emplace(label, labels_.size());
  if (inserted) labels_.push_back(label);
  return it->second;
}

std::optional<std::size_t> Vocabulary::find(std::string_view label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::index_or_unknown(std::string_view label) const { return find(label).value_or(0); }

std::size_t Vocabulary::index(std::string_view label) const {
  auto found = find(label);
  if (!found) throw IndexError("label '" + std::string(label) + "' is not in the vocabulary");
  return *found;
}

const std::string& Vocabulary::label(std::size_t i) const {
  if (i >= labels_.size()) {
    throw IndexError("vocabulary index " + std::to_string(i) + " out of range " + std::to_string(labels_.size()));
  }
  return labels_[i];
}

Vocabularies build_vocabularies(std::span<const Sample> train) {
  if (train.empty()) throw DomainError("cannot build vocabularies from an empty training set");
  Vocabularies v;
  for (const auto& s : train) {
    for (const auto& tok : s.tokens) v.tokens.add(tok);
    v.intents.add(s.intent);
    for (const auto& label : s.slot_labels) v.slots.add(label);
    for (const auto& entity : s.kg) {
      for (const auto& tok : entity.linearize()) v.kg_tokens.add(tok);
    }
  }
  return v;
}

namespace {

nlohmann::json vocab_json(const Vocabulary& v) {
  return {{"reserve_unknown", v.reserves_unknown()}, {"labels", v.labels()}};
}

Vocabulary vocab_from(const nlohmann::json& j) {
  Vocabulary v(j.at("reserve_unknown").get<bool>());
  const auto& labels = j.at("labels");
  std::size_t i = 0;
  for (const auto& label : labels) {
    const auto text = label.get<std::string>();
    if (i++ == 0 && v.reserves_unknown()) {
      if (text != Vocabulary::kUnknown) throw ValidationError("vocabulary must start with <unk>");
      continue;
    }
    if (v.add(text) != v.size() - 1) throw ValidationError("duplicate vocabulary label '" + text + "'");
  }
  return v;
}

}  // namespace

nlohmann::json vocabularies_to_json(const Vocabularies& v) {
  return {{"tokens", vocab_json(v.tokens)},
          {"intents", vocab_json(v.intents)},
          {"slots", vocab_json(v.slots)},
          {"kg_tokens", vocab_json(v.kg_tokens)}};
}

Vocabularies vocabularies_from_json(const nlohmann::json& j) {
  try {
    return Vocabularies{vocab_from(j.at("tokens")), vocab_from(j.at("intents")), vocab_from(j.at("slots")),
                        vocab_from(j.at("kg_tokens"))};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed vocabularies: ") + e.what());
  }
}

}  // namespace ctxslu::data
