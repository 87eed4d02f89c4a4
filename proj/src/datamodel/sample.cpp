#include <cmath>
#include <utility>

#include "ctxslu/datamodel.hpp"
#include "ctxslu/errors.hpp"

namespace ctxslu::data {

std::string_view to_string(EntityType type) {
  switch (type) {
    case EntityType::kMusic: return "music";
    case EntityType::kVideo: return "video";
    case EntityType::kAudiobook: return "audiobook";
    case EntityType::kLocation: return "location";
    case EntityType::kOther: return "other";
  }
  return "other";
}

EntityType parse_entity_type(std::string_view name) {
  for (auto t : {EntityType::kMusic, EntityType::kVideo, EntityType::kAudiobook, EntityType::kLocation,
                 EntityType::kOther}) {
    if (to_string(t) == name) return t;
  }
  throw ValidationError("unknown entity type '" + std::string(name) + "'");
}

std::string_view to_string(CaseKind kind) {
  return kind == CaseKind::kMention ? "mention" : "description";
}

CaseKind parse_case_kind(std::string_view name) {
  if (name == "mention") return CaseKind::kMention;
  if (name == "description") return CaseKind::kDescription;
  throw ValidationError("unknown case_kind '" + std::string(name) + "'");
}

std::vector<std::string> KgEntity::linearize() const {
  std::vector<std::string> out;
  for (const auto& pair : pairs) {
    out.push_back(pair.key);
    out.insert(out.end(), pair.values.begin(), pair.values.end());
  }
  return out;
}

const KgPair* KgEntity::find(std::string_view key) const {
  for (const auto& pair : pairs) {
    if (pair.key == key) return &pair;
  }
  return nullptr;
}

// ---- profiles -----------------------------------------------------------------

std::size_t ProfileSchema::u() const { return offset(up_items, up_items.size()); }
std::size_t ProfileSchema::c() const { return offset(ca_items, ca_items.size()); }

std::size_t ProfileSchema::offset(std::span<const ProfileItem> items, std::size_t index) {
  std::size_t off = 0;
  for (std::size_t i = 0; i < index && i < items.size(); ++i) off += items[i].labels.size();
  return off;
}

std::size_t ProfileSchema::offset(std::span<const ProfileItem> items, std::string_view item_name) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].name == item_name) return offset(items, i);
  }
  throw IndexError("unknown profile item '" + std::string(item_name) + "'");
}

std::size_t ProfileSchema::label_index(std::span<const ProfileItem> items, std::string_view item_name,
                                       std::string_view label) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].name != item_name) continue;
    for (std::size_t k = 0; k < items[i].labels.size(); ++k) {
      if (items[i].labels[k] == label) return offset(items, i) + k;
    }
  }
  throw IndexError("unknown profile label '" + std::string(item_name) + "." + std::string(label) + "'");
}

namespace {

void check_block(std::span<const double> block, const std::string& name) {
  double total = 0.0;
  for (double v : block) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("profile item '" + name + "' has a negative or non-finite entry");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw ValidationError("profile item '" + name + "' sums to " + std::to_string(total) + ", expected 1");
  }
}

}  // namespace

std::vector<double> flatten_profile(std::span<const std::vector<double>> items,
                                    std::span<const ProfileItem> schema) {
  if (!schema.empty() && schema.size() != items.size()) {
    throw ValidationError("expected " + std::to_string(schema.size()) + " profile items, got " +
                          std::to_string(items.size()));
  }
  std::vector<double> flat;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string name = schema.empty() ? "#" + std::to_string(i) : schema[i].name;
    if (!schema.empty() && items[i].size() != schema[i].labels.size()) {
      throw ValidationError("profile item '" + name + "' has " + std::to_string(items[i].size()) +
                            " entries, expected " + std::to_string(schema[i].labels.size()));
    }
    check_block(items[i], name);
    flat.insert(flat.end(), items[i].begin(), items[i].end());
  }
  return flat;
}

void validate_profile(std::span<const double> flat, std::span<const ProfileItem> schema,
                      std::string_view what) {
  const std::size_t expected = ProfileSchema::offset(schema, schema.size());
  if (flat.size() != expected) {
    throw ValidationError(std::string(what) + " has length " + std::to_string(flat.size()) +
                          ", expected " + std::to_string(expected));
  }
  std::size_t off = 0;
  for (const auto& item : schema) {
    check_block(flat.subspan(off, item.labels.size()), std::string(what) + "." + item.name);
    off += item.labels.size();
  }
}

// ---- BIO ----------------------------------------------------------------------------

namespace {

struct BioTag {
  char prefix;  // 'B', 'I' or 'O'
  std::string_view body;
};

std::optional<BioTag> split_tag(std::string_view label) {
  if (label == "O") return BioTag{'O', {}};
  if (label.size() > 2 && (label[0] == 'B' || label[0] == 'I') && label[1] == '-') {
    return BioTag{label[0], label.substr(2)};
  }
  return std::nullopt;
}

std::vector<Span> extract(std::span<const std::string> labels, bool strict) {
  std::vector<Span> spans;
  std::optional<Span> open;
  auto close = [&] {
    if (open) spans.push_back(*std::exchange(open, std::nullopt));
  };
  for (std::size_t t = 0; t < labels.size(); ++t) {
    auto tag = split_tag(labels[t]);
    if (!tag) {
      if (strict) throw ValidationError("invalid BIO label '" + labels[t] + "' at position " + std::to_string(t));
      close();
      continue;
    }
    if (tag->prefix == 'O') {
      close();
    } else if (tag->prefix == 'B') {
      close();
      open = Span{t, t, std::string(tag->body)};
    } else if (open && open->label == tag->body) {
      open->end = t;
    } else {
      if (strict) {
        throw ValidationError("I-" + std::string(tag->body) + " at position " + std::to_string(t) +
                              " does not continue a span of the same label");
      }
      close();
      open = Span{t, t, std::string(tag->body)};
    }
  }
  close();
  return spans;
}

}  // namespace

std::vector<Span> bio_spans(std::span<const std::string> labels) { return extract(labels, true); }

std::vector<Span> bio_spans_lenient(std::span<const std::string> labels) { return extract(labels, false); }

bool is_valid_bio(std::span<const std::string> labels) {
  try {
    extract(labels, true);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

std::vector<std::string> render_bio(std::span<const Span> spans, std::size_t length) {
  std::vector<std::string> labels(length, "O");
  for (const auto& s : spans) {
    if (s.start > s.end || s.end >= length) throw IndexError("span out of range");
    labels[s.start] = "B-" + s.label;
    for (std::size_t t = s.start + 1; t <= s.end; ++t) labels[t] = "I-" + s.label;
  }
  return labels;
}

void validate_sample(const Sample& s, const ProfileSchema& schema) {
  if (s.tokens.empty()) throw ValidationError("sample has no tokens");
  if (s.tokens.size() != s.slot_labels.size()) {
    throw ValidationError("slot label count " + std::to_string(s.slot_labels.size()) +
                          " does not match token count " + std::to_string(s.tokens.size()));
  }
  for (const auto& tok : s.tokens) {
    if (tok.empty()) throw ValidationError("empty token");
  }
  if (s.intent.empty()) throw ValidationError("empty intent");
  for (const auto& span : bio_spans(s.slot_labels)) {
    if (span.label.rfind(s.intent + ".", 0) != 0) {
      throw ValidationError("slot label body '" + span.label + "' is not qualified by intent '" + s.intent + "'");
    }
  }
  for (std::size_t e = 0; e < s.kg.size(); ++e) {
    const auto& entity = s.kg[e];
    if (!entity.find("subject") || !entity.find("type")) {
      throw ValidationError("kg entity " + std::to_string(e) + " lacks a 'subject' or 'type' key");
    }
    if (entity.linearize().empty()) throw ValidationError("kg entity " + std::to_string(e) + " is empty");
  }
  validate_profile(s.up, schema.up_items, "up");
  validate_profile(s.ca, schema.ca_items, "ca");
}

}  // namespace ctxslu::data
