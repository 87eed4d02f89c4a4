#pragma once

// Samples, label vocabularies, profile schemas, BIO spans, and the JSON-lines
// dataset format shared by the generator, the trainer and the evaluator.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace ctxslu::data {

enum class EntityType { kMusic, kVideo, kAudiobook, kLocation, kOther };

std::string_view to_string(EntityType type);
/// Throws ValidationError for unknown names.
EntityType parse_entity_type(std::string_view name);

struct KgPair {
  std::string key;
  std::vector<std::string> values;
  friend bool operator==(const KgPair&, const KgPair&) = default;
};

/// One knowledge-graph entity as ordered key/value pairs.
struct KgEntity {
  std::vector<KgPair> pairs;
  EntityType entity_type = EntityType::kOther;

  /// Key token then value tokens for each pair, pairs in stored order.
  std::vector<std::string> linearize() const;
  const KgPair* find(std::string_view key) const;
  friend bool operator==(const KgEntity&, const KgEntity&) = default;
};

enum class CaseKind { kDescription, kMention };

std::string_view to_string(CaseKind kind);
CaseKind parse_case_kind(std::string_view name);

struct Sample {
  std::vector<std::string> tokens;
  std::vector<std::string> slot_labels;
  std::string intent;
  std::vector<KgEntity> kg;
  std::vector<double> up;
  std::vector<double> ca;
  CaseKind case_kind = CaseKind::kDescription;
  friend bool operator==(const Sample&, const Sample&) = default;
};

struct ProfileItem {
  std::string name;
  std::vector<std::string> labels;
  friend bool operator==(const ProfileItem&, const ProfileItem&) = default;
};

/// Fixed item layout of the flattened user-profile (UP) and
/// context-awareness (CA) vectors.
struct ProfileSchema {
  std::vector<ProfileItem> up_items;
  std::vector<ProfileItem> ca_items;

  std::size_t u() const;
  std::size_t c() const;
  /// Offset of item `index` inside the flattened vector.
  static std::size_t offset(std::span<const ProfileItem> items, std::size_t index);
  static std::size_t offset(std::span<const ProfileItem> items, std::string_view item_name);
  static std::size_t label_index(std::span<const ProfileItem> items, std::string_view item_name,
                                 std::string_view label);
  friend bool operator==(const ProfileSchema&, const ProfileSchema&) = default;
};

inline constexpr double kSimplexTolerance = 1e-9;

/// Concatenates per-item probability blocks in order. Each block must be
/// non-negative and sum to 1 within kSimplexTolerance. When `schema` is
/// given, block lengths are checked and errors name the schema item.
std::vector<double> flatten_profile(std::span<const std::vector<double>> items,
                                    std::span<const ProfileItem> schema = {});

/// Checks that every schema block of `flat` lies on the simplex.
void validate_profile(std::span<const double> flat, std::span<const ProfileItem> schema,
                      std::string_view what);

// ---- BIO spans --------------------------------------------------------------

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  std::string label;
  friend auto operator<=>(const Span&, const Span&) = default;
};

/// Strict extraction: invalid BIO throws ValidationError naming the position.
std::vector<Span> bio_spans(std::span<const std::string> labels);
/// CoNLL-style extraction: a dangling I-X starts a new span of X.
std::vector<Span> bio_spans_lenient(std::span<const std::string> labels);
/// Inverse of bio_spans for non-overlapping spans.
std::vector<std::string> render_bio(std::span<const Span> spans, std::size_t length);
bool is_valid_bio(std::span<const std::string> labels);

/// Throws ValidationError describing the first violated Sample invariant.
void validate_sample(const Sample& sample, const ProfileSchema& schema);

// ---- serialization ------------------------------------------------------------

nlohmann::json sample_to_json(const Sample& sample);
Sample sample_from_json(const nlohmann::json& j);

/// One JSON object on a single line, no trailing newline.
std::string serialize_sample(const Sample& sample);
/// Parses one line; errors carry the line number.
Sample parse_sample(std::string_view line, std::size_t line_number, const ProfileSchema& schema);
std::vector<Sample> parse_dataset(std::istream& in, const ProfileSchema& schema);
void write_dataset(std::ostream& out, std::span<const Sample> samples);

std::vector<Sample> read_dataset_file(const std::filesystem::path& path, const ProfileSchema& schema);
void write_dataset_file(const std::filesystem::path& path, std::span<const Sample> samples);

nlohmann::json schema_to_json(const ProfileSchema& schema);
ProfileSchema schema_from_json(const nlohmann::json& j);

// ---- vocabularies ----------------------------------------------------------------

/// Bijective label <-> index map in first-occurrence order. When built with
/// an unknown slot, index 0 is reserved for padding/unknown items.
class Vocabulary {
 public:
  static constexpr std::string_view kUnknown = "<unk>";

  explicit Vocabulary(bool reserve_unknown = false);

  std::size_t add(const std::string& label);
  std::optional<std::size_t> find(std::string_view label) const;
  /// Unseen labels map to 0.
  std::size_t index_or_unknown(std::string_view label) const;
  /// Throws IndexError for unseen labels.
  std::size_t index(std::string_view label) const;
  const std::string& label(std::size_t index) const;
  std::size_t size() const { return labels_.size(); }
  bool reserves_unknown() const { return reserve_unknown_; }
  const std::vector<std::string>& labels() const { return labels_; }
  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.reserve_unknown_ == b.reserve_unknown_ && a.labels_ == b.labels_;
  }

 private:
  bool reserve_unknown_;
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct Vocabularies {
  Vocabulary tokens{true};
  Vocabulary intents{false};
  Vocabulary slots{false};
  Vocabulary kg_tokens{true};
  friend bool operator==(const Vocabularies&, const Vocabularies&) = default;
};

/// Throws DomainError for an empty training set.
Vocabularies build_vocabularies(std::span<const Sample> train);

nlohmann::json vocabularies_to_json(const Vocabularies& v);
Vocabularies vocabularies_from_json(const nlohmann::json& j);

}  // namespace ctxslu::data
