#pragma once

// Synthetic generator of group-ambiguous utterances. Text identifies only an
// intent group; the gold intent inside the group is recoverable from the
// attached KG / UP / CA information through gold_intent_oracle.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxslu/datamodel.hpp"
#include "ctxslu/rng.hpp"

namespace ctxslu::gen {

using data::EntityType;
using data::KgEntity;
using data::ProfileSchema;
using data::Sample;

/// Token template. A part "{slot}" is filled from the slot's value pool,
/// "{*slot}" with an ambiguous mention from the toy KG; anything else is a
/// literal token.
using Template = std::vector<std::string>;

struct IntentGroup {
  std::string name;
  std::vector<std::string> intents;
  std::vector<Template> description_templates;
  std::vector<Template> mention_templates;
  /// Entity types a mention used by this group must own.
  EntityType mention_kind = EntityType::kLocation;
};

struct IntentCatalog {
  std::vector<IntentGroup> groups;
  std::map<std::string, std::vector<std::vector<std::string>>> value_pools;
  /// Slots whose label body is taken from the "category" pair of the
  /// location entity attached to the filled value.
  std::map<std::string, std::vector<std::string>> category_slots;
  /// Pool slots whose values are themselves KG entities of the given type.
  std::map<std::string, EntityType> entity_pools;

  std::vector<std::string> intents() const;
  std::size_t group_index(std::string_view intent) const;
  const IntentGroup& group_of(std::string_view intent) const;
  /// Every slot label the generator can emit, "O" first, then per intent
  /// B-/I- labels in catalog order.
  std::vector<std::string> label_inventory() const;
};

IntentCatalog default_catalog();

struct UpFactor {
  std::string item;
  std::string label;
};

/// Score multiplier 1 - (1 - multiplier) * ca[item.label].
struct CaRule {
  std::string item;
  std::string label;
  double multiplier = 1.0;
};

struct IntentRules {
  std::vector<UpFactor> up_factors;
  std::vector<CaRule> ca_rules;
  /// Context categories the generator favors for this gold intent.
  std::vector<UpFactor> ca_preferences;
  std::optional<EntityType> required_type;
};

struct HeuristicTables {
  std::string version;
  std::map<std::string, IntentRules> rules;
  const IntentRules& at(std::string_view intent) const;
};

HeuristicTables default_tables();
ProfileSchema default_schema();

struct Mention {
  std::vector<std::string> tokens;
  std::vector<KgEntity> entities;
};

struct ToyKg {
  std::vector<Mention> media;   // music + video + audiobook entities
  std::vector<Mention> places;  // location entity + a decoy
  std::vector<std::string> value_tokens;
};

ToyKg build_toy_kg();

/// Everything the generator needs, bundled.
struct World {
  ProfileSchema schema;
  IntentCatalog catalog;
  HeuristicTables tables;
  ToyKg kg;
};

World default_world();

// ---- oracle -------------------------------------------------------------------

bool kg_feasible(const IntentRules& rules, std::span<const KgEntity> kg);

struct OracleResult {
  std::string intent;
  std::vector<double> scores;  // aligned with the group's intents
  double best = 0.0;
  double runner_up = 0.0;
  std::size_t feasible = 0;
  /// A lone KG-feasible member always wins; otherwise best > runner_up * (1 + margin).
  bool resolved(double margin) const { return feasible == 1 || best > runner_up * (1.0 + margin); }
};

/// Scores every member of `group` and returns the argmax over KG-feasible
/// members (lowest index on ties).
OracleResult gold_intent_oracle(const IntentGroup& group, std::span<const KgEntity> kg,
                                std::span<const double> up, std::span<const double> ca,
                                const HeuristicTables& tables, const ProfileSchema& schema);

/// Oracle replay on a stored sample.
OracleResult replay_oracle(const Sample& sample, const World& world);

/// Bayes-optimal intent accuracy of a classifier that sees only the tokens,
/// under uniform intent sampling.
double text_only_ceiling(const IntentCatalog& catalog);

// ---- sampling -----------------------------------------------------------------

/// Point of the simplex whose `gold` coordinate is Uniform(0.45, 0.8) and
/// whose remainder is split uniformly among the other coordinates.
void biased_simplex(Rng& rng, std::span<double> out, std::size_t gold);

struct DrawOptions {
  double margin = 0.1;
  std::size_t max_rejections = 100;
};

Sample sample_description_case(Rng& rng, const World& world, const std::string& intent,
                               const DrawOptions& options = {});
/// `mention` overrides the random choice; it must own the intent's required type.
Sample sample_mention_case(Rng& rng, const World& world, const std::string& intent,
                           const DrawOptions& options = {}, const Mention* mention = nullptr);

// ---- datasets -----------------------------------------------------------------

struct GeneratorConfig {
  std::size_t n_samples = 3000;
  std::uint64_t seed = 1;
  double mention_ratio = 2.0 / 3.0;
  double margin = 0.1;
  std::size_t max_rejections = 100;
  double train_fraction = 0.8;
  double valid_fraction = 0.1;
  double test_fraction = 0.1;

  /// Throws ConfigError.
  void validate() const;
};

/// Deterministic case schedule: sample k is a mention case iff
/// floor((k+1) r) > floor(k r).
bool is_mention_slot(std::size_t k, double mention_ratio);

struct GeneratedDataset {
  std::vector<Sample> train;
  std::vector<Sample> valid;
  std::vector<Sample> test;
  std::size_t size() const { return train.size() + valid.size() + test.size(); }
};

GeneratedDataset generate_dataset(const GeneratorConfig& cfg, const World& world);

/// Table of counts per intent, case kind and split.
std::string stats_report(const GeneratedDataset& data, const World& world);
nlohmann::json stats_json(const GeneratedDataset& data, const World& world);

/// schema.json with the profile layout and the intent/slot inventories.
nlohmann::json schema_description(const World& world);

/// Writes train/valid/test.jsonl, schema.json, stats.txt and stats.json.
void write_dataset_dir(const std::filesystem::path& dir, const GeneratedDataset& data, const World& world);

}  // namespace ctxslu::gen
