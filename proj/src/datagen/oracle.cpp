#include <algorithm>
#include <map>
#include <set>

#include "ctxslu/datagen.hpp"
#include "ctxslu/errors.hpp"

namespace ctxslu::gen {

bool kg_feasible(const IntentRules& rules, std::span<const KgEntity> kg) {
  if (!rules.required_type || kg.empty()) return true;
  return std::any_of(kg.begin(), kg.end(), [&](const KgEntity& e) { return e.entity_type == *rules.required_type; });
}

OracleResult gold_intent_oracle(const IntentGroup& group, std::span<const KgEntity> kg,
                                std::span<const double> up, std::span<const double> ca,
                                const HeuristicTables& tables, const ProfileSchema& schema) {
  if (up.size() != schema.u() || ca.size() != schema.c()) {
    throw DimensionError("profile vectors do not match the schema");
  }
  OracleResult result;
  std::vector<bool> feasible;
  for (const auto& intent : group.intents) {
    const IntentRules& rules = tables.at(intent);
    double score = 1.0;
    for (const auto& f : rules.up_factors) score *= up[ProfileSchema::label_index(schema.up_items, f.item, f.label)];
    for (const auto& r : rules.ca_rules) {
      score *= 1.0 - (1.0 - r.multiplier) * ca[ProfileSchema::label_index(schema.ca_items, r.item, r.label)];
    }
    const bool ok = kg_feasible(rules, kg);
    result.feasible += ok;
    feasible.push_back(ok);
    result.scores.push_back(ok ? score : 0.0);
  }
  // Infeasible members compete only when nothing is feasible.
  const bool any = result.feasible > 0;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < result.scores.size(); ++i) {
    if (any && !feasible[i]) continue;
    if (!best || result.scores[i] > result.scores[*best]) best = i;
  }
  result.intent = group.intents[*best];
  result.best = result.scores[*best];
  for (std::size_t i = 0; i < result.scores.size(); ++i) {
    if (i != *best && (!any || feasible[i])) result.runner_up = std::max(result.runner_up, result.scores[i]);
  }
  return result;
}

OracleResult replay_oracle(const Sample& sample, const World& world) {
  return gold_intent_oracle(world.catalog.group_of(sample.intent), sample.kg, sample.up, sample.ca, world.tables,
                            world.schema);
}

// Enumerates template skeletons: every intent of a group realizes the same
// token skeleton, so a text-only classifier can at best pick one intent per
// skeleton. Mention cases are weighted 2:1 against descriptions.
double text_only_ceiling(const IntentCatalog& catalog) {
  const auto intents = catalog.intents();
  if (intents.empty()) return 0.0;
  const double p_intent = 1.0 / static_cast<double>(intents.size());
  std::map<std::string, std::map<std::string, double>> mass;  // skeleton -> intent -> probability
  for (const auto& group : catalog.groups) {
    const std::pair<const std::vector<Template>*, double> cases[] = {{&group.description_templates, 1.0 / 3.0},
                                                                     {&group.mention_templates, 2.0 / 3.0}};
    for (const auto& [templates, p_case] : cases) {
      for (const auto& tmpl : *templates) {
        std::string key;
        for (const auto& part : tmpl) key += part + ' ';
        for (const auto& intent : group.intents) {
          mass[key][intent] += p_intent * p_case / static_cast<double>(templates->size());
        }
      }
    }
  }
  double ceiling = 0.0;
  for (const auto& [key, by_intent] : mass) {
    double best = 0.0;
    for (const auto& [intent, p] : by_intent) best = std::max(best, p);
    ceiling += best;
  }
  return ceiling;
}

}  // namespace ctxslu::gen
