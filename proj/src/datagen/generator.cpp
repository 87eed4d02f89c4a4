#include <algorithm>
#include <array>
#include <set>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ctxslu/datagen.hpp"
#include "ctxslu/errors.hpp"

namespace ctxslu::gen {

void biased_simplex(Rng& rng, std::span<double> out, std::size_t gold) {
  if (out.size() == 1) {
    out[0] = 1.0;
    return;
  }
  const double g = uniform(rng, 0.45, 0.8);
  std::vector<double> rest(out.size() - 1);
  uniform_simplex(rng, rest);
  for (std::size_t i = 0, r = 0; i < out.size(); ++i) out[i] = i == gold ? g : (1.0 - g) * rest[r++];
}

namespace {

struct Draft {
  std::vector<std::string> tokens;
  std::vector<std::string> bodies;  // slot body per token, empty for O
  std::vector<bool> begins;
  std::vector<KgEntity> kg;
};

std::optional<std::pair<std::string, bool>> parse_part(const std::string& part) {
  if (part.size() < 3 || part.front() != '{' || part.back() != '}') return std::nullopt;
  const bool mention = part[1] == '*';
  const std::size_t start = mention ? 2 : 1;
  return std::make_pair(part.substr(start, part.size() - start - 1), mention);
}

void append_span(Draft& d, const std::vector<std::string>& tokens, const std::string& body) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    d.tokens.push_back(tokens[i]);
    d.bodies.push_back(body);
    d.begins.push_back(i == 0);
  }
}

// Fills a template. Consumes the RNG identically for every intent of a group,
// so the text never depends on the gold intent.
Draft realize(Rng& rng, const World& world, const IntentGroup& group, data::CaseKind kind, const Mention* forced) {
  const auto& templates = kind == data::CaseKind::kMention ? group.mention_templates : group.description_templates;
  if (templates.empty()) throw ConfigError("group " + group.name + " has no templates for this case kind");
  const Template& tmpl = templates[uniform_index(rng, templates.size())];
  const auto& catalog = world.catalog;
  Draft d;
  for (const auto& part : tmpl) {
    auto slot = parse_part(part);
    if (!slot) {
      append_span(d, {part}, "");
      continue;
    }
    const auto& [name, is_mention] = *slot;
    auto category = catalog.category_slots.find(name);
    std::string body = name;
    const std::size_t kg_start = d.kg.size();
    if (is_mention) {
      const auto& pool = group.mention_kind == EntityType::kLocation ? world.kg.places : world.kg.media;
      if (pool.empty()) throw ConfigError("toy KG has no mentions for group " + group.name);
      const std::size_t pick = uniform_index(rng, pool.size());
      const Mention& m = forced ? *forced : pool[pick];
      append_span(d, m.tokens, name);
      d.kg.insert(d.kg.end(), m.entities.begin(), m.entities.end());
    } else {
      auto values = catalog.value_pools.find(name);
      if (values == catalog.value_pools.end() || values->second.empty()) {
        throw ConfigError("empty value pool for slot '" + name + "'");
      }
      const auto& value = values->second[uniform_index(rng, values->second.size())];
      append_span(d, value, name);
      auto entity = catalog.entity_pools.find(name);
      if (entity != catalog.entity_pools.end()) {
        d.kg.push_back(KgEntity{{{"subject", value}, {"type", {"place"}}}, entity->second});
      }
    }
    // Every location entity carries a per-draw category; category slots are
    // labelled with it, so the label is only recoverable from the KG.
    static const std::vector<std::string> kCategories{"poi", "area"};
    const auto& categories = category != catalog.category_slots.end() ? category->second : kCategories;
    for (std::size_t e = kg_start; e < d.kg.size(); ++e) {
      if (d.kg[e].entity_type != EntityType::kLocation) continue;
      const std::string c = categories[uniform_index(rng, categories.size())];
      d.kg[e].pairs.push_back({"category", {c}});
      if (category != catalog.category_slots.end()) body = c;
    }
    if (category != catalog.category_slots.end()) {
      for (std::size_t t = d.bodies.size(); t-- > 0 && d.bodies[t] == name;) d.bodies[t] = body;
    }
  }
  return d;
}

void draw_profile(Rng& rng, const World& world, const IntentRules& rules, std::vector<double>& up,
                  std::vector<double>& ca) {
  const auto& schema = world.schema;
  up.assign(schema.u(), 0.0);
  ca.assign(schema.c(), 0.0);
  std::size_t off = 0;
  for (const auto& item : schema.up_items) {
    std::span<double> block(up.data() + off, item.labels.size());
    std::optional<std::size_t> gold;
    for (const auto& f : rules.up_factors) {
      if (f.item == item.name) gold = ProfileSchema::label_index(schema.up_items, f.item, f.label) - off;
    }
    gold ? biased_simplex(rng, block, *gold) : uniform_simplex(rng, block);
    off += item.labels.size();
  }
  off = 0;
  for (const auto& item : schema.ca_items) {
    std::span<double> block(ca.data() + off, item.labels.size());
    std::vector<std::size_t> preferred;
    for (const auto& p : rules.ca_preferences) {
      if (p.item == item.name) preferred.push_back(ProfileSchema::label_index(schema.ca_items, p.item, p.label) - off);
    }
    if (preferred.empty()) {
      uniform_simplex(rng, block);
    } else {
      biased_simplex(rng, block, preferred[uniform_index(rng, preferred.size())]);
    }
    bool penalized = false;
    for (const auto& r : rules.ca_rules) {
      if (r.item != item.name || r.multiplier >= 1.0) continue;
      block[ProfileSchema::label_index(schema.ca_items, r.item, r.label) - off] *= uniform(rng, 0.0, 0.1);
      penalized = true;
    }
    if (penalized) {
      double total = 0.0;
      for (double v : block) total += v;
      for (double& v : block) v /= total;
    }
    off += item.labels.size();
  }
}

Sample draw(Rng& rng, const World& world, const std::string& intent, data::CaseKind kind, const DrawOptions& options,
            const Mention* mention) {
  const IntentGroup& group = world.catalog.group_of(intent);
  const IntentRules& rules = world.tables.at(intent);
  if (mention && rules.required_type &&
      std::none_of(mention->entities.begin(), mention->entities.end(),
                   [&](const KgEntity& e) { return e.entity_type == *rules.required_type; })) {
    throw GenerationError("no mention satisfying intent " + intent);
  }
  Draft d = realize(rng, world, group, kind, mention);
  Sample s;
  s.tokens = d.tokens;
  s.intent = intent;
  s.case_kind = kind;
  for (std::size_t t = 0; t < d.tokens.size(); ++t) {
    s.slot_labels.push_back(d.bodies[t].empty() ? "O" : (d.begins[t] ? "B-" : "I-") + intent + "." + d.bodies[t]);
  }
  s.kg = std::move(d.kg);
  if (!kg_feasible(rules, s.kg)) throw GenerationError("no mention satisfying intent " + intent);
  for (std::size_t attempt = 0; attempt < options.max_rejections; ++attempt) {
    draw_profile(rng, world, rules, s.up, s.ca);
    const auto verdict = gold_intent_oracle(group, s.kg, s.up, s.ca, world.tables, world.schema);
    if (verdict.intent == intent && verdict.resolved(options.margin)) return s;
  }
  throw GenerationError("intent " + intent + " unresolved after " + std::to_string(options.max_rejections) +
                        " profile draws");
}

}  // namespace

Sample sample_description_case(Rng& rng, const World& world, const std::string& intent, const DrawOptions& options) {
  return draw(rng, world, intent, data::CaseKind::kDescription, options, nullptr);
}

Sample sample_mention_case(Rng& rng, const World& world, const std::string& intent, const DrawOptions& options,
                           const Mention* mention) {
  return draw(rng, world, intent, data::CaseKind::kMention, options, mention);
}

// ---- datasets -------------------------------------------------------------------

void GeneratorConfig::validate() const {
  if (n_samples == 0) throw ConfigError("n_samples must be positive");
  if (!(mention_ratio > 0.0 && mention_ratio < 1.0)) throw ConfigError("mention_ratio must lie in (0, 1)");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw ConfigError("margin must be non-negative");
  if (max_rejections == 0) throw ConfigError("max_rejections must be positive");
  for (double f : {train_fraction, valid_fraction, test_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("split fractions must lie in [0, 1]");
  }
  if (std::abs(train_fraction + valid_fraction + test_fraction - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

bool is_mention_slot(std::size_t k, double r) {
  constexpr double kSlack = 1e-9;  // keeps r = 2/3 from rounding below an integer
  const double kd = static_cast<double>(k);
  return std::floor((kd + 1.0) * r + kSlack) > std::floor(kd * r + kSlack);
}

GeneratedDataset generate_dataset(const GeneratorConfig& cfg, const World& world) {
  cfg.validate();
  const auto intents = world.catalog.intents();
  if (intents.empty()) throw ConfigError("catalog has no intents");

  std::vector<bool> mention(cfg.n_samples);
  std::size_t n_mention = 0;
  for (std::size_t k = 0; k < cfg.n_samples; ++k) n_mention += (mention[k] = is_mention_slot(k, cfg.mention_ratio));

  // Balanced intent lists per case kind, shuffled once.
  Rng schedule_rng = make_rng(cfg.seed, 0);
  auto balanced = [&](std::size_t count) {
    std::vector<std::size_t> list(count);
    for (std::size_t i = 0; i < count; ++i) list[i] = i % intents.size();
    shuffle(list, schedule_rng);
    return list;
  };
  const auto description_order = balanced(cfg.n_samples - n_mention);
  const auto mention_order = balanced(n_mention);

  const DrawOptions options{cfg.margin, cfg.max_rejections};
  const double fractions[3] = {cfg.train_fraction, cfg.valid_fraction, cfg.test_fraction};
  std::vector<std::array<std::size_t, 3>> per_intent(intents.size(), {0, 0, 0});
  GeneratedDataset out;
  std::vector<Sample>* splits[3] = {&out.train, &out.valid, &out.test};
  std::size_t next_description = 0, next_mention = 0;
  for (std::size_t k = 0; k < cfg.n_samples; ++k) {
    Rng rng = make_rng(cfg.seed ^ k, 1);
    const std::size_t intent = mention[k] ? mention_order[next_mention++] : description_order[next_description++];
    Sample s = mention[k] ? sample_mention_case(rng, world, intents[intent], options)
                          : sample_description_case(rng, world, intents[intent], options);
    // Per-intent stratification: give the sample to the split furthest
    // behind its quota.
    auto& counts = per_intent[intent];
    const double seen = static_cast<double>(counts[0] + counts[1] + counts[2] + 1);
    std::size_t target = 0;
    double deficit = -1e300;
    for (std::size_t sp = 0; sp < 3; ++sp) {
      const double d = fractions[sp] * seen - static_cast<double>(counts[sp]);
      if (d > deficit + 1e-12) {
        deficit = d;
        target = sp;
      }
    }
    ++counts[target];
    splits[target]->push_back(std::move(s));
  }
  return out;
}

// ---- reports --------------------------------------------------------------------

nlohmann::json stats_json(const GeneratedDataset& data, const World& world) {
  nlohmann::json j;
  const std::pair<const char*, const std::vector<Sample>*> splits[] = {
      {"train", &data.train}, {"valid", &data.valid}, {"test", &data.test}};
  nlohmann::json per_intent = nlohmann::json::object();
  for (const auto& intent : world.catalog.intents()) per_intent[intent] = {{"train", 0}, {"valid", 0}, {"test", 0}};
  std::size_t mentions = 0, descriptions = 0;
  std::set<std::string> slot_labels;
  for (const auto& [name, samples] : splits) {
    std::size_t m = 0;
    for (const auto& s : *samples) {
      per_intent[s.intent][name] = per_intent[s.intent][name].get<std::size_t>() + 1;
      m += s.case_kind == data::CaseKind::kMention;
      slot_labels.insert(s.slot_labels.begin(), s.slot_labels.end());
    }
    j["splits"][name] = {{"samples", samples->size()}, {"mention", m}, {"description", samples->size() - m}};
    mentions += m;
    descriptions += samples->size() - m;
  }
  j["per_intent"] = per_intent;
  j["total"] = data.size();
  j["mention"] = mentions;
  j["description"] = descriptions;
  j["intents"] = world.catalog.intents().size();
  j["slot_labels"] = slot_labels.size();
  j["up_items"] = world.schema.up_items.size();
  j["ca_items"] = world.schema.ca_items.size();
  j["u"] = world.schema.u();
  j["c"] = world.schema.c();
  j["text_only_ceiling"] = text_only_ceiling(world.catalog);
  return j;
}

std::string stats_report(const GeneratedDataset& data, const World& world) {
  const auto j = stats_json(data, world);
  auto n = [](const nlohmann::json& v) { return v.get<std::size_t>(); };
  std::ostringstream out;
  out << "#Train " << n(j["splits"]["train"]["samples"]) << "  #Dev " << n(j["splits"]["valid"]["samples"])
      << "  #Test " << n(j["splits"]["test"]["samples"]) << "  #Intents " << n(j["intents"]) << "  #Slots "
      << n(j["slot_labels"]) << "  #UP " << n(j["up_items"]) << "  #CA " << n(j["ca_items"]) << "\n";
  out << "mention:description " << n(j["mention"]) << ":" << n(j["description"]) << "\n";
  out << "text-only intent ceiling " << std::fixed << std::setprecision(4) << j["text_only_ceiling"].get<double>()
      << "\n\n";
  auto row = [&](const std::string& name, std::size_t a, std::size_t b, std::size_t c) {
    out << std::left << std::setw(26) << name << std::right << std::setw(8) << a << std::setw(9) << b << std::setw(13)
        << c << "\n";
  };
  out << std::left << std::setw(26) << "split" << std::right << std::setw(8) << "samples" << std::setw(9) << "mention"
      << std::setw(13) << "description" << "\n";
  for (const char* split : {"train", "valid", "test"}) {
    const auto& r = j["splits"][split];
    row(split, n(r["samples"]), n(r["mention"]), n(r["description"]));
  }
  out << "\n" << std::left << std::setw(26) << "intent" << std::right << std::setw(8) << "train" << std::setw(9)
      << "valid" << std::setw(13) << "test" << "\n";
  for (const auto& intent : world.catalog.intents()) {
    const auto& r = j["per_intent"][intent];
    row(intent, n(r["train"]), n(r["valid"]), n(r["test"]));
  }
  return out.str();
}

nlohmann::json schema_description(const World& world) {
  auto j = data::schema_to_json(world.schema);
  j["intents"] = world.catalog.intents();
  j["slot_labels"] = world.catalog.label_inventory();
  j["heuristics"] = world.tables.version;
  return j;
}

void write_dataset_dir(const std::filesystem::path& dir, const GeneratedDataset& data, const World& world) {
  std::filesystem::create_directories(dir);
  data::write_dataset_file(dir / "train.jsonl", data.train);
  data::write_dataset_file(dir / "valid.jsonl", data.valid);
  data::write_dataset_file(dir / "test.jsonl", data.test);
  auto write_text = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    out << text;
    if (!out) throw ValidationError(std::string("cannot write ") + (dir / name).string());
  };
  write_text("schema.json", schema_description(world).dump(2) + "\n");
  write_text("stats.json", stats_json(data, world).dump(2) + "\n");
  write_text("stats.txt", stats_report(data, world));
}

}  // namespace ctxslu::gen
