#include <algorithm>
#include <cstdio>

#include "ctxslu/datagen.hpp"
#include "ctxslu/errors.hpp"

namespace ctxslu::gen {

namespace {

Template words(std::initializer_list<const char*> parts) { return Template(parts.begin(), parts.end()); }

std::vector<std::vector<std::string>> pool(std::initializer_list<std::initializer_list<const char*>> values) {
  std::vector<std::vector<std::string>> out;
  for (const auto& v : values) out.emplace_back(v.begin(), v.end());
  return out;
}

// Slot name of a template part, or nullopt for literal tokens.
std::optional<std::string> slot_of(const std::string& part) {
  if (part.size() < 3 || part.front() != '{' || part.back() != '}') return std::nullopt;
  const std::size_t start = part[1] == '*' ? 2 : 1;
  return part.substr(start, part.size() - start - 1);
}

}  // namespace

std::vector<std::string> IntentCatalog::intents() const {
  std::vector<std::string> out;
  for (const auto& g : groups) out.insert(out.end(), g.intents.begin(), g.intents.end());
  return out;
}

std::size_t IntentCatalog::group_index(std::string_view intent) const {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (std::find(groups[g].intents.begin(), groups[g].intents.end(), intent) != groups[g].intents.end()) return g;
  }
  throw IndexError("intent '" + std::string(intent) + "' is not in the catalog");
}

const IntentGroup& IntentCatalog::group_of(std::string_view intent) const { return groups[group_index(intent)]; }

std::vector<std::string> IntentCatalog::label_inventory() const {
  std::vector<std::string> labels{"O"};
  for (const auto& g : groups) {
    std::vector<std::string> bodies;
    for (const auto* list : {&g.description_templates, &g.mention_templates}) {
      for (const auto& tmpl : *list) {
        for (const auto& part : tmpl) {
          auto slot = slot_of(part);
          if (!slot) continue;
          auto cat = category_slots.find(*slot);
          if (cat == category_slots.end()) {
            bodies.push_back(*slot);
          } else {
            bodies.insert(bodies.end(), cat->second.begin(), cat->second.end());
          }
        }
      }
    }
    std::vector<std::string> unique;
    for (const auto& b : bodies) {
      if (std::find(unique.begin(), unique.end(), b) == unique.end()) unique.push_back(b);
    }
    for (const auto& intent : g.intents) {
      for (const auto& b : unique) {
        labels.push_back("B-" + intent + "." + b);
        labels.push_back("I-" + intent + "." + b);
      }
    }
  }
  return labels;
}

IntentCatalog default_catalog() {
  IntentCatalog c;
  c.groups.push_back({"Play",
                      {"PlayMusic", "PlayVideo", "PlayAudioBook"},
                      {words({"play", "some", "{genre}"}), words({"put", "on", "some", "{genre}", "for", "me"}),
                       words({"i", "am", "in", "the", "mood", "for", "{genre}"})},
                      {words({"play", "{*name}"}), words({"please", "play", "{*name}"}),
                       words({"put", "on", "{*name}", "for", "me"})},
                      EntityType::kMusic});
  c.groups.push_back({"SearchMedia",
                      {"SearchMusic", "SearchVideo", "SearchAudioBook"},
                      {words({"search", "for", "some", "{genre}"}), words({"find", "me", "new", "{genre}"}),
                       words({"what", "{genre}", "is", "popular"})},
                      {words({"search", "for", "{*name}"}), words({"look", "up", "{*name}"}),
                       words({"find", "{*name}"})},
                      EntityType::kMusic});
  c.groups.push_back({"SearchLocation",
                      {"SearchLocation", "SearchLocationOntheway"},
                      {words({"find", "a", "{poi_type}", "nearby"}),
                       words({"where", "is", "the", "nearest", "{poi_type}"}), words({"i", "need", "a", "{poi_type}"})},
                      {words({"take", "me", "to", "{*place}"}), words({"navigate", "to", "{*place}"}),
                       words({"where", "is", "{*place}"})},
                      EntityType::kLocation});
  c.groups.push_back({"SearchRoute",
                      {"SearchMetroRoute", "SearchBusRoute", "SearchDriveRoute"},
                      {words({"how", "do", "i", "get", "from", "{origin}", "to", "{destination}"}),
                       words({"show", "me", "the", "way", "to", "{destination}"}),
                       words({"route", "to", "{destination}", "please"})},
                      {words({"how", "do", "i", "get", "to", "{*destination}"}),
                       words({"fastest", "way", "from", "{origin}", "to", "{*destination}"}),
                       words({"directions", "to", "{*destination}"})},
                      EntityType::kLocation});
  c.groups.push_back({"SearchTicket",
                      {"SearchTrainTicket", "SearchFlightTicket", "SearchCoachTicket"},
                      {words({"book", "a", "ticket", "from", "{origin}", "to", "{destination}", "{date}"}),
                       words({"i", "need", "to", "travel", "to", "{destination}", "{date}"}),
                       words({"get", "me", "a", "ticket", "to", "{destination}"})},
                      {words({"book", "a", "ticket", "to", "{*destination}", "{date}"}),
                       words({"tickets", "from", "{origin}", "to", "{*destination}"}),
                       words({"i", "am", "going", "to", "{*destination}", "{date}"})},
                      EntityType::kLocation});

  // Genre words are shared by all media types so they reveal nothing.
  c.value_pools["genre"] = pool({{"jazz"}, {"classic", "rock"}, {"comedy"}, {"science", "fiction"}, {"folk"},
                                 {"crime", "drama"}, {"history"}, {"soft", "pop"}, {"mystery"}, {"bedtime", "stories"}});
  c.value_pools["poi_type"] = pool({{"coffee", "shop"}, {"gas", "station"}, {"restaurant"}, {"pharmacy"},
                                    {"parking", "lot"}, {"bank"}, {"hotel"}, {"book", "store"}});
  c.value_pools["date"] = pool({{"tomorrow"}, {"next", "friday"}, {"on", "monday"}, {"this", "weekend"}, {"tonight"},
                                {"next", "week"}});
  const auto places = pool({{"central", "station"}, {"airport"}, {"city", "hall"}, {"west", "lake"}, {"old", "town"},
                            {"harbor", "bridge"}, {"stadium"}, {"university"}, {"east", "market"}, {"river", "park"}});
  c.value_pools["origin"] = places;
  c.value_pools["destination"] = places;
  c.category_slots["place"] = {"poi", "area"};
  c.entity_pools["origin"] = EntityType::kLocation;
  c.entity_pools["destination"] = EntityType::kLocation;
  return c;
}

ProfileSchema default_schema() {
  return ProfileSchema{{{"media_preference", {"music", "video", "audiobook"}},
                        {"route_preference", {"subway", "bus", "drive"}},
                        {"ticket_preference", {"train", "flight", "coach"}},
                        {"has_car", {"true", "false"}}},
                       {{"movement", {"stationary", "walking", "running", "driving", "on_aircraft"}},
                        {"posture", {"standing", "sitting", "lying"}},
                        {"location", {"home", "office", "outdoors", "station"}},
                        {"connectivity", {"wifi", "cellular", "offline"}}}};
}

const IntentRules& HeuristicTables::at(std::string_view intent) const {
  auto it = rules.find(std::string(intent));
  if (it == rules.end()) throw IndexError("no heuristic rules for intent '" + std::string(intent) + "'");
  return it->second;
}

HeuristicTables default_tables() {
  HeuristicTables t;
  t.version = "heuristics-1";
  const IntentRules music{{{"media_preference", "music"}}, {}, {}, EntityType::kMusic};
  const IntentRules video{{{"media_preference", "video"}},
                          {{"movement", "running", 0.1}, {"movement", "driving", 0.2}},
                          {{"movement", "stationary"}, {"posture", "sitting"}, {"posture", "lying"}, {"location", "home"}},
                          EntityType::kVideo};
  const IntentRules audiobook{{{"media_preference", "audiobook"}},
                              {{"movement", "running", 0.5}},
                              {},
                              EntityType::kAudiobook};
  t.rules["PlayMusic"] = music;
  t.rules["PlayVideo"] = video;
  t.rules["PlayAudioBook"] = audiobook;
  t.rules["SearchMusic"] = music;
  t.rules["SearchVideo"] = video;
  t.rules["SearchAudioBook"] = audiobook;

  t.rules["SearchLocation"] = {{},
                               {{"movement", "driving", 0.15}, {"movement", "walking", 0.4}},
                               {{"movement", "stationary"}},
                               EntityType::kLocation};
  t.rules["SearchLocationOntheway"] = {{},
                                       {{"movement", "stationary", 0.15}, {"location", "home", 0.4}},
                                       {{"movement", "walking"}, {"movement", "driving"}},
                                       EntityType::kLocation};

  const CaRule airborne{"movement", "on_aircraft", 0.1};
  t.rules["SearchMetroRoute"] = {{{"route_preference", "subway"}}, {airborne}, {}, EntityType::kLocation};
  t.rules["SearchBusRoute"] = {{{"route_preference", "bus"}}, {airborne}, {}, EntityType::kLocation};
  t.rules["SearchDriveRoute"] = {
      {{"route_preference", "drive"}, {"has_car", "true"}}, {airborne}, {}, EntityType::kLocation};

  const CaRule offline{"connectivity", "offline", 0.3};
  t.rules["SearchTrainTicket"] = {{{"ticket_preference", "train"}}, {offline}, {}, EntityType::kLocation};
  t.rules["SearchFlightTicket"] = {{{"ticket_preference", "flight"}}, {offline}, {}, EntityType::kLocation};
  t.rules["SearchCoachTicket"] = {{{"ticket_preference", "coach"}}, {offline}, {}, EntityType::kLocation};
  return t;
}

// ---- toy knowledge graph -----------------------------------------------------

namespace {

std::string_view type_token(EntityType type) {
  switch (type) {
    case EntityType::kMusic: return "song";
    case EntityType::kVideo: return "film";
    case EntityType::kAudiobook: return "audiobook";
    case EntityType::kLocation: return "place";
    case EntityType::kOther: return "brand";
  }
  return "brand";
}

std::vector<std::string> attribute_keys(EntityType type) {
  switch (type) {
    case EntityType::kMusic: return {"artist", "album", "year"};
    case EntityType::kVideo: return {"director", "studio", "year"};
    case EntityType::kAudiobook: return {"narrator", "author", "year"};
    case EntityType::kLocation: return {"city", "district"};
    case EntityType::kOther: return {"owner", "founded"};
  }
  return {};
}

KgEntity make_entity(Rng& rng, const std::vector<std::string>& subject, EntityType type,
                     const std::vector<std::string>& value_tokens) {
  KgEntity e;
  e.entity_type = type;
  e.pairs.push_back({"subject", subject});
  e.pairs.push_back({"type", {std::string(type_token(type))}});
  auto keys = attribute_keys(type);
  shuffle(keys, rng);
  const std::size_t extra = 1 + uniform_index(rng, 2);
  for (std::size_t k = 0; k < extra && k < keys.size(); ++k) {
    std::vector<std::string> values;
    const std::size_t n = 1 + uniform_index(rng, 2);
    for (std::size_t v = 0; v < n; ++v) values.push_back(value_tokens[uniform_index(rng, value_tokens.size())]);
    e.pairs.push_back({keys[k], std::move(values)});
  }
  return e;
}

}  // namespace

ToyKg build_toy_kg() {
  ToyKg kg;
  for (int i = 0; i < 200; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "v%03d", i);
    kg.value_tokens.emplace_back(buf);
  }
  Rng rng = make_rng(0x6b67, 0);

  const std::vector<std::string> singles{"aurora", "nocturne", "evergreen", "horizon", "lullaby", "odyssey"};
  const std::vector<std::string> adjectives{"silent", "blue", "golden", "midnight", "wild",
                                            "lost", "paper", "distant", "broken", "summer"};
  const std::vector<std::string> nouns{"river", "garden", "city", "dream", "road", "heart", "island", "echo"};
  std::vector<std::vector<std::string>> names;
  for (const auto& s : singles) names.push_back({s});
  std::vector<std::vector<std::string>> pairs;
  for (const auto& a : adjectives) {
    for (const auto& n : nouns) pairs.push_back({a, n});
  }
  shuffle(pairs, rng);
  names.insert(names.end(), pairs.begin(), pairs.begin() + 30);
  for (const auto& name : names) {
    Mention m{name, {}};
    for (auto type : {EntityType::kMusic, EntityType::kVideo, EntityType::kAudiobook}) {
      m.entities.push_back(make_entity(rng, name, type, kg.value_tokens));
    }
    kg.media.push_back(std::move(m));
  }

  const std::vector<std::string> first{"maple", "lotus", "pine", "stone", "harbor", "cedar"};
  const std::vector<std::string> second{"square", "plaza", "gate", "corner", "view"};
  for (const auto& a : first) {
    for (const auto& b : second) {
      Mention m{{a, b}, {}};
      m.entities.push_back(make_entity(rng, m.tokens, EntityType::kLocation, kg.value_tokens));
      m.entities.push_back(make_entity(rng, m.tokens, EntityType::kOther, kg.value_tokens));
      kg.places.push_back(std::move(m));
    }
  }
  return kg;
}

World default_world() { return World{default_schema(), default_catalog(), default_tables(), build_toy_kg()}; }

}  // namespace ctxslu::gen
