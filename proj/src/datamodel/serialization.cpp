#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "ctxslu/datamodel.hpp"
#include "ctxslu/errors.hpp"

namespace ctxslu::data {

using nlohmann::json;

json sample_to_json(const Sample& s) {
  json kg = json::array();
  for (const auto& entity : s.kg) {
    json pairs = json::array();
    for (const auto& pair : entity.pairs) pairs.push_back(json::array({pair.key, pair.values}));
    kg.push_back({{"pairs", std::move(pairs)}, {"entity_type", to_string(entity.entity_type)}});
  }
  return json{{"tokens", s.tokens},   {"slots", s.slot_labels}, {"intent", s.intent},
              {"kg", std::move(kg)},  {"up", s.up},             {"ca", s.ca},
              {"case_kind", to_string(s.case_kind)}};
}

namespace {

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + name + "'");
  return *it;
}

std::vector<std::string> strings(const json& j, const char* what) {
  if (!j.is_array()) throw ValidationError(std::string(what) + " must be an array of strings");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& item : j) {
    if (!item.is_string()) throw ValidationError(std::string(what) + " must contain only strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<double> numbers(const json& j, const char* what) {
  if (!j.is_array()) throw ValidationError(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& item : j) {
    if (!item.is_number()) throw ValidationError(std::string(what) + " must contain only numbers");
    out.push_back(item.get<double>());
  }
  return out;
}

}  // namespace

Sample sample_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("record is not an object");
  static constexpr const char* kFields[] = {"tokens", "slots", "intent", "kg", "up", "ca", "case_kind"};
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(std::begin(kFields), std::end(kFields), [&](const char* f) { return key == f; }) ==
        std::end(kFields)) {
      throw ValidationError("unexpected field '" + key + "'");
    }
  }
  Sample s;
  s.tokens = strings(field(j, "tokens"), "tokens");
  s.slot_labels = strings(field(j, "slots"), "slots");
  const json& intent = field(j, "intent");
  if (!intent.is_string()) throw ValidationError("intent must be a string");
  s.intent = intent.get<std::string>();
  const json& kg = field(j, "kg");
  if (!kg.is_array()) throw ValidationError("kg must be an array");
  for (const auto& e : kg) {
    if (!e.is_object()) throw ValidationError("kg entries must be objects");
    KgEntity entity;
    const json& type = field(e, "entity_type");
    if (!type.is_string()) throw ValidationError("entity_type must be a string");
    entity.entity_type = parse_entity_type(type.get<std::string>());
    const json& pairs = field(e, "pairs");
    if (!pairs.is_array()) throw ValidationError("pairs must be an array");
    for (const auto& p : pairs) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_string()) {
        throw ValidationError("each kg pair must be [key, [values]]");
      }
      entity.pairs.push_back(KgPair{p[0].get<std::string>(), strings(p[1], "kg values")});
    }
    s.kg.push_back(std::move(entity));
  }
  s.up = numbers(field(j, "up"), "up");
  s.ca = numbers(field(j, "ca"), "ca");
  const json& kind = field(j, "case_kind");
  if (!kind.is_string()) throw ValidationError("case_kind must be a string");
  s.case_kind = parse_case_kind(kind.get<std::string>());
  return s;
}

std::string serialize_sample(const Sample& s) { return sample_to_json(s).dump(); }

Sample parse_sample(std::string_view line, std::size_t line_number, const ProfileSchema& schema) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_number, std::string("malformed record: ") + e.what());
  }
  try {
    Sample s = sample_from_json(j);
    validate_sample(s, schema);
    return s;
  } catch (const ValidationError& e) {
    throw ValidationError("line " + std::to_string(line_number) + ": " + e.what());
  }
}

std::vector<Sample> parse_dataset(std::istream& in, const ProfileSchema& schema) {
  std::vector<Sample> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(parse_sample(line, number, schema));
  }
  return out;
}

void write_dataset(std::ostream& out, std::span<const Sample> samples) {
  for (const auto& s : samples) out << serialize_sample(s) << '\n';
}

std::vector<Sample> read_dataset_file(const std::filesystem::path& path, const ProfileSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file " + path.string());
  return parse_dataset(in, schema);
}

void write_dataset_file(const std::filesystem::path& path, std::span<const Sample> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write dataset file " + path.string());
  write_dataset(out, samples);
  if (!out) throw ValidationError("write failed for " + path.string());
}

namespace {

json items_to_json(std::span<const ProfileItem> items) {
  json out = json::array();
  for (const auto& item : items) out.push_back({{"name", item.name}, {"labels", item.labels}});
  return out;
}

std::vector<ProfileItem> items_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ValidationError(std::string(what) + " must be an array");
  std::vector<ProfileItem> items;
  for (const auto& item : j) {
    if (!item.is_object() || !field(item, "name").is_string()) {
      throw ValidationError(std::string(what) + " entries need a name");
    }
    items.push_back({item["name"].get<std::string>(), strings(field(item, "labels"), "labels")});
    if (items.back().labels.empty()) throw ValidationError("profile item '" + items.back().name + "' has no labels");
  }
  return items;
}

}  // namespace

json schema_to_json(const ProfileSchema& schema) {
  return json{{"up_items", items_to_json(schema.up_items)},
              {"ca_items", items_to_json(schema.ca_items)},
              {"u", schema.u()},
              {"c", schema.c()}};
}

ProfileSchema schema_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("schema is not an object");
  ProfileSchema schema{items_from_json(field(j, "up_items"), "up_items"),
                       items_from_json(field(j, "ca_items"), "ca_items")};
  if (j.contains("u") && j["u"].get<std::size_t>() != schema.u()) throw ValidationError("schema u disagrees with items");
  if (j.contains("c") && j["c"].get<std::size_t>() != schema.c()) throw ValidationError("schema c disagrees with items");
  return schema;
}

}  // namespace ctxslu::data
