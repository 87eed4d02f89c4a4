#include <fstream>
#include <sstream>

#include "ctxslu/errors.hpp"
#include "ctxslu/slu_model.hpp"

namespace ctxslu::model {

using nlohmann::json;

std::string checkpoint_text(const SluModel& model) {
  json params = json::array();
  const auto& store = model.params();
  for (auto id : store.ids()) {
    const auto& t = store.tensor(id);
    params.push_back({{"name", store.name(id)}, {"shape", t.shape}, {"values", t.values}});
  }
  json j{{"format", kCheckpointFormat},
         {"version", kCheckpointVersion},
         {"config", config_to_json(model.config())},
         {"u", model.u()},
         {"c", model.c()},
         {"vocab", data::vocabularies_to_json(model.vocab())},
         {"params", std::move(params)}};
  return j.dump() + "\n";
}

SluModel checkpoint_from_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw VersionError(std::string("checkpoint is not readable: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != kCheckpointFormat) throw VersionError("not a checkpoint file");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw VersionError("checkpoint version " + j.at("version").dump() + " is not supported (expected " +
                         std::to_string(kCheckpointVersion) + ")");
    }
    SluModel model(config_from_json(j.at("config")), data::vocabularies_from_json(j.at("vocab")),
                   j.at("u").get<std::size_t>(), j.at("c").get<std::size_t>());
    auto& store = model.params();
    const auto& params = j.at("params");
    if (params.size() != store.size()) throw VersionError("checkpoint parameter list does not match its config");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& entry = params[i];
      const auto id = store.ids()[i];
      auto& tensor = store.tensor(id);
      if (entry.at("name").get<std::string>() != store.name(id) ||
          entry.at("shape").get<diff::Shape>() != tensor.shape) {
        throw VersionError("checkpoint parameter " + entry.at("name").dump() + " does not match the model layout");
      }
      auto values = entry.at("values").get<std::vector<double>>();
      if (values.size() != tensor.values.size()) throw VersionError("checkpoint parameter size mismatch");
      tensor.values = std::move(values);
    }
    return model;
  } catch (const json::exception& e) {
    throw VersionError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw VersionError(std::string("checkpoint config is invalid: ") + e.what());
  } catch (const ValidationError& e) {
    throw VersionError(std::string("checkpoint vocabulary is invalid: ") + e.what());
  }
}

void save_checkpoint(const SluModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << checkpoint_text(model);
  if (!out) throw ValidationError("cannot write checkpoint " + path.string());
}

SluModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_text(buffer.str());
}

}  // namespace ctxslu::model
