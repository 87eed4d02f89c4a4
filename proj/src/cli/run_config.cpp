#include "ctxslu/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "ctxslu/errors.hpp"

namespace ctxslu::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& text) {
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) throw ConfigError("'" + text + "' is not a valid number");
  return value;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("'" + text + "' is not true or false");
}

// Shortest text that reads back to the same double.
std::string format_double(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

struct Field {
  const char* name;
  const char* help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define CTXSLU_SIZE(NAME, MEMBER, HELP)                                                                \
  Field {                                                                                              \
    NAME, HELP, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_number<std::size_t>(v); }, \
        [](const RunConfig& c) { return std::to_string(c.MEMBER); }                                    \
  }
#define CTXSLU_REAL(NAME, MEMBER, HELP)                                                           \
  Field {                                                                                         \
    NAME, HELP, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_number<double>(v); }, \
        [](const RunConfig& c) { return format_double(c.MEMBER); }                                \
  }
#define CTXSLU_BOOL(NAME, MEMBER, HELP)                                                  \
  Field {                                                                                \
    NAME, HELP, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_bool(v); }, \
        [](const RunConfig& c) { return std::string(c.MEMBER ? "true" : "false"); }      \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"seed", "generator, initialization and training seed",
            [](RunConfig& c, const std::string& v) { c.set_seed(parse_number<std::uint64_t>(v)); },
            [](const RunConfig& c) { return std::to_string(c.generator.seed); }},
      CTXSLU_SIZE("n_samples", generator.n_samples, "generated samples"),
      CTXSLU_REAL("mention_ratio", generator.mention_ratio, "share of ambiguous-mention cases"),
      CTXSLU_REAL("margin", generator.margin, "resolvability margin of the gold intent"),
      CTXSLU_SIZE("max_rejections", generator.max_rejections, "redraws per sample before giving up"),
      CTXSLU_REAL("train_fraction", generator.train_fraction, "train split share"),
      CTXSLU_REAL("valid_fraction", generator.valid_fraction, "validation split share"),
      CTXSLU_REAL("test_fraction", generator.test_fraction, "test split share"),
      CTXSLU_SIZE("d_emb", model.d_emb, "token embedding width"),
      CTXSLU_SIZE("d_r", model.d_r, "utterance BiLSTM width (both directions)"),
      CTXSLU_SIZE("d_a", model.d_a, "self-attention width"),
      CTXSLU_SIZE("d_i", model.d_i, "supporting-information width"),
      CTXSLU_SIZE("d_int", model.d_int, "intent embedding width in the decoder"),
      CTXSLU_SIZE("d_slot", model.d_slot, "slot embedding width in the decoder"),
      CTXSLU_SIZE("h_s", model.h_s, "slot decoder hidden size"),
      CTXSLU_SIZE("kg_token_cap", model.kg_token_cap, "tokens kept per KG entity"),
      Field{"fusion", "hierarchical, concat or mlp",
            [](RunConfig& c, const std::string& v) { c.model.fusion = model::parse_fusion_mode(v); },
            [](const RunConfig& c) { return std::string(model::to_string(c.model.fusion)); }},
      CTXSLU_BOOL("use_profile", model.use_profile, "feed KG/UP/CA to the model"),
      CTXSLU_BOOL("use_sentence_adapter", model.use_sentence_adapter, "adapter on the intent head"),
      CTXSLU_BOOL("use_word_adapter", model.use_word_adapter, "adapter on every decoder step"),
      CTXSLU_SIZE("epochs", train.epochs, "training epochs"),
      CTXSLU_SIZE("batch_size", train.batch_size, "samples per Adam step"),
      CTXSLU_REAL("learning_rate", train.learning_rate, "Adam step size"),
      CTXSLU_REAL("beta1", train.beta1, "Adam first-moment decay"),
      CTXSLU_REAL("beta2", train.beta2, "Adam second-moment decay"),
      CTXSLU_REAL("epsilon", train.epsilon, "Adam denominator guard"),
      CTXSLU_REAL("l2_lambda", train.l2_lambda, "decoupled weight decay"),
      CTXSLU_REAL("dropout", train.dropout, "dropout rate while training"),
      CTXSLU_SIZE("patience", train.patience, "epochs without a new best before stopping (0: never)"),
      CTXSLU_BOOL("greedy_in_training", train.greedy_in_training, "decoder consumes its own predictions"),
      Field{"data_dir", "dataset directory", [](RunConfig& c, const std::string& v) { c.data_dir = v; },
            [](const RunConfig& c) { return c.data_dir; }},
      Field{"out_dir", "run output directory", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
            [](const RunConfig& c) { return c.out_dir; }},
      CTXSLU_SIZE("gradcheck_batch", gradcheck_batch, "samples in the gradient check"),
      CTXSLU_SIZE("gradcheck_entries", gradcheck_entries, "largest-gradient entries checked per tensor (0: all)"),
      CTXSLU_REAL("gradcheck_eps", gradcheck_eps, "central-difference step"),
  };
  return table;
}

#undef CTXSLU_SIZE
#undef CTXSLU_REAL
#undef CTXSLU_BOOL

}  // namespace

void RunConfig::set_seed(std::uint64_t seed) {
  generator.seed = seed;
  model.init_seed = seed;
  train.seed = seed;
}

void RunConfig::validate() const {
  generator.validate();
  model.validate();
  train.validate();
  if (gradcheck_batch == 0) throw ConfigError("gradcheck_batch must be positive");
  if (!(gradcheck_eps > 0.0 && gradcheck_eps <= 1e-2)) throw ConfigError("gradcheck_eps must lie in (0, 1e-2]");
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return key == f.name; });
    if (it == table.end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "key '" + key + "' given twice");
    try {
      it->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_run_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.name) + " = " + f.get(cfg) + "\n";
  return out;
}

std::string run_config_reference() {
  const RunConfig defaults;
  std::ostringstream out;
  for (const auto& f : fields()) {
    std::string name = f.name;
    std::string value = f.get(defaults);
    name.resize(std::max<std::size_t>(name.size(), 22), ' ');
    value.resize(std::max<std::size_t>(value.size(), 20), ' ');
    out << "  " << name << value << f.help << "\n";
  }
  return out.str();
}

}  // namespace ctxslu::cli
