#include "ctxslu/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ctxslu/errors.hpp"

namespace ctxslu::cli {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kConfigFailure;
  if (dynamic_cast<const VersionError*>(&e)) return kVersionFailure;
  if (dynamic_cast<const GenerationError*>(&e)) return kGenerationFailure;
  if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const DeterminismError*>(&e)) return kNumericFailure;
  return kDataFailure;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw ValidationError("cannot write " + path.string());
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

data::ProfileSchema schema_near(const fs::path& dataset_dir) {
  const fs::path p = dataset_dir / "schema.json";
  if (!fs::exists(p)) return gen::default_schema();
  std::ifstream in(p, std::ios::binary);
  try {
    return data::schema_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

model::SluModel fresh_model(const model::ModelConfig& cfg, const Splits& splits) {
  return model::SluModel(cfg, data::build_vocabularies(splits.train), splits.schema.u(), splits.schema.c());
}

void print_epoch(std::ostream& out, const train::EpochRecord& r) {
  out << "epoch " << std::setw(3) << r.epoch << "  loss " << fixed(r.train_loss, 4) << "  valid slot_f1 "
      << fixed(r.val_slot_f1, 4) << " intent " << fixed(r.val_intent_acc, 4) << " overall "
      << fixed(r.val_overall_acc, 4) << std::endl;
}

std::string slug(const std::string& name) {
  std::string s;
  for (char ch : name) s += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  return s;
}

}  // namespace

Splits load_splits(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("dataset directory " + dir.string() + " does not exist");
  Splits s;
  s.schema = schema_near(dir);
  s.train = data::read_dataset_file(dir / "train.jsonl", s.schema);
  s.valid = data::read_dataset_file(dir / "valid.jsonl", s.schema);
  s.test = data::read_dataset_file(dir / "test.jsonl", s.schema);
  return s;
}

void cmd_generate(const RunConfig& cfg, const fs::path& out_dir, std::ostream& out) {
  const gen::World world = gen::default_world();
  const auto data = gen::generate_dataset(cfg.generator, world);
  gen::write_dataset_dir(out_dir, data, world);
  out << gen::stats_report(data, world);
  out << "wrote " << data.size() << " samples to " << out_dir.string() << "\n";
}

eval::MetricsReport cmd_train(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out_dir,
                              std::ostream& out) {
  const Splits splits = load_splits(data_dir);
  model::SluModel m = fresh_model(cfg.model, splits);
  const auto result =
      train::train(m, cfg.train, splits.train, splits.valid, out_dir, [&](const auto& r) { print_epoch(out, r); });
  const auto test = eval::evaluate(m, splits.test);
  const AblationRows rows{{"valid", result.best_validation}, {"test", test}};
  out << "best epoch " << result.best_epoch << "\n" << eval::report_table(rows);
  nlohmann::json report{{"best_epoch", result.best_epoch},
                        {"valid", eval::report_to_json(result.best_validation)},
                        {"test", eval::report_to_json(test)}};
  write_text(out_dir / "report.json", report.dump() + "\n");
  write_text(out_dir / "run.cfg", to_text(cfg));
  return test;
}

eval::MetricsReport cmd_eval(const fs::path& checkpoint, const fs::path& dataset,
                             const std::optional<fs::path>& report_path, std::ostream& out) {
  const model::SluModel m = model::load_checkpoint(checkpoint);
  const auto samples = data::read_dataset_file(dataset, schema_near(dataset.parent_path()));
  const auto report = eval::evaluate(m, samples);
  const AblationRows rows{{dataset.filename().string(), report}};
  out << eval::report_table(rows);
  if (report_path) write_text(*report_path, eval::report_to_json(report).dump() + "\n");
  return report;
}

diff::GradCheckReport cmd_gradcheck(const RunConfig& cfg, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const gen::World world = gen::default_world();
  const auto data = gen::generate_dataset(cfg.generator, world);
  if (data.train.size() < cfg.gradcheck_batch) throw DomainError("training split is smaller than gradcheck_batch");
  model::SluModel m(cfg.model, data::build_vocabularies(data.train), world.schema.u(), world.schema.c());
  std::vector<model::EncodedSample> batch;
  for (std::size_t i = 0; i < cfg.gradcheck_batch; ++i) batch.push_back(m.encode(data.train[i]));

  // Joint loss without dropout; weight decay is applied by the optimizer and
  // is not part of this loss.
  const diff::LossTermsFn terms = [&](diff::Graph& g) {
    std::vector<diff::Var> all;
    for (const auto& s : batch) {
      const auto part = train::joint_loss_terms(m.forward(g, s, {.mode = model::DecodeMode::kTeacherForced}), s);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  };
  diff::GradCheckOptions options;
  options.eps = cfg.gradcheck_eps;
  options.max_entries_per_tensor = cfg.gradcheck_entries;
  options.largest_only = true;
  options.seed = cfg.generator.seed;
  const auto report = diff::finite_diff_check(terms, m.params(), options);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  out << std::left << std::setw(16) << "tensor" << std::right << std::setw(10) << "checked" << std::setw(14)
      << "max rel err" << "\n";
  for (const auto& e : report.entries) {
    out << std::left << std::setw(16) << e.name << std::right << std::setw(10)
        << (std::to_string(e.checked) + "/" + std::to_string(e.total)) << std::setw(14) << std::scientific
        << std::setprecision(3) << e.max_rel_error << std::defaultfloat << "\n";
  }
  out << "scalars checked: " << report.scalars_checked << "\n";
  out << "max relative error: " << std::scientific << std::setprecision(3) << report.max_rel_error
      << std::defaultfloat << " (tolerance 1e-4)\n";
  out << "time: " << fixed(seconds, 2) << " s\n";
  return report;
}

std::vector<std::pair<std::string, model::ModelConfig>> ablation_grid(const model::ModelConfig& base) {
  model::ModelConfig full = base;
  full.fusion = model::FusionMode::kHierarchical;
  full.use_profile = full.use_sentence_adapter = full.use_word_adapter = true;
  auto with = [&](auto change) {
    model::ModelConfig c = full;
    change(c);
    return c;
  };
  return {
      {"full", full},
      {"w/o sentence-level", with([](auto& c) { c.use_sentence_adapter = false; })},
      {"w/o word-level", with([](auto& c) { c.use_word_adapter = false; })},
      {"w/o multi-level", with([](auto& c) { c.use_profile = false; })},
      {"concat fusion", with([](auto& c) { c.fusion = model::FusionMode::kConcat; })},
      {"mlp fusion", with([](auto& c) { c.fusion = model::FusionMode::kMlp; })},
  };
}

AblationRows cmd_ablate(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out_dir, std::ostream& out) {
  const Splits splits = load_splits(data_dir);
  AblationRows rows;
  for (const auto& [name, model_cfg] : ablation_grid(cfg.model)) {
    out << "== " << name << std::endl;
    model::SluModel m = fresh_model(model_cfg, splits);
    const auto result = train::train(m, cfg.train, splits.train, splits.valid, out_dir / slug(name),
                                     [&](const auto& r) { print_epoch(out, r); });
    rows.emplace_back(name, eval::evaluate(m, splits.test));
    out << "best epoch " << result.best_epoch << "\n";
  }
  const double ceiling = gen::text_only_ceiling(gen::default_catalog());
  std::ostringstream table;
  table << eval::report_table(rows);
  table << "text-only intent ceiling: " << fixed(100.0 * ceiling, 2) << "\n";
  out << table.str();
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [name, report] : rows) j.push_back({{"variant", name}, {"test", eval::report_to_json(report)}});
  fs::create_directories(out_dir);
  write_text(out_dir / "ablation.json", nlohmann::json{{"rows", j}, {"text_only_ceiling", ceiling}}.dump(2) + "\n");
  write_text(out_dir / "ablation.txt", table.str());
  return rows;
}

namespace {

struct ConfigArgs {
  std::string positional;
  std::string flag;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* sub) {
    sub->add_option("config_file", positional, "run config file (key = value)");
    sub->add_option("--config", flag, "run config file, same as the positional form");
    sub->add_option("--seed", seed, "override the config seed");
  }

  RunConfig resolve() const {
    if (!positional.empty() && !flag.empty()) throw CLI::ValidationError("give the config file once, not twice");
    const std::string& path = positional.empty() ? flag : positional;
    RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
    if (seed) cfg.set_seed(*seed);
    return cfg;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Profile-aware joint intent detection and slot filling on synthetic data."};
  app.name("ctxslu");
  app.require_subcommand(1);
  app.footer("Config keys (name, default, meaning):\n" + run_config_reference() +
             "\nExit codes: 0 ok, 1 usage, 2 config, 3 data, 4 numeric or gradcheck failure, 5 generation, 6 "
             "checkpoint version.");

  ConfigArgs gen_args, train_args, eval_args, grad_args, ablate_args;
  std::string gen_out, train_data, train_out, ckpt, dataset, report, ablate_data, ablate_out;

  auto* generate = app.add_subcommand("generate", "write a synthetic dataset with stats");
  gen_args.attach(generate);
  generate->add_option("--out", gen_out, "output directory (default: data_dir)");

  auto* trainc = app.add_subcommand("train", "train one model with validation-based selection");
  train_args.attach(trainc);
  trainc->add_option("--data", train_data, "dataset directory (default: data_dir)");
  trainc->add_option("--out", train_out, "run directory (default: out_dir)");
  bool train_gradcheck = false;
  trainc->add_flag("--gradcheck", train_gradcheck, "check gradients first and stop if the check fails");

  auto* evalc = app.add_subcommand("eval", "score a checkpoint on a dataset file");
  evalc->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  evalc->add_option("--data", dataset, "dataset .jsonl file")->required();
  evalc->add_option("--report", report, "write the metrics as one JSON line here");

  auto* grad = app.add_subcommand("gradcheck", "compare autodiff gradients with finite differences");
  grad_args.attach(grad);

  auto* ablate = app.add_subcommand("ablate", "train the adapter and fusion ablation grid");
  ablate_args.attach(ablate);
  ablate->add_option("--data", ablate_data, "dataset directory (default: data_dir)");
  ablate->add_option("--out", ablate_out, "output directory (default: out_dir)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  auto or_default = [](const std::string& v, const std::string& fallback) { return v.empty() ? fallback : v; };
  try {
    if (generate->parsed()) {
      const RunConfig cfg = gen_args.resolve();
      cmd_generate(cfg, or_default(gen_out, cfg.data_dir), out);
    } else if (trainc->parsed()) {
      const RunConfig cfg = train_args.resolve();
      if (train_gradcheck) {
        const auto result = cmd_gradcheck(cfg, out);
        if (!result.passed(1e-4)) {
          err << "gradient check failed: max relative error " << result.max_rel_error << " >= 1e-4, not training\n";
          return kNumericFailure;
        }
      }
      cmd_train(cfg, or_default(train_data, cfg.data_dir), or_default(train_out, cfg.out_dir), out);
    } else if (evalc->parsed()) {
      std::optional<fs::path> report_path;
      if (!report.empty()) report_path = report;
      cmd_eval(ckpt, dataset, report_path, out);
    } else if (grad->parsed()) {
      const auto result = cmd_gradcheck(grad_args.resolve(), out);
      if (!result.passed(1e-4)) {
        err << "gradient check failed: max relative error " << result.max_rel_error << " >= 1e-4\n";
        return kNumericFailure;
      }
    } else if (ablate->parsed()) {
      const RunConfig cfg = ablate_args.resolve();
      cmd_ablate(cfg, or_default(ablate_data, cfg.data_dir), or_default(ablate_out, cfg.out_dir), out);
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kOk;
}

}  // namespace ctxslu::cli
