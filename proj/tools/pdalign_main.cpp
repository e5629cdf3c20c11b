// pdalign: pairwise-difference embedding alignment toolkit.
//
// Subcommands: world, generate, train, eval-zeroshot, eval-diff,
// comp-prompt, localize. Exit codes: 0 success, 1 usage/config error,
// 2 data/format error, 3 numerical failure.

#include <CLI11.hpp>
#include <iostream>
#include <memory>
#include <optional>

#include "pdalign/comparisons.hpp"
#include "pdalign/config.hpp"
#include "pdalign/encoder.hpp"
#include "pdalign/errors.hpp"
#include "pdalign/evaluate.hpp"
#include "pdalign/generation_client.hpp"
#include "pdalign/inference.hpp"
#include "pdalign/io_util.hpp"
#include "pdalign/table.hpp"
#include "pdalign/toyworld.hpp"
#include "pdalign/train.hpp"

namespace {

using namespace pdalign;

// Records CLI option -> config key pairs and applies the ones the user
// actually passed, preserving defaults < file < env < flags precedence.
class ConfigBinder {
 public:
  explicit ConfigBinder(RunConfig& config) : config_(config) {}

  void bind(CLI::App* cmd, const std::string& flag, const std::string& key,
            const std::string& help) {
    holders_.push_back(std::make_unique<std::string>());
    auto* value = holders_.back().get();
    auto* option = cmd->add_option(
        flag, *value, help + " [default: " + config_.get(key) + "]");
    bindings_.push_back({option, key, value});
  }

  void apply() {
    for (const auto& binding : bindings_) {
      if (binding.option->count() > 0) {
        config_.set(binding.key, *binding.value);
      }
    }
  }

 private:
  struct Binding {
    CLI::Option* option;
    std::string key;
    std::string* value;
  };
  RunConfig& config_;
  std::vector<Binding> bindings_;
  std::vector<std::unique_ptr<std::string>> holders_;
};

TextEncoderFn encoder_fn(std::shared_ptr<EncoderParams> params) {
  return [params = std::move(params)](const std::string& text) {
    return encode_text(*params, text);
  };
}

// Encoder used by evaluation commands: a trained checkpoint when given,
// otherwise a fresh seeded initialization (the untrained baseline).
std::shared_ptr<EncoderParams> load_or_init_encoder(
    const std::string& checkpoint, const RunConfig& config,
    std::uint32_t out_dim) {
  if (!checkpoint.empty()) {
    return std::make_shared<EncoderParams>(read_checkpoint(checkpoint));
  }
  EncoderConfig ec;
  ec.vocab_size = config.get_u32("encoder.vocab");
  ec.token_dim = config.get_u32("encoder.token_dim");
  ec.hidden_dim = config.get_u32("encoder.hidden_dim");
  ec.out_dim = out_dim;
  ec.seed = config.get_u64("train.seed");
  return std::make_shared<EncoderParams>(EncoderParams::init(ec));
}

std::vector<WorldItemRecord> split_items(std::vector<WorldItemRecord> items,
                                         const std::string& split) {
  if (split == "all") return items;
  const std::size_t half = items.size() / 2;
  if (split == "val") {
    items.resize(half);
    return items;
  }
  if (split == "test") {
    return {items.begin() + half, items.end()};
  }
  throw ConfigError("unknown split: " + split + " (want val, test, or all)");
}

std::vector<std::pair<std::string, std::string>> labels_for(
    const std::vector<WorldItemRecord>& items, std::size_t label_slot) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    if (label_slot >= item.attributes.size()) {
      throw DataError("label slot out of range for item " + item.id);
    }
    out.emplace_back(item.id, item.attributes[label_slot]);
  }
  return out;
}

void maybe_manifest(bool enabled, const std::filesystem::path& manifest_path,
                    const std::string& command, const RunConfig& config,
                    const std::vector<std::filesystem::path>& inputs,
                    const std::vector<std::filesystem::path>& outputs) {
  if (!enabled) return;
  write_manifest(manifest_path, command, config.values(), inputs, outputs);
}

int cmd_world(const RunConfig& config, const std::string& out_dir,
              bool manifest) {
  ToyWorldConfig wc;
  wc.n_items = config.get_u32("world.n_items");
  wc.n_kinds = config.get_u32("world.n_kinds");
  wc.dim = config.get_u32("world.dim");
  wc.noise_sigma = config.get_double("world.sigma");
  wc.seed = config.get_u64("world.seed");
  const ToyWorld world = generate_world(wc);

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  write_world_jsonl(world, dir / "world.jsonl");
  write_table(world.image_table(), dir / "images.embt");

  // Standard per-kind prompts plus the oracle class differences, so the
  // zeroshot and comparative-prompting commands have ready inputs.
  PromptBank bank;
  bank.kind = BankKind::Standard;
  for (const auto& kind : world.kind_names()) {
    bank.entries.push_back({kind, "This is a photo of a " + kind, {}});
  }
  write_prompt_bank(bank, dir / "prompts.jsonl");

  std::vector<ClassDifference> diffs;
  for (const auto& b : world.kind_names()) {
    for (const auto& a : world.kind_names()) {
      if (a == b) continue;
      diffs.push_back({b, a, oracle_difference_attrs({b}, {a}), {}});
    }
  }
  write_class_differences(diffs, dir / "class_diffs.jsonl");

  maybe_manifest(manifest, dir / "manifest.json", "world", config, {},
                 {dir / "world.jsonl", dir / "images.embt",
                  dir / "prompts.jsonl", dir / "class_diffs.jsonl"});
  std::cout << "world: " << world.items().size() << " items, dim " << wc.dim
            << ", sigma " << wc.noise_sigma << " -> " << out_dir << "\n";
  return 0;
}

int cmd_generate(const RunConfig& config, const std::string& pairs_source,
                 const std::string& out, bool accepted_only, bool manifest) {
  const auto items = read_world_jsonl(pairs_source);
  std::vector<std::string> ids;
  CaptionMap captions;
  for (const auto& item : items) {
    ids.push_back(item.id);
    captions[item.id] = item.caption;
  }
  const auto pairs = sample_pairs(ids, config.get_u64("pipeline.n_source"),
                                  config.get_u64("pipeline.seed"));

  std::vector<ComparisonRecord> records;
  const std::string client_kind = config.get("pipeline.client");
  if (client_kind == "oracle") {
    records = generate_dataset_oracle(items, pairs);
  } else if (client_kind == "http") {
    HttpClientConfig hc;
    hc.url = config.get("pipeline.http_url");
    hc.prompt_field = config.get("pipeline.http_prompt_field");
    hc.max_tokens_field = config.get("pipeline.http_max_tokens_field");
    hc.completion_field = config.get("pipeline.http_completion_field");
    hc.max_attempts = static_cast<int>(config.get_u32("pipeline.retries"));
    hc.backoff_initial_ms =
        static_cast<int>(config.get_u32("pipeline.backoff_ms"));
    HttpGenerationClient client(hc);
    GenerateOptions options;
    options.style = prompt_style_from_string(config.get("pipeline.style"));
    options.max_tokens =
        static_cast<int>(config.get_u32("pipeline.max_tokens"));
    options.max_inflight = config.get_u32("pipeline.max_inflight");
    records = generate_dataset(client, pairs, captions, options);
  } else {
    throw ConfigError("pipeline.client must be http or oracle, got " +
                      client_kind);
  }

  write_records(records, out, accepted_only);
  std::size_t usable = 0;
  for (const auto& rec : records) {
    if (rec.filter_status.usable()) ++usable;
  }
  maybe_manifest(manifest, out + ".manifest.json", "generate", config,
                 {pairs_source}, {out});
  std::cout << "generate: " << records.size() << " pairs, " << usable
            << " usable -> " << out << "\n";
  return 0;
}

int cmd_train(const RunConfig& config, const std::string& images_path,
              const std::string& records_path, const std::string& out,
              std::string log_path, bool manifest) {
  const auto images = read_table(images_path);
  const auto records = read_records(records_path);

  EncoderConfig ec;
  ec.vocab_size = config.get_u32("encoder.vocab");
  ec.token_dim = config.get_u32("encoder.token_dim");
  ec.hidden_dim = config.get_u32("encoder.hidden_dim");
  ec.out_dim = images.dim();
  ec.seed = config.get_u64("train.seed");
  EncoderParams params = EncoderParams::init(ec);

  TrainConfig tc;
  tc.loss = loss_kind_from_string(config.get("train.loss"));
  tc.tau = config.get_double("train.tau");
  tc.lr = config.get_double("train.lr");
  tc.lr_gamma = config.get_double("train.gamma");
  tc.epochs = config.get_u32("train.epochs");
  tc.batch_size = config.get_u32("train.batch");
  tc.seed = config.get_u64("train.seed");
  tc.workers = config.get_u32("run.workers");

  const TrainLog log = fit(params, records, images, tc);
  write_checkpoint(params, out);
  if (log_path.empty()) log_path = out + ".log.jsonl";
  write_train_log(log, log_path);

  maybe_manifest(manifest, out + ".manifest.json", "train", config,
                 {images_path, records_path}, {out, log_path});
  std::cout << "train: " << log.rows_used << " rows, " << tc.epochs
            << " epochs";
  if (!log.epochs.empty()) {
    std::cout << ", loss " << log.epochs.front().mean_loss << " -> "
              << log.epochs.back().mean_loss;
  }
  std::cout << " -> " << out << "\n";
  return 0;
}

int cmd_eval_zeroshot(const RunConfig& config, const std::string& images_path,
                      const std::string& world_path,
                      const std::string& bank_path,
                      const std::string& checkpoint, const std::string& out,
                      bool manifest) {
  const auto images = read_table(images_path);
  const auto encoder =
      encoder_fn(load_or_init_encoder(checkpoint, config, images.dim()));
  const auto bank = read_prompt_bank(bank_path, encoder);
  const auto items =
      split_items(read_world_jsonl(world_path), config.get("eval.split"));
  const auto labeled = labels_for(items, config.get_u64("eval.label_slot"));

  const auto result = eval_zeroshot(labeled, images, bank);
  EvalReport report;
  report.task = "zeroshot/" + to_string(bank.kind);
  report.per_seed = {result.accuracy};
  report.mean = result.accuracy;
  report.stderr_mean = 0.0;
  for (const auto& entry : bank.entries) {
    report.classes.push_back(entry.class_name);
  }
  report.confusion = result.confusion;
  write_report(report, out);

  maybe_manifest(manifest, out + ".manifest.json", "eval-zeroshot", config,
                 {images_path, world_path, bank_path}, {out});
  std::cout << render_report_table(report);
  return 0;
}

int cmd_eval_diff(const RunConfig& config, const std::string& images_path,
                  const std::string& world_path,
                  const std::string& records_path,
                  const std::string& checkpoint, const std::string& out,
                  bool manifest) {
  const auto images = read_table(images_path);
  const auto items = read_world_jsonl(world_path);
  const auto encoder =
      encoder_fn(load_or_init_encoder(checkpoint, config, images.dim()));

  const auto style = task_style_from_string(config.get("eval.style"));
  const std::size_t n_pairs = config.get_u64("eval.n_pairs");
  const std::size_t n_seeds = config.get_u64("eval.n_seeds");
  const std::uint64_t seed = config.get_u64("eval.seed");

  std::function<DifferenceTask(std::uint64_t)> build;
  switch (style) {
    case TaskStyle::Attribute: {
      std::set<std::string> excluded;
      const std::string list = config.get("eval.exclude_attributes");
      std::size_t start = 0;
      while (start < list.size()) {
        std::size_t end = list.find(',', start);
        if (end == std::string::npos) end = list.size();
        if (end > start) excluded.insert(list.substr(start, end - start));
        start = end + 1;
      }
      std::vector<AttrItem> attr_items;
      for (const auto& item : items) {
        attr_items.push_back({item.id, item.attributes});
      }
      build = [attr_items = std::move(attr_items), n_pairs,
               excluded = std::move(excluded)](std::uint64_t s) {
        return build_attribute_task(attr_items, n_pairs, s, excluded);
      };
      break;
    }
    case TaskStyle::Size: {
      std::vector<std::string> large, small;
      for (const auto& item : items) {
        if (item.attributes.empty()) continue;
        (item.attributes[0] == "large" ? large : small).push_back(item.id);
      }
      build = [large = std::move(large), small = std::move(small),
               n_pairs](std::uint64_t s) {
        return build_size_task(large, small, n_pairs, s);
      };
      break;
    }
    case TaskStyle::Color: {
      const std::string c1 = config.get("eval.color_first");
      const std::string c2 = config.get("eval.color_second");
      std::vector<std::string> first_ids, second_ids;
      for (const auto& item : items) {
        if (item.attributes.size() < 2) continue;
        if (item.attributes[1] == c1) first_ids.push_back(item.id);
        if (item.attributes[1] == c2) second_ids.push_back(item.id);
      }
      build = [c1, first_ids = std::move(first_ids), c2,
               second_ids = std::move(second_ids), n_pairs](std::uint64_t s) {
        return build_color_task(c1, first_ids, c2, second_ids, n_pairs, s);
      };
      break;
    }
    case TaskStyle::Llm: {
      if (records_path.empty()) {
        throw ConfigError("llm style needs --records");
      }
      auto records = read_records(records_path);
      build = [records = std::move(records), n_pairs](std::uint64_t s) {
        return build_llm_task(records, n_pairs, s);
      };
      break;
    }
  }

  const auto report = run_difference_eval(
      build, images, encoder, n_seeds, seed,
      "difference/" + to_string(style) +
          (checkpoint.empty() ? " (untrained)" : ""));
  write_report(report, out);

  std::vector<std::filesystem::path> inputs = {images_path, world_path};
  if (!records_path.empty()) inputs.push_back(records_path);
  if (!checkpoint.empty()) inputs.push_back(checkpoint);
  maybe_manifest(manifest, out + ".manifest.json", "eval-diff", config,
                 inputs, {out});
  std::cout << render_report_table(report);
  return 0;
}

int cmd_comp_prompt(const RunConfig& config, const std::string& images_path,
                    const std::string& world_path, const std::string& bank_path,
                    const std::string& diffs_path,
                    const std::string& checkpoint, const std::string& out,
                    const std::string& report_path, bool manifest) {
  const auto images = read_table(images_path);
  const auto encoder =
      encoder_fn(load_or_init_encoder(checkpoint, config, images.dim()));
  const auto bank = read_prompt_bank(bank_path, encoder);
  const auto diffs = read_class_differences(diffs_path, encoder);
  const auto items =
      split_items(read_world_jsonl(world_path), config.get("eval.split"));
  const auto labeled = labels_for(items, config.get_u64("eval.label_slot"));
  const double alpha = config.get_double("comp.alpha");
  const std::size_t k = config.get_u64("comp.k");

  const auto before = eval_zeroshot(labeled, images, bank);
  const auto pairs = select_confused_pairs(before.confusion, k);
  const auto updated = apply_comparative_prompts(bank, diffs, pairs, alpha);
  const auto after = eval_zeroshot(labeled, images, updated);

  // Accuracy restricted to items whose true class sits in an updated pair.
  std::set<std::string> touched;
  for (const auto& [a, b] : pairs) {
    touched.insert(bank.entries[a].class_name);
    touched.insert(bank.entries[b].class_name);
  }
  std::vector<std::pair<std::string, std::string>> restricted;
  for (const auto& row : labeled) {
    if (touched.count(row.second)) restricted.push_back(row);
  }
  double before_restricted = 0.0, after_restricted = 0.0;
  if (!restricted.empty()) {
    before_restricted = eval_zeroshot(restricted, images, bank).accuracy;
    after_restricted = eval_zeroshot(restricted, images, updated).accuracy;
  }

  write_prompt_bank(updated, out);
  if (!report_path.empty()) {
    EvalReport report;
    report.task = "comparative-prompting";
    report.per_seed = {before.accuracy, after.accuracy, before_restricted,
                       after_restricted};
    report.mean = after.accuracy;
    report.stderr_mean = 0.0;
    for (const auto& entry : bank.entries) {
      report.classes.push_back(entry.class_name);
    }
    report.confusion = before.confusion;
    write_report(report, report_path);
  }

  std::vector<std::filesystem::path> outputs = {out};
  if (!report_path.empty()) outputs.push_back(report_path);
  maybe_manifest(manifest, out + ".manifest.json", "comp-prompt", config,
                 {images_path, world_path, bank_path, diffs_path}, outputs);

  std::cout << "comp-prompt: alpha " << alpha << ", " << pairs.size()
            << " pairs updated\n"
            << "  overall:    " << before.accuracy << " -> "
            << after.accuracy << "\n"
            << "  restricted: " << before_restricted << " -> "
            << after_restricted << "\n";
  return 0;
}

int cmd_localize(const RunConfig& config, const std::string& bank_path,
                 const std::string& diffs_path, const std::string& checkpoint,
                 const std::string& out, std::uint32_t dim, bool manifest) {
  const auto encoder =
      encoder_fn(load_or_init_encoder(checkpoint, config, dim));
  const auto bank = read_prompt_bank(bank_path, encoder);
  const auto diffs = read_class_differences(diffs_path, encoder);
  const auto rows = localization_report(bank, diffs);

  EvalReport report;
  report.task = "localization/" + to_string(bank.kind);
  report.localization = rows;
  double fwd = 0.0, rev = 0.0;
  for (const auto& row : rows) {
    fwd += row.d_fwd;
    rev += row.d_rev;
  }
  if (!rows.empty()) {
    report.mean_d_fwd = fwd / double(rows.size());
    report.mean_d_rev = rev / double(rows.size());
  }
  write_report(report, out);

  maybe_manifest(manifest, out + ".manifest.json", "localize", config,
                 {bank_path, diffs_path}, {out});
  std::cout << render_report_table(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pairwise-difference embedding alignment toolkit"};
  app.require_subcommand(1);

  RunConfig config = RunConfig::defaults();
  ConfigBinder binder(config);

  std::string config_path;
  std::optional<std::uint64_t> global_seed;
  bool manifest = false;
  std::string workers_flag;
  app.add_option("--config", config_path,
                 "key=value config file ([section] headers supported)");
  app.add_option("--seed", global_seed,
                 "override every *.seed config key at once");
  app.add_flag("--manifest", manifest,
               "write a manifest (resolved config + input hashes) next to "
               "outputs");
  auto* workers_opt = app.add_option(
      "--workers", workers_flag,
      "worker threads for parallel sections [default: 1]");

  // --- world ---
  auto* world = app.add_subcommand("world", "generate a toy world");
  std::string world_out;
  world->add_option("--out", world_out, "output directory")->required();
  binder.bind(world, "--n-items", "world.n_items", "number of items");
  binder.bind(world, "--n-kinds", "world.n_kinds", "number of kinds");
  binder.bind(world, "--dim", "world.dim", "embedding dimension");
  binder.bind(world, "--sigma", "world.sigma", "embedding noise");
  binder.bind(world, "--seed", "world.seed", "world generation seed");

  // --- generate ---
  auto* generate = app.add_subcommand("generate",
                                      "build a comparison dataset");
  std::string pairs_source, generate_out;
  bool accepted_only = false;
  generate
      ->add_option("--pairs-source", pairs_source,
                   "world dump supplying ids and captions")
      ->required();
  generate->add_option("--out", generate_out, "records JSONL path")
      ->required();
  generate->add_flag("--accepted-only", accepted_only,
                     "export only usable records (training mode)");
  binder.bind(generate, "--style", "pipeline.style", "prompt style");
  binder.bind(generate, "--n-source", "pipeline.n_source",
              "items sampled before pair expansion");
  binder.bind(generate, "--client", "pipeline.client", "http or oracle");
  binder.bind(generate, "--max-inflight", "pipeline.max_inflight",
              "max concurrent requests");
  binder.bind(generate, "--max-tokens", "pipeline.max_tokens",
              "completion token cap");
  binder.bind(generate, "--http-url", "pipeline.http_url",
              "completion endpoint");
  binder.bind(generate, "--http-prompt-field", "pipeline.http_prompt_field",
              "request prompt field");
  binder.bind(generate, "--http-max-tokens-field",
              "pipeline.http_max_tokens_field", "request token-cap field");
  binder.bind(generate, "--http-completion-field",
              "pipeline.http_completion_field", "response completion field");
  binder.bind(generate, "--retries", "pipeline.retries",
              "max attempts per request");
  binder.bind(generate, "--backoff-ms", "pipeline.backoff_ms",
              "initial retry backoff");
  binder.bind(generate, "--seed", "pipeline.seed", "pair sampling seed");

  // --- train ---
  auto* train = app.add_subcommand("train", "finetune the text encoder");
  std::string train_images, train_records, train_out, train_log;
  train->add_option("--images", train_images, "image embedding table")
      ->required();
  train->add_option("--records", train_records, "comparison records JSONL")
      ->required();
  train->add_option("--out", train_out, "checkpoint output path")->required();
  train->add_option("--log", train_log,
                    "training log path [default: <out>.log.jsonl]");
  binder.bind(train, "--loss", "train.loss", "contrastive or mse");
  binder.bind(train, "--tau", "train.tau", "contrastive temperature");
  binder.bind(train, "--lr", "train.lr", "learning rate");
  binder.bind(train, "--gamma", "train.gamma", "exponential LR decay");
  binder.bind(train, "--epochs", "train.epochs", "training epochs");
  binder.bind(train, "--batch", "train.batch", "batch size");
  binder.bind(train, "--vocab", "encoder.vocab", "hashed vocabulary size");
  binder.bind(train, "--token-dim", "encoder.token_dim",
              "token embedding width");
  binder.bind(train, "--hidden-dim", "encoder.hidden_dim",
              "projection hidden width");
  binder.bind(train, "--seed", "train.seed", "init + shuffle seed");

  // --- eval-zeroshot ---
  auto* ez =
      app.add_subcommand("eval-zeroshot", "prompt classification accuracy");
  std::string ez_images, ez_world, ez_bank, ez_ckpt, ez_out;
  ez->add_option("--images", ez_images, "image embedding table")->required();
  ez->add_option("--world", ez_world, "world dump with labels")->required();
  ez->add_option("--bank", ez_bank, "prompt bank JSONL")->required();
  ez->add_option("--checkpoint", ez_ckpt,
                 "encoder checkpoint (omit for the untrained baseline)");
  ez->add_option("--out", ez_out, "report JSON path")->required();
  binder.bind(ez, "--split", "eval.split", "val, test, or all");
  binder.bind(ez, "--label-slot", "eval.label_slot",
              "attribute slot used as the class label");
  binder.bind(ez, "--seed", "eval.seed", "base evaluation seed");

  // --- eval-diff ---
  auto* ed = app.add_subcommand("eval-diff",
                                "difference-based classification accuracy");
  std::string ed_images, ed_world, ed_records, ed_ckpt, ed_out;
  ed->add_option("--images", ed_images, "image embedding table")->required();
  ed->add_option("--world", ed_world, "world dump")->required();
  ed->add_option("--records", ed_records,
                 "comparison records (llm style only)");
  ed->add_option("--checkpoint", ed_ckpt,
                 "encoder checkpoint (omit for the untrained baseline)");
  ed->add_option("--out", ed_out, "report JSON path")->required();
  binder.bind(ed, "--style", "eval.style", "attribute, size, color, or llm");
  binder.bind(ed, "--n-pairs", "eval.n_pairs", "pairs per seed");
  binder.bind(ed, "--n-seeds", "eval.n_seeds", "number of seeds");
  binder.bind(ed, "--exclude-attributes", "eval.exclude_attributes",
              "comma-separated attribute values to hide");
  binder.bind(ed, "--color-first", "eval.color_first", "first color group");
  binder.bind(ed, "--color-second", "eval.color_second",
              "second color group");
  binder.bind(ed, "--seed", "eval.seed", "base evaluation seed");

  // --- comp-prompt ---
  auto* cp = app.add_subcommand(
      "comp-prompt", "update confused class prompts with differences");
  std::string cp_images, cp_world, cp_bank, cp_diffs, cp_ckpt, cp_out,
      cp_report;
  cp->add_option("--images", cp_images, "image embedding table")->required();
  cp->add_option("--world", cp_world, "world dump with labels")->required();
  cp->add_option("--bank", cp_bank, "prompt bank JSONL")->required();
  cp->add_option("--diffs", cp_diffs, "class differences JSONL")->required();
  cp->add_option("--checkpoint", cp_ckpt,
                 "encoder checkpoint (omit for the untrained baseline)");
  cp->add_option("--out", cp_out, "updated bank output path")->required();
  cp->add_option("--report", cp_report, "optional report JSON path");
  binder.bind(cp, "--alpha", "comp.alpha", "blend weight");
  binder.bind(cp, "--k", "comp.k", "confused pairs to update");
  binder.bind(cp, "--split", "eval.split", "labeled split for confusion");
  binder.bind(cp, "--label-slot", "eval.label_slot",
              "attribute slot used as the class label");

  // --- localize ---
  auto* loc = app.add_subcommand(
      "localize", "distance between prompt differences and difference text");
  std::string loc_bank, loc_diffs, loc_ckpt, loc_out;
  std::uint32_t loc_dim = 16;
  loc->add_option("--bank", loc_bank, "prompt bank JSONL")->required();
  loc->add_option("--diffs", loc_diffs, "class differences JSONL")->required();
  loc->add_option("--checkpoint", loc_ckpt,
                  "encoder checkpoint (omit for the untrained baseline)");
  loc->add_option("--dim", loc_dim,
                  "encoder output dimension when no checkpoint is given")
      ->capture_default_str();
  loc->add_option("--out", loc_out, "report JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!config_path.empty()) config.load_file(config_path);
    config.apply_env();
    binder.apply();
    if (workers_opt->count() > 0) config.set("run.workers", workers_flag);
    if (global_seed) {
      for (const char* key :
           {"world.seed", "pipeline.seed", "train.seed", "eval.seed"}) {
        config.set(key, std::to_string(*global_seed));
      }
    }

    if (world->parsed()) return cmd_world(config, world_out, manifest);
    if (generate->parsed()) {
      return cmd_generate(config, pairs_source, generate_out, accepted_only,
                          manifest);
    }
    if (train->parsed()) {
      return cmd_train(config, train_images, train_records, train_out,
                       train_log, manifest);
    }
    if (ez->parsed()) {
      return cmd_eval_zeroshot(config, ez_images, ez_world, ez_bank, ez_ckpt,
                               ez_out, manifest);
    }
    if (ed->parsed()) {
      return cmd_eval_diff(config, ed_images, ed_world, ed_records, ed_ckpt,
                           ed_out, manifest);
    }
    if (cp->parsed()) {
      return cmd_comp_prompt(config, cp_images, cp_world, cp_bank, cp_diffs,
                             cp_ckpt, cp_out, cp_report, manifest);
    }
    if (loc->parsed()) {
      return cmd_localize(config, loc_bank, loc_diffs, loc_ckpt, loc_out,
                          loc_dim, manifest);
    }
    std::cerr << "no subcommand given\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
