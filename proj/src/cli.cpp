// SPDX-License-Identifier: Apache-2.0

#include "s2sum/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "s2sum/inference.hpp"
#include "s2sum/pipeline.hpp"
#include "s2sum/rouge.hpp"
#include "s2sum/synthetic.hpp"
#include "s2sum/train.hpp"

namespace s2sum {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace

Json default_run_config() {
  Json c;
  c["seed"] = 1;
  c["model.word_dim"] = 100;
  c["model.hidden"] = 200;
  c["model.attention_dim"] = 0;
  c["model.features"] = false;
  c["model.pointer"] = false;
  c["model.hierarchical"] = false;
  c["model.temporal"] = false;
  c["model.separate_pointer_attention"] = false;
  c["model.sentence_positions"] = 64;
  c["model.init_scale"] = 0.1;
  c["train.batch_size"] = 50;
  c["train.lvt_size"] = 2000;
  c["train.clip_norm"] = 5.0;
  c["train.max_epochs"] = 20;
  c["train.patience"] = 3;
  c["train.rho"] = 0.95;
  c["train.epsilon"] = 1e-6;
  c["train.rate"] = 1.0;
  c["train.switch_l2"] = 0.0;
  c["pipeline.source_vocab_size"] = 150000;
  c["pipeline.decoder_vocab_size"] = 69000;
  c["pipeline.min_count"] = 1;
  c["pipeline.feature_bins"] = 10;
  c["pipeline.max_doc_tokens"] = 0;
  c["pipeline.max_doc_sentences"] = 0;
  c["pipeline.max_summary_tokens"] = 0;
  c["decode.beam_size"] = 5;
  c["decode.max_len"] = 30;
  c["decode.fixed_length"] = 0;
  c["decode.lvt_size"] = 0;
  c["eval.mode"] = "f1";
  c["eval.byte_budget"] = 75;
  c["gen.count"] = 50;
  for (const char* key : {"corpus", "vocab_dir", "train", "valid", "model", "input", "system", "reference", "output",
                          "attention"}) {
    c[std::string("paths.") + key] = "";
  }
  return c;
}

namespace {

bool same_kind(const Json& a, const Json& b) {
  if (a.is_boolean() || b.is_boolean()) return a.is_boolean() && b.is_boolean();
  if (a.is_number() || b.is_number()) {
    if (!(a.is_number() && b.is_number())) return false;
    // Integers must stay integral.
    return !(a.is_number_integer() && b.is_number_float());
  }
  return a.is_string() && b.is_string();
}

void set_key(Json& config, const std::string& key, const Json& value) {
  if (!config.contains(key)) throw UsageError("unknown configuration key '" + key + "'");
  if (!same_kind(config[key], value)) {
    throw UsageError("configuration key '" + key + "' expects a value like " + config[key].dump() + ", got " +
                     value.dump());
  }
  if (config[key].is_number_unsigned() || config[key].is_number_integer()) {
    if (value.is_number_integer() && value.get<long long>() < 0) {
      throw UsageError("configuration key '" + key + "' must be nonnegative");
    }
  }
  config[key] = value;
}

Json parse_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception&) {
    return Json(text);
  }
}

void merge_file(Json& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  Json file;
  try {
    file = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!file.is_object()) throw DataError("config file " + path + " must hold a JSON object");
  for (auto it = file.begin(); it != file.end(); ++it) set_key(config, it.key(), it.value());
}

template <class T>
T get(const Json& config, const std::string& key) {
  return config.at(key).get<T>();
}

std::string path_of(const Json& config, const std::string& name, bool required = true) {
  const std::string p = get<std::string>(config, "paths." + name);
  if (required && p.empty()) throw UsageError("missing required path --" + name);
  return p;
}

PipelineConfig pipeline_config(const Json& c) {
  PipelineConfig p;
  p.source_vocab_size = get<std::size_t>(c, "pipeline.source_vocab_size");
  p.decoder_vocab_size = get<std::size_t>(c, "pipeline.decoder_vocab_size");
  p.min_count = get<std::size_t>(c, "pipeline.min_count");
  p.feature_bins = get<std::size_t>(c, "pipeline.feature_bins");
  p.limits.max_doc_tokens = get<std::size_t>(c, "pipeline.max_doc_tokens");
  p.limits.max_doc_sentences = get<std::size_t>(c, "pipeline.max_doc_sentences");
  p.limits.max_summary_tokens = get<std::size_t>(c, "pipeline.max_summary_tokens");
  return p;
}

TrainConfig train_config(const Json& c, const Preprocessed& prep) {
  TrainConfig t;
  ModelConfig& m = t.model;
  m.source_vocab = prep.source.size();
  m.target_vocab = prep.decoder.size();
  m.word_dim = get<std::size_t>(c, "model.word_dim");
  m.hidden = get<std::size_t>(c, "model.hidden");
  m.attention_dim = get<std::size_t>(c, "model.attention_dim");
  m.features = get<bool>(c, "model.features");
  m.pointer = get<bool>(c, "model.pointer");
  m.hierarchical = get<bool>(c, "model.hierarchical");
  m.temporal = get<bool>(c, "model.temporal");
  m.separate_pointer_attention = get<bool>(c, "model.separate_pointer_attention");
  m.sentence_positions = get<std::size_t>(c, "model.sentence_positions");
  m.init_scale = get<double>(c, "model.init_scale");
  m.feature_bins = prep.stats.tf_binner.bin_count();
  t.batch_size = get<std::size_t>(c, "train.batch_size");
  t.lvt_size = get<std::size_t>(c, "train.lvt_size");
  t.clip_norm = get<double>(c, "train.clip_norm");
  t.max_epochs = get<std::size_t>(c, "train.max_epochs");
  t.patience = get<std::size_t>(c, "train.patience");
  t.seed = get<std::uint64_t>(c, "seed");
  t.rho = get<double>(c, "train.rho");
  t.epsilon = get<double>(c, "train.epsilon");
  t.rate = get<double>(c, "train.rate");
  t.switch_l2 = get<double>(c, "train.switch_l2");
  return t;
}

bool is_shard(const std::string& path) { return fs::path(path).extension() == ".shard"; }

std::vector<Example> load_examples(const std::string& path, const Preprocessed& prep, const PipelineConfig& pc) {
  if (is_shard(path)) return read_shard(path);
  return build_examples(prep, read_corpus(path), pc, pipeline_threads());
}

// Writes to `path`, or to `out` when the path is empty.
template <class Fn>
void with_output(const std::string& path, std::ostream& out, Fn&& fn) {
  if (path.empty()) {
    fn(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write " + path);
  fn(file);
}

std::vector<Json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<Json> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(Json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!rows.back().is_object()) throw DataError(path + ":" + std::to_string(line_no) + ": expected a JSON object");
  }
  return rows;
}

// ---------------------------------------------------------------------------

int cmd_preprocess(const Json& c, std::ostream& err) {
  const std::string corpus = path_of(c, "corpus");
  const fs::path outdir = path_of(c, "output");
  const PipelineConfig pc = pipeline_config(c);
  const std::vector<RawPair> pairs = read_corpus(corpus);
  const std::string vocab_dir = path_of(c, "vocab_dir", false);
  const Preprocessed prep = vocab_dir.empty() ? fit_preprocessing(pairs, pc) : Preprocessed::load(vocab_dir);
  prep.save(outdir);
  const fs::path shard = outdir / (fs::path(corpus).stem().string() + ".shard");
  const auto examples = build_examples(prep, pairs, pc, pipeline_threads());
  write_shard(shard, examples);
  err << "wrote " << examples.size() << " examples to " << shard.string() << " (source vocab " << prep.source.size()
      << ", decoder vocab " << prep.decoder.size() << ")\n";
  return kExitOk;
}

int cmd_train(const Json& c, std::ostream& err) {
  const std::string train_path = path_of(c, "train");
  const std::string valid_path = path_of(c, "valid");
  const fs::path outdir = path_of(c, "output");
  const PipelineConfig pc = pipeline_config(c);
  const std::string vocab_dir = path_of(c, "vocab_dir", false);

  Preprocessed prep;
  if (!vocab_dir.empty()) {
    prep = Preprocessed::load(vocab_dir);
  } else if (is_shard(train_path)) {
    throw UsageError("training from a shard needs --vocab-dir with the vocabularies that built it");
  } else {
    prep = fit_preprocessing(read_corpus(train_path), pc);
  }
  const auto train_set = load_examples(train_path, prep, pc);
  const auto valid_set = load_examples(valid_path, prep, pc);

  const TrainConfig tc = train_config(c, prep);
  tc.validate();
  Summarizer model(tc.model, tc.seed);
  const TrainResult result = train(model, tc, train_set, valid_set, prep.decoder, &err);

  prep.save(outdir);
  save_checkpoint(outdir / "model.ckpt", model.params(), tc.to_json().dump());
  err << "best_epoch=" << result.best_epoch << " best_valid_loss=" << result.best_valid_loss
      << " skipped_batches=" << result.skipped_batches << " checkpoint=" << (outdir / "model.ckpt").string() << "\n";
  return kExitOk;
}

int cmd_decode(const Json& c, std::ostream& out, std::ostream& err) {
  const fs::path model_dir = path_of(c, "model");
  const std::string input = path_of(c, "input");
  const Preprocessed prep = Preprocessed::load(model_dir);
  const CheckpointData ckpt = read_checkpoint(model_dir / "model.ckpt");
  TrainConfig tc;
  try {
    tc = TrainConfig::from_json(nlohmann::json::parse(ckpt.config_json));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint config is malformed: " + std::string(e.what()));
  }
  Summarizer model(tc.model, tc.seed);
  load_into(ckpt, model.params());

  const auto examples = load_examples(input, prep, pipeline_config(c));
  DecodeOptions o;
  o.beam_size = get<std::size_t>(c, "decode.beam_size");
  o.max_len = get<std::size_t>(c, "decode.max_len");
  o.lvt_size = get<std::size_t>(c, "decode.lvt_size");
  if (const auto fixed = get<std::size_t>(c, "decode.fixed_length"); fixed > 0) {
    o.fixed_length = true;
    o.max_len = fixed;
  }
  if (o.beam_size < 1 || o.max_len < 1) throw UsageError("beam size and max length must be at least 1");
  const std::string attention_path = path_of(c, "attention", false);
  o.record_attention = !attention_path.empty();

  std::vector<Decoded> decoded;
  decoded.reserve(examples.size());
  for (const Example& ex : examples) decoded.push_back(beam_decode(model, ex, prep.decoder, o));

  with_output(path_of(c, "output", false), out, [&](std::ostream& os) {
    for (Decoded d : decoded) {
      d.attention.clear();
      os << d.to_json().dump() << '\n';
    }
  });
  if (o.record_attention) {
    with_output(attention_path, out, [&](std::ostream& os) {
      for (const Decoded& d : decoded) {
        Json j;
        j["id"] = d.id;
        j["attention"] = d.attention;
        os << j.dump() << '\n';
      }
    });
  }
  err << "decoded " << decoded.size() << " examples\n";
  return kExitOk;
}

std::vector<std::string> text_list(const Json& v, const std::string& where) {
  if (v.is_string()) return {v.get<std::string>()};
  if (v.is_array()) {
    std::vector<std::string> out;
    for (const auto& x : v) {
      if (!x.is_string()) throw DataError(where + ": summary entries must be strings");
      out.push_back(x.get<std::string>());
    }
    return out;
  }
  throw DataError(where + ": \"summary\" must be a string or a list of strings");
}

int cmd_eval(const Json& c, std::ostream& out) {
  const std::string system_path = path_of(c, "system");
  const std::string reference_path = path_of(c, "reference");
  const EvalMode mode = parse_eval_mode(get<std::string>(c, "eval.mode"));
  const auto budget = get<std::size_t>(c, "eval.byte_budget");
  if (budget < 1) throw UsageError("byte budget must be at least 1");
  const auto system = read_jsonl(system_path);
  const auto reference = read_jsonl(reference_path);
  if (system.size() != reference.size()) {
    throw DataError("system has " + std::to_string(system.size()) + " lines, reference has " +
                    std::to_string(reference.size()));
  }
  std::vector<EvalItem> items;
  for (std::size_t i = 0; i < system.size(); ++i) {
    const std::string where = "line " + std::to_string(i + 1);
    if (!system[i].contains("summary") || !reference[i].contains("summary")) {
      throw DataError(where + ": both files need a \"summary\" field");
    }
    EvalItem item;
    for (const std::string& s : text_list(system[i]["summary"], where)) {
      if (!item.system.empty()) item.system += ' ';
      item.system += s;
    }
    item.reference = text_list(reference[i]["summary"], where);
    if (reference[i].contains("document") && reference[i]["document"].is_string()) {
      item.source = reference[i]["document"].get<std::string>();
    }
    items.push_back(std::move(item));
  }
  const Json report = evaluate_corpus(items, mode, budget);
  with_output(path_of(c, "output", false), out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  return kExitOk;
}

int cmd_generate(const std::string& which, const Json& c, std::ostream& out) {
  const auto count = get<std::size_t>(c, "gen.count");
  const auto seed = get<std::uint64_t>(c, "seed");
  std::vector<RawPair> pairs = which == "gen-copy"       ? gen_copy(count, seed)
                               : which == "gen-template" ? gen_template(count, seed)
                                                         : gen_highlights(count, seed);
  with_output(path_of(c, "output", false), out, [&](std::ostream& os) {
    for (const RawPair& p : pairs) {
      Json j;
      j["id"] = p.id;
      j["document"] = p.document;
      j["summary"] = p.summary;
      os << j.dump() << '\n';
    }
  });
  return kExitOk;
}

struct FlagValues {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool features = false, pointer = false, hierarchical = false, temporal = false;
  std::optional<std::size_t> lvt_size, beam_size, max_len, fixed_length, byte_budget, count, epochs;
  std::optional<std::string> mode;
  std::map<std::string, std::string> paths;
  std::vector<std::string> sets;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Abstractive summarization with attentional encoder-decoder networks", "s2sum"};
  app.require_subcommand(1, 1);
  FlagValues f;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"preprocess", "fit vocabularies and feature statistics, write example shards"},
      {"train", "train a model and write a checkpoint directory"},
      {"decode", "beam-search summaries as JSONL"},
      {"eval", "ROUGE report for system vs reference JSONL"},
      {"gen-copy", "synthetic copy corpus"},
      {"gen-template", "synthetic templated corpus"},
      {"gen-highlights", "synthetic multi-highlight corpus"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", f.config, "JSON file of flat dotted keys");
    sub->add_option("--seed", f.seed, "random seed");
    sub->add_option("--set", f.sets, "override any config key, key=value")->take_all();
    sub->add_option("--output", f.paths["output"], "output file or directory");
    if (name == "preprocess") {
      sub->add_option("--corpus", f.paths["corpus"], "JSONL corpus");
      sub->add_option("--vocab-dir", f.paths["vocab_dir"], "reuse existing vocabularies");
    }
    if (name == "train") {
      sub->add_option("--train", f.paths["train"], "training corpus (.jsonl or .shard)");
      sub->add_option("--valid", f.paths["valid"], "validation corpus (.jsonl or .shard)");
      sub->add_option("--vocab-dir", f.paths["vocab_dir"], "reuse existing vocabularies");
      sub->add_flag("--features", f.features, "feature-rich encoder");
      sub->add_flag("--switch", f.pointer, "switching generator-pointer");
      sub->add_flag("--hierarchical", f.hierarchical, "hierarchical attention");
      sub->add_flag("--temporal", f.temporal, "temporal attention");
      sub->add_option("--lvt-size", f.lvt_size, "decoder vocabulary per batch");
      sub->add_option("--epochs", f.epochs, "maximum epochs");
    }
    if (name == "decode") {
      sub->add_option("--model", f.paths["model"], "directory written by train");
      sub->add_option("--input", f.paths["input"], "corpus to summarize (.jsonl or .shard)");
      sub->add_option("--beam-size", f.beam_size, "beam width");
      sub->add_option("--max-len", f.max_len, "maximum summary tokens");
      sub->add_option("--fixed-length", f.fixed_length, "emit exactly this many tokens, never EOS");
      sub->add_option("--lvt-size", f.lvt_size, "restrict the generator to this many rows (0 = all)");
      sub->add_option("--attention", f.paths["attention"], "write step x position attention JSONL here");
    }
    if (name == "eval") {
      sub->add_option("--system", f.paths["system"], "system JSONL");
      sub->add_option("--reference", f.paths["reference"], "reference JSONL");
      sub->add_option("--mode", f.mode, "f1 | limited_recall | multisent");
      sub->add_option("--byte-budget", f.byte_budget, "truncation budget for limited_recall");
    }
    if (name.rfind("gen-", 0) == 0) sub->add_option("--count", f.count, "number of examples");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  Json config = default_run_config();
  try {
    if (!f.config.empty()) merge_file(config, f.config);
    if (f.seed) set_key(config, "seed", *f.seed);
    const std::string lvt_key = command == "decode" ? "decode.lvt_size" : "train.lvt_size";
    if (f.features) set_key(config, "model.features", true);
    if (f.pointer) set_key(config, "model.pointer", true);
    if (f.hierarchical) set_key(config, "model.hierarchical", true);
    if (f.temporal) set_key(config, "model.temporal", true);
    if (f.lvt_size) set_key(config, lvt_key, *f.lvt_size);
    if (f.epochs) set_key(config, "train.max_epochs", *f.epochs);
    if (f.beam_size) set_key(config, "decode.beam_size", *f.beam_size);
    if (f.max_len) set_key(config, "decode.max_len", *f.max_len);
    if (f.fixed_length) set_key(config, "decode.fixed_length", *f.fixed_length);
    if (f.byte_budget) set_key(config, "eval.byte_budget", *f.byte_budget);
    if (f.mode) set_key(config, "eval.mode", *f.mode);
    if (f.count) set_key(config, "gen.count", *f.count);
    for (const auto& [key, value] : f.paths) {
      if (!value.empty()) set_key(config, "paths." + key, value);
    }
    for (const std::string& s : f.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
      const std::string key = s.substr(0, eq);
      Json value = parse_value(s.substr(eq + 1));
      if (config.contains(key) && config[key].is_string()) value = s.substr(eq + 1);
      set_key(config, key, value);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }

  err << "config " << Json{{"command", command}, {"seed", config["seed"]}, {"resolved", config}}.dump() << std::endl;

  try {
    if (command == "preprocess") return cmd_preprocess(config, err);
    if (command == "train") return cmd_train(config, err);
    if (command == "decode") return cmd_decode(config, out, err);
    if (command == "eval") return cmd_eval(config, out);
    return cmd_generate(command, config, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "error: training diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace s2sum
