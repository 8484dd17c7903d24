#ifndef HISTRED_CLI_HPP
#define HISTRED_CLI_HPP

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "histred/corpus.hpp"
#include "histred/corpus_io.hpp"
#include "histred/model/checkpoint.hpp"
#include "histred/segmenter.hpp"
#include "histred/split.hpp"
#include "histred/stats.hpp"
#include "histred/train/experiment.hpp"
#include "histred/train/metrics.hpp"
#include "histred/train/trainer.hpp"
#include "histred/version.hpp"

namespace histred::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input failed validation; a report has been written to `report_path`.
class ValidationFailed : public std::runtime_error {
 public:
  ValidationFailed(const std::string& what, std::string report_path)
      : std::runtime_error(what), report_path_(std::move(report_path)) {}
  const std::string& report_path() const { return report_path_; }

 private:
  std::string report_path_;
};

namespace fs = std::filesystem;

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t workers = 1;
  std::string out_dir;
};

namespace cli_detail {

inline std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::string content_hash(const std::string& path) { return hex_hash(read_bytes(path)); }

inline std::string utc_stamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

/// --out if given, otherwise runs/<timestamp>-<hash prefix>.
inline fs::path run_dir(const Context& ctx, const std::string& hash) {
  fs::path dir = ctx.out_dir.empty() ? fs::path("runs") / (utc_stamp() + "-" + hash.substr(0, 8)) : fs::path(ctx.out_dir);
  fs::create_directories(dir);
  return dir;
}

inline nlohmann::json stamp(const std::string& hash) {
  return {{"tool_version", std::string(kToolVersion)}, {"config_hash", hash}};
}

inline std::string corpus_text(const std::vector<Document>& docs, const std::string& hash) {
  std::ostringstream os;
  write_corpus(os, docs, stamp(hash));
  return os.str();
}

struct ValidationReport {
  nlohmann::json json;
  std::size_t violations = 0;
};

/// Reads and validates a corpus. Format errors count as one violation.
inline ValidationReport check_corpus(const std::string& path, const std::string& hash, std::vector<Document>* docs_out) {
  if (!fs::exists(path)) throw UsageError("no such file: " + path);
  nlohmann::json report = stamp(hash);
  report["violations"] = nlohmann::json::array();
  report["warnings"] = nlohmann::json::array();
  std::size_t count = 0;
  LoadedCorpus loaded;
  try {
    loaded = read_corpus_file(path);
  } catch (const CorpusFormatError& e) {
    report["documents"] = 0;
    report["violations"].push_back({{"line", e.line()}, {"rule", "format"}, {"detail", e.what()}});
    return {report, 1};
  }
  for (const auto& w : loaded.warnings) report["warnings"].push_back(w);
  for (std::size_t i = 0; i < loaded.docs.size(); ++i) {
    for (const auto& v : validate_document(loaded.docs[i])) {
      report["violations"].push_back({{"line", i + 1},
                                      {"doc_id", loaded.docs[i].doc_id},
                                      {"field", v.field},
                                      {"rule", v.rule},
                                      {"index", v.index},
                                      {"detail", v.detail}});
      ++count;
    }
  }
  report["documents"] = loaded.docs.size();
  std::size_t no_han = 0;
  for (const auto& d : loaded.docs) no_han += entities_without_hanja(d).size();
  report["entities_without_hanja"] = no_han;
  if (docs_out) *docs_out = std::move(loaded.docs);
  return {report, count};
}

/// Loads a corpus for a command that needs clean input; on failure writes the report and throws.
inline std::vector<Document> load_valid(const Context& ctx, const std::string& path, const std::string& hash,
                                        const fs::path& dir, const std::string& report_name) {
  std::vector<Document> docs;
  auto rep = check_corpus(path, hash, &docs);
  if (rep.violations > 0) {
    const auto rp = dir / report_name;
    write_text(rp, rep.json.dump(2) + "\n");
    throw ValidationFailed(path + ": " + std::to_string(rep.violations) + " violation(s)", rp.string());
  }
  for (const auto& w : rep.json["warnings"]) ctx.err << "warning: " << w.get<std::string>() << '\n';
  if (docs.empty()) throw EmptyCorpus();
  return docs;
}

inline fs::path resolve(const std::string& p, const fs::path& base) {
  if (p.empty()) return {};
  fs::path q(p);
  return q.is_absolute() || base.empty() ? q : base / q;
}

/// manifest.json: version, hash and a content hash of every other file in the run directory.
/// Empty line-delimited outputs have no record to carry a stamp, so the manifest covers them.
inline void write_manifest(const fs::path& dir, const std::string& hash, const std::string& command) {
  nlohmann::json m = stamp(hash);
  m["command"] = command;
  m["files"] = nlohmann::json::object();
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
      m["files"][entry.path().filename().string()] = hex_hash(read_bytes(entry.path().string()));
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

inline nlohmann::json prediction_json(const train::Prediction& p, const std::string& hash) {
  nlohmann::json j{{"doc_id", p.doc_id},
                   {"subject_id", p.subject_id},
                   {"object_id", p.object_id},
                   {"subject", p.subject_surface},
                   {"object", p.object_surface},
                   {"label", std::string(kRelationTypeNames[static_cast<std::size_t>(p.label)])},
                   {"confidence", p.confidence}};
  j.update(stamp(hash));
  return j;
}

}  // namespace cli_detail

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_validate(const Context& ctx, const std::string& corpus) {
  using namespace cli_detail;
  const auto hash = config_hash({{"command", "validate"}, {"input", content_hash(corpus)}});
  auto rep = check_corpus(corpus, hash, nullptr);
  const auto dir = run_dir(ctx, hash);
  const auto rp = dir / "validation_report.json";
  write_text(rp, rep.json.dump(2) + "\n");
  ctx.out << "documents: " << rep.json["documents"] << "  violations: " << rep.violations << '\n';
  if (rep.violations > 0) throw ValidationFailed(std::to_string(rep.violations) + " violation(s)", rp.string());
  write_manifest(dir, hash, "validate");
  return kExitOk;
}

inline int cmd_ingest(const Context& ctx, const std::string& corpus) {
  using namespace cli_detail;
  const auto hash = config_hash({{"command", "ingest"}, {"input", content_hash(corpus)}, {"seed", ctx.seed}});
  std::vector<Document> docs;
  auto rep = check_corpus(corpus, hash, &docs);
  const auto dir = run_dir(ctx, hash);
  const auto rp = dir / "validation_report.json";
  write_text(rp, rep.json.dump(2) + "\n");
  if (rep.violations > 0) throw ValidationFailed(std::to_string(rep.violations) + " violation(s)", rp.string());
  if (docs.empty()) throw EmptyCorpus();
  const auto split = split_train_valid_test(docs, ctx.seed);
  write_text(dir / "corpus.jsonl", corpus_text(docs, hash));
  std::ostringstream manifest;
  write_split_manifest(manifest, docs, split, kToolVersion);
  write_text(dir / "split.tsv", "# config_hash=" + hash + "\n" + manifest.str());
  write_text(dir / "train.jsonl", corpus_text(split.train, hash));
  write_text(dir / "valid.jsonl", corpus_text(split.valid, hash));
  write_text(dir / "test.jsonl", corpus_text(split.test, hash));
  ctx.out << "documents: " << docs.size() << "  train/valid/test: " << split.train.size() << '/' << split.valid.size()
          << '/' << split.test.size() << "\noutput: " << dir.string() << '\n';
  write_manifest(dir, hash, "ingest");
  return kExitOk;
}

inline int cmd_segment(const Context& ctx, const std::string& corpus, std::size_t sl) {
  using namespace cli_detail;
  const auto hash = config_hash({{"command", "segment"}, {"input", content_hash(corpus)}, {"sl", sl}});
  const auto dir = run_dir(ctx, hash);
  const auto docs = load_valid(ctx, corpus, hash, dir, "validation_report.json");
  std::vector<std::string> warnings;
  const auto out = segment_corpus(docs, SegmenterConfig{sl}, &warnings);
  const auto name = "corpus-sl" + std::to_string(sl) + ".jsonl";
  write_text(dir / name, corpus_text(out, hash));
  nlohmann::json summary = stamp(hash);
  summary["sl"] = sl;
  summary["documents_in"] = docs.size();
  summary["subtexts"] = out.size();
  summary["warnings"] = warnings;
  write_text(dir / "segment.json", summary.dump(2) + "\n");
  for (const auto& w : warnings) ctx.err << "warning: " << w << '\n';
  ctx.out << "sl=" << sl << "  documents: " << docs.size() << "  subtexts: " << out.size() << "\noutput: "
          << (dir / name).string() << '\n';
  write_manifest(dir, hash, "segment");
  return kExitOk;
}

inline int cmd_stats(const Context& ctx, const std::string& corpus, const std::string& tokenizer, bool json_stdout) {
  using namespace cli_detail;
  const auto hash = config_hash({{"command", "stats"}, {"input", content_hash(corpus)}, {"tokenizer", tokenizer}});
  const auto dir = run_dir(ctx, hash);
  const auto docs = load_valid(ctx, corpus, hash, dir, "validation_report.json");
  TokenizerAdapter tok;
  try {
    tok = make_tokenizer(tokenizer);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto report = compute_stats(docs, tok);
  auto j = to_json(report);
  j.update(stamp(hash));
  const auto table = render_table(report);
  write_text(dir / "stats.json", j.dump(2) + "\n");
  write_text(dir / "stats.txt", "# " + std::string(kToolVersion) + " config_hash=" + hash + "\n" + table);
  if (json_stdout)
    ctx.out << j.dump(2) << '\n';
  else
    ctx.out << table;
  write_manifest(dir, hash, "stats");
  return kExitOk;
}

inline int cmd_query(const Context& ctx, const std::string& corpus, const std::string& entity, std::optional<int> from,
                     std::optional<int> to, const std::vector<std::string>& relations) {
  using namespace cli_detail;
  FactFilter filter{from, to, {}};
  for (const auto& r : relations) {
    auto t = try_parse_relation_type(r);
    if (!t) throw UsageError("unknown relation label: " + r);
    filter.relations.insert(*t);
  }
  nlohmann::json params{{"command", "query"},   {"input", content_hash(corpus)}, {"entity", entity},
                        {"relations", relations}, {"from_year", nullptr},       {"to_year", nullptr}};
  if (from) params["from_year"] = *from;
  if (to) params["to_year"] = *to;
  const auto hash = config_hash(params);
  const auto dir = run_dir(ctx, hash);
  const auto docs = load_valid(ctx, corpus, hash, dir, "validation_report.json");
  const auto facts = query_entity_facts(docs, entity, filter);
  std::ostringstream jl;
  for (const auto& f : facts) {
    nlohmann::json j{{"doc_id", f.doc_id},
                     {"relation_index", f.relation_index},
                     {"subject", f.subject_surface},
                     {"object", f.object_surface},
                     {"label", std::string(to_string(f.relation.label))},
                     {"year", f.metadata.year ? nlohmann::json(*f.metadata.year) : nlohmann::json()},
                     {"book_title", f.metadata.book_title ? nlohmann::json(*f.metadata.book_title) : nlohmann::json()}};
    j.update(stamp(hash));
    jl << j.dump() << '\n';
    ctx.out << std::left << std::setw(6) << (f.metadata.year ? std::to_string(*f.metadata.year) : "-") << ' '
            << std::setw(24) << f.doc_id << ' ' << f.subject_surface << " --" << to_string(f.relation.label) << "--> "
            << f.object_surface << '\n';
  }
  write_text(dir / "facts.jsonl", jl.str());
  ctx.out << facts.size() << " fact(s)\n";
  write_manifest(dir, hash, "query");
  return kExitOk;
}

inline int cmd_train(const Context& ctx, const std::string& config_path, const std::string& train_override,
                     const std::string& valid_override, const std::string& test_override) {
  using namespace cli_detail;
  train::ExperimentConfig cfg;
  try {
    cfg = train::experiment_from_json(nlohmann::json::parse(read_bytes(config_path)));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("bad experiment config " + config_path + ": " + e.what());
  }
  const auto base = fs::path(config_path).parent_path();
  if (!train_override.empty()) cfg.train_path = train_override;
  if (!valid_override.empty()) cfg.valid_path = valid_override;
  if (!test_override.empty()) cfg.test_path = test_override;
  if (cfg.train_path.empty() || cfg.valid_path.empty()) throw UsageError("experiment needs data.train and data.valid");
  if (ctx.seed_given) cfg.model.seed = cfg.train.seed = ctx.seed;
  try {
    cfg.train.validate();
    cfg.model.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto train_path = (train_override.empty() ? resolve(cfg.train_path, base) : fs::path(cfg.train_path)).string();
  const auto valid_path = (valid_override.empty() ? resolve(cfg.valid_path, base) : fs::path(cfg.valid_path)).string();
  const auto test_path = cfg.test_path.empty()
                             ? std::string()
                             : (test_override.empty() ? resolve(cfg.test_path, base) : fs::path(cfg.test_path)).string();

  nlohmann::json hashed = to_json(cfg);
  hashed["data_content"] = {{"train", content_hash(train_path)}, {"valid", content_hash(valid_path)}};
  if (!test_path.empty()) hashed["data_content"]["test"] = content_hash(test_path);
  const auto hash = config_hash(hashed);
  const auto dir = run_dir(ctx, hash);
  auto load = [&](const std::string& p, const std::string& name) {
    auto docs = load_valid(ctx, p, hash, dir, name + "_validation_report.json");
    if (cfg.sl) {
      std::vector<Document> seg;
      for (const auto& d : docs) {
        if (d.origin) {
          seg.push_back(d);
        } else if (!d.relations.empty()) {
          for (const auto& st : build_subtexts(d, SegmenterConfig{*cfg.sl})) seg.push_back(st.to_document());
        }
      }
      docs = std::move(seg);
    }
    return docs;
  };
  const auto train_set = load(train_path, "train");
  const auto valid_set = load(valid_path, "valid");
  const auto test_set = test_path.empty() ? std::vector<Document>() : load(test_path, "test");

  auto effective = to_json(cfg);
  effective.update(stamp(hash));
  write_text(dir / "config.json", effective.dump(2) + "\n");
  std::ofstream log(dir / "metrics.jsonl", std::ios::binary);
  train::TrainHooks hooks{[&](const train::MetricsRecord& r) {
    auto j = train::to_json(r);
    j.update(stamp(hash));
    log << j.dump() << '\n';
    log.flush();
    if (r.split == "valid")
      ctx.out << "epoch " << r.epoch << "  step " << r.step << "  valid F1 " << std::fixed << std::setprecision(4)
              << r.eval->micro_f1 << '\n';
  }};
  const auto res = train::train(cfg.model, train_set, valid_set, cfg.train, hooks);

  nlohmann::json summary = stamp(hash);
  summary["steps"] = res.steps;
  summary["best_epoch"] = res.best_epoch;
  summary["best_valid_f1"] = res.best_valid_f1;
  summary["skipped_instances"] = res.skipped_instances;
  summary["truncated_entities"] = res.truncated_entities;
  summary["dropped_gold"] = res.dropped_gold;
  if (!test_path.empty()) {
    const auto te = train::evaluate(res.best, test_set, ctx.workers);
    summary["test"] = train::to_json(te);
    auto rec = train::to_json(train::MetricsRecord{res.best_epoch, res.steps, "test", te, std::nullopt});
    rec.update(stamp(hash));
    log << rec.dump() << '\n';
    ctx.out << "test P " << te.precision << "  R " << te.recall << "  F1 " << te.micro_f1 << '\n';
  }
  model::save_checkpoint((dir / "checkpoint.bin").string(), res.best,
                         {{"experiment", to_json(cfg)}, {"experiment_hash", hash}, {"best_epoch", res.best_epoch},
                          {"best_valid_f1", res.best_valid_f1}});
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  ctx.out << "best epoch " << res.best_epoch << "  valid F1 " << res.best_valid_f1 << "\noutput: " << dir.string()
          << '\n';
  log.close();
  write_manifest(dir, hash, "train");
  return kExitOk;
}

inline int cmd_evaluate(const Context& ctx, const std::string& data, const std::string& checkpoint,
                        const std::string& predictions) {
  using namespace cli_detail;
  if (checkpoint.empty() == predictions.empty()) throw UsageError("evaluate needs exactly one of --checkpoint, --predictions");
  const auto& source = checkpoint.empty() ? predictions : checkpoint;
  const auto hash = config_hash({{"command", "evaluate"},
                                 {"data", content_hash(data)},
                                 {checkpoint.empty() ? "predictions" : "checkpoint", content_hash(source)}});
  const auto dir = run_dir(ctx, hash);
  const auto docs = load_valid(ctx, data, hash, dir, "validation_report.json");
  train::EvalResult result;
  if (!checkpoint.empty()) {
    const auto loaded = model::load_checkpoint(checkpoint);
    result = train::evaluate(loaded.model, docs, ctx.workers);
  } else {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < docs.size(); ++i)
      if (!index.emplace(docs[i].doc_id, i).second)
        throw UsageError("duplicate doc_id " + docs[i].doc_id + " in " + data + "; predictions cannot be matched");
    std::set<train::Triple> pred;
    std::istringstream in(read_bytes(predictions));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        const auto id = j.at("doc_id").get<std::string>();
        const auto label = parse_relation_type(j.at("label").get<std::string>(), true);
        const auto it = index.find(id);
        pred.insert({it == index.end() ? "?" + id : std::to_string(it->second), j.at("subject_id").get<std::string>(),
                     j.at("object_id").get<std::string>(), static_cast<int>(label)});
      } catch (const std::exception& e) {
        throw UsageError(predictions + ": line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    result = train::score_triples(pred, train::gold_triples(docs));
  }
  auto j = train::to_json(result);
  j.update(stamp(hash));
  write_text(dir / "eval.json", j.dump(2) + "\n");
  ctx.out << std::fixed << std::setprecision(6) << "P " << result.precision << "  R " << result.recall << "  F1 "
          << result.micro_f1 << "  (tp " << result.total.tp << ", fp " << result.total.fp << ", fn " << result.total.fn
          << ")\n";
  write_manifest(dir, hash, "evaluate");
  return kExitOk;
}

inline int cmd_predict(const Context& ctx, const std::string& data, const std::string& checkpoint) {
  using namespace cli_detail;
  const auto hash = config_hash({{"command", "predict"}, {"data", content_hash(data)}, {"checkpoint", content_hash(checkpoint)}});
  const auto dir = run_dir(ctx, hash);
  const auto docs = load_valid(ctx, data, hash, dir, "validation_report.json");
  const auto loaded = model::load_checkpoint(checkpoint);
  const auto preds = train::predict(loaded.model, docs, ctx.workers);
  std::ostringstream os;
  for (const auto& p : preds) os << prediction_json(p, hash).dump() << '\n';
  write_text(dir / "predictions.jsonl", os.str());
  ctx.out << preds.size() << " prediction(s)\noutput: " << (dir / "predictions.jsonl").string() << '\n';
  write_manifest(dir, hash, "predict");
  return kExitOk;
}

// ---------------------------------------------------------------------------

/// Entry point; `args` excludes the program name. Returns the process exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bilingual (Korean/Hanja) document-level relation extraction toolkit", "histred"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolVersion));
  Context ctx{out, err, 0, false, 1, {}};
  auto* seed_opt = app.add_option("--seed", ctx.seed, "Seed for every random choice (split, init, shuffling)");
  app.add_option("--workers", ctx.workers, "Worker threads for evaluation")->check(CLI::PositiveNumber);
  app.add_option("--out", ctx.out_dir, "Output directory (default runs/<timestamp>-<hash>)");

  std::string corpus, entity, tokenizer = "whitespace", config, data, checkpoint, predictions;
  std::string train_path, valid_path, test_path;
  std::size_t sl = 0;
  bool json_stdout = false;
  std::optional<int> from_year, to_year;
  std::vector<std::string> relations;

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus, write a report, the normalized corpus and a 2:1:1 split");
  ingest->add_option("corpus", corpus, "Line-delimited corpus file")->required();
  auto* validate = app.add_subcommand("validate", "Check every corpus invariant and write a violation report");
  validate->add_option("corpus", corpus, "Line-delimited corpus file")->required();
  auto* segment = app.add_subcommand("segment", "Cut documents into self-contained subtexts at a sequence level");
  segment->add_option("corpus", corpus, "Line-delimited corpus file")->required();
  segment->add_option("--sl", sl, "Sequence level k")->required();
  auto* stats = app.add_subcommand("stats", "Corpus statistics as an aligned table and JSON");
  stats->add_option("corpus", corpus, "Line-delimited corpus file")->required();
  stats->add_option("--tokenizer", tokenizer, "whitespace, char, or wordpiece:<vocab file>");
  stats->add_flag("--json", json_stdout, "Print JSON instead of the table");
  auto* query = app.add_subcommand("query", "List relations touching an entity, ordered by year");
  query->add_option("corpus", corpus, "Line-delimited corpus file")->required();
  query->add_option("entity", entity, "Surface form (either language) or entity id")->required();
  query->add_option("--from-year", from_year, "Earliest year (inclusive)");
  query->add_option("--to-year", to_year, "Latest year (inclusive)");
  query->add_option("--relation", relations, "Restrict to these relation labels");
  auto* train_cmd = app.add_subcommand("train", "Train a model from an experiment config");
  train_cmd->add_option("config", config, "Experiment config (JSON)")->required();
  train_cmd->add_option("--train", train_path, "Override data.train");
  train_cmd->add_option("--valid", valid_path, "Override data.valid");
  train_cmd->add_option("--test", test_path, "Override data.test");
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint or a predictions file against gold relations");
  evaluate->add_option("data", data, "Gold corpus file")->required();
  evaluate->add_option("--checkpoint", checkpoint, "Model checkpoint");
  evaluate->add_option("--predictions", predictions, "Predictions (JSONL with doc_id, subject_id, object_id, label)");
  auto* predict = app.add_subcommand("predict", "Write predicted relation triples");
  predict->add_option("data", data, "Corpus file")->required();
  predict->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  ctx.seed_given = seed_opt->count() > 0;

  try {
    if (ingest->parsed()) return cmd_ingest(ctx, corpus);
    if (validate->parsed()) return cmd_validate(ctx, corpus);
    if (segment->parsed()) return cmd_segment(ctx, corpus, sl);
    if (stats->parsed()) return cmd_stats(ctx, corpus, tokenizer, json_stdout);
    if (query->parsed()) return cmd_query(ctx, corpus, entity, from_year, to_year, relations);
    if (train_cmd->parsed()) return cmd_train(ctx, config, train_path, valid_path, test_path);
    if (evaluate->parsed()) return cmd_evaluate(ctx, data, checkpoint, predictions);
    if (predict->parsed()) return cmd_predict(ctx, data, checkpoint);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationFailed& e) {
    err << "validation failed: " << e.what() << "\nreport: " << e.report_path() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace histred::cli

#endif  // HISTRED_CLI_HPP
