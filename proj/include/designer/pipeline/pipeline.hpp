#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "designer/analytics.hpp"
#include "designer/curation.hpp"
#include "designer/gateway.hpp"
#include "designer/http_transport.hpp"
#include "designer/jsonl.hpp"
#include "designer/logic.hpp"
#include "designer/mock_provider.hpp"
#include "designer/pipeline/config.hpp"
#include "designer/postprocess.hpp"
#include "designer/qbank.hpp"
#include "designer/retrieval.hpp"
#include "designer/synthesis.hpp"
#include "designer/util.hpp"

namespace designer::pipeline {

// ---------------------------------------------------------------------------
// Manifest

struct InputFingerprint {
  std::string path;
  std::string sha256;
  bool operator==(const InputFingerprint&) const = default;
};

struct Manifest {
  std::string stage;
  std::string config_hash;
  std::vector<InputFingerprint> inputs;
  std::vector<std::string> outputs;
  std::vector<std::string> completed;
  bool finished = false;
  std::size_t quarantined = 0;
  std::string started_at;
  std::string finished_at;

  json to_json() const {
    json in = json::array();
    for (const auto& f : inputs) in.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return {{"stage", stage},         {"config_hash", config_hash}, {"inputs", in},
            {"outputs", outputs},     {"completed", completed},     {"finished", finished},
            {"quarantined", quarantined}, {"started_at", started_at}, {"finished_at", finished_at}};
  }

  static Manifest from_json(const json& j) {
    Manifest m;
    m.stage = j.at("stage").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& f : j.at("inputs")) m.inputs.push_back({f.at("path"), f.at("sha256")});
    m.outputs = j.value("outputs", std::vector<std::string>{});
    m.completed = j.value("completed", std::vector<std::string>{});
    m.finished = j.value("finished", false);
    m.quarantined = j.value("quarantined", std::size_t{0});
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    return m;
  }
};

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

/// Crash simulation: after `after` items of `stage` are committed, write a
/// torn half line and abort with injected_kill.
struct KillPoint {
  std::string stage;
  std::size_t after = 0;
};

inline KillPoint parse_kill_point(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::invalid_argument, "kill point must look like stage:N");
  KillPoint k{s.substr(0, colon), 0};
  if (!is_stage(k.stage)) throw Error(ErrorCode::invalid_argument, "unknown stage '" + k.stage + "'");
  try {
    k.after = std::stoul(s.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_argument, "kill point count must be a number");
  }
  return k;
}

struct StageResult {
  std::string stage;
  bool skipped = false;
  std::size_t processed = 0;    // items handled in this invocation
  std::size_t quarantined = 0;  // entries in the stage's quarantine store
  json report;
};

struct RunReport {
  std::vector<StageResult> stages;
  std::size_t quarantined = 0;

  json to_json() const {
    json s = json::object();
    for (const auto& r : stages) s[r.stage] = {{"quarantined", r.quarantined}, {"report", r.report}};
    return {{"stages", s}, {"quarantined", quarantined}};
  }
};

/// Errors that stop the run; every other item-level error is quarantined.
inline bool is_fatal(ErrorCode c) {
  switch (c) {
    case ErrorCode::budget_exceeded:
    case ErrorCode::io_error:
    case ErrorCode::config_mismatch:
    case ErrorCode::injected_kill:
    case ErrorCode::missing_input_store:
    case ErrorCode::dimension_mismatch:
      return true;
    default:
      return false;
  }
}

inline std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      out.push_back(static_cast<char>(std::tolower(u)));
    } else if (!out.empty() && out.back() != '-') {
      out.push_back('-');
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "unnamed" : out;
}

/// Benchmark JSONL: one item per line, text from the first of
/// text/question/problem/prompt, else every string field joined.
inline std::vector<BenchmarkItem> load_benchmark(const fs::path& path) {
  std::vector<BenchmarkItem> items;
  const auto name = path.stem().string();
  for (const auto& j : jsonl::read_all(path)) {
    std::string t;
    for (const char* key : {"text", "question", "problem", "prompt"}) {
      if (j.contains(key) && j[key].is_string()) {
        t = j[key].get<std::string>();
        break;
      }
    }
    if (t.empty() && j.is_object()) {
      for (const auto& [k, v] : j.items()) {
        if (v.is_string()) t += (t.empty() ? "" : " ") + v.get<std::string>();
      }
    }
    if (!t.empty()) items.push_back({name, std::move(t)});
  }
  return items;
}

inline std::shared_ptr<Transport> make_transport(const PipelineConfig& c) {
  if (c.provider.kind == "mock") return std::make_shared<mock::MockTransport>(c.mock_dimension);
  return std::make_shared<HttpTransport>(c.provider);
}

// ---------------------------------------------------------------------------
// Pipeline

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, std::shared_ptr<Transport> transport = nullptr)
      : config_(std::move(config)), taxonomy_(config_.taxonomy()) {
    config_.validate();
    if (!transport) transport = make_transport(config_);
    gateway_ = std::make_unique<Gateway>(config_.effective_provider(), std::move(transport));
  }

  const PipelineConfig& config() const noexcept { return config_; }
  Gateway& gateway() noexcept { return *gateway_; }
  Warnings& warnings() noexcept { return warnings_; }
  void set_kill_point(std::optional<KillPoint> k) { kill_ = std::move(k); }

  fs::path store(const std::string& stage, const std::string& name) const {
    return config_.store_dir / "stores" / stage / name;
  }
  fs::path manifest_path(const std::string& stage) const {
    return config_.store_dir / "manifests" / (stage + ".json");
  }

  std::optional<Manifest> load_manifest(const std::string& stage) const {
    const auto p = manifest_path(stage);
    if (!fs::exists(p)) return std::nullopt;
    return Manifest::from_json(json::parse(jsonl::read_file(p)));
  }

  /// Stage inputs in a fixed order.
  std::vector<fs::path> stage_inputs(const std::string& stage) const {
    if (stage == "label-bank") return {config_.bank};
    if (stage == "curate-book") return {config_.books, store("label-bank", "questions.jsonl")};
    if (stage == "curate-web") return {config_.web};
    if (stage == "select-subset") return {store("label-bank", "questions.jsonl")};
    if (stage == "extract-logic") return {store("select-subset", "selected.jsonl")};
    if (stage == "dedup-logic") return {store("extract-logic", "logics.jsonl")};
    if (stage == "build-index") return {store("dedup-logic", "logics.jsonl")};
    if (stage == "match-synthesize") {
      return {store("curate-book", "documents.jsonl"), store("curate-web", "documents.jsonl"),
              store("dedup-logic", "logics.jsonl"), store("build-index", "report.json")};
    }
    if (stage == "dedup-questions") return {store("match-synthesize", "questions.jsonl")};
    if (stage == "decontaminate") {
      std::vector<fs::path> v = {store("dedup-questions", "questions.jsonl")};
      v.insert(v.end(), config_.benchmarks.begin(), config_.benchmarks.end());
      return v;
    }
    if (stage == "respond") return {store("decontaminate", "questions.jsonl")};
    if (stage == "analyze") return {store("respond", "questions.jsonl")};
    throw Error(ErrorCode::invalid_argument, "unknown stage '" + stage + "'");
  }

  StageResult run_stage(const std::string& stage) {
    if (!is_stage(stage)) throw Error(ErrorCode::invalid_argument, "unknown stage '" + stage + "'");
    const auto hash = stage_config_hash(config_, stage);
    auto previous = load_manifest(stage);
    if (previous && previous->config_hash != hash) {
      throw Error(ErrorCode::config_mismatch,
                  "stage '" + stage + "' was run with a different configuration; remove " +
                      manifest_path(stage).string() + " and " + (config_.store_dir / "stores" / stage).string() +
                      " to start it over");
    }
    const auto inputs = fingerprint_inputs(stage);
    if (previous && previous->finished && previous->inputs == inputs) {
      StageResult r{stage, true, 0, previous->quarantined, read_report(stage)};
      return r;
    }
    Run run;
    run.stage = stage;
    run.manifest = previous.value_or(Manifest{});
    run.manifest.stage = stage;
    run.manifest.config_hash = hash;
    run.manifest.inputs = inputs;
    run.manifest.finished = false;
    run.manifest.started_at = utc_now();
    run.manifest.finished_at.clear();
    save_manifest(run.manifest);

    json report = dispatch(run);

    run.manifest.quarantined = jsonl::read_lines(store(stage, "quarantine.jsonl")).size();
    report["quarantined"] = run.manifest.quarantined;
    jsonl::write_atomic(store(stage, "report.json"), report.dump(2) + "\n");
    run.manifest.outputs = list_outputs(stage);
    run.manifest.finished = true;
    run.manifest.finished_at = utc_now();
    save_manifest(run.manifest);
    return StageResult{stage, false, run.processed, run.manifest.quarantined, report};
  }

  RunReport run_all() {
    RunReport out;
    for (const auto& stage : stage_names()) {
      auto r = run_stage(stage);
      out.quarantined += r.quarantined;
      out.stages.push_back(std::move(r));
    }
    jsonl::write_atomic(store("run-all", "report.json"), out.to_json().dump(2) + "\n");
    return out;
  }

  /// Human-readable plan: stage order, state, inputs.
  std::string plan() const {
    std::ostringstream ss;
    ss << "store: " << config_.store_dir.string() << "\n";
    std::size_t i = 1;
    for (const auto& stage : stage_names()) {
      std::string state = "pending";
      if (auto m = load_manifest(stage)) {
        if (m->config_hash != stage_config_hash(config_, stage)) {
          state = "config-mismatch";
        } else if (m->finished) {
          state = "done";
        } else {
          state = "partial (" + std::to_string(m->completed.size()) + " items)";
        }
      }
      ss << std::setw(2) << i++ << ". " << std::left << std::setw(18) << stage << std::right << state << "\n";
      for (const auto& in : stage_inputs(stage)) ss << "      <- " << in.string() << "\n";
    }
    return ss.str();
  }

 private:
  struct Run {
    std::string stage;
    Manifest manifest;
    std::size_t processed = 0;
    std::size_t committed = 0;
  };

  struct Outcome {
    std::vector<json> records;
    std::optional<std::string> skip_reason;
    std::optional<json> quarantine;
  };

  using Item = std::pair<std::string, json>;  // (id, input)

  std::vector<InputFingerprint> fingerprint_inputs(const std::string& stage) const {
    std::vector<InputFingerprint> out;
    for (const auto& p : stage_inputs(stage)) {
      if (p.empty() || !fs::exists(p)) {
        throw Error(ErrorCode::missing_input_store,
                    "stage '" + stage + "' needs " + (p.empty() ? std::string("an input path") : p.string()));
      }
      out.push_back({p.lexically_relative(config_.store_dir).string(), sha256_hex(jsonl::read_file(p))});
    }
    return out;
  }

  void save_manifest(const Manifest& m) const {
    jsonl::write_atomic(manifest_path(m.stage), m.to_json().dump(2) + "\n");
  }

  json read_report(const std::string& stage) const {
    const auto p = store(stage, "report.json");
    return fs::exists(p) ? json::parse(jsonl::read_file(p)) : json::object();
  }

  std::vector<std::string> list_outputs(const std::string& stage) const {
    std::vector<std::string> out;
    const auto dir = config_.store_dir / "stores" / stage;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path().lexically_relative(config_.store_dir).string());
    std::sort(out.begin(), out.end());
    return out;
  }

  void check_kill(Run& run, jsonl::Appender* torn_target) {
    if (!kill_ || kill_->stage != run.stage || run.committed != kill_->after) return;
    if (torn_target) {
      // Half a record without its newline, as a crash mid-write leaves it.
      torn_target->append_line_raw(R"({"id":"torn-wr)");
    }
    throw Error(ErrorCode::injected_kill,
                "injected kill in " + run.stage + " after " + std::to_string(run.committed) + " items");
  }

  static json quarantine_entry(const std::string& id, const std::string& stage, const Error& e) {
    return {{"id", id}, {"stage", stage}, {"error", std::string(to_string(e.code()))}, {"message", e.what()},
            {"raw", e.raw()}};
  }

  /// Resumable per-item processing with in-order commits. Items already in
  /// the output, quarantine or skip stores (or the manifest) are not redone.
  void run_items(Run& run, const std::vector<Item>& items, const std::string& store_name,
                 const std::function<std::string(const json&)>& key_of,
                 const std::function<Outcome(const json&)>& work) {
    const auto out_path = store(run.stage, store_name);
    const auto q_path = store(run.stage, "quarantine.jsonl");
    const auto skip_path = store(run.stage, "skipped.jsonl");
    for (const auto& p : {out_path, q_path, skip_path}) jsonl::truncate_torn_tail(p);

    std::set<std::string> done(run.manifest.completed.begin(), run.manifest.completed.end());
    for (const auto& j : jsonl::read_all(out_path)) done.insert(key_of(j));
    for (const auto& p : {q_path, skip_path}) {
      for (const auto& j : jsonl::read_all(p)) done.insert(j.at("id").get<std::string>());
    }
    std::vector<const Item*> pending;
    for (const auto& it : items) {
      if (!done.count(it.first)) pending.push_back(&it);
    }
    // Rebuild the completion list in input order so it is resume-invariant.
    run.manifest.completed.clear();
    for (const auto& it : items) {
      if (done.count(it.first)) run.manifest.completed.push_back(it.first);
    }
    save_manifest(run.manifest);

    jsonl::Appender out(out_path);
    jsonl::Appender quarantine(q_path);
    jsonl::Appender skipped(skip_path);
    check_kill(run, &out);

    const std::string stage = run.stage;
    ordered_parallel_map<Outcome>(
        pending.size(), config_.provider.max_in_flight,
        [&](std::size_t i) -> Outcome {
          const auto& [id, input] = *pending[i];
          try {
            return work(input);
          } catch (const Error& e) {
            if (is_fatal(e.code())) throw;
            Outcome o;
            o.quarantine = quarantine_entry(id, stage, e);
            return o;
          }
        },
        [&](std::size_t i, Outcome&& o) {
          const auto& id = pending[i]->first;
          for (const auto& r : o.records) out.append(r);
          if (o.quarantine) quarantine.append(*o.quarantine);
          if (o.skip_reason) skipped.append({{"id", id}, {"reason", *o.skip_reason}});
          run.manifest.completed.push_back(id);
          ++run.processed;
          ++run.committed;
          if (run.committed % config_.checkpoint_every == 0) save_manifest(run.manifest);
          check_kill(run, &out);
        });
    save_manifest(run.manifest);
  }

  void check_whole_stage_kill(Run& run) { check_kill(run, nullptr); }

  template <typename T, typename F>
  static std::vector<T> load_records(const fs::path& p, F from_json) {
    std::vector<T> out;
    for (const auto& j : jsonl::read_all(p)) out.push_back(from_json(j));
    return out;
  }

  /// Rejects an input store whose first records fail validation.
  void spot_check(const fs::path& p, RecordKind kind) const {
    std::size_t n = 0;
    for (const auto& line : jsonl::read_lines(p)) {
      if (n++ == 5) break;
      const auto v = validate_line(kind, line, taxonomy_);
      if (!v.empty()) throw Error(ErrorCode::malformed_field, p.string() + ": " + v.front());
    }
  }

  json dispatch(Run& run) {
    const auto& s = run.stage;
    if (s == "label-bank") return label_bank(run);
    if (s == "curate-book") return curate_book(run);
    if (s == "curate-web") return curate_web(run);
    if (s == "select-subset") return select_subset(run);
    if (s == "extract-logic") return extract_logic(run);
    if (s == "dedup-logic") return dedup_logic(run);
    if (s == "build-index") return build_index(run);
    if (s == "match-synthesize") return match_synthesize(run);
    if (s == "dedup-questions") return dedup_questions(run);
    if (s == "decontaminate") return decontaminate_stage(run);
    if (s == "respond") return respond(run);
    return analyze(run);
  }

  static std::string key_id(const json& j) { return j.at("id").get<std::string>(); }

  static std::string first_string(const json& j, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (j.contains(k) && j[k].is_string()) return j[k].get<std::string>();
    }
    return {};
  }

  // -------------------------------------------------------------------------
  // Stages

  json label_bank(Run& run) {
    std::vector<Item> items;
    std::set<std::string> ids;
    for (const auto& j : jsonl::read_all(config_.bank)) {
      const auto t = first_string(j, {"text", "question", "problem"});
      if (t.empty()) {
        warnings_.add("bank_item_without_text");
        continue;
      }
      auto id = first_string(j, {"id"});
      if (id.empty()) id = content_id("q-", t);
      if (!ids.insert(id).second) throw Error(ErrorCode::malformed_field, "duplicate bank id " + id);
      items.emplace_back(id, json{{"id", id}, {"text", t}});
    }
    run_items(run, items, "questions.jsonl", key_id, [&](const json& in) {
      QuestionRecord q;
      q.id = in["id"];
      q.text = in["text"];
      return Outcome{{to_json(label_question(*gateway_, std::move(q), taxonomy_, &warnings_))}, {}, {}};
    });
    const auto labeled = load_records<QuestionRecord>(store(run.stage, "questions.jsonl"), question_from_json);
    std::map<std::string, std::size_t> by_disc, by_diff, by_type;
    for (const auto& q : labeled) {
      ++by_disc[q.discipline.name];
      ++by_diff[q.difficulty ? std::string(to_string(*q.difficulty)) : "unlabeled"];
      ++by_type[std::string(to_string(q.qtype.value_or(QuestionType::other)))];
    }
    return {{"input", items.size()},
            {"labeled", labeled.size()},
            {"by_discipline", by_disc},
            {"by_difficulty", by_diff},
            {"by_qtype", by_type}};
  }

  json curate_book(Run& run) {
    std::vector<Chapter> chapters;
    for (const auto& j : jsonl::read_all(config_.books)) {
      Chapter c;
      c.book_id = j.value("book_id", "");
      c.chapter_index = j.value("chapter_index", 0);
      c.text = first_string(j, {"text"});
      chapters.push_back(std::move(c));
    }
    const auto seg = segment_book(chapters, config_.max_words);
    if (seg.empty_chapters) warnings_.add("empty_chapter", seg.empty_chapters);
    std::vector<std::string> texts;
    for (const auto& d : seg.segments) texts.push_back(d.text);
    const auto dups = near_duplicates(texts, config_.book_dedup);
    std::vector<bool> dropped(texts.size(), false);
    for (auto i : dups.dropped) dropped[i] = true;

    std::vector<Item> items;
    for (std::size_t i = 0; i < seg.segments.size(); ++i) {
      if (!dropped[i]) items.emplace_back(seg.segments[i].id, to_json(seg.segments[i]));
    }
    run_items(run, items, "assessed.jsonl", key_id, [&](const json& in) {
      auto d = document_from_json(in);
      d.discipline = label_discipline(*gateway_, d.text, taxonomy_, &warnings_);
      assess_quality(*gateway_, d);
      return Outcome{{to_json(d)}, {}, {}};
    });
    check_whole_stage_kill(run);

    const auto assessed = load_records<Document>(store(run.stage, "assessed.jsonl"), document_from_json);
    std::map<std::string, std::size_t> corpus_freq, bank_freq;
    std::size_t readable = 0;
    for (const auto& d : assessed) {
      ++corpus_freq[d.discipline->name];
      if (*d.readability == Readability::positive) ++readable;
    }
    for (const auto& q :
         load_records<QuestionRecord>(store("label-bank", "questions.jsonl"), question_from_json)) {
      ++bank_freq[q.discipline.name];
    }
    json report = {{"chapters", chapters.size()},
                   {"empty_chapters", seg.empty_chapters},
                   {"segments", seg.segments.size()},
                   {"duplicates_removed", dups.dropped.size()},
                   {"assessed", assessed.size()},
                   {"readable", readable}};
    std::vector<Document> selected;
    if (config_.book_total == 0 || assessed.empty()) {
      for (const auto& d : assessed) {
        if (*d.readability == Readability::positive) selected.push_back(d);
      }
    } else {
      const auto plan = bank_freq.empty() ? allocate_proportional(corpus_freq, config_.book_total)
                                          : allocate_quotas(corpus_freq, bank_freq, config_.book_total);
      auto sample = quality_prioritized_sample(assessed, plan);
      selected = std::move(sample.selected);
      report["quotas"] = plan.per_discipline;
      report["shortfall"] = sample.shortfall;
    }
    std::vector<json> out;
    for (const auto& d : selected) out.push_back(to_json(d));
    jsonl::write_all(store(run.stage, "documents.jsonl"), out);
    report["selected"] = selected.size();
    return report;
  }

  json curate_web(Run& run) {
    std::vector<Item> items;
    std::set<std::string> ids;
    for (const auto& j : jsonl::read_all(config_.web)) {
      const auto t = first_string(j, {"text"});
      if (t.empty()) {
        warnings_.add("web_page_without_text");
        continue;
      }
      auto id = first_string(j, {"id"});
      if (id.empty()) id = content_id("web-", t);
      if (!ids.insert(id).second) throw Error(ErrorCode::malformed_field, "duplicate web id " + id);
      items.emplace_back(id, to_json(Document::make(id, Source::web, t)));
    }
    run_items(run, items, "scored.jsonl", key_id, [&](const json& in) {
      auto d = document_from_json(in);
      const int score = score_web_reasoning(*gateway_, d);
      // Relabeling follows filtering, so only retained pages are labeled.
      if (score >= config_.min_score) d.discipline = label_discipline(*gateway_, d.text, taxonomy_, &warnings_);
      return Outcome{{to_json(d)}, {}, {}};
    });
    check_whole_stage_kill(run);
    const auto scored = load_records<Document>(store(run.stage, "scored.jsonl"), document_from_json);
    const auto kept = filter_web(scored, config_.min_score);
    std::vector<json> out;
    std::map<std::string, std::size_t> histogram;
    for (const auto& d : scored) ++histogram[std::to_string(*d.reasoning_score)];
    for (const auto& d : kept) out.push_back(to_json(d));
    jsonl::write_all(store(run.stage, "documents.jsonl"), out);
    return {{"input", items.size()}, {"scored", scored.size()}, {"kept", kept.size()}, {"score_histogram", histogram}};
  }

  json select_subset(Run& run) {
    const auto in_path = store("label-bank", "questions.jsonl");
    spot_check(in_path, RecordKind::question);
    auto questions = load_records<QuestionRecord>(in_path, question_from_json);
    check_whole_stage_kill(run);

    std::map<std::string, std::vector<std::size_t>> by_disc;
    for (std::size_t i = 0; i < questions.size(); ++i) by_disc[questions[i].discipline.name].push_back(i);
    std::map<std::string, std::size_t> freq;
    for (const auto& [d, v] : by_disc) freq[d] = v.size();

    std::vector<EmbeddingVector> emb;
    if (!questions.empty()) {
      std::vector<std::string> texts;
      for (const auto& q : questions) texts.push_back(q.text);
      emb = gateway_->embed(texts);
    }
    QuotaPlan plan;
    if (config_.quota_total > 0 && !freq.empty()) {
      plan = allocate_proportional(freq, config_.quota_total);
    } else {
      for (const auto& [d, n] : freq) plan.per_discipline[d] = n;
    }

    std::vector<json> selected, clusters;
    json per_disc = json::object();
    for (const auto& [disc, idx] : by_disc) {
      Points pts;
      for (auto i : idx) pts.push_back(emb[i].values);
      std::size_t k = 1;
      std::vector<std::size_t> labels(idx.size(), 0);
      bool distinct = false;
      for (std::size_t i = 1; i < pts.size() && !distinct; ++i) distinct = pts[i] != pts[0];
      if (pts.size() >= 3 && distinct) {
        const auto hi = std::min(config_.k_max, pts.size() - 1);
        k = choose_k_by_silhouette(pts, 2, hi, config_.seed).k;
        labels = kmeans(pts, k, config_.seed).assignments;
      }
      std::vector<std::vector<QuestionRecord>> groups(k);
      for (std::size_t j = 0; j < idx.size(); ++j) {
        groups[labels[j]].push_back(questions[idx[j]]);
        clusters.push_back({{"question_id", questions[idx[j]].id}, {"cluster_index", labels[j]}, {"discipline", disc}});
      }
      const auto quota = plan.per_discipline[disc];
      const auto sample = stratified_sample(groups, quota, config_.ratio, mix64(config_.seed ^ fnv1a64(disc)));
      for (const auto& q : sample.selected) selected.push_back(to_json(q));
      per_disc[disc] = {{"questions", idx.size()},
                        {"k", k},
                        {"quota", quota},
                        {"selected", sample.selected.size()},
                        {"shortfall", sample.shortfall},
                        {"by_difficulty", sample.by_difficulty}};
    }
    jsonl::write_all(store(run.stage, "selected.jsonl"), selected);
    jsonl::write_all(store(run.stage, "clusters.jsonl"), clusters);
    return {{"input", questions.size()},
            {"selected", selected.size()},
            {"ratio", format_ratio(config_.ratio)},
            {"per_discipline", per_disc}};
  }

  json extract_logic(Run& run) {
    const auto in_path = store("select-subset", "selected.jsonl");
    spot_check(in_path, RecordKind::question);
    std::vector<Item> items;
    for (const auto& j : jsonl::read_all(in_path)) items.emplace_back(key_id(j), j);
    run_items(
        run, items, "logics.jsonl", [](const json& j) { return j.at("source_question_id").get<std::string>(); },
        [&](const json& in) {
          return Outcome{{to_json(extract_design_logic(*gateway_, question_from_json(in), &warnings_))}, {}, {}};
        });
    return {{"input", items.size()}, {"extracted", jsonl::read_lines(store(run.stage, "logics.jsonl")).size()}};
  }

  json dedup_logic(Run& run) {
    const auto in_path = store("extract-logic", "logics.jsonl");
    spot_check(in_path, RecordKind::logic);
    auto logics = load_records<DesignLogic>(in_path, logic_from_json);
    check_whole_stage_kill(run);
    if (!logics.empty()) {
      std::vector<std::string> texts;
      for (const auto& l : logics) texts.push_back(l.mermaid_text);
      const auto emb = gateway_->embed(texts);
      for (std::size_t i = 0; i < logics.size(); ++i) logics[i].embedding = emb[i];
    }
    std::map<std::string, std::vector<std::size_t>> by_disc;
    for (std::size_t i = 0; i < logics.size(); ++i) by_disc[logics[i].discipline.name].push_back(i);
    json per_disc = json::object();
    std::size_t kept = 0;
    for (const auto& [disc, idx] : by_disc) {
      std::vector<DesignLogic> group;
      for (auto i : idx) group.push_back(logics[i]);
      auto r = dedup_design_logics(std::move(group), EdgeRule{config_.tau, config_.tau_inclusive});
      for (std::size_t j = 0; j < idx.size(); ++j) logics[idx[j]].status = r.logics[j].status;
      per_disc[disc] = {{"input", idx.size()}, {"components", r.components}, {"kept", r.kept}, {"dropped", r.dropped}};
      kept += r.kept;
    }
    std::vector<json> out;
    for (const auto& l : logics) out.push_back(to_json(l));
    jsonl::write_all(store(run.stage, "logics.jsonl"), out);
    return {{"input", logics.size()},
            {"kept", kept},
            {"dropped", logics.size() - kept},
            {"tau", config_.tau},
            {"per_discipline", per_disc}};
  }

  json build_index(Run& run) {
    const auto in_path = store("dedup-logic", "logics.jsonl");
    spot_check(in_path, RecordKind::logic);
    const auto logics = load_records<DesignLogic>(in_path, logic_from_json);
    check_whole_stage_kill(run);
    std::map<std::string, LogicIndex> indices;
    for (const auto& l : logics) {
      if (l.status != LogicStatus::active) continue;
      if (!l.embedding) throw Error(ErrorCode::missing_embedding, "logic " + l.id + " has no embedding");
      auto [it, _] = indices.try_emplace(l.discipline.name, l.discipline.name);
      it->second.add(l.id, *l.embedding);
    }
    const auto dir = config_.store_dir / "stores" / run.stage;
    if (fs::exists(dir)) {
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().filename().string().rfind("index-", 0) == 0) fs::remove(e.path());
      }
    }
    json files = json::object();
    for (const auto& [disc, idx] : indices) {
      const auto name = "index-" + slug(disc) + ".jsonl";
      idx.save(store(run.stage, name));
      files[disc] = {{"file", name}, {"count", idx.size()}, {"dimension", idx.dimension()}};
    }
    return {{"indices", files}, {"disciplines", indices.size()}};
  }

  json match_synthesize(Run& run) {
    const auto index_report = read_report("build-index");
    std::map<std::string, LogicIndex> indices;
    for (const auto& [disc, info] : index_report.at("indices").items()) {
      indices.emplace(disc, LogicIndex::load(store("build-index", info.at("file").get<std::string>())));
    }
    std::map<std::string, DesignLogic> logic_by_id;
    for (const auto& l : load_records<DesignLogic>(store("dedup-logic", "logics.jsonl"), logic_from_json)) {
      logic_by_id.emplace(l.id, l);
    }
    std::vector<Item> items;
    for (const char* src : {"curate-book", "curate-web"}) {
      const auto p = store(src, "documents.jsonl");
      spot_check(p, RecordKind::document);
      for (const auto& j : jsonl::read_all(p)) items.emplace_back(key_id(j), j);
    }
    const std::string instruction(prompts::kRetrievalInstruction);
    run_items(
        run, items, "questions.jsonl",
        [](const json& j) { return j.at("provenance").at("document_id").get<std::string>(); },
        [&](const json& in) {
          const auto doc = document_from_json(in);
          Outcome o;
          const auto disc = doc.discipline ? doc.discipline->name : std::string(kUnknownDiscipline);
          const auto idx = indices.find(disc);
          if (idx == indices.end()) {
            o.skip_reason = "no design logics for discipline '" + disc + "'";
            return o;
          }
          const auto query = gateway_->embed({doc.text}, instruction).front();
          std::vector<DesignLogic> candidates;
          for (const auto& hit : retrieve_top_k(query, idx->second, config_.top_k)) {
            candidates.push_back(logic_by_id.at(hit.logic_id));
          }
          const auto r = synthesize_question(*gateway_, doc, candidates, &warnings_);
          QuestionRecord q;
          q.id = content_id("syn-", doc.id);
          q.text = r.exam_question;
          q.discipline = Discipline{disc};
          q.provenance = Provenance::synthesized(doc.id, r.chosen_logic_id);
          q.reference_answer = r.reference_answer;
          q.boxed_answer = r.boxed_answer;
          o.records.push_back(to_json(q));
          return o;
        });
    return {{"documents", items.size()},
            {"synthesized", jsonl::read_lines(store(run.stage, "questions.jsonl")).size()},
            {"skipped_no_index", jsonl::read_lines(store(run.stage, "skipped.jsonl")).size()},
            {"top_k", config_.top_k}};
  }

  json dedup_questions(Run& run) {
    const auto in_path = store("match-synthesize", "questions.jsonl");
    spot_check(in_path, RecordKind::question);
    auto questions = load_records<QuestionRecord>(in_path, question_from_json);
    check_whole_stage_kill(run);
    std::vector<std::size_t> active;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < questions.size(); ++i) {
      if (!questions[i].active()) continue;
      active.push_back(i);
      texts.push_back(questions[i].text);
    }
    const auto r = near_duplicates(texts, config_.question_dedup);
    for (auto i : r.dropped) questions[active[i]].drop(RecordStatus::dropped_duplicate);
    std::vector<json> out;
    for (const auto& q : questions) out.push_back(to_json(q));
    jsonl::write_all(store(run.stage, "questions.jsonl"), out);
    return {{"input", questions.size()},
            {"groups", r.groups.size()},
            {"dropped_duplicate", r.dropped.size()},
            {"kept", active.size() - r.dropped.size()},
            {"threshold", config_.question_dedup.threshold}};
  }

  json decontaminate_stage(Run& run) {
    const auto in_path = store("dedup-questions", "questions.jsonl");
    spot_check(in_path, RecordKind::question);
    auto questions = load_records<QuestionRecord>(in_path, question_from_json);
    check_whole_stage_kill(run);
    NGramIndex index(config_.ngram_n, config_.normalization());
    for (const auto& b : config_.benchmarks) {
      for (const auto& item : load_benchmark(b)) index.add(item);
    }
    std::vector<std::size_t> active;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < questions.size(); ++i) {
      if (!questions[i].active()) continue;
      active.push_back(i);
      texts.push_back(questions[i].text);
    }
    const auto r = decontaminate(texts, index);
    for (std::size_t j = 0; j < active.size(); ++j) {
      if (r.contaminated[j]) questions[active[j]].drop(RecordStatus::dropped_contaminated);
    }
    std::map<std::string, std::size_t> status;
    std::vector<json> out;
    for (const auto& q : questions) {
      ++status[std::string(to_string(q.status))];
      out.push_back(to_json(q));
    }
    jsonl::write_all(store(run.stage, "questions.jsonl"), out);
    return {{"input", questions.size()},
            {"dropped_duplicate", status["dropped_duplicate"]},
            {"dropped_contaminated", status["dropped_contaminated"]},
            {"kept", status["active"]},
            {"n", config_.ngram_n},
            {"benchmark_grams", index.size()},
            {"hits_per_benchmark", r.hits_per_benchmark}};
  }

  json respond(Run& run) {
    const auto in_path = store("decontaminate", "questions.jsonl");
    spot_check(in_path, RecordKind::question);
    std::vector<Item> items;
    for (const auto& j : jsonl::read_all(in_path)) items.emplace_back(key_id(j), j);
    run_items(run, items, "questions.jsonl", key_id, [&](const json& in) {
      auto q = question_from_json(in);
      if (q.active()) q.response = synthesize_response(*gateway_, q.text);
      return Outcome{{to_json(q)}, {}, {}};
    });
    std::size_t responded = 0;
    for (const auto& j : jsonl::read_all(store(run.stage, "questions.jsonl"))) responded += j.contains("response");
    return {{"input", items.size()}, {"responded", responded}};
  }

  json analyze(Run& run) {
    const auto in_path = store("respond", "questions.jsonl");
    spot_check(in_path, RecordKind::question);
    std::vector<Item> items;
    for (const auto& j : jsonl::read_all(in_path)) {
      if (j.at("status") == "active") items.emplace_back(key_id(j), j);
    }
    run_items(run, items, "labeled.jsonl", key_id, [&](const json& in) {
      auto q = question_from_json(in);
      q.difficulty = parse_difficulty_output(gateway_->chat(Role::labeler, prompts::difficulty_prompt(q.text)),
                                             &warnings_);
      q.qtype = parse_question_type_output(gateway_->chat(Role::labeler, prompts::question_type_prompt(q.text)),
                                           &warnings_);
      return Outcome{{to_json(q)}, {}, {}};
    });
    check_whole_stage_kill(run);
    const auto labeled = load_records<QuestionRecord>(store(run.stage, "labeled.jsonl"), question_from_json);
    json report = {{"records", labeled.size()}};
    if (labeled.empty()) return report;

    const auto dist = distribution_report(labeled);
    report["distribution"] = to_json(dist);
    if (config_.diversity && labeled.size() >= 2) {
      const auto sampled = sample_uniform(labeled, config_.sample, config_.seed, &warnings_);
      std::vector<std::string> texts;
      for (const auto& q : sampled) texts.push_back(q.text);
      const auto emb = gateway_->embed(texts);
      const auto div = diversity_report(to_points(emb), config_.seed, config_.inertia_k);
      report["diversity"] = to_json(div);
    }
    if (config_.csv) write_csv(run.stage, report);
    return report;
  }

  void write_csv(const std::string& stage, const json& report) const {
    const auto& dist = report.at("distribution");
    auto table = [&](const char* name, const json& m) {
      std::string csv = "label,percent\n";
      for (const auto& [k, v] : m.items()) csv += k + "," + v.dump() + "\n";
      jsonl::write_atomic(store(stage, name), csv);
    };
    table("qtype.csv", dist.at("by_qtype"));
    table("difficulty.csv", dist.at("by_difficulty"));
    jsonl::write_atomic(store(stage, "lengths.csv"),
                        "metric,characters\navg_question_length," + dist.at("avg_question_length").dump() +
                            "\navg_response_length," + dist.at("avg_response_length").dump() + "\n");
    if (report.contains("diversity")) {
      std::string csv = "metric,value\n";
      for (const auto& [k, v] : report.at("diversity").items()) csv += k + "," + v.dump() + "\n";
      jsonl::write_atomic(store(stage, "diversity.csv"), csv);
    }
  }

  PipelineConfig config_;
  Taxonomy taxonomy_;
  std::unique_ptr<Gateway> gateway_;
  Warnings warnings_;
  std::optional<KillPoint> kill_;
};

}  // namespace designer::pipeline
