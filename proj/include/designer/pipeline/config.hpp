#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <toml.hpp>

#include "designer/error.hpp"
#include "designer/gateway.hpp"
#include "designer/hash.hpp"
#include "designer/jsonl.hpp"
#include "designer/postprocess.hpp"
#include "designer/qbank.hpp"
#include "designer/taxonomy.hpp"

namespace designer::pipeline {

namespace fs = std::filesystem;

struct PipelineConfig {
  ProviderConfig provider;
  /// Embedding dimension served by the mock provider.
  std::size_t mock_dimension = 64;
  bool cache = true;

  std::optional<fs::path> taxonomy_path;  // builtin list when absent
  fs::path store_dir = "run";

  // Raw inputs.
  fs::path books;
  fs::path web;
  fs::path bank;
  std::vector<fs::path> benchmarks;

  std::uint64_t seed = 0;

  // Curation.
  std::size_t max_words = kDefaultMaxBookWords;
  int min_score = 3;
  std::size_t book_total = 0;  // 0 = every readable segment
  MinHashParams book_dedup;

  // Question-bank selection.
  std::size_t quota_total = 0;  // 0 = whole bank
  DifficultyRatio ratio = kDefaultRatio;
  std::size_t k_max = 50;

  // Design logics.
  double tau = 0.85;
  bool tau_inclusive = false;

  // Synthesis.
  std::size_t top_k = 5;

  // Post-processing.
  MinHashParams question_dedup;
  std::size_t ngram_n = 13;
  bool punctuation_to_space = false;
  bool strip_symbols = true;

  // Analytics.
  std::size_t sample = 300000;
  std::size_t inertia_k = 0;  // 0 = round(sqrt(N/2))
  bool diversity = true;
  bool csv = false;

  /// Manifest checkpoint interval for per-item stages.
  std::size_t checkpoint_every = 25;

  void validate() const {
    provider.validate();
    auto fail = [](const std::string& m) { throw Error(ErrorCode::invalid_argument, m); };
    if (provider.kind != "mock" && provider.kind != "openai") fail("provider.kind must be mock or openai");
    if (mock_dimension < 1) fail("mock_dimension must be >= 1");
    if (max_words < 1) fail("max_words must be >= 1");
    if (min_score < 0 || min_score > 5) fail("min_score must lie in 0..5");
    if (ratio[0] + ratio[1] + ratio[2] == 0) fail("ratio must not be all zero");
    if (k_max < 2) fail("k_max must be >= 2");
    if (!(tau >= -1.0 && tau <= 1.0)) fail("tau must lie in [-1, 1]");
    if (top_k < 1) fail("top_k must be >= 1");
    if (ngram_n < 1) fail("ngram n must be >= 1");
    if (checkpoint_every < 1) fail("checkpoint_every must be >= 1");
    book_dedup.validate();
    question_dedup.validate();
  }

  text::NormalizeOptions normalization() const { return {strip_symbols, punctuation_to_space}; }

  /// Provider settings with the cache directory resolved (store_dir/cache
  /// unless set explicitly).
  ProviderConfig effective_provider() const {
    auto p = provider;
    if (!cache) {
      p.cache_dir.reset();
    } else if (!p.cache_dir) {
      p.cache_dir = store_dir / "cache";
    }
    return p;
  }

  Taxonomy taxonomy() const { return taxonomy_path ? Taxonomy::load(*taxonomy_path) : Taxonomy::builtin(); }
};

inline json to_json(const MinHashParams& p) {
  return {{"permutations", p.permutations}, {"shingle_n", p.shingle_n}, {"bands", p.bands},
          {"rows", p.rows},                 {"threshold", p.threshold}, {"seed", p.seed}};
}

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> kStages = {
      "label-bank",       "curate-book",     "curate-web",    "select-subset", "extract-logic", "dedup-logic",
      "build-index",      "match-synthesize", "dedup-questions", "decontaminate", "respond",     "analyze"};
  return kStages;
}

inline bool is_stage(const std::string& s) {
  const auto& v = stage_names();
  return std::find(v.begin(), v.end(), s) != v.end();
}

/// The parameters a stage's outputs depend on. Operational knobs (paths,
/// concurrency, retries, rate limits) are left out so they can change
/// between a crash and its resume.
inline json stage_parameters(const PipelineConfig& c, const std::string& stage) {
  json models = json::object();
  for (const auto& [role, name] : c.provider.models) models[std::string(to_string(role))] = name;
  json j = {{"stage", stage},
            {"provider",
             {{"kind", c.provider.kind},
              {"models", models},
              {"temperature", c.provider.temperature},
              {"max_tokens", c.provider.max_tokens},
              {"instruction_template", c.provider.instruction_template},
              {"mock_dimension", c.mock_dimension}}},
            {"taxonomy", sha256_hex(jsonl::canonical(json(c.taxonomy().labels())))}};
  json p = json::object();
  if (stage == "curate-book") {
    p = {{"max_words", c.max_words}, {"book_total", c.book_total}, {"book_dedup", to_json(c.book_dedup)}};
  } else if (stage == "curate-web") {
    p = {{"min_score", c.min_score}};
  } else if (stage == "select-subset") {
    p = {{"quota_total", c.quota_total}, {"ratio", format_ratio(c.ratio)}, {"k_max", c.k_max}, {"seed", c.seed}};
  } else if (stage == "dedup-logic") {
    p = {{"tau", c.tau}, {"inclusive", c.tau_inclusive}};
  } else if (stage == "match-synthesize") {
    p = {{"top_k", c.top_k}};
  } else if (stage == "dedup-questions") {
    p = {{"question_dedup", to_json(c.question_dedup)}};
  } else if (stage == "decontaminate") {
    p = {{"n", c.ngram_n}, {"punctuation_to_space", c.punctuation_to_space}, {"strip_symbols", c.strip_symbols}};
  } else if (stage == "analyze") {
    p = {{"sample", c.sample}, {"inertia_k", c.inertia_k}, {"seed", c.seed}, {"diversity", c.diversity},
         {"csv", c.csv}};
  }
  j["parameters"] = p;
  return j;
}

inline std::string stage_config_hash(const PipelineConfig& c, const std::string& stage) {
  return sha256_hex(jsonl::canonical(stage_parameters(c, stage)));
}

// ---------------------------------------------------------------------------
// TOML

namespace detail {

template <typename T>
void read(const toml::table& t, std::string_view key, T& out) {
  if (auto v = t[key].value<T>()) out = *v;
}

inline void read_size(const toml::table& t, std::string_view key, std::size_t& out) {
  if (auto v = t[key].value<std::int64_t>()) {
    if (*v < 0) throw Error(ErrorCode::invalid_argument, std::string(key) + " must be >= 0");
    out = static_cast<std::size_t>(*v);
  }
}

inline void read_path(const toml::table& t, std::string_view key, fs::path& out, const fs::path& base) {
  if (auto v = t[key].value<std::string>()) out = base / *v;
}

inline void read_minhash(const toml::table* t, MinHashParams& p) {
  if (!t) return;
  read_size(*t, "permutations", p.permutations);
  read_size(*t, "shingle_n", p.shingle_n);
  read_size(*t, "bands", p.bands);
  read_size(*t, "rows", p.rows);
  read(*t, "threshold", p.threshold);
  if (auto v = (*t)["seed"].value<std::int64_t>()) p.seed = static_cast<std::uint64_t>(*v);
}

inline std::optional<Role> role_from_string(std::string_view s) {
  for (auto r : kAllRoles) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

}  // namespace detail

/// Relative paths resolve against the config file's directory.
inline PipelineConfig parse_config(std::string_view toml_text, const fs::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw Error(ErrorCode::invalid_argument, std::string("config: ") + std::string(e.description()));
  }
  PipelineConfig c;
  c.store_dir = base_dir / "run";
  if (auto v = root["seed"].value<std::int64_t>()) c.seed = static_cast<std::uint64_t>(*v);

  if (auto* t = root["paths"].as_table()) {
    detail::read_path(*t, "store_dir", c.store_dir, base_dir);
    if (auto v = (*t)["taxonomy"].value<std::string>()) c.taxonomy_path = base_dir / *v;
    detail::read_path(*t, "books", c.books, base_dir);
    detail::read_path(*t, "web", c.web, base_dir);
    detail::read_path(*t, "bank", c.bank, base_dir);
    if (auto* arr = (*t)["benchmarks"].as_array()) {
      for (const auto& e : *arr) {
        if (auto s = e.value<std::string>()) c.benchmarks.push_back(base_dir / *s);
      }
    }
  }
  if (auto* t = root["provider"].as_table()) {
    auto& p = c.provider;
    detail::read(*t, "kind", p.kind);
    detail::read(*t, "base_url", p.base_url);
    detail::read(*t, "api_key_env", p.api_key_env_name);
    detail::read(*t, "temperature", p.temperature);
    if (auto v = (*t)["max_tokens"].value<std::int64_t>()) p.max_tokens = static_cast<int>(*v);
    if (auto v = (*t)["max_in_flight"].value<std::int64_t>()) p.max_in_flight = static_cast<int>(*v);
    if (auto v = (*t)["max_attempts"].value<std::int64_t>()) p.retry.max_attempts = static_cast<int>(*v);
    if (auto* arr = (*t)["backoff_ms"].as_array()) {
      p.retry.backoff.clear();
      for (const auto& e : *arr) {
        if (auto ms = e.value<std::int64_t>()) p.retry.backoff.emplace_back(*ms);
      }
    }
    if (auto v = (*t)["max_requests"].value<std::int64_t>()) p.max_requests = static_cast<std::uint64_t>(*v);
    detail::read(*t, "requests_per_second", p.requests_per_second);
    detail::read_size(*t, "embed_batch_size", p.embed_batch_size);
    detail::read_size(*t, "embedding_dimension", p.embedding_dimension);
    detail::read(*t, "instruction_template", p.instruction_template);
    detail::read(*t, "timeout_seconds", p.timeout_seconds);
    detail::read_size(*t, "mock_dimension", c.mock_dimension);
    detail::read(*t, "cache", c.cache);
    if (auto v = (*t)["cache_dir"].value<std::string>()) p.cache_dir = base_dir / *v;
    if (auto* models = (*t)["models"].as_table()) {
      for (const auto& [key, value] : *models) {
        const auto role = detail::role_from_string(key.str());
        if (!role) throw Error(ErrorCode::invalid_argument, "unknown provider role '" + std::string(key.str()) + "'");
        if (auto s = value.value<std::string>()) p.models[*role] = *s;
      }
    }
  }
  if (auto* t = root["curate"].as_table()) {
    detail::read_size(*t, "max_words", c.max_words);
    if (auto v = (*t)["min_score"].value<std::int64_t>()) c.min_score = static_cast<int>(*v);
    detail::read_size(*t, "book_total", c.book_total);
    detail::read_minhash((*t)["book_dedup"].as_table(), c.book_dedup);
  }
  if (auto* t = root["select"].as_table()) {
    detail::read_size(*t, "quota_total", c.quota_total);
    if (auto v = (*t)["ratio"].value<std::string>()) c.ratio = parse_ratio(*v);
    detail::read_size(*t, "k_max", c.k_max);
  }
  if (auto* t = root["logic"].as_table()) {
    detail::read(*t, "tau", c.tau);
    detail::read(*t, "inclusive", c.tau_inclusive);
  }
  if (auto* t = root["synthesis"].as_table()) detail::read_size(*t, "top_k", c.top_k);
  detail::read_minhash(root["dedup"].as_table(), c.question_dedup);
  if (auto* t = root["decontaminate"].as_table()) {
    detail::read_size(*t, "n", c.ngram_n);
    if (auto v = (*t)["punctuation"].value<std::string>()) {
      if (*v != "delete" && *v != "space") throw Error(ErrorCode::invalid_argument, "punctuation must be delete or space");
      c.punctuation_to_space = *v == "space";
    }
    detail::read(*t, "strip_symbols", c.strip_symbols);
  }
  if (auto* t = root["analyze"].as_table()) {
    detail::read_size(*t, "sample", c.sample);
    detail::read_size(*t, "inertia_k", c.inertia_k);
    detail::read(*t, "diversity", c.diversity);
    detail::read(*t, "csv", c.csv);
  }
  if (auto v = root["checkpoint_every"].value<std::int64_t>()) c.checkpoint_every = static_cast<std::size_t>(*v);
  c.validate();
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  const auto text = jsonl::read_file(path);
  return parse_config(text, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

}  // namespace designer::pipeline
