#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "designer/error.hpp"
#include "designer/hash.hpp"
#include "designer/model.hpp"

namespace designer {

// ---------------------------------------------------------------------------
// Requests and configuration

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 4096;

  void validate() const {
    if (messages.empty()) throw Error(ErrorCode::invalid_argument, "chat request has no messages");
    if (!(temperature >= 0.0)) throw Error(ErrorCode::invalid_argument, "temperature must be >= 0");
    if (max_tokens < 1) throw Error(ErrorCode::invalid_argument, "max_tokens must be >= 1");
  }

  /// OpenAI-compatible /chat/completions body.
  json to_wire() const {
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    return {{"model", model}, {"messages", std::move(msgs)}, {"temperature", temperature}, {"max_tokens", max_tokens}};
  }

  static ChatRequest from_wire(const json& j) {
    ChatRequest r;
    r.model = j.value("model", "");
    for (const auto& m : j.at("messages")) r.messages.push_back({m.at("role"), m.at("content")});
    r.temperature = j.value("temperature", 0.0);
    r.max_tokens = j.value("max_tokens", 4096);
    return r;
  }
};

struct EmbedRequest {
  std::string model;
  std::optional<std::string> instruction;
  std::vector<std::string> texts;

  void validate() const {
    if (texts.empty()) throw Error(ErrorCode::invalid_argument, "embed request has no texts");
    for (const auto& t : texts) {
      if (t.empty()) throw Error(ErrorCode::invalid_argument, "embed request contains an empty text");
    }
  }
};

/// Cache key over the full request, temperature included.
inline std::string request_hash(const ChatRequest& r) {
  json j = r.to_wire();
  j["kind"] = "chat";
  return sha256_hex(j.dump());
}

inline std::string request_hash(const EmbedRequest& r) {
  json j = {{"kind", "embed"}, {"model", r.model}, {"texts", r.texts}};
  if (r.instruction) j["instruction"] = *r.instruction;
  return sha256_hex(j.dump());
}

enum class Role { labeler, classifier, extractor, synthesizer, responder, embedder };

inline constexpr Role kAllRoles[] = {Role::labeler,     Role::classifier, Role::extractor,
                                     Role::synthesizer, Role::responder,  Role::embedder};

constexpr std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::labeler: return "labeler";
    case Role::classifier: return "classifier";
    case Role::extractor: return "extractor";
    case Role::synthesizer: return "synthesizer";
    case Role::responder: return "responder";
    case Role::embedder: return "embedder";
  }
  return "";
}

struct RetryPolicy {
  int max_attempts = 3;
  /// Delay before retry i (0-based); the last entry repeats.
  std::vector<std::chrono::milliseconds> backoff = {std::chrono::milliseconds(500), std::chrono::milliseconds(2000),
                                                    std::chrono::milliseconds(8000)};

  std::chrono::milliseconds delay_before_retry(int retry_index) const {
    if (backoff.empty()) return std::chrono::milliseconds(0);
    return backoff[std::min<std::size_t>(static_cast<std::size_t>(retry_index), backoff.size() - 1)];
  }
};

struct ProviderConfig {
  std::string kind = "mock";  // "mock" or "openai"
  std::string base_url = "http://localhost:8000/v1";
  std::string api_key_env_name = "OPENAI_API_KEY";
  std::map<Role, std::string> models = {
      {Role::labeler, "labeler"},         {Role::classifier, "classifier"}, {Role::extractor, "extractor"},
      {Role::synthesizer, "synthesizer"}, {Role::responder, "responder"},   {Role::embedder, "embedder"}};
  double temperature = 0.0;
  int max_tokens = 4096;
  int max_in_flight = 8;
  RetryPolicy retry;
  /// Hard cap on HTTP requests sent by one gateway; 0 = unlimited.
  std::uint64_t max_requests = 0;
  /// Client-side token bucket over request count; 0 = unlimited.
  double requests_per_second = 0.0;
  std::size_t embed_batch_size = 32;
  /// Expected embedding dimension; 0 = learn from the first response.
  std::size_t embedding_dimension = 0;
  /// "{instruction}" and "{text}" are substituted.
  std::string instruction_template = "Instruct: {instruction}\nQuery: {text}";
  std::optional<std::filesystem::path> cache_dir;
  double timeout_seconds = 600.0;

  void validate() const {
    if (max_in_flight < 1) throw Error(ErrorCode::invalid_argument, "max_in_flight must be >= 1");
    if (retry.max_attempts < 1) throw Error(ErrorCode::invalid_argument, "max_attempts must be >= 1");
    if (embed_batch_size < 1) throw Error(ErrorCode::invalid_argument, "embed_batch_size must be >= 1");
    if (requests_per_second < 0) throw Error(ErrorCode::invalid_argument, "requests_per_second must be >= 0");
  }

  const std::string& model(Role r) const {
    auto it = models.find(r);
    if (it == models.end()) throw Error(ErrorCode::invalid_argument, "no model for role " + std::string(to_string(r)));
    return it->second;
  }
};

// ---------------------------------------------------------------------------
// Transport

struct HttpResponse {
  int status = 0;  // 0 = network failure
  std::string body;
};

/// POSTs a JSON body to an OpenAI-compatible path ("/chat/completions",
/// "/embeddings"). Implementations must be safe to call concurrently.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body) = 0;
};

inline bool is_retryable_status(int status) {
  return status == 0 || status == 408 || status == 409 || status == 425 || status == 429 || status >= 500;
}

// ---------------------------------------------------------------------------
// Concurrency primitives

class Semaphore {
 public:
  explicit Semaphore(int count) : count_(count) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return count_ > 0; });
    --count_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      ++count_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int count_;
};

/// Token bucket on request count. rate <= 0 disables limiting.
class TokenBucket {
 public:
  explicit TokenBucket(double rate) : rate_(rate), capacity_(std::max(1.0, rate)), tokens_(capacity_) {}

  void acquire() {
    if (rate_ <= 0) return;
    std::unique_lock lock(mu_);
    for (;;) {
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

 private:
  void refill() {
    const auto now = std::chrono::steady_clock::now();
    const std::chrono::duration<double> dt = now - last_;
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + dt.count() * rate_);
  }

  std::mutex mu_;
  double rate_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// File cache: content-addressed, one file per request hash.

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  std::optional<std::string> get(const std::string& key) const {
    std::ifstream in(dir_ / key, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void put(const std::string& key, const std::string& value) const {
    const auto tmp = dir_ / (key + ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << value;
      if (!out) throw Error(ErrorCode::io_error, "cannot write cache entry " + tmp.string());
    }
    std::filesystem::rename(tmp, dir_ / key);
  }

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct GatewayStats {
  std::uint64_t http_requests = 0;  // attempts actually sent
  std::uint64_t cache_hits = 0;
  std::uint64_t retries = 0;
};

// ---------------------------------------------------------------------------
// Gateway

class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(ProviderConfig config, std::shared_ptr<Transport> transport)
      : config_(std::move(config)),
        transport_(std::move(transport)),
        in_flight_(config_.max_in_flight),
        bucket_(config_.requests_per_second),
        sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    config_.validate();
    if (!transport_) throw Error(ErrorCode::invalid_argument, "gateway requires a transport");
    if (config_.cache_dir) cache_.emplace(*config_.cache_dir);
    expected_dim_ = config_.embedding_dimension;
  }

  /// Replaces the backoff sleep (tests use a no-op).
  void set_sleeper(Sleeper s) { sleeper_ = std::move(s); }

  const ProviderConfig& config() const noexcept { return config_; }

  GatewayStats stats() const {
    return {http_requests_.load(), cache_hits_.load(), retries_.load()};
  }

  ChatRequest make_chat(Role role, std::string prompt) const {
    ChatRequest r;
    r.model = config_.model(role);
    r.messages.push_back({"user", std::move(prompt)});
    r.temperature = config_.temperature;
    r.max_tokens = config_.max_tokens;
    return r;
  }

  std::string chat(Role role, std::string prompt) { return chat_complete(make_chat(role, std::move(prompt))); }

  std::string chat_complete(const ChatRequest& req) {
    req.validate();
    const auto key = request_hash(req);
    if (cache_) {
      if (auto hit = cache_->get(key)) {
        ++cache_hits_;
        return *hit;
      }
    }
    const auto body = send_with_retry("/chat/completions", req.to_wire().dump());
    auto text = parse_chat_response(body);
    if (cache_) cache_->put(key, text);
    return text;
  }

  std::vector<EmbeddingVector> embed(std::vector<std::string> texts, std::optional<std::string> instruction = {}) {
    EmbedRequest r;
    r.model = config_.model(Role::embedder);
    r.instruction = std::move(instruction);
    r.texts = std::move(texts);
    return embed_request(r);
  }

  /// One vector per text, in input order; batches are split by
  /// embed_batch_size and cached per batch.
  std::vector<EmbeddingVector> embed_request(const EmbedRequest& req) {
    req.validate();
    std::vector<EmbeddingVector> out;
    out.reserve(req.texts.size());
    for (std::size_t begin = 0; begin < req.texts.size(); begin += config_.embed_batch_size) {
      EmbedRequest chunk{req.model, req.instruction, {}};
      const auto end = std::min(req.texts.size(), begin + config_.embed_batch_size);
      chunk.texts.assign(req.texts.begin() + static_cast<std::ptrdiff_t>(begin),
                         req.texts.begin() + static_cast<std::ptrdiff_t>(end));
      auto vectors = embed_chunk(chunk);
      for (auto& v : vectors) out.push_back(std::move(v));
    }
    return out;
  }

  std::string render_embedding_input(const std::string& text, const std::optional<std::string>& instruction) const {
    if (!instruction) return text;
    std::string out = config_.instruction_template;
    replace_all(out, "{instruction}", *instruction);
    replace_all(out, "{text}", text);
    return out;
  }

 private:
  static void replace_all(std::string& s, const std::string& from, const std::string& to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
      s.replace(pos, from.size(), to);
    }
  }

  std::vector<EmbeddingVector> embed_chunk(const EmbedRequest& req) {
    const auto key = request_hash(req);
    if (cache_) {
      if (auto hit = cache_->get(key)) {
        ++cache_hits_;
        return check_dimensions(parse_embedding_array(json::parse(*hit), req.texts.size()));
      }
    }
    json input = json::array();
    for (const auto& t : req.texts) input.push_back(render_embedding_input(t, req.instruction));
    const json wire = {{"model", req.model}, {"input", std::move(input)}};
    const auto body = send_with_retry("/embeddings", wire.dump());
    auto vectors = check_dimensions(parse_embedding_response(body, req.texts.size()));
    if (cache_) {
      json arr = json::array();
      for (const auto& v : vectors) arr.push_back(v.values);
      cache_->put(key, arr.dump());
    }
    return vectors;
  }

  std::vector<EmbeddingVector> check_dimensions(std::vector<EmbeddingVector> vectors) {
    std::lock_guard lock(dim_mu_);
    for (const auto& v : vectors) {
      if (v.values.empty()) throw Error(ErrorCode::dimension_mismatch, "provider returned an empty embedding");
      if (expected_dim_ == 0) expected_dim_ = v.values.size();
      if (v.values.size() != expected_dim_) {
        throw Error(ErrorCode::dimension_mismatch, "expected dimension " + std::to_string(expected_dim_) + ", got " +
                                                       std::to_string(v.values.size()));
      }
    }
    return vectors;
  }

  static std::vector<EmbeddingVector> parse_embedding_array(const json& arr, std::size_t expected) {
    std::vector<EmbeddingVector> out;
    for (const auto& v : arr) out.push_back(EmbeddingVector{v.get<std::vector<double>>()});
    if (out.size() != expected) throw Error(ErrorCode::dimension_mismatch, "embedding count mismatch");
    return out;
  }

  static std::vector<EmbeddingVector> parse_embedding_response(const std::string& body, std::size_t expected) {
    try {
      const auto j = json::parse(body);
      const auto& data = j.at("data");
      std::vector<EmbeddingVector> out(data.size());
      std::vector<bool> seen(data.size(), false);
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto idx = data[i].value("index", i);
        if (idx >= out.size() || seen[idx]) throw Error(ErrorCode::provider_unavailable, "bad embedding index");
        seen[idx] = true;
        out[idx].values = data[i].at("embedding").get<std::vector<double>>();
      }
      if (out.size() != expected) {
        throw Error(ErrorCode::dimension_mismatch, "expected " + std::to_string(expected) + " embeddings, got " +
                                                       std::to_string(out.size()));
      }
      return out;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::provider_unavailable, std::string("malformed embeddings response: ") + e.what(), body);
    }
  }

  static std::string parse_chat_response(const std::string& body) {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::provider_unavailable, std::string("malformed chat response: ") + e.what(), body);
    }
    const auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty()) {
      throw Error(ErrorCode::content_refusal, "response has no choices", body);
    }
    const auto& choice = (*choices)[0];
    if (choice.value("finish_reason", "") == "content_filter") {
      throw Error(ErrorCode::content_refusal, "provider blocked the completion", body);
    }
    const auto msg = choice.find("message");
    std::string content;
    if (msg != choice.end() && msg->contains("content") && (*msg)["content"].is_string()) {
      content = (*msg)["content"].get<std::string>();
    }
    if (content.empty()) throw Error(ErrorCode::content_refusal, "provider returned an empty completion", body);
    return content;
  }

  void reserve_budget() {
    if (config_.max_requests == 0) return;
    auto current = http_requests_.load();
    do {
      if (current >= config_.max_requests) {
        throw Error(ErrorCode::budget_exceeded,
                    "request cap of " + std::to_string(config_.max_requests) + " reached");
      }
    } while (!http_requests_.compare_exchange_weak(current, current + 1));
  }

  std::string send_with_retry(const std::string& path, const std::string& body) {
    HttpResponse last;
    for (int attempt = 0; attempt < config_.retry.max_attempts; ++attempt) {
      if (attempt > 0) {
        ++retries_;
        sleeper_(config_.retry.delay_before_retry(attempt - 1));
      }
      bucket_.acquire();
      reserve_budget_or_count();
      in_flight_.acquire();
      try {
        last = transport_->post(path, body);
      } catch (...) {
        in_flight_.release();
        throw;
      }
      in_flight_.release();
      if (last.status >= 200 && last.status < 300) return last.body;
      if (!is_retryable_status(last.status)) break;
    }
    throw Error(ErrorCode::provider_unavailable,
                "POST " + path + " failed with status " + std::to_string(last.status), last.body);
  }

  void reserve_budget_or_count() {
    if (config_.max_requests == 0) {
      ++http_requests_;
    } else {
      reserve_budget();
    }
  }

  ProviderConfig config_;
  std::shared_ptr<Transport> transport_;
  Semaphore in_flight_;
  TokenBucket bucket_;
  Sleeper sleeper_;
  std::optional<ResponseCache> cache_;
  std::atomic<std::uint64_t> http_requests_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> retries_{0};
  std::mutex dim_mu_;
  std::size_t expected_dim_ = 0;
};

}  // namespace designer
