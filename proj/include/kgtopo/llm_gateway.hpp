#pragma once

/// @file llm_gateway.hpp
/// Completion backends, retry policy, the on-disk response cache and bounded
/// concurrent dispatch.
///
/// A Backend sends one request and either returns text or throws kgtopo::Error
/// with one of Auth, RateLimited, Transport or BackendRefused. RateLimited and
/// Transport are retried; the others surface immediately. The cache is a
/// directory of JSON records keyed by the SHA-256 of the request tuple and
/// written with write-to-temp + rename, so concurrent writers of the same key
/// leave one complete record behind.

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgtopo/error.hpp"

namespace kgtopo {

struct CompletionRequest {
  std::string model_id = "gpt-4-32k";
  std::string prompt;
  double temperature = 0.0;
  std::size_t max_output_tokens = 2000;

  void validate() const {
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
      throw Error(Errc::InvalidArgument, "temperature must lie in [0, 2]");
    }
    if (max_output_tokens < 1) throw Error(Errc::InvalidArgument, "max_output_tokens must be >= 1");
  }

  bool operator==(const CompletionRequest&) const = default;
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t total_tokens = 0;

  bool operator==(const TokenUsage&) const = default;
};

struct BackendReply {
  std::string text;
  std::optional<TokenUsage> usage;
};

struct CompletionResult {
  std::string text;
  std::optional<TokenUsage> usage;
  std::chrono::milliseconds latency{0};
  bool from_cache = false;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendReply send(const CompletionRequest& request) = 0;
  virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Hashing

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::Io, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0f]);
  }
  return out;
}

inline nlohmann::json request_to_json(const CompletionRequest& r) {
  return {{"model_id", r.model_id},
          {"prompt", r.prompt},
          {"temperature", r.temperature},
          {"max_output_tokens", r.max_output_tokens}};
}

struct CacheKey {
  std::string digest;

  bool operator==(const CacheKey&) const = default;
};

/// Digest of the canonical JSON of (model_id, prompt, temperature,
/// max_output_tokens); nlohmann sorts object keys, so the text is stable.
inline CacheKey cache_key(const CompletionRequest& r) {
  return {sha256_hex(request_to_json(r).dump())};
}

// ---------------------------------------------------------------------------
// Retry

struct RetryPolicy {
  /// Waits before retry 1, 2, 3, ...; the number of entries is the retry limit.
  std::vector<std::chrono::milliseconds> backoff{std::chrono::seconds(1), std::chrono::seconds(4),
                                                 std::chrono::seconds(16)};
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };

  static RetryPolicy none() {
    RetryPolicy p;
    p.backoff.clear();
    return p;
  }

  static bool is_transient(Errc code) noexcept {
    return code == Errc::RateLimited || code == Errc::Transport;
  }
};

// ---------------------------------------------------------------------------
// Cache

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(Errc::CacheIo, "cannot create cache dir '" + dir_.string() + "': " + ec.message());
  }

  const std::filesystem::path& dir() const noexcept { return dir_; }

  std::filesystem::path path_for(const CacheKey& key) const {
    return dir_ / key.digest.substr(0, 2) / (key.digest + ".json");
  }

  /// Stored reply for `request`, or nullopt on a miss. A record whose stored
  /// request differs from `request` counts as a miss.
  std::optional<BackendReply> load(const CompletionRequest& request) const {
    const auto path = path_for(cache_key(request));
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    try {
      const auto j = nlohmann::json::parse(in);
      if (j.at("request") != request_to_json(request)) return std::nullopt;
      BackendReply reply;
      reply.text = j.at("response").at("text").get<std::string>();
      const auto& usage = j.at("response").at("usage");
      if (!usage.is_null()) {
        reply.usage = TokenUsage{usage.at("prompt_tokens").get<std::int64_t>(),
                                 usage.at("completion_tokens").get<std::int64_t>(),
                                 usage.at("total_tokens").get<std::int64_t>()};
      }
      return reply;
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::CacheIo, "corrupt cache record '" + path.string() + "': " + e.what());
    }
  }

  void store(const CompletionRequest& request, const BackendReply& reply) const {
    const auto path = path_for(cache_key(request));
    nlohmann::json usage = nullptr;
    if (reply.usage) {
      usage = {{"prompt_tokens", reply.usage->prompt_tokens},
               {"completion_tokens", reply.usage->completion_tokens},
               {"total_tokens", reply.usage->total_tokens}};
    }
    const nlohmann::json record = {{"request", request_to_json(request)},
                                   {"response", {{"text", reply.text}, {"usage", usage}}},
                                   {"timestamp", utc_timestamp()}};
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(Errc::CacheIo, "cannot create '" + path.parent_path().string() + "'");

    static std::atomic<std::uint64_t> counter{0};
    std::ostringstream tmp_name;
    tmp_name << path.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
             << "." << counter.fetch_add(1);
    const auto tmp = path.parent_path() / tmp_name.str();
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << record.dump(2) << "\n";
      if (!out) throw Error(Errc::CacheIo, "cannot write '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
      std::filesystem::remove(tmp, ec);
      throw Error(Errc::CacheIo, "cannot publish cache record '" + path.string() + "'");
    }
  }

 private:
  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Mock backend

struct MockRule {
  std::string match;  // exact prompt, or substring of it
  std::string response;
};

/// Scripted backend. Exact-prompt rules win over substring rules; among
/// substring rules the first in script order wins; an empty match is a
/// catch-all. A responder, when set, is consulted before the rules and may
/// return nullopt to fall through or throw to simulate failures. Prompts
/// nothing answers are refused.
class MockBackend final : public Backend {
 public:
  using Responder = std::function<std::optional<std::string>(const CompletionRequest&)>;

  MockBackend() = default;
  explicit MockBackend(std::vector<MockRule> rules) : rules_(std::move(rules)) {}
  MockBackend(std::initializer_list<MockRule> rules) : rules_(rules) {}
  explicit MockBackend(Responder responder) : responder_(std::move(responder)) {}

  void set_delay(std::chrono::milliseconds d) { delay_ = d; }

  BackendReply send(const CompletionRequest& request) override {
    const int now = in_flight_.fetch_add(1) + 1;
    int seen = max_in_flight_.load();
    while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
    }
    struct Leave {
      std::atomic<int>& n;
      ~Leave() { n.fetch_sub(1); }
    } leave{in_flight_};
    {
      std::lock_guard lock(mu_);
      log_.push_back(request.prompt);
    }
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    if (responder_) {
      if (auto text = responder_(request)) return {std::move(*text), std::nullopt};
    }
    for (const auto& rule : rules_) {
      if (rule.match == request.prompt) return {rule.response, std::nullopt};
    }
    for (const auto& rule : rules_) {
      if (request.prompt.find(rule.match) != std::string::npos) return {rule.response, std::nullopt};
    }
    throw Error(Errc::BackendRefused, "mock has no script entry for prompt");
  }

  std::string name() const override { return "mock"; }

  std::vector<std::string> call_log() const {
    std::lock_guard lock(mu_);
    return log_;
  }
  std::size_t calls() const {
    std::lock_guard lock(mu_);
    return log_.size();
  }
  int max_in_flight() const { return max_in_flight_.load(); }

 private:
  std::vector<MockRule> rules_;
  Responder responder_;
  std::chrono::milliseconds delay_{0};
  mutable std::mutex mu_;
  std::vector<std::string> log_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

/// Mock script file: JSON array of {"match": ..., "response": ...}.
inline std::vector<MockRule> parse_mock_script(std::string_view json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    if (!j.is_array()) throw Error(Errc::Config, "mock script must be a JSON array");
    std::vector<MockRule> rules;
    for (const auto& item : j) {
      rules.push_back({item.at("match").get<std::string>(), item.at("response").get<std::string>()});
    }
    return rules;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Config, std::string("mock script: ") + e.what());
  }
}

inline std::vector<MockRule> load_mock_script(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open mock script '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mock_script(ss.str());
}

// ---------------------------------------------------------------------------
// Dispatch

struct CompletionOutcome {
  std::optional<CompletionResult> result;
  std::optional<Error> error;

  bool ok() const noexcept { return result.has_value(); }
};

/// Shared entry point for every stage: cache lookup, retrying backend calls,
/// and a global bound on concurrently outstanding backend requests.
class Gateway {
 public:
  struct Options {
    RetryPolicy retry;
    std::size_t max_in_flight = 1;
  };

  Gateway(Backend& backend, ResponseCache* cache, Options options)
      : backend_(backend),
        cache_(cache),
        options_(std::move(options)),
        permits_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, options_.max_in_flight))) {}

  Gateway(Backend& backend, ResponseCache* cache = nullptr) : Gateway(backend, cache, Options{}) {}

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  CompletionResult complete(const CompletionRequest& request) {
    request.validate();
    const auto started = std::chrono::steady_clock::now();
    if (cache_) {
      if (auto hit = cache_->load(request)) {
        cache_hits_.fetch_add(1);
        return {std::move(hit->text), hit->usage, elapsed(started), true};
      }
    }
    BackendReply reply = send_with_retry(request);
    if (cache_) cache_->store(request, reply);
    return {std::move(reply.text), reply.usage, elapsed(started), false};
  }

  /// Results are positionally aligned with `requests`; failures are reported
  /// per item. At most max_in_flight workers run at once.
  std::vector<CompletionOutcome> complete_many(std::span<const CompletionRequest> requests) {
    std::vector<CompletionOutcome> outcomes(requests.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < requests.size(); i = next.fetch_add(1)) {
        try {
          outcomes[i].result = complete(requests[i]);
        } catch (const Error& e) {
          outcomes[i].error = e;
        } catch (const std::exception& e) {
          outcomes[i].error = Error(Errc::Transport, e.what());
        }
      }
    };
    const std::size_t workers = std::min(std::max<std::size_t>(1, options_.max_in_flight), requests.size());
    if (workers <= 1) {
      worker();
      return outcomes;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    pool.clear();  // joins
    return outcomes;
  }

  std::size_t backend_calls() const noexcept { return backend_calls_.load(); }
  std::size_t cache_hits() const noexcept { return cache_hits_.load(); }
  std::size_t max_in_flight() const noexcept { return options_.max_in_flight; }
  Backend& backend() noexcept { return backend_; }

 private:
  static std::chrono::milliseconds elapsed(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 since);
  }

  BackendReply send_with_retry(const CompletionRequest& request) {
    for (std::size_t attempt = 0;; ++attempt) {
      try {
        permits_.acquire();
        struct Release {
          std::counting_semaphore<>& s;
          ~Release() { s.release(); }
        } release{permits_};
        backend_calls_.fetch_add(1);
        return backend_.send(request);
      } catch (const Error& e) {
        if (!RetryPolicy::is_transient(e.code()) || attempt >= options_.retry.backoff.size()) throw;
        options_.retry.sleep(options_.retry.backoff[attempt]);
      }
    }
  }

  Backend& backend_;
  ResponseCache* cache_;
  Options options_;
  std::counting_semaphore<> permits_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

inline CompletionResult complete(Backend& backend, const CompletionRequest& request,
                                 RetryPolicy retry = {}) {
  Gateway gw(backend, nullptr, {std::move(retry), 1});
  return gw.complete(request);
}

inline CompletionResult cached_complete(Backend& backend, ResponseCache& cache,
                                        const CompletionRequest& request, RetryPolicy retry = {}) {
  Gateway gw(backend, &cache, {std::move(retry), 1});
  return gw.complete(request);
}

inline std::vector<CompletionOutcome> complete_many(Backend& backend, ResponseCache* cache,
                                                    std::span<const CompletionRequest> requests,
                                                    std::size_t max_in_flight,
                                                    RetryPolicy retry = {}) {
  if (max_in_flight < 1) throw Error(Errc::InvalidArgument, "max_in_flight must be >= 1");
  Gateway gw(backend, cache, {std::move(retry), max_in_flight});
  return gw.complete_many(requests);
}

/// Request template applied to every prompt a stage sends.
struct ModelSettings {
  std::string model_id = "gpt-4-32k";
  double temperature = 0.0;
  std::size_t max_output_tokens = 2000;

  CompletionRequest request(std::string prompt) const {
    return {model_id, std::move(prompt), temperature, max_output_tokens};
  }
};

}  // namespace kgtopo
