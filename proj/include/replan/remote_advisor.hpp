#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

#include "replan/advisor.hpp"

namespace replan {

enum class RequestKind : std::uint8_t { Objectives, Recommend, Score };

std::string_view to_string(RequestKind k);

struct AdvisorRequest {
  RequestKind kind = RequestKind::Recommend;
  std::string prompt;

  // SHA-256 of the rendered prompt, hex encoded.
  std::string digest() const;
};

struct AdvisorResponse {
  std::string raw;
  std::chrono::milliseconds latency{0};
  bool from_cache = false;
};

std::string sha256_hex(std::string_view data);

// Prompt templates with {NAME} placeholders, one file per template.
class PromptLibrary {
 public:
  static PromptLibrary load(const std::filesystem::path& dir);

  void set(std::string name, std::string text) { templates_[std::move(name)] = std::move(text); }
  const std::string& get(const std::string& name) const;

  // Substitutes every {KEY}; throws ValidationError for a placeholder with no value.
  std::string render(const std::string& name, const std::map<std::string, std::string>& values) const;

 private:
  std::map<std::string, std::string> templates_;
};

// Append-only JSON-lines response cache keyed by prompt digest.
class ResponseCache {
 public:
  ResponseCache() = default;
  // Loads existing records; an empty path keeps the cache in memory only.
  explicit ResponseCache(std::filesystem::path path);

  std::optional<std::string> lookup(const std::string& digest) const;
  void store(const std::string& digest, RequestKind kind, const std::string& raw);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> entries_;
};

struct RemoteConfig {
  std::string endpoint = "https://api.openai.com";  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  std::string api_key;
  std::filesystem::path cache_path = "advisor_cache.jsonl";
  int max_attempts = 3;
  std::chrono::milliseconds backoff{500};
  int max_in_flight = 4;
  std::chrono::seconds timeout{60};

  // Reads the credential from REPLAN_API_KEY.
  static std::string api_key_from_env();
};

// Sends the rendered prompt as a single user message with temperature 0. 429, 5xx and
// connection failures are retried with exponential backoff; other statuses fail at once.
// Throws TransportError when every attempt failed.
std::string post_chat_completion(const RemoteConfig& cfg, const std::string& prompt);

Demands parse_objectives(const std::string& text);
std::vector<AspectRating> parse_ratings(const std::string& text);

class RemoteAdvisor : public Advisor {
 public:
  using Transport = std::function<std::string(const std::string& prompt)>;

  RemoteAdvisor(RemoteConfig config, PromptLibrary prompts);
  // Test seam: replaces the HTTP call.
  RemoteAdvisor(RemoteConfig config, PromptLibrary prompts, Transport transport);

  Demands formulate_objectives(const Demographics& demographics,
                               const RegionSummary& region) override;
  RecSet recommend_types(const PlotContext& plot, const RegionStats& stats,
                         const Demands& demands,
                         const std::array<int, kNumSubtypes>& facility_tally) override;
  std::vector<StakeholderRating> score_satisfaction(const SchemeSummary& scheme) override;

  // Cached chat call. `validate` throws on a reply that fails its schema; a failing
  // reply is re-requested once (bypassing the cache) and then reported as AdvisorError
  // carrying the raw text. Only validated replies are cached.
  AdvisorResponse chat(const AdvisorRequest& request,
                       const std::function<void(const std::string&)>& validate);

  std::size_t network_calls() const { return network_calls_.load(); }
  const ResponseCache& cache() const { return cache_; }

 private:
  std::string call_network(const std::string& prompt);

  RemoteConfig config_;
  PromptLibrary prompts_;
  Transport transport_;
  ResponseCache cache_;
  std::counting_semaphore<64> in_flight_;
  std::atomic<std::size_t> network_calls_{0};
};

// Prompt placeholder values, exposed for tests.
std::string describe_targets(const Demands& demands);
std::string describe_scheme(const SchemeSummary& scheme);

}  // namespace replan
