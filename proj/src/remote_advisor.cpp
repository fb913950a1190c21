#include "replan/remote_advisor.hpp"

#include "httplib.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "replan/error.hpp"

namespace replan {

using json = nlohmann::json;

namespace {

std::string fold(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string fixed4(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << v;
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Pulls the outermost {...} out of a chatty reply and drops trailing commas.
json extract_object(const std::string& text) {
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw ValidationError("reply contains no JSON object");
  }
  std::string body = text.substr(open, close - open + 1);
  static const std::regex trailing_comma(R"(,\s*([}\]]))");
  body = std::regex_replace(body, trailing_comma, "$1");
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("reply is not a JSON object");
  return j;
}

const json* find_key(const json& obj, std::string_view key) {
  const std::string want = fold(key);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (fold(it.key()) == want) return &it.value();
  }
  return nullptr;
}

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<64>& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<64>& s_;
};

constexpr std::array<std::pair<Stakeholder, const char*>, 3> kScoreTemplates = {{
    {Stakeholder::Resident, "satisfaction_resident"},
    {Stakeholder::Government, "satisfaction_government"},
    {Stakeholder::Developer, "satisfaction_developer"},
}};

}  // namespace

std::string_view to_string(RequestKind k) {
  switch (k) {
    case RequestKind::Objectives:
      return "objectives";
    case RequestKind::Recommend:
      return "recommend";
    case RequestKind::Score:
      return "score";
  }
  return "recommend";
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

std::string AdvisorRequest::digest() const { return sha256_hex(prompt); }

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  PromptLibrary lib;
  for (const char* name : {"objectives", "recommend", "satisfaction_resident",
                           "satisfaction_government", "satisfaction_developer"}) {
    const auto file = dir / (std::string(name) + ".txt");
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read prompt template " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    lib.set(name, ss.str());
  }
  return lib;
}

const std::string& PromptLibrary::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw ValidationError("no prompt template named '" + name + "'");
  return it->second;
}

std::string PromptLibrary::render(const std::string& name,
                                  const std::map<std::string, std::string>& values) const {
  const std::string& tpl = get(name);
  std::string out;
  out.reserve(tpl.size());
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tpl.size() && (std::isupper(static_cast<unsigned char>(tpl[j])) || tpl[j] == '_')) {
        ++j;
      }
      if (j < tpl.size() && tpl[j] == '}' && j > i + 1) {
        const std::string key = tpl.substr(i + 1, j - i - 1);
        auto it = values.find(key);
        if (it == values.end()) {
          throw ValidationError("prompt '" + name + "' has no value for {" + key + "}");
        }
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out.push_back(tpl[i++]);
  }
  return out;
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.contains("digest") || !rec.contains("raw")) {
      warn("skipping malformed advisor cache line in " + path_.string());
      continue;
    }
    entries_[rec["digest"].get<std::string>()] = rec["raw"].get<std::string>();
  }
}

std::optional<std::string> ResponseCache::lookup(const std::string& digest) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(digest);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::store(const std::string& digest, RequestKind kind, const std::string& raw) {
  std::lock_guard lock(mu_);
  entries_[digest] = raw;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to advisor cache " + path_.string());
  json rec;
  rec["digest"] = digest;
  rec["kind"] = to_string(kind);
  rec["raw"] = raw;
  rec["timestamp"] = utc_timestamp();
  out << rec.dump() << '\n';
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::string RemoteConfig::api_key_from_env() {
  const char* key = std::getenv("REPLAN_API_KEY");
  return key ? std::string(key) : std::string();
}

std::string post_chat_completion(const RemoteConfig& cfg, const std::string& prompt) {
  if (cfg.endpoint.empty()) throw TransportError("remote advisor endpoint is not configured");
  if (cfg.api_key.empty()) throw TransportError("REPLAN_API_KEY is not set");

  json body;
  body["model"] = cfg.model;
  body["temperature"] = 0;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  const std::string payload = body.dump();
  const httplib::Headers headers = {{"Authorization", "Bearer " + cfg.api_key}};

  std::string last_error = "no attempt made";
  int last_status = 0;
  const int attempts = std::max(1, cfg.max_attempts);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(cfg.backoff * (1 << (attempt - 1)));

    httplib::Client client(cfg.endpoint);
    client.set_connection_timeout(cfg.timeout);
    client.set_read_timeout(cfg.timeout);
    client.set_write_timeout(cfg.timeout);
    auto res = client.Post(cfg.path, headers, payload, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      last_status = 0;
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      last_status = res->status;
      continue;
    }
    if (res->status != 200) {
      throw TransportError("chat completion returned HTTP " + std::to_string(res->status),
                           res->status);
    }
    json reply = json::parse(res->body, nullptr, false);
    try {
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      throw TransportError("chat completion body has no choices[0].message.content", 200);
    }
  }
  throw TransportError("chat completion failed after " + std::to_string(attempts) +
                           " attempts: " + last_error,
                       last_status);
}

Demands parse_objectives(const std::string& text) {
  const json obj = extract_object(text);
  Demands d;
  const std::array<std::pair<const char*, FacilitySubtype>, 5> counts = {{
      {"Hospital", FacilitySubtype::LargeHospital},
      {"Clinic", FacilitySubtype::Clinic},
      {"Secondary", FacilitySubtype::SecondarySchool},
      {"Primary", FacilitySubtype::PrimarySchool},
      {"Kindergarten", FacilitySubtype::Kindergarten},
  }};
  for (const auto& [key, subtype] : counts) {
    const json* v = find_key(obj, key);
    if (!v) throw ValidationError(std::string("objectives reply is missing \"") + key + "\"");
    long n = -1;
    if (v->is_number_integer()) {
      n = v->get<long>();
    } else if (v->is_string()) {
      const std::string s = v->get<std::string>();
      char* end = nullptr;
      n = std::strtol(s.c_str(), &end, 10);
      if (end == s.c_str()) n = -1;
    }
    if (n < 0) throw ValidationError(std::string("objectives reply has a bad count for ") + key);
    d.facility_counts[subtype] = static_cast<int>(n);
  }
  const std::array<std::pair<const char*, FuncType>, 5> levels = {{
      {"Business", FuncType::Business},
      {"Recreation", FuncType::Recreation},
      {"Office", FuncType::Office},
      {"Park", FuncType::Park},
      {"Open space", FuncType::OpenSpace},
  }};
  for (const auto& [key, type] : levels) {
    const json* v = find_key(obj, key);
    if (!v) throw ValidationError(std::string("objectives reply is missing \"") + key + "\"");
    const auto lv = v->is_string() ? parse_coverage_level(v->get<std::string>()) : std::nullopt;
    if (!lv) throw ValidationError(std::string("objectives reply has a bad level for ") + key);
    d.coverage_targets[type] = coverage_fraction(*lv);
  }
  return d;
}

std::vector<AspectRating> parse_ratings(const std::string& text) {
  const json obj = extract_object(text);
  std::vector<AspectRating> out;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    std::string level_text;
    std::string reason;
    if (it.value().is_string()) {
      level_text = it.value().get<std::string>();
    } else if (it.value().is_object()) {
      const json* lv = find_key(it.value(), "level");
      if (!lv || !lv->is_string()) {
        throw ValidationError("rating for '" + it.key() + "' has no level");
      }
      level_text = lv->get<std::string>();
      if (const json* r = find_key(it.value(), "reason"); r && r->is_string()) {
        reason = r->get<std::string>();
      }
    } else {
      throw ValidationError("rating for '" + it.key() + "' is neither a string nor an object");
    }
    const auto level = parse_sat_level(level_text);
    if (!level) {
      throw ValidationError("unrecognised satisfaction level '" + level_text + "'");
    }
    out.push_back({it.key(), *level, reason});
  }
  if (out.empty()) throw ValidationError("satisfaction reply rates no aspect");
  return out;
}

std::string describe_targets(const Demands& demands) {
  std::ostringstream os;
  os << "coverage of Business " << num(demands.coverage(FuncType::Business)) << ", Office "
     << num(demands.coverage(FuncType::Office)) << ", Recreation "
     << num(demands.coverage(FuncType::Recreation)) << ", Park "
     << num(demands.coverage(FuncType::Park)) << ", Open Space "
     << num(demands.coverage(FuncType::OpenSpace)) << "; ";
  os << "number of kindergartens " << demands.quota(FacilitySubtype::Kindergarten)
     << ", primary schools " << demands.quota(FacilitySubtype::PrimarySchool)
     << ", secondary schools " << demands.quota(FacilitySubtype::SecondarySchool) << ", clinics "
     << demands.quota(FacilitySubtype::Clinic) << ", large hospitals "
     << demands.quota(FacilitySubtype::LargeHospital);
  return os.str();
}

std::string describe_scheme(const SchemeSummary& scheme) {
  std::ostringstream os;
  os << "coverage area ratio of each functional type: ";
  for (std::size_t t = 0; t < kNumFuncTypes; ++t) {
    if (t > 0) os << ", ";
    os << display_name(func_type_at(t)) << " " << fixed4(scheme.stats.ratios[t]);
  }
  const auto& tally = scheme.facility_tally;
  os << "; number of kindergartens " << tally[0] << ", primary schools " << tally[1]
     << ", secondary schools " << tally[2] << ", clinics " << tally[3] << ", large hospitals "
     << tally[4];
  return os.str();
}

RemoteAdvisor::RemoteAdvisor(RemoteConfig config, PromptLibrary prompts)
    : RemoteAdvisor(config, std::move(prompts), nullptr) {}

RemoteAdvisor::RemoteAdvisor(RemoteConfig config, PromptLibrary prompts, Transport transport)
    : config_(std::move(config)),
      prompts_(std::move(prompts)),
      transport_(std::move(transport)),
      cache_(config_.cache_path),
      in_flight_(std::clamp(config_.max_in_flight, 1, 64)) {
  if (!transport_) {
    transport_ = [this](const std::string& prompt) { return post_chat_completion(config_, prompt); };
  }
}

std::string RemoteAdvisor::call_network(const std::string& prompt) {
  SemaphoreGuard guard(in_flight_);
  network_calls_.fetch_add(1);
  return transport_(prompt);
}

AdvisorResponse RemoteAdvisor::chat(const AdvisorRequest& request,
                                    const std::function<void(const std::string&)>& validate) {
  const std::string digest = request.digest();
  const auto start = std::chrono::steady_clock::now();
  if (auto hit = cache_.lookup(digest)) {
    validate(*hit);
    return {*hit, std::chrono::milliseconds(0), true};
  }
  std::string raw;
  for (int attempt = 0; attempt < 2; ++attempt) {
    raw = call_network(request.prompt);
    try {
      validate(raw);
    } catch (const std::exception& e) {
      if (attempt == 0) {
        warn(std::string("advisor reply failed validation, retrying: ") + e.what());
        continue;
      }
      throw AdvisorError(std::string(to_string(request.kind)) + " reply failed validation: " +
                             e.what(),
                         raw);
    }
    cache_.store(digest, request.kind, raw);
    break;
  }
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  return {raw, elapsed, false};
}

Demands RemoteAdvisor::formulate_objectives(const Demographics& demographics,
                                            const RegionSummary& region) {
  if (demographics.style.empty()) {
    throw ValidationError("objective formulation needs a non-empty planning style");
  }
  std::ostringstream size;
  size.setf(std::ios::fixed);
  size.precision(1);
  size << region.width / 1000.0 << "km*" << region.height / 1000.0 << "km";
  AdvisorRequest req;
  req.kind = RequestKind::Objectives;
  req.prompt = prompts_.render(
      "objectives", {{"REGION_SIZE", size.str()},
                     {"REGION_LABEL", demographics.region_label.empty() ? "the planning region"
                                                                         : demographics.region_label},
                     {"RESIDENTS", demographics.residents},
                     {"WORKERS", demographics.workers},
                     {"STYLE", demographics.style}});
  const auto resp = chat(req, [](const std::string& raw) { parse_objectives(raw); });
  return parse_objectives(resp.raw);
}

RecSet RemoteAdvisor::recommend_types(const PlotContext& plot, const RegionStats& stats,
                                      const Demands& demands,
                                      const std::array<int, kNumSubtypes>& tally) {
  std::string surrounding = "[";
  for (std::size_t i = 0; i < plot.in_circle_types.size(); ++i) {
    if (i > 0) surrounding += ", ";
    surrounding += "'" + std::string(display_name(plot.in_circle_types[i])) + "'";
  }
  surrounding += "]";
  std::ostringstream coverage;
  coverage << "Business area is " << fixed4(stats.ratios[index_of(FuncType::Business)])
           << ", Recreation area is " << fixed4(stats.ratios[index_of(FuncType::Recreation)])
           << ", Office area is " << fixed4(stats.ratios[index_of(FuncType::Office)])
           << ", Park area is " << fixed4(stats.ratios[index_of(FuncType::Park)])
           << ", Openspace area is " << fixed4(stats.ratios[index_of(FuncType::OpenSpace)]);
  const int small_schools = tally[0];
  const int large_schools = tally[1] + tally[2];
  std::ostringstream facilities;
  facilities << "Small school(s) is(are) " << small_schools << ", Large school(s) is(are) "
             << large_schools << ", Small hospital(s) is(are) " << tally[3]
             << ", Large hospital(s) is(are) " << tally[4];

  AdvisorRequest req;
  req.kind = RequestKind::Recommend;
  req.prompt = prompts_.render(
      "recommend",
      {{"PARK_TARGET", num(demands.coverage(FuncType::Park))},
       {"OPEN_SPACE_TARGET", num(demands.coverage(FuncType::OpenSpace))},
       {"BUSINESS_TARGET", num(demands.coverage(FuncType::Business))},
       {"OFFICE_TARGET", num(demands.coverage(FuncType::Office))},
       {"RECREATION_TARGET", num(demands.coverage(FuncType::Recreation))},
       {"SMALL_SCHOOLS", std::to_string(demands.quota(FacilitySubtype::Kindergarten))},
       {"LARGE_SCHOOLS", std::to_string(demands.quota(FacilitySubtype::PrimarySchool) +
                                        demands.quota(FacilitySubtype::SecondarySchool))},
       {"SMALL_HOSPITALS", std::to_string(demands.quota(FacilitySubtype::Clinic))},
       {"LARGE_HOSPITALS", std::to_string(demands.quota(FacilitySubtype::LargeHospital))},
       {"PLOT_SIZE", plot.size == SizeClass::Large ? "large" : "small"},
       {"SURROUNDING_TYPES", surrounding},
       {"COVERAGE", coverage.str()},
       {"FACILITY_COUNTS", facilities.str()}});
  try {
    const auto resp = chat(req, [](const std::string& raw) { parse_recommendation(raw); });
    std::vector<std::string> dropped;
    RecSet rec = parse_recommendation(resp.raw, &dropped);
    for (const auto& name : dropped) warn("advisor recommended unknown type '" + name + "'");
    return rec;
  } catch (const AdvisorError& e) {
    warn(std::string("recommendation unavailable, abstaining: ") + e.what());
    return {};
  }
}

std::vector<StakeholderRating> RemoteAdvisor::score_satisfaction(const SchemeSummary& scheme) {
  const std::string targets = describe_targets(scheme.demands);
  const std::string details = describe_scheme(scheme);
  std::vector<StakeholderRating> out;
  for (const auto& [who, tpl] : kScoreTemplates) {
    AdvisorRequest req;
    req.kind = RequestKind::Score;
    req.prompt =
        prompts_.render(tpl, {{"PLANNING_TARGETS", targets}, {"DETAILED_INFORMATION", details}});
    const auto resp = chat(req, [](const std::string& raw) { parse_ratings(raw); });
    out.push_back({who, parse_ratings(resp.raw)});
  }
  return out;
}

}  // namespace replan
