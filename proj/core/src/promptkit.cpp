#include "prism/promptkit.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <set>
#include <sstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "prism/error.hpp"
#include "prism/geometry.hpp"

namespace prism {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw SpecError("api url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string strip_quotes(std::string s) {
  auto trim = [](std::string& t) {
    const auto a = t.find_first_not_of(" \t\r");
    const auto b = t.find_last_not_of(" \t\r");
    t = a == std::string::npos ? std::string{} : t.substr(a, b - a + 1);
  };
  trim(s);
  // trailing LaTeX-style line breaks show up in some replies
  while (s.size() >= 2 && s.ends_with("\\\\")) {
    s.resize(s.size() - 2);
    trim(s);
  }
  static const std::pair<std::string, std::string> kPairs[] = {
      {"\"", "\""}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}, {"`", "`"}};
  for (const auto& [open, close] : kPairs) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
      s = s.substr(open.size(), s.size() - open.size() - close.size());
      trim(s);
      break;
    }
  }
  return s;
}

std::string reply_text(const nlohmann::json& body) {
  const auto& choice = body.at("choices").at(0);
  if (choice.contains("message")) return choice.at("message").at("content").get<std::string>();
  return choice.at("text").get<std::string>();
}

}  // namespace

std::string api_key_from_env() {
  const char* v = std::getenv(std::string(kApiKeyEnv).c_str());
  return v == nullptr ? std::string{} : std::string(v);
}

std::string generation_prompt(const PromptTemplate& seed) {
  return "\"" + seed.text +
         "\"\n"
         "This is a universal prompt template. Please generate templates with similar meanings "
         "but diverse forms. The template should include the embedding position of [statement].";
}

std::vector<PromptTemplate> parse_numbered_templates(std::string_view reply,
                                                     std::vector<std::string>& warnings,
                                                     std::string_view id_prefix) {
  static const std::regex kItem(R"(^\s*(\d+)\s*[.)]\s*(.+)$)");
  std::vector<PromptTemplate> out;
  std::istringstream lines{std::string(reply)};
  std::string line;
  while (std::getline(lines, line)) {
    std::smatch m;
    if (!std::regex_match(line, m, kItem)) continue;
    std::string text = strip_quotes(m[2].str());
    if (!is_valid_template(text)) {
      warnings.push_back("dropped item " + m[1].str() + " (needs exactly one " +
                         std::string(kStatementSlot) + "): " + text);
      continue;
    }
    out.push_back({std::string(id_prefix) + std::to_string(out.size() + 1), std::move(text)});
  }
  return out;
}

ExpansionResult expand_templates(const PromptTemplate& seed, std::size_t n,
                                 const std::optional<ChatEndpoint>& endpoint) {
  if (n == 0) throw SpecError("template expansion needs n >= 1");
  validate_template(seed);
  ExpansionResult result;

  if (!endpoint) {
    for (const auto& t : bundled_templates()) {
      if (t.id.starts_with("T") && result.templates.size() < n) result.templates.push_back(t);
    }
    if (result.templates.size() < n) {
      result.warnings.push_back("offline mode bundles " + std::to_string(result.templates.size()) +
                                " templates; " + std::to_string(n) + " requested");
    }
    return result;
  }

  const SplitUrl url = split_url(endpoint->url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(endpoint->timeout_seconds, 0);
  client.set_read_timeout(endpoint->timeout_seconds, 0);
  client.set_write_timeout(endpoint->timeout_seconds, 0);
  httplib::Headers headers;
  if (!endpoint->api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint->api_key);

  nlohmann::json request;
  request["model"] = endpoint->model;
  request["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", generation_prompt(seed)}}});
  const std::string payload = request.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= endpoint->max_retries; ++attempt) {
    ++result.attempts;
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      continue;
    }
    std::string text;
    try {
      text = reply_text(nlohmann::json::parse(res->body));
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("malformed response body: ") + e.what();
      continue;
    }
    std::vector<std::string> warnings;
    auto parsed = parse_numbered_templates(text, warnings);
    result.warnings.insert(result.warnings.end(), warnings.begin(), warnings.end());
    if (parsed.empty()) {
      last_error = "reply contained no usable template";
      continue;
    }
    if (parsed.size() > n) parsed.resize(n);
    if (parsed.size() < n) {
      result.warnings.push_back("endpoint returned " + std::to_string(parsed.size()) + " usable templates; " +
                                std::to_string(n) + " requested");
    }
    result.templates = std::move(parsed);
    return result;
  }
  throw EndpointError("template generation failed after " + std::to_string(result.attempts) +
                      " attempts: " + last_error);
}

TemplateRanking rank_from_ratios(const std::map<std::string, std::map<std::string, double>>& ratios) {
  if (ratios.empty()) throw DataError("nothing to rank");
  TemplateRanking out;
  for (const auto& [id, per_set] : ratios) {
    if (per_set.empty()) throw DataError("template '" + id + "' has no sets");
    RankingEntry e{id, per_set, 0.0, 0};
    double sum = 0.0;
    for (const auto& [set, r] : per_set) sum += r;
    e.mean_ratio = sum / static_cast<double>(per_set.size());
    out.entries.push_back(std::move(e));
  }
  // std::map iteration already orders ids ascending; stable sort keeps that on ties
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const RankingEntry& a, const RankingEntry& b) { return a.mean_ratio > b.mean_ratio; });
  for (std::size_t i = 0; i < out.entries.size(); ++i) out.entries[i].rank = i + 1;
  out.selected_id = out.entries.front().template_id;
  return out;
}

TemplateRanking rank_templates(const std::map<std::string, std::vector<EmbeddingSet>>& sets_by_template) {
  std::set<std::string> all_sets;
  for (const auto& [id, sets] : sets_by_template) {
    for (const auto& s : sets) all_sets.insert(s.id());
  }
  std::map<std::string, std::map<std::string, double>> ratios;
  for (const auto& [id, sets] : sets_by_template) {
    auto& row = ratios[id];
    for (const auto& s : sets) row[s.id()] = variance_ratio(s, truth_direction(s)).ratio;
    for (const auto& name : all_sets) {
      if (!row.contains(name)) {
        throw DataError("template '" + id + "' has no embedding set for '" + name + "'");
      }
    }
  }
  return rank_from_ratios(ratios);
}

nlohmann::ordered_json to_json(const TemplateRanking& ranking) {
  nlohmann::ordered_json j;
  j["selected_id"] = ranking.selected_id;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : ranking.entries) {
    nlohmann::ordered_json item;
    item["rank"] = e.rank;
    item["template_id"] = e.template_id;
    item["mean_ratio"] = e.mean_ratio;
    item["per_set_ratio"] = e.per_set_ratio;
    j["entries"].push_back(std::move(item));
  }
  return j;
}

TemplateRanking ranking_from_json(const nlohmann::json& j) {
  TemplateRanking out;
  try {
    out.selected_id = j.at("selected_id").get<std::string>();
    for (const auto& item : j.at("entries")) {
      out.entries.push_back({item.at("template_id").get<std::string>(),
                             item.at("per_set_ratio").get<std::map<std::string, double>>(),
                             item.at("mean_ratio").get<double>(), item.at("rank").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("ranking.json: ") + e.what());
  }
  return out;
}

}  // namespace prism
