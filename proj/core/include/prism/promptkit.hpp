#pragma once

// Candidate prompt templates: generation through a chat-completion endpoint
// (or the bundled set offline) and ranking by variance-ratio salience.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/corpus.hpp"
#include "prism/stats.hpp"

namespace prism {

inline constexpr std::string_view kApiKeyEnv = "PRISM_API_KEY";
// Ranking id of the bare-statement condition.
inline constexpr std::string_view kNoTemplateId = "none";

struct ChatEndpoint {
  std::string url;  // full URL of the chat-completions route
  std::string model = "gpt-4o";
  std::string api_key;  // sent as a bearer token when non-empty
  int timeout_seconds = 30;
  int max_retries = 3;
};

// Reads PRISM_API_KEY; empty when unset.
std::string api_key_from_env();

// The request that asks an assistant model for paraphrased templates, with
// `seed` quoted in.
std::string generation_prompt(const PromptTemplate& seed);

// Extracts "1. ...", "2) ..." lines from a reply. Lines whose text lacks the
// slot (or repeats it) are dropped and reported in `warnings`. Ids are
// `<prefix>1`, `<prefix>2`, ... in kept order.
std::vector<PromptTemplate> parse_numbered_templates(std::string_view reply,
                                                     std::vector<std::string>& warnings,
                                                     std::string_view id_prefix = "G");

struct ExpansionResult {
  std::vector<PromptTemplate> templates;
  std::vector<std::string> warnings;
  int attempts = 0;  // endpoint calls made (0 offline)
};

// Offline (`endpoint` empty): the first n bundled candidates T1..T10.
// Online: POSTs {model, messages} to the endpoint, parses the first choice,
// and retries up to max_retries times on transport errors, non-2xx replies,
// or replies without a single usable template.
ExpansionResult expand_templates(const PromptTemplate& seed, std::size_t n,
                                 const std::optional<ChatEndpoint>& endpoint);

struct RankingEntry {
  std::string template_id;
  std::map<std::string, double> per_set_ratio;
  double mean_ratio = 0.0;
  std::size_t rank = 0;  // 1-based
};

struct TemplateRanking {
  std::vector<RankingEntry> entries;  // mean_ratio descending, ties by id ascending
  std::string selected_id;
};

// ratios[template_id][set_id] = R.
TemplateRanking rank_from_ratios(const std::map<std::string, std::map<std::string, double>>& ratios);

// For every template, R on each of its sets using that set's own truth
// direction. Every template must cover the same set ids; the error names the
// first gap.
TemplateRanking rank_templates(const std::map<std::string, std::vector<EmbeddingSet>>& sets_by_template);

nlohmann::ordered_json to_json(const TemplateRanking& ranking);
TemplateRanking ranking_from_json(const nlohmann::json& j);

}  // namespace prism
