#pragma once

// Deterministic mock embedding generators. Rows follow
//   v = mu_domain + (2*label - 1) * signal * theta_domain + noise
// with unit-norm seeded directions, so the truth-direction geometry of a set
// is planted and known. Every output is reproducible from (spec, seed).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/corpus.hpp"

namespace prism {

struct MockDomainsSpec {
  std::size_t dim = 32;
  std::vector<std::string> domains = {"animals", "cities", "companies"};
  std::size_t rows_per_domain = 200;
  double signal = 2.0;
  double noise_sigma = 0.5;
  double mean_scale = 1.0;
  // true: one direction shared by every domain ("prompted");
  // false: mutually orthogonal directions per domain ("unprompted")
  bool aligned = true;
  std::uint64_t seed = 0;
};

MockDomainsSpec mock_domains_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MockDomainsSpec& spec);

// Balanced labels (alternating 1, 0, ...).
std::vector<EmbeddingSet> make_mock_domains(const MockDomainsSpec& spec);

// Embeds given statements (their labels drive the planted offset) as if they
// belonged to `domain` under `spec`.
EmbeddingSet mock_embed_statements(std::span<const StatementRecord> records,
                                   const MockDomainsSpec& spec, const std::string& domain,
                                   const std::string& dataset);

// Grammatical-structure mock: per topic, four sets tagged (extra "structure")
// affirm / neg / conj / disj. Each set's direction is
//   normalize(general * g + polarity * s_struct * p)
// where g and p are orthonormal and s_struct = +1 for affirmative sets and -1
// otherwise. general == polarity makes every non-affirmative direction
// orthogonal to the affirmative one; polarity << general aligns them.
struct MockStructureSpec {
  std::size_t dim = 64;
  std::vector<std::string> topics = {"cities", "facts"};
  std::size_t rows_per_set = 200;
  double signal = 1.0;
  double noise_sigma = 0.5;
  double mean_scale = 0.5;
  double general_weight = 1.0;
  double polarity_weight = 1.0;
  std::uint64_t seed = 0;
};

inline constexpr const char* kStructures[] = {"affirm", "neg", "conj", "disj"};

std::vector<EmbeddingSet> make_mock_structures(const MockStructureSpec& spec);

// One ordered set of `segments` blocks whose truth direction rotates from e1
// towards e2 by up to `max_angle_deg` across the blocks; label 1 with
// probability `positive_rate`. Order carries the drift.
struct MockDriftSpec {
  std::size_t dim = 16;
  std::size_t segments = 10;
  std::size_t rows_per_segment = 80;
  double signal = 1.0;
  double noise_sigma = 0.6;
  double max_angle_deg = 120.0;
  double positive_rate = 0.35;
  std::uint64_t seed = 0;
};

EmbeddingSet make_mock_drift(const MockDriftSpec& spec);

// One confidence score per row: separation * (label - 0.5) + N(0, 1), seeded
// by (seed, set id). Stands in for LN-PP scores in threshold runs.
std::vector<double> make_mock_scores(const EmbeddingSet& set, double separation, std::uint64_t seed);

}  // namespace prism
