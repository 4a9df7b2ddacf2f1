#pragma once

// Statement datasets, prompt templates and the on-disk embedding store.
//
// Store layout (one directory per set, row i aligned across files):
//   meta.json         UTF-8 JSON object, see EmbeddingMeta
//   embeddings.bin    count*dim little-endian IEEE-754 float32, row-major, no header
//   labels.bin        count raw bytes, each 0 or 1
//   statements.jsonl  one {"idx","statement","label"} object per row

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/rows.hpp"

namespace prism {

inline constexpr int kEmbeddingFormatVersion = 1;
inline constexpr std::string_view kStatementSlot = "[statement]";

struct StatementRecord {
  std::size_t idx = 0;
  std::string statement;
  std::uint8_t label = 0;  // 1 = true statement, 0 = false
  std::string domain;
};

struct PromptTemplate {
  std::string id;
  std::string text;
};

// True when `text` contains the slot exactly once.
bool is_valid_template(std::string_view text);
// Throws DataError unless the slot invariant holds.
void validate_template(const PromptTemplate& t);

std::string apply_template(const PromptTemplate& t, std::string_view statement);
inline std::string apply_template(const PromptTemplate& t, const StatementRecord& s) {
  return apply_template(t, s.statement);
}

// Reads an RFC-4180 CSV with at least the columns `statement` and `label`
// (extra columns are ignored). Records keep file order; idx runs 0..N-1.
std::vector<StatementRecord> load_statement_csv(const std::filesystem::path& path,
                                                std::string_view domain);
std::vector<StatementRecord> parse_statement_csv(std::string_view content,
                                                 std::string_view domain);
void write_statement_csv(const std::filesystem::path& path,
                         std::span<const StatementRecord> records);

// Prompt 1 (id P1) followed by the ten generated candidates T1..T10.
const std::vector<PromptTemplate>& bundled_templates();
const PromptTemplate& bundled_template(std::string_view id);
std::vector<PromptTemplate> load_templates_json(const std::filesystem::path& path);
void write_templates_json(const std::filesystem::path& path,
                          std::span<const PromptTemplate> templates);

struct EmbeddingMeta {
  int format_version = kEmbeddingFormatVersion;
  std::string dataset;
  std::string domain;
  std::string model_id;
  std::optional<int> layer_index;  // nullopt serializes as "last"
  std::string token_position = "last";
  std::optional<std::string> prompt_template_id;  // nullopt = bare statement
  std::size_t dim = 0;
  std::size_t count = 0;
  std::string dtype = "f32le";
  std::string created_utc;
  // Keys written by other producers (e.g. source precision, skip counts);
  // preserved verbatim through read/write.
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const EmbeddingMeta&, const EmbeddingMeta&) = default;
};

nlohmann::json meta_to_json(const EmbeddingMeta& meta);
EmbeddingMeta meta_from_json(const nlohmann::json& j);

// count x dim float32 hidden states with aligned labels and statements.
// Immutable once constructed; the constructor enforces every invariant.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  EmbeddingSet(EmbeddingMeta meta, std::vector<float> vectors, std::vector<std::uint8_t> labels,
               std::vector<StatementRecord> statements);

  const EmbeddingMeta& meta() const noexcept { return meta_; }
  std::size_t count() const noexcept { return meta_.count; }
  std::size_t dim() const noexcept { return meta_.dim; }
  std::span<const float> row(std::size_t i) const { return view().row(i); }
  std::span<const float> vectors() const noexcept { return vectors_; }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  const std::vector<StatementRecord>& statements() const noexcept { return statements_; }
  RowsView<float> view() const { return RowsView<float>(vectors_, meta_.dim); }

  // Provenance label used in reports: dataset name, or domain when unnamed.
  std::string id() const { return meta_.dataset.empty() ? meta_.domain : meta_.dataset; }

  // Rows [first, first+n) as a new set with idx renumbered from 0.
  EmbeddingSet slice(std::size_t first, std::size_t n) const;
  // Rows in the given order, idx renumbered.
  EmbeddingSet select(std::span<const std::size_t> rows) const;

 private:
  EmbeddingMeta meta_;
  std::vector<float> vectors_;
  std::vector<std::uint8_t> labels_;
  std::vector<StatementRecord> statements_;
};

// Concatenates sets of equal dim; meta is taken from the first set with the
// dataset renamed to `dataset`.
EmbeddingSet concat_sets(std::span<const EmbeddingSet> sets, std::string dataset);

// Writers need exclusive access to `dir`; every file is replaced atomically.
void write_embedding_set(const EmbeddingSet& set, const std::filesystem::path& dir);
EmbeddingSet read_embedding_set(const std::filesystem::path& dir);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string utc_timestamp_now();

}  // namespace prism
