#pragma once

// Evaluation protocols over sets of embeddings (or score lists), seeded
// aggregation and report files.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/corpus.hpp"
#include "prism/detectors.hpp"

namespace prism {

enum class Protocol { cross_domain, affirmative_transfer, sequential_split };
enum class Method { mass_mean, mlp, threshold };

std::string_view to_string(Protocol p);
std::string_view to_string(Method m);
Protocol protocol_from_string(std::string_view s);
Method method_from_string(std::string_view s);

struct ExperimentSpec {
  Protocol protocol = Protocol::cross_domain;
  Method method = Method::mass_mean;
  std::optional<std::string> template_id;
  std::optional<int> layer;  // nullopt = last
  std::vector<std::string> sets;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::optional<double> split_fraction;  // sequential_split only
  bool literal_mass_mean = false;
  // affirmative_transfer: one detector on all affirmative sets pooled, or
  // one per topic tested on that topic's other structures
  bool pool_affirmative = true;
  // sequential_split: permute rows (seeded) before splitting; the protocol
  // itself never shuffles
  bool shuffle_split = false;
  MlpTrainConfig mlp;

  // Throws SpecError.
  void validate() const;
};

nlohmann::ordered_json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);

// A named evaluation set: embeddings, and optionally one score per row for
// threshold detectors.
struct Dataset {
  EmbeddingSet embeddings;
  std::vector<double> scores;

  std::string id() const { return embeddings.id(); }
  std::span<const std::uint8_t> labels() const { return embeddings.labels(); }
  std::size_t count() const { return embeddings.count(); }
  bool has_scores() const { return !scores.empty(); }
  // meta key "structure" when present, otherwise the _neg/_conj/_disj name
  // suffix; "affirm" by default
  std::string structure() const;
  // meta domain, or the name without its structure suffix
  std::string topic() const;

  Dataset slice(std::size_t first, std::size_t n) const;
  Dataset select(std::span<const std::size_t> rows) const;
};

Dataset concat_datasets(std::span<const Dataset> parts, std::string id);

// scores.jsonl: one {"idx", "score"} object per line, idx 0..N-1.
std::vector<double> read_scores_jsonl(const std::filesystem::path& path);
void write_scores_jsonl(const std::filesystem::path& path, std::span<const double> scores);
// Embedding set directory plus its scores.jsonl when present.
Dataset load_dataset(const std::filesystem::path& dir);

struct Cell {
  std::string train_set;
  std::string test_set;
  std::uint64_t seed = 0;
  std::string group;  // aggregation key: test set or structure tag
  Metrics metrics;
};

struct Aggregate {
  double accuracy = 0.0;
  std::optional<double> auroc;  // present when every contributing cell has one
  std::size_t cells = 0;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::string toolkit_version;
  std::vector<Cell> cells;
  std::vector<std::string> groups;  // column order
  std::map<std::string, Aggregate> per_test_average;
  Aggregate grand_average;  // mean of the per-group averages
};

// Recomputes per_test_average and grand_average from cells.
void aggregate(ExperimentReport& report);

struct RunOptions {
  unsigned jobs = 1;  // training units run concurrently; results do not depend on it
};

DetectorModel train_detector(const Dataset& train, const ExperimentSpec& spec, std::uint64_t seed);
Metrics evaluate_detector(const DetectorModel& model, const Dataset& test);

ExperimentReport run_cross_domain(const ExperimentSpec& spec, std::span<const Dataset> sets,
                                  const RunOptions& options = {});
ExperimentReport run_affirmative_transfer(const ExperimentSpec& spec, std::span<const Dataset> sets,
                                          const RunOptions& options = {});
ExperimentReport run_sequential_split(const ExperimentSpec& spec, std::span<const Dataset> sets,
                                      const RunOptions& options = {});
ExperimentReport run_experiment(const ExperimentSpec& spec, std::span<const Dataset> sets,
                                const RunOptions& options = {});

enum class ReportFormat { json, markdown_table, csv };
ReportFormat report_format_from_string(std::string_view s);

nlohmann::ordered_json to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);
std::string report_json_text(const ExperimentReport& report);
// Rows = one per report (method label), columns = groups + Average.
std::string markdown_table(std::span<const ExperimentReport> reports);
std::string cells_csv(const ExperimentReport& report);
// "MM", "MLP", "Threshold", prefixed "PRISM-" when a template was used.
std::string method_label(const ExperimentSpec& spec);

// Writes report.json / report.md / cells.csv into `dir`. Throws on an empty
// report.
std::vector<std::filesystem::path> emit_report(const ExperimentReport& report,
                                               std::span<const ReportFormat> formats,
                                               const std::filesystem::path& dir);

}  // namespace prism
