#pragma once

// Hallucination detectors trained on hidden states (mass-mean probe, MLP)
// or on a scalar confidence score (threshold), plus accuracy/AUROC.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/corpus.hpp"
#include "prism/mlp.hpp"

namespace prism {

enum class DetectorKind { mass_mean, mlp, scalar_threshold };

std::string_view to_string(DetectorKind kind);
DetectorKind detector_kind_from_string(std::string_view s);

struct TrainProvenance {
  std::string set_id;
  std::optional<std::string> template_id;
  std::optional<int> layer;  // nullopt = last layer
  std::optional<std::uint64_t> seed;
  nlohmann::json hyperparameters = nlohmann::json::object();
};

struct MassMeanParams {
  std::vector<double> theta;
  double bias = 0.0;
  bool literal = false;  // bias fixed at zero
};

struct MlpParams {
  Mlp network;
  std::size_t best_epoch = 0;         // 1-based
  double best_validation_accuracy = 0.0;
};

struct ThresholdParams {
  double cut = 0.0;
  bool higher_is_true = true;  // label 1 iff score > cut (or < cut when false)
  bool degenerate = false;     // all training scores identical
};

struct DetectorModel {
  std::variant<MassMeanParams, MlpParams, ThresholdParams> params;
  TrainProvenance provenance;

  DetectorKind kind() const;
};

struct Prediction {
  std::uint8_t label = 0;
  double score = 0.0;  // probability of label 1 (raw score for thresholds)
};

struct MlpTrainConfig {
  std::vector<std::size_t> hidden = {256, 128, 64};
  double dropout = 0.2;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double validation_fraction = 0.2;  // 4:1 train/validation
  AdamConfig adam;
};

nlohmann::json to_json(const MlpTrainConfig& config);

// Mass-mean probe: theta = mean(true) - mean(false). Centered mode sets
// bias = -theta.mu with mu the overall training mean; literal mode keeps
// bias = 0.
DetectorModel train_mass_mean(const EmbeddingSet& train, bool literal_mode = false);
Prediction predict_mass_mean(const DetectorModel& model, std::span<const float> v);

// input_dim -> 256 -> 128 -> 64 -> 2 with ReLU, dropout after the first
// hidden layer, Adam, 4:1 validation split; keeps the epoch with the best
// validation accuracy (earliest on ties). Bit-reproducible for a seed.
DetectorModel train_mlp(const EmbeddingSet& train, std::uint64_t seed,
                        const MlpTrainConfig& config = {});
Prediction predict_mlp(const DetectorModel& model, std::span<const float> v);

// Best training-accuracy cut among midpoints of consecutive distinct sorted
// scores plus the two open ends. Ties go to the smaller cut, then to
// "higher = true". The open ends are stored as finite cuts one unit (or one
// score range, if larger) outside the training scores.
DetectorModel fit_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels);
Prediction predict_threshold(const DetectorModel& model, double score);

// Dispatches on the model kind; mlp and mass-mean only.
Prediction predict(const DetectorModel& model, std::span<const float> v);

struct Metrics {
  double accuracy = 0.0;
  std::optional<double> auroc;  // absent when the test labels hold one class
  std::size_t n = 0;
  std::size_t n_correct = 0;
};

// Accuracy = correct / total; AUROC by the Mann-Whitney rank statistic with
// half credit for ties.
Metrics compute_metrics(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted,
                        std::span<const double> scores);
std::optional<double> auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

Metrics evaluate(const DetectorModel& model, const EmbeddingSet& test);
Metrics evaluate(const DetectorModel& model, std::span<const double> scores,
                 std::span<const std::uint8_t> labels);

// model.json (kind, provenance, hyperparameters, weight layout) plus
// weights.bin (float64 little-endian).
void save_model(const DetectorModel& model, const std::filesystem::path& dir);
DetectorModel load_model(const std::filesystem::path& dir);

}  // namespace prism
