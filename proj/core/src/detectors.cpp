#include "prism/detectors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "prism/error.hpp"
#include "prism/fsutil.hpp"
#include "prism/geometry.hpp"

namespace prism {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void require_both_classes(std::span<const std::uint8_t> labels, std::string_view what) {
  const auto pos = std::count(labels.begin(), labels.end(), std::uint8_t{1});
  if (pos == 0 || static_cast<std::size_t>(pos) == labels.size()) {
    throw DataError(std::string(what) + ": degenerate class balance (both labels required)");
  }
}

TrainProvenance provenance_of(const EmbeddingSet& set) {
  TrainProvenance p;
  p.set_id = set.id();
  p.template_id = set.meta().prompt_template_id;
  p.layer = set.meta().layer_index;
  return p;
}

std::vector<double> widen(std::span<const float> v) { return {v.begin(), v.end()}; }

std::uint8_t mlp_label(std::span<const double> logits) { return logits[1] >= logits[0] ? 1 : 0; }

std::string encode_f64le(std::span<const double> values) {
  std::string bytes(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto u = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((u >> (8 * b)) & 0xFF);
  }
  return bytes;
}

std::vector<double> decode_f64le(std::string_view bytes) {
  std::vector<double> values(bytes.size() / 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) {
      u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    }
    values[i] = std::bit_cast<double>(u);
  }
  return values;
}

nlohmann::ordered_json provenance_json(const TrainProvenance& p) {
  nlohmann::ordered_json j;
  j["set_id"] = p.set_id;
  j["template_id"] = p.template_id ? nlohmann::ordered_json(*p.template_id) : nlohmann::ordered_json(nullptr);
  j["layer"] = p.layer ? nlohmann::ordered_json(*p.layer) : nlohmann::ordered_json("last");
  j["seed"] = p.seed ? nlohmann::ordered_json(*p.seed) : nlohmann::ordered_json(nullptr);
  return j;
}

TrainProvenance provenance_from_json(const nlohmann::json& j, const nlohmann::json& hyper) {
  TrainProvenance p;
  p.set_id = j.value("set_id", "");
  if (j.contains("template_id") && !j["template_id"].is_null()) p.template_id = j["template_id"].get<std::string>();
  if (j.contains("layer") && j["layer"].is_number_integer()) p.layer = j["layer"].get<int>();
  if (j.contains("seed") && !j["seed"].is_null()) p.seed = j["seed"].get<std::uint64_t>();
  p.hyperparameters = hyper;
  return p;
}

}  // namespace

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::mass_mean: return "mass_mean";
    case DetectorKind::mlp: return "mlp";
    case DetectorKind::scalar_threshold: return "scalar_threshold";
  }
  return "unknown";
}

DetectorKind detector_kind_from_string(std::string_view s) {
  if (s == "mass_mean" || s == "mm") return DetectorKind::mass_mean;
  if (s == "mlp") return DetectorKind::mlp;
  if (s == "scalar_threshold" || s == "threshold") return DetectorKind::scalar_threshold;
  throw SpecError("unknown detector kind '" + std::string(s) + "'");
}

DetectorKind DetectorModel::kind() const {
  return static_cast<DetectorKind>(params.index());
}

nlohmann::json to_json(const MlpTrainConfig& c) {
  return {{"hidden", c.hidden},
          {"dropout", c.dropout},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"validation_fraction", c.validation_fraction},
          {"optimizer", "adam"},
          {"adam_step", c.adam.step},
          {"adam_beta1", c.adam.beta1},
          {"adam_beta2", c.adam.beta2},
          {"adam_epsilon", c.adam.epsilon},
          {"init", "glorot_uniform"},
          {"loss", "softmax_cross_entropy"}};
}

DetectorModel train_mass_mean(const EmbeddingSet& train, bool literal_mode) {
  const TruthDirection dir = truth_direction(train);
  MassMeanParams p;
  p.theta = dir.theta;
  p.literal = literal_mode;
  if (!(dir.norm() > 0.0)) throw DataError("mass-mean probe: zero truthfulness direction");
  if (!literal_mode) {
    std::vector<double> mean(train.dim(), 0.0);
    for (std::size_t i = 0; i < train.count(); ++i) {
      const auto r = train.row(i);
      for (std::size_t k = 0; k < r.size(); ++k) mean[k] += r[k];
    }
    double proj = 0.0;
    for (std::size_t k = 0; k < mean.size(); ++k) proj += p.theta[k] * mean[k] / static_cast<double>(train.count());
    p.bias = -proj;
  }
  DetectorModel m{std::move(p), provenance_of(train)};
  m.provenance.hyperparameters = {{"mode", literal_mode ? "literal" : "centered"}};
  return m;
}

Prediction predict_mass_mean(const DetectorModel& model, std::span<const float> v) {
  const auto& p = std::get<MassMeanParams>(model.params);
  if (v.size() != p.theta.size()) {
    throw DataError("input dim " + std::to_string(v.size()) + " != probe dim " + std::to_string(p.theta.size()));
  }
  double z = p.bias;
  for (std::size_t k = 0; k < v.size(); ++k) z += p.theta[k] * static_cast<double>(v[k]);
  const double score = sigmoid(z);
  return {static_cast<std::uint8_t>(score >= 0.5), score};
}

DetectorModel train_mlp(const EmbeddingSet& train, std::uint64_t seed, const MlpTrainConfig& config) {
  const std::size_t n = train.count();
  if (n < 10) throw DataError("MLP training needs at least 10 rows, got " + std::to_string(n));
  require_both_classes(train.labels(), "MLP training");
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(config.validation_fraction * n)));
  if (n_val >= n) throw DataError("validation split leaves no training rows");

  Rng split_rng(seed, "split");
  Rng init_rng(seed, "init");
  Rng shuffle_rng(seed, "shuffle");
  Rng dropout_rng(seed, "dropout");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  split_rng.shuffle(order);
  const std::vector<std::size_t> val_rows(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> train_rows(order.begin() + n_val, order.end());

  std::vector<std::size_t> widths{train.dim()};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(2);
  Mlp net = Mlp::glorot_uniform(widths, init_rng);
  Adam adam(net.parameters().size(), config.adam);

  const auto labels = train.labels();
  MlpParams best{net, 0, -1.0};
  std::vector<double> batch;
  std::vector<std::uint8_t> targets;
  std::vector<double> grad(net.parameters().size());

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(train_rows);
    for (std::size_t start = 0; start < train_rows.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, train_rows.size());
      batch.clear();
      targets.clear();
      for (std::size_t k = start; k < end; ++k) {
        const auto r = train.row(train_rows[k]);
        batch.insert(batch.end(), r.begin(), r.end());
        targets.push_back(labels[train_rows[k]]);
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      net.accumulate_gradients(batch, targets, grad, &dropout_rng, config.dropout);
      adam.step(net.parameters(), grad);
    }

    std::size_t correct = 0;
    for (std::size_t r : val_rows) {
      const auto x = widen(train.row(r));
      correct += mlp_label(net.logits(x)) == labels[r];
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(val_rows.size());
    if (acc > best.best_validation_accuracy) best = MlpParams{net, epoch, acc};
  }

  DetectorModel m{std::move(best), provenance_of(train)};
  m.provenance.seed = seed;
  m.provenance.hyperparameters = to_json(config);
  return m;
}

Prediction predict_mlp(const DetectorModel& model, std::span<const float> v) {
  const auto& net = std::get<MlpParams>(model.params).network;
  if (v.size() != net.input_dim()) {
    throw DataError("input dim " + std::to_string(v.size()) + " != network input " +
                    std::to_string(net.input_dim()));
  }
  const auto z = net.logits(widen(v));
  return {mlp_label(z), softmax_class1(z)};
}

DetectorModel fit_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  require_both_classes(labels, "threshold fit");
  for (double s : scores) {
    if (!std::isfinite(s)) throw DataError("threshold fit: non-finite score");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  const double lo = scores[order.front()];
  const double hi = scores[order.back()];
  ThresholdParams best;
  if (lo == hi) {
    best = ThresholdParams{lo, true, true};
    return DetectorModel{best, TrainProvenance{}};
  }
  const double margin = std::max(1.0, hi - lo);

  const auto total_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  // "higher = true" correct count for a cut below every score: all predicted 1
  std::size_t correct_higher = total_pos;
  std::size_t best_correct = 0;
  bool have = false;
  auto consider = [&](double cut) {
    const std::size_t correct_lower = n - correct_higher;
    if (!have || correct_higher > best_correct) {
      best = ThresholdParams{cut, true, false};
      best_correct = correct_higher;
      have = true;
    }
    if (correct_lower > best_correct) {
      best = ThresholdParams{cut, false, false};
      best_correct = correct_lower;
    }
  };

  consider(lo - margin);
  std::size_t i = 0;
  while (i < n) {
    const double value = scores[order[i]];
    // move the whole tie group below the cut
    while (i < n && scores[order[i]] == value) {
      if (labels[order[i]]) {
        --correct_higher;
      } else {
        ++correct_higher;
      }
      ++i;
    }
    if (i < n) {
      const double next = scores[order[i]];
      consider(value + (next - value) / 2.0);
    }
  }
  consider(hi + margin);

  return DetectorModel{best, TrainProvenance{}};
}

Prediction predict_threshold(const DetectorModel& model, double score) {
  const auto& p = std::get<ThresholdParams>(model.params);
  const bool positive = p.higher_is_true ? score > p.cut : score < p.cut;
  return {static_cast<std::uint8_t>(positive), score};
}

Prediction predict(const DetectorModel& model, std::span<const float> v) {
  switch (model.kind()) {
    case DetectorKind::mass_mean: return predict_mass_mean(model, v);
    case DetectorKind::mlp: return predict_mlp(model, v);
    case DetectorKind::scalar_threshold: break;
  }
  throw DataError("threshold detectors take scalar scores, not embeddings");
}

std::optional<double> auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const std::size_t n = scores.size();
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

Metrics compute_metrics(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted,
                        std::span<const double> scores) {
  if (truth.empty()) throw DataError("empty test set");
  if (truth.size() != predicted.size() || truth.size() != scores.size()) {
    throw DataError("metric inputs differ in length");
  }
  Metrics m;
  m.n = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) m.n_correct += truth[i] == predicted[i];
  m.accuracy = static_cast<double>(m.n_correct) / static_cast<double>(m.n);
  m.auroc = auroc(scores, truth);
  return m;
}

Metrics evaluate(const DetectorModel& model, const EmbeddingSet& test) {
  if (test.count() == 0) throw DataError("empty test set");
  std::vector<std::uint8_t> predicted(test.count());
  std::vector<double> scores(test.count());
  for (std::size_t i = 0; i < test.count(); ++i) {
    const auto p = predict(model, test.row(i));
    predicted[i] = p.label;
    scores[i] = p.score;
  }
  return compute_metrics(test.labels(), predicted, scores);
}

Metrics evaluate(const DetectorModel& model, std::span<const double> scores,
                 std::span<const std::uint8_t> labels) {
  if (scores.empty()) throw DataError("empty test set");
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  const auto& p = std::get<ThresholdParams>(model.params);
  std::vector<std::uint8_t> predicted(scores.size());
  std::vector<double> oriented(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    predicted[i] = predict_threshold(model, scores[i]).label;
    oriented[i] = p.higher_is_true ? scores[i] : -scores[i];
  }
  return compute_metrics(labels, predicted, oriented);
}

void save_model(const DetectorModel& model, const std::filesystem::path& dir) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["kind"] = to_string(model.kind());
  j["provenance"] = provenance_json(model.provenance);
  j["hyperparameters"] = model.provenance.hyperparameters;
  std::vector<double> weights;
  nlohmann::ordered_json layout = nlohmann::ordered_json::array();

  if (const auto* mm = std::get_if<MassMeanParams>(&model.params)) {
    j["mode"] = mm->literal ? "literal" : "centered";
    j["dim"] = mm->theta.size();
    weights = mm->theta;
    weights.push_back(mm->bias);
    layout.push_back({{"name", "theta"}, {"shape", {mm->theta.size()}}, {"offset", 0}});
    layout.push_back({{"name", "bias"}, {"shape", {1}}, {"offset", mm->theta.size()}});
  } else if (const auto* mlp = std::get_if<MlpParams>(&model.params)) {
    const Mlp& net = mlp->network;
    j["widths"] = net.widths();
    j["best_epoch"] = mlp->best_epoch;
    j["best_validation_accuracy"] = mlp->best_validation_accuracy;
    weights = net.parameters();
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      const auto in = net.widths()[l];
      const auto out = net.widths()[l + 1];
      layout.push_back({{"name", "layer" + std::to_string(l) + ".weight"},
                        {"shape", {out, in}},
                        {"offset", net.weight_offset(l)}});
      layout.push_back({{"name", "layer" + std::to_string(l) + ".bias"},
                        {"shape", {out}},
                        {"offset", net.bias_offset(l)}});
    }
  } else {
    const auto& th = std::get<ThresholdParams>(model.params);
    j["higher_is_true"] = th.higher_is_true;
    j["degenerate"] = th.degenerate;
    weights = {th.cut};
    layout.push_back({{"name", "cut"}, {"shape", {1}}, {"offset", 0}});
  }
  j["weights"] = {{"file", "weights.bin"}, {"dtype", "f64le"}, {"count", weights.size()}, {"layout", layout}};

  std::filesystem::create_directories(dir);
  atomic_write_file(dir / "weights.bin", encode_f64le(weights));
  atomic_write_file(dir / "model.json", j.dump(2) + "\n");
}

DetectorModel load_model(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(dir / "model.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw CorruptionError(dir.string() + "/model.json: " + e.what());
  }
  const std::vector<double> weights = decode_f64le(read_file(dir / "weights.bin"));
  try {
    if (j.at("format_version").get<int>() != 1) throw VersionError("unsupported model format_version");
    const std::size_t expected = j.at("weights").at("count").get<std::size_t>();
    if (weights.size() != expected) {
      throw CorruptionError(dir.string() + ": weights.bin holds " + std::to_string(weights.size()) +
                            " values, model.json says " + std::to_string(expected));
    }
    const TrainProvenance prov = provenance_from_json(j.at("provenance"), j.value("hyperparameters", nlohmann::json::object()));
    switch (detector_kind_from_string(j.at("kind").get<std::string>())) {
      case DetectorKind::mass_mean: {
        const std::size_t dim = j.at("dim").get<std::size_t>();
        if (weights.size() != dim + 1) throw CorruptionError("mass-mean weights size mismatch");
        MassMeanParams p{{weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(dim)},
                         weights.back(), j.at("mode").get<std::string>() == "literal"};
        return DetectorModel{std::move(p), prov};
      }
      case DetectorKind::mlp: {
        Mlp net(j.at("widths").get<std::vector<std::size_t>>());
        if (net.parameters().size() != weights.size()) throw CorruptionError("MLP weights size mismatch");
        net.parameters() = weights;
        return DetectorModel{MlpParams{std::move(net), j.value("best_epoch", std::size_t{0}),
                                       j.value("best_validation_accuracy", 0.0)},
                             prov};
      }
      case DetectorKind::scalar_threshold: {
        if (weights.size() != 1) throw CorruptionError("threshold weights size mismatch");
        return DetectorModel{ThresholdParams{weights[0], j.at("higher_is_true").get<bool>(),
                                             j.value("degenerate", false)},
                             prov};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(dir.string() + "/model.json: " + e.what());
  }
  throw CorruptionError(dir.string() + ": unknown model kind");
}

}  // namespace prism
