#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <sstream>

#include "prism/corpus.hpp"
#include "prism/error.hpp"
#include "prism/fsutil.hpp"

namespace prism {
namespace {

constexpr const char* kMetaFile = "meta.json";
constexpr const char* kVectorsFile = "embeddings.bin";
constexpr const char* kLabelsFile = "labels.bin";
constexpr const char* kStatementsFile = "statements.jsonl";

const char* const kKnownKeys[] = {"format_version", "dataset",   "domain",
                                  "model_id",       "layer_index", "token_position",
                                  "prompt_template_id", "dim",   "count",
                                  "dtype",          "created_utc"};

std::string encode_f32le(std::span<const float> values) {
  std::string bytes(values.size() * sizeof(float), '\0');
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(bytes.data(), values.data(), bytes.size());
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto u = std::bit_cast<std::uint32_t>(values[i]);
      for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<char>((u >> (8 * b)) & 0xFF);
    }
  }
  return bytes;
}

std::vector<float> decode_f32le(std::string_view bytes) {
  std::vector<float> values(bytes.size() / sizeof(float));
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(values.data(), bytes.data(), values.size() * sizeof(float));
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) {
        u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
      }
      values[i] = std::bit_cast<float>(u);
    }
  }
  return values;
}

}  // namespace

nlohmann::json meta_to_json(const EmbeddingMeta& m) {
  nlohmann::json j = m.extra.is_object() ? m.extra : nlohmann::json::object();
  j["format_version"] = m.format_version;
  j["dataset"] = m.dataset;
  j["domain"] = m.domain;
  j["model_id"] = m.model_id;
  if (m.layer_index) {
    j["layer_index"] = *m.layer_index;
  } else {
    j["layer_index"] = "last";
  }
  j["token_position"] = m.token_position;
  if (m.prompt_template_id) {
    j["prompt_template_id"] = *m.prompt_template_id;
  } else {
    j["prompt_template_id"] = nullptr;
  }
  j["dim"] = m.dim;
  j["count"] = m.count;
  j["dtype"] = m.dtype;
  j["created_utc"] = m.created_utc;
  return j;
}

EmbeddingMeta meta_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw CorruptionError("meta.json is not an object");
  EmbeddingMeta m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kEmbeddingFormatVersion) {
      throw VersionError("unsupported embedding format_version " +
                         std::to_string(m.format_version) + " (expected " +
                         std::to_string(kEmbeddingFormatVersion) + ")");
    }
    m.dataset = j.value("dataset", "");
    m.domain = j.value("domain", "");
    m.model_id = j.value("model_id", "");
    const auto& layer = j.at("layer_index");
    if (layer.is_string()) {
      if (layer.get<std::string>() != "last") throw CorruptionError("layer_index must be int or \"last\"");
    } else {
      m.layer_index = layer.get<int>();
    }
    m.token_position = j.value("token_position", "last");
    if (j.contains("prompt_template_id") && !j.at("prompt_template_id").is_null()) {
      m.prompt_template_id = j.at("prompt_template_id").get<std::string>();
    }
    m.dim = j.at("dim").get<std::size_t>();
    m.count = j.at("count").get<std::size_t>();
    m.dtype = j.at("dtype").get<std::string>();
    m.created_utc = j.value("created_utc", "");
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("meta.json: ") + e.what());
  }
  if (m.dtype != "f32le") throw CorruptionError("meta.json: unsupported dtype '" + m.dtype + "'");
  m.extra = j;
  for (const char* key : kKnownKeys) m.extra.erase(key);
  return m;
}

EmbeddingSet::EmbeddingSet(EmbeddingMeta meta, std::vector<float> vectors,
                           std::vector<std::uint8_t> labels,
                           std::vector<StatementRecord> statements)
    : meta_(std::move(meta)),
      vectors_(std::move(vectors)),
      labels_(std::move(labels)),
      statements_(std::move(statements)) {
  if (meta_.dim == 0 && meta_.count > 0) throw DataError("embedding dim must be positive");
  if (vectors_.size() != meta_.count * meta_.dim) {
    throw CorruptionError("vector storage holds " + std::to_string(vectors_.size()) +
                          " floats, meta says " + std::to_string(meta_.count) + "x" +
                          std::to_string(meta_.dim));
  }
  if (labels_.size() != meta_.count) {
    throw CorruptionError("labels length " + std::to_string(labels_.size()) + " != count " +
                          std::to_string(meta_.count));
  }
  if (statements_.size() != meta_.count) {
    throw CorruptionError("statements length " + std::to_string(statements_.size()) +
                          " != count " + std::to_string(meta_.count));
  }
  for (std::size_t i = 0; i < meta_.count; ++i) {
    if (labels_[i] > 1) throw DataError("row " + std::to_string(i) + ": label not in {0,1}");
    if (statements_[i].idx != i) throw DataError("statement idx not contiguous at row " + std::to_string(i));
    if (statements_[i].label != labels_[i]) {
      throw CorruptionError("row " + std::to_string(i) + ": statement label disagrees with labels.bin");
    }
  }
  for (std::size_t k = 0; k < vectors_.size(); ++k) {
    if (!std::isfinite(vectors_[k])) {
      throw DataError("non-finite embedding value at row " + std::to_string(k / meta_.dim));
    }
  }
}

EmbeddingSet EmbeddingSet::slice(std::size_t first, std::size_t n) const {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = first + i;
  return select(rows);
}

EmbeddingSet EmbeddingSet::select(std::span<const std::size_t> rows) const {
  EmbeddingMeta meta = meta_;
  meta.count = rows.size();
  std::vector<float> vectors;
  vectors.reserve(rows.size() * meta_.dim);
  std::vector<std::uint8_t> labels;
  std::vector<StatementRecord> statements;
  for (std::size_t r : rows) {
    if (r >= count()) throw DataError("row " + std::to_string(r) + " out of range");
    const auto v = row(r);
    vectors.insert(vectors.end(), v.begin(), v.end());
    labels.push_back(labels_[r]);
    StatementRecord s = statements_[r];
    s.idx = statements.size();
    statements.push_back(std::move(s));
  }
  return EmbeddingSet(std::move(meta), std::move(vectors), std::move(labels), std::move(statements));
}

EmbeddingSet concat_sets(std::span<const EmbeddingSet> sets, std::string dataset) {
  if (sets.empty()) throw DataError("nothing to concatenate");
  EmbeddingMeta meta = sets.front().meta();
  meta.dataset = std::move(dataset);
  meta.count = 0;
  std::vector<float> vectors;
  std::vector<std::uint8_t> labels;
  std::vector<StatementRecord> statements;
  for (const auto& s : sets) {
    if (s.dim() != meta.dim) {
      throw DataError("cannot concatenate '" + s.id() + "' (dim " + std::to_string(s.dim()) +
                      ") with dim " + std::to_string(meta.dim));
    }
    vectors.insert(vectors.end(), s.vectors().begin(), s.vectors().end());
    labels.insert(labels.end(), s.labels().begin(), s.labels().end());
    for (auto r : s.statements()) {
      r.idx = statements.size();
      statements.push_back(std::move(r));
    }
    meta.count += s.count();
  }
  return EmbeddingSet(std::move(meta), std::move(vectors), std::move(labels), std::move(statements));
}

void write_embedding_set(const EmbeddingSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  atomic_write_file(dir / kVectorsFile, encode_f32le(set.vectors()));
  const auto labels = set.labels();
  atomic_write_file(dir / kLabelsFile,
                    std::string_view(reinterpret_cast<const char*>(labels.data()), labels.size()));
  std::string jsonl;
  for (const auto& s : set.statements()) {
    nlohmann::ordered_json line;
    line["idx"] = s.idx;
    line["statement"] = s.statement;
    line["label"] = s.label;
    jsonl += line.dump();
    jsonl += '\n';
  }
  atomic_write_file(dir / kStatementsFile, jsonl);
  // meta last: its presence marks a complete set
  atomic_write_file(dir / kMetaFile, meta_to_json(set.meta()).dump(2) + "\n");
}

EmbeddingSet read_embedding_set(const std::filesystem::path& dir) {
  for (const char* f : {kMetaFile, kVectorsFile, kLabelsFile, kStatementsFile}) {
    if (!std::filesystem::exists(dir / f)) {
      throw DataError(dir.string() + ": missing " + f);
    }
  }
  nlohmann::json meta_json;
  try {
    meta_json = nlohmann::json::parse(read_file(dir / kMetaFile));
  } catch (const nlohmann::json::parse_error& e) {
    throw CorruptionError(dir.string() + "/meta.json: " + e.what());
  }
  EmbeddingMeta meta = meta_from_json(meta_json);

  const auto vector_bytes = std::filesystem::file_size(dir / kVectorsFile);
  if (vector_bytes != meta.count * meta.dim * sizeof(float)) {
    throw CorruptionError(dir.string() + ": embeddings.bin has " + std::to_string(vector_bytes) +
                          " bytes, expected " + std::to_string(meta.count * meta.dim * sizeof(float)));
  }
  const auto label_bytes = std::filesystem::file_size(dir / kLabelsFile);
  if (label_bytes != meta.count) {
    throw CorruptionError(dir.string() + ": labels.bin has " + std::to_string(label_bytes) +
                          " bytes, expected " + std::to_string(meta.count));
  }

  std::vector<float> vectors = decode_f32le(read_file(dir / kVectorsFile));
  const std::string label_raw = read_file(dir / kLabelsFile);
  std::vector<std::uint8_t> labels(label_raw.begin(), label_raw.end());

  std::vector<StatementRecord> statements;
  statements.reserve(meta.count);
  std::istringstream lines(read_file(dir / kStatementsFile));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      statements.push_back(StatementRecord{j.at("idx").get<std::size_t>(),
                                           j.at("statement").get<std::string>(),
                                           j.at("label").get<std::uint8_t>(), meta.domain});
    } catch (const nlohmann::json::exception& e) {
      throw CorruptionError(dir.string() + "/statements.jsonl line " + std::to_string(lineno) +
                            ": " + e.what());
    }
  }
  try {
    return EmbeddingSet(std::move(meta), std::move(vectors), std::move(labels), std::move(statements));
  } catch (const DataError& e) {
    throw CorruptionError(dir.string() + ": " + e.what());
  }
}

std::string utc_timestamp_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace prism
