#include "prism/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "prism/error.hpp"
#include "prism/fsutil.hpp"
#include "prism/rng.hpp"
#include "prism/version.hpp"

namespace prism {
namespace {

// One detector to train and the sets to test it on.
struct TrainingUnit {
  const Dataset* train = nullptr;
  std::string train_name;
  std::uint64_t seed = 0;
  std::vector<const Dataset*> tests;
  std::vector<std::string> groups;
};

std::vector<std::vector<Metrics>> run_units(const ExperimentSpec& spec,
                                            const std::vector<TrainingUnit>& units, unsigned jobs) {
  std::vector<std::vector<Metrics>> results(units.size());
  std::vector<std::exception_ptr> errors(units.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t u = next++; u < units.size(); u = next++) {
      try {
        const auto& unit = units[u];
        const DetectorModel model = train_detector(*unit.train, spec, unit.seed);
        for (const Dataset* test : unit.tests) results[u].push_back(evaluate_detector(model, *test));
      } catch (...) {
        errors[u] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(units.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

ExperimentReport collect(const ExperimentSpec& spec, const std::vector<TrainingUnit>& units,
                         const std::vector<std::vector<Metrics>>& results,
                         std::vector<std::string> groups) {
  ExperimentReport report;
  report.spec = spec;
  report.toolkit_version = std::string(kVersion);
  for (std::size_t u = 0; u < units.size(); ++u) {
    for (std::size_t t = 0; t < units[u].tests.size(); ++t) {
      report.cells.push_back(Cell{units[u].train_name, units[u].tests[t]->id(), units[u].seed,
                                  units[u].groups[t], results[u][t]});
    }
  }
  report.groups = std::move(groups);
  aggregate(report);
  return report;
}

void check_spec_sets(const ExperimentSpec& spec, std::span<const Dataset> sets) {
  spec.validate();
  std::vector<std::string> ids;
  for (const auto& s : sets) ids.push_back(s.id());
  if (ids != spec.sets) {
    std::string got;
    for (const auto& id : ids) got += (got.empty() ? "" : ", ") + id;
    throw SpecError("experiment lists sets that were not supplied (supplied: " + got + ")");
  }
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (sets[i].id() == sets[j].id()) throw SpecError("duplicate set id '" + sets[i].id() + "'");
    }
  }
}

void check_compatible(const Dataset& a, const Dataset& b, Method method) {
  if (method != Method::threshold && a.embeddings.dim() != b.embeddings.dim()) {
    throw DataError("dim mismatch: '" + a.id() + "' has " + std::to_string(a.embeddings.dim()) + ", '" +
                    b.id() + "' has " + std::to_string(b.embeddings.dim()));
  }
  const auto& ma = a.embeddings.meta();
  const auto& mb = b.embeddings.meta();
  if (ma.prompt_template_id != mb.prompt_template_id) {
    throw DataError("template mismatch between '" + a.id() + "' and '" + b.id() + "'");
  }
  if (ma.layer_index != mb.layer_index) {
    throw DataError("layer mismatch between '" + a.id() + "' and '" + b.id() + "'");
  }
}

std::string format_opt(const std::optional<double>& v) {
  return v ? fmt::format("{:.4f}", *v) : std::string("-");
}

nlohmann::ordered_json aggregate_json(const Aggregate& a) {
  nlohmann::ordered_json j;
  j["accuracy"] = a.accuracy;
  j["auroc"] = a.auroc ? nlohmann::ordered_json(*a.auroc) : nlohmann::ordered_json(nullptr);
  j["cells"] = a.cells;
  return j;
}

Aggregate aggregate_from_json(const nlohmann::json& j) {
  Aggregate a;
  a.accuracy = j.at("accuracy").get<double>();
  if (!j.at("auroc").is_null()) a.auroc = j.at("auroc").get<double>();
  a.cells = j.at("cells").get<std::size_t>();
  return a;
}

}  // namespace

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::cross_domain: return "cross_domain";
    case Protocol::affirmative_transfer: return "affirmative_transfer";
    case Protocol::sequential_split: return "sequential_split";
  }
  return "unknown";
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::mass_mean: return "mass_mean";
    case Method::mlp: return "mlp";
    case Method::threshold: return "threshold";
  }
  return "unknown";
}

Protocol protocol_from_string(std::string_view s) {
  if (s == "cross_domain" || s == "cross-domain") return Protocol::cross_domain;
  if (s == "affirmative_transfer" || s == "transfer") return Protocol::affirmative_transfer;
  if (s == "sequential_split" || s == "sequential") return Protocol::sequential_split;
  throw SpecError("unknown protocol '" + std::string(s) + "'");
}

Method method_from_string(std::string_view s) {
  if (s == "mass_mean" || s == "mm") return Method::mass_mean;
  if (s == "mlp" || s == "saplma") return Method::mlp;
  if (s == "threshold" || s == "lnpp") return Method::threshold;
  throw SpecError("unknown method '" + std::string(s) + "'");
}

void ExperimentSpec::validate() const {
  if (seeds.empty()) throw SpecError("at least one seed is required");
  if (sets.empty()) throw SpecError("at least one set is required");
  const bool sequential = protocol == Protocol::sequential_split;
  if (sequential != split_fraction.has_value()) {
    throw SpecError("split_fraction is required for sequential_split and only there");
  }
  if (split_fraction && !(*split_fraction > 0.0 && *split_fraction < 1.0)) {
    throw SpecError("split_fraction must lie in (0, 1)");
  }
  if (protocol == Protocol::cross_domain && sets.size() < 2) {
    throw SpecError("cross_domain needs at least 2 sets");
  }
  if (sequential && sets.size() != 1) throw SpecError("sequential_split takes exactly one set");
}

nlohmann::ordered_json to_json(const ExperimentSpec& s) {
  nlohmann::ordered_json j;
  j["protocol"] = to_string(s.protocol);
  j["method"] = to_string(s.method);
  j["template_id"] = s.template_id ? nlohmann::ordered_json(*s.template_id) : nlohmann::ordered_json(nullptr);
  j["layer"] = s.layer ? nlohmann::ordered_json(*s.layer) : nlohmann::ordered_json("last");
  j["sets"] = s.sets;
  j["seeds"] = s.seeds;
  j["split_fraction"] = s.split_fraction ? nlohmann::ordered_json(*s.split_fraction) : nlohmann::ordered_json(nullptr);
  j["literal_mass_mean"] = s.literal_mass_mean;
  j["pool_affirmative"] = s.pool_affirmative;
  j["shuffle_split"] = s.shuffle_split;
  j["mlp"] = to_json(s.mlp);
  return j;
}

ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
  ExperimentSpec s;
  try {
    s.protocol = protocol_from_string(j.at("protocol").get<std::string>());
    s.method = method_from_string(j.at("method").get<std::string>());
    if (j.contains("template_id") && !j["template_id"].is_null()) s.template_id = j["template_id"].get<std::string>();
    if (j.contains("layer") && j["layer"].is_number_integer()) s.layer = j["layer"].get<int>();
    s.sets = j.at("sets").get<std::vector<std::string>>();
    if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("split_fraction") && !j["split_fraction"].is_null()) s.split_fraction = j["split_fraction"].get<double>();
    s.literal_mass_mean = j.value("literal_mass_mean", false);
    s.pool_affirmative = j.value("pool_affirmative", true);
    s.shuffle_split = j.value("shuffle_split", false);
    if (j.contains("mlp")) {
      const auto& m = j.at("mlp");
      s.mlp.hidden = m.value("hidden", s.mlp.hidden);
      s.mlp.dropout = m.value("dropout", s.mlp.dropout);
      s.mlp.epochs = m.value("epochs", s.mlp.epochs);
      s.mlp.batch_size = m.value("batch_size", s.mlp.batch_size);
      s.mlp.validation_fraction = m.value("validation_fraction", s.mlp.validation_fraction);
      s.mlp.adam.step = m.value("adam_step", s.mlp.adam.step);
      s.mlp.adam.beta1 = m.value("adam_beta1", s.mlp.adam.beta1);
      s.mlp.adam.beta2 = m.value("adam_beta2", s.mlp.adam.beta2);
      s.mlp.adam.epsilon = m.value("adam_epsilon", s.mlp.adam.epsilon);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("experiment spec: ") + e.what());
  }
  return s;
}

std::string Dataset::structure() const {
  const auto& extra = embeddings.meta().extra;
  if (extra.is_object() && extra.contains("structure") && extra["structure"].is_string()) {
    return extra["structure"].get<std::string>();
  }
  const std::string name = id();
  for (const char* tag : {"neg", "conj", "disj"}) {
    if (name.ends_with(std::string("_") + tag)) return tag;
  }
  return "affirm";
}

std::string Dataset::topic() const {
  if (!embeddings.meta().domain.empty()) return embeddings.meta().domain;
  const std::string name = id();
  const std::string tag = structure();
  if (tag != "affirm" && name.ends_with("_" + tag)) return name.substr(0, name.size() - tag.size() - 1);
  return name;
}

Dataset Dataset::slice(std::size_t first, std::size_t n) const {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), first);
  return select(rows);
}

Dataset Dataset::select(std::span<const std::size_t> rows) const {
  Dataset out{embeddings.select(rows), {}};
  if (has_scores()) {
    for (std::size_t r : rows) out.scores.push_back(scores[r]);
  }
  return out;
}

Dataset concat_datasets(std::span<const Dataset> parts, std::string id) {
  std::vector<EmbeddingSet> sets;
  Dataset out;
  bool all_scored = true;
  for (const auto& p : parts) {
    sets.push_back(p.embeddings);
    all_scored = all_scored && p.has_scores();
  }
  out.embeddings = concat_sets(sets, std::move(id));
  if (all_scored) {
    for (const auto& p : parts) out.scores.insert(out.scores.end(), p.scores.begin(), p.scores.end());
  }
  return out;
}

std::vector<double> read_scores_jsonl(const std::filesystem::path& path) {
  std::istringstream lines(read_file(path));
  std::string line;
  std::vector<double> scores;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto idx = j.at("idx").get<std::size_t>();
      if (idx != scores.size()) {
        throw DataError(path.string() + " line " + std::to_string(lineno) + ": idx " +
                        std::to_string(idx) + " out of sequence");
      }
      scores.push_back(j.at("score").get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return scores;
}

void write_scores_jsonl(const std::filesystem::path& path, std::span<const double> scores) {
  std::string out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    nlohmann::ordered_json j;
    j["idx"] = i;
    j["score"] = scores[i];
    out += j.dump() + "\n";
  }
  atomic_write_file(path, out);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset d{read_embedding_set(dir), {}};
  if (std::filesystem::exists(dir / "scores.jsonl")) {
    d.scores = read_scores_jsonl(dir / "scores.jsonl");
    if (d.scores.size() != d.count()) {
      throw DataError(dir.string() + ": scores.jsonl has " + std::to_string(d.scores.size()) +
                      " entries for " + std::to_string(d.count()) + " rows");
    }
  }
  return d;
}

void aggregate(ExperimentReport& report) {
  if (report.groups.empty()) {
    for (const auto& c : report.cells) {
      if (std::find(report.groups.begin(), report.groups.end(), c.group) == report.groups.end()) {
        report.groups.push_back(c.group);
      }
    }
  }
  report.per_test_average.clear();
  for (const auto& g : report.groups) {
    Aggregate a;
    double acc = 0.0, auc = 0.0;
    bool all_auc = true;
    for (const auto& c : report.cells) {
      if (c.group != g) continue;
      ++a.cells;
      acc += c.metrics.accuracy;
      if (c.metrics.auroc) {
        auc += *c.metrics.auroc;
      } else {
        all_auc = false;
      }
    }
    if (a.cells == 0) continue;
    a.accuracy = acc / static_cast<double>(a.cells);
    if (all_auc) a.auroc = auc / static_cast<double>(a.cells);
    report.per_test_average[g] = a;
  }
  Aggregate grand;
  double acc = 0.0, auc = 0.0;
  bool all_auc = !report.per_test_average.empty();
  for (const auto& g : report.groups) {
    const auto it = report.per_test_average.find(g);
    if (it == report.per_test_average.end()) continue;
    acc += it->second.accuracy;
    grand.cells += it->second.cells;
    if (it->second.auroc) {
      auc += *it->second.auroc;
    } else {
      all_auc = false;
    }
  }
  const double k = static_cast<double>(report.per_test_average.size());
  if (k > 0) {
    grand.accuracy = acc / k;
    if (all_auc) grand.auroc = auc / k;
  }
  report.grand_average = grand;
}

DetectorModel train_detector(const Dataset& train, const ExperimentSpec& spec, std::uint64_t seed) {
  switch (spec.method) {
    case Method::mass_mean: {
      DetectorModel m = train_mass_mean(train.embeddings, spec.literal_mass_mean);
      m.provenance.seed = seed;
      return m;
    }
    case Method::mlp: return train_mlp(train.embeddings, seed, spec.mlp);
    case Method::threshold: {
      if (!train.has_scores()) throw DataError("threshold method: set '" + train.id() + "' has no scores");
      DetectorModel m = fit_threshold(train.scores, train.labels());
      m.provenance.set_id = train.id();
      m.provenance.template_id = train.embeddings.meta().prompt_template_id;
      m.provenance.layer = train.embeddings.meta().layer_index;
      m.provenance.seed = seed;
      return m;
    }
  }
  throw SpecError("unknown method");
}

Metrics evaluate_detector(const DetectorModel& model, const Dataset& test) {
  if (model.kind() == DetectorKind::scalar_threshold) {
    if (!test.has_scores()) throw DataError("threshold method: set '" + test.id() + "' has no scores");
    return evaluate(model, test.scores, test.labels());
  }
  return evaluate(model, test.embeddings);
}

ExperimentReport run_cross_domain(const ExperimentSpec& spec, std::span<const Dataset> sets,
                                  const RunOptions& options) {
  if (spec.protocol != Protocol::cross_domain) throw SpecError("spec protocol is not cross_domain");
  check_spec_sets(spec, sets);
  for (std::size_t i = 1; i < sets.size(); ++i) check_compatible(sets[0], sets[i], spec.method);

  std::vector<TrainingUnit> units;
  for (const auto& train : sets) {
    for (const auto seed : spec.seeds) {
      TrainingUnit u{&train, train.id(), seed, {}, {}};
      for (const auto& test : sets) {
        if (&test == &train) continue;
        u.tests.push_back(&test);
        u.groups.push_back(test.id());
      }
      units.push_back(std::move(u));
    }
  }
  std::vector<std::string> groups;
  for (const auto& s : sets) groups.push_back(s.id());
  return collect(spec, units, run_units(spec, units, options.jobs), std::move(groups));
}

ExperimentReport run_affirmative_transfer(const ExperimentSpec& spec, std::span<const Dataset> sets,
                                          const RunOptions& options) {
  if (spec.protocol != Protocol::affirmative_transfer) throw SpecError("spec protocol is not affirmative_transfer");
  check_spec_sets(spec, sets);
  for (std::size_t i = 1; i < sets.size(); ++i) check_compatible(sets[0], sets[i], spec.method);

  std::vector<const Dataset*> affirm;
  std::vector<const Dataset*> others;
  for (const auto& s : sets) {
    (s.structure() == "affirm" ? affirm : others).push_back(&s);
  }
  if (affirm.empty()) throw DataError("affirmative_transfer: no affirmative sets supplied");
  if (others.empty()) throw DataError("affirmative_transfer: no non-affirmative sets supplied");

  std::vector<std::string> groups;
  for (const char* tag : {"neg", "conj", "disj"}) {
    for (const auto* o : others) {
      if (o->structure() == tag) {
        groups.push_back(tag);
        break;
      }
    }
  }
  for (const auto* o : others) {
    if (std::find(groups.begin(), groups.end(), o->structure()) == groups.end()) groups.push_back(o->structure());
  }

  std::vector<Dataset> pooled;  // owns the training sets units point to
  std::vector<TrainingUnit> units;
  if (spec.pool_affirmative) {
    std::vector<Dataset> parts;
    for (const auto* a : affirm) parts.push_back(*a);
    pooled.push_back(concat_datasets(parts, "affirm"));
    for (const auto seed : spec.seeds) {
      TrainingUnit u{&pooled.front(), "affirm", seed, {}, {}};
      for (const auto* o : others) {
        u.tests.push_back(o);
        u.groups.push_back(o->structure());
      }
      units.push_back(std::move(u));
    }
  } else {
    for (const auto* a : affirm) {
      std::vector<const Dataset*> topic_tests;
      for (const auto* o : others) {
        if (o->topic() == a->topic()) topic_tests.push_back(o);
      }
      if (topic_tests.empty()) continue;
      for (const auto seed : spec.seeds) {
        TrainingUnit u{a, a->id(), seed, topic_tests, {}};
        for (const auto* o : topic_tests) u.groups.push_back(o->structure());
        units.push_back(std::move(u));
      }
    }
    if (units.empty()) throw DataError("affirmative_transfer: no topic has both affirmative and other sets");
  }
  return collect(spec, units, run_units(spec, units, options.jobs), std::move(groups));
}

ExperimentReport run_sequential_split(const ExperimentSpec& spec, std::span<const Dataset> sets,
                                      const RunOptions& options) {
  if (spec.protocol != Protocol::sequential_split) throw SpecError("spec protocol is not sequential_split");
  check_spec_sets(spec, sets);
  const Dataset& full = sets.front();
  const std::size_t n = full.count();
  const auto n_train = static_cast<std::size_t>(std::floor(*spec.split_fraction * static_cast<double>(n) + 1e-9));
  if (n_train == 0 || n_train >= n) {
    throw DataError("sequential split of " + std::to_string(n) + " rows leaves an empty side");
  }

  std::vector<Dataset> owned;
  owned.reserve(2 * spec.seeds.size());
  std::vector<TrainingUnit> units;
  for (const auto seed : spec.seeds) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (spec.shuffle_split) Rng(seed, "sequential-shuffle").shuffle(order);
    const std::span<const std::size_t> all(order);
    owned.push_back(full.select(all.first(n_train)));
    const auto train_labels = owned.back().labels();
    const auto pos = std::count(train_labels.begin(), train_labels.end(), std::uint8_t{1});
    if (pos == 0 || static_cast<std::size_t>(pos) == n_train) {
      throw DataError("sequential split: the first " + std::to_string(n_train) + " rows of '" + full.id() +
                      "' hold a single class");
    }
    owned.push_back(full.select(all.subspan(n_train)));
    // names keep the parent id so cells read "<set>[train]" -> "<set>[test]"
    units.push_back(TrainingUnit{&owned[owned.size() - 2], full.id() + "[train]", seed, {&owned.back()}, {full.id()}});
  }
  ExperimentReport report = collect(spec, units, run_units(spec, units, options.jobs), {full.id()});
  for (auto& c : report.cells) c.test_set = full.id() + "[test]";
  return report;
}

ExperimentReport run_experiment(const ExperimentSpec& spec, std::span<const Dataset> sets,
                                const RunOptions& options) {
  switch (spec.protocol) {
    case Protocol::cross_domain: return run_cross_domain(spec, sets, options);
    case Protocol::affirmative_transfer: return run_affirmative_transfer(spec, sets, options);
    case Protocol::sequential_split: return run_sequential_split(spec, sets, options);
  }
  throw SpecError("unknown protocol");
}

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "json") return ReportFormat::json;
  if (s == "md" || s == "markdown" || s == "markdown_table") return ReportFormat::markdown_table;
  if (s == "csv") return ReportFormat::csv;
  throw SpecError("unknown report format '" + std::string(s) + "'");
}

nlohmann::ordered_json to_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["toolkit_version"] = r.toolkit_version;
  j["spec"] = to_json(r.spec);
  j["groups"] = r.groups;
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : r.cells) {
    nlohmann::ordered_json cell;
    cell["train_set"] = c.train_set;
    cell["test_set"] = c.test_set;
    cell["seed"] = c.seed;
    cell["group"] = c.group;
    cell["n"] = c.metrics.n;
    cell["n_correct"] = c.metrics.n_correct;
    cell["accuracy"] = c.metrics.accuracy;
    cell["auroc"] = c.metrics.auroc ? nlohmann::ordered_json(*c.metrics.auroc) : nlohmann::ordered_json(nullptr);
    j["cells"].push_back(std::move(cell));
  }
  j["per_test_average"] = nlohmann::ordered_json::object();
  for (const auto& g : r.groups) {
    const auto it = r.per_test_average.find(g);
    if (it != r.per_test_average.end()) j["per_test_average"][g] = aggregate_json(it->second);
  }
  j["grand_average"] = aggregate_json(r.grand_average);
  return j;
}

ExperimentReport report_from_json(const nlohmann::json& j) {
  ExperimentReport r;
  try {
    r.toolkit_version = j.at("toolkit_version").get<std::string>();
    r.spec = experiment_spec_from_json(j.at("spec"));
    r.groups = j.at("groups").get<std::vector<std::string>>();
    for (const auto& c : j.at("cells")) {
      Cell cell;
      cell.train_set = c.at("train_set").get<std::string>();
      cell.test_set = c.at("test_set").get<std::string>();
      cell.seed = c.at("seed").get<std::uint64_t>();
      cell.group = c.at("group").get<std::string>();
      cell.metrics.n = c.at("n").get<std::size_t>();
      cell.metrics.n_correct = c.at("n_correct").get<std::size_t>();
      cell.metrics.accuracy = c.at("accuracy").get<double>();
      if (!c.at("auroc").is_null()) cell.metrics.auroc = c.at("auroc").get<double>();
      r.cells.push_back(std::move(cell));
    }
    for (const auto& [g, a] : j.at("per_test_average").items()) r.per_test_average[g] = aggregate_from_json(a);
    r.grand_average = aggregate_from_json(j.at("grand_average"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report.json: ") + e.what());
  }
  return r;
}

std::string report_json_text(const ExperimentReport& report) { return to_json(report).dump(2) + "\n"; }

std::string method_label(const ExperimentSpec& spec) {
  std::string base;
  switch (spec.method) {
    case Method::mass_mean: base = spec.literal_mass_mean ? "MM (literal)" : "MM"; break;
    case Method::mlp: base = "MLP"; break;
    case Method::threshold: base = "Threshold"; break;
  }
  return spec.template_id ? "PRISM-" + base : base;
}

std::string markdown_table(std::span<const ExperimentReport> reports) {
  if (reports.empty()) throw DataError("no reports to tabulate");
  std::vector<std::string> columns;
  for (const auto& r : reports) {
    for (const auto& g : r.groups) {
      if (std::find(columns.begin(), columns.end(), g) == columns.end()) columns.push_back(g);
    }
  }
  const bool use_auroc = reports.front().spec.protocol == Protocol::sequential_split;
  std::string out = use_auroc ? "| Method (AUROC) |" : "| Method |";
  std::string rule = "|---|";
  for (const auto& c : columns) {
    out += " " + c + " |";
    rule += "---:|";
  }
  out += " Average |\n" + rule + "---:|\n";
  for (const auto& r : reports) {
    out += "| " + method_label(r.spec) + " |";
    for (const auto& c : columns) {
      const auto it = r.per_test_average.find(c);
      if (it == r.per_test_average.end()) {
        out += " - |";
      } else {
        out += " " + (use_auroc ? format_opt(it->second.auroc) : fmt::format("{:.4f}", it->second.accuracy)) + " |";
      }
    }
    out += " " + (use_auroc ? format_opt(r.grand_average.auroc) : fmt::format("{:.4f}", r.grand_average.accuracy)) +
           " |\n";
  }
  return out;
}

std::string cells_csv(const ExperimentReport& report) {
  std::string out = "train_set,test_set,seed,group,n,n_correct,accuracy,auroc\n";
  for (const auto& c : report.cells) {
    out += fmt::format("{},{},{},{},{},{},{:.17g},{}\n", c.train_set, c.test_set, c.seed, c.group, c.metrics.n,
                       c.metrics.n_correct, c.metrics.accuracy,
                       c.metrics.auroc ? fmt::format("{:.17g}", *c.metrics.auroc) : std::string());
  }
  return out;
}

std::vector<std::filesystem::path> emit_report(const ExperimentReport& report,
                                               std::span<const ReportFormat> formats,
                                               const std::filesystem::path& dir) {
  if (report.cells.empty()) throw DataError("refusing to write an empty report");
  if (formats.empty()) throw SpecError("no report format requested");
  std::vector<std::filesystem::path> written;
  for (const auto f : formats) {
    switch (f) {
      case ReportFormat::json:
        written.push_back(dir / "report.json");
        atomic_write_file(written.back(), report_json_text(report));
        break;
      case ReportFormat::markdown_table:
        written.push_back(dir / "report.md");
        atomic_write_file(written.back(), markdown_table(std::span(&report, 1)));
        break;
      case ReportFormat::csv:
        written.push_back(dir / "cells.csv");
        atomic_write_file(written.back(), cells_csv(report));
        break;
    }
  }
  return written;
}

}  // namespace prism
