#include <doctest.h>

#include <cmath>
#include <cstring>

#include "prism/error.hpp"
#include "prism/fsutil.hpp"
#include "prism/harness.hpp"
#include "prism/synthetic.hpp"
#include "test_support.hpp"

using namespace prism;

namespace {

std::vector<Dataset> mock_datasets(bool aligned, std::vector<std::string> domains, std::size_t rows = 200,
                                   std::uint64_t seed = 0) {
  MockDomainsSpec spec;
  spec.aligned = aligned;
  spec.domains = std::move(domains);
  spec.rows_per_domain = rows;
  spec.seed = seed;
  std::vector<Dataset> out;
  for (auto& s : make_mock_domains(spec)) out.push_back(Dataset{std::move(s), {}});
  return out;
}

ExperimentSpec spec_for(Protocol p, Method m, const std::vector<Dataset>& sets, std::vector<std::uint64_t> seeds = {0}) {
  ExperimentSpec s;
  s.protocol = p;
  s.method = m;
  s.seeds = std::move(seeds);
  for (const auto& d : sets) s.sets.push_back(d.id());
  if (p == Protocol::sequential_split) s.split_fraction = 0.2;
  return s;
}

void check_reaggregation(const ExperimentReport& r) {
  ExperimentReport copy = r;
  copy.per_test_average.clear();
  copy.grand_average = {};
  aggregate(copy);
  for (const auto& [g, a] : r.per_test_average) {
    CHECK(std::abs(copy.per_test_average.at(g).accuracy - a.accuracy) <= 1e-12);
    CHECK(copy.per_test_average.at(g).cells == a.cells);
  }
  double mean = 0;
  for (const auto& [g, a] : r.per_test_average) mean += a.accuracy;
  mean /= static_cast<double>(r.per_test_average.size());
  CHECK(std::abs(r.grand_average.accuracy - mean) <= 1e-12);
}

}  // namespace

TEST_CASE("spec validation") {
  ExperimentSpec s;
  s.sets = {"a", "b"};
  CHECK_NOTHROW(s.validate());
  s.seeds.clear();
  CHECK_THROWS_AS(s.validate(), SpecError);
  s.seeds = {0};
  s.split_fraction = 0.2;
  CHECK_THROWS_AS(s.validate(), SpecError);
  s.protocol = Protocol::sequential_split;
  s.sets = {"a"};
  CHECK_NOTHROW(s.validate());
  s.split_fraction.reset();
  CHECK_THROWS_AS(s.validate(), SpecError);
  s.split_fraction = 1.0;
  CHECK_THROWS_AS(s.validate(), SpecError);
  s.sets.clear();
  s.split_fraction = 0.5;
  CHECK_THROWS_AS(s.validate(), SpecError);
  CHECK_THROWS_AS(protocol_from_string("bogus"), SpecError);
  CHECK_THROWS_AS(method_from_string("bogus"), SpecError);
}

TEST_CASE("spec json round trip") {
  ExperimentSpec s;
  s.protocol = Protocol::affirmative_transfer;
  s.method = Method::mlp;
  s.template_id = "T10";
  s.layer = 16;
  s.sets = {"cities", "cities_neg"};
  s.seeds = {4, 5};
  s.pool_affirmative = false;
  s.mlp.epochs = 3;
  const auto back = experiment_spec_from_json(nlohmann::json::parse(to_json(s).dump()));
  CHECK(to_json(back).dump() == to_json(s).dump());
  CHECK_THROWS_AS(experiment_spec_from_json(nlohmann::json::parse("{\"method\": \"mm\"}")), SpecError);
}

TEST_CASE("cross domain: two aligned mock domains") {
  const auto sets = mock_datasets(true, {"animals", "cities"});
  const auto r = run_cross_domain(spec_for(Protocol::cross_domain, Method::mass_mean, sets), sets);
  REQUIRE(r.cells.size() == 2);
  CHECK(r.cells[0].train_set == "animals");
  CHECK(r.cells[0].test_set == "cities");
  CHECK(r.cells[1].train_set == "cities");
  CHECK(r.cells[0].metrics.accuracy >= 0.9);
  CHECK(r.cells[1].metrics.accuracy >= 0.9);
  CHECK(std::abs(r.cells[0].metrics.accuracy - r.cells[1].metrics.accuracy) <= 0.05);
  check_reaggregation(r);
  CHECK(r.toolkit_version == "0.1.0");
}

TEST_CASE("cross domain: 6 sets x 3 seeds gives 90 cells, averages exclude self") {
  const auto sets = mock_datasets(false, {"a", "b", "c", "d", "e", "f"}, 60);
  auto spec = spec_for(Protocol::cross_domain, Method::mlp, sets, {0, 1, 2});
  spec.mlp.hidden = {8};
  spec.mlp.epochs = 2;
  const auto r = run_cross_domain(spec, sets);
  CHECK(r.cells.size() == 90);
  for (const auto& c : r.cells) CHECK(c.train_set != c.test_set);
  for (const auto& [g, a] : r.per_test_average) CHECK(a.cells == 15);
  CHECK(r.groups == std::vector<std::string>{"a", "b", "c", "d", "e", "f"});
  check_reaggregation(r);
}

TEST_CASE("cross domain: identical distributions match in-domain accuracy") {
  // two independent draws from one generator
  MockDomainsSpec spec;
  spec.domains = {"same"};
  spec.rows_per_domain = 4000;
  spec.noise_sigma = 1.2;
  auto first = make_mock_domains(spec).front();
  const auto recs = first.statements();
  auto second = mock_embed_statements(recs, spec, "same", "same_b");
  std::vector<Dataset> sets{Dataset{first, {}}, Dataset{second, {}}};
  const auto r = run_cross_domain(spec_for(Protocol::cross_domain, Method::mass_mean, sets), sets);
  const double in_first = evaluate(train_mass_mean(first), first).accuracy;
  const double in_second = evaluate(train_mass_mean(second), second).accuracy;
  CHECK(in_first < 0.99);  // noisy enough for the comparison to mean something
  CHECK(std::abs(r.per_test_average.at("same_b").accuracy - in_first) <= 0.03);
  CHECK(std::abs(r.per_test_average.at("same").accuracy - in_second) <= 0.03);
}

TEST_CASE("cross domain: errors") {
  auto sets = mock_datasets(true, {"a", "b"});
  MockDomainsSpec other;
  other.dim = 8;
  other.domains = {"b"};
  sets[1] = Dataset{make_mock_domains(other).front(), {}};
  try {
    run_cross_domain(spec_for(Protocol::cross_domain, Method::mass_mean, sets), sets);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("'a'") != std::string::npos);
    CHECK(msg.find("'b'") != std::string::npos);
  }
  const auto one = mock_datasets(true, {"a"});
  CHECK_THROWS_AS(run_cross_domain(spec_for(Protocol::cross_domain, Method::mass_mean, one), one), SpecError);
  auto wrong = spec_for(Protocol::cross_domain, Method::mass_mean, mock_datasets(true, {"a", "b"}));
  wrong.sets = {"a", "zzz"};
  const auto ok = mock_datasets(true, {"a", "b"});
  CHECK_THROWS_AS(run_cross_domain(wrong, ok), SpecError);
}

TEST_CASE("cross domain: jobs do not change results") {
  const auto sets = mock_datasets(false, {"a", "b", "c"}, 80);
  auto spec = spec_for(Protocol::cross_domain, Method::mlp, sets, {0, 1});
  spec.mlp.hidden = {8};
  spec.mlp.epochs = 2;
  const auto serial = run_cross_domain(spec, sets, {1});
  const auto parallel = run_cross_domain(spec, sets, {4});
  CHECK(report_json_text(serial) == report_json_text(parallel));
}

TEST_CASE("threshold method uses score lists") {
  auto sets = mock_datasets(true, {"a", "b"}, 40);
  for (auto& d : sets) {
    for (std::size_t i = 0; i < d.count(); ++i) d.scores.push_back(d.labels()[i] ? 1.0 + 0.01 * i : -1.0 - 0.01 * i);
  }
  const auto r = run_cross_domain(spec_for(Protocol::cross_domain, Method::threshold, sets), sets);
  for (const auto& c : r.cells) {
    CHECK(c.metrics.accuracy == 1.0);
    CHECK(c.metrics.auroc.value() == 1.0);
  }
  sets[1].scores.clear();
  CHECK_THROWS_AS(run_cross_domain(spec_for(Protocol::cross_domain, Method::threshold, sets), sets), DataError);
}

namespace {

std::vector<Dataset> structure_sets(double polarity_weight, std::vector<std::string> topics = {"cities", "facts"}) {
  MockStructureSpec spec;
  spec.topics = std::move(topics);
  spec.polarity_weight = polarity_weight;
  std::vector<Dataset> out;
  for (auto& s : make_mock_structures(spec)) out.push_back(Dataset{std::move(s), {}});
  return out;
}

}  // namespace

TEST_CASE("affirmative transfer: column layout and collapse") {
  const auto sets = structure_sets(1.0);
  const auto r = run_affirmative_transfer(spec_for(Protocol::affirmative_transfer, Method::mass_mean, sets), sets);
  CHECK(r.groups == std::vector<std::string>{"neg", "conj", "disj"});
  CHECK(r.cells.size() == 6);
  for (const auto& c : r.cells) CHECK(c.train_set == "affirm");
  for (const auto& g : r.groups) CHECK(std::abs(r.per_test_average.at(g).accuracy - 0.5) <= 0.05);
  check_reaggregation(r);

  const auto aligned = structure_sets(0.05);
  const auto ra = run_affirmative_transfer(spec_for(Protocol::affirmative_transfer, Method::mass_mean, aligned), aligned);
  for (const auto& g : ra.groups) CHECK(ra.per_test_average.at(g).accuracy >= 0.9);
}

TEST_CASE("affirmative transfer: per topic and errors") {
  const auto sets = structure_sets(0.05);
  auto spec = spec_for(Protocol::affirmative_transfer, Method::mass_mean, sets);
  spec.pool_affirmative = false;
  const auto r = run_affirmative_transfer(spec, sets);
  CHECK(r.cells.size() == 6);
  for (const auto& c : r.cells) CHECK(c.test_set.starts_with(c.train_set + "_"));

  std::vector<Dataset> no_affirm;
  for (const auto& d : sets) {
    if (d.structure() != "affirm") no_affirm.push_back(d);
  }
  CHECK_THROWS_AS(run_affirmative_transfer(spec_for(Protocol::affirmative_transfer, Method::mass_mean, no_affirm), no_affirm),
                  DataError);
}

TEST_CASE("dataset structure and topic from names") {
  auto s = testing_support::make_set({1, 0, 0, 1}, {1, 0}, 2, "animals_conj");
  Dataset d{s, {}};
  CHECK(d.structure() == "conj");
  EmbeddingMeta m = s.meta();
  m.domain.clear();
  Dataset e{EmbeddingSet(m, {1, 0, 0, 1}, {1, 0}, s.statements()), {}};
  CHECK(e.topic() == "animals");
  Dataset plain{testing_support::make_set({1, 0, 0, 1}, {1, 0}, 2, "animals"), {}};
  CHECK(plain.structure() == "affirm");
}

TEST_CASE("sequential split: sizes and order") {
  std::vector<float> v;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 790; ++i) {
    y.push_back(i % 3 == 0);
    v.push_back(y.back() ? 1.0f + 0.001f * i : -1.0f);
    v.push_back(static_cast<float>(i));
  }
  std::vector<Dataset> sets{Dataset{testing_support::make_set(v, y, 2, "qa"), {}}};
  const auto r = run_sequential_split(spec_for(Protocol::sequential_split, Method::mass_mean, sets), sets);
  REQUIRE(r.cells.size() == 1);
  CHECK(r.cells[0].metrics.n == 632);
  CHECK(r.cells[0].metrics.auroc.has_value());
  CHECK(r.cells[0].train_set == "qa[train]");

  std::vector<float> small;
  std::vector<std::uint8_t> sy{1, 0, 1, 0, 1, 0, 0, 1, 1, 0};
  for (int i = 0; i < 10; ++i) small.push_back(sy[i] ? 1.0f : -1.0f);
  std::vector<Dataset> ten{Dataset{testing_support::make_set(small, sy, 1, "ten"), {}}};
  auto spec = spec_for(Protocol::sequential_split, Method::mass_mean, ten);
  spec.split_fraction = 0.5;
  const auto r2 = run_sequential_split(spec, ten);
  CHECK(r2.cells[0].metrics.n == 5);
  CHECK(r2.cells[0].metrics.accuracy == 1.0);
}

TEST_CASE("sequential split: single-class training part is an error") {
  std::vector<float> v(20);
  std::vector<std::uint8_t> y(20, 0);
  for (int i = 0; i < 20; ++i) v[i] = static_cast<float>(i);
  for (int i = 10; i < 20; ++i) y[i] = 1;
  std::vector<Dataset> sets{Dataset{testing_support::make_set(v, y, 1, "s"), {}}};
  CHECK_THROWS_AS(run_sequential_split(spec_for(Protocol::sequential_split, Method::mass_mean, sets), sets), DataError);
}

TEST_CASE("sequential split: drift hurts relative to a shuffled split") {
  std::vector<Dataset> sets{Dataset{make_mock_drift({}), {}}};
  auto spec = spec_for(Protocol::sequential_split, Method::mass_mean, sets, {0, 1, 2});
  const auto ordered = run_sequential_split(spec, sets);
  spec.shuffle_split = true;
  const auto shuffled = run_sequential_split(spec, sets);
  CHECK(ordered.grand_average.auroc.value() < shuffled.grand_average.auroc.value());
}

TEST_CASE("reports: json round trip, markdown, csv, determinism") {
  const auto sets = mock_datasets(false, {"animals", "cities", "facts"}, 60);
  auto spec = spec_for(Protocol::cross_domain, Method::mlp, sets, {0, 1});
  spec.mlp.hidden = {8};
  spec.mlp.epochs = 2;
  const auto r1 = run_cross_domain(spec, sets);
  const auto r2 = run_cross_domain(spec, sets);
  REQUIRE(r1.cells.size() == r2.cells.size());
  for (std::size_t i = 0; i < r1.cells.size(); ++i) {
    CHECK(std::memcmp(&r1.cells[i].metrics.accuracy, &r2.cells[i].metrics.accuracy, sizeof(double)) == 0);
    CHECK(std::memcmp(&*r1.cells[i].metrics.auroc, &*r2.cells[i].metrics.auroc, sizeof(double)) == 0);
  }
  const auto back = report_from_json(nlohmann::json::parse(report_json_text(r1)));
  CHECK(report_json_text(back) == report_json_text(r1));
  check_reaggregation(back);

  const auto dir = testing_support::temp_dir("report");
  const ReportFormat all[] = {ReportFormat::json, ReportFormat::markdown_table, ReportFormat::csv};
  const auto files = emit_report(r1, all, dir / "one");
  CHECK(files.size() == 3);
  emit_report(r2, all, dir / "two");
  for (const char* f : {"report.json", "report.md", "cells.csv"}) CHECK(read_file(dir / "one" / f) == read_file(dir / "two" / f));

  const std::string md = read_file(dir / "one" / "report.md");
  CHECK(md.starts_with("| Method | animals | cities | facts | Average |\n"));
  CHECK(md.find("| MLP |") != std::string::npos);
  const std::string csv = read_file(dir / "one" / "cells.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);

  ExperimentReport empty;
  CHECK_THROWS_AS(emit_report(empty, all, dir / "empty"), DataError);
  CHECK_FALSE(std::filesystem::exists(dir / "empty" / "report.json"));
}

TEST_CASE("markdown table layout with several methods") {
  const auto sets = mock_datasets(true, {"a", "b"}, 60);
  auto s1 = spec_for(Protocol::cross_domain, Method::mass_mean, sets);
  auto s2 = s1;
  s2.template_id = "T10";
  const ExperimentReport reports[] = {run_cross_domain(s1, sets), run_cross_domain(s2, sets)};
  const auto md = markdown_table(reports);
  CHECK(md.find("| MM |") != std::string::npos);
  CHECK(md.find("| PRISM-MM |") != std::string::npos);
  CHECK(md.find("---:|") != std::string::npos);
}

TEST_CASE("scores jsonl round trip") {
  const auto dir = testing_support::temp_dir("scores");
  const std::vector<double> s{0.25, -1.5, 3e-9};
  write_scores_jsonl(dir / "scores.jsonl", s);
  CHECK(read_scores_jsonl(dir / "scores.jsonl") == s);
  atomic_write_file(dir / "bad.jsonl", "{\"idx\": 1, \"score\": 0.5}\n");
  CHECK_THROWS_AS(read_scores_jsonl(dir / "bad.jsonl"), DataError);

  auto set = testing_support::make_set({1, 0, 0, 1, 1, 1}, {1, 0, 1}, 2, "x");
  write_embedding_set(set, dir / "x");
  write_scores_jsonl(dir / "x" / "scores.jsonl", s);
  const auto d = load_dataset(dir / "x");
  CHECK(d.scores == s);
  write_scores_jsonl(dir / "x" / "scores.jsonl", std::vector<double>{1.0});
  CHECK_THROWS_AS(load_dataset(dir / "x"), DataError);
}
