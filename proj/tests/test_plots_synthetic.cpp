#include <doctest.h>

#include "fixtures.hpp"
#include "prism/error.hpp"
#include "prism/fsutil.hpp"
#include "prism/geometry.hpp"
#include "prism/plots.hpp"
#include "prism/synthetic.hpp"
#include "test_support.hpp"

using namespace prism;

TEST_CASE("plot kinds") {
  CHECK(plot_kind_from_string("pca_scatter") == PlotKind::pca_scatter);
  CHECK(plot_kind_from_string("ratio_bars") == PlotKind::ratio_bars);
  CHECK(plot_kind_from_string("cosine_heatmap") == PlotKind::cosine_heatmap);
  CHECK_THROWS_AS(plot_kind_from_string("pie"), SpecError);
}

TEST_CASE("ratio bars from reference ratios") {
  RatioBarsInput in;
  for (auto d : fixtures::kDomains) in.categories.emplace_back(d);
  in.series = {"No prompt", "Prompt 1"};
  in.values = {{fixtures::kRatioBefore.begin(), fixtures::kRatioBefore.end()},
               {fixtures::kRatioAfterP1.begin(), fixtures::kRatioAfterP1.end()}};
  const auto svg = ratio_bars_svg(in);
  CHECK(svg.find(">Average<") != std::string::npos);
  CHECK(svg.find(">0.0725<") != std::string::npos);
  CHECK(svg.find(">0.1560<") != std::string::npos);
  CHECK(svg == ratio_bars_svg(in));
  CHECK(svg.find("<script") == std::string::npos);
  CHECK(svg.find("href") == std::string::npos);
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 10);

  RatioBarsInput empty;
  CHECK_THROWS_AS(ratio_bars_svg(empty), DataError);
  const auto dir = testing_support::temp_dir("plots_empty");
  CHECK_THROWS_AS(emit_plots(PlotKind::ratio_bars, empty, dir), DataError);
  CHECK_FALSE(std::filesystem::exists(dir / "ratio_bars.svg"));
  CHECK_THROWS_AS(emit_plots(PlotKind::cosine_heatmap, in, dir), SpecError);
}

TEST_CASE("pca scatter and csv") {
  MockDomainsSpec spec;
  spec.domains = {"animals"};
  spec.rows_per_domain = 60;
  const auto set = make_mock_domains(spec).front();
  ScatterInput in{pca2(set), {set.labels().begin(), set.labels().end()}, std::nullopt, "animals"};
  in.boundary = fit_logistic_boundary(in.pca.projections, in.labels);
  const auto dir = testing_support::temp_dir("plots");
  const auto files = emit_plots(PlotKind::pca_scatter, in, dir / "a");
  CHECK(files.size() == 2);
  emit_plots(PlotKind::pca_scatter, in, dir / "b");
  CHECK(read_file(dir / "a" / "pca.svg") == read_file(dir / "b" / "pca.svg"));
  CHECK(read_file(dir / "a" / "pca.svg").find("stroke-dasharray") != std::string::npos);
  const auto csv = read_file(dir / "a" / "pca.csv");
  CHECK(csv.starts_with("idx,pc1,pc2,label\n0,"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 61);
  ScatterInput none;
  CHECK_THROWS_AS(pca_scatter_svg(none), DataError);
}

TEST_CASE("cosine heatmap") {
  HeatmapInput in;
  for (std::size_t i = 0; i < 6; ++i) {
    in.matrix.set_ids.emplace_back(fixtures::kDomains[i]);
    for (double v : fixtures::kCosineAfter[i]) in.matrix.values.push_back(v);
  }
  const auto svg = cosine_heatmap_svg(in);
  CHECK(std::count(svg.begin(), svg.end(), '\n') >= 36);
  CHECK(svg.find(">0.80<") != std::string::npos);
  CHECK(svg == cosine_heatmap_svg(in));
  CHECK_THROWS_AS(cosine_heatmap_svg(HeatmapInput{}), DataError);
}

TEST_CASE("mock domains: aligned directions agree, unaligned do not") {
  MockDomainsSpec spec;
  spec.domains = {"a", "b"};
  spec.rows_per_domain = 100;
  auto cos_of = [&](bool aligned) {
    spec.aligned = aligned;
    const auto sets = make_mock_domains(spec);
    const TruthDirection dirs[] = {truth_direction(sets[0]), truth_direction(sets[1])};
    return cosine_matrix(dirs).at(0, 1);
  };
  CHECK(cos_of(true) >= 0.95);
  CHECK(std::abs(cos_of(false)) <= 0.2);
}

TEST_CASE("mock domains: reproducible bytes, valid on disk") {
  MockDomainsSpec spec;
  spec.seed = 7;
  const auto a = make_mock_domains(spec);
  const auto b = make_mock_domains(spec);
  const auto dir = testing_support::temp_dir("mock");
  for (std::size_t i = 0; i < a.size(); ++i) {
    write_embedding_set(a[i], dir / "a" / a[i].id());
    write_embedding_set(b[i], dir / "b" / b[i].id());
    for (const char* f : {"meta.json", "embeddings.bin", "labels.bin", "statements.jsonl"}) {
      CHECK(read_file(dir / "a" / a[i].id() / f) == read_file(dir / "b" / b[i].id() / f));
    }
    CHECK(read_embedding_set(dir / "a" / a[i].id()).count() == spec.rows_per_domain);
  }
}

TEST_CASE("mock domains: ratio grows with signal") {
  double previous = 0;
  for (double s : {0.5, 1.0, 2.0, 4.0}) {
    MockDomainsSpec spec;
    spec.signal = s;
    spec.domains = {"a"};
    const auto set = make_mock_domains(spec).front();
    const double r = variance_ratio(set, truth_direction(set)).ratio;
    CHECK(r > previous);
    previous = r;
  }
}

TEST_CASE("mock specs validate") {
  MockDomainsSpec spec;
  spec.signal = 0;
  CHECK_THROWS_AS(make_mock_domains(spec), SpecError);
  CHECK_THROWS_AS(mock_domains_spec_from_json(nlohmann::json::parse("{\"noise_sigma\": -1}")), SpecError);
  const auto j = to_json(MockDomainsSpec{});
  CHECK(to_json(mock_domains_spec_from_json(j)) == j);
}

TEST_CASE("mock structures: tags and geometry") {
  MockStructureSpec spec;
  const auto sets = make_mock_structures(spec);
  REQUIRE(sets.size() == 8);
  CHECK(sets[0].id() == "cities");
  CHECK(sets[1].id() == "cities_neg");
  CHECK(sets[1].meta().extra["structure"] == "neg");
  const TruthDirection dirs[] = {truth_direction(sets[0]), truth_direction(sets[1])};
  CHECK(std::abs(cosine_matrix(dirs).at(0, 1)) <= 0.2);
}

TEST_CASE("mock drift: rotates and is imbalanced") {
  const auto s = make_mock_drift({});
  CHECK(s.count() == 800);
  const auto first = truth_direction(s.slice(0, 80));
  const auto last = truth_direction(s.slice(720, 80));
  const TruthDirection dirs[] = {first, last};
  CHECK(cosine_matrix(dirs).at(0, 1) < 0.0);
  const double pos = std::count(s.labels().begin(), s.labels().end(), 1) / 800.0;
  CHECK(std::abs(pos - 0.35) <= 0.05);
}

TEST_CASE("mock scores: seeded, separated by label") {
  MockDomainsSpec spec;
  spec.rows_per_domain = 2000;
  const auto set = make_mock_domains(spec).front();
  const auto a = make_mock_scores(set, 3.0, 0);
  CHECK(a == make_mock_scores(set, 3.0, 0));
  CHECK(a != make_mock_scores(set, 3.0, 1));
  double pos = 0, neg = 0, np = 0, nn = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    (set.labels()[i] ? pos : neg) += a[i];
    (set.labels()[i] ? np : nn) += 1;
  }
  // difference of means is 3 with standard error ~0.045
  CHECK(std::abs(pos / np - neg / nn - 3.0) <= 0.2);
  CHECK_THROWS_AS(make_mock_scores(set, std::nan(""), 0), SpecError);
}
