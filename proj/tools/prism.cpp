// prism command line: mock extraction, geometry, prompt templates, detector
// training, evaluation protocols, reports and plots.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "prism/corpus.hpp"
#include "prism/detectors.hpp"
#include "prism/error.hpp"
#include "prism/fsutil.hpp"
#include "prism/geometry.hpp"
#include "prism/harness.hpp"
#include "prism/plots.hpp"
#include "prism/promptkit.hpp"
#include "prism/synthetic.hpp"
#include "prism/version.hpp"

namespace fs = std::filesystem;
using namespace prism;

namespace {

struct Globals {
  std::string out_dir = ".";
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::vector<std::string> formats = {"json", "md", "csv"};
  unsigned jobs = 1;
};

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { atomic_write_file(path, j.dump(2) + "\n"); }

std::vector<Dataset> load_all(const std::vector<std::string>& dirs) {
  std::vector<Dataset> out;
  for (const auto& d : dirs) out.push_back(load_dataset(d));
  return out;
}

// ---- extract ---------------------------------------------------------------

struct ExtractArgs {
  bool mock = false;
  std::string spec_file;
  std::string kind = "domains";
  std::optional<std::uint64_t> seed;
  std::string aligned;  // "", "yes", "no"
  std::string in_csv;
  std::string domain;
  std::string template_id;
  std::optional<double> score_separation;
};

int run_extract(const Globals& g, const ExtractArgs& a) {
  if (!a.mock) {
    throw SpecError("this build extracts mock embeddings only (pass --mock); real-model extraction is done by prism-extract");
  }
  std::vector<EmbeddingSet> sets;
  const nlohmann::json spec_json = a.spec_file.empty() ? nlohmann::json::object() : read_json(a.spec_file);
  if (a.kind == "domains") {
    MockDomainsSpec spec = mock_domains_spec_from_json(spec_json);
    if (a.seed) spec.seed = *a.seed;
    if (!a.aligned.empty()) spec.aligned = a.aligned == "yes";
    if (!a.in_csv.empty()) {
      if (a.domain.empty()) throw SpecError("--in needs --domain");
      const auto records = load_statement_csv(a.in_csv, a.domain);
      sets.push_back(mock_embed_statements(records, spec, a.domain, a.domain));
    } else {
      sets = make_mock_domains(spec);
    }
  } else if (a.kind == "structures") {
    MockStructureSpec spec;
    spec.dim = spec_json.value("dim", spec.dim);
    if (spec_json.contains("topics")) spec.topics = spec_json["topics"].get<std::vector<std::string>>();
    spec.rows_per_set = spec_json.value("rows_per_set", spec.rows_per_set);
    spec.signal = spec_json.value("signal", spec.signal);
    spec.noise_sigma = spec_json.value("noise_sigma", spec.noise_sigma);
    spec.general_weight = spec_json.value("general_weight", spec.general_weight);
    spec.polarity_weight = spec_json.value("polarity_weight", spec.polarity_weight);
    spec.seed = a.seed.value_or(spec_json.value("seed", spec.seed));
    sets = make_mock_structures(spec);
  } else if (a.kind == "drift") {
    MockDriftSpec spec;
    spec.dim = spec_json.value("dim", spec.dim);
    spec.segments = spec_json.value("segments", spec.segments);
    spec.rows_per_segment = spec_json.value("rows_per_segment", spec.rows_per_segment);
    spec.max_angle_deg = spec_json.value("max_angle_deg", spec.max_angle_deg);
    spec.positive_rate = spec_json.value("positive_rate", spec.positive_rate);
    spec.seed = a.seed.value_or(spec_json.value("seed", spec.seed));
    sets.push_back(make_mock_drift(spec));
  } else {
    throw SpecError("unknown mock kind '" + a.kind + "' (domains, structures, drift)");
  }

  for (auto& s : sets) {
    if (!a.template_id.empty() && a.template_id != kNoTemplateId) {
      EmbeddingMeta m = s.meta();
      m.prompt_template_id = a.template_id;
      s = EmbeddingSet(m, {s.vectors().begin(), s.vectors().end()}, {s.labels().begin(), s.labels().end()},
                       s.statements());
    }
    const fs::path dir = fs::path(g.out_dir) / s.id();
    write_embedding_set(s, dir);
    if (a.score_separation) {
      const auto scores = make_mock_scores(s, *a.score_separation, a.seed.value_or(0));
      write_scores_jsonl(dir / "scores.jsonl", scores);
    }
    fmt::print("{}  {} x {}\n", dir.string(), s.count(), s.dim());
  }
  return 0;
}

// ---- geometry --------------------------------------------------------------

int run_ratio(const Globals& g, const std::vector<std::string>& dirs) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  fmt::print("{:<24} {:>10} {:>12} {:>12}\n", "set", "ratio", "total_var", "dir_var");
  double sum = 0.0;
  for (const auto& d : dirs) {
    const auto set = read_embedding_set(d);
    const auto rep = variance_ratio(set, truth_direction(set));
    sum += rep.ratio;
    fmt::print("{:<24} {:>10.4f} {:>12.6g} {:>12.6g}\n", set.id(), rep.ratio, rep.total_variance,
               rep.directional_variance);
    nlohmann::ordered_json item;
    item["set"] = set.id();
    item["template_id"] = set.meta().prompt_template_id.value_or(std::string(kNoTemplateId));
    item["ratio"] = rep.ratio;
    item["total_variance"] = rep.total_variance;
    item["directional_variance"] = rep.directional_variance;
    out.push_back(std::move(item));
  }
  fmt::print("{:<24} {:>10.4f}\n", "Average", sum / static_cast<double>(dirs.size()));
  write_json(fs::path(g.out_dir) / "ratios.json", out);
  return 0;
}

int run_cosine(const Globals& g, const std::vector<std::string>& dirs) {
  std::vector<TruthDirection> dirs_v;
  for (const auto& d : dirs) dirs_v.push_back(truth_direction(read_embedding_set(d)));
  const auto m = cosine_matrix(dirs_v);
  fmt::print("{:<16}", "");
  for (const auto& id : m.set_ids) fmt::print(" {:>10.10}", id);
  fmt::print("\n");
  for (std::size_t i = 0; i < m.size(); ++i) {
    fmt::print("{:<16.16}", m.set_ids[i]);
    for (std::size_t j = 0; j < m.size(); ++j) fmt::print(" {:>10.4f}", m.at(i, j));
    fmt::print("\n");
  }
  nlohmann::ordered_json j;
  j["set_ids"] = m.set_ids;
  j["values"] = m.values;
  j["column_average_with_diagonal"] = nlohmann::ordered_json::array();
  j["column_average_off_diagonal"] = nlohmann::ordered_json::array();
  fmt::print("{:<16}", "Average");
  for (std::size_t c = 0; c < m.size(); ++c) {
    const double avg = column_average_with_diagonal(m, c);
    fmt::print(" {:>10.4f}", avg);
    j["column_average_with_diagonal"].push_back(avg);
    j["column_average_off_diagonal"].push_back(m.size() > 1 ? column_average_off_diagonal(m, c) : 0.0);
  }
  fmt::print("\n");
  write_json(fs::path(g.out_dir) / "cosine.json", j);
  return 0;
}

int run_pca(const Globals& g, const std::string& dir, const PcaOptions& opt) {
  const auto set = read_embedding_set(dir);
  ScatterInput in{pca2(set, opt), {set.labels().begin(), set.labels().end()}, std::nullopt, set.id()};
  in.boundary = fit_logistic_boundary(in.pca.projections, in.labels);
  for (const auto& f : emit_plots(PlotKind::pca_scatter, in, g.out_dir)) fmt::print("{}\n", f.string());
  fmt::print("explained variance: {:.6g}, {:.6g}\n", in.pca.explained[0], in.pca.explained[1]);
  return 0;
}

// ---- prompts ---------------------------------------------------------------

struct ExpandArgs {
  std::string seed_template = "P1";
  std::string seed_file;
  std::size_t n = 10;
  bool offline = false;
  std::string api_url;
  std::string api_model = "gpt-4o";
  int retries = 3;
};

int run_expand(const Globals& g, const ExpandArgs& a) {
  PromptTemplate seed = bundled_template(a.seed_template);
  if (!a.seed_file.empty()) {
    const auto loaded = load_templates_json(a.seed_file);
    bool found = false;
    for (const auto& t : loaded) {
      if (t.id == a.seed_template) {
        seed = t;
        found = true;
      }
    }
    if (!found) throw SpecError("no template '" + a.seed_template + "' in " + a.seed_file);
  }
  std::optional<ChatEndpoint> endpoint;
  if (!a.offline) {
    if (a.api_url.empty()) throw SpecError("online expansion needs --api-url (or pass --offline)");
    endpoint = ChatEndpoint{a.api_url, a.api_model, api_key_from_env(), 30, a.retries};
  }
  const auto r = expand_templates(seed, a.n, endpoint);
  for (const auto& w : r.warnings) fmt::print(stderr, "warning: {}\n", w);
  std::vector<PromptTemplate> all{seed};
  all.insert(all.end(), r.templates.begin(), r.templates.end());
  const fs::path path = fs::path(g.out_dir) / "templates.json";
  write_templates_json(path, all);
  for (const auto& t : r.templates) fmt::print("{}\t{}\n", t.id, t.text);
  fmt::print("wrote {}\n", path.string());
  return 0;
}

// Each condition is ID=DIR where DIR holds one embedding-set directory per
// evaluation dataset.
int run_rank(const Globals& g, const std::vector<std::string>& conditions) {
  std::map<std::string, std::vector<EmbeddingSet>> by;
  for (const auto& c : conditions) {
    const auto eq = c.find('=');
    if (eq == std::string::npos || eq == 0) throw SpecError("condition must be ID=DIR, got '" + c + "'");
    const std::string id = c.substr(0, eq);
    std::vector<fs::path> subdirs;
    for (const auto& e : fs::directory_iterator(c.substr(eq + 1))) {
      if (e.is_directory() && fs::exists(e.path() / "meta.json")) subdirs.push_back(e.path());
    }
    std::sort(subdirs.begin(), subdirs.end());
    if (subdirs.empty()) throw DataError("condition '" + id + "' has no embedding sets");
    for (const auto& d : subdirs) by[id].push_back(read_embedding_set(d));
  }
  const auto ranking = rank_templates(by);
  for (const auto& e : ranking.entries) fmt::print("{:>3}  {:<8} {:.4f}\n", e.rank, e.template_id, e.mean_ratio);
  fmt::print("selected: {}\n", ranking.selected_id);
  write_json(fs::path(g.out_dir) / "ranking.json", to_json(ranking));
  return 0;
}

// ---- train / eval ----------------------------------------------------------

struct TrainArgs {
  std::string method = "mm";
  std::string set_dir;
  bool literal = false;
  std::size_t epochs = 10;
};

int run_train(const Globals& g, const TrainArgs& a) {
  const Dataset d = load_dataset(a.set_dir);
  ExperimentSpec spec;
  spec.method = method_from_string(a.method);
  spec.literal_mass_mean = a.literal;
  spec.mlp.epochs = a.epochs;
  const std::uint64_t seed = g.seeds.empty() ? 0 : g.seeds.front();
  const DetectorModel m = train_detector(d, spec, seed);
  const fs::path dir = fs::path(g.out_dir) / "model";
  save_model(m, dir);
  const Metrics train_metrics = evaluate_detector(m, d);
  fmt::print("{} on {}: training accuracy {:.4f}\nwrote {}\n", to_string(m.kind()), d.id(), train_metrics.accuracy,
             dir.string());
  return 0;
}

struct EvalArgs {
  std::string protocol;
  std::string method = "mm";
  std::vector<std::string> set_dirs;
  std::string spec_file;
  std::string template_id;
  double split = 0.2;
  bool per_topic = false;
  bool literal = false;
  bool shuffle = false;
  std::size_t epochs = 10;
};

int run_eval(const Globals& g, const EvalArgs& a) {
  ExperimentSpec spec;
  if (!a.spec_file.empty()) {
    spec = experiment_spec_from_json(read_json(a.spec_file));
  } else {
    spec.protocol = protocol_from_string(a.protocol);
    spec.method = method_from_string(a.method);
    spec.seeds = g.seeds;
    spec.literal_mass_mean = a.literal;
    spec.pool_affirmative = !a.per_topic;
    spec.shuffle_split = a.shuffle;
    spec.mlp.epochs = a.epochs;
    if (spec.protocol == Protocol::sequential_split) spec.split_fraction = a.split;
  }
  if (spec.protocol != protocol_from_string(a.protocol)) {
    throw SpecError("spec file protocol '" + std::string(to_string(spec.protocol)) + "' does not match the verb");
  }
  const auto sets = load_all(a.set_dirs);
  if (a.spec_file.empty()) {
    for (const auto& s : sets) spec.sets.push_back(s.id());
    if (!sets.empty()) {
      spec.template_id = sets.front().embeddings.meta().prompt_template_id;
      spec.layer = sets.front().embeddings.meta().layer_index;
    }
    if (!a.template_id.empty()) spec.template_id = a.template_id;
  }
  spec.validate();
  const auto report = run_experiment(spec, sets, {g.jobs});

  std::vector<ReportFormat> formats;
  for (const auto& f : g.formats) formats.push_back(report_format_from_string(f));
  const auto files = emit_report(report, formats, g.out_dir);
  std::cout << markdown_table(std::span(&report, 1));
  for (const auto& f : files) fmt::print("wrote {}\n", f.string());
  return 0;
}

int run_report(const Globals& g, const std::vector<std::string>& inputs) {
  std::vector<ExperimentReport> reports;
  for (const auto& p : inputs) {
    auto r = report_from_json(read_json(p));
    aggregate(r);
    reports.push_back(std::move(r));
  }
  const std::string md = markdown_table(reports);
  std::cout << md;
  atomic_write_file(fs::path(g.out_dir) / "table.md", md);
  return 0;
}

// ---- plot ------------------------------------------------------------------

int run_plot(const Globals& g, const std::string& kind_name, const std::string& input, const std::string& title,
             const PcaOptions& opt) {
  const PlotKind kind = plot_kind_from_string(kind_name);
  PlotInput in;
  switch (kind) {
    case PlotKind::pca_scatter: {
      const auto set = read_embedding_set(input);
      ScatterInput s{pca2(set, opt), {set.labels().begin(), set.labels().end()}, std::nullopt,
                     title.empty() ? set.id() : title};
      s.boundary = fit_logistic_boundary(s.pca.projections, s.labels);
      in = std::move(s);
      break;
    }
    case PlotKind::ratio_bars: {
      // {categories, series, values[series][category], title?, average?}
      const auto j = read_json(input);
      RatioBarsInput r;
      try {
        r.categories = j.at("categories").get<std::vector<std::string>>();
        r.series = j.at("series").get<std::vector<std::string>>();
        r.values = j.at("values").get<std::vector<std::vector<double>>>();
        r.average_group = j.value("average", true);
      } catch (const nlohmann::json::exception& e) {
        throw DataError(input + ": " + e.what());
      }
      r.title = title.empty() ? j.value("title", std::string{}) : title;
      in = std::move(r);
      break;
    }
    case PlotKind::cosine_heatmap: {
      const auto j = read_json(input);
      HeatmapInput h;
      try {
        h.matrix.set_ids = j.at("set_ids").get<std::vector<std::string>>();
        h.matrix.values = j.at("values").get<std::vector<double>>();
      } catch (const nlohmann::json::exception& e) {
        throw DataError(input + ": " + e.what());
      }
      h.title = title;
      in = std::move(h);
      break;
    }
  }
  for (const auto& f : emit_plots(kind, in, g.out_dir)) fmt::print("{}\n", f.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prism: truthfulness-direction geometry and hallucination detectors over hidden states"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Globals g;
  app.add_option("--out-dir", g.out_dir, "Directory for output files")->capture_default_str();
  app.add_option("--seeds", g.seeds, "Seeds for training and evaluation")->delimiter(',')->capture_default_str();
  app.add_option("--format", g.formats, "Report formats: json, md, csv")->delimiter(',')->capture_default_str();
  app.add_option("--jobs", g.jobs, "Training units to run concurrently")->check(CLI::PositiveNumber);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Write embedding sets (mock generator)");
  extract->add_flag("--mock", ex.mock, "Use the deterministic mock generator");
  extract->add_option("--spec", ex.spec_file, "Mock spec JSON");
  extract->add_option("--kind", ex.kind, "domains, structures or drift")->capture_default_str();
  extract->add_option("--seed", ex.seed, "Generator seed (overrides the mock spec)");
  extract->add_option("--aligned", ex.aligned, "yes: shared direction, no: orthogonal per domain")
      ->check(CLI::IsMember({"yes", "no"}));
  extract->add_option("--in", ex.in_csv, "Statement CSV to embed");
  extract->add_option("--domain", ex.domain, "Domain tag for --in");
  extract->add_option("--template", ex.template_id, "Template id recorded in meta");
  extract->add_option("--scores", ex.score_separation, "Also write scores.jsonl with this class separation");

  auto* geometry = app.add_subcommand("geometry", "Truthfulness-direction geometry");
  geometry->require_subcommand(1);
  std::vector<std::string> geo_sets;
  std::string pca_set;
  auto* ratio = geometry->add_subcommand("ratio", "Variance ratio per set");
  ratio->add_option("sets", geo_sets, "Embedding set directories")->required()->check(CLI::ExistingDirectory);
  auto* cosine = geometry->add_subcommand("cosine", "Cosine matrix of truth directions");
  cosine->add_option("sets", geo_sets, "Embedding set directories")->required()->check(CLI::ExistingDirectory);
  auto* pca = geometry->add_subcommand("pca", "2-D PCA projection with logistic boundary");
  pca->add_option("set", pca_set, "Embedding set directory")->required()->check(CLI::ExistingDirectory);
  PcaOptions pca_opt;
  pca->add_option("--max-iterations", pca_opt.max_iterations, "Power-iteration cap per component")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* prompts = app.add_subcommand("prompts", "Prompt template generation and ranking");
  prompts->require_subcommand(1);
  ExpandArgs xa;
  auto* expand = prompts->add_subcommand("expand", "Generate candidate templates from a seed template");
  expand->add_option("--seed-template", xa.seed_template, "Seed template id")->capture_default_str();
  expand->add_option("--templates", xa.seed_file, "templates.json holding the seed template");
  expand->add_option("-n", xa.n, "Number of templates")->capture_default_str();
  expand->add_flag("--offline", xa.offline, "Return the bundled candidates");
  expand->add_option("--api-url", xa.api_url, "Chat-completions endpoint URL (key from PRISM_API_KEY)");
  expand->add_option("--api-model", xa.api_model, "Model name sent to the endpoint")->capture_default_str();
  expand->add_option("--retries", xa.retries, "Retries on malformed replies")->capture_default_str();
  std::vector<std::string> conditions;
  auto* rank = prompts->add_subcommand("rank", "Rank templates by mean variance ratio");
  rank->add_option("conditions", conditions, "ID=DIR per template (DIR holds one set per dataset)")->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train one detector (first --seeds value)");
  train->add_option("--method", ta.method, "mm, mlp or threshold")->capture_default_str();
  train->add_option("--set", ta.set_dir, "Training set directory")->required()->check(CLI::ExistingDirectory);
  train->add_flag("--literal", ta.literal, "Mass-mean without centering bias");
  train->add_option("--epochs", ta.epochs, "MLP epochs")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Run an evaluation protocol");
  eval->require_subcommand(1);
  EvalArgs ea;
  auto add_eval = [&](const char* name, const char* protocol, const char* help) {
    auto* c = eval->add_subcommand(name, help);
    c->add_option("sets", ea.set_dirs, "Embedding set directories")->required()->check(CLI::ExistingDirectory);
    c->add_option("--method", ea.method, "mm, mlp or threshold")->capture_default_str();
    c->add_option("--spec", ea.spec_file, "ExperimentSpec JSON (overrides flags)");
    c->add_option("--template", ea.template_id, "Template id label for the report");
    c->add_flag("--literal", ea.literal, "Mass-mean without centering bias");
    c->add_option("--epochs", ea.epochs, "MLP epochs")->capture_default_str();
    c->callback([&ea, protocol] { ea.protocol = protocol; });
    return c;
  };
  add_eval("cross-domain", "cross_domain", "Train on each set, test on every other set");
  add_eval("transfer", "affirmative_transfer", "Train on affirmative sets, test per structure")
      ->add_flag("--per-topic", ea.per_topic, "One detector per topic instead of pooling");
  auto* seq = add_eval("sequential", "sequential_split", "Train on the first fraction, test on the rest");
  seq->add_option("--split", ea.split, "Training fraction")->capture_default_str();
  seq->add_flag("--shuffle", ea.shuffle, "Permute rows (seeded) before splitting");

  std::vector<std::string> report_inputs;
  auto* report = app.add_subcommand("report", "Combine report.json files into one markdown table");
  report->add_option("reports", report_inputs, "report.json files")->required()->check(CLI::ExistingFile);

  std::string plot_kind, plot_input, plot_title;
  auto* plot = app.add_subcommand("plot", "Render an SVG plot");
  plot->add_option("kind", plot_kind, "pca_scatter, ratio_bars or cosine_heatmap")->required();
  plot->add_option("input", plot_input, "Set directory (pca_scatter) or JSON input")->required();
  plot->add_option("--title", plot_title, "Plot title");
  plot->add_option("--max-iterations", pca_opt.max_iterations, "Power-iteration cap (pca_scatter)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    fs::create_directories(g.out_dir);
    if (*extract) return run_extract(g, ex);
    if (*ratio) return run_ratio(g, geo_sets);
    if (*cosine) return run_cosine(g, geo_sets);
    if (*pca) return run_pca(g, pca_set, pca_opt);
    if (*expand) return run_expand(g, xa);
    if (*rank) return run_rank(g, conditions);
    if (*train) return run_train(g, ta);
    if (*eval) return run_eval(g, ea);
    if (*report) return run_report(g, report_inputs);
    if (*plot) return run_plot(g, plot_kind, plot_input, plot_title, pca_opt);
  } catch (const SpecError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  }
  return 0;
}
