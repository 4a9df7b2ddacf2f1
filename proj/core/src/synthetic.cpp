#include "prism/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "prism/error.hpp"
#include "prism/rng.hpp"

namespace prism {
namespace {

std::vector<double> unit_gaussian(std::size_t dim, Rng& rng) {
  std::vector<double> v(dim);
  double norm = 0.0;
  for (double& x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

struct Planted {
  std::vector<double> mean;
  std::vector<double> direction;
};

void append_row(std::vector<float>& out, const Planted& p, std::uint8_t label, double signal,
                double noise_sigma, Rng& noise) {
  const double sign = label ? 1.0 : -1.0;
  for (std::size_t k = 0; k < p.mean.size(); ++k) {
    const double v = p.mean[k] + sign * signal * p.direction[k] + noise_sigma * noise.normal();
    out.push_back(static_cast<float>(v));
  }
}

EmbeddingMeta mock_meta(std::size_t dim, std::size_t count, std::string dataset, std::string domain) {
  EmbeddingMeta m;
  m.dataset = std::move(dataset);
  m.domain = std::move(domain);
  m.model_id = "mock";
  m.dim = dim;
  m.count = count;
  m.created_utc = "1970-01-01T00:00:00Z";  // fixed so output bytes depend only on the mock spec
  return m;
}

void remove_component(std::vector<double>& v, const std::vector<double>& unit) {
  double c = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) c += v[k] * unit[k];
  for (std::size_t k = 0; k < v.size(); ++k) v[k] -= c * unit[k];
}

void normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
}

// Unaligned mode: the listed domains get mutually orthogonal directions
// (Gram-Schmidt in list order); an unlisted domain is made orthogonal to all
// of them.
std::vector<double> unaligned_direction(const MockDomainsSpec& spec, const std::string& domain) {
  std::vector<std::vector<double>> basis;
  for (const auto& d : spec.domains) {
    Rng rng(spec.seed, "direction:" + d);
    std::vector<double> v = unit_gaussian(spec.dim, rng);
    for (const auto& b : basis) remove_component(v, b);
    normalize(v);
    if (d == domain) return v;
    basis.push_back(std::move(v));
  }
  Rng rng(spec.seed, "direction:" + domain);
  std::vector<double> v = unit_gaussian(spec.dim, rng);
  for (const auto& b : basis) remove_component(v, b);
  normalize(v);
  return v;
}

Planted domain_geometry(const MockDomainsSpec& spec, const std::string& domain) {
  Rng mean_rng(spec.seed, "mean:" + domain);
  Planted p{unit_gaussian(spec.dim, mean_rng), {}};
  for (double& x : p.mean) x *= spec.mean_scale;
  if (spec.aligned) {
    Rng dir_rng(spec.seed, "direction");
    p.direction = unit_gaussian(spec.dim, dir_rng);
  } else {
    p.direction = unaligned_direction(spec, domain);
  }
  return p;
}

void validate(const MockDomainsSpec& spec) {
  if (spec.dim == 0) throw SpecError("mock dim must be positive");
  if (!(spec.signal > 0.0)) throw SpecError("mock signal must be > 0");
  if (spec.noise_sigma < 0.0) throw SpecError("mock noise_sigma must be >= 0");
  if (!spec.aligned && spec.domains.size() >= spec.dim) {
    throw SpecError("unaligned mock needs dim > number of domains");
  }
}

}  // namespace

MockDomainsSpec mock_domains_spec_from_json(const nlohmann::json& j) {
  MockDomainsSpec s;
  try {
    s.dim = j.value("dim", s.dim);
    if (j.contains("domains")) s.domains = j.at("domains").get<std::vector<std::string>>();
    s.rows_per_domain = j.value("rows_per_domain", s.rows_per_domain);
    s.signal = j.value("signal", s.signal);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.mean_scale = j.value("mean_scale", s.mean_scale);
    s.aligned = j.value("aligned", s.aligned);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("mock spec: ") + e.what());
  }
  validate(s);
  return s;
}

nlohmann::json to_json(const MockDomainsSpec& s) {
  return {{"dim", s.dim},
          {"domains", s.domains},
          {"rows_per_domain", s.rows_per_domain},
          {"signal", s.signal},
          {"noise_sigma", s.noise_sigma},
          {"mean_scale", s.mean_scale},
          {"aligned", s.aligned},
          {"seed", s.seed}};
}

EmbeddingSet mock_embed_statements(std::span<const StatementRecord> records,
                                   const MockDomainsSpec& spec, const std::string& domain,
                                   const std::string& dataset) {
  validate(spec);
  const Planted p = domain_geometry(spec, domain);
  Rng noise(spec.seed, "noise:" + dataset);
  std::vector<float> vectors;
  vectors.reserve(records.size() * spec.dim);
  std::vector<std::uint8_t> labels;
  std::vector<StatementRecord> statements;
  for (const auto& r : records) {
    append_row(vectors, p, r.label, spec.signal, spec.noise_sigma, noise);
    labels.push_back(r.label);
    StatementRecord s = r;
    s.idx = statements.size();
    s.domain = domain;
    statements.push_back(std::move(s));
  }
  EmbeddingMeta meta = mock_meta(spec.dim, records.size(), dataset, domain);
  meta.extra["mock"] = to_json(spec);
  return EmbeddingSet(std::move(meta), std::move(vectors), std::move(labels), std::move(statements));
}

std::vector<EmbeddingSet> make_mock_domains(const MockDomainsSpec& spec) {
  validate(spec);
  std::vector<EmbeddingSet> out;
  for (const auto& domain : spec.domains) {
    std::vector<StatementRecord> records;
    for (std::size_t i = 0; i < spec.rows_per_domain; ++i) {
      const std::uint8_t label = (i % 2 == 0) ? 1 : 0;
      records.push_back({i, domain + " statement " + std::to_string(i), label, domain});
    }
    out.push_back(mock_embed_statements(records, spec, domain, domain));
  }
  return out;
}

std::vector<EmbeddingSet> make_mock_structures(const MockStructureSpec& spec) {
  if (spec.dim < 2) throw SpecError("structure mock needs dim >= 2");
  Rng g_rng(spec.seed, "general");
  Rng p_rng(spec.seed, "polarity");
  const std::vector<double> general = unit_gaussian(spec.dim, g_rng);
  std::vector<double> polarity = unit_gaussian(spec.dim, p_rng);
  remove_component(polarity, general);
  normalize(polarity);

  std::vector<EmbeddingSet> out;
  for (const auto& topic : spec.topics) {
    for (const char* structure : kStructures) {
      const std::string name = std::string(structure) == "affirm" ? topic : topic + "_" + structure;
      const double flip = std::string(structure) == "affirm" ? 1.0 : -1.0;
      Planted p;
      Rng mean_rng(spec.seed, "mean:" + name);
      p.mean = unit_gaussian(spec.dim, mean_rng);
      for (double& x : p.mean) x *= spec.mean_scale;
      p.direction.resize(spec.dim);
      double dn = 0.0;
      for (std::size_t k = 0; k < spec.dim; ++k) {
        p.direction[k] = spec.general_weight * general[k] + flip * spec.polarity_weight * polarity[k];
        dn += p.direction[k] * p.direction[k];
      }
      dn = std::sqrt(dn);
      for (double& x : p.direction) x /= dn;

      Rng noise(spec.seed, "noise:" + name);
      std::vector<float> vectors;
      std::vector<std::uint8_t> labels;
      std::vector<StatementRecord> statements;
      for (std::size_t i = 0; i < spec.rows_per_set; ++i) {
        const std::uint8_t label = (i % 2 == 0) ? 1 : 0;
        append_row(vectors, p, label, spec.signal, spec.noise_sigma, noise);
        labels.push_back(label);
        statements.push_back({i, name + " statement " + std::to_string(i), label, topic});
      }
      EmbeddingMeta meta = mock_meta(spec.dim, spec.rows_per_set, name, topic);
      meta.extra["structure"] = structure;
      out.emplace_back(std::move(meta), std::move(vectors), std::move(labels), std::move(statements));
    }
  }
  return out;
}

EmbeddingSet make_mock_drift(const MockDriftSpec& spec) {
  if (spec.dim < 2) throw SpecError("drift mock needs dim >= 2");
  Rng label_rng(spec.seed, "labels");
  Rng noise(spec.seed, "noise:drift");
  std::vector<float> vectors;
  std::vector<std::uint8_t> labels;
  std::vector<StatementRecord> statements;
  for (std::size_t seg = 0; seg < spec.segments; ++seg) {
    const double frac = spec.segments > 1 ? static_cast<double>(seg) / static_cast<double>(spec.segments - 1) : 0.0;
    const double angle = frac * spec.max_angle_deg * std::numbers::pi / 180.0;
    Planted p;
    p.mean.assign(spec.dim, 0.0);
    p.direction.assign(spec.dim, 0.0);
    p.direction[0] = std::cos(angle);
    p.direction[1] = std::sin(angle);
    for (std::size_t i = 0; i < spec.rows_per_segment; ++i) {
      const std::uint8_t label = label_rng.bernoulli(spec.positive_rate) ? 1 : 0;
      append_row(vectors, p, label, spec.signal, spec.noise_sigma, noise);
      labels.push_back(label);
      statements.push_back({statements.size(), "segment " + std::to_string(seg) + " item " + std::to_string(i),
                            label, "drift"});
    }
  }
  EmbeddingMeta meta = mock_meta(spec.dim, labels.size(), "drift", "drift");
  return EmbeddingSet(std::move(meta), std::move(vectors), std::move(labels), std::move(statements));
}

std::vector<double> make_mock_scores(const EmbeddingSet& set, double separation, std::uint64_t seed) {
  if (!std::isfinite(separation)) throw SpecError("mock score separation must be finite");
  Rng rng(seed, "scores:" + set.id());
  std::vector<double> out(set.count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = separation * (set.labels()[i] - 0.5) + rng.normal();
  return out;
}

}  // namespace prism
