#include "prism/plots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "prism/error.hpp"
#include "prism/fsutil.hpp"

namespace prism {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 56.0;
constexpr const char* kColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string open_svg(double w, double h, std::string_view title) {
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} {1:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      w, h);
  if (!title.empty()) {
    s += fmt::format("<text x=\"{:.2f}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", w / 2,
                     escape(title));
  }
  return s;
}

// Maps [lo, hi] onto [a, b] with a little padding.
struct Axis {
  double lo, hi, a, b;
  double operator()(double v) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

Axis padded_axis(double lo, double hi, double a, double b) {
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad, a, b};
}

// Clips w0*x + w1*y + b = 0 to the box; empty when it misses.
std::vector<std::pair<double, double>> boundary_segment(const LogisticBoundary& lb, const Axis& x, const Axis& y) {
  std::vector<std::pair<double, double>> pts;
  const double w0 = lb.w[0], w1 = lb.w[1];
  auto add = [&](double px, double py) {
    for (const auto& [qx, qy] : pts) {
      if (std::abs(qx - px) < 1e-12 && std::abs(qy - py) < 1e-12) return;
    }
    pts.emplace_back(px, py);
  };
  if (w1 != 0.0) {
    for (double px : {x.lo, x.hi}) {
      const double py = -(w0 * px + lb.b) / w1;
      if (py >= y.lo && py <= y.hi) add(px, py);
    }
  }
  if (w0 != 0.0) {
    for (double py : {y.lo, y.hi}) {
      const double px = -(w1 * py + lb.b) / w0;
      if (px >= x.lo && px <= x.hi) add(px, py);
    }
  }
  if (pts.size() > 2) pts.resize(2);
  if (pts.size() < 2) pts.clear();
  return pts;
}

}  // namespace

std::string_view to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::pca_scatter: return "pca_scatter";
    case PlotKind::ratio_bars: return "ratio_bars";
    case PlotKind::cosine_heatmap: return "cosine_heatmap";
  }
  return "unknown";
}

PlotKind plot_kind_from_string(std::string_view s) {
  if (s == "pca_scatter" || s == "pca") return PlotKind::pca_scatter;
  if (s == "ratio_bars" || s == "ratios") return PlotKind::ratio_bars;
  if (s == "cosine_heatmap" || s == "cosine") return PlotKind::cosine_heatmap;
  throw SpecError("unknown plot kind '" + std::string(s) + "'");
}

std::string pca_csv(const Pca2Result& pca, std::span<const std::uint8_t> labels) {
  if (pca.projections.size() != 2 * labels.size()) throw DataError("pca rows and labels disagree");
  std::string out = "idx,pc1,pc2,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += fmt::format("{},{:.17g},{:.17g},{}\n", i, pca.projections[2 * i], pca.projections[2 * i + 1],
                       static_cast<int>(labels[i]));
  }
  return out;
}

std::string pca_scatter_svg(const ScatterInput& in) {
  const std::size_t n = in.labels.size();
  if (n == 0) throw DataError("nothing to plot");
  if (in.pca.projections.size() != 2 * n) throw DataError("pca rows and labels disagree");
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (std::size_t i = 0; i < n; ++i) {
    xlo = std::min(xlo, in.pca.projections[2 * i]);
    xhi = std::max(xhi, in.pca.projections[2 * i]);
    ylo = std::min(ylo, in.pca.projections[2 * i + 1]);
    yhi = std::max(yhi, in.pca.projections[2 * i + 1]);
  }
  const Axis x = padded_axis(xlo, xhi, kMargin, kWidth - kMargin);
  const Axis y = padded_axis(ylo, yhi, kHeight - kMargin, kMargin);

  std::string s = open_svg(kWidth, kHeight, in.title);
  s += fmt::format("<rect x=\"{0:.2f}\" y=\"{0:.2f}\" width=\"{1:.2f}\" height=\"{2:.2f}\" fill=\"none\" stroke=\"#444\"/>\n",
                   kMargin, kWidth - 2 * kMargin, kHeight - 2 * kMargin);
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">PC1</text>\n", kWidth / 2, kHeight - 20);
  s += fmt::format("<text x=\"20\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2f})\">PC2</text>\n",
                   kHeight / 2, kHeight / 2);
  for (std::size_t i = 0; i < n; ++i) {
    s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.7\"/>\n",
                     x(in.pca.projections[2 * i]), y(in.pca.projections[2 * i + 1]),
                     in.labels[i] ? kColors[0] : kColors[3]);
  }
  if (in.boundary) {
    const auto seg = boundary_segment(*in.boundary, x, y);
    if (seg.size() == 2) {
      s += fmt::format(
          "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\" stroke-width=\"1.5\" "
          "stroke-dasharray=\"6 4\"/>\n",
          x(seg[0].first), y(seg[0].second), x(seg[1].first), y(seg[1].second));
    }
  }
  s += fmt::format("<circle cx=\"{0:.2f}\" cy=\"{1:.2f}\" r=\"4\" fill=\"{2}\"/><text x=\"{3:.2f}\" y=\"{4:.2f}\">true</text>\n",
                   kWidth - kMargin - 70, kMargin + 14, kColors[0], kWidth - kMargin - 60, kMargin + 18);
  s += fmt::format("<circle cx=\"{0:.2f}\" cy=\"{1:.2f}\" r=\"4\" fill=\"{2}\"/><text x=\"{3:.2f}\" y=\"{4:.2f}\">false</text>\n",
                   kWidth - kMargin - 70, kMargin + 32, kColors[3], kWidth - kMargin - 60, kMargin + 36);
  s += "</svg>\n";
  return s;
}

std::string ratio_bars_svg(const RatioBarsInput& in) {
  if (in.categories.empty() || in.series.empty()) throw DataError("nothing to plot");
  if (in.values.size() != in.series.size()) throw DataError("ratio_bars: one value row per series expected");
  for (const auto& row : in.values) {
    if (row.size() != in.categories.size()) throw DataError("ratio_bars: one value per category expected");
  }
  std::vector<std::string> cats = in.categories;
  std::vector<std::vector<double>> vals = in.values;
  if (in.average_group) {
    cats.push_back("Average");
    for (auto& row : vals) {
      double sum = 0.0;
      for (double v : row) sum += v;
      row.push_back(sum / static_cast<double>(in.categories.size()));
    }
  }
  double top = 0.0;
  for (const auto& row : vals) {
    for (double v : row) {
      if (!std::isfinite(v)) throw DataError("ratio_bars: non-finite value");
      top = std::max(top, v);
    }
  }
  if (top <= 0.0) top = 1.0;
  top *= 1.15;

  const double plot_w = kWidth - 2 * kMargin;
  const double group_w = plot_w / static_cast<double>(cats.size());
  const double bar_w = 0.8 * group_w / static_cast<double>(vals.size());
  const Axis y{0.0, top, kHeight - kMargin, kMargin};

  std::string s = open_svg(kWidth, kHeight, in.title);
  s += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#444\"/>\n", kMargin,
                   kHeight - kMargin, kWidth - kMargin);
  for (std::size_t c = 0; c < cats.size(); ++c) {
    const double gx = kMargin + group_w * static_cast<double>(c) + 0.1 * group_w;
    for (std::size_t r = 0; r < vals.size(); ++r) {
      const double v = vals[r][c];
      const double bx = gx + bar_w * static_cast<double>(r);
      s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", bx, y(v),
                       bar_w, y(0.0) - y(v), kColors[r % std::size(kColors)]);
      s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-size=\"9\">{:.4f}</text>\n",
                       bx + bar_w / 2, y(v) - 3, v);
    }
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", gx + 0.4 * group_w,
                     kHeight - kMargin + 16, escape(cats[c]));
  }
  for (std::size_t r = 0; r < vals.size(); ++r) {
    const double ly = kMargin + 14.0 * static_cast<double>(r);
    s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"10\" height=\"10\" fill=\"{}\"/>"
                     "<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n",
                     kMargin + 8, ly, kColors[r % std::size(kColors)], kMargin + 22, ly + 9, escape(in.series[r]));
  }
  s += "</svg>\n";
  return s;
}

std::string cosine_heatmap_svg(const HeatmapInput& in) {
  const std::size_t k = in.matrix.size();
  if (k == 0) throw DataError("nothing to plot");
  if (in.matrix.values.size() != k * k) throw DataError("cosine matrix is not square");
  const double label_w = 110.0;
  const double cell = std::clamp(360.0 / static_cast<double>(k), 24.0, 80.0);
  const double w = label_w + cell * static_cast<double>(k) + 24;
  const double h = 40 + label_w + cell * static_cast<double>(k) + 24;
  const double x0 = label_w, y0 = 40 + label_w;

  std::string s = open_svg(w, h, in.title);
  for (std::size_t j = 0; j < k; ++j) {
    const double cx = x0 + cell * (static_cast<double>(j) + 0.5);
    s += fmt::format("<text x=\"{0:.2f}\" y=\"{1:.2f}\" transform=\"rotate(-45 {0:.2f} {1:.2f})\">{2}</text>\n", cx,
                     y0 - 6, escape(in.matrix.set_ids[j]));
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double cy = y0 + cell * static_cast<double>(i);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", x0 - 6, cy + cell / 2 + 4,
                     escape(in.matrix.set_ids[i]));
    for (std::size_t j = 0; j < k; ++j) {
      const double v = in.matrix.at(i, j);
      // white at 0, dark red at +1, dark blue at -1
      const double t = std::clamp(std::abs(v), 0.0, 1.0);
      const int fade = static_cast<int>(std::lround(255.0 * (1.0 - t)));
      const std::string fill = v >= 0 ? fmt::format("#{:02x}{:02x}{:02x}", 255 - fade / 4, fade, fade)
                                      : fmt::format("#{:02x}{:02x}{:02x}", fade, fade, 255 - fade / 4);
      const double cx = x0 + cell * static_cast<double>(j);
      s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\" stroke=\"white\"/>\n",
                       cx, cy, cell, cell, fill);
      s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-size=\"10\" fill=\"{}\">{:.2f}</text>\n",
                       cx + cell / 2, cy + cell / 2 + 4, t > 0.6 ? "white" : "black", v);
    }
  }
  s += "</svg>\n";
  return s;
}

std::vector<std::filesystem::path> emit_plots(PlotKind kind, const PlotInput& input,
                                              const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  auto put = [&](const char* name, const std::string& bytes) {
    written.push_back(dir / name);
    atomic_write_file(written.back(), bytes);
  };
  switch (kind) {
    case PlotKind::pca_scatter: {
      const auto* in = std::get_if<ScatterInput>(&input);
      if (in == nullptr) throw SpecError("pca_scatter needs scatter input");
      const std::string svg = pca_scatter_svg(*in);  // validates before anything is written
      put("pca.csv", pca_csv(in->pca, in->labels));
      put("pca.svg", svg);
      break;
    }
    case PlotKind::ratio_bars: {
      const auto* in = std::get_if<RatioBarsInput>(&input);
      if (in == nullptr) throw SpecError("ratio_bars needs ratio input");
      put("ratio_bars.svg", ratio_bars_svg(*in));
      break;
    }
    case PlotKind::cosine_heatmap: {
      const auto* in = std::get_if<HeatmapInput>(&input);
      if (in == nullptr) throw SpecError("cosine_heatmap needs a cosine matrix");
      put("cosine_heatmap.svg", cosine_heatmap_svg(*in));
      break;
    }
  }
  return written;
}

}  // namespace prism
