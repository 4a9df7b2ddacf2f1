#pragma once

// Self-contained SVG renderings (no scripts, fonts or external assets) and
// the pca.csv table. Output bytes depend only on the inputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "prism/geometry.hpp"

namespace prism {

enum class PlotKind { pca_scatter, ratio_bars, cosine_heatmap };

std::string_view to_string(PlotKind kind);
PlotKind plot_kind_from_string(std::string_view s);

struct ScatterInput {
  Pca2Result pca;
  std::vector<std::uint8_t> labels;
  std::optional<LogisticBoundary> boundary;  // drawn dashed
  std::string title;
};

// Grouped bars: one group per category, one bar per series.
struct RatioBarsInput {
  std::vector<std::string> categories;
  std::vector<std::string> series;              // e.g. {"Before", "After"}
  std::vector<std::vector<double>> values;      // series x categories
  bool average_group = true;                    // appends an "Average" group
  std::string title;
};

struct HeatmapInput {
  CosineMatrix matrix;
  std::string title;
};

using PlotInput = std::variant<ScatterInput, RatioBarsInput, HeatmapInput>;

std::string pca_csv(const Pca2Result& pca, std::span<const std::uint8_t> labels);
std::string pca_scatter_svg(const ScatterInput& in);
std::string ratio_bars_svg(const RatioBarsInput& in);
std::string cosine_heatmap_svg(const HeatmapInput& in);

// pca_scatter writes pca.csv and pca.svg; the others write ratio_bars.svg or
// cosine_heatmap.svg. Empty inputs and a kind that does not match the input
// are errors.
std::vector<std::filesystem::path> emit_plots(PlotKind kind, const PlotInput& input,
                                              const std::filesystem::path& dir);

}  // namespace prism
