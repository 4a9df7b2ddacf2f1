#pragma once

// Reference numbers used as fixtures. Domain order everywhere:
// animals, cities, companies, elements, facts, inventions.

#include <array>
#include <string_view>

namespace fixtures {

inline constexpr std::array<std::string_view, 6> kDomains = {"animals", "cities", "companies",
                                                             "elements", "facts", "inventions"};

// Variance ratio per domain without a prompt and with Prompt 1.
inline constexpr std::array<double, 6> kRatioBefore = {0.0598, 0.0928, 0.0344, 0.0650, 0.0937, 0.0891};
inline constexpr std::array<double, 6> kRatioAfterP1 = {0.1396, 0.2123, 0.1360, 0.1484, 0.1771, 0.1227};
// With the selected template (T10).
inline constexpr std::array<double, 6> kRatioAfterT10 = {0.1536, 0.2674, 0.1576, 0.0743, 0.1520, 0.1027};

inline constexpr double kMeanBefore = 0.0725;
inline constexpr double kMeanAfterP1 = 0.1560;
inline constexpr double kMeanAfterT10 = 0.1513;

// Mean ratio per candidate template T1..T10, then the bare statement.
inline constexpr std::array<double, 11> kTemplateRatio = {0.1093, 0.1312, 0.1291, 0.1407, 0.0875, 0.1165,
                                                          0.1041, 0.1265, 0.1228, 0.1513, 0.0725};
// Downstream detector accuracy for the same eleven conditions.
inline constexpr std::array<double, 11> kTemplateAccuracy = {0.7217, 0.7678, 0.7297, 0.7398, 0.6997, 0.7749,
                                                             0.6931, 0.7162, 0.7003, 0.7524, 0.5572};
inline constexpr double kPearsonR = 0.7708;
inline constexpr double kPearsonP = 0.0055;

// Cosine similarity between truth directions, no prompt / with Prompt 1.
inline constexpr std::array<std::array<double, 6>, 6> kCosineBefore = {{
    {1.0000, 0.4368, 0.4668, 0.5498, 0.6950, 0.3786},
    {0.4368, 1.0000, 0.4122, 0.3300, 0.4707, 0.2520},
    {0.4668, 0.4122, 1.0000, 0.4302, 0.5691, 0.4102},
    {0.5498, 0.3300, 0.4302, 1.0000, 0.6258, 0.3301},
    {0.6950, 0.4707, 0.5691, 0.6258, 1.0000, 0.4757},
    {0.3786, 0.2520, 0.4102, 0.3301, 0.4757, 1.0000},
}};
inline constexpr std::array<std::array<double, 6>, 6> kCosineAfter = {{
    {1.0000, 0.8037, 0.7589, 0.7284, 0.8345, 0.8333},
    {0.8037, 1.0000, 0.8349, 0.7253, 0.7274, 0.8540},
    {0.7589, 0.8349, 1.0000, 0.7717, 0.7255, 0.8210},
    {0.7284, 0.7253, 0.7717, 1.0000, 0.8175, 0.8071},
    {0.8345, 0.7274, 0.7255, 0.8175, 1.0000, 0.7950},
    {0.8333, 0.8540, 0.8210, 0.8071, 0.7950, 1.0000},
}};
inline constexpr std::array<double, 6> kCosineAverageBefore = {0.5878, 0.4836, 0.5481, 0.5443, 0.6394, 0.4744};
inline constexpr std::array<double, 6> kCosineAverageAfter = {0.8265, 0.8242, 0.8187, 0.8083, 0.8167, 0.8517};

}  // namespace fixtures
