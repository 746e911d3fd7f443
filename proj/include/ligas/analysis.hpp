#pragma once

// Sign statistics over sentence LIGAS, scatter exports and HTML heatmaps.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ligas/types.hpp"

namespace ligas::analysis {

enum class Outcome { CC, MC };

std::string_view to_string(Outcome outcome);
Outcome outcome(Label predicted, Label gold);

struct CategoryStats {
  Category category = Category::CIA;
  std::size_t c = 0, cc = 0, mc = 0;
  std::size_t cc_plus = 0, cc_minus = 0, mc_plus = 0, mc_minus = 0;
  // Empty when the denominator is zero.
  std::optional<double> cc_plus_pct;
  std::optional<double> mc_plus_pct;
};

struct SignRecord {
  Category category = Category::CIA;
  Outcome outcome = Outcome::CC;
  double sentence_ligas = 0.0;
};

// One row per category present, in CIA, RAA, SVA, SVO, WHE order. Positive
// means sentence_ligas > 0; exactly zero counts as non-positive.
std::vector<CategoryStats> sign_stats(std::span<const SignRecord> records);

// 100 * sum(MC+) / sum(MC); empty when there are no misclassified sentences.
std::optional<double> aggregate_mc_positive(std::span<const CategoryStats> stats);

// Two decimals, ties rounded half-to-even; empty optional renders as "".
std::string format_percent(std::optional<double> pct);

// Header: category,C,CC,MC,CCplus,CCminus,MCplus,MCminus,CCplus_pct,MCplus_pct
// preceded by `comment` lines (each written as "# ...") when given.
void write_stats_csv(std::ostream& out, std::span<const CategoryStats> stats,
                     std::span<const std::string> comments = {});

struct ScatterPoint {
  double prob = 0.0;
  double ligas = 0.0;
  Outcome outcome = Outcome::CC;
};

// Rows of the given outcome, in input order, under a "prob,ligas" header.
void write_scatter_csv(std::ostream& out, std::span<const ScatterPoint> points, Outcome which,
                       std::span<const std::string> comments = {});
// Standalone SVG: one <circle> per point of the given outcome.
std::string scatter_svg(std::span<const ScatterPoint> points, Outcome which,
                        const std::string& title, const std::string& comment = {});

struct HeatmapInput {
  std::string id;
  std::vector<std::string> words;
  std::vector<double> ligas;
  Label predicted = Label::LA;
  double prob = 0.0;
};

struct Rgb {
  int r = 255, g = 255, b = 255;
  bool operator==(const Rgb&) const = default;
};

// White → green for positive scores, white → red for negative, intensity
// |score| / max_abs (all white when max_abs is 0).
Rgb heat_color(double score, double max_abs);

// One <span> per word plus a legend row; inline styles only.
std::string heatmap_render(const HeatmapInput& sentence);
std::string heatmap_document(std::span<const HeatmapInput> sentences, const std::string& comment = {});

struct MagnitudeComparison {
  std::size_t la_count = 0, lua_count = 0;
  double la_mean_abs = 0.0, lua_mean_abs = 0.0;
  std::optional<double> ratio;  // lua_mean_abs / la_mean_abs
};

// Mean |sentence LIGAS| per gold label.
MagnitudeComparison compare_magnitudes(std::span<const Label> gold, std::span<const double> ligas);

std::string html_escape(std::string_view text);

}  // namespace ligas::analysis
