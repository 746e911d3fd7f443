#include "ligas/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "ligas/errors.hpp"
#include "ligas/format.hpp"

namespace ligas::analysis {

std::string_view to_string(Outcome o) { return o == Outcome::CC ? "CC" : "MC"; }

Outcome outcome(Label predicted, Label gold) { return predicted == gold ? Outcome::CC : Outcome::MC; }

std::vector<CategoryStats> sign_stats(std::span<const SignRecord> records) {
  std::map<Category, CategoryStats> by_cat;
  for (const auto& r : records) {
    auto& s = by_cat[r.category];
    s.category = r.category;
    const bool positive = r.sentence_ligas > 0.0;
    if (r.outcome == Outcome::CC) {
      (positive ? s.cc_plus : s.cc_minus) += 1;
    } else {
      (positive ? s.mc_plus : s.mc_minus) += 1;
    }
  }
  std::vector<CategoryStats> out;
  for (Category cat : kAllCategories) {
    auto it = by_cat.find(cat);
    if (it == by_cat.end()) continue;
    CategoryStats s = it->second;
    s.cc = s.cc_plus + s.cc_minus;
    s.mc = s.mc_plus + s.mc_minus;
    s.c = s.cc + s.mc;
    if (s.cc > 0) s.cc_plus_pct = 100.0 * static_cast<double>(s.cc_plus) / static_cast<double>(s.cc);
    if (s.mc > 0) s.mc_plus_pct = 100.0 * static_cast<double>(s.mc_plus) / static_cast<double>(s.mc);
    out.push_back(s);
  }
  return out;
}

std::optional<double> aggregate_mc_positive(std::span<const CategoryStats> stats) {
  std::size_t plus = 0, total = 0;
  for (const auto& s : stats) {
    plus += s.mc_plus;
    total += s.mc;
  }
  if (total == 0) return std::nullopt;
  return 100.0 * static_cast<double>(plus) / static_cast<double>(total);
}

std::string format_percent(std::optional<double> pct) {
  if (!pct) return "";
  // nearbyint honours the default round-to-nearest-even mode.
  const double hundredths = std::nearbyint(*pct * 100.0);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", hundredths / 100.0);
  return buf;
}

void write_stats_csv(std::ostream& out, std::span<const CategoryStats> stats,
                     std::span<const std::string> comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "category,C,CC,MC,CCplus,CCminus,MCplus,MCminus,CCplus_pct,MCplus_pct\n";
  for (const auto& s : stats) {
    out << to_string(s.category) << ',' << s.c << ',' << s.cc << ',' << s.mc << ',' << s.cc_plus
        << ',' << s.cc_minus << ',' << s.mc_plus << ',' << s.mc_minus << ','
        << format_percent(s.cc_plus_pct) << ',' << format_percent(s.mc_plus_pct) << '\n';
  }
}

// ---- scatter --------------------------------------------------------------------

void write_scatter_csv(std::ostream& out, std::span<const ScatterPoint> points, Outcome which,
                       std::span<const std::string> comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "prob,ligas\n";
  for (const auto& p : points) {
    if (p.outcome != which) continue;
    out << format_double(p.prob) << ',' << format_double(p.ligas) << '\n';
  }
}

std::string scatter_svg(std::span<const ScatterPoint> points, Outcome which, const std::string& title,
                        const std::string& comment) {
  constexpr double kWidth = 480, kHeight = 360, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& p : points) {
    if (p.outcome != which) continue;
    lo = any ? std::min(lo, p.ligas) : p.ligas;
    hi = any ? std::max(hi, p.ligas) : p.ligas;
    any = true;
  }
  if (!any || hi == lo) {
    lo -= 1.0;
    hi += 1.0;
  }
  auto sx = [&](double prob) { return kLeft + std::clamp(prob, 0.0, 1.0) * plot_w; };
  auto sy = [&](double v) { return kTop + (hi - v) / (hi - lo) * plot_h; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  if (!comment.empty()) os << "<!-- " << comment << " -->\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"14\">"
     << html_escape(title) << "</text>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
     << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
     << kTop + plot_h << "\" stroke=\"black\"/>\n";
  if (lo < 0.0 && hi > 0.0) {
    os << "<line x1=\"" << kLeft << "\" y1=\"" << format_fixed(sy(0.0), 2) << "\" x2=\""
       << kLeft + plot_w << "\" y2=\"" << format_fixed(sy(0.0), 2)
       << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  }
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">prediction "
        "probability</text>\n";
  os << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 16 "
     << kTop + plot_h / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">sentence "
        "LIGAS</text>\n";
  os << "<text x=\"" << kLeft - 4 << "\" y=\"" << kTop + 4
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << format_fixed(hi, 3)
     << "</text>\n";
  os << "<text x=\"" << kLeft - 4 << "\" y=\"" << kTop + plot_h
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << format_fixed(lo, 3)
     << "</text>\n";
  const char* color = which == Outcome::CC ? "#1f77b4" : "#d62728";
  for (const auto& p : points) {
    if (p.outcome != which) continue;
    os << "<circle cx=\"" << format_fixed(sx(p.prob), 2) << "\" cy=\"" << format_fixed(sy(p.ligas), 2)
       << "\" r=\"3\" fill=\"" << color << "\" fill-opacity=\"0.7\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---- heatmap --------------------------------------------------------------------

std::string html_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

Rgb heat_color(double score, double max_abs) {
  if (!(max_abs > 0.0) || score == 0.0) return {};
  const double t = std::clamp(std::abs(score) / max_abs, 0.0, 1.0);
  auto lerp = [t](int from, int to) {
    return static_cast<int>(std::lround(from + (to - from) * t));
  };
  // Full intensity: green (0,170,0) for positive, red (220,0,0) for negative.
  if (score > 0.0) return {lerp(255, 0), lerp(255, 170), lerp(255, 0)};
  return {lerp(255, 220), lerp(255, 0), lerp(255, 0)};
}

std::string heatmap_render(const HeatmapInput& s) {
  double max_abs = 0.0;
  for (double v : s.ligas) max_abs = std::max(max_abs, std::abs(v));
  std::ostringstream os;
  os << "<div style=\"margin:8px 0;font-family:sans-serif\">\n";
  os << "<div style=\"font-size:12px;color:#444\">" << html_escape(s.id)
     << " predicted=" << to_string(s.predicted) << " prob=" << format_fixed(s.prob, 4) << "</div>\n";
  os << "<div>";
  for (std::size_t i = 0; i < s.words.size(); ++i) {
    const double v = i < s.ligas.size() ? s.ligas[i] : 0.0;
    const Rgb c = heat_color(v, max_abs);
    os << "<span style=\"background-color:rgb(" << c.r << ',' << c.g << ',' << c.b
       << ");padding:2px 4px;margin:1px;border-radius:3px\" title=\"ligas=" << format_double(v)
       << "\">" << html_escape(s.words[i]) << "</span>";
    if (i + 1 < s.words.size()) os << ' ';
  }
  os << "</div>\n</div>\n";
  return os.str();
}

std::string heatmap_document(std::span<const HeatmapInput> sentences, const std::string& comment) {
  std::ostringstream os;
  os << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>LIGAS heatmaps</title>\n";
  if (!comment.empty()) os << "<!-- " << comment << " -->\n";
  os << "</head>\n<body style=\"font-family:sans-serif\">\n";
  os << "<div style=\"font-size:12px;margin-bottom:8px\">"
        "<span style=\"background-color:rgb(0,170,0);padding:2px 4px\">positive</span> "
        "contributes toward the predicted class, "
        "<span style=\"background-color:rgb(220,0,0);padding:2px 4px\">negative</span> against it; "
        "intensity is relative to the sentence's largest |LIGAS|.</div>\n";
  for (const auto& s : sentences) os << heatmap_render(s);
  os << "</body>\n</html>\n";
  return os.str();
}

MagnitudeComparison compare_magnitudes(std::span<const Label> gold, std::span<const double> ligas) {
  if (gold.size() != ligas.size()) throw DataError("compare_magnitudes: size mismatch");
  MagnitudeComparison m;
  double la = 0.0, lua = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == Label::LA) {
      la += std::abs(ligas[i]);
      ++m.la_count;
    } else {
      lua += std::abs(ligas[i]);
      ++m.lua_count;
    }
  }
  if (m.la_count) m.la_mean_abs = la / static_cast<double>(m.la_count);
  if (m.lua_count) m.lua_mean_abs = lua / static_cast<double>(m.lua_count);
  if (m.la_count && m.lua_count && m.la_mean_abs > 0.0) m.ratio = m.lua_mean_abs / m.la_mean_abs;
  return m;
}

}  // namespace ligas::analysis
