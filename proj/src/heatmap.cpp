#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "mdcompat/compat.hpp"
#include "mdcompat/error.hpp"

namespace mdcompat {

namespace {

constexpr int kCellW = 118;
constexpr int kCellH = 34;
constexpr int kLeft = 120;
constexpr int kTop = 120;

std::string pick_scenario(const BiasTable& table, const std::string& scenario_id) {
  if (table.cells.empty()) throw ArgumentError("cannot draw a heatmap of an empty bias table");
  const auto ids = table.scenario_ids();
  if (!scenario_id.empty()) {
    if (std::find(ids.begin(), ids.end(), scenario_id) == ids.end()) {
      throw ArgumentError("bias table has no scenario '" + scenario_id + "'");
    }
    return scenario_id;
  }
  if (ids.size() != 1) {
    throw ArgumentError("bias table holds " + std::to_string(ids.size()) + " scenarios; choose one");
  }
  return ids.front();
}

// White at zero, red for positive bias, blue for negative.
std::string colour(double v, double scale) {
  if (!std::isfinite(v)) return "#d9d9d9";
  const double t = std::clamp(v / scale, -1.0, 1.0);
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(t))));
  char buf[8];
  if (t >= 0) {
    std::snprintf(buf, sizeof(buf), "#ff%02x%02x", fade, fade);
  } else {
    std::snprintf(buf, sizeof(buf), "#%02x%02xff", fade, fade);
  }
  return buf;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Layout {
  std::vector<DevelopmentMethod> devs;
  std::vector<ValidationHandling> handlings;
};

Layout layout_for(const BiasTable& table, const std::string& id) {
  std::set<DevelopmentMethod> devs;
  std::set<ValidationHandling> hs;
  for (const auto& [k, v] : table.cells) {
    if (k.scenario_id != id) continue;
    devs.insert(k.dev);
    hs.insert(k.handling);
  }
  return {{devs.begin(), devs.end()}, {hs.begin(), hs.end()}};
}

int width_of(const Layout& l) { return kLeft + kCellW * static_cast<int>(l.handlings.size()) + 20; }
int height_of(const Layout& l) { return kTop + kCellH * static_cast<int>(l.devs.size()) + 20; }

std::string body(const BiasTable& table, Metric metric, const std::string& id, const Layout& l) {
  double scale = 0.0;
  for (const auto& [k, v] : table.cells) {
    if (k.scenario_id == id && k.metric == metric && std::isfinite(v.mean_bias)) {
      scale = std::max(scale, std::abs(v.mean_bias));
    }
  }
  if (scale == 0.0) scale = 1.0;

  std::string out;
  out += "<text x=\"" + std::to_string(kLeft) + "\" y=\"20\" font-size=\"14\" font-weight=\"bold\">" + table.label +
         " bias: " + to_string(metric) + "</text>\n";
  out += "<text x=\"" + std::to_string(kLeft) + "\" y=\"38\" font-size=\"10\">scenario " + id +
         "; colour scale ±" + fmt(scale) + "</text>\n";
  for (std::size_t j = 0; j < l.handlings.size(); ++j) {
    const int x = kLeft + kCellW * static_cast<int>(j) + kCellW / 2;
    out += "<text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(kTop - 8) +
           "\" font-size=\"10\" text-anchor=\"start\" transform=\"rotate(-35 " + std::to_string(x) + " " +
           std::to_string(kTop - 8) + ")\">" + l.handlings[j].label() + "</text>\n";
  }
  for (std::size_t i = 0; i < l.devs.size(); ++i) {
    const int y = kTop + kCellH * static_cast<int>(i);
    out += "<text x=\"" + std::to_string(kLeft - 6) + "\" y=\"" + std::to_string(y + kCellH / 2 + 4) +
           "\" font-size=\"10\" text-anchor=\"end\">" + to_string(l.devs[i]) + "</text>\n";
    for (std::size_t j = 0; j < l.handlings.size(); ++j) {
      const int x = kLeft + kCellW * static_cast<int>(j);
      const BiasCell* cell = table.find(id, l.devs[i], l.handlings[j], metric);
      if (!cell) {
        out += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
               std::to_string(kCellW) + "\" height=\"" + std::to_string(kCellH) +
               "\" fill=\"#f2f2f2\" stroke=\"#999999\" class=\"absent\"/>\n";
        continue;
      }
      out += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
             std::to_string(kCellW) + "\" height=\"" + std::to_string(kCellH) + "\" fill=\"" +
             colour(cell->mean_bias, scale) + "\" stroke=\"#999999\" class=\"cell\"/>\n";
      out += "<text x=\"" + std::to_string(x + kCellW / 2) + "\" y=\"" + std::to_string(y + kCellH / 2 + 4) +
             "\" font-size=\"10\" text-anchor=\"middle\">" + fmt(cell->mean_bias) + " ± " + fmt(cell->mc_se) +
             "</text>\n";
    }
  }
  return out;
}

std::string open_svg(int w, int h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(w) + "\" height=\"" + std::to_string(h) + "\" font-family=\"sans-serif\">\n";
}

}  // namespace

std::string render_heatmap_svg(const BiasTable& table, Metric metric, const std::string& scenario_id) {
  const std::string id = pick_scenario(table, scenario_id);
  const Layout l = layout_for(table, id);
  return open_svg(width_of(l), height_of(l)) + body(table, metric, id, l) + "</svg>\n";
}

std::string render_panel_svg(const BiasTable& table, const std::string& scenario_id) {
  const std::string id = pick_scenario(table, scenario_id);
  const Layout l = layout_for(table, id);
  const int w = width_of(l);
  const int h = height_of(l);
  std::string out = open_svg(2 * w, 2 * h);
  for (std::size_t k = 0; k < kAllMetrics.size(); ++k) {
    const int dx = static_cast<int>(k % 2) * w;
    const int dy = static_cast<int>(k / 2) * h;
    out += "<g transform=\"translate(" + std::to_string(dx) + "," + std::to_string(dy) + ")\">\n";
    out += body(table, kAllMetrics[k], id, l);
    out += "</g>\n";
  }
  return out + "</svg>\n";
}

}  // namespace mdcompat
