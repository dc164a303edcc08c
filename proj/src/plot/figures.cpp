#include "shortmr/plot/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "shortmr/errors.hpp"

namespace shortmr::plot {

namespace {

std::string fmt(double v, const char* spec = "%.3f") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

struct Panel {
  int x0, y0, w, h;  // plot area in pixels
  double lo, hi;     // value range mapped onto the y axis

  int ypix(double v) const {
    const double t = (v - lo) / (hi - lo);
    return y0 + h - 1 - static_cast<int>(std::lround(t * (h - 1)));
  }
};

void draw_axis(Canvas& canvas, const Panel& p, const std::string& title) {
  canvas.rect(p.x0, p.y0, p.w, p.h, kGray);
  for (double tick = 0.0; tick <= 1.0001; tick += 0.25) {
    const double v = p.lo + tick * (p.hi - p.lo);
    const int y = p.ypix(v);
    canvas.line(p.x0 - 3, y, p.x0, y, kBlack);
    const std::string label = fmt(v, "%.2f");
    canvas.text(p.x0 - 6 - Canvas::text_width(label), y - 3, label, kBlack);
  }
  canvas.text(p.x0 + (p.w - Canvas::text_width(title)) / 2, p.y0 - 14, title,
              kBlack);
}

// One baseline->biased line with annotations, centered at pixel column cx.
void draw_delta_item(Canvas& canvas, const Panel& p, int cx,
                     const std::string& label, std::optional<double> base,
                     std::optional<double> biased) {
  canvas.text(cx - Canvas::text_width(label) / 2, p.y0 + p.h + 8, label, kBlack);
  if (!base || !biased) {
    canvas.text(cx - Canvas::text_width("n/a") / 2, p.y0 + p.h / 2, "n/a", kGray);
    return;
  }
  const int yb = p.ypix(*base);
  const int yi = p.ypix(*biased);
  const double delta = *biased - *base;
  const Rgb col = delta < 0 ? kRed : kGreen;
  canvas.fill_rect(cx - 3, yb - 1, 7, 3, kBlue);
  canvas.line(cx, yb, cx, yi, col);
  canvas.fill_rect(cx - 2, yi - 2, 5, 5, col);
  const std::string btxt = fmt(*base);
  canvas.text(cx - Canvas::text_width(btxt) / 2, p.y0 - 0, btxt, kBlue);
  const std::string dtxt = (delta >= 0 ? "+" : "") + fmt(delta);
  canvas.text(cx - Canvas::text_width(dtxt) / 2, p.y0 + p.h + 20, dtxt, col);
}

std::string group_name(Attribute attr, int g) {
  return attr == Attribute::sex ? to_string(static_cast<Sex>(g))
                                : to_string(static_cast<Race>(g));
}

}  // namespace

void write_delta_figure(const std::filesystem::path& path,
                        const EvalReport& baseline, const EvalReport& biased) {
  Canvas canvas(720, 320);
  canvas.text(16, 8, "baseline vs biased (marker = biased endpoint)", kBlack);

  Panel f1{70, 50, 260, 200, 0.0, 1.0};
  draw_axis(canvas, f1, "class F1");
  draw_delta_item(canvas, f1, f1.x0 + 70, "CN", baseline.f1[0], biased.f1[0]);
  draw_delta_item(canvas, f1, f1.x0 + 180, "AD", baseline.f1[1], biased.f1[1]);

  Panel acc{430, 50, 260, 200, 0.0, 1.0};
  draw_axis(canvas, acc, "group accuracy");
  draw_delta_item(canvas, acc, acc.x0 + 70, group_name(baseline.attribute, 0),
                  baseline.group_accuracy[0], biased.group_accuracy[0]);
  draw_delta_item(canvas, acc, acc.x0 + 180, group_name(baseline.attribute, 1),
                  baseline.group_accuracy[1], biased.group_accuracy[1]);

  canvas.save_png(path);
}

void write_rank_scatter(const std::filesystem::path& path,
                        const RankReport& report,
                        const std::vector<std::string>& region_names) {
  const std::size_t omega = report.b.size();
  Canvas canvas(560, 560);

  double lo = 0.0, hi = 0.0;
  for (std::size_t j = 0; j < omega; ++j) {
    lo = std::min({lo, report.b[j], report.p[j]});
    hi = std::max({hi, report.b[j], report.p[j]});
  }
  const double pad = std::max(0.5, (hi - lo) * 0.08);
  lo -= pad;
  hi += pad;

  Panel panel{70, 60, 420, 420, lo, hi};
  auto xpix = [&](double v) {
    const double t = (v - lo) / (hi - lo);
    return panel.x0 + static_cast<int>(std::lround(t * (panel.w - 1)));
  };
  draw_axis(canvas, panel, "rank differences: B (x) vs P (y)");
  // zero axes
  canvas.line(xpix(0.0), panel.y0, xpix(0.0), panel.y0 + panel.h - 1, kLightGray);
  canvas.line(panel.x0, panel.ypix(0.0), panel.x0 + panel.w - 1, panel.ypix(0.0),
              kLightGray);

  std::vector<bool> is_top(omega, false);
  for (int id : report.top_regions) {
    if (id >= 1 && static_cast<std::size_t>(id) <= omega) {
      is_top[static_cast<std::size_t>(id - 1)] = true;
    }
  }
  for (std::size_t j = 0; j < omega; ++j) {
    const int x = xpix(report.b[j]);
    const int y = panel.ypix(report.p[j]);
    if (is_top[j]) {
      canvas.fill_rect(x - 3, y - 3, 7, 7, kRed);
      const std::string label =
          j < region_names.size() ? region_names[j] : std::to_string(j + 1);
      canvas.text(x + 6, y - 3, label, kRed);
    } else {
      canvas.fill_rect(x - 2, y - 2, 5, 5, kBlue);
    }
  }

  std::string note;
  if (report.correlation.defined) {
    note = "Spearman rho = " + fmt(report.correlation.rho) +
           "  p_param = " + fmt(report.correlation.p_value, "%.4f") +
           "  p_perm = " + fmt(report.permutation.p_value, "%.4f");
  } else {
    note = "undefined correlation (constant difference vector); p_perm = " +
           fmt(report.permutation.p_value, "%.4f");
  }
  canvas.text(70, 520, note, kBlack);
  canvas.text(70, 534, "red = top shared regions (most negative B+P)", kRed);
  canvas.save_png(path);
}

void write_region_overlay(const std::filesystem::path& path, const Atlas& atlas,
                          const Volume& background, const RankReport& report) {
  if (background.shape != atlas.shape) {
    throw ValidationError("region overlay: background shape != atlas shape");
  }
  const auto omega = static_cast<std::size_t>(atlas.omega);

  // importance shade per region: rank 0 (most negative B+P) darkest
  std::vector<int> shade(omega, -1);
  for (std::size_t i = 0; i < report.top_regions.size(); ++i) {
    const int id = report.top_regions[i];
    if (id >= 1 && static_cast<std::size_t>(id) <= omega) {
      shade[static_cast<std::size_t>(id - 1)] = static_cast<int>(i);
    }
  }

  float bg_lo = background.data.empty() ? 0.0f : background.data[0];
  float bg_hi = bg_lo;
  for (float v : background.data) {
    bg_lo = std::min(bg_lo, v);
    bg_hi = std::max(bg_hi, v);
  }
  const float bg_range = bg_hi > bg_lo ? bg_hi - bg_lo : 1.0f;

  const int zoom = std::max<int>(1, 128 / static_cast<int>(atlas.shape[0]));
  const int sw = static_cast<int>(atlas.shape[2]) * zoom;
  const int sh1 = static_cast<int>(atlas.shape[1]) * zoom;  // axial: y rows
  const int sh2 = static_cast<int>(atlas.shape[0]) * zoom;  // coronal: z rows
  const int margin = 24;
  const int legend_h = 30 + 14 * static_cast<int>(report.top_regions.size());
  Canvas canvas(margin * 4 + sw * 3, margin * 2 + std::max(sh1, sh2) + legend_h + 20);

  auto draw_slice = [&](int ox, int oy, const std::string& name, int axis) {
    canvas.text(ox, oy - 12, name, kBlack);
    Shape3 dims = atlas.shape;
    const std::int64_t mid = dims[static_cast<std::size_t>(axis)] / 2;
    // rows/cols of the slice plane
    const int rows = static_cast<int>(axis == 0 ? dims[1] : dims[0]);
    const int cols = static_cast<int>(axis == 2 ? dims[1] : dims[2]);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        std::int64_t z, y, x;
        if (axis == 0) {
          z = mid, y = r, x = c;
        } else if (axis == 1) {
          z = r, y = mid, x = c;
        } else {
          z = r, y = c, x = mid;
        }
        const float base = (background.at(z, y, x) - bg_lo) / bg_range;
        auto level = static_cast<std::uint8_t>(
            std::clamp(base, 0.0f, 1.0f) * 255.0f);
        Rgb col{level, level, level};
        const std::int32_t label = atlas.at(z, y, x);
        if (label >= 1 && shade[static_cast<std::size_t>(label - 1)] >= 0) {
          const int s = shade[static_cast<std::size_t>(label - 1)];
          // darker red for higher importance
          const auto k = static_cast<float>(s) /
                         std::max<std::size_t>(1, report.top_regions.size());
          const auto rr = static_cast<std::uint8_t>(150 + 70 * k);
          const auto gg = static_cast<std::uint8_t>(40 + 110 * k);
          col = Rgb{rr, gg, gg};
        }
        canvas.fill_rect(ox + c * zoom, oy + r * zoom, zoom, zoom, col);
      }
    }
  };

  draw_slice(margin, margin + 12, "axial (mid z)", 0);
  draw_slice(margin * 2 + sw, margin + 12, "coronal (mid y)", 1);
  draw_slice(margin * 3 + sw * 2, margin + 12, "sagittal (mid x)", 2);

  int ly = margin + 12 + std::max(sh1, sh2) + 16;
  canvas.text(margin, ly, "top shared regions by B+P (darker = more important):",
              kBlack);
  ly += 14;
  for (std::size_t i = 0; i < report.top_regions.size(); ++i) {
    const int id = report.top_regions[i];
    const auto k = static_cast<float>(i) /
                   std::max<std::size_t>(1, report.top_regions.size());
    canvas.fill_rect(margin, ly, 10, 10,
                     Rgb{static_cast<std::uint8_t>(150 + 70 * k),
                         static_cast<std::uint8_t>(40 + 110 * k),
                         static_cast<std::uint8_t>(40 + 110 * k)});
    std::string name = id >= 1 && static_cast<std::size_t>(id) <= omega &&
                               !atlas.region_names.empty()
                           ? atlas.region_names[static_cast<std::size_t>(id - 1)]
                           : ("region_" + std::to_string(id));
    const double bp = report.b[static_cast<std::size_t>(id - 1)] +
                      report.p[static_cast<std::size_t>(id - 1)];
    canvas.text(margin + 16, ly + 1, name + "  (B+P = " + fmt(bp) + ")", kBlack);
    ly += 14;
  }
  canvas.save_png(path);
}

}  // namespace shortmr::plot
