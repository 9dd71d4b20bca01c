#include "gusnet/figures.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <vector>

#include "gusnet/error.hpp"

namespace gusnet {

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

constexpr std::array<Rgb, 12> kPalette = {{{31, 119, 180},
                                          {255, 127, 14},
                                          {44, 160, 44},
                                          {214, 39, 40},
                                          {148, 103, 189},
                                          {140, 86, 75},
                                          {227, 119, 194},
                                          {127, 127, 127},
                                          {188, 189, 34},
                                          {23, 190, 207},
                                          {174, 199, 232},
                                          {255, 187, 120}}};

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string f3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w * h * 3), 255) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    auto* p = &px_[static_cast<std::size_t>((y * w_ + x) * 3)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  void rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) set(x, y, c);
    }
  }

  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void write(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w_);
    image.height = static_cast<png_uint_32>(h_);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, px_.data(), 0, nullptr)) {
      throw ConfigError("failed to write " + path.string() + ": " + image.message);
    }
  }

 private:
  int w_, h_;
  std::vector<std::uint8_t> px_;
};

}  // namespace

std::string pie_svg(const PieChart& chart) {
  const double total = chart.total();
  if (chart.slices.empty() || total <= 0) throw MetricError("pie chart has no data");
  const double cx = 200, cy = 220, r = 160;
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
      "viewBox=\"0 0 640 420\">\n<text x=\"200\" y=\"30\" text-anchor=\"middle\" "
      "font-family=\"sans-serif\" font-size=\"18\">" + escape_xml(chart.title) + "</text>\n";
  double start = -std::numbers::pi / 2;
  for (std::size_t i = 0; i < chart.slices.size(); ++i) {
    const auto& s = chart.slices[i];
    const std::string colour = hex(kPalette[i % kPalette.size()]);
    const double sweep = 2 * std::numbers::pi * s.value / total;
    if (chart.slices.size() == 1) {
      svg += "<circle cx=\"" + f3(cx) + "\" cy=\"" + f3(cy) + "\" r=\"" + f3(r) + "\" fill=\"" +
             colour + "\"/>\n";
    } else {
      const double end = start + sweep;
      svg += "<path d=\"M" + f3(cx) + "," + f3(cy) + " L" + f3(cx + r * std::cos(start)) + "," +
             f3(cy + r * std::sin(start)) + " A" + f3(r) + "," + f3(r) + " 0 " +
             (sweep > std::numbers::pi ? "1" : "0") + ",1 " + f3(cx + r * std::cos(end)) + "," +
             f3(cy + r * std::sin(end)) + " Z\" fill=\"" + colour + "\" stroke=\"white\"/>\n";
    }
    start += sweep;
    const double ly = 70 + 24.0 * static_cast<double>(i);
    svg += "<rect x=\"400\" y=\"" + f3(ly - 12) + "\" width=\"14\" height=\"14\" fill=\"" + colour +
           "\"/>\n<text x=\"420\" y=\"" + f3(ly) +
           "\" font-family=\"sans-serif\" font-size=\"13\">" + escape_xml(s.label) + " " +
           f3(s.value) + " (" + f3(s.percent) + "%)</text>\n";
  }
  return svg + "</svg>\n";
}

void write_pie_png(const std::filesystem::path& path, const PieChart& chart, int size) {
  const double total = chart.total();
  if (chart.slices.empty() || total <= 0) throw MetricError("pie chart has no data");
  std::vector<double> bounds;
  double acc = 0;
  for (const auto& s : chart.slices) bounds.push_back(acc += s.value / total);
  Canvas canvas(size, size);
  const double c = size / 2.0, r = size * 0.45;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x + 0.5 - c, dy = y + 0.5 - c;
      if (dx * dx + dy * dy > r * r) continue;
      // Clockwise from twelve o'clock, as in the SVG.
      double a = std::atan2(dy, dx) + std::numbers::pi / 2;
      if (a < 0) a += 2 * std::numbers::pi;
      const double frac = a / (2 * std::numbers::pi);
      const auto it = std::lower_bound(bounds.begin(), bounds.end(), frac);
      const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - bounds.begin()),
                                             bounds.size() - 1);
      canvas.set(x, y, kPalette[idx % kPalette.size()]);
    }
  }
  canvas.write(path);
}

std::string scatter_svg(const BabeComparison& cmp, const std::string& title) {
  const double x0 = 60, y0 = 360, w = 320, h = 300;
  auto px = [&](double x) { return x0 + w * x; };
  auto py = [&](double y) { return y0 - h * std::clamp(y, 0.0, 1.0); };
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"420\" height=\"420\" "
      "viewBox=\"0 0 420 420\">\n<text x=\"210\" y=\"30\" text-anchor=\"middle\" "
      "font-family=\"sans-serif\" font-size=\"16\">" + escape_xml(title) + "</text>\n";
  svg += "<line x1=\"60\" y1=\"360\" x2=\"380\" y2=\"360\" stroke=\"black\"/>\n"
         "<line x1=\"60\" y1=\"360\" x2=\"60\" y2=\"60\" stroke=\"black\"/>\n"
         "<text x=\"220\" y=\"395\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">normalized biased words</text>\n"
         "<text x=\"20\" y=\"210\" transform=\"rotate(-90 20 210)\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"12\">normalized entities (bin minimum)</text>\n";
  for (const auto& r : cmp.records) {
    svg += "<circle cx=\"" + f3(px(r.normalized_biased_words)) + "\" cy=\"" +
           f3(py(r.normalized_entities)) + "\" r=\"2\" fill=\"#bbbbbb\"/>\n";
  }
  for (const auto& p : cmp.points) {
    svg += "<circle cx=\"" + f3(px(p.center)) + "\" cy=\"" + f3(py(p.minimum)) +
           "\" r=\"5\" fill=\"#1f77b4\"/>\n";
  }
  const auto& t = cmp.trend;
  svg += "<line x1=\"" + f3(px(0)) + "\" y1=\"" + f3(py(t.intercept)) + "\" x2=\"" + f3(px(1)) +
         "\" y2=\"" + f3(py(t.slope + t.intercept)) + "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
  svg += "<text x=\"70\" y=\"80\" font-family=\"sans-serif\" font-size=\"12\">slope " +
         f3(t.slope) + ", intercept " + f3(t.intercept) + "</text>\n";
  return svg + "</svg>\n";
}

void write_scatter_png(const std::filesystem::path& path, const BabeComparison& cmp, int size) {
  Canvas canvas(size, size);
  const int m = size / 10, span = size - 2 * m;
  auto px = [&](double x) { return m + static_cast<int>(std::lround(span * std::clamp(x, 0.0, 1.0))); };
  auto py = [&](double y) {
    return size - m - static_cast<int>(std::lround(span * std::clamp(y, 0.0, 1.0)));
  };
  const Rgb black{0, 0, 0}, grey{170, 170, 170}, blue{31, 119, 180}, red{214, 39, 40};
  canvas.line(m, size - m, size - m, size - m, black);
  canvas.line(m, size - m, m, m, black);
  for (const auto& r : cmp.records) {
    const int x = px(r.normalized_biased_words), y = py(r.normalized_entities);
    canvas.rect(x - 1, y - 1, x + 1, y + 1, grey);
  }
  for (const auto& p : cmp.points) {
    const int x = px(p.center), y = py(p.minimum);
    canvas.rect(x - 3, y - 3, x + 3, y + 3, blue);
  }
  const auto& t = cmp.trend;
  canvas.line(px(0), py(t.intercept), px(1), py(t.slope + t.intercept), red);
  canvas.write(path);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

}  // namespace gusnet
