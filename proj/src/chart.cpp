#include "repeaterlab/chart.h"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <ostream>
#include <utility>

#include "repeaterlab/errors.h"
#include "repeaterlab/experiments.h"

namespace repeaterlab {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 460.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 30.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 60.0;

struct Point {
  double x;
  double y;
  std::string series;
};

struct Range {
  double lo;
  double hi;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  const double nice = f <= 1.0 ? 1.0 : f <= 2.0 ? 2.0 : f <= 5.0 ? 5.0 : 10.0;
  return nice * mag;
}

/// Pads a degenerate range and snaps both ends to tick multiples.
Range nice_range(double lo, double hi) {
  if (hi - lo < 1e-12) {
    const double pad = std::max(1.0, std::fabs(lo) * 0.1);
    lo -= pad;
    hi += pad;
  }
  const double step = nice_step(hi - lo, 5);
  return {std::floor(lo / step) * step, std::ceil(hi / step) * step};
}

class Canvas {
 public:
  Canvas(Range x, Range y) : x_(x), y_(y) {}

  double px(double x) const {
    return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom);
  }

  void axes(std::ostream& out, const std::string& title, const std::string& xlabel,
            const std::string& ylabel) const {
    out << "<text class=\"title\" x=\"" << num(kWidth / 2) << "\" y=\"28\" text-anchor=\"middle\""
        << " font-size=\"16\">" << title << "</text>\n";
    const double x0 = px(x_.lo);
    const double x1 = px(x_.hi);
    const double y0 = py(y_.lo);
    const double y1 = py(y_.hi);
    out << "<line class=\"axis\" x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\""
        << num(x1) << "\" y2=\"" << num(y0) << "\" stroke=\"black\"/>\n";
    out << "<line class=\"axis\" x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\""
        << num(x0) << "\" y2=\"" << num(y1) << "\" stroke=\"black\"/>\n";
    const double xs = nice_step(x_.hi - x_.lo, 5);
    for (double t = x_.lo; t <= x_.hi + xs * 1e-9; t += xs) {
      out << "<text class=\"tick\" x=\"" << num(px(t)) << "\" y=\"" << num(y0 + 18)
          << "\" text-anchor=\"middle\" font-size=\"11\">" << label(t) << "</text>\n";
    }
    const double ys = nice_step(y_.hi - y_.lo, 5);
    for (double t = y_.lo; t <= y_.hi + ys * 1e-9; t += ys) {
      out << "<text class=\"tick\" x=\"" << num(x0 - 8) << "\" y=\"" << num(py(t) + 4)
          << "\" text-anchor=\"end\" font-size=\"11\">" << label(t) << "</text>\n";
    }
    out << "<text class=\"xlabel\" x=\"" << num((x0 + x1) / 2) << "\" y=\""
        << num(kHeight - 16) << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel
        << "</text>\n";
    out << "<text class=\"ylabel\" x=\"20\" y=\"" << num((y0 + y1) / 2)
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 20 "
        << num((y0 + y1) / 2) << ")\">" << ylabel << "</text>\n";
  }

  void points(std::ostream& out, const std::vector<Point>& pts) const {
    for (const Point& p : pts) {
      const char* color = p.series == "odd" ? "#d95f02" : "#1b9e77";
      out << "<circle class=\"point " << p.series << "\" cx=\"" << num(px(p.x)) << "\" cy=\""
          << num(py(p.y)) << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    }
  }

  const Range& x() const { return x_; }

 private:
  Range x_;
  Range y_;
};

Range span_of(const std::vector<Point>& pts, double Point::*field) {
  double lo = pts.front().*field;
  double hi = lo;
  for (const Point& p : pts) {
    lo = std::min(lo, p.*field);
    hi = std::max(hi, p.*field);
  }
  return {lo, hi};
}

void legend(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& entries) {
  double y = kTop;
  for (const auto& [name, color] : entries) {
    out << "<circle cx=\"" << num(kWidth - 120) << "\" cy=\"" << num(y) << "\" r=\"4\" fill=\""
        << color << "\"/>\n";
    out << "<text x=\"" << num(kWidth - 110) << "\" y=\"" << num(y + 4)
        << "\" font-size=\"11\">" << name << "</text>\n";
    y += 16;
  }
}

}  // namespace

const char* to_string(ChartKind kind) {
  switch (kind) {
    case ChartKind::kRateVsNodes:
      return "rate_vs_nodes";
    case ChartKind::kFidelityVsDistance:
      return "fidelity_vs_distance";
    case ChartKind::kMinRepeatersVsDistance:
      return "min_repeaters_vs_distance";
  }
  return "?";
}

ChartKind chart_kind_from_string(const std::string& name) {
  for (ChartKind k : {ChartKind::kRateVsNodes, ChartKind::kFidelityVsDistance,
                      ChartKind::kMinRepeatersVsDistance}) {
    if (name == to_string(k)) {
      return k;
    }
  }
  throw ConfigError("unknown chart kind \"" + name + "\"");
}

void render_chart(const std::vector<ResultRow>& rows, ChartKind kind, std::ostream& out) {
  std::vector<Point> pts;
  for (const ResultRow& r : rows) {
    switch (kind) {
      case ChartKind::kRateVsNodes:
        pts.push_back({static_cast<double>(r.router_count), static_cast<double>(r.e_count),
                       r.parity == "odd" ? "odd" : "even"});
        break;
      case ChartKind::kFidelityVsDistance:
        if (r.mean_f_e2e) {
          pts.push_back({r.total_distance_km, *r.mean_f_e2e, "fidelity"});
        }
        break;
      case ChartKind::kMinRepeatersVsDistance:
        if (r.e_count > 0 && r.router_count >= 2) {
          pts.push_back(
              {r.total_distance_km, static_cast<double>(r.router_count - 2), "repeaters"});
        }
        break;
    }
  }
  if (pts.empty()) {
    throw DomainError(std::string("no plottable rows for chart ") + to_string(kind));
  }

  const Range xr = nice_range(span_of(pts, &Point::x).lo, span_of(pts, &Point::x).hi);
  Range yr{0.0, 1.0};
  std::string title;
  std::string xlabel;
  std::string ylabel;
  switch (kind) {
    case ChartKind::kRateVsNodes: {
      const Range s = span_of(pts, &Point::y);
      yr = nice_range(std::min(0.0, s.lo), s.hi);
      title = "Successful end-to-end pairs vs router count";
      xlabel = "routers";
      ylabel = "E_count";
      break;
    }
    case ChartKind::kFidelityVsDistance:
      yr = {0.25, 1.0};
      title = "Mean end-to-end fidelity vs distance";
      xlabel = "total distance (km)";
      ylabel = "mean F_e2e";
      break;
    case ChartKind::kMinRepeatersVsDistance: {
      const Range s = span_of(pts, &Point::y);
      yr = nice_range(std::min(0.0, s.lo), s.hi);
      title = "Minimum repeaters vs distance";
      xlabel = "total distance (km)";
      ylabel = "repeaters";
      break;
    }
  }

  const Canvas canvas(xr, yr);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
      << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  canvas.axes(out, title, xlabel, ylabel);

  if (kind == ChartKind::kFidelityVsDistance) {
    std::vector<Point> sorted = pts;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Point& a, const Point& b) { return a.x < b.x; });
    out << "<polyline class=\"trend\" fill=\"none\" stroke=\"#1b9e77\" points=\"";
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      out << (i ? " " : "") << num(canvas.px(sorted[i].x)) << ',' << num(canvas.py(sorted[i].y));
    }
    out << "\"/>\n";
  }
  if (kind == ChartKind::kMinRepeatersVsDistance && pts.size() >= 2 &&
      span_of(pts, &Point::x).hi > span_of(pts, &Point::x).lo) {
    std::vector<std::pair<double, double>> xy;
    for (const Point& p : pts) {
      xy.emplace_back(p.x, p.y);
    }
    const RegressionFit fit = fit_linear(xy);
    const double xa = span_of(pts, &Point::x).lo;
    const double xb = span_of(pts, &Point::x).hi;
    out << "<line class=\"fit\" x1=\"" << num(canvas.px(xa)) << "\" y1=\""
        << num(canvas.py(fit.intercept + fit.slope * xa)) << "\" x2=\"" << num(canvas.px(xb))
        << "\" y2=\"" << num(canvas.py(fit.intercept + fit.slope * xb))
        << "\" stroke=\"#7570b3\" stroke-dasharray=\"6 4\"/>\n";
    std::string per_repeater = "n/a";
    if (fit.slope != 0.0) {
      per_repeater = label(1.0 / fit.slope);
    }
    out << "<text class=\"slope\" x=\"" << num(kLeft + 10) << "\" y=\"" << num(kTop + 4)
        << "\" font-size=\"12\">slope " << label(fit.slope) << " repeaters/km ("
        << per_repeater << " km per repeater), r^2 = " << label(fit.r_squared) << "</text>\n";
  }
  canvas.points(out, pts);
  if (kind == ChartKind::kRateVsNodes) {
    legend(out, {{"even routers", "#1b9e77"}, {"odd routers", "#d95f02"}});
  }
  out << "</svg>\n";
}

void render_chart(const std::vector<ResultRow>& rows, ChartKind kind,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ResourceError("cannot write " + path.string() + ": " + std::strerror(errno));
  }
  render_chart(rows, kind, out);
  if (!out.flush()) {
    throw ResourceError("write to " + path.string() + " failed");
  }
}

}  // namespace repeaterlab
