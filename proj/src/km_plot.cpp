#include "tasil/km_plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>

#include "tasil/error.hpp"
#include "tasil/format.hpp"
#include "tasil/stratify.hpp"

namespace tasil::km_plot {

std::size_t KmSeries::censored_at(std::size_t i) const noexcept {
  const std::size_t next = i + 1 < rows.size() ? rows[i + 1].n_at_risk : 0;
  const std::size_t leaving = rows[i].n_at_risk - next;
  return leaving > rows[i].n_events ? leaving - rows[i].n_events : 0;
}

namespace {

template <typename T>
bool parse_field(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

}  // namespace

std::vector<KmSeries> read_km_tables(std::istream& in, const std::string& source) {
  std::vector<KmSeries> series;
  std::string line;
  std::size_t line_no = 0;
  bool in_block = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line == stratify::kKmCsvHeader) {
      in_block = true;
      continue;
    }
    if (line.empty()) {
      in_block = false;
      continue;
    }
    if (!in_block) continue;

    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
      f.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    f.push_back(rest);
    KmRow row;
    if (f.size() != 5 || f[0].empty() || !parse_field(f[1], row.time) ||
        !parse_field(f[2], row.survival) || !parse_field(f[3], row.n_at_risk) ||
        !parse_field(f[4], row.n_events)) {
      throw ParseError(source, line_no, "malformed KM row (expected group,time,survival,n_at_risk,n_events)");
    }
    if (row.n_events > row.n_at_risk) {
      throw ParseError(source, line_no, "n_events exceeds n_at_risk");
    }
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const KmSeries& s) { return s.group == f[0]; });
    if (it == series.end()) {
      series.push_back({std::string(f[0]), {}});
      it = std::prev(series.end());
    }
    if (!it->rows.empty() && !(row.time > it->rows.back().time &&
                               row.n_at_risk < it->rows.back().n_at_risk)) {
      throw ParseError(source, line_no, "KM rows of group '" + it->group +
                                            "' must have increasing time and shrinking risk set");
    }
    it->rows.push_back(row);
  }
  if (series.empty()) throw DataError(source + ": no KM table found");
  return series;
}

std::vector<survival::SurvivalRecord> reconstruct_records(const KmSeries& series) {
  std::vector<survival::SurvivalRecord> out;
  std::size_t id = 0;
  for (std::size_t i = 0; i < series.rows.size(); ++i) {
    const auto& row = series.rows[i];
    const auto add = [&](bool event, std::size_t count) {
      for (std::size_t k = 0; k < count; ++k) {
        out.push_back({series.group + "_" + std::to_string(id++), row.time, event, {}});
      }
    };
    add(true, row.n_events);
    add(false, series.censored_at(i));
  }
  return out;
}

namespace {

double nice_step(double range, int target_ticks) {
  const double raw = range / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double nice = norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0;
  return nice * mag;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string render_svg(const std::vector<KmSeries>& series, std::optional<double> logrank_p,
                       const SvgOptions& o) {
  const double left = 70, right = 20, top = 40, bottom = 55;
  const double pw = o.width - left - right;
  const double ph = o.height - top - bottom;

  double t_max = 0.0;
  for (const auto& s : series) {
    if (!s.rows.empty()) t_max = std::max(t_max, s.rows.back().time);
  }
  if (!(t_max > 0.0)) t_max = 1.0;
  const double x_step = nice_step(t_max, 6);
  const double x_end = std::ceil(t_max / x_step) * x_step;

  const auto X = [&](double t) { return left + pw * t / x_end; };
  const auto Y = [&](double s) { return top + ph * (1.0 - s); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\""
      << o.height << "\" viewBox=\"0 0 " << o.width << ' ' << o.height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << escape(o.title) << "</text>\n";

  // Axes, grid and tick labels.
  svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double s = i / 4.0;
    svg << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(Y(s)) << "\" x2=\"" << fmt(left + pw)
        << "\" y2=\"" << fmt(Y(s)) << "\" stroke=\"#e5e5e5\"/>\n";
    svg << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(Y(s) + 4)
        << "\" text-anchor=\"end\">" << fmt(s) << "</text>\n";
  }
  for (double t = 0.0; t <= x_end + 1e-9 * x_end; t += x_step) {
    svg << "<line x1=\"" << fmt(X(t)) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(X(t))
        << "\" y2=\"" << fmt(top + ph + 5) << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << fmt(X(t)) << "\" y=\"" << fmt(top + ph + 18)
        << "\" text-anchor=\"middle\">" << format_value(t) << "</text>\n";
  }
  svg << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(left)
      << "\" y2=\"" << fmt(top + ph) << "\" stroke=\"#333\"/>\n";
  svg << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(left + pw)
      << "\" y2=\"" << fmt(top + ph) << "\" stroke=\"#333\"/>\n";
  svg << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(o.height - 12.0)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(o.x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << fmt(top + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" << escape(o.y_label)
      << "</text>\n";
  svg << "</g>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    std::ostringstream path;
    path << "M" << fmt(X(0)) << ',' << fmt(Y(1.0));
    double prev = 1.0;
    for (const auto& row : s.rows) {
      path << " H" << fmt(X(row.time));
      if (row.survival != prev) path << " V" << fmt(Y(row.survival));
      prev = row.survival;
    }
    svg << "<path class=\"km-curve\" data-group=\"" << escape(s.group) << "\" d=\"" << path.str()
        << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      if (s.censored_at(i) == 0) continue;
      const double x = X(s.rows[i].time);
      const double y = Y(s.rows[i].survival);
      svg << "<line class=\"censor\" x1=\"" << fmt(x) << "\" y1=\"" << fmt(y - 5) << "\" x2=\""
          << fmt(x) << "\" y2=\"" << fmt(y + 5) << "\" stroke=\"" << colour << "\"/>\n";
    }
  }

  // Legend, top right of the plot area.
  const double lx = left + pw - 170;
  double ly = top + 14;
  svg << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* colour = kPalette[k % std::size(kPalette)];
    svg << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << fmt(lx + 22)
        << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fmt(lx + 28) << "\" y=\"" << fmt(ly) << "\">" << escape(series[k].group)
        << " (n=" << series[k].n() << ")</text>\n";
    ly += 17;
  }
  if (logrank_p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "log-rank p = %.3g", *logrank_p);
    svg << "<text x=\"" << fmt(lx) << "\" y=\"" << fmt(ly) << "\">" << buf << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace tasil::km_plot
