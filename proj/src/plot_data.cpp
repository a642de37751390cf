#include "tslt/plot_data.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "tslt/csv.hpp"

namespace tslt {
namespace fs = std::filesystem;

namespace {

void write_series(const fs::path& path, const std::string& x_name,
                  const std::vector<std::string>& y_names,
                  const std::vector<std::vector<double>>& columns) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# " << x_name;
  for (const auto& y : y_names) out << ' ' << y;
  out << '\n';
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ' ';
      out << format_number(columns[c][i]);
    }
    out << '\n';
  }
}

std::string sanitize(std::string s) {
  for (auto& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') c = '_';
  }
  return s;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series,
                       bool log_x) {
  constexpr double W = 640, H = 420, L = 70, R = 170, T = 40, B = 50;
  double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
  auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (log_x && !(s.x[i] > 0)) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x0 == x1) x0 -= 0.5, x1 += 0.5;
  y0 = std::min(y0, 0.0);
  if (y0 == y1) y1 = y0 + 1;
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << escape_xml(title)
    << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fy = y0 + (y1 - y0) * i / 4.0;
    const double fx = x0 + (x1 - x0) * i / 4.0;
    const double xv = log_x ? std::pow(10.0, fx) : fx;
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">"
      << format_number(std::round(fy * 1000) / 1000) << "</text>\n";
    o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
      << format_number(std::round(xv * 1000) / 1000) << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
    << escape_xml(x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">" << escape_xml(y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 8];
    o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (log_x && !(s.x[i] > 0)) continue;
      o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    o << "\"/>\n";
    o << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" fill=\"" << c << "\">"
      << escape_xml(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::string> emit_plot_data(const std::string& csv_dir, const std::string& out_dir,
                                        const PlotOptions& options) {
  const fs::path in(csv_dir);
  if (!fs::is_directory(in)) throw std::runtime_error("not a directory: " + csv_dir);
  const bool has_mass = fs::exists(in / "mass.csv");
  const bool has_acc = fs::exists(in / "acceptance.csv");
  const bool has_speed = fs::exists(in / "speedup.csv");
  if (!has_mass && !has_acc && !has_speed) {
    throw std::runtime_error("no mass.csv, acceptance.csv or speedup.csv in " + csv_dir);
  }
  const fs::path out(out_dir);
  fs::create_directories(out);
  std::vector<std::string> written;
  auto svg = [&](const std::string& name, const std::string& title, const std::string& xl,
                 const std::string& yl, const std::vector<Series>& s, bool log_x) {
    if (!options.svg) return;
    std::ofstream f(out / name, std::ios::binary | std::ios::trunc);
    f << render_svg(title, xl, yl, s, log_x);
    written.push_back(name);
  };

  if (has_mass) {
    const auto t = read_csv_file((in / "mass.csv").string());
    const auto cf = t.column("k_fraction");
    const auto cm = t.column("mean_top_k_mass");
    Series s{"mean top-K mass", {}, {}};
    for (const auto& r : t.rows) {
      s.x.push_back(parse_number(r[cf]));
      s.y.push_back(parse_number(r[cm]));
    }
    write_series(out / "mass.dat", "k_fraction", {"mean_top_k_mass"}, {s.x, s.y});
    written.push_back("mass.dat");
    svg("mass.svg", "Top-K probability mass", "K / V", "mass", {s}, true);
  }

  if (has_acc) {
    const auto t = read_csv_file((in / "acceptance.csv").string());
    const auto cm = t.column("mode");
    const auto ct = t.column("truncation");
    const auto ck = t.column("k_payload_effective");
    const auto ca = t.column("alpha_measured");
    const auto cs = t.column("alpha_stderr");
    std::map<std::string, std::vector<std::array<double, 3>>> by_mode;
    for (const auto& r : t.rows) {
      if (r[ct] == "toprho") continue;
      by_mode[r[cm]].push_back({parse_number(r[ck]), parse_number(r[ca]), parse_number(r[cs])});
    }
    std::vector<Series> all;
    for (auto& [mode, pts] : by_mode) {
      std::sort(pts.begin(), pts.end());
      Series s{mode, {}, {}};
      std::vector<double> se;
      for (const auto& p : pts) s.x.push_back(p[0]), s.y.push_back(p[1]), se.push_back(p[2]);
      const auto name = "acceptance_" + sanitize(mode) + ".dat";
      write_series(out / name, "k_payload", {"alpha_measured", "alpha_stderr"}, {s.x, s.y, se});
      written.push_back(name);
      all.push_back(std::move(s));
    }
    svg("acceptance.svg", "Acceptance rate vs K", "K", "alpha", all, true);
  }

  if (has_speed) {
    const auto t = read_csv_file((in / "speedup.csv").string());
    const auto ce = t.column("experiment_id");
    const auto cm = t.column("mode");
    const auto ct = t.column("truncation");
    const auto ck = t.column("k_payload");
    const auto cr = t.column("rho");
    const auto cx = t.column("r_up_bps");
    const auto cs = t.column("speedup");
    const auto cst = t.column("speedup_from_throughput");
    // Curves keep first-appearance order.
    std::vector<std::string> keys;
    std::map<std::string, std::pair<std::string, Series>> curves;
    std::map<std::string, std::vector<double>> alt;
    for (const auto& r : t.rows) {
      const std::string point = r[ct] == "toprho" ? "toprho" + r[cr]
                              : r[ct] == "dense"  ? std::string("dense")
                                                  : "topk" + r[ck];
      const std::string fig = r[ce] + "_" + r[cm];
      const std::string key = fig + "_" + point;
      if (!curves.count(key)) {
        keys.push_back(key);
        curves[key] = {fig, Series{point, {}, {}}};
      }
      curves[key].second.x.push_back(parse_number(r[cx]));
      curves[key].second.y.push_back(parse_number(r[cs]));
      alt[key].push_back(parse_number(r[cst]));
    }
    std::map<std::string, std::vector<Series>> figs;
    std::vector<std::string> fig_order;
    for (const auto& key : keys) {
      const auto& [fig, s] = curves[key];
      const auto name = sanitize(key) + ".dat";
      write_series(out / name, "r_up_bps", {"speedup", "speedup_from_throughput"},
                   {s.x, s.y, alt[key]});
      written.push_back(name);
      if (!figs.count(fig)) fig_order.push_back(fig);
      figs[fig].push_back(s);
    }
    for (const auto& fig : fig_order) {
      svg(sanitize(fig) + ".svg", "Speedup vs uplink rate (" + fig + ")", "R_up [bit/s]",
          "speedup", figs[fig], true);
    }
  }
  return written;
}

}  // namespace tslt
