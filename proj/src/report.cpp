// SPDX-License-Identifier: Apache-2.0
//
// Report writers for rate and DKW experiments. Numbers go through the
// shortest round-trip formatter so that reading a report back reproduces
// the in-memory record exactly.
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "fscore/csv.hpp"
#include "fscore/errors.hpp"
#include "fscore/harness.hpp"

namespace fscore {

using nlohmann::json;

namespace {

constexpr const char* kRateSchema = "fscore-rate-v1";
constexpr const char* kDkwSchema = "fscore-dkw-v1";

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError("bad number '" + s + "'");
  return v;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void write_rate_csv(std::ostream& out, const RateFitResult& r) {
  using csv::format_double;
  out << "# statistic=" << r.statistic << '\n'
      << "# family=" << r.family << '\n'
      << "# N_rule=" << r.N_rule << '\n'
      << "# reps=" << r.reps << '\n'
      << "# seed=" << r.seed << '\n'
      << "# slope=" << format_double(r.slope) << '\n'
      << "# intercept=" << format_double(r.intercept) << '\n'
      << "# slope_half_width=" << format_double(r.slope_half_width) << '\n'
      << "# theoretical_exponent=" << format_double(r.theoretical_exponent) << '\n'
      << "# excluded_cells=" << r.excluded_cells << '\n'
      << "# infinite_rate=" << (r.infinite_rate ? 1 : 0) << '\n'
      << "# fitted=" << (r.fitted ? 1 : 0) << '\n';
  out << "n,N,mean_" << r.statistic << ",se,median,zero_fraction\n";
  for (const auto& c : r.cells)
    out << c.n << ',' << c.N << ',' << format_double(c.mean) << ',' << format_double(c.se) << ','
        << format_double(c.median) << ',' << format_double(c.zero_fraction) << '\n';
}

RateFitResult read_rate_csv(std::istream& in) {
  std::map<std::string, std::string> meta;
  std::ostringstream body;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw IoError("malformed metadata line: " + line);
      meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
    } else {
      body << line << '\n';
    }
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw IoError(std::string("rate csv lacks '") + key + "'");
    return it->second;
  };
  RateFitResult r;
  r.statistic = get("statistic");
  r.family = get("family");
  r.N_rule = get("N_rule");
  r.reps = std::stoull(get("reps"));
  r.seed = std::stoull(get("seed"));
  r.slope = parse_double(get("slope"));
  r.intercept = parse_double(get("intercept"));
  r.slope_half_width = parse_double(get("slope_half_width"));
  r.theoretical_exponent = parse_double(get("theoretical_exponent"));
  r.excluded_cells = std::stoull(get("excluded_cells"));
  r.infinite_rate = get("infinite_rate") == "1";
  r.fitted = get("fitted") == "1";

  std::istringstream bin(body.str());
  const csv::Table t = csv::read(bin);
  if (t.header.size() != 6) throw IoError("rate csv needs six columns");
  for (const auto& row : t.rows) {
    RateCell c;
    c.n = static_cast<std::size_t>(row[0]);
    c.N = static_cast<std::size_t>(row[1]);
    c.mean = row[2];
    c.se = row[3];
    c.median = row[4];
    c.zero_fraction = row[5];
    r.cells.push_back(c);
  }
  return r;
}

json rate_to_json(const RateFitResult& r) {
  json cells = json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"n", c.n},
                     {"N", c.N},
                     {"mean", c.mean},
                     {"se", c.se},
                     {"median", c.median},
                     {"zero_fraction", c.zero_fraction}});
  return json{{"schema", kRateSchema},
              {"statistic", r.statistic},
              {"family", r.family},
              {"N_rule", r.N_rule},
              {"reps", r.reps},
              {"seed", r.seed},
              {"cells", cells},
              {"fit",
               {{"fitted", r.fitted},
                {"slope", r.slope},
                {"intercept", r.intercept},
                {"slope_half_width", r.slope_half_width},
                {"theoretical_exponent", finite_or_null(r.theoretical_exponent)},
                {"excluded_cells", r.excluded_cells},
                {"infinite_rate", r.infinite_rate}}}};
}

std::vector<std::string> validate_rate_json(const json& j) {
  std::vector<std::string> problems;
  auto need = [&](const json& obj, const char* key, bool (json::*pred)() const noexcept,
                  const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
      problems.push_back(where + ": missing '" + key + "'");
      return false;
    }
    if (!(obj.at(key).*pred)()) {
      problems.push_back(where + ": '" + key + "' has the wrong type");
      return false;
    }
    return true;
  };
  if (!j.is_object()) return {"document is not an object"};
  if (need(j, "schema", &json::is_string, "root") && j.at("schema") != kRateSchema)
    problems.push_back("root: unknown schema");
  if (need(j, "statistic", &json::is_string, "root")) {
    const auto s = j.at("statistic").get<std::string>();
    if (s != "excess" && s != "threshold_error") problems.push_back("root: unknown statistic");
  }
  need(j, "family", &json::is_string, "root");
  need(j, "N_rule", &json::is_string, "root");
  need(j, "reps", &json::is_number_unsigned, "root");
  need(j, "seed", &json::is_number_unsigned, "root");
  if (need(j, "cells", &json::is_array, "root")) {
    std::size_t i = 0;
    for (const auto& c : j.at("cells")) {
      const std::string where = "cells[" + std::to_string(i++) + "]";
      need(c, "n", &json::is_number_unsigned, where);
      need(c, "N", &json::is_number_unsigned, where);
      for (const char* k : {"mean", "se", "median", "zero_fraction"}) need(c, k, &json::is_number, where);
      if (c.is_object() && c.contains("mean") && c.at("mean").is_number() && c.at("mean").get<double>() < 0.0)
        problems.push_back(where + ": negative mean");
    }
  }
  if (need(j, "fit", &json::is_object, "root")) {
    const json& f = j.at("fit");
    need(f, "fitted", &json::is_boolean, "fit");
    need(f, "slope", &json::is_number, "fit");
    need(f, "intercept", &json::is_number, "fit");
    need(f, "slope_half_width", &json::is_number, "fit");
    if (!f.contains("theoretical_exponent") ||
        !(f.at("theoretical_exponent").is_number() || f.at("theoretical_exponent").is_null()))
      problems.push_back("fit: 'theoretical_exponent' must be a number or null");
    need(f, "excluded_cells", &json::is_number_unsigned, "fit");
    need(f, "infinite_rate", &json::is_boolean, "fit");
  }
  return problems;
}

RateFitResult rate_from_json(const json& j) {
  const auto problems = validate_rate_json(j);
  if (!problems.empty()) throw IoError("invalid rate report: " + problems.front());
  RateFitResult r;
  r.statistic = j.at("statistic").get<std::string>();
  r.family = j.at("family").get<std::string>();
  r.N_rule = j.at("N_rule").get<std::string>();
  r.reps = j.at("reps").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& c : j.at("cells"))
    r.cells.push_back(RateCell{c.at("n").get<std::size_t>(), c.at("N").get<std::size_t>(),
                               c.at("mean").get<double>(), c.at("se").get<double>(),
                               c.at("median").get<double>(), c.at("zero_fraction").get<double>()});
  const json& f = j.at("fit");
  r.fitted = f.at("fitted").get<bool>();
  r.slope = f.at("slope").get<double>();
  r.intercept = f.at("intercept").get<double>();
  r.slope_half_width = f.at("slope_half_width").get<double>();
  const json& te = f.at("theoretical_exponent");
  r.theoretical_exponent = te.is_null() ? -std::numeric_limits<double>::infinity() : te.get<double>();
  r.excluded_cells = f.at("excluded_cells").get<std::size_t>();
  r.infinite_rate = f.at("infinite_rate").get<bool>();
  return r;
}

void write_rate_svg(std::ostream& out, const RateFitResult& r) {
  constexpr double W = 640, H = 420, ml = 70, mr = 20, mt = 30, mb = 50;
  std::vector<std::pair<double, double>> pts;
  for (const auto& c : r.cells)
    if (c.mean > 0.0) pts.emplace_back(std::log10(static_cast<double>(c.n)), std::log10(c.mean));

  double x0 = 2.0, x1 = 4.0;
  if (!r.cells.empty()) {
    x0 = std::log10(static_cast<double>(r.cells.front().n));
    x1 = std::log10(static_cast<double>(r.cells.back().n));
  }
  if (x1 <= x0) x1 = x0 + 1.0;
  const double pad = 0.05 * (x1 - x0);
  x0 -= pad;
  x1 += pad;

  // Lines in log10 coordinates; the fitted line is stored in natural logs.
  const double fit_slope = r.fitted ? r.slope : 0.0;
  const double fit_icpt = r.fitted ? r.intercept / std::log(10.0) : (pts.empty() ? 0.0 : pts.front().second);
  double cx = 0.5 * (x0 + x1), cy = 0.0;
  if (!pts.empty()) {
    cx = cy = 0.0;
    for (auto [x, y] : pts) {
      cx += x;
      cy += y;
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());
  }
  const double th_slope = std::isfinite(r.theoretical_exponent) ? r.theoretical_exponent : 0.0;
  auto fit_y = [&](double x) { return fit_icpt + fit_slope * x; };
  auto th_y = [&](double x) { return cy + th_slope * (x - cx); };

  double y0 = std::min({fit_y(x0), fit_y(x1), th_y(x0), th_y(x1)});
  double y1 = std::max({fit_y(x0), fit_y(x1), th_y(x0), th_y(x1)});
  for (auto [x, y] : pts) {
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  if (y1 - y0 < 1e-9) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double ypad = 0.05 * (y1 - y0);
  y0 -= ypad;
  y1 += ypad;
  auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
  auto sy = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"420\" fill=\"white\"/>\n"
      << "<text x=\"" << fixed(W / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << r.statistic << " vs n (" << r.family << ", N=" << r.N_rule << ")</text>\n"
      << "<rect x=\"" << fixed(ml) << "\" y=\"" << fixed(mt) << "\" width=\"" << fixed(W - ml - mr)
      << "\" height=\"" << fixed(H - mt - mb) << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << fixed(W / 2) << "\" y=\"" << fixed(H - 10)
      << "\" text-anchor=\"middle\" font-size=\"12\">log10 n</text>\n"
      << "<text x=\"15\" y=\"" << fixed(H / 2) << "\" font-size=\"12\" transform=\"rotate(-90 15 "
      << fixed(H / 2) << ")\" text-anchor=\"middle\">log10 mean</text>\n";
  out << "<line class=\"fitted\" x1=\"" << fixed(sx(x0)) << "\" y1=\"" << fixed(sy(fit_y(x0)))
      << "\" x2=\"" << fixed(sx(x1)) << "\" y2=\"" << fixed(sy(fit_y(x1)))
      << "\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
  out << "<line class=\"theoretical\" x1=\"" << fixed(sx(x0)) << "\" y1=\"" << fixed(sy(th_y(x0)))
      << "\" x2=\"" << fixed(sx(x1)) << "\" y2=\"" << fixed(sy(th_y(x1)))
      << "\" stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6 4\"/>\n";
  for (auto [x, y] : pts)
    out << "<circle cx=\"" << fixed(sx(x)) << "\" cy=\"" << fixed(sy(y)) << "\" r=\"4\" fill=\"black\"/>\n";
  char legend[160];
  std::snprintf(legend, sizeof legend, "fitted slope %.3f, theoretical %.3f", r.slope,
                r.theoretical_exponent);
  out << "<text x=\"" << fixed(ml + 10) << "\" y=\"" << fixed(mt + 18) << "\" font-size=\"12\">"
      << legend << "</text>\n</svg>\n";
}

void write_dkw_csv(std::ostream& out, const std::vector<DkwCell>& cells) {
  using csv::format_double;
  out << "N,t,reps,exceed,frequency,bound,se,within\n";
  for (const auto& c : cells)
    out << c.N << ',' << format_double(c.t) << ',' << c.reps << ',' << c.exceed << ','
        << format_double(c.frequency) << ',' << format_double(c.bound) << ','
        << format_double(c.se) << ',' << (c.within() ? 1 : 0) << '\n';
}

json dkw_to_json(const std::vector<DkwCell>& cells) {
  json arr = json::array();
  for (const auto& c : cells)
    arr.push_back({{"N", c.N},
                   {"t", c.t},
                   {"reps", c.reps},
                   {"exceed", c.exceed},
                   {"frequency", c.frequency},
                   {"bound", c.bound},
                   {"se", c.se},
                   {"within", c.within()}});
  const bool all = std::all_of(cells.begin(), cells.end(), [](const DkwCell& c) { return c.within(); });
  return json{{"schema", kDkwSchema}, {"cells", arr}, {"all_within", all}};
}

std::vector<std::filesystem::path> emit_report(const RateFitResult& r,
                                               const std::filesystem::path& dir,
                                               const std::string& stem,
                                               const std::vector<ReportFormat>& formats) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (ReportFormat f : formats) {
    const char* ext = f == ReportFormat::csv ? ".csv" : f == ReportFormat::json ? ".json" : ".svg";
    const auto path = dir / (stem + ext);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    switch (f) {
      case ReportFormat::csv:
        write_rate_csv(out, r);
        break;
      case ReportFormat::json:
        out << rate_to_json(r).dump(2) << '\n';
        break;
      case ReportFormat::svg:
        write_rate_svg(out, r);
        break;
    }
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace fscore
