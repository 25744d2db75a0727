// Copyright 2026 The strfew Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "strfew/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace strfew {

std::string normalize_for_eval(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (const char ch : s) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') out += static_cast<char>(c - 'A' + 'a');
    else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) out += static_cast<char>(c);
  }
  return out;
}

std::optional<double> DatasetScore::accuracy() const {
  if (count == 0) return std::nullopt;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(count);
}

long EvalReport::total_count() const {
  long n = 0;
  for (const auto& d : datasets) n += d.count;
  return n;
}

long EvalReport::total_correct() const {
  long n = 0;
  for (const auto& d : datasets) n += d.correct;
  return n;
}

std::optional<double> EvalReport::total_accuracy() const {
  const long n = total_count();
  if (n == 0) return std::nullopt;
  return 100.0 * static_cast<double>(total_correct()) / static_cast<double>(n);
}

std::optional<double> EvalReport::mean_of_datasets() const {
  double sum = 0.0;
  int k = 0;
  for (const auto& d : datasets) {
    if (const auto a = d.accuracy()) {
      sum += *a;
      ++k;
    }
  }
  if (k == 0) return std::nullopt;
  return sum / k;
}

namespace {

std::string fmt(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *v);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }

std::vector<std::size_t> widths(const std::vector<DatasetScore>& ds) {
  std::vector<std::size_t> w;
  for (const auto& d : ds) w.push_back(std::max<std::size_t>(8, d.name.size()));
  w.push_back(8);
  return w;
}

std::string header(const std::vector<DatasetScore>& ds, long total, std::size_t label_w) {
  const auto w = widths(ds);
  std::ostringstream os;
  os << std::string(label_w, ' ');
  for (std::size_t i = 0; i < ds.size(); ++i) os << " | " << pad(ds[i].name, w[i]);
  os << " | " << pad("Total", w.back()) << "\n" << std::string(label_w, ' ');
  for (std::size_t i = 0; i < ds.size(); ++i) os << " | " << pad(std::to_string(ds[i].count), w[i]);
  os << " | " << pad(std::to_string(total), w.back()) << "\n";
  return os.str();
}

std::string row(const std::string& label, const std::vector<std::optional<double>>& vals, std::size_t label_w,
                const std::vector<std::size_t>& w) {
  std::ostringstream os;
  os << label << std::string(label_w > label.size() ? label_w - label.size() : 0, ' ');
  for (std::size_t i = 0; i < vals.size(); ++i) os << " | " << pad(fmt(vals[i]), i < w.size() ? w[i] : 8);
  os << "\n";
  return os.str();
}

}  // namespace

std::string EvalReport::table(const std::string& row_label) const {
  const std::size_t w = std::max<std::size_t>(row_label.size(), 12);
  std::vector<std::optional<double>> vals;
  for (const auto& d : datasets) vals.push_back(d.accuracy());
  vals.push_back(total_accuracy());
  return header(datasets, total_count(), w) + row(row_label, vals, w, widths(datasets));
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["checkpoint"] = checkpoint_id;
  j["seeds"] = seeds;
  j["datasets"] = nlohmann::json::array();
  for (const auto& d : datasets) {
    nlohmann::json e{{"name", d.name}, {"count", d.count}, {"correct", d.correct}};
    if (const auto a = d.accuracy()) e["accuracy"] = *a;
    j["datasets"].push_back(e);
  }
  j["total"] = {{"count", total_count()}, {"correct", total_correct()}};
  if (const auto a = total_accuracy()) j["total"]["accuracy"] = *a;
  return j.dump(2);
}

EvalReport score_predictions(
    const std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>& sets) {
  EvalReport r;
  for (const auto& [name, pairs] : sets) {
    DatasetScore d;
    d.name = name;
    d.count = static_cast<long>(pairs.size());
    for (const auto& [pred, truth] : pairs) d.correct += eval_match(pred, truth);
    r.datasets.push_back(d);
  }
  return r;
}

std::string multi_run_table(const std::vector<EvalReport>& runs, const std::vector<std::string>& labels) {
  if (runs.empty()) return "";
  std::size_t w = 12;
  for (const auto& l : labels) w = std::max(w, l.size());
  std::string out = header(runs.front().datasets, runs.front().total_count(), w);
  const std::size_t cols = runs.front().datasets.size() + 1;
  std::vector<double> sum(cols, 0.0);
  std::vector<int> n(cols, 0);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    std::vector<std::optional<double>> vals;
    for (const auto& d : runs[r].datasets) vals.push_back(d.accuracy());
    vals.push_back(runs[r].total_accuracy());
    for (std::size_t c = 0; c < cols && c < vals.size(); ++c) {
      if (vals[c]) {
        sum[c] += *vals[c];
        ++n[c];
      }
    }
    out += row(r < labels.size() ? labels[r] : "run " + std::to_string(r), vals, w, widths(runs.front().datasets));
  }
  if (runs.size() > 1) {
    std::vector<std::optional<double>> mean;
    for (std::size_t c = 0; c < cols; ++c) mean.push_back(n[c] ? std::optional<double>(sum[c] / n[c]) : std::nullopt);
    out += row("mean", mean, w, widths(runs.front().datasets));
  }
  return out;
}

std::string render_svg_plot(const std::vector<PlotSeries>& series, const std::string& title,
                            const std::string& x_label, const std::string& y_label) {
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 60;
  double x0 = std::numeric_limits<double>::max(), x1 = std::numeric_limits<double>::lowest();
  double y0 = x0, y1 = x1;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x); x1 = std::max(x1, x);
      y0 = std::min(y0, y); y1 = std::max(y1, y);
    }
  }
  if (x0 > x1) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
    os << "<text x=\"" << sx(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">" << xv
       << "</text>\n"
       << "<text x=\"" << L - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << yv
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\" font-size=\"13\">"
     << x_label << "</text>\n"
     << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
     << (T + H - B) / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = colors[i % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : series[i].points) os << sx(x) << "," << sy(y) << " ";
    os << "\"/>\n";
    for (const auto& [x, y] : series[i].points) {
      os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (i + 1) << "\" font-size=\"12\" fill=\"" << color << "\">"
       << series[i].name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace strfew
