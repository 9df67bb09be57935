// Copyright 2026 The crkd Authors
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

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "crkd/common/error.hpp"
#include "crkd/train/train.hpp"

namespace crkd::train {

std::string curves_csv(const TrainingLog& log) {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,split,wer,lr\n";
  for (const auto& e : log.epochs)
    if (e.wer) out << e.epoch << ',' << e.split << ',' << *e.wer << ',' << e.learning_rate << '\n';
  return out.str();
}

namespace {

std::string svg_plot(const TrainingLog& log) {
  constexpr double W = 640, H = 400, L = 60, R = 20, T = 30, B = 50;
  std::map<std::string, std::vector<std::pair<int, double>>> series;
  int max_epoch = 0;
  double max_wer = 1.0;
  for (const auto& e : log.epochs) {
    if (!e.wer) continue;
    series[e.split].push_back({e.epoch, *e.wer});
    max_epoch = std::max(max_epoch, e.epoch);
    max_wer = std::max(max_wer, *e.wer);
  }
  auto x = [&](double epoch) { return L + (W - L - R) * (max_epoch ? epoch / max_epoch : 0.5); };
  auto y = [&](double wer) { return H - B - (H - T - B) * wer / (max_wer * 1.05); };

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << (W / 2) << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">epoch</text>\n"
      << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14 " << H / 2
      << ")\" text-anchor=\"middle\">WER (%)</text>\n"
      << "<text x=\"" << L - 6 << "\" y=\"" << y(0) + 4 << "\" text-anchor=\"end\">0</text>\n"
      << "<text x=\"" << L - 6 << "\" y=\"" << y(max_wer) + 4 << "\" text-anchor=\"end\">"
      << max_wer << "</text>\n"
      << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\">" << max_epoch
      << "</text>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  int index = 0;
  for (const auto& [split, points] : series) {
    const char* color = colors[index++ % 4];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [e, w] : points) svg << x(e) << ',' << y(w) << ' ';
    svg << "\"/>\n";
    const auto best = std::min_element(points.begin(), points.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    svg << "<circle cx=\"" << x(best->first) << "\" cy=\"" << y(best->second)
        << "\" r=\"4\" fill=\"" << color << "\"/>\n"
        << "<text class=\"min-wer\" x=\"" << x(best->first) + 6 << "\" y=\"" << y(best->second) - 8
        << "\" fill=\"" << color << "\">" << (split.empty() ? "wer" : split) << " min "
        << best->second << "% @ epoch " << best->first << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

bool emit_curves(const TrainingLog& log, const std::filesystem::path& dir) {
  const bool any = std::any_of(log.epochs.begin(), log.epochs.end(),
                               [](const EpochLog& e) { return e.wer.has_value(); });
  if (!any) {
    std::cerr << "warning: training log has no per-epoch WER; no curves written\n";
    return false;
  }
  std::filesystem::create_directories(dir);
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) fail(ErrorCode::kIo, "cannot write " + p.string());
    out << text;
  };
  write(dir / "curves.csv", curves_csv(log));
  write(dir / "curves.svg", svg_plot(log));
  return true;
}

}  // namespace crkd::train
