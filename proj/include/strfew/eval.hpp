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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "strfew/corpus/sample.hpp"
#include "strfew/model/input.hpp"
#include "strfew/model/model.hpp"

namespace strfew {

/// ASCII-lowercased, keeping only [a-z0-9].
std::string normalize_for_eval(std::string_view s);

inline bool eval_match(std::string_view prediction, std::string_view truth) {
  return normalize_for_eval(prediction) == normalize_for_eval(truth);
}

struct DatasetScore {
  std::string name;
  long count = 0;
  long correct = 0;
  /// Absent for empty datasets.
  std::optional<double> accuracy() const;
};

struct EvalReport {
  std::vector<DatasetScore> datasets;
  std::string checkpoint_id;
  std::vector<std::uint64_t> seeds;

  long total_count() const;
  long total_correct() const;
  /// Correct over the union of all datasets (not the mean of per-dataset
  /// accuracies).
  std::optional<double> total_accuracy() const;
  /// Unweighted mean of per-dataset accuracies, for contrast only.
  std::optional<double> mean_of_datasets() const;

  std::string table(const std::string& row_label = "model") const;
  std::string to_json() const;
};

/// Builds a report from (dataset, [(prediction, truth)]) pairs.
EvalReport score_predictions(const std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>& sets);

/// Table with one row per report plus a mean row over reports (seeds).
std::string multi_run_table(const std::vector<EvalReport>& runs, const std::vector<std::string>& labels);

template <typename Scalar>
std::vector<std::string> predict_texts(StrModel<Scalar>& model, const std::vector<LabeledSample>& samples,
                                       int batch_size = 64) {
  std::vector<std::string> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(samples.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<Raster> imgs;
    for (std::size_t i = start; i < end; ++i) imgs.push_back(samples[i].image);
    for (auto& p : model.predict(to_input<Scalar>(imgs))) out.push_back(std::move(p.text));
  }
  return out;
}

template <typename Scalar>
EvalReport evaluate(StrModel<Scalar>& model, const std::vector<std::pair<std::string, std::vector<LabeledSample>>>& splits) {
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sets;
  for (const auto& [name, samples] : splits) {
    const auto preds = predict_texts(model, samples);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < samples.size(); ++i) pairs.emplace_back(preds[i], samples[i].label);
    sets.emplace_back(name, std::move(pairs));
  }
  return score_predictions(sets);
}

/// Word accuracy in percent; 0 for an empty set.
template <typename Scalar>
double word_accuracy(StrModel<Scalar>& model, const std::vector<LabeledSample>& samples) {
  if (samples.empty()) return 0.0;
  const auto preds = predict_texts(model, samples);
  long correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) correct += eval_match(preds[i], samples[i].label);
  return 100.0 * static_cast<double>(correct) / static_cast<double>(samples.size());
}

struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

/// Line chart as a standalone SVG document.
std::string render_svg_plot(const std::vector<PlotSeries>& series, const std::string& title,
                            const std::string& x_label, const std::string& y_label);

}  // namespace strfew
