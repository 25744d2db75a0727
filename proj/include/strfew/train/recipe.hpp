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
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "strfew/augment.hpp"
#include "strfew/corpus/sample.hpp"
#include "strfew/model/checkpoint.hpp"
#include "strfew/model/model.hpp"
#include "strfew/ssl.hpp"
#include "strfew/train/optim.hpp"

namespace strfew {

enum class RecipeKind { kBaseline, kMeanTeacher, kPseudoLabel, kRotnetPretrain, kMocoPretrain, kPr, kFineTune };
enum class InitKind { kFresh, kCheckpoint, kPretext };

std::string to_string(RecipeKind k);
RecipeKind parse_recipe(const std::string& name);
std::string to_string(InitKind k);
InitKind parse_init(const std::string& name);

struct TrainRecipe {
  RecipeKind kind = RecipeKind::kBaseline;
  std::string augmentation = "none";
  AugmentPolicy aug = AugmentPolicy::none();
  InitKind init = InitKind::kFresh;
  /// Full checkpoint (init = checkpoint, fine_tune) or backbone weights
  /// (init = pretext).
  std::filesystem::path init_checkpoint;
  double alpha = 1.0;
  double ema_momentum = 0.999;
  int queue_size = 4096;
  double tau = 0.07;
  double min_confidence = 0.0;
  std::int64_t fine_tune_iters = 40000;
  /// Pretext stage settings (rotnet/moco pretraining and the first stage of pr).
  OptimizerConfig pretext_optim = default_pretext_optim();
  ContrastivePolicy contrastive;

  static OptimizerConfig default_pretext_optim();
  void validate() const;
};

struct TrainOptions {
  OptimizerConfig optim;
  std::int64_t val_every = 2000;
  std::int64_t log_every = 100;
  std::uint64_t seed = 0;
  int workers = 0;
  /// Checkpoints and metrics go here; nothing is written when empty.
  std::filesystem::path out_dir;
  std::function<void(const std::string&)> log;
};

struct TrainData {
  std::vector<std::pair<std::string, std::vector<LabeledSample>>> labeled;
  std::vector<LabeledSample> valid;
  std::vector<std::pair<std::string, std::vector<UnlabeledSample>>> unlabeled;
};

struct CheckpointRecord {
  std::int64_t iteration = 0;
  double val_accuracy = 0.0;
  std::string digest;
  std::string path;
};

/// Highest validation accuracy; ties go to the earliest iteration.
const CheckpointRecord& select_best_checkpoint(const std::vector<CheckpointRecord>& records);

struct MetricsRow {
  std::int64_t iter = 0;
  std::string phase;
  std::string dataset;
  std::optional<double> loss;
  std::optional<double> accuracy;
  double lr = 0.0;
};

/// Append-only CSV `iter,phase,dataset,loss,accuracy,lr`, mirrored in memory.
class MetricsLog {
 public:
  static constexpr const char* kHeader = "iter,phase,dataset,loss,accuracy,lr";

  MetricsLog() = default;
  explicit MetricsLog(const std::filesystem::path& path);

  void add(const MetricsRow& row);
  const std::vector<MetricsRow>& rows() const { return rows_; }
  static std::string format(const MetricsRow& row);
  static std::vector<MetricsRow> read(const std::filesystem::path& path);

 private:
  std::vector<MetricsRow> rows_;
  std::filesystem::path path_;
};

struct RecipeResult {
  /// Weights of the final model selected on validation accuracy.
  Checkpoint best;
  CheckpointRecord best_record;
  std::vector<CheckpointRecord> records;
  MetricsLog metrics;
  /// Backbone-only weights from a pretext stage.
  std::optional<Checkpoint> pretext;
  double pretext_accuracy = 0.0;
  std::vector<PseudoLabeledSample> pseudo_labels;
  PseudoLabelStats pseudo_stats;
  long infeasible_ctc = 0;
  /// Recognizers trained; pretext models are not counted.
  int models_trained = 0;
};

/// Runs a full recipe. Pretext-only recipes leave `best` holding the
/// backbone weights and `best_record` the pretext validation record.
RecipeResult run_recipe(const TrainRecipe& recipe, const TrainData& data, const ModelConfig& model,
                        const TrainOptions& options);

}  // namespace strfew
