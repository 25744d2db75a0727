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

#include "strfew/train/recipe.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "strfew/corpus/manifest.hpp"
#include "strfew/eval.hpp"
#include "strfew/model/input.hpp"
#include "strfew/sampler.hpp"
#include "strfew/train/prefetch.hpp"

namespace strfew {

std::string to_string(RecipeKind k) {
  switch (k) {
    case RecipeKind::kBaseline: return "baseline";
    case RecipeKind::kMeanTeacher: return "mean_teacher";
    case RecipeKind::kPseudoLabel: return "pseudo_label";
    case RecipeKind::kRotnetPretrain: return "rotnet_pretrain";
    case RecipeKind::kMocoPretrain: return "moco_pretrain";
    case RecipeKind::kPr: return "pr";
    case RecipeKind::kFineTune: return "fine_tune";
  }
  return "?";
}

RecipeKind parse_recipe(const std::string& name) {
  if (name == "baseline") return RecipeKind::kBaseline;
  if (name == "mean_teacher" || name == "mt") return RecipeKind::kMeanTeacher;
  if (name == "pseudo_label" || name == "pl") return RecipeKind::kPseudoLabel;
  if (name == "rotnet_pretrain" || name == "rotnet") return RecipeKind::kRotnetPretrain;
  if (name == "moco_pretrain" || name == "moco") return RecipeKind::kMocoPretrain;
  if (name == "pr") return RecipeKind::kPr;
  if (name == "fine_tune") return RecipeKind::kFineTune;
  throw std::invalid_argument("unknown recipe: " + name);
}

std::string to_string(InitKind k) {
  switch (k) {
    case InitKind::kFresh: return "fresh";
    case InitKind::kCheckpoint: return "checkpoint";
    case InitKind::kPretext: return "pretext";
  }
  return "?";
}

InitKind parse_init(const std::string& name) {
  if (name == "fresh") return InitKind::kFresh;
  if (name == "checkpoint") return InitKind::kCheckpoint;
  if (name == "pretext") return InitKind::kPretext;
  throw std::invalid_argument("unknown init: " + name);
}

OptimizerConfig TrainRecipe::default_pretext_optim() {
  OptimizerConfig c;
  c.kind = OptimizerKind::kSgd;
  c.max_lr = 0.01;
  c.momentum = 0.9;
  c.weight_decay = 5e-4;
  c.total_iters = 2000;
  c.batch_size = 32;
  return c;
}

void TrainRecipe::validate() const {
  aug.validate();
  pretext_optim.validate();
  if (alpha < 0.0) throw std::invalid_argument("recipe.alpha must be non-negative");
  if (ema_momentum < 0.0 || ema_momentum > 1.0) throw std::invalid_argument("recipe.ema must lie in [0, 1]");
  if (queue_size < 1) throw std::invalid_argument("recipe.queue_size must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("recipe.tau must be positive");
  if (fine_tune_iters < 1) throw std::invalid_argument("recipe.fine_tune_iters must be positive");
  if (kind == RecipeKind::kFineTune && init_checkpoint.empty()) {
    throw std::invalid_argument("fine_tune requires a source checkpoint");
  }
  if ((init == InitKind::kCheckpoint || init == InitKind::kPretext) && init_checkpoint.empty() &&
      kind != RecipeKind::kPr) {
    throw std::invalid_argument("init=" + to_string(init) + " requires recipe.init_checkpoint");
  }
}

const CheckpointRecord& select_best_checkpoint(const std::vector<CheckpointRecord>& records) {
  if (records.empty()) throw std::invalid_argument("no checkpoint records");
  const CheckpointRecord* best = &records.front();
  for (const auto& r : records) {
    if (r.val_accuracy > best->val_accuracy ||
        (r.val_accuracy == best->val_accuracy && r.iteration < best->iteration)) {
      best = &r;
    }
  }
  return *best;
}

MetricsLog::MetricsLog(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  if (fresh) {
    std::ofstream f(path, std::ios::app);
    f << kHeader << "\n";
  }
}

std::string MetricsLog::format(const MetricsRow& r) {
  auto num = [](std::optional<double> v) {
    if (!v) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", *v);
    return std::string(buf);
  };
  char lr[32];
  std::snprintf(lr, sizeof lr, "%.6g", r.lr);
  return std::to_string(r.iter) + "," + r.phase + "," + r.dataset + "," + num(r.loss) + "," + num(r.accuracy) + "," + lr;
}

void MetricsLog::add(const MetricsRow& row) {
  rows_.push_back(row);
  if (!path_.empty()) {
    std::ofstream f(path_, std::ios::app);
    f << format(row) << "\n";
  }
}

std::vector<MetricsRow> MetricsLog::read(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read metrics " + path.string());
  std::vector<MetricsRow> out;
  std::string line;
  std::getline(f, line);
  if (line != kHeader) throw std::runtime_error("unexpected metrics header in " + path.string());
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    while (cols.size() < 6) cols.emplace_back();
    MetricsRow r;
    r.iter = std::stoll(cols[0]);
    r.phase = cols[1];
    r.dataset = cols[2];
    if (!cols[3].empty()) r.loss = std::stod(cols[3]);
    if (!cols[4].empty()) r.accuracy = std::stod(cols[4]);
    r.lr = cols[5].empty() ? 0.0 : std::stod(cols[5]);
    out.push_back(r);
  }
  return out;
}

namespace {

using Model = StrModel<float>;
using Pretext = PretextModel<float>;

// Stream identifiers for Rng::derive so that each consumer of randomness is
// independent of the others.
enum Stream : std::uint64_t {
  kInitLabeler = 1,
  kInitFinal = 2,
  kInitPretext = 3,
  kSamplerLabeled = 10,
  kSamplerUnlabeled = 11,
  kAugment = 12,
  kAugmentTeacher = 13,
  kPretextData = 14,
};

struct Context {
  const TrainRecipe& recipe;
  const TrainOptions& opts;
  RecipeResult& result;

  void log(const std::string& msg) const {
    if (opts.log) opts.log(msg);
  }
  std::filesystem::path dir(const std::string& phase) const {
    return opts.out_dir.empty() ? std::filesystem::path() : opts.out_dir / phase;
  }
};

std::vector<std::size_t> sizes_of(const auto& sets) {
  std::vector<std::size_t> out;
  for (const auto& [name, v] : sets) out.push_back(v.size());
  return out;
}

Raster augmented(const Raster& img, const AugmentPolicy& policy, std::uint64_t seed) {
  Rng rng(seed);
  return sample_view(img, policy, rng);
}

struct SupervisedBatch {
  nn::Tensor4<float> student;
  nn::Tensor4<float> teacher;
  std::vector<std::vector<int>> labels;
  std::vector<std::string> datasets;
};

struct BatchRefs {
  std::vector<SampleRef> labeled;
  std::vector<SampleRef> unlabeled;
};

void restore(Model& model, const Checkpoint& c) { load_into(model, model.config(), c); }

/// Trains a recognizer on balanced batches from `sets`, validating every
/// val_every iterations and restoring the best weights at the end. With
/// `unlabeled` non-empty the loop runs mean-teacher steps.
Checkpoint train_recognizer(Context& ctx, Model& model, const std::string& phase,
                            const std::vector<std::pair<std::string, std::vector<LabeledSample>>>& sets,
                            const std::vector<LabeledSample>& valid,
                            const std::vector<std::pair<std::string, std::vector<UnlabeledSample>>>* unlabeled,
                            OptimizerConfig oc, std::uint64_t seed) {
  if (sets.empty()) throw std::invalid_argument(phase + ": no labeled training data");
  const bool mt = unlabeled && !unlabeled->empty();
  const auto& recipe = ctx.recipe;
  const Charset& cs = model.charset();
  const Predictor pred = model.config().predictor;
  auto params = model.parameters();
  Optimizer<float> opt(oc, params);
  std::optional<TeacherState<Model>> teacher;
  if (mt) teacher.emplace(model, recipe.ema_momentum);

  BalancedSampler labeled_sampler(sizes_of(sets), oc.batch_size, Rng::derive(seed, kSamplerLabeled));
  std::optional<BalancedSampler> unlabeled_sampler;
  if (mt) unlabeled_sampler.emplace(sizes_of(*unlabeled), oc.batch_size, Rng::derive(seed, kSamplerUnlabeled));

  auto claim = [&](std::int64_t) {
    BatchRefs r;
    r.labeled = labeled_sampler.next_batch();
    if (mt) r.unlabeled = unlabeled_sampler->next_batch();
    return r;
  };
  auto build = [&](std::int64_t it, BatchRefs refs) {
    SupervisedBatch b;
    std::vector<Raster> sv, tv;
    const std::uint64_t aseed = Rng::derive(Rng::derive(seed, kAugment), static_cast<std::uint64_t>(it));
    const std::uint64_t tseed = Rng::derive(Rng::derive(seed, kAugmentTeacher), static_cast<std::uint64_t>(it));
    std::uint64_t slot = 0;
    auto add = [&](const Raster& img) {
      sv.push_back(augmented(img, recipe.aug, Rng::derive(aseed, slot)));
      if (mt) tv.push_back(augmented(img, recipe.aug, Rng::derive(tseed, slot)));
      ++slot;
    };
    for (const auto& r : refs.labeled) {
      const LabeledSample& s = sets[r.dataset].second[r.index];
      add(s.image);
      b.labels.push_back(encode_classes(s.label, cs, pred));
      b.datasets.push_back(sets[r.dataset].first);
    }
    for (const auto& r : refs.unlabeled) add((*unlabeled)[r.dataset].second[r.index].image);
    b.student = to_input<float>(sv);
    if (mt) b.teacher = to_input<float>(tv);
    return b;
  };
  Prefetcher<BatchRefs, SupervisedBatch> prefetch(ctx.opts.workers, 2 * std::max(1, ctx.opts.workers), claim, build);

  const ModelConfig& cfg = model.config();
  std::vector<CheckpointRecord> records;
  std::optional<Checkpoint> best;
  double loss_sum = 0.0;
  long loss_n = 0;
  const auto dir = ctx.dir(phase);
  auto validate = [&](std::int64_t iter, double lr) {
    const double acc = word_accuracy(model, valid);
    CheckpointRecord rec{iter, acc, cfg.digest(), dir.empty() ? "" : (dir / "best.ckpt").string()};
    records.push_back(rec);
    ctx.result.metrics.add({iter, phase + "/valid", "valid", std::nullopt, acc, lr});
    ctx.log(phase + " iter " + std::to_string(iter) + " valid accuracy " + std::to_string(acc));
    if (!best || acc > best->val_accuracy) {
      best = make_checkpoint(model, cfg, iter, acc);
      if (!dir.empty()) save_checkpoint(*best, dir / "best.ckpt");
    }
  };

  double lr = 0.0;
  for (std::int64_t it = 0; it < oc.total_iters; ++it) {
    SupervisedBatch b = prefetch.next();
    lr = lr_one_cycle(it, oc);
    model.zero_grad();
    double loss;
    if (mt) {
      const MeanTeacherLoss l = mean_teacher_step(model, teacher->model, b.student, b.teacher, b.labels, recipe.alpha,
                                                  &ctx.result.infeasible_ctc);
      loss = l.total;
    } else {
      const auto* targets = pred == Predictor::kAttention ? &b.labels : nullptr;
      const StageOutputs<float> out = model.forward(b.student, nn::Mode::kTrain, targets);
      nn::SeqBatch<float> grad;
      const LossValue l = pred == Predictor::kCtc
                              ? ctc_batch_loss(out.logits, b.labels, &grad, &ctx.result.infeasible_ctc)
                              : attention_batch_loss(out.logits, b.labels, &grad);
      model.backward(grad);
      loss = l.value;
    }
    clip_gradients(params, oc.clip_norm, phase + " iteration " + std::to_string(it));
    opt.step(lr);
    if (mt) teacher->update(model);
    loss_sum += loss;
    ++loss_n;
    if ((it + 1) % ctx.opts.log_every == 0) {
      ctx.result.metrics.add({it + 1, phase + "/train", "all", loss_sum / loss_n, std::nullopt, lr});
      ctx.log(phase + " iter " + std::to_string(it + 1) + " loss " + std::to_string(loss_sum / loss_n));
      loss_sum = 0.0;
      loss_n = 0;
    }
    if ((it + 1) % ctx.opts.val_every == 0) validate(it + 1, lr);
  }
  if (records.empty()) validate(oc.total_iters, lr);
  ctx.result.records.insert(ctx.result.records.end(), records.begin(), records.end());
  ctx.result.best_record = select_best_checkpoint(records);
  ++ctx.result.models_trained;
  restore(model, *best);
  return *best;
}

std::vector<Raster> pretext_pool(const TrainData& data) {
  std::vector<Raster> pool;
  for (const auto& [name, v] : data.unlabeled) {
    for (const auto& s : v) pool.push_back(s.image);
  }
  if (pool.empty()) {
    for (const auto& [name, v] : data.labeled) {
      for (const auto& s : v) pool.push_back(s.image);
    }
  }
  return pool;
}

double rotation_accuracy(Pretext& model, const std::vector<Raster>& images) {
  long correct = 0, total = 0;
  for (std::size_t start = 0; start < images.size(); start += 32) {
    const std::vector<Raster> chunk(images.begin() + static_cast<std::ptrdiff_t>(start),
                                    images.begin() + static_cast<std::ptrdiff_t>(std::min(images.size(), start + 32)));
    const auto [rot, labels] = make_rotation_batch(chunk);
    const nn::Mat<float> logits = model.forward(to_input<float>(rot), nn::Mode::kInfer);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      Eigen::Index arg;
      logits.row(r).maxCoeff(&arg);
      correct += arg == labels[static_cast<std::size_t>(r)];
      ++total;
    }
  }
  return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

/// Top-1 instance discrimination within batches of 32 held-out images.
double contrast_accuracy(Pretext& model, const std::vector<Raster>& images, const ContrastivePolicy& policy,
                         std::uint64_t seed) {
  long correct = 0, total = 0;
  for (std::size_t start = 0; start + 1 < images.size(); start += 32) {
    std::vector<Raster> a, b;
    for (std::size_t i = start; i < std::min(images.size(), start + 32); ++i) {
      Rng rng(Rng::derive(seed, i));
      auto [x, y] = contrastive_views(images[i], policy, rng);
      a.push_back(std::move(x));
      b.push_back(std::move(y));
    }
    const nn::Mat<float> q = model.forward(to_input<float>(a), nn::Mode::kInfer);
    const nn::Mat<float> k = model.forward(to_input<float>(b), nn::Mode::kInfer);
    const nn::Mat<float> sim = q * k.transpose();
    for (Eigen::Index r = 0; r < sim.rows(); ++r) {
      Eigen::Index arg;
      sim.row(r).maxCoeff(&arg);
      correct += arg == r;
      ++total;
    }
  }
  return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

/// Pretext training; returns backbone-only weights under the recognizer's
/// configuration digest.
Checkpoint pretrain(Context& ctx, const ModelConfig& cfg, const TrainData& data, PretextKind kind,
                    std::uint64_t seed) {
  const auto& recipe = ctx.recipe;
  const OptimizerConfig& oc = recipe.pretext_optim;
  const std::string phase = kind == PretextKind::kRotation ? "rotnet" : "moco";
  const std::vector<Raster> pool = pretext_pool(data);
  if (pool.empty()) throw std::invalid_argument(phase + ": no images for pretext training");
  std::vector<Raster> held;
  for (const auto& s : data.valid) held.push_back(s.image);

  Pretext model(cfg, kind, Rng::derive(seed, kInitPretext));
  std::optional<Pretext> key;
  std::optional<NegativeQueue<float>> queue;
  if (kind == PretextKind::kContrast) {
    key.emplace(model);
    queue.emplace(recipe.queue_size, cfg.embedding_dim);
    if (oc.batch_size > recipe.queue_size) throw std::invalid_argument("moco batch exceeds queue size");
  }
  auto params = model.parameters();
  Optimizer<float> opt(oc, params);
  BalancedSampler sampler({pool.size()}, oc.batch_size, Rng::derive(seed, kPretextData));

  struct PretextBatch {
    nn::Tensor4<float> x, y;
    std::vector<int> labels;
  };
  auto claim = [&](std::int64_t) { return sampler.next_batch(); };
  auto build = [&](std::int64_t it, std::vector<SampleRef> refs) {
    PretextBatch b;
    std::vector<Raster> imgs;
    for (const auto& r : refs) imgs.push_back(pool[r.index]);
    if (kind == PretextKind::kRotation) {
      auto [rot, labels] = make_rotation_batch(imgs);
      b.x = to_input<float>(rot);
      b.labels = std::move(labels);
    } else {
      std::vector<Raster> a, c;
      const std::uint64_t s = Rng::derive(Rng::derive(seed, kAugment), static_cast<std::uint64_t>(it));
      for (std::size_t i = 0; i < imgs.size(); ++i) {
        Rng rng(Rng::derive(s, i));
        auto [x, y] = contrastive_views(imgs[i], recipe.contrastive, rng);
        a.push_back(std::move(x));
        c.push_back(std::move(y));
      }
      b.x = to_input<float>(a);
      b.y = to_input<float>(c);
    }
    return b;
  };
  Prefetcher<std::vector<SampleRef>, PretextBatch> prefetch(ctx.opts.workers, 2 * std::max(1, ctx.opts.workers),
                                                             claim, build);
  const auto dir = ctx.dir(phase);
  std::optional<Checkpoint> best;
  std::vector<CheckpointRecord> records;
  auto validate = [&](std::int64_t iter, double lr) {
    const double acc = kind == PretextKind::kRotation
                           ? rotation_accuracy(model, held.empty() ? pool : held)
                           : contrast_accuracy(model, held.empty() ? pool : held, recipe.contrastive, seed);
    records.push_back({iter, acc, cfg.digest(), dir.empty() ? "" : (dir / "backbone.ckpt").string()});
    ctx.result.metrics.add({iter, phase + "/valid", "valid", std::nullopt, acc, lr});
    ctx.log(phase + " iter " + std::to_string(iter) + " valid accuracy " + std::to_string(acc));
    if (!best || acc > best->val_accuracy) {
      Checkpoint c;
      c.iteration = iter;
      c.val_accuracy = acc;
      c.config_text = cfg.to_text();
      c.digest = cfg.digest();
      model.visit_backbone([&](const std::string& name, nn::Param<float>& p) { c.blobs[name] = p.value; });
      best = std::move(c);
      if (!dir.empty()) save_checkpoint(*best, dir / "backbone.ckpt");
    }
  };
  double loss_sum = 0.0, lr = 0.0;
  long loss_n = 0;
  for (std::int64_t it = 0; it < oc.total_iters; ++it) {
    PretextBatch b = prefetch.next();
    lr = lr_one_cycle(it, oc);
    model.zero_grad();
    double loss;
    if (kind == PretextKind::kRotation) {
      const nn::Mat<float> logits = model.forward(b.x, nn::Mode::kTrain);
      nn::Mat<float> g;
      loss = rotation_nll(logits, b.labels, &g).value;
      model.backward(g);
    } else {
      loss = moco_step(model, *key, *queue, b.x, b.y, recipe.tau, recipe.ema_momentum).value;
    }
    clip_gradients(params, oc.clip_norm, phase + " iteration " + std::to_string(it));
    opt.step(lr);
    loss_sum += loss;
    ++loss_n;
    if ((it + 1) % ctx.opts.log_every == 0) {
      ctx.result.metrics.add({it + 1, phase + "/train", "all", loss_sum / loss_n, std::nullopt, lr});
      ctx.log(phase + " iter " + std::to_string(it + 1) + " loss " + std::to_string(loss_sum / loss_n));
      loss_sum = 0.0;
      loss_n = 0;
    }
    if ((it + 1) % ctx.opts.val_every == 0) validate(it + 1, lr);
  }
  if (records.empty()) validate(oc.total_iters, lr);
  ctx.result.records.insert(ctx.result.records.end(), records.begin(), records.end());
  ctx.result.pretext_accuracy = select_best_checkpoint(records).val_accuracy;
  ctx.result.pretext = *best;
  return *best;
}

Model fresh_model(const ModelConfig& cfg, std::uint64_t seed, const Checkpoint* backbone) {
  Model m(cfg, seed);
  if (backbone) load_into(m, cfg, *backbone, "features.");
  return m;
}

std::vector<std::pair<std::string, std::vector<LabeledSample>>> with_pseudo_labels(
    const TrainData& data, const std::vector<PseudoLabeledSample>& pseudo) {
  auto sets = data.labeled;
  for (const auto& [name, v] : data.unlabeled) {
    std::vector<LabeledSample> pl;
    for (const auto& p : pseudo) {
      if (p.base.dataset == name) pl.push_back(as_labeled(p));
    }
    if (!pl.empty()) sets.emplace_back(name + "_pl", std::move(pl));
  }
  return sets;
}

}  // namespace

RecipeResult run_recipe(const TrainRecipe& recipe, const TrainData& data, const ModelConfig& cfg,
                        const TrainOptions& opts) {
  recipe.validate();
  opts.optim.validate();
  cfg.validate();
  if (opts.val_every < 1 || opts.log_every < 1) throw std::invalid_argument("val_every and log_every must be positive");
  const bool needs_unlabeled = recipe.kind == RecipeKind::kMeanTeacher || recipe.kind == RecipeKind::kPseudoLabel ||
                               recipe.kind == RecipeKind::kPr;
  std::size_t unlabeled_n = 0;
  for (const auto& [n, v] : data.unlabeled) unlabeled_n += v.size();
  if (needs_unlabeled && unlabeled_n == 0) {
    throw std::invalid_argument("recipe " + to_string(recipe.kind) + " needs an unlabeled corpus");
  }
  const bool pretext_only = recipe.kind == RecipeKind::kRotnetPretrain || recipe.kind == RecipeKind::kMocoPretrain;
  if (!pretext_only && data.labeled.empty()) throw std::invalid_argument("no labeled training data");

  RecipeResult result;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    result.metrics = MetricsLog(opts.out_dir / "metrics.csv");
  }
  Context ctx{recipe, opts, result};
  const std::uint64_t seed = opts.seed;

  std::optional<Checkpoint> init;
  if (!recipe.init_checkpoint.empty() &&
      (recipe.init != InitKind::kFresh || recipe.kind == RecipeKind::kFineTune)) {
    init = load_checkpoint(recipe.init_checkpoint);
  }
  const Checkpoint* backbone = recipe.init == InitKind::kPretext && init ? &*init : nullptr;

  switch (recipe.kind) {
    case RecipeKind::kRotnetPretrain:
    case RecipeKind::kMocoPretrain: {
      const auto kind = recipe.kind == RecipeKind::kRotnetPretrain ? PretextKind::kRotation : PretextKind::kContrast;
      result.best = pretrain(ctx, cfg, data, kind, seed);
      result.best_record = select_best_checkpoint(result.records);
      break;
    }
    case RecipeKind::kBaseline:
    case RecipeKind::kMeanTeacher:
    case RecipeKind::kFineTune: {
      Model model = fresh_model(cfg, Rng::derive(seed, kInitFinal), backbone);
      if (init && (recipe.init == InitKind::kCheckpoint || recipe.kind == RecipeKind::kFineTune)) {
        load_into(model, cfg, *init);
      }
      OptimizerConfig oc = opts.optim;
      if (recipe.kind == RecipeKind::kFineTune) oc.total_iters = recipe.fine_tune_iters;
      const auto* unl = recipe.kind == RecipeKind::kMeanTeacher ? &data.unlabeled : nullptr;
      result.best = train_recognizer(ctx, model, to_string(recipe.kind), data.labeled, data.valid, unl, oc, seed);
      break;
    }
    case RecipeKind::kPseudoLabel:
    case RecipeKind::kPr: {
      std::optional<Checkpoint> pre;
      if (recipe.kind == RecipeKind::kPr) {
        pre = backbone ? *backbone : pretrain(ctx, cfg, data, PretextKind::kRotation, seed);
        backbone = &*pre;
      }
      Model labeler = fresh_model(cfg, Rng::derive(seed, kInitLabeler), backbone);
      if (init && recipe.init == InitKind::kCheckpoint) load_into(labeler, cfg, *init);
      train_recognizer(ctx, labeler, "labeler", data.labeled, data.valid, nullptr, opts.optim, Rng::derive(seed, 100));
      std::vector<UnlabeledSample> all;
      for (const auto& [n, v] : data.unlabeled) all.insert(all.end(), v.begin(), v.end());
      result.pseudo_labels = generate_pseudo_labels(labeler, all, recipe.min_confidence, &result.pseudo_stats);
      ctx.log("pseudo-labels kept " + std::to_string(result.pseudo_stats.kept) + " of " + std::to_string(all.size()));
      if (!opts.out_dir.empty()) {
        DatasetManifest m;
        for (const auto& p : result.pseudo_labels) {
          ManifestEntry e;
          e.image = p.base.id;
          e.label = p.pseudo_label;
          e.dataset = p.base.dataset;
          e.width = p.base.image.width;
          e.height = p.base.image.height;
          e.id = p.base.id;
          e.scene = p.base.scene;
          e.confidence = p.confidence;
          m.entries.push_back(std::move(e));
        }
        save_manifest(m, opts.out_dir / "pseudo_labels.jsonl");
      }
      Model final_model = fresh_model(cfg, Rng::derive(seed, kInitFinal), backbone);
      result.best = train_recognizer(ctx, final_model, "final", with_pseudo_labels(data, result.pseudo_labels),
                                     data.valid, nullptr, opts.optim, Rng::derive(seed, 200));
      break;
    }
  }
  if (!opts.out_dir.empty()) save_checkpoint(result.best, opts.out_dir / "final.ckpt");
  return result;
}

}  // namespace strfew
