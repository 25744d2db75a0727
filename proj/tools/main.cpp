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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "strfew/corpus/image_io.hpp"
#include "strfew/corpus/manifest.hpp"
#include "strfew/corpus/pack.hpp"
#include "strfew/corpus/prepare.hpp"
#include "strfew/eval.hpp"
#include "strfew/model/checkpoint.hpp"
#include "strfew/model/model.hpp"
#include "strfew/ssl.hpp"
#include "strfew/toy.hpp"
#include "strfew/train/recipe.hpp"
#include "strfew/train/run_config.hpp"

namespace fs = std::filesystem;
using namespace strfew;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;
constexpr char kDataRootEnv[] = "STRFEW_DATA_ROOT";

struct Common {
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool deterministic = false;
  int workers = 0;
  bool overwrite = false;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--seed", c.seed, "Seed for all randomness")->each([&c](const std::string&) { c.seed_set = true; });
  cmd->add_flag("--deterministic", c.deterministic, "Single worker, reproducible run");
  cmd->add_option("--workers", c.workers, "Data loading workers")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--overwrite", c.overwrite, "Replace existing outputs");
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
}

fs::path data_root() {
  const char* v = std::getenv(kDataRootEnv);
  return v ? fs::path(v) : fs::path();
}

fs::path resolve_input(const std::string& p) {
  fs::path path(p);
  const fs::path root = data_root();
  if (path.is_relative() && !root.empty() && !fs::exists(path)) return root / path;
  return path;
}

bool skip_existing(const fs::path& marker, bool overwrite) {
  if (fs::exists(marker) && !overwrite) {
    std::cout << marker.string() << " exists; skipping (pass --overwrite to replace)\n";
    return true;
  }
  return false;
}

void log_line(const std::string& msg) { std::cerr << msg << "\n"; }

StrModel<float> load_model(const fs::path& path) {
  const Checkpoint c = load_checkpoint(path);
  const ModelConfig cfg = c.config();
  StrModel<float> model(cfg, 0);
  load_into(model, cfg, c);
  return model;
}

// ---------------------------------------------------------------------------
// toygen

struct ToygenArgs {
  Common common;
  int words = 50;
  int samples_per_word = 20;
  int unlabeled_per_word = 0;
  std::string vocabulary;
};

int run_toygen(const ToygenArgs& a) {
  const fs::path out = a.common.out;
  if (skip_existing(out / "labeled.jsonl", a.common.overwrite)) return 0;
  ToyCorpusSpec spec;
  if (!a.vocabulary.empty()) {
    std::ifstream f(resolve_input(a.vocabulary));
    if (!f) throw std::runtime_error("cannot read vocabulary " + a.vocabulary);
    for (std::string w; std::getline(f, w);) {
      if (!w.empty()) spec.vocabulary.push_back(w);
    }
  } else {
    spec.vocabulary = ToyCorpusSpec::default_vocabulary();
  }
  if (a.words < static_cast<int>(spec.vocabulary.size())) spec.vocabulary.resize(static_cast<std::size_t>(a.words));
  spec.samples_per_word = a.samples_per_word;
  spec.unlabeled_per_word = a.unlabeled_per_word;
  spec.seed = a.common.seed;
  const ToyCorpus corpus = render_toy_corpus(spec, out);
  std::cout << "wrote " << corpus.labeled.entries.size() << " labeled";
  if (corpus.unlabeled) std::cout << " and " << corpus.unlabeled->entries.size() << " unlabeled";
  std::cout << " renders to " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// prepare

struct PrepareArgs {
  Common common;
  std::vector<std::string> manifests;
  std::string policy;
  std::vector<double> ratios{0.9, 0.1};
  bool no_dedup = false;
};

int run_prepare(const PrepareArgs& a) {
  const fs::path out = a.common.out;
  if (skip_existing(out / kPackIndexName, a.common.overwrite)) return 0;
  DatasetManifest merged;
  for (const auto& m : a.manifests) {
    const fs::path path = resolve_input(m);
    DatasetManifest part = load_manifest(path);
    for (auto& e : part.entries) {
      fs::path img = e.image;
      if (img.is_relative()) e.image = (path.parent_path() / img).string();
      merged.entries.push_back(std::move(e));
    }
  }
  PrepareOptions opts;
  if (!a.policy.empty()) opts.policies = load_filter_policies(resolve_input(a.policy));
  opts.split.ratios = a.ratios;
  opts.split.seed = a.common.seed;
  opts.dedup_against_eval = !a.no_dedup;
  const PrepareReport report = prepare_corpus(merged, out, opts);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "dataset\tsplit\tcount\n";
  for (const auto& [key, n] : report.counts) std::cout << key.first << "\t" << key.second << "\t" << n << "\n";
  for (const auto& [dataset, counts] : report.rejected) {
    std::cout << "rejected " << dataset << ":";
    for (int r = 0; r < kFilterRuleCount; ++r) {
      std::cout << " " << to_string(static_cast<FilterRule>(r)) << "=" << counts[static_cast<std::size_t>(r)];
    }
    std::cout << "\n";
  }
  if (!report.duplicates.empty()) std::cout << "duplicates removed: " << report.duplicates.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train / pretrain

struct TrainArgs {
  Common common;
  std::string config;
  std::string recipe;
  std::vector<std::string> overrides;
  int seeds = 1;
  std::string sweep;
};

struct RunOutcome {
  std::uint64_t seed = 0;
  double val_accuracy = 0.0;
};

RunOutcome train_one(RunConfig rc, const fs::path& out, const Common& common) {
  rc.options.out_dir = out;
  rc.options.log = log_line;
  if (common.deterministic) rc.options.workers = 0;
  if (rc.data.root.empty()) rc.data.root = data_root();
  if (common.overwrite) fs::remove(out / "metrics.csv");
  const TrainData data = load_train_data(rc.data, rc.options.seed);
  const RecipeResult result = run_recipe(rc.recipe, data, rc.model, rc.options);

  nlohmann::json j;
  j["recipe"] = to_string(rc.recipe.kind);
  j["seed"] = rc.options.seed;
  j["label_ratio"] = rc.data.label_ratio;
  j["iterations"] = rc.options.optim.total_iters;
  j["best_iteration"] = result.best_record.iteration;
  j["val_accuracy"] = result.best_record.val_accuracy;
  j["models_trained"] = result.models_trained;
  j["infeasible_ctc"] = result.infeasible_ctc;
  if (result.pretext) j["pretext_accuracy"] = result.pretext_accuracy;
  if (!result.pseudo_labels.empty() || result.pseudo_stats.kept > 0) {
    j["pseudo_labels_kept"] = result.pseudo_stats.kept;
    j["pseudo_labels_dropped_empty"] = result.pseudo_stats.dropped_empty;
    j["pseudo_labels_dropped_low_confidence"] = result.pseudo_stats.dropped_low_confidence;
  }
  j["model"] = rc.model.to_text();
  std::ofstream(out / "run.json") << j.dump(2) << "\n";
  std::cout << out.string() << ": best validation accuracy " << result.best_record.val_accuracy << " at iteration "
            << result.best_record.iteration << "\n";
  return {rc.options.seed, result.best_record.val_accuracy};
}

int run_train_set(RunConfig rc, const fs::path& out, const TrainArgs& a) {
  if (a.common.seed_set) rc.options.seed = a.common.seed;
  if (a.common.workers > 0) rc.options.workers = a.common.workers;
  if (a.seeds <= 1) {
    if (skip_existing(out / "final.ckpt", a.common.overwrite)) return 0;
    train_one(rc, out, a.common);
    return 0;
  }
  std::vector<RunOutcome> runs;
  const std::uint64_t base = rc.options.seed;
  for (int s = 0; s < a.seeds; ++s) {
    RunConfig r = rc;
    r.options.seed = base + static_cast<std::uint64_t>(s);
    const fs::path dir = out / ("seed_" + std::to_string(r.options.seed));
    if (skip_existing(dir / "final.ckpt", a.common.overwrite)) continue;
    runs.push_back(train_one(r, dir, a.common));
  }
  if (!runs.empty()) {
    double sum = 0.0;
    std::cout << "seed\tval_accuracy\n";
    for (const auto& r : runs) {
      std::cout << r.seed << "\t" << r.val_accuracy << "\n";
      sum += r.val_accuracy;
    }
    std::cout << "mean\t" << sum / static_cast<double>(runs.size()) << "\n";
  }
  return 0;
}

// Sweep file: one run per line, "<name> <config> [section.key=value ...]".
int run_sweep(const TrainArgs& a) {
  std::ifstream f(resolve_input(a.sweep));
  if (!f) throw std::runtime_error("cannot read sweep file " + a.sweep);
  int line_no = 0;
  for (std::string line; std::getline(f, line);) {
    ++line_no;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream in(line);
    std::string name, config;
    if (!(in >> name)) continue;
    if (!(in >> config)) throw ConfigError(a.sweep + ":" + std::to_string(line_no) + ": missing config path");
    std::vector<std::string> overrides = a.overrides;
    for (std::string o; in >> o;) overrides.push_back(o);
    if (!a.recipe.empty()) overrides.push_back("recipe.name=" + a.recipe);
    std::cout << "sweep run " << name << "\n";
    run_train_set(load_run_config(resolve_input(config), overrides), fs::path(a.common.out) / name, a);
  }
  return 0;
}

int run_train(const TrainArgs& a) {
  if (!a.sweep.empty()) return run_sweep(a);
  std::vector<std::string> overrides = a.overrides;
  if (!a.recipe.empty()) overrides.push_back("recipe.name=" + a.recipe);
  const fs::path cfg = a.config.empty() ? fs::path() : resolve_input(a.config);
  return run_train_set(load_run_config(cfg, overrides), a.common.out, a);
}

// ---------------------------------------------------------------------------
// pseudolabel

struct PseudolabelArgs {
  Common common;
  std::string checkpoint;
  std::vector<std::string> data;
  double min_confidence = 0.0;
};

int run_pseudolabel(const PseudolabelArgs& a) {
  const fs::path out = a.common.out;
  if (skip_existing(out, a.common.overwrite)) return 0;
  StrModel<float> model = load_model(resolve_input(a.checkpoint));
  std::vector<UnlabeledSample> pool;
  for (const auto& d : a.data) {
    const auto packed = PackedDataset::open(resolve_input(d));
    auto u = packed.unlabeled();
    pool.insert(pool.end(), u.begin(), u.end());
  }
  PseudoLabelStats stats;
  const auto labels = generate_pseudo_labels(model, pool, a.min_confidence, &stats);
  const fs::path images = out.parent_path() / (out.stem().string() + "_images");
  fs::create_directories(images);
  DatasetManifest m;
  for (const auto& p : labels) {
    std::string file = p.base.id;
    for (char& c : file) {
      if (c == '/') c = '_';
    }
    file += p.base.image.channels == 1 ? ".pgm" : ".ppm";
    write_pnm(p.base.image, images / file);
    ManifestEntry e;
    e.image = (fs::path(images.filename()) / file).string();
    e.label = p.pseudo_label;
    e.dataset = p.base.dataset + "_pl";
    e.width = p.base.image.width;
    e.height = p.base.image.height;
    e.id = p.base.id;
    e.scene = p.base.scene;
    e.confidence = p.confidence;
    e.split = "train";
    m.entries.push_back(std::move(e));
  }
  save_manifest(m, out);
  std::cout << "kept " << stats.kept << " of " << pool.size() << " (empty " << stats.dropped_empty
            << ", low confidence " << stats.dropped_low_confidence << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  Common common;
  std::string checkpoint;
  std::vector<std::string> splits;
  std::string split = "eval";
  std::string json;
};

int run_eval(const EvalArgs& a) {
  if (!a.json.empty() && skip_existing(a.json, a.common.overwrite)) return 0;
  StrModel<float> model = load_model(resolve_input(a.checkpoint));
  std::vector<std::pair<std::string, std::vector<LabeledSample>>> sets;
  for (const auto& s : a.splits) {
    const auto packed = PackedDataset::open(resolve_input(s));
    std::set<std::string> labeled;
    for (const auto& r : packed.records()) {
      if (r.label) labeled.insert(r.dataset);
    }
    for (const auto& name : packed.datasets()) {
      if (labeled.count(name)) sets.emplace_back(name, packed.labeled(a.split, name));
    }
  }
  EvalReport report = evaluate(model, sets);
  report.checkpoint_id = load_checkpoint(resolve_input(a.checkpoint)).digest;
  std::cout << report.table(fs::path(a.checkpoint).stem().string());
  if (!a.json.empty()) std::ofstream(a.json) << report.to_json() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  Common common;
  std::vector<std::string> runs;
  std::string mode = "ratio";
};

int run_report(const ReportArgs& a) {
  const fs::path out = a.common.out;
  if (skip_existing(out, a.common.overwrite)) return 0;
  std::vector<PlotSeries> series;
  std::string title, x_label;
  if (a.mode == "curve") {
    // Validation accuracy against iteration, one series per metrics log.
    for (const auto& r : a.runs) {
      fs::path p = resolve_input(r);
      if (fs::is_directory(p)) p /= "metrics.csv";
      PlotSeries s{p.parent_path().filename().string(), {}};
      for (const auto& row : MetricsLog::read(p)) {
        if (row.accuracy && row.phase.ends_with("/valid")) s.points.emplace_back(row.iter, *row.accuracy);
      }
      series.push_back(std::move(s));
    }
    title = "validation accuracy";
    x_label = "iteration";
  } else if (a.mode == "ratio") {
    // Mean best validation accuracy against labeled fraction, per recipe.
    std::map<std::string, std::map<double, std::vector<double>>> grouped;
    for (const auto& r : a.runs) {
      std::vector<fs::path> found;
      const fs::path base = resolve_input(r);
      if (fs::is_regular_file(base)) {
        found.push_back(base);
      } else {
        for (const auto& e : fs::recursive_directory_iterator(base)) {
          if (e.path().filename() == "run.json") found.push_back(e.path());
        }
      }
      for (const auto& p : found) {
        std::ifstream f(p);
        const auto j = nlohmann::json::parse(f);
        grouped[j.at("recipe").get<std::string>()][j.at("label_ratio").get<double>() * 100.0].push_back(
            j.at("val_accuracy").get<double>());
      }
    }
    for (const auto& [recipe, points] : grouped) {
      PlotSeries s{recipe, {}};
      for (const auto& [x, ys] : points) {
        double sum = 0.0;
        for (double y : ys) sum += y;
        s.points.emplace_back(x, sum / static_cast<double>(ys.size()));
      }
      series.push_back(std::move(s));
    }
    title = "accuracy vs labeled data";
    x_label = "labeled data (%)";
  } else {
    throw CLI::ValidationError("--mode", "expected ratio or curve");
  }
  if (series.empty()) throw std::runtime_error("no runs found");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream(out) << render_svg_plot(series, title, x_label, "accuracy (%)");
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene text recognition training with few real labels"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  ToygenArgs toygen;
  auto* c_toy = app.add_subcommand("toygen", "Render the bundled toy word corpus");
  add_common(c_toy, toygen.common);
  c_toy->add_option("--words", toygen.words, "Number of vocabulary words")->check(CLI::PositiveNumber);
  c_toy->add_option("--samples-per-word", toygen.samples_per_word)->check(CLI::PositiveNumber);
  c_toy->add_option("--unlabeled-per-word", toygen.unlabeled_per_word)->check(CLI::NonNegativeNumber);
  c_toy->add_option("--vocabulary", toygen.vocabulary, "File with one word per line");

  PrepareArgs prep;
  auto* c_prep = app.add_subcommand("prepare", "Filter, deduplicate, split and pack manifests");
  add_common(c_prep, prep.common);
  c_prep->add_option("--manifest", prep.manifests, "Manifest file (repeatable)")->required();
  c_prep->add_option("--policy", prep.policy, "Per-dataset filter policy file");
  c_prep->add_option("--ratios", prep.ratios, "Split ratios (train valid [eval])")->delimiter(',');
  c_prep->add_flag("--no-dedup", prep.no_dedup, "Keep samples duplicating eval images");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Run a training recipe");
  add_common(c_train, train.common);
  c_train->add_option("--config", train.config, "Run config file");
  c_train->add_option("--recipe", train.recipe, "baseline|mean_teacher|pseudo_label|pr|fine_tune|...");
  c_train->add_option("--set", train.overrides, "Override, section.key=value (repeatable)");
  c_train->add_option("--seeds", train.seeds, "Number of seeds to run")->check(CLI::PositiveNumber);
  c_train->add_option("--sweep", train.sweep, "Sweep file of run configs");

  TrainArgs pre;
  std::string pre_kind = "rotnet";
  auto* c_pre = app.add_subcommand("pretrain", "Self-supervised backbone pretraining");
  add_common(c_pre, pre.common);
  c_pre->add_option("--config", pre.config, "Run config file");
  c_pre->add_option("--kind", pre_kind, "rotnet|moco")->check(CLI::IsMember({"rotnet", "moco"}));
  c_pre->add_option("--set", pre.overrides, "Override, section.key=value (repeatable)");

  PseudolabelArgs pl;
  auto* c_pl = app.add_subcommand("pseudolabel", "Write a pseudo-labeled manifest");
  add_common(c_pl, pl.common);
  c_pl->add_option("--checkpoint", pl.checkpoint)->required();
  c_pl->add_option("--data", pl.data, "Packed unlabeled corpus (repeatable)")->required();
  c_pl->add_option("--min-confidence", pl.min_confidence)->check(CLI::Range(0.0, 1.0));

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Word accuracy per dataset and over the union");
  add_common(c_eval, ev.common, false);
  c_eval->add_option("--checkpoint", ev.checkpoint)->required();
  c_eval->add_option("--splits", ev.splits, "Packed corpora to evaluate")->required();
  c_eval->add_option("--split", ev.split, "Split name inside each corpus");
  c_eval->add_option("--json", ev.json, "Also write the report as JSON");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Plot accuracy from run outputs");
  add_common(c_rep, rep.common);
  c_rep->add_option("--runs", rep.runs, "Run directories, run.json or metrics.csv files")->required();
  c_rep->add_option("--mode", rep.mode, "ratio|curve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsageError;
  }

  try {
    if (*c_toy) return run_toygen(toygen);
    if (*c_prep) return run_prepare(prep);
    if (*c_train) return run_train(train);
    if (*c_pre) {
      pre.overrides.push_back("recipe.name=" + pre_kind + "_pretrain");
      return run_train(pre);
    }
    if (*c_pl) return run_pseudolabel(pl);
    if (*c_eval) return run_eval(ev);
    if (*c_rep) return run_report(rep);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
