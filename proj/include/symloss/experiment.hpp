// Copyright 2026 The symloss Authors
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

// Training experiments driven by a config file: one run per
// (loss, noise setting, seed) cell, per-epoch histories, and loss x noise
// accuracy sweeps aggregated over seeds.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "symloss/config.hpp"
#include "symloss/core_math.hpp"
#include "symloss/data.hpp"
#include "symloss/error.hpp"
#include "symloss/losses.hpp"
#include "symloss/models.hpp"
#include "symloss/noise.hpp"
#include "symloss/optim.hpp"
#include "symloss/text.hpp"

namespace symloss {

/// Runs fn(0..n-1) on up to `threads` workers. fn must only touch slot i.
/// The first exception thrown by any call is rethrown after the workers stop.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

/// One noise column of an experiment, as written in the config:
///   symmetric:<eta>                 uniform flips (`none` means symmetric:0)
///   classcond:<e_1>/<e_2>/...       per-class rates, flips spread evenly
///   matrix:<path>                   noise matrix file
///   cc-random:<row_noise_max>       fresh random diagonally dominant matrix per seed
///   nonuniform:<slope>/<offset>/<cap>
struct NoiseSetting {
  std::string desc;
  std::optional<NoiseModel> fixed;
  double row_noise_max = 0.0;  // cc-random only

  /// The channel used for a run with the given seed.
  NoiseModel realize(std::size_t k, std::uint64_t seed) const {
    if (fixed) {
      validate(*fixed, k);
      return *fixed;
    }
    Rng rng(Rng::derive(seed, 4));
    return ClassConditionalNoise{random_diag_dominant(k, row_noise_max, rng)};
  }

  /// desc with characters unsafe in file names replaced.
  std::string file_tag() const {
    std::string out;
    for (char c : desc) {
      if (c == ':') out += '-';
      else if (c == '/' || c == '\\') out += '_';
      else out += c;
    }
    return out;
  }
};

inline NoiseSetting parse_noise_setting(const std::string& token,
                                        const std::filesystem::path& base_dir = {}) {
  const std::string t(text::trim(token));
  NoiseSetting s;
  s.desc = t;
  if (text::to_lower(t) == "none") {
    s.desc = "symmetric:0";
    s.fixed = SymmetricNoise{0.0};
    return s;
  }
  const std::size_t colon = t.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorKind::kInvalidInput, "noise setting '" + t + "' needs the form kind:params");
  }
  const std::string kind = text::to_lower(t.substr(0, colon));
  const std::string args = t.substr(colon + 1);
  auto reals = [&]() {
    std::vector<double> out;
    for (const auto& part : text::split(args, '/')) {
      const auto v = text::parse_real(part);
      if (!v) throw Error(ErrorKind::kInvalidInput, "bad number in noise setting '" + t + "'");
      out.push_back(*v);
    }
    return out;
  };
  if (kind == "symmetric") {
    const auto v = reals();
    if (v.size() != 1) throw Error(ErrorKind::kInvalidInput, "symmetric noise takes one rate");
    s.fixed = SymmetricNoise{v[0]};
  } else if (kind == "classcond") {
    s.fixed = SimpleClassConditionalNoise{reals()};
  } else if (kind == "matrix") {
    const std::filesystem::path p(args);
    s.fixed = ClassConditionalNoise{load_noise_matrix(p.is_absolute() ? p : base_dir / p)};
  } else if (kind == "cc-random") {
    const auto v = reals();
    if (v.size() != 1) throw Error(ErrorKind::kInvalidInput, "cc-random takes one row noise bound");
    s.row_noise_max = v[0];
  } else if (kind == "nonuniform") {
    const auto v = reals();
    if (v.size() != 3) throw Error(ErrorKind::kInvalidInput, "nonuniform takes slope/offset/cap");
    s.fixed = SimpleNonUniformNoise{v[0], v[1], v[2], 0};
  } else {
    throw Error(ErrorKind::kInvalidInput, "unknown noise kind '" + kind + "'");
  }
  return s;
}

struct DataSplit {
  LabeledDataset train;
  LabeledDataset test;
};

/// Keeps the first n rows. Rows are interleaved by class, so the class counts
/// stay within one of each other.
inline LabeledDataset take_rows(const LabeledDataset& data, std::size_t n) {
  if (n >= data.size()) return data;
  LabeledDataset out;
  out.k = data.k;
  out.features = Matrix(n, data.dim());
  std::copy_n(data.features.flat().begin(), n * data.dim(), out.features.flat().begin());
  out.labels.assign(data.labels.begin(), data.labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

/// Train and test sets drawn independently (sub-streams 0 and 1 of spec.seed).
/// A test_total of 0 means k * n_test_per_class points.
inline DataSplit make_synthetic_split(const SyntheticSpec& spec, std::size_t n_test_per_class,
                                      std::size_t test_total = 0) {
  DataSplit split;
  Rng train_rng(Rng::derive(spec.seed, 0));
  split.train = gen_blobs(spec, train_rng);
  SyntheticSpec test_spec = spec;
  test_spec.n_per_class = n_test_per_class;
  if (test_total > 0) test_spec.n_per_class = (test_total + spec.k - 1) / spec.k;
  Rng test_rng(Rng::derive(spec.seed, 1));
  split.test = gen_blobs(test_spec, test_rng);
  if (test_total > 0) split.test = take_rows(split.test, test_total);
  return split;
}

struct DataSource {
  bool synthetic = true;
  SyntheticSpec spec;
  std::size_t n_test_per_class = 100;
  std::size_t n_test_total = 0;  // overrides n_test_per_class when set
  std::filesystem::path train_csv;
  std::filesystem::path test_csv;
  std::optional<std::size_t> k;

  DataSplit load() const {
    if (synthetic) return make_synthetic_split(spec, n_test_per_class, n_test_total);
    DataSplit split;
    try {
      split.train = load_csv(train_csv, k);
      split.test = load_csv(test_csv, k ? k : std::optional<std::size_t>(split.train.k));
    } catch (const Error& e) {
      throw Error(e.kind(), std::string("loading dataset: ") + e.what());
    }
    if (split.train.dim() != split.test.dim()) {
      throw Error(ErrorKind::kDimensionMismatch, "train and test CSVs have different widths");
    }
    split.test.k = split.train.k = std::max(split.train.k, split.test.k);
    return split;
  }
};

/// Everything a train or sweep command needs.
struct ExperimentConfig {
  DataSource data;
  MlpSpec model;
  TrainConfig train;
  std::vector<LossKind> losses;
  std::vector<NoiseSetting> noises;
  std::vector<long long> seeds;
  std::size_t threads = 1;
  std::filesystem::path out_dir = "out";

  struct Checks {
    LossKind robust = LossKind::kMae;
    LossKind fragile = LossKind::kCce;
    std::string clean_noise;
    std::string noisy_noise;
    double max_robust_drop = 0.03;
  };
  std::optional<Checks> checks;
};

namespace detail {

template <class F>
auto at_line(const Config::Entry* e, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& err) {
    throw ParseError(e ? e->line : 0, err.what());
  }
}

}  // namespace detail

inline DataSource parse_data_source(const Config& cfg) {
  DataSource src;
  const std::string source = text::to_lower(cfg.get_string("data", "source", "synthetic"));
  if (source == "csv") {
    src.synthetic = false;
    src.train_csv = cfg.resolve(cfg.require("data", "train_csv").value);
    src.test_csv = cfg.resolve(cfg.require("data", "test_csv").value);
    if (cfg.has("data", "k")) src.k = cfg.get_size("data", "k", 2);
    return src;
  }
  if (source != "synthetic") {
    throw ParseError(cfg.find("data", "source")->line, "data source must be synthetic or csv");
  }
  const auto* kind = cfg.find("data", "kind");
  src.spec.kind = detail::at_line(kind, [&] {
    return parse_blob_kind(cfg.get_string("data", "kind", "separated-blobs"));
  });
  src.spec.k = cfg.get_size("data", "k", 3);
  src.spec.d = cfg.get_size("data", "d", 2);
  src.spec.n_per_class = cfg.get_size("data", "n_train_per_class", 100);
  src.n_test_per_class = cfg.get_size("data", "n_test_per_class", src.spec.n_per_class);
  src.n_test_total = cfg.get_size("data", "n_test", 0);
  src.spec.spread = cfg.get_real("data", "spread", 1.0);
  src.spec.separation = cfg.get_real("data", "separation", 1.0);
  src.spec.seed = static_cast<std::uint64_t>(cfg.get_int("data", "seed", 0));
  detail::at_line(cfg.find("data", "k"), [&] { src.spec.validate(); });
  if (src.n_test_per_class < 1) throw ParseError(0, "n_test_per_class must be >= 1");
  return src;
}

inline MlpSpec parse_model_spec(const Config& cfg, std::size_t d, std::size_t k) {
  MlpSpec spec;
  spec.input_dim = d;
  spec.output = k;
  for (long long h : cfg.get_int_list("model", "hidden", {})) {
    if (h < 1) throw ParseError(cfg.find("model", "hidden")->line, "hidden sizes must be >= 1");
    spec.hidden.push_back(static_cast<std::size_t>(h));
  }
  auto rates = cfg.get_real_list("model", "dropout", {});
  if (rates.size() == 1 && spec.hidden.size() > 1) rates.assign(spec.hidden.size(), rates[0]);
  if (spec.hidden.empty() && rates.size() == 1 && rates[0] == 0.0) rates.clear();
  spec.dropout = rates;
  spec.init_seed = static_cast<std::uint64_t>(cfg.get_int("model", "init_seed", 0));
  detail::at_line(cfg.find("model", "dropout"), [&] { spec.validate(); });
  return spec;
}

inline TrainConfig parse_train_config(const Config& cfg) {
  TrainConfig t;
  t.learning_rate = cfg.get_real("train", "learning_rate", t.learning_rate);
  t.momentum = cfg.get_real("train", "momentum", t.momentum);
  t.weight_decay = cfg.get_real("train", "weight_decay", t.weight_decay);
  t.batch_size = cfg.get_size("train", "batch_size", t.batch_size);
  t.epochs = cfg.get_size("train", "epochs", t.epochs);
  t.shuffle_seed = static_cast<std::uint64_t>(cfg.get_int("train", "shuffle_seed", 0));
  t.eval_every = cfg.get_size("train", "eval_every", t.eval_every);
  detail::at_line(cfg.find("train", "learning_rate"), [&] { t.validate(); });
  return t;
}

/// Reads an experiment config. Dataset files are not opened here.
inline ExperimentConfig parse_experiment_config(const Config& cfg) {
  ExperimentConfig exp;
  exp.data = parse_data_source(cfg);
  // CSV sources fix d and k at load time; run_cell fills them in.
  exp.model = exp.data.synthetic ? parse_model_spec(cfg, exp.data.spec.d, exp.data.spec.k)
                                 : parse_model_spec(cfg, 1, 2);
  exp.train = parse_train_config(cfg);

  const auto& loss_entry = cfg.require("experiment", "losses");
  for (const auto& l : cfg.require_list("experiment", "losses")) {
    const LossKind kind = detail::at_line(&loss_entry, [&] { return parse_loss_kind(l); });
    if (!is_differentiable(kind)) throw ParseError(loss_entry.line, "cannot train with ZeroOne");
    exp.losses.push_back(kind);
  }
  const auto& noise_entry = cfg.require("experiment", "noises");
  for (const auto& n : cfg.require_list("experiment", "noises")) {
    exp.noises.push_back(
        detail::at_line(&noise_entry, [&] { return parse_noise_setting(n, cfg.base_dir()); }));
  }
  cfg.require_list("experiment", "seeds");
  exp.seeds = cfg.get_int_list("experiment", "seeds", {});
  exp.threads = cfg.get_size("experiment", "threads", 1);
  exp.out_dir = cfg.get_string("experiment", "out", "out");

  if (cfg.has_section("checks")) {
    ExperimentConfig::Checks c;
    const auto* robust = cfg.find("checks", "robust_loss");
    const auto* fragile = cfg.find("checks", "fragile_loss");
    c.robust = detail::at_line(robust, [&] { return parse_loss_kind(cfg.get_string("checks", "robust_loss", "MAE")); });
    c.fragile = detail::at_line(fragile, [&] { return parse_loss_kind(cfg.get_string("checks", "fragile_loss", "CCE")); });
    c.clean_noise = cfg.require("checks", "clean_noise").value;
    c.noisy_noise = cfg.require("checks", "noisy_noise").value;
    c.max_robust_drop = cfg.get_real("checks", "max_robust_drop", c.max_robust_drop);
    exp.checks = c;
  }
  return exp;
}

/// One (loss, noise, seed) run.
struct CellSpec {
  LossKind loss = LossKind::kCce;
  std::size_t noise_index = 0;
  long long seed = 0;
};

struct CellResult {
  CellSpec cell;
  bool ok = false;
  std::string note;
  RunHistory history;
  std::optional<Mlp> model;
  double test_acc = std::numeric_limits<double>::quiet_NaN();
};

/// Seed streams for a run: 1 model init, 2 label noise, 3 shuffling, 4 random matrices.
inline CellResult run_cell(const ExperimentConfig& exp, const DataSplit& data, const CellSpec& cell,
                           long long seed_offset = 0) {
  CellResult result;
  result.cell = cell;
  const auto seed = static_cast<std::uint64_t>(cell.seed + seed_offset);
  const NoiseSetting& noise = exp.noises.at(cell.noise_index);

  LabeledDataset noisy_train = data.train;
  Rng noise_rng(Rng::derive(seed, 2));
  noisy_train.labels = corrupt_labels(data.train.labels, noise.realize(data.train.k, seed),
                                      data.train.k, noise_rng, &data.train.features);

  MlpSpec spec = exp.model;
  spec.input_dim = data.train.dim();
  spec.output = data.train.k;
  spec.init_seed = Rng::derive(exp.model.init_seed ^ seed, 1);
  TrainConfig tc = exp.train;
  tc.shuffle_seed = Rng::derive(exp.train.shuffle_seed ^ seed, 3);

  Mlp model = Mlp::init(spec);
  try {
    result.history = train(model, noisy_train, data.test, cell.loss, tc);
    result.ok = true;
    result.test_acc = result.history.last().test_acc;
    result.model = std::move(model);
  } catch (const TrainingDiverged& e) {
    result.note = e.what();
  }
  return result;
}

inline std::vector<CellSpec> all_cells(const ExperimentConfig& exp) {
  std::vector<CellSpec> cells;
  for (LossKind loss : exp.losses) {
    for (std::size_t n = 0; n < exp.noises.size(); ++n) {
      for (long long s : exp.seeds) cells.push_back({loss, n, s});
    }
  }
  return cells;
}

inline std::vector<CellResult> run_cells(const ExperimentConfig& exp, const DataSplit& data,
                                         long long seed_offset = 0) {
  for (const auto& noise : exp.noises) {
    try {
      noise.realize(data.train.k, 0);
    } catch (const Error& e) {
      throw Error(e.kind(), "noise setting '" + noise.desc + "': " + e.what());
    }
  }
  const auto cells = all_cells(exp);
  std::vector<CellResult> results(cells.size());
  parallel_for(cells.size(), exp.threads,
               [&](std::size_t i) { results[i] = run_cell(exp, data, cells[i], seed_offset); });
  return results;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

inline std::string cell_stem(const ExperimentConfig& exp, const CellSpec& cell, long long seed_offset) {
  return std::string(name(cell.loss)) + "_" + exp.noises[cell.noise_index].file_tag() + "_" +
         std::to_string(cell.seed + seed_offset);
}

/// Writes run_<loss>_<noise>_<seed>.csv (and model_<...>.txt) per cell.
/// Returns the cell results; diverged cells get a one-line .csv note instead.
inline std::vector<CellResult> run_train(const ExperimentConfig& exp, const std::filesystem::path& out_dir,
                                         long long seed_offset = 0) {
  const DataSplit data = exp.data.load();
  data.train.validate();
  std::filesystem::create_directories(out_dir);
  auto results = run_cells(exp, data, seed_offset);
  for (auto& r : results) {
    const std::string stem = cell_stem(exp, r.cell, seed_offset);
    if (r.ok) {
      const auto ckpt = out_dir / ("model_" + stem + ".txt");
      save_checkpoint(*r.model, ckpt);
      r.history.checkpoint = ckpt.filename().string();
      write_file(out_dir / ("run_" + stem + ".csv"), r.history.to_csv());
    } else {
      write_file(out_dir / ("run_" + stem + ".csv"),
                 "epoch,train_acc,test_acc,train_loss\n# failed: " + r.note + "\n");
    }
  }
  return results;
}

struct SweepRow {
  LossKind loss = LossKind::kCce;
  std::string noise_desc;
  double mean_acc = std::numeric_limits<double>::quiet_NaN();
  double std_acc = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_seeds = 0;
};

struct SweepCheck {
  bool configured = false;
  double robust_drop = 0.0;
  double fragile_drop = 0.0;
  bool pass = true;
  std::string line;
};

/// Per-cell final test accuracies and per-(loss, noise) mean and standard
/// deviation (sample, n - 1) over the seeds whose run completed.
struct SweepResult {
  std::vector<CellResult> cells;
  std::vector<SweepRow> rows;
  SweepCheck check;

  const SweepRow* find(LossKind loss, const std::string& noise_desc) const {
    for (const auto& r : rows) {
      if (r.loss == loss && r.noise_desc == noise_desc) return &r;
    }
    return nullptr;
  }

  std::string to_csv() const {
    std::string out = "loss,noise_desc,mean_acc,std_acc,n_seeds\n";
    for (const auto& r : rows) {
      out += std::string(name(r.loss)) + "," + r.noise_desc + "," + text::format_real(r.mean_acc) +
             "," + text::format_real(r.std_acc) + "," + std::to_string(r.n_seeds) + "\n";
    }
    return out;
  }

  /// Loss x noise accuracy table; the deviation is printed only above 0.01.
  std::string to_table(const std::vector<std::string>& noise_order) const {
    std::string out = "loss";
    for (const auto& n : noise_order) out += " | " + n;
    out += "\n";
    std::vector<LossKind> losses;
    for (const auto& r : rows) {
      if (std::find(losses.begin(), losses.end(), r.loss) == losses.end()) losses.push_back(r.loss);
    }
    for (LossKind l : losses) {
      out += std::string(name(l));
      for (const auto& n : noise_order) {
        const SweepRow* r = find(l, n);
        out += " | ";
        if (!r || r->n_seeds == 0) {
          out += "n/a";
          continue;
        }
        char buf[64];
        if (r->std_acc > 0.01) {
          std::snprintf(buf, sizeof(buf), "%.4f (+-%.4f)", r->mean_acc, r->std_acc);
        } else {
          std::snprintf(buf, sizeof(buf), "%.4f", r->mean_acc);
        }
        out += buf;
      }
      out += "\n";
    }
    return out;
  }
};

inline SweepResult aggregate_sweep(const ExperimentConfig& exp, std::vector<CellResult> cells) {
  SweepResult result;
  for (LossKind loss : exp.losses) {
    for (std::size_t n = 0; n < exp.noises.size(); ++n) {
      SweepRow row;
      row.loss = loss;
      row.noise_desc = exp.noises[n].desc;
      std::vector<double> accs;
      for (const auto& c : cells) {
        if (c.cell.loss == loss && c.cell.noise_index == n && c.ok) accs.push_back(c.test_acc);
      }
      row.n_seeds = accs.size();
      if (!accs.empty()) {
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        row.mean_acc = mean;
        row.std_acc = accs.size() > 1 ? std::sqrt(var / static_cast<double>(accs.size() - 1)) : 0.0;
      }
      result.rows.push_back(row);
    }
  }
  result.cells = std::move(cells);

  if (exp.checks) {
    const auto& c = *exp.checks;
    SweepCheck& chk = result.check;
    chk.configured = true;
    const SweepRow* rc = result.find(c.robust, c.clean_noise);
    const SweepRow* rn = result.find(c.robust, c.noisy_noise);
    const SweepRow* fc = result.find(c.fragile, c.clean_noise);
    const SweepRow* fn = result.find(c.fragile, c.noisy_noise);
    if (!rc || !rn || !fc || !fn) {
      throw Error(ErrorKind::kInvalidInput, "[checks] names a loss or noise setting not in the sweep");
    }
    chk.robust_drop = rc->mean_acc - rn->mean_acc;
    chk.fragile_drop = fc->mean_acc - fn->mean_acc;
    // NaN (no completed seeds) fails both comparisons.
    chk.pass = std::abs(chk.robust_drop) <= c.max_robust_drop && chk.fragile_drop > chk.robust_drop;
    chk.line = "check=sweep robust_loss=" + std::string(name(c.robust)) +
               " robust_drop=" + text::format_short(chk.robust_drop, 6) +
               " max_robust_drop=" + text::format_short(c.max_robust_drop, 6) +
               " fragile_loss=" + std::string(name(c.fragile)) +
               " fragile_drop=" + text::format_short(chk.fragile_drop, 6) +
               " clean=" + c.clean_noise + " noisy=" + c.noisy_noise +
               " pass=" + (chk.pass ? "true" : "false");
  }
  return result;
}

/// Trains every cell and writes sweep.csv, sweep_cells.csv, sweep_table.txt
/// and, when [checks] is configured, sweep_checks.txt.
inline SweepResult run_sweep(const ExperimentConfig& exp, const std::filesystem::path& out_dir,
                             long long seed_offset = 0) {
  const DataSplit data = exp.data.load();
  std::filesystem::create_directories(out_dir);
  SweepResult result = aggregate_sweep(exp, run_cells(exp, data, seed_offset));

  std::string cells_csv = "loss,noise_desc,seed,test_acc,note\n";
  for (const auto& c : result.cells) {
    cells_csv += std::string(name(c.cell.loss)) + "," + exp.noises[c.cell.noise_index].desc + "," +
                 std::to_string(c.cell.seed + seed_offset) + "," + text::format_real(c.test_acc) +
                 "," + (c.ok ? "" : "\"" + c.note + "\"") + "\n";
  }
  std::vector<std::string> noise_order;
  for (const auto& n : exp.noises) noise_order.push_back(n.desc);
  write_file(out_dir / "sweep.csv", result.to_csv());
  write_file(out_dir / "sweep_cells.csv", cells_csv);
  write_file(out_dir / "sweep_table.txt", result.to_table(noise_order));
  if (result.check.configured) write_file(out_dir / "sweep_checks.txt", result.check.line + "\n");
  return result;
}

}  // namespace symloss
