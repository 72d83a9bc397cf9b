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

// Command-line front end: verify, train, sweep, datagen, consistency.
// Exit codes: 0 ok, 1 a check failed, 2 usage, config or input error.

#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "symloss/config.hpp"
#include "symloss/consistency.hpp"
#include "symloss/data.hpp"
#include "symloss/error.hpp"
#include "symloss/experiment.hpp"
#include "symloss/instances.hpp"
#include "symloss/verify.hpp"

namespace symloss {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

struct CommonOptions {
  std::string config;
  std::string out;
  long long seed_offset = 0;
};

struct DatagenOptions {
  std::string kind = "separated-blobs";
  long long k = 3;
  long long d = 2;
  long long n = 100;
  long long n_test = -1;  // default: same as n
  double spread = 1.0;
  double separation = 1.0;
  long long seed = 0;
  std::string out = ".";
};

namespace detail {

inline Config load_config(const std::string& path) {
  try {
    return Config::load(path);
  } catch (const ParseError& e) {
    throw Error(ErrorKind::kParse, path + ": " + e.what());
  }
}

inline std::filesystem::path out_dir(const CommonOptions& opt, const std::filesystem::path& fallback) {
  return opt.out.empty() ? fallback : std::filesystem::path(opt.out);
}

inline int cmd_verify(const CommonOptions& opt, std::ostream& out) {
  const Config cfg = load_config(opt.config);
  VerifySuiteConfig suite = parse_verify_config(cfg);
  suite.seed += static_cast<std::uint64_t>(opt.seed_offset);
  const auto dir = out_dir(opt, cfg.get_string("verify", "out", "."));
  std::filesystem::create_directories(dir);
  const VerifySuiteResult result = run_verify_suite(suite);
  std::string details;
  for (const auto& d : result.details) details += d + "\n";
  write_file(dir / "verify_report.txt", result.report());
  write_file(dir / "verify_details.txt", details);
  if (result.counterexample.instance) {
    save_instance(*result.counterexample.instance, dir / "cce_counterexample.txt");
  }
  out << result.report();
  return result.all_pass() ? kExitOk : kExitCheckFailed;
}

inline int cmd_train(const CommonOptions& opt, std::ostream& out) {
  const Config cfg = load_config(opt.config);
  const ExperimentConfig exp = parse_experiment_config(cfg);
  const auto dir = out_dir(opt, exp.out_dir);
  const auto results = run_train(exp, dir, opt.seed_offset);
  int status = kExitOk;
  for (const auto& r : results) {
    out << "run loss=" << name(r.cell.loss) << " noise=" << exp.noises[r.cell.noise_index].desc
        << " seed=" << (r.cell.seed + opt.seed_offset);
    if (r.ok) {
      out << " test_acc=" << text::format_short(r.test_acc, 6) << "\n";
    } else {
      out << " failed=\"" << r.note << "\"\n";
      status = kExitCheckFailed;
    }
  }
  return status;
}

inline int cmd_sweep(const CommonOptions& opt, std::ostream& out) {
  const Config cfg = load_config(opt.config);
  const ExperimentConfig exp = parse_experiment_config(cfg);
  const auto dir = out_dir(opt, exp.out_dir);
  const SweepResult result = run_sweep(exp, dir, opt.seed_offset);
  std::vector<std::string> order;
  for (const auto& n : exp.noises) order.push_back(n.desc);
  out << result.to_table(order);
  if (result.check.configured) out << result.check.line << "\n";
  return result.check.pass ? kExitOk : kExitCheckFailed;
}

inline int cmd_consistency(const CommonOptions& opt, std::ostream& out) {
  const Config cfg = load_config(opt.config);
  const ConsistencyConfig cc = parse_consistency_config(cfg);
  const auto dir = out_dir(opt, cfg.get_string("consistency", "out", "."));
  std::filesystem::create_directories(dir);
  const ConsistencyResult result = run_consistency(cc, opt.seed_offset);
  write_file(dir / "consistency.csv", result.to_csv());
  out << result.to_csv() << result.to_line() << "\n";
  return cc.expect_shrinking && !result.shrinking() ? kExitCheckFailed : kExitOk;
}

inline int cmd_datagen(const DatagenOptions& opt, std::ostream& out) {
  if (opt.k < 2) throw Error(ErrorKind::kInvalidInput, "--k must be >= 2");
  if (opt.d < 1) throw Error(ErrorKind::kInvalidInput, "--d must be >= 1");
  if (opt.n < 1) throw Error(ErrorKind::kInvalidInput, "--n must be >= 1");
  if (opt.n_test == 0 || opt.n_test < -1) throw Error(ErrorKind::kInvalidInput, "--n-test must be >= 1");
  SyntheticSpec spec;
  spec.kind = parse_blob_kind(opt.kind);
  spec.k = static_cast<std::size_t>(opt.k);
  spec.d = static_cast<std::size_t>(opt.d);
  spec.n_per_class = static_cast<std::size_t>(opt.n);
  spec.spread = opt.spread;
  spec.separation = opt.separation;
  spec.seed = static_cast<std::uint64_t>(opt.seed);
  spec.validate();
  const std::size_t n_test = opt.n_test < 0 ? spec.n_per_class : static_cast<std::size_t>(opt.n_test);
  const DataSplit split = make_synthetic_split(spec, n_test);
  const std::filesystem::path dir(opt.out);
  std::filesystem::create_directories(dir);
  save_csv(split.train, dir / "train.csv");
  save_csv(split.test, dir / "test.csv");
  out << "wrote " << (dir / "train.csv").string() << " (" << split.train.size() << " rows) and "
      << (dir / "test.csv").string() << " (" << split.test.size() << " rows)\n";
  return kExitOk;
}

inline void add_common(CLI::App* sub, CommonOptions& opt) {
  sub->add_option("--config", opt.config, "Config file")->required();
  sub->add_option("--out", opt.out, "Output directory (overrides the config)");
  sub->add_option("--seed-offset", opt.seed_offset, "Added to every seed in the config");
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"symloss: noise-tolerant loss experiments"};
  app.require_subcommand(1);

  CommonOptions verify_opt, train_opt, sweep_opt, consistency_opt;
  DatagenOptions gen;
  auto* verify = app.add_subcommand("verify", "Run the theorem verification suite");
  auto* train_cmd = app.add_subcommand("train", "Train one run per (loss, noise, seed)");
  auto* sweep = app.add_subcommand("sweep", "Loss x noise accuracy sweep over seeds");
  auto* datagen = app.add_subcommand("datagen", "Write synthetic train/test CSVs");
  auto* consistency = app.add_subcommand("consistency", "Noisy ERM gap as the sample grows");
  detail::add_common(verify, verify_opt);
  detail::add_common(train_cmd, train_opt);
  detail::add_common(sweep, sweep_opt);
  detail::add_common(consistency, consistency_opt);

  datagen->add_option("--kind", gen.kind, "blobs or separated-blobs");
  datagen->add_option("--k", gen.k, "Number of classes");
  datagen->add_option("--d", gen.d, "Feature dimension");
  datagen->add_option("--n", gen.n, "Training points per class");
  datagen->add_option("--n-test", gen.n_test, "Test points per class (default: --n)");
  datagen->add_option("--spread", gen.spread, "Per-coordinate standard deviation");
  datagen->add_option("--separation", gen.separation, "Distance term between class means");
  datagen->add_option("--seed", gen.seed, "Random seed");
  datagen->add_option("--out", gen.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (verify->parsed()) return detail::cmd_verify(verify_opt, out);
    if (train_cmd->parsed()) return detail::cmd_train(train_opt, out);
    if (sweep->parsed()) return detail::cmd_sweep(sweep_opt, out);
    if (datagen->parsed()) return detail::cmd_datagen(gen, out);
    if (consistency->parsed()) return detail::cmd_consistency(consistency_opt, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace symloss
