#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "soforest/soforest.hpp"

namespace {

struct DataOptions {
  std::string path;
  std::string format = "csv";
  std::string label;
  std::size_t features = 0;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--data", d.path, "input dataset path")->required();
  cmd->add_option("--format", d.format, "input format")
      ->check(CLI::IsMember({"csv", "libsvm"}));
  cmd->add_option("--features", d.features, "feature count (required for libsvm)");
  cmd->add_option("--label", d.label, "csv label column: header name or 0-based index");
}

soforest::ColumnarDataset load_data(const DataOptions& d) {
  if (d.format == "libsvm") {
    if (d.features == 0)
      throw std::runtime_error("--features is required with --format libsvm");
    return soforest::load_libsvm<float>(d.path, d.features);
  }
  soforest::CsvOptions opt;
  if (!d.label.empty()) {
    const bool digits = std::all_of(d.label.begin(), d.label.end(),
                                    [](unsigned char c) { return std::isdigit(c); });
    if (digits)
      opt.label_index = std::stoull(d.label);
    else
      opt.label_name = d.label;
  }
  return soforest::load_csv<float>(d.path, opt);
}

struct TrainOptions {
  soforest::TrainConfig cfg;
  std::string mode = "dynamic";
  std::int64_t breakeven = -1;
  std::uint64_t max_depth = 0;
  bool scalar_binning = false;
};

void add_train_options(CLI::App* cmd, TrainOptions& t) {
  cmd->add_option("--trees", t.cfg.n_trees, "number of trees");
  cmd->add_option("--mode", t.mode, "split finding mode")
      ->check(CLI::IsMember({"exact", "histogram", "dynamic"}));
  cmd->add_option("--bins", t.cfg.bin_count, "histogram bin count");
  cmd->add_flag("--scalar-binning", t.scalar_binning, "disable the two-level binning table");
  cmd->add_option("--breakeven", t.breakeven,
                  "dynamic mode crossover node size; -1 calibrates at startup");
  cmd->add_option("--bootstrap", t.cfg.bootstrap_fraction, "per-tree sample fraction");
  cmd->add_option("--max-depth", t.max_depth, "maximum tree depth; 0 = unlimited");
  cmd->add_option("--min-samples", t.cfg.min_samples_split, "minimum node size to split");
  cmd->add_option("--retries", t.cfg.max_split_retries, "projection resamples per node");
  cmd->add_option("--workers", t.cfg.n_workers, "training threads");
  cmd->add_option("--seed", t.cfg.seed, "random seed");
}

soforest::TrainConfig resolve_config(const TrainOptions& t) {
  soforest::TrainConfig cfg = t.cfg;
  cfg.mode = *soforest::parse_split_mode(t.mode);
  cfg.two_level_binning = !t.scalar_binning;
  if (t.breakeven >= 0) cfg.breakeven = static_cast<std::size_t>(t.breakeven);
  if (t.max_depth > 0) cfg.max_depth = t.max_depth;
  if (cfg.two_level_binning && cfg.bin_count != 64 && cfg.bin_count != 256)
    std::cerr << "warning: two-level binning supports 64 or 256 bins; "
                 "falling back to scalar binning\n";
  return cfg;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error(path + ": cannot open file for writing");
  return file;
}

int run_train(const DataOptions& d, const TrainOptions& t, const std::string& out_path) {
  const soforest::ColumnarDataset data = load_data(d);
  const soforest::TrainConfig cfg = resolve_config(t);
  soforest::Stopwatch clock;
  const soforest::Forest forest = soforest::train_forest(data, cfg);
  const double seconds = clock.seconds();
  soforest::save_model(forest, out_path);

  char line[256];
  if (cfg.mode == soforest::SplitMode::kDynamic) {
    std::snprintf(line, sizeof(line),
                  "trained %zu trees in %.3f s (mode=%s, bins=%zu, breakeven=%zu, workers=%zu)",
                  forest.trees.size(), seconds, soforest::split_mode_name(cfg.mode),
                  cfg.bin_count, forest.breakeven, cfg.n_workers);
  } else {
    std::snprintf(line, sizeof(line), "trained %zu trees in %.3f s (mode=%s, bins=%zu, workers=%zu)",
                  forest.trees.size(), seconds, soforest::split_mode_name(cfg.mode),
                  cfg.bin_count, cfg.n_workers);
  }
  std::cout << line << "\n";
  return 0;
}

int run_predict(const DataOptions& d, const std::string& model_path,
                const std::string& out_path) {
  const soforest::Forest model = soforest::load_model<float>(model_path);
  const soforest::ColumnarDataset data = load_data(d);

  std::vector<std::int32_t> to_model(data.label_names().size(), -1);
  for (std::size_t i = 0; i < data.label_names().size(); ++i) {
    for (std::size_t j = 0; j < model.label_names.size(); ++j) {
      if (data.label_names()[i] == model.label_names[j]) {
        to_model[i] = static_cast<std::int32_t>(j);
        break;
      }
    }
  }

  std::ofstream file;
  std::ostream& out = open_output(out_path, file);
  out << "prediction";
  for (const auto& name : model.label_names) out << ",vote_" << name;
  out << "\n";

  char buf[64];
  std::size_t correct = 0;
  std::vector<float> row(data.n_features());
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    for (std::size_t f = 0; f < row.size(); ++f) row[f] = data.value(i, f);
    const soforest::Prediction p = soforest::predict(model, std::span<const float>(row));
    out << model.label_names[p.label];
    for (double v : p.votes) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out << ',';
      out.write(buf, ptr - buf);
    }
    out << "\n";
    if (to_model[data.labels()[i]] == p.label) ++correct;
  }
  if (!out) throw std::runtime_error("writing predictions failed");

  std::snprintf(buf, sizeof(buf), "accuracy %.4f (%zu samples)",
                static_cast<double>(correct) / static_cast<double>(data.n_samples()),
                data.n_samples());
  std::cerr << buf << "\n";
  return 0;
}

int run_calibrate(const soforest::CalibrationOptions& opt, const std::string& out_path) {
  const soforest::CrossoverCalibration cal = soforest::calibrate_crossover<float>(opt);
  std::cout << "breakeven " << cal.breakeven << (cal.fallback ? " (fallback)" : "") << "\n";

  std::ofstream file;
  std::ostream& out = open_output(out_path, file);
  out << "n,exact_seconds,histogram_seconds\n";
  char buf[64];
  for (const auto& s : cal.samples) {
    out << s.n << ',';
    auto [p1, e1] = std::to_chars(buf, buf + sizeof(buf), s.exact_seconds);
    out.write(buf, p1 - buf);
    out << ',';
    auto [p2, e2] = std::to_chars(buf, buf + sizeof(buf), s.histogram_seconds);
    out.write(buf, p2 - buf);
    out << "\n";
  }
  return 0;
}

int run_bench(const DataOptions& d, bool synthetic, std::size_t samples, std::size_t features,
              std::uint64_t gen_seed, const TrainOptions& t, const std::string& profile,
              const std::string& out_path) {
  const soforest::ColumnarDataset data =
      synthetic ? soforest::generate_trunk<float>(samples, features, gen_seed) : load_data(d);
  const soforest::TrainConfig cfg = resolve_config(t);

  std::ofstream file;
  std::ostream& out = open_output(out_path, file);
  if (profile == "depth")
    soforest::write_csv(soforest::bench_depth_profile(data, cfg), out);
  else if (profile == "phase")
    soforest::write_csv(soforest::bench_phase_profile(data, cfg), out);
  else
    soforest::write_csv(soforest::bench_mode_comparison(data, cfg), out);
  if (!out) throw std::runtime_error("writing benchmark output failed");
  return 0;
}

int run_gen_data(const std::string& out_path, std::size_t samples, std::size_t features,
                 std::uint64_t seed) {
  const soforest::ColumnarDataset data = soforest::generate_trunk<float>(samples, features, seed);
  soforest::write_csv(data, out_path);
  std::cout << "wrote " << out_path << " (" << samples << " samples, " << features
            << " features)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse oblique random forest training and benchmarking"};
  app.require_subcommand(1);

  DataOptions train_data;
  TrainOptions train_opts;
  std::string train_out;
  CLI::App* train_cmd = app.add_subcommand("train", "train a forest and save the model");
  add_data_options(train_cmd, train_data);
  add_train_options(train_cmd, train_opts);
  train_cmd->add_option("--out", train_out, "model output path")->required();

  DataOptions predict_data;
  std::string predict_model, predict_out;
  CLI::App* predict_cmd = app.add_subcommand("predict", "predict with a saved model");
  add_data_options(predict_cmd, predict_data);
  predict_cmd->add_option("--model", predict_model, "model path")->required();
  predict_cmd->add_option("--out", predict_out, "predictions csv path (default: stdout)");

  soforest::CalibrationOptions cal_opts;
  double cal_budget_ms = 100.0;
  std::string cal_out;
  bool cal_scalar = false;
  CLI::App* cal_cmd =
      app.add_subcommand("calibrate", "measure the exact/histogram crossover node size");
  cal_cmd->add_option("--budget-ms", cal_budget_ms, "time budget in milliseconds");
  cal_cmd->add_option("--n-min", cal_opts.n_min, "smallest probed node size");
  cal_cmd->add_option("--n-max", cal_opts.n_max, "largest probed node size");
  cal_cmd->add_option("--bins", cal_opts.bin_count, "histogram bin count");
  cal_cmd->add_flag("--scalar-binning", cal_scalar, "disable the two-level binning table");
  cal_cmd->add_option("--reps", cal_opts.repetitions, "runs per probe (median taken)");
  cal_cmd->add_option("--seed", cal_opts.seed, "random seed");
  cal_cmd->add_option("--out", cal_out, "per-size timings csv path (default: stdout)");

  DataOptions bench_data;
  TrainOptions bench_opts;
  std::string bench_profile, bench_out;
  bool bench_synthetic = false;
  std::size_t bench_samples = 10000, bench_features = 64;
  std::uint64_t bench_gen_seed = 0;
  CLI::App* bench_cmd = app.add_subcommand("bench", "training time profiles as csv");
  bench_cmd->add_option("--profile", bench_profile, "which profile to run")
      ->check(CLI::IsMember({"depth", "phase", "mode"}))
      ->required();
  bench_cmd->add_option("--data", bench_data.path, "input dataset path");
  bench_cmd->add_option("--format", bench_data.format, "input format")
      ->check(CLI::IsMember({"csv", "libsvm"}));
  bench_cmd->add_option("--features", bench_data.features, "feature count (libsvm)");
  bench_cmd->add_option("--label", bench_data.label, "csv label column");
  bench_cmd->add_flag("--synthetic", bench_synthetic, "benchmark on generated data");
  bench_cmd->add_option("--samples", bench_samples, "synthetic sample count");
  bench_cmd->add_option("--gen-features", bench_features, "synthetic feature count");
  bench_cmd->add_option("--gen-seed", bench_gen_seed, "synthetic data seed");
  add_train_options(bench_cmd, bench_opts);
  bench_cmd->add_option("--out", bench_out, "csv output path (default: stdout)");

  std::string gen_out;
  std::size_t gen_samples = 1000, gen_features = 10;
  std::uint64_t gen_seed = 0;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "write a synthetic two-class csv");
  gen_cmd->add_option("--out", gen_out, "csv output path")->required();
  gen_cmd->add_option("--samples", gen_samples, "sample count");
  gen_cmd->add_option("--features", gen_features, "feature count");
  gen_cmd->add_option("--seed", gen_seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(train_cmd)) return run_train(train_data, train_opts, train_out);
    if (app.got_subcommand(predict_cmd))
      return run_predict(predict_data, predict_model, predict_out);
    if (app.got_subcommand(cal_cmd)) {
      cal_opts.budget_seconds = cal_budget_ms / 1000.0;
      cal_opts.two_level = !cal_scalar;
      return run_calibrate(cal_opts, cal_out);
    }
    if (app.got_subcommand(bench_cmd)) {
      if (!bench_synthetic && bench_data.path.empty())
        throw std::runtime_error("bench needs --data or --synthetic");
      return run_bench(bench_data, bench_synthetic, bench_samples, bench_features,
                       bench_gen_seed, bench_opts, bench_profile, bench_out);
    }
    if (app.got_subcommand(gen_cmd))
      return run_gen_data(gen_out, gen_samples, gen_features, gen_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
