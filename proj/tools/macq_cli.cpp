/*
 * Copyright 2026 The MACQ Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// macq: fit smooth classifiers and explain them by quantile-conditioned
// attributions.
//
// Exit codes: 0 ok, 2 usage/schema, 3 training, 4 analysis, 5 I/O.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "macq/macq.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<int> parse_int_list(const std::string& text, const std::string& what, int min_value) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size() || item.empty()) {
      throw macq::ArgumentError("invalid " + what + " '" + item + "'");
    }
    if (v < min_value) throw macq::ArgumentError("invalid " + what + " " + item + " (must be >= " + std::to_string(min_value) + ")");
    out.push_back(v);
  }
  if (out.empty()) throw macq::ArgumentError("empty " + what + " list");
  return out;
}

// "lo:hi" in percent, both inclusive.
std::vector<double> parse_grid(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw macq::ArgumentError("grid must be lo:hi in percent, got '" + text + "'");
  const auto lo = parse_int_list(text.substr(0, colon), "grid bound", 1).front();
  const auto hi = parse_int_list(text.substr(colon + 1), "grid bound", 1).front();
  if (lo > hi || hi > 99) throw macq::ArgumentError("grid bounds must satisfy 1 <= lo <= hi <= 99");
  return macq::percent_levels(lo, hi);
}

struct AnalysisFlags {
  std::string grid = "1:99";
  bool no_refopt = false;
  int steps = 500;
  double rate = 1e-2;
  double bandwidth = 0.1;
  int degree = 2;
  double threshold = 0.2;
  bool individual = false;
  int permutation_reps = 5;
  std::uint64_t seed = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--grid", grid, "quantile levels lo:hi in percent")->capture_default_str();
    cmd->add_flag("--no-refopt", no_refopt, "keep the reference point at a = 0");
    cmd->add_option("--steps", steps, "reference search steps")->capture_default_str();
    cmd->add_option("--rate", rate, "reference search step length")->capture_default_str();
    cmd->add_option("--bandwidth", bandwidth, "smoother nearest-neighbour fraction")->capture_default_str();
    cmd->add_option("--degree", degree, "local polynomial degree")->capture_default_str();
    cmd->add_option("--threshold", threshold, "interaction screening threshold")->capture_default_str();
    cmd->add_flag("--individual", individual, "store per-instance contributions");
    cmd->add_option("--permutation-reps", permutation_reps, "permutation importance repetitions")->capture_default_str();
    cmd->add_option("--seed", seed, "master seed")->capture_default_str();
  }

  macq::AnalyzeOptions options() const {
    macq::AnalyzeOptions o;
    o.engine.levels = parse_grid(grid);
    o.engine.smoother.bandwidth_fraction = bandwidth;
    o.engine.smoother.degree = degree;
    o.engine.smoother.validate();
    o.engine.screening_threshold = threshold;
    o.refopt = !no_refopt;
    o.descent.steps = steps;
    o.descent.rate = rate;
    if (steps < 1) throw macq::ArgumentError("--steps must be >= 1");
    if (!(rate > 0.0)) throw macq::ArgumentError("--rate must be positive");
    o.individual = individual;
    o.permutation_repetitions = permutation_reps;
    o.seed = seed;
    return o;
  }
};

struct Loaded {
  macq::ModelFile file;
  macq::Dataset data;
  macq::Json provenance;
};

Loaded load_model_and_data(const std::string& model_path, const std::string& data_path) {
  Loaded out;
  out.file = macq::load_model(model_path);
  macq::Dataset d = macq::load_dataset(data_path);
  if (!out.file.feature_names.empty() && out.file.feature_names != d.feature_names) {
    throw macq::SchemaError("data columns do not match the features the model was fitted on");
  }
  if (out.file.standardization.dim() != d.dim()) {
    throw macq::SchemaError("model standardization has " + std::to_string(out.file.standardization.dim()) +
                            " features, data has " + std::to_string(d.dim()));
  }
  out.data = macq::standardize_with(std::move(d), out.file.standardization);
  out.provenance = {{"model_file", fs::path(model_path).filename().string()},
                    {"model_hash", macq::file_hash(model_path)},
                    {"data_file", fs::path(data_path).filename().string()},
                    {"data_hash", macq::file_hash(data_path)},
                    {"model_seed", out.file.seed}};
  return out;
}

int cmd_fit(const std::string& data_path, const std::string& arch, std::uint64_t seed, int epochs,
            double learning_rate, const std::string& out_path) {
  macq::FitConfig cfg;
  cfg.hidden = parse_int_list(arch, "width", 1);
  cfg.seed = seed;
  cfg.epochs = epochs;
  cfg.learning_rate = learning_rate;
  cfg.validate();
  const macq::Dataset d = macq::standardize(macq::load_dataset(data_path));
  const macq::FitResult r = macq::fit_network(d.standardized, d.y, cfg);
  macq::save_model(out_path, {r.model, d.standardization, seed, d.feature_names});
  std::cout << "arch: " << arch << "\n"
            << "rows: " << d.size() << " (train " << r.train_rows.size() << ", validation "
            << r.validation_rows.size() << ")\n"
            << "epochs run: " << r.history.size() << ", best epoch: " << r.best_epoch << "\n"
            << "train deviance: " << r.history[static_cast<std::size_t>(r.best_epoch - 1)].train_deviance << "\n"
            << "validation deviance: " << r.best_validation_deviance << "\n"
            << "constant-predictor validation deviance: " << r.constant_validation_deviance << "\n"
            << "model written to " << out_path << "\n";
  return 0;
}

void summarize(const macq::Json& doc) {
  const auto& a = doc.at("attribution");
  const auto levels = a.at("levels").get<std::vector<double>>();
  const auto r1 = a.at("residuals").at("first_order").get<std::vector<double>>();
  const auto r2 = a.at("residuals").at("second_order").get<std::vector<double>>();
  double m1 = 0, m2 = 0;
  for (std::size_t l = 0; l < r1.size(); ++l) {
    m1 += r1[l] / static_cast<double>(r1.size());
    m2 += r2[l] / static_cast<double>(r2.size());
  }
  std::cout << "levels: " << levels.size() << "\n"
            << "theta(a): " << a.at("reference").at("theta_a").get<double>() << "\n"
            << "mean |residual| first order: " << m1 << ", second order: " << m2 << "\n"
            << "screened interactions: " << a.at("screening").at("pairs").size() << "\n";
  if (doc.contains("reference_search")) {
    const auto& t = doc.at("reference_search");
    std::cout << "G(a0): " << t.at("objective").front().get<double>()
              << ", best G: " << t.at("best_value").get<double>() << "\n";
  }
}

int cmd_analyze(const std::string& model_path, const std::string& data_path, const std::string& synthetic,
                long n, const AnalysisFlags& flags, const std::string& out_path) {
  const macq::AnalyzeOptions opt = flags.options();
  macq::Json doc;
  if (!synthetic.empty()) {
    if (n < 1) throw macq::ArgumentError("--n must be positive");
    const auto p = macq::make_synthetic(synthetic, n, flags.seed);
    doc = macq::analyze_document(p.model, p.data, opt,
                                 {{"synthetic", synthetic}, {"n_requested", n}});
  } else {
    if (model_path.empty() || data_path.empty()) {
      throw macq::ArgumentError("analyze needs --model and --data, or --synthetic");
    }
    Loaded in = load_model_and_data(model_path, data_path);
    doc = macq::analyze_document(in.file.model, in.data, opt, in.provenance);
  }
  macq::validate_document(doc);
  macq::write_json(out_path, doc);
  summarize(doc);
  std::cout << "report written to " << out_path << "\n";
  return 0;
}

int cmd_layers(const std::string& model_path, const std::string& data_path, const std::string& ks_text,
               const AnalysisFlags& flags, const std::string& out_path) {
  const macq::AnalyzeOptions opt = flags.options();
  Loaded in = load_model_and_data(model_path, data_path);
  std::vector<int> ks;
  if (ks_text.empty()) {
    for (int k = 0; k <= in.file.model->depth(); ++k) ks.push_back(k);
  } else {
    ks = parse_int_list(ks_text, "layer", 0);
  }
  for (int k : ks) {
    if (k > in.file.model->depth()) {
      throw macq::ArgumentError("layer " + std::to_string(k) + " outside [0, " +
                                std::to_string(in.file.model->depth()) + "]");
    }
  }
  const macq::Json doc = macq::layers_document(in.file.model, in.data, ks, opt, in.provenance);
  macq::validate_document(doc);
  macq::write_json(out_path, doc);
  for (const auto& [k, section] : doc.at("layers").items()) {
    std::cout << "k=" << k << ": interaction area " << section.at("interaction_area").get<double>() << "\n";
  }
  std::cout << "report written to " << out_path << "\n";
  return 0;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw macq::IoError("cannot write " + path.string());
  out << text;
  if (!out) throw macq::IoError("failed writing " + path.string());
}

int cmd_plot(const std::string& report_path, const std::string& figure, const std::string& out_dir) {
  const auto& names = macq::figure_names();
  if (std::find(names.begin(), names.end(), figure) == names.end()) {
    // validate the name before touching files
    macq::render_figure(macq::Json::object(), figure);
  }
  const macq::Json doc = macq::read_json(report_path);
  macq::validate_document(doc);
  const macq::Figure f = macq::render_figure(doc, figure);
  fs::create_directories(out_dir);
  const fs::path base = fs::path(out_dir) / figure;
  write_text(base.string() + ".svg", f.svg);
  write_text(base.string() + ".csv", f.series.str());
  std::cout << base.string() << ".svg\n" << base.string() << ".csv\n";
  return 0;
}

int cmd_synth(const std::string& name, long n, std::uint64_t seed, const std::string& out_path) {
  if (n < 1) throw macq::ArgumentError("--n must be positive");
  const auto p = macq::make_synthetic(name, n, seed);
  macq::write_table_csv(out_path, p.data);
  std::cout << "model: " << p.model->describe() << "\n" << "data written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marginal attribution by conditioning on quantiles"};
  app.require_subcommand(1);

  std::string data_path, model_path, out_path, arch = "20,15,10", synthetic, ks, figure, report, out_dir = ".";
  std::uint64_t seed = 1;
  int epochs = 200;
  double learning_rate = macq::FitConfig{}.learning_rate;
  long n = 10000;
  AnalysisFlags flags;

  auto* fit = app.add_subcommand("fit", "train a (tanh) feed-forward classifier");
  fit->add_option("--data", data_path, "CSV data file")->required();
  fit->add_option("--arch", arch, "hidden widths, comma separated")->capture_default_str();
  fit->add_option("--seed", seed, "master seed")->capture_default_str();
  fit->add_option("--epochs", epochs, "maximum epochs")->capture_default_str();
  fit->add_option("--learning-rate", learning_rate, "SGD step size")->capture_default_str();
  fit->add_option("--out", out_path, "model JSON to write")->required();

  auto* analyze = app.add_subcommand("analyze", "compute the attribution report");
  analyze->add_option("--model", model_path, "model JSON");
  analyze->add_option("--data", data_path, "CSV data file");
  auto* synth_opt = analyze->add_option("--synthetic", synthetic, "use a built-in synthetic problem instead");
  analyze->add_option("--n", n, "synthetic sample size")->capture_default_str();
  analyze->add_option("--out", out_path, "report JSON to write")->required();
  flags.attach(analyze);
  synth_opt->excludes(analyze->get_option("--model"));

  auto* layers = app.add_subcommand("layers", "attribution reports on hidden-layer representations");
  layers->add_option("--model", model_path, "model JSON")->required();
  layers->add_option("--data", data_path, "CSV data file")->required();
  layers->add_option("--k", ks, "layers, comma separated (default: all)");
  layers->add_option("--out", out_path, "report JSON to write")->required();
  AnalysisFlags layer_flags;
  layer_flags.attach(layers);

  auto* plot = app.add_subcommand("plot", "render a figure (SVG) and its series (CSV)");
  plot->add_option("--report", report, "report JSON")->required();
  std::string figure_help = "one of:";
  for (const auto& f : macq::figure_names()) figure_help += " " + f;
  plot->add_option("--figure", figure, figure_help)->required();
  plot->add_option("--out-dir", out_dir, "output directory")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "write a synthetic data set");
  std::string synth_name;
  std::string names_help = "one of:";
  for (const auto& s : macq::synthetic_names()) names_help += " " + s;
  synth->add_option("--name", synth_name, names_help)->required();
  synth->add_option("--n", n, "rows")->capture_default_str();
  synth->add_option("--seed", seed, "master seed")->capture_default_str();
  synth->add_option("--out", out_path, "CSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fit) return cmd_fit(data_path, arch, seed, epochs, learning_rate, out_path);
    if (*analyze) return cmd_analyze(model_path, data_path, synthetic, n, flags, out_path);
    if (*layers) return cmd_layers(model_path, data_path, ks, layer_flags, out_path);
    if (*plot) return cmd_plot(report, figure, out_dir);
    if (*synth) return cmd_synth(synth_name, n, seed, out_path);
  } catch (const macq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
