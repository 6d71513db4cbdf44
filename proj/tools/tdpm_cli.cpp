// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end over the C API. Exit codes: 0 success, 2 invalid
// arguments or failed validation, 3 data or I/O error, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdpm/tdpm.h"

namespace {

constexpr int kExitOther = 1;
constexpr int kExitValidation = 2;
constexpr int kExitData = 3;

struct Failure {
  int code;
  std::string message;
};

int exit_code(tdpm_status st) {
  switch (st) {
    case TDPM_OK: return 0;
    case TDPM_ERR_INVALID_ARGUMENT:
    case TDPM_ERR_VALIDATION: return kExitValidation;
    case TDPM_ERR_DATA:
    case TDPM_ERR_IO: return kExitData;
    default: return kExitOther;
  }
}

void check(tdpm_status st) {
  if (st != TDPM_OK) throw Failure{exit_code(st), tdpm_last_error()};
}

struct ModelFree {
  void operator()(tdpm_model* m) const { tdpm_model_free(m); }
};
struct DatasetFree {
  void operator()(tdpm_dataset* d) const { tdpm_dataset_free(d); }
};
struct StringFree {
  void operator()(char* s) const { tdpm_string_free(s); }
};
using Model = std::unique_ptr<tdpm_model, ModelFree>;
using Dataset = std::unique_ptr<tdpm_dataset, DatasetFree>;
using CString = std::unique_ptr<char, StringFree>;

Model load_model(const std::string& path) {
  tdpm_model* m = nullptr;
  check(tdpm_model_load(path.c_str(), &m));
  return Model(m);
}

Dataset load_data(const std::string& path, const tdpm_model* vocab_from = nullptr) {
  tdpm_dataset* d = nullptr;
  check(tdpm_dataset_load(path.c_str(), vocab_from, 0, &d));
  return Dataset(d);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
    throw Failure{kExitData, "cannot write " + path.string()};
  }
}

int parse_family(const std::string& s) {
  if (s == "geometric") return TDPM_GEOMETRIC;
  if (s == "exponential") return TDPM_EXPONENTIAL;
  if (s == "weibull") return TDPM_WEIBULL;
  throw Failure{kExitValidation, "unknown family '" + s + "'"};
}

int parse_mode(const std::string& s) {
  if (s == "mixture") return TDPM_PREDICT_MIXTURE;
  if (s == "argmax") return TDPM_PREDICT_ARGMAX;
  if (s == "empirical") return TDPM_PREDICT_EMPIRICAL;
  if (s == "median") return TDPM_PREDICT_MEDIAN;
  throw Failure{kExitValidation, "unknown mode '" + s + "'"};
}

int parse_init(const std::string& s) {
  if (s == "uniform_eps") return TDPM_INIT_UNIFORM_EPS;
  if (s == "provided_labels") return TDPM_INIT_PROVIDED_LABELS;
  if (s == "frequency_seeded") return TDPM_INIT_FREQUENCY_SEEDED;
  throw Failure{kExitValidation, "unknown init mode '" + s + "'"};
}

// "MIN:MAX" or a single "R" meaning R:R.
std::pair<int, int> parse_stages(const std::string& s) {
  try {
    const auto colon = s.find(':');
    if (colon == std::string::npos) {
      const int r = std::stoi(s);
      return {r, r};
    }
    return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Failure{kExitValidation, "stages must look like MIN:MAX, got '" + s + "'"};
  }
}

const std::vector<std::string> kFamilies{"geometric", "exponential", "weibull"};
const std::vector<std::string> kModes{"mixture", "argmax", "empirical", "median"};
const std::vector<std::string> kInits{"uniform_eps", "provided_labels", "frequency_seeded"};

struct FitFlags {
  std::string family = "weibull";
  int classes = 1;
  std::string stages = "1:1";
  std::uint64_t seed = 0;
  double epsilon = 0.1;
  double alpha0 = 1e-3;
  bool time_in_em = true;
  std::string init = "uniform_eps";
  int max_iters = 200;
  int min_iters = 5;
  double tol = 1e-6;
  double zero_floor = 0.5;

  void add(CLI::App* app, bool with_family = true) {
    if (with_family) app->add_option("--family", family, "Time family")->check(CLI::IsMember(kFamilies));
    app->add_option("--classes", classes, "Number of classes")->check(CLI::PositiveNumber);
    app->add_option("--stages", stages, "Stage window MIN:MAX");
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--epsilon", epsilon, "Extra initial responsibility for the hinted class");
    app->add_option("--alpha0", alpha0, "Smoothing pseudo-count")->check(CLI::NonNegativeNumber);
    app->add_option("--time-in-em", time_in_em, "Fit time cells inside EM (true|false)");
    app->add_option("--init", init, "Class initialization")->check(CLI::IsMember(kInits));
    app->add_option("--max-iters", max_iters, "EM iteration cap")->check(CLI::PositiveNumber);
    app->add_option("--min-iters", min_iters, "EM iterations before convergence may stop");
    app->add_option("--tol", tol, "Relative objective improvement threshold");
    app->add_option("--zero-floor", zero_floor, "Replacement for zero intervals in continuous fits");
  }

  tdpm_fit_config config() const {
    tdpm_fit_config c;
    tdpm_fit_config_default(&c);
    c.family = parse_family(family);
    c.n_classes = classes;
    const auto [lo, hi] = parse_stages(stages);
    c.r_minus = lo;
    c.r_plus = hi;
    c.seed = seed;
    c.epsilon = epsilon;
    c.alpha0 = alpha0;
    c.time_in_em = time_in_em ? 1 : 0;
    c.init_mode = parse_init(init);
    c.max_iters = max_iters;
    c.min_iters = min_iters;
    c.loglik_rel_tol = tol;
    c.zero_time_floor = zero_floor;
    return c;
  }
};

struct PredictFlags {
  std::string mode = "mixture";
  int n_samples = 501;
  std::uint64_t seed = 0;
  bool use_time = true;
  int start_t = 1;

  void add(CLI::App* app, bool with_mode = true) {
    if (with_mode) app->add_option("--mode", mode, "Prediction mode")->check(CLI::IsMember(kModes));
    app->add_option("--n-samples", n_samples, "Draws per prediction (odd)");
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--use-time", use_time, "Use time factors in class posteriors (true|false)");
    app->add_option("--start-t", start_t, "First prefix length to predict from");
  }

  tdpm_predict_config config() const {
    tdpm_predict_config c;
    tdpm_predict_config_default(&c);
    c.mode = parse_mode(mode);
    c.n_samples = n_samples;
    c.seed = seed;
    c.use_time = use_time ? 1 : 0;
    c.start_t = start_t;
    return c;
  }
};

// Test set plus optional training set, either from --train or by splitting
// --data with --train-frac.
struct EvalData {
  Dataset test;
  Dataset train;
};

EvalData eval_data(const tdpm_model* model, const std::string& data, const std::string& train, double train_frac,
                   std::uint64_t seed) {
  EvalData out;
  if (!train.empty()) {
    out.test = load_data(data, model);
    out.train = load_data(train, model);
  } else if (train_frac > 0.0) {
    Dataset all = load_data(data, model);
    tdpm_dataset *a = nullptr, *b = nullptr;
    check(tdpm_dataset_split(all.get(), train_frac, seed, &a, &b));
    out.train.reset(a);
    out.test.reset(b);
  } else {
    out.test = load_data(data, model);
  }
  return out;
}

void print_progress(const char* row, void*) {
  std::fputs(row, stderr);
  std::fflush(stderr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-aware disease progression models: fit, sample, predict, classify"};
  app.set_config("--config", "", "TOML/INI file with option values; flags override it");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::string out_dir;

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model to a dataset with EM");
  std::string fit_data;
  FitFlags fit_flags;
  fit->add_option("--data", fit_data, "JSONL dataset")->required()->check(CLI::ExistingFile);
  fit_flags.add(fit);
  fit->add_option("--out", out_dir, "Output directory")->required();

  // sample-model
  auto* smodel = app.add_subcommand("sample-model", "Draw a random model from the hyper-priors");
  int sm_actions = 10, sm_classes = 2;
  std::string sm_stages = "3:4", sm_family = "weibull";
  std::uint64_t sm_seed = 0;
  smodel->add_option("--actions", sm_actions, "Actions excluding END")->check(CLI::PositiveNumber);
  smodel->add_option("--classes", sm_classes, "Number of classes")->check(CLI::PositiveNumber);
  smodel->add_option("--stages", sm_stages, "Stage window MIN:MAX");
  smodel->add_option("--family", sm_family, "Time family")->check(CLI::IsMember(kFamilies));
  smodel->add_option("--seed", sm_seed, "Random seed");
  smodel->add_option("--out", out_dir, "Output directory")->required();

  // sample-data
  auto* sdata = app.add_subcommand("sample-data", "Sample sequences from a model");
  std::string sd_model;
  std::size_t sd_n = 1000, sd_max_len = 500;
  std::uint64_t sd_seed = 0;
  bool sd_complete = false;
  sdata->add_option("--model", sd_model, "Model JSON")->required()->check(CLI::ExistingFile);
  sdata->add_option("--n", sd_n, "Number of sequences");
  sdata->add_option("--seed", sd_seed, "Random seed");
  sdata->add_option("--complete", sd_complete, "Require the last stage (true|false)");
  sdata->add_option("--max-len", sd_max_len, "Length cap including END");
  sdata->add_option("--out", out_dir, "Output directory")->required();

  // predict / eval-mae share flags
  std::string pr_model, pr_data, pr_train;
  double pr_train_frac = 0.0;
  PredictFlags pr_flags;
  auto add_eval = [&](CLI::App* sub) {
    sub->add_option("--model", pr_model, "Model JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--data", pr_data, "JSONL sequences to predict on")->required()->check(CLI::ExistingFile);
    sub->add_option("--train", pr_train, "JSONL training set (baselines, fallback fits)")->check(CLI::ExistingFile);
    sub->add_option("--train-frac", pr_train_frac, "Split --data into train/test instead of --train")
        ->check(CLI::Range(0.0, 1.0));
    pr_flags.add(sub);
    sub->add_option("--out", out_dir, "Output directory")->required();
  };
  auto* predict = app.add_subcommand("predict", "Predict the next interval at every step");
  add_eval(predict);
  auto* eval = app.add_subcommand("eval-mae", "Mean absolute error of next-interval predictions");
  add_eval(eval);

  // classify
  auto* classify = app.add_subcommand("classify", "Most probable class per sequence");
  std::string cl_model, cl_data;
  bool cl_use_time = true;
  classify->add_option("--model", cl_model, "Model JSON")->required()->check(CLI::ExistingFile);
  classify->add_option("--data", cl_data, "JSONL dataset")->required()->check(CLI::ExistingFile);
  classify->add_option("--use-time", cl_use_time, "Use time factors (true|false)");
  classify->add_option("--out", out_dir, "Output directory")->required();

  // representative
  auto* rep = app.add_subcommand("representative", "Representative sequence of a class");
  int rp_class = 0;
  rep->add_option("--model", cl_model, "Model JSON")->required()->check(CLI::ExistingFile);
  rep->add_option("--data", cl_data, "JSONL dataset")->required()->check(CLI::ExistingFile);
  rep->add_option("--class", rp_class, "Class id")->check(CLI::NonNegativeNumber);
  rep->add_option("--use-time", cl_use_time, "Use time factors (true|false)");
  rep->add_option("--out", out_dir, "Output directory")->required();

  // validate
  auto* validate = app.add_subcommand("validate", "Check a model and/or a dataset");
  std::string va_model, va_data;
  validate->add_option("--model", va_model, "Model JSON")->check(CLI::ExistingFile);
  validate->add_option("--data", va_data, "JSONL dataset")->check(CLI::ExistingFile);

  // mae-table
  auto* table = app.add_subcommand("mae-table", "Baselines, untimed and timed models across families");
  std::string mt_data;
  double mt_train_frac = 0.9;
  FitFlags mt_fit;
  PredictFlags mt_pred;
  table->add_option("--data", mt_data, "JSONL dataset")->required()->check(CLI::ExistingFile);
  table->add_option("--train-frac", mt_train_frac, "Training fraction")->check(CLI::Range(0.0, 1.0));
  mt_fit.add(table, false);
  table->add_option("--n-samples", mt_pred.n_samples, "Draws per prediction (odd)");
  table->add_option("--start-t", mt_pred.start_t, "First prefix length to predict from");
  table->add_option("--out", out_dir, "Output directory")->required();

  // synthetic
  auto* synth = app.add_subcommand("synthetic", "Synthetic recovery experiment");
  tdpm_synthetic_config sc;
  tdpm_synthetic_config_default(&sc);
  std::vector<std::string> sy_families = kFamilies;
  std::vector<std::size_t> sy_grid(sc.n_grid, sc.n_grid + sc.n_grid_len);
  FitFlags sy_fit;
  sy_fit.classes = sc.n_classes;
  sy_fit.stages = std::to_string(sc.r_minus) + ":" + std::to_string(sc.r_plus);
  bool sy_complete = false;
  std::size_t sy_max_len = sc.max_len;
  synth->add_option("--families", sy_families, "Time families")->check(CLI::IsMember(kFamilies));
  synth->add_option("--n-grid", sy_grid, "Training sizes");
  synth->add_option("--n-test", sc.n_test, "Test size");
  synth->add_option("--seeds", sc.n_seeds, "Repetitions per family")->check(CLI::PositiveNumber);
  synth->add_option("--actions", sc.n_actions, "Actions excluding END")->check(CLI::PositiveNumber);
  synth->add_option("--complete", sy_complete, "Sample complete sequences (true|false)");
  synth->add_option("--max-len", sy_max_len, "Length cap including END");
  sy_fit.add(synth, false);
  synth->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  const std::filesystem::path out(out_dir);
  try {
    if (!out_dir.empty()) {
      // Only the command that ran, defaults included, so the file can be fed
      // back through --config.
      for (const CLI::App* sub : app.get_subcommands()) {
        write_file(out / "config.toml", "[" + sub->get_name() + "]\n" + sub->config_to_str(true, false));
      }
    }

    if (fit->parsed()) {
      const tdpm_fit_config cfg = fit_flags.config();
      Dataset data = load_data(fit_data);
      tdpm_model* m = nullptr;
      char* trace = nullptr;
      check(tdpm_fit(data.get(), &cfg, &m, &trace));
      Model model(m);
      CString trace_s(trace);
      check(tdpm_model_save(model.get(), (out / "model.json").string().c_str()));
      write_file(out / "trace.csv", trace_s.get());
    } else if (smodel->parsed()) {
      const auto [lo, hi] = parse_stages(sm_stages);
      tdpm_model* m = nullptr;
      check(tdpm_sample_model(sm_actions, sm_classes, lo, hi, parse_family(sm_family), nullptr, sm_seed, &m));
      Model model(m);
      check(tdpm_model_save(model.get(), (out / "model.json").string().c_str()));
    } else if (sdata->parsed()) {
      Model model = load_model(sd_model);
      tdpm_dataset* d = nullptr;
      check(tdpm_sample_dataset(model.get(), sd_n, sd_seed, sd_complete ? 1 : 0, sd_max_len, &d));
      Dataset data(d);
      check(tdpm_dataset_save(data.get(), (out / "data.jsonl").string().c_str()));
    } else if (predict->parsed() || eval->parsed()) {
      const tdpm_predict_config cfg = pr_flags.config();
      Model model = load_model(pr_model);
      EvalData ed = eval_data(model.get(), pr_data, pr_train, pr_train_frac, pr_flags.seed);
      if (predict->parsed()) {
        char* csv = nullptr;
        check(tdpm_predict(model.get(), ed.test.get(), ed.train.get(), &cfg, &csv));
        CString s(csv);
        write_file(out / "predictions.csv", s.get());
      } else {
        double overall = 0.0;
        char *csv = nullptr, *top = nullptr;
        check(tdpm_eval_mae(model.get(), ed.test.get(), ed.train.get(), &cfg, &overall, &csv, &top));
        CString s(csv), t(top);
        write_file(out / "mae.csv", s.get());
        std::cout << t.get();
      }
    } else if (classify->parsed()) {
      Model model = load_model(cl_model);
      Dataset data = load_data(cl_data, model.get());
      char* csv = nullptr;
      check(tdpm_classify(model.get(), data.get(), cl_use_time ? 1 : 0, &csv));
      CString s(csv);
      write_file(out / "classes.csv", s.get());
    } else if (rep->parsed()) {
      Model model = load_model(cl_model);
      Dataset data = load_data(cl_data, model.get());
      std::size_t index = 0;
      double score = 0.0;
      char *jsonl = nullptr, *steps = nullptr;
      check(tdpm_representative(model.get(), data.get(), rp_class, cl_use_time ? 1 : 0, &index, &score, &jsonl,
                                &steps));
      CString j(jsonl), st(steps);
      write_file(out / "representative.jsonl", j.get());
      write_file(out / "representative_steps.csv", st.get());
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", score);
      std::cout << "class " << rp_class << ": sequence #" << index + 1 << " score " << buf << '\n';
    } else if (validate->parsed()) {
      if (va_model.empty() && va_data.empty()) throw Failure{kExitValidation, "give --model and/or --data"};
      Model model;
      if (!va_model.empty()) {
        model = load_model(va_model);
        char* report = nullptr;
        const tdpm_status st = tdpm_model_validate(model.get(), &report);
        CString r(report);
        if (r) std::cout << r.get();
        if (st != TDPM_OK) throw Failure{exit_code(st), tdpm_last_error()};
        std::cout << "model ok\n";
      }
      if (!va_data.empty()) {
        Dataset data = load_data(va_data, model.get());
        std::cout << "dataset ok: " << tdpm_dataset_size(data.get()) << " sequences\n";
      }
    } else if (table->parsed()) {
      tdpm_fit_config fc = mt_fit.config();
      mt_pred.seed = mt_fit.seed;
      const tdpm_predict_config pc = mt_pred.config();
      Dataset all = load_data(mt_data);
      tdpm_dataset *a = nullptr, *b = nullptr;
      check(tdpm_dataset_split(all.get(), mt_train_frac, mt_fit.seed, &a, &b));
      Dataset train(a), test(b);
      char* csv = nullptr;
      check(tdpm_mae_table(train.get(), test.get(), &fc, &pc, &csv));
      CString s(csv);
      write_file(out / "mae_table.csv", s.get());
      std::cout << s.get();
    } else if (synth->parsed()) {
      const tdpm_fit_config fc = sy_fit.config();
      sc.fit = fc;
      sc.n_classes = fc.n_classes;
      sc.r_minus = fc.r_minus;
      sc.r_plus = fc.r_plus;
      sc.seed = sy_fit.seed;
      sc.families_mask = 0;
      for (const auto& f : sy_families) sc.families_mask |= 1u << parse_family(f);
      sc.n_grid = sy_grid.data();
      sc.n_grid_len = sy_grid.size();
      sc.complete = sy_complete ? 1 : 0;
      sc.max_len = sy_max_len;
      char* csv = nullptr;
      check(tdpm_synthetic_experiment(&sc, print_progress, nullptr, &csv));
      CString s(csv);
      write_file(out / "synthetic.csv", s.get());
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return 0;
}
