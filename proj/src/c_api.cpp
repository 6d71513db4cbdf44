// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdpm/tdpm.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <random>
#include <string>
#include <vector>

#include "tdpm/applications.hpp"
#include "tdpm/dataset_io.hpp"
#include "tdpm/em.hpp"
#include "tdpm/errors.hpp"
#include "tdpm/experiment.hpp"
#include "tdpm/generator.hpp"
#include "tdpm/model.hpp"

struct tdpm_model {
  tdpm::ModelParams params;
};

struct tdpm_dataset {
  tdpm::Dataset data;
};

namespace {

thread_local std::string g_last_error;

tdpm_status status_of(tdpm::ErrorKind k) {
  switch (k) {
    case tdpm::ErrorKind::invalid_argument: return TDPM_ERR_INVALID_ARGUMENT;
    case tdpm::ErrorKind::validation: return TDPM_ERR_VALIDATION;
    case tdpm::ErrorKind::data: return TDPM_ERR_DATA;
    case tdpm::ErrorKind::io: return TDPM_ERR_IO;
    case tdpm::ErrorKind::numeric: return TDPM_ERR_NUMERIC;
  }
  return TDPM_ERR_INTERNAL;
}

template <class F>
tdpm_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return TDPM_OK;
  } catch (const tdpm::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return TDPM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TDPM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return TDPM_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw tdpm::InvalidArgument(std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put_string(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

tdpm::TimeFamily family_of_int(int f) {
  if (f < 0 || f > 2) throw tdpm::InvalidArgument("unknown time family code " + std::to_string(f));
  return static_cast<tdpm::TimeFamily>(f);
}

tdpm::FitConfig to_cpp(const tdpm_fit_config& c) {
  tdpm::FitConfig f;
  f.n_classes = c.n_classes;
  f.stages = {c.r_minus, c.r_plus};
  f.family = family_of_int(c.family);
  f.max_iters = c.max_iters;
  f.loglik_rel_tol = c.loglik_rel_tol;
  f.min_iters = c.min_iters;
  f.seed = c.seed;
  if (c.init_mode < 0 || c.init_mode > 2) throw tdpm::InvalidArgument("unknown init mode code");
  f.init_mode = static_cast<tdpm::InitMode>(c.init_mode);
  f.epsilon = c.epsilon;
  f.alpha0 = c.alpha0;
  f.time_in_em = c.time_in_em != 0;
  f.zero_time_floor = c.zero_time_floor;
  f.validate();
  return f;
}

tdpm::PredictOptions to_cpp(const tdpm_predict_config& c) {
  tdpm::PredictOptions p;
  if (c.mode < 0 || c.mode > 3) throw tdpm::InvalidArgument("unknown prediction mode code");
  p.mode = static_cast<tdpm::PredictionMode>(c.mode);
  p.n_samples = c.n_samples;
  p.seed = c.seed;
  p.use_time = c.use_time != 0;
  p.start_t = c.start_t;
  p.validate();
  return p;
}

tdpm::ModelHyperPrior to_cpp(const tdpm_hyper_prior& h) {
  tdpm::ModelHyperPrior o;
  o.alpha_C = h.alpha_C;
  o.alpha_A = h.alpha_A;
  o.alpha_S_stay = h.alpha_S_stay;
  o.alpha_S_advance = h.alpha_S_advance;
  o.geometric_beta_a = h.geometric_beta_a;
  o.geometric_beta_b = h.geometric_beta_b;
  o.exponential_gamma_shape = h.exponential_gamma_shape;
  o.exponential_gamma_rate = h.exponential_gamma_rate;
  o.weibull_shape_lo = h.weibull_shape_lo;
  o.weibull_shape_hi = h.weibull_shape_hi;
  o.weibull_scale_lo = h.weibull_scale_lo;
  o.weibull_scale_hi = h.weibull_scale_hi;
  return o;
}

// Sequences of ds expressed in the ids of target. Labels missing from target
// are a data error.
std::vector<tdpm::EventSequence> aligned(const tdpm::Dataset& ds, const tdpm::ActionVocab& target) {
  if (ds.vocab == target) return ds.sequences;
  std::vector<tdpm::ActionId> map(static_cast<std::size_t>(ds.vocab.size()));
  for (tdpm::ActionId a = 0; a < ds.vocab.size(); ++a) {
    const auto& name = ds.vocab.name(a);
    if (ds.vocab.is_end(a)) {
      map[static_cast<std::size_t>(a)] = target.end_id();
    } else if (const auto id = target.find(name)) {
      map[static_cast<std::size_t>(a)] = *id;
    } else {
      map[static_cast<std::size_t>(a)] = -1;
    }
  }
  std::vector<tdpm::EventSequence> out = ds.sequences;
  for (auto& seq : out) {
    for (auto& a : seq.actions) {
      const tdpm::ActionId m = map[static_cast<std::size_t>(a)];
      if (m < 0) {
        throw tdpm::DataError("sequence '" + seq.id + "' uses action '" + ds.vocab.name(a) +
                              "' unknown to the model");
      }
      a = m;
    }
  }
  return out;
}

}  // namespace

extern "C" {

const char* tdpm_version(void) { return "0.1.0"; }

const char* tdpm_last_error(void) { return g_last_error.c_str(); }

void tdpm_string_free(char* s) { std::free(s); }

tdpm_status tdpm_model_load(const char* path, tdpm_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new tdpm_model{tdpm::load_model(path)};
  });
}

tdpm_status tdpm_model_save(const tdpm_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    tdpm::save_model(model->params, path);
  });
}

tdpm_status tdpm_model_from_json(const char* text, tdpm_model** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new tdpm_model{tdpm::deserialize_model(text)};
  });
}

tdpm_status tdpm_model_to_json(const tdpm_model* model, char** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = dup_string(tdpm::serialize_model(model->params));
  });
}

void tdpm_model_free(tdpm_model* model) { delete model; }

tdpm_status tdpm_model_validate(const tdpm_model* model, char** report) {
  bool ok = true;
  const tdpm_status st = guarded([&] {
    need(model, "model");
    const auto rep = tdpm::validate_model(model->params);
    ok = rep.ok();
    put_string(report, rep.to_string());
  });
  if (st != TDPM_OK) return st;
  if (!ok) {
    g_last_error = "model failed validation";
    return TDPM_ERR_VALIDATION;
  }
  return TDPM_OK;
}

tdpm_status tdpm_model_get_info(const tdpm_model* model, tdpm_model_info* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    const auto& p = model->params;
    out->n_actions = p.n_actions();
    out->n_classes = p.n_classes();
    out->r_minus = p.stages().r_minus;
    out->r_plus = p.stages().r_plus;
    out->family = static_cast<int>(p.family());
  });
}

tdpm_status tdpm_dataset_load(const char* path, const tdpm_model* vocab_from, int extend_vocab,
                              tdpm_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    tdpm::ParseOptions opt;
    if (vocab_from) opt.base = &vocab_from->params.vocab();
    opt.extend_vocab = extend_vocab != 0;
    *out = new tdpm_dataset{tdpm::read_dataset(path, opt)};
  });
}

tdpm_status tdpm_dataset_save(const tdpm_dataset* data, const char* path) {
  return guarded([&] {
    need(data, "data");
    need(path, "path");
    tdpm::write_dataset(path, data->data.sequences, data->data.vocab);
  });
}

void tdpm_dataset_free(tdpm_dataset* data) { delete data; }

size_t tdpm_dataset_size(const tdpm_dataset* data) { return data ? data->data.sequences.size() : 0; }

tdpm_status tdpm_dataset_split(const tdpm_dataset* data, double train_frac, uint64_t seed, tdpm_dataset** train,
                               tdpm_dataset** test) {
  return guarded([&] {
    need(data, "data");
    need(train, "train");
    need(test, "test");
    auto split = tdpm::train_test_split(data->data.sequences, train_frac, seed);
    auto* a = new tdpm_dataset{{data->data.vocab, std::move(split.train)}};
    auto* b = new (std::nothrow) tdpm_dataset{{data->data.vocab, std::move(split.test)}};
    if (!b) {
      delete a;
      throw std::bad_alloc();
    }
    *train = a;
    *test = b;
  });
}

void tdpm_fit_config_default(tdpm_fit_config* cfg) {
  if (!cfg) return;
  const tdpm::FitConfig d;
  cfg->n_classes = d.n_classes;
  cfg->r_minus = d.stages.r_minus;
  cfg->r_plus = d.stages.r_plus;
  cfg->family = static_cast<int>(d.family);
  cfg->max_iters = d.max_iters;
  cfg->loglik_rel_tol = d.loglik_rel_tol;
  cfg->min_iters = d.min_iters;
  cfg->seed = d.seed;
  cfg->init_mode = static_cast<int>(d.init_mode);
  cfg->epsilon = d.epsilon;
  cfg->alpha0 = d.alpha0;
  cfg->time_in_em = d.time_in_em ? 1 : 0;
  cfg->zero_time_floor = d.zero_time_floor;
}

tdpm_status tdpm_fit(const tdpm_dataset* data, const tdpm_fit_config* cfg, tdpm_model** out, char** trace_csv) {
  return guarded([&] {
    need(data, "data");
    need(cfg, "cfg");
    need(out, "out");
    auto res = tdpm::fit(data->data.sequences, data->data.vocab, to_cpp(*cfg));
    put_string(trace_csv, res.trace.to_csv());
    *out = new tdpm_model{std::move(res.params)};
  });
}

tdpm_status tdpm_mean_loglik(const tdpm_model* model, const tdpm_dataset* data, double* out) {
  return guarded([&] {
    need(model, "model");
    need(data, "data");
    need(out, "out");
    *out = tdpm::mean_log_likelihood(model->params, aligned(data->data, model->params.vocab()));
  });
}

void tdpm_hyper_prior_default(tdpm_hyper_prior* h) {
  if (!h) return;
  const tdpm::ModelHyperPrior d;
  h->alpha_C = d.alpha_C;
  h->alpha_A = d.alpha_A;
  h->alpha_S_stay = d.alpha_S_stay;
  h->alpha_S_advance = d.alpha_S_advance;
  h->geometric_beta_a = d.geometric_beta_a;
  h->geometric_beta_b = d.geometric_beta_b;
  h->exponential_gamma_shape = d.exponential_gamma_shape;
  h->exponential_gamma_rate = d.exponential_gamma_rate;
  h->weibull_shape_lo = d.weibull_shape_lo;
  h->weibull_shape_hi = d.weibull_shape_hi;
  h->weibull_scale_lo = d.weibull_scale_lo;
  h->weibull_scale_hi = d.weibull_scale_hi;
}

tdpm_status tdpm_sample_model(int n_actions, int n_classes, int r_minus, int r_plus, int family,
                              const tdpm_hyper_prior* hyper, uint64_t seed, tdpm_model** out) {
  return guarded([&] {
    need(out, "out");
    if (n_actions < 1) throw tdpm::InvalidArgument("need at least one action");
    if (n_classes < 1) throw tdpm::InvalidArgument("need at least one class");
    const tdpm::StageRange stages{r_minus, r_plus};
    stages.validate();
    const tdpm::ModelHyperPrior h = hyper ? to_cpp(*hyper) : tdpm::ModelHyperPrior{};
    std::mt19937_64 rng(seed);
    *out = new tdpm_model{
        tdpm::sample_model(tdpm::ActionVocab::with_actions(n_actions), stages, n_classes, family_of_int(family), h, rng)};
  });
}

tdpm_status tdpm_sample_dataset(const tdpm_model* model, size_t n, uint64_t seed, int complete, size_t max_len,
                                tdpm_dataset** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    if (max_len < 2) throw tdpm::InvalidArgument("max_len must be at least 2");
    tdpm::SamplerOptions opt;
    opt.complete = complete != 0;
    opt.max_len = max_len;
    std::mt19937_64 rng(seed);
    *out = new tdpm_dataset{{model->params.vocab(), tdpm::sample_dataset(model->params, n, rng, opt)}};
  });
}

void tdpm_predict_config_default(tdpm_predict_config* cfg) {
  if (!cfg) return;
  const tdpm::PredictOptions d;
  cfg->mode = static_cast<int>(d.mode);
  cfg->n_samples = d.n_samples;
  cfg->seed = d.seed;
  cfg->use_time = d.use_time ? 1 : 0;
  cfg->start_t = d.start_t;
}

tdpm_status tdpm_predict_next(const tdpm_model* model, const char* const* actions, const double* times, size_t t,
                              const tdpm_predict_config* cfg, double* out) {
  return guarded([&] {
    need(model, "model");
    need(actions, "actions");
    need(times, "times");
    need(cfg, "cfg");
    need(out, "out");
    const auto& vocab = model->params.vocab();
    std::vector<tdpm::ActionId> ids;
    for (size_t i = 0; i <= t; ++i) {
      need(actions[i], "action label");
      const auto id = vocab.find(actions[i]);
      if (!id || vocab.is_end(*id)) throw tdpm::DataError(std::string("unknown action '") + actions[i] + "'");
      ids.push_back(*id);
    }
    *out = tdpm::predict_next_time(model->params, ids, std::vector<double>(times, times + t), to_cpp(*cfg));
  });
}

tdpm_status tdpm_predict(const tdpm_model* model, const tdpm_dataset* data, const tdpm_dataset* train,
                         const tdpm_predict_config* cfg, char** csv) {
  return guarded([&] {
    need(model, "model");
    need(data, "data");
    need(cfg, "cfg");
    need(csv, "csv");
    const auto& vocab = model->params.vocab();
    const auto seqs = aligned(data->data, vocab);
    std::vector<tdpm::EventSequence> tr;
    if (train) tr = aligned(train->data, vocab);
    const auto preds = tdpm::predict_dataset(model->params, seqs, to_cpp(*cfg), train ? &tr : nullptr);
    *csv = dup_string(tdpm::predictions_csv(preds, seqs, vocab));
  });
}

tdpm_status tdpm_eval_mae(const tdpm_model* model, const tdpm_dataset* test, const tdpm_dataset* train,
                          const tdpm_predict_config* cfg, double* overall, char** csv, char** top_pairs) {
  return guarded([&] {
    need(model, "model");
    need(test, "test");
    need(cfg, "cfg");
    const auto& vocab = model->params.vocab();
    const auto te = aligned(test->data, vocab);
    std::vector<tdpm::EventSequence> tr;
    if (train) tr = aligned(train->data, vocab);
    const auto rep = tdpm::evaluate_mae(model->params, te, to_cpp(*cfg), train ? &tr : nullptr);
    if (overall) *overall = rep.overall;
    std::string a = rep.to_csv(), b = rep.render_top_pairs(15);
    char* ca = csv ? dup_string(a) : nullptr;
    if (top_pairs) {
      try {
        *top_pairs = dup_string(b);
      } catch (...) {
        std::free(ca);
        throw;
      }
    }
    if (csv) *csv = ca;
  });
}

tdpm_status tdpm_classify(const tdpm_model* model, const tdpm_dataset* data, int use_time, char** csv) {
  return guarded([&] {
    need(model, "model");
    need(data, "data");
    need(csv, "csv");
    const auto seqs = aligned(data->data, model->params.vocab());
    const auto cls = tdpm::classify_all(model->params, seqs, use_time != 0);
    *csv = dup_string(tdpm::classifications_csv(seqs, cls));
  });
}

tdpm_status tdpm_representative(const tdpm_model* model, const tdpm_dataset* data, int cls, int use_time,
                                size_t* index, double* score, char** jsonl, char** annotations_csv) {
  return guarded([&] {
    need(model, "model");
    need(data, "data");
    const auto& vocab = model->params.vocab();
    const auto seqs = aligned(data->data, vocab);
    const auto rep = tdpm::representative(model->params, seqs, cls, use_time != 0);
    const auto& best = seqs[rep.index];
    const std::string a = tdpm::dataset_to_jsonl({best}, vocab);
    const std::string b = tdpm::representative_annotations_csv(model->params, best, cls, use_time != 0);
    char* ca = jsonl ? dup_string(a) : nullptr;
    if (annotations_csv) {
      try {
        *annotations_csv = dup_string(b);
      } catch (...) {
        std::free(ca);
        throw;
      }
    }
    if (jsonl) *jsonl = ca;
    if (index) *index = rep.index;
    if (score) *score = rep.score;
  });
}

tdpm_status tdpm_mae_table(const tdpm_dataset* train, const tdpm_dataset* test, const tdpm_fit_config* fit,
                           const tdpm_predict_config* predict, char** csv) {
  return guarded([&] {
    need(train, "train");
    need(test, "test");
    need(fit, "fit");
    need(predict, "predict");
    need(csv, "csv");
    tdpm::MaeTableConfig cfg;
    cfg.fit = to_cpp(*fit);
    cfg.predict = to_cpp(*predict);
    const auto& vocab = train->data.vocab;
    const auto te = aligned(test->data, vocab);
    *csv = dup_string(tdpm::mae_table(train->data.sequences, te, vocab, cfg).to_csv());
  });
}

void tdpm_synthetic_config_default(tdpm_synthetic_config* cfg) {
  if (!cfg) return;
  static const std::vector<size_t> grid = [] {
    const tdpm::SyntheticConfig d;
    return std::vector<size_t>(d.n_grid.begin(), d.n_grid.end());
  }();
  const tdpm::SyntheticConfig d;
  cfg->n_actions = d.n_actions;
  cfg->n_classes = d.n_classes;
  cfg->r_minus = d.stages.r_minus;
  cfg->r_plus = d.stages.r_plus;
  cfg->families_mask = 0;
  for (auto f : d.families) cfg->families_mask |= 1u << static_cast<unsigned>(f);
  cfg->n_grid = grid.data();
  cfg->n_grid_len = grid.size();
  cfg->n_test = d.n_test;
  cfg->n_seeds = d.n_seeds;
  cfg->seed = d.seed;
  cfg->max_len = d.sampler.max_len;
  cfg->complete = d.sampler.complete ? 1 : 0;
  tdpm_fit_config_default(&cfg->fit);
  cfg->fit.n_classes = d.n_classes;
  cfg->fit.r_minus = d.stages.r_minus;
  cfg->fit.r_plus = d.stages.r_plus;
}

tdpm_status tdpm_synthetic_experiment(const tdpm_synthetic_config* cfg, tdpm_progress_fn progress, void* user,
                                      char** csv) {
  return guarded([&] {
    need(cfg, "cfg");
    need(csv, "csv");
    if (cfg->n_grid_len && !cfg->n_grid) throw tdpm::InvalidArgument("n_grid must not be null");
    tdpm::SyntheticConfig sc;
    sc.n_actions = cfg->n_actions;
    sc.n_classes = cfg->n_classes;
    sc.stages = {cfg->r_minus, cfg->r_plus};
    sc.families.clear();
    for (int f = 0; f < 3; ++f) {
      if (cfg->families_mask & (1u << f)) sc.families.push_back(static_cast<tdpm::TimeFamily>(f));
    }
    sc.n_grid.assign(cfg->n_grid, cfg->n_grid + cfg->n_grid_len);
    sc.n_test = cfg->n_test;
    sc.n_seeds = cfg->n_seeds;
    sc.seed = cfg->seed;
    sc.sampler.max_len = cfg->max_len;
    sc.sampler.complete = cfg->complete != 0;
    tdpm_fit_config fc = cfg->fit;
    fc.n_classes = cfg->n_classes;
    fc.r_minus = cfg->r_minus;
    fc.r_plus = cfg->r_plus;
    sc.fit = to_cpp(fc);
    std::function<void(const tdpm::SyntheticRow&)> cb;
    if (progress) {
      cb = [&](const tdpm::SyntheticRow& row) {
        tdpm::SyntheticReport one;
        one.rows.push_back(row);
        const std::string text = one.to_csv();
        const std::string line = text.substr(text.find('\n') + 1);
        progress(line.c_str(), user);
      };
    }
    *csv = dup_string(tdpm::run_synthetic_experiment(sc, cb).to_csv());
  });
}

}  // extern "C"
