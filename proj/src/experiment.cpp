// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdpm/experiment.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "tdpm/errors.hpp"
#include "tdpm/inference.hpp"
#include "text_util.hpp"

namespace tdpm {

namespace {

using detail::fmt17;

std::mt19937_64 cell_engine(std::uint64_t seed, TimeFamily fam, int rep) {
  std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                   static_cast<std::uint32_t>(fam), static_cast<std::uint32_t>(rep)};
  return std::mt19937_64(ss);
}

}  // namespace

void SyntheticConfig::validate() const {
  if (n_actions < 1) throw InvalidArgument("need at least one action");
  if (n_classes < 1) throw InvalidArgument("need at least one class");
  stages.validate();
  if (families.empty()) throw InvalidArgument("no time families selected");
  if (n_grid.empty() || std::any_of(n_grid.begin(), n_grid.end(), [](std::size_t n) { return n == 0; })) {
    throw InvalidArgument("training sizes must be positive");
  }
  if (n_test == 0) throw InvalidArgument("test size must be positive");
  if (n_seeds < 1) throw InvalidArgument("need at least one seed");
  hyper.validate();
}

std::string SyntheticReport::to_csv() const {
  std::ostringstream os;
  os << "family,seed,N,fitted_train,fitted_test,true_train,true_test\n";
  for (const auto& r : rows) {
    os << to_string(r.family) << ',' << r.seed << ',' << r.n << ',' << fmt17(r.fitted_train) << ','
       << fmt17(r.fitted_test) << ',' << fmt17(r.true_train) << ',' << fmt17(r.true_test) << '\n';
  }
  return os.str();
}

double mean_log_likelihood(const ModelParams& params, const std::vector<EventSequence>& data) {
  if (data.empty()) throw DataError("cannot score an empty dataset");
  const CompiledModel compiled(params);
  double tot = 0.0;
  for (const auto& seq : data) tot += sequence_log_likelihood(compiled, seq);
  return tot / static_cast<double>(data.size());
}

SyntheticReport run_synthetic_experiment(const SyntheticConfig& cfg,
                                         const std::function<void(const SyntheticRow&)>& progress) {
  cfg.validate();
  const ActionVocab vocab = ActionVocab::with_actions(cfg.n_actions);
  const std::size_t n_max = *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());
  SyntheticReport rep;
  for (TimeFamily fam : cfg.families) {
    for (int s = 0; s < cfg.n_seeds; ++s) {
      auto rng = cell_engine(cfg.seed, fam, s);
      const ModelParams truth = sample_model(vocab, cfg.stages, cfg.n_classes, fam, cfg.hyper, rng);
      const auto pool = sample_dataset(truth, n_max, rng, cfg.sampler);
      const auto test = sample_dataset(truth, cfg.n_test, rng, cfg.sampler);
      const double true_test = mean_log_likelihood(truth, test);

      FitConfig fc = cfg.fit;
      fc.n_classes = cfg.n_classes;
      fc.stages = cfg.stages;
      fc.family = fam;
      for (std::size_t n : cfg.n_grid) {
        const std::vector<EventSequence> train(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
        const FitResult fitted = fit(train, vocab, fc);
        SyntheticRow row;
        row.family = fam;
        row.seed = s;
        row.n = n;
        row.fitted_train = mean_log_likelihood(fitted.params, train);
        row.fitted_test = mean_log_likelihood(fitted.params, test);
        row.true_train = mean_log_likelihood(truth, train);
        row.true_test = true_test;
        row.iterations = static_cast<int>(fitted.trace.iterations.size());
        row.converged = fitted.trace.converged;
        if (progress) progress(row);
        rep.rows.push_back(row);
      }
    }
  }
  return rep;
}

}  // namespace tdpm
