// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TDPM_DATASET_IO_HPP
#define TDPM_DATASET_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tdpm/model.hpp"

namespace tdpm {

struct Dataset {
  ActionVocab vocab;
  std::vector<EventSequence> sequences;
};

struct ParseOptions {
  /// Existing vocabulary (e.g. a model's). Null builds one from the data in
  /// first-occurrence order, with END at id 0.
  const ActionVocab* base = nullptr;
  /// Admit labels missing from base instead of rejecting them.
  bool extend_vocab = false;
};

/// JSON Lines, one record per line:
///   {"id": "p1", "actions": ["A", "B"], "times": [0, 12], "complete": false,
///    "class_hint": 0, "stage_truth": [1, 1, 2]}
/// complete, class_hint and stage_truth are optional; stage_truth covers the
/// appended END as well. END is appended to every record with interval 0.
/// Blank lines are skipped. Errors are DataError with the line number.
Dataset parse_dataset(std::istream& in, const ParseOptions& opt = {}, std::string_view source = "<input>");
Dataset read_dataset(const std::string& path, const ParseOptions& opt = {});

/// Inverse of parse_dataset: END is dropped, ground-truth fields written when
/// present.
std::string dataset_to_jsonl(const std::vector<EventSequence>& data, const ActionVocab& vocab);
void write_dataset(const std::string& path, const std::vector<EventSequence>& data, const ActionVocab& vocab);

struct TrainTestSplit {
  std::vector<EventSequence> train;
  std::vector<EventSequence> test;
};

/// Seeded shuffle, then the first round(train_frac * n) go to train. Both
/// parts keep the original relative order.
TrainTestSplit train_test_split(const std::vector<EventSequence>& data, double train_frac, std::uint64_t seed);

std::string read_text_file(const std::string& path);
/// Creates parent directories. Throws IoError.
void write_text_file(const std::string& path, std::string_view content);

}  // namespace tdpm

#endif  // TDPM_DATASET_IO_HPP
