// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdpm/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "tdpm/errors.hpp"

namespace tdpm {

namespace {

using nlohmann::json;

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& msg) {
  throw DataError(std::string(source) + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

Dataset parse_dataset(std::istream& in, const ParseOptions& opt, std::string_view source) {
  Dataset ds;
  if (opt.base) ds.vocab = *opt.base;
  std::string text;
  std::size_t lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); })) continue;
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(source, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object()) fail(source, lineno, "record must be a JSON object");
    if (!rec.contains("actions") || !rec["actions"].is_array()) fail(source, lineno, "missing 'actions' array");
    if (!rec.contains("times") || !rec["times"].is_array()) fail(source, lineno, "missing 'times' array");
    const json& acts = rec["actions"];
    const json& times = rec["times"];
    if (acts.empty()) fail(source, lineno, "empty action list");
    if (acts.size() != times.size()) {
      fail(source, lineno,
           "length mismatch: " + std::to_string(acts.size()) + " actions, " + std::to_string(times.size()) +
               " times");
    }

    EventSequence seq;
    if (rec.contains("id")) {
      if (rec["id"].is_string()) seq.id = rec["id"].get<std::string>();
      else if (rec["id"].is_number_integer()) seq.id = std::to_string(rec["id"].get<long long>());
      else fail(source, lineno, "'id' must be a string");
    } else {
      seq.id = std::to_string(ds.sequences.size() + 1);
    }
    for (std::size_t i = 0; i < acts.size(); ++i) {
      if (!acts[i].is_string()) fail(source, lineno, "action labels must be strings");
      const auto label = acts[i].get<std::string>();
      if (label == ActionVocab::kEndLabel) fail(source, lineno, "records must not contain the reserved END label");
      ActionId id;
      if (const auto found = ds.vocab.find(label)) {
        id = *found;
      } else if (opt.base && !opt.extend_vocab) {
        fail(source, lineno, "unknown action label '" + label + "'");
      } else {
        if (label.empty()) fail(source, lineno, "empty action label");
        id = ds.vocab.add(label);
      }
      if (!times[i].is_number()) fail(source, lineno, "times must be numbers");
      const double t = times[i].get<double>();
      if (!std::isfinite(t)) fail(source, lineno, "non-finite time");
      if (t < 0.0) fail(source, lineno, "negative time at position " + std::to_string(i + 1));
      seq.actions.push_back(id);
      seq.times.push_back(t);
    }
    if (seq.times.front() != 0.0) fail(source, lineno, "first interval must be 0");
    seq.actions.push_back(ds.vocab.end_id());
    seq.times.push_back(0.0);

    if (rec.contains("complete")) {
      if (!rec["complete"].is_boolean()) fail(source, lineno, "'complete' must be a boolean");
      seq.complete = rec["complete"].get<bool>();
    }
    if (rec.contains("class_hint") && !rec["class_hint"].is_null()) {
      if (!rec["class_hint"].is_number_integer() || rec["class_hint"].get<long long>() < 0) {
        fail(source, lineno, "'class_hint' must be a non-negative integer");
      }
      seq.class_hint = rec["class_hint"].get<int>();
    }
    if (rec.contains("stage_truth") && !rec["stage_truth"].is_null()) {
      const json& st = rec["stage_truth"];
      if (!st.is_array() || st.size() != seq.length()) {
        fail(source, lineno, "'stage_truth' must list one stage per action plus one for END");
      }
      for (const auto& v : st) {
        if (!v.is_number_integer()) fail(source, lineno, "stage values must be integers");
        seq.stage_truth.push_back(v.get<int>());
      }
    }
    try {
      validate_sequence(seq, ds.vocab);
    } catch (const DataError& e) {
      fail(source, lineno, e.what());
    }
    ds.sequences.push_back(std::move(seq));
  }
  if (ds.sequences.empty()) throw DataError(std::string(source) + ": empty dataset");
  return ds;
}

Dataset read_dataset(const std::string& path, const ParseOptions& opt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_dataset(in, opt, path);
}

std::string dataset_to_jsonl(const std::vector<EventSequence>& data, const ActionVocab& vocab) {
  std::string out;
  for (const auto& seq : data) {
    validate_sequence(seq, vocab);
    json rec;
    rec["id"] = seq.id;
    json acts = json::array(), times = json::array();
    for (std::size_t i = 0; i + 1 < seq.length(); ++i) {
      acts.push_back(vocab.name(seq.actions[i]));
      times.push_back(seq.times[i]);
    }
    rec["actions"] = std::move(acts);
    rec["times"] = std::move(times);
    rec["complete"] = seq.complete;
    if (seq.class_hint) rec["class_hint"] = *seq.class_hint;
    if (!seq.stage_truth.empty()) rec["stage_truth"] = seq.stage_truth;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const std::string& path, const std::vector<EventSequence>& data, const ActionVocab& vocab) {
  write_text_file(path, dataset_to_jsonl(data, vocab));
}

TrainTestSplit train_test_split(const std::vector<EventSequence>& data, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw InvalidArgument("train fraction must be in (0, 1)");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(data.size())));
  std::vector<unsigned char> in_train(data.size(), 0);
  for (std::size_t i = 0; i < n_train; ++i) in_train[idx[i]] = 1;
  TrainTestSplit out;
  for (std::size_t i = 0; i < data.size(); ++i) (in_train[i] ? out.train : out.test).push_back(data[i]);
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  if (ec) throw IoError("cannot create directory for '" + path + "': " + ec.message());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace tdpm
