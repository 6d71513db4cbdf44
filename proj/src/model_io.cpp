// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tdpm/errors.hpp"
#include "tdpm/model.hpp"

namespace tdpm {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "tdpm-model";
constexpr int kVersion = 1;

json time_to_json(const TimeDist& d) {
  if (const auto* g = std::get_if<Geometric>(&d)) return json::array({g->p});
  if (const auto* e = std::get_if<Exponential>(&d)) return json::array({e->rate});
  const auto& w = std::get<Weibull>(d);
  return json::array({w.shape, w.scale});
}

TimeDist time_from_json(TimeFamily family, const json& j) {
  switch (family) {
    case TimeFamily::geometric:
      return Geometric{j.at(0).get<double>()};
    case TimeFamily::exponential:
      return Exponential{j.at(0).get<double>()};
    case TimeFamily::weibull:
      return Weibull{j.at(0).get<double>(), j.at(1).get<double>()};
  }
  throw InvalidArgument("unknown time family");
}

void expect_size(const json& j, int n, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw DataError(std::string("model file: '") + what + "' has wrong shape");
  }
}

}  // namespace

std::string serialize_model(const ModelParams& p) {
  const int nA = p.n_actions(), r = p.n_stages(), k = p.n_classes();
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["vocab"] = {{"names", p.vocab().names()}, {"end_id", p.vocab().end_id()}};
  doc["stages"] = {{"r_minus", p.stages().r_minus}, {"r_plus", p.stages().r_plus}};
  doc["n_classes"] = k;
  doc["family"] = std::string(to_string(p.family()));

  json tc = json::array();
  for (int c = 0; c < k; ++c) tc.push_back(p.theta_c(c));
  doc["theta_C"] = tc;

  json pa = json::array();
  for (int c = 0; c < k; ++c) {
    json row = json::array();
    for (ActionId a = 0; a < nA; ++a) row.push_back(p.pi_a(c, a));
    pa.push_back(row);
  }
  doc["pi_A"] = pa;

  json ps = json::array();
  for (ActionId a = 0; a < nA; ++a) {
    json per_a = json::array();
    for (int c = 0; c < k; ++c) {
      json row = json::array();
      for (int s = 0; s < r; ++s) row.push_back(p.pi_s(a, c, s));
      per_a.push_back(row);
    }
    ps.push_back(per_a);
  }
  doc["pi_S"] = ps;

  json ta = json::array(), ts = json::array();
  for (ActionId a = 0; a < nA; ++a) {
    json ta_a = json::array(), ts_a = json::array();
    for (int s = 0; s < r; ++s) {
      json ta_s = json::array(), ts_s = json::array();
      for (int c = 0; c < k; ++c) {
        json row_a = json::array(), row_s = json::array();
        for (ActionId b = 0; b < nA; ++b) row_a.push_back(p.theta_a(a, s, c, b));
        for (int t = 0; t < r; ++t) row_s.push_back(p.theta_s(a, s, c, t));
        ta_s.push_back(row_a);
        ts_s.push_back(row_s);
      }
      ta_a.push_back(ta_s);
      ts_a.push_back(ts_s);
    }
    ta.push_back(ta_a);
    ts.push_back(ts_a);
  }
  doc["theta_A"] = ta;
  doc["theta_S"] = ts;

  json tt = json::array(), tf = json::array();
  for (ActionId a = 0; a < nA; ++a) {
    json tt_a = json::array(), tf_a = json::array();
    for (ActionId b = 0; b < nA; ++b) {
      json tt_b = json::array(), tf_b = json::array();
      for (int c = 0; c < k; ++c) {
        tt_b.push_back(time_to_json(p.theta_t(a, b, c)));
        tf_b.push_back(p.time_fitted(a, b, c));
      }
      tt_a.push_back(tt_b);
      tf_a.push_back(tf_b);
    }
    tt.push_back(tt_a);
    tf.push_back(tf_a);
  }
  doc["theta_T"] = tt;
  doc["time_fitted"] = tf;
  return doc.dump(1);
}

ModelParams deserialize_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  try {
    if (doc.value("format", std::string()) != kFormat) throw DataError("model file: not a tdpm model");
    if (doc.value("version", 0) != kVersion) throw DataError("model file: unsupported version");

    ActionVocab vocab(doc.at("vocab").at("names").get<std::vector<std::string>>(),
                      doc.at("vocab").at("end_id").get<int>());
    StageRange stages{doc.at("stages").at("r_minus").get<int>(),
                      doc.at("stages").at("r_plus").get<int>()};
    const int k = doc.at("n_classes").get<int>();
    const TimeFamily family = parse_time_family(doc.at("family").get<std::string>());
    ModelParams p(vocab, stages, k, family);
    const int nA = p.n_actions(), r = p.n_stages();

    const json& tc = doc.at("theta_C");
    expect_size(tc, k, "theta_C");
    for (int c = 0; c < k; ++c) p.theta_c(c) = tc[c].get<double>();

    const json& pa = doc.at("pi_A");
    expect_size(pa, k, "pi_A");
    for (int c = 0; c < k; ++c) {
      expect_size(pa[c], nA, "pi_A");
      for (ActionId a = 0; a < nA; ++a) p.pi_a(c, a) = pa[c][a].get<double>();
    }

    const json& ps = doc.at("pi_S");
    expect_size(ps, nA, "pi_S");
    for (ActionId a = 0; a < nA; ++a) {
      expect_size(ps[a], k, "pi_S");
      for (int c = 0; c < k; ++c) {
        expect_size(ps[a][c], r, "pi_S");
        for (int s = 0; s < r; ++s) p.pi_s(a, c, s) = ps[a][c][s].get<double>();
      }
    }

    const json& ta = doc.at("theta_A");
    const json& ts = doc.at("theta_S");
    expect_size(ta, nA, "theta_A");
    expect_size(ts, nA, "theta_S");
    for (ActionId a = 0; a < nA; ++a) {
      expect_size(ta[a], r, "theta_A");
      expect_size(ts[a], r, "theta_S");
      for (int s = 0; s < r; ++s) {
        expect_size(ta[a][s], k, "theta_A");
        expect_size(ts[a][s], k, "theta_S");
        for (int c = 0; c < k; ++c) {
          expect_size(ta[a][s][c], nA, "theta_A");
          expect_size(ts[a][s][c], r, "theta_S");
          for (ActionId b = 0; b < nA; ++b) p.theta_a(a, s, c, b) = ta[a][s][c][b].get<double>();
          for (int t = 0; t < r; ++t) p.theta_s(a, s, c, t) = ts[a][s][c][t].get<double>();
        }
      }
    }

    const json& tt = doc.at("theta_T");
    expect_size(tt, nA, "theta_T");
    const json* tf = doc.contains("time_fitted") ? &doc.at("time_fitted") : nullptr;
    for (ActionId a = 0; a < nA; ++a) {
      expect_size(tt[a], nA, "theta_T");
      for (ActionId b = 0; b < nA; ++b) {
        expect_size(tt[a][b], k, "theta_T");
        for (int c = 0; c < k; ++c) {
          p.theta_t(a, b, c) = time_from_json(family, tt[a][b][c]);
          if (tf) p.set_time_fitted(a, b, c, (*tf).at(a).at(b).at(c).get<bool>());
        }
      }
    }
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

void save_model(const ModelParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << serialize_model(params) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace tdpm
