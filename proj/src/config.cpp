// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#include "nldir/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "nldir/error.hpp"

namespace nldir {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw Error("config", field + ": " + message, field);
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) fail(field, "expected an integer");
  return j.get<int>();
}

std::string text(const json& j, const std::string& field) {
  if (!j.is_string()) fail(field, "expected a string");
  return j.get<std::string>();
}

Point point(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) fail(field, "expected [x, y]");
  return {number(j[0], field), number(j[1], field)};
}

Shape shape_from(const json& j, const std::string& field) {
  if (!j.is_object() || j.size() != 1) fail(field, "expected exactly one of interval, rect, polygon");
  if (j.contains("interval")) {
    const auto& v = j["interval"];
    if (!v.is_array() || v.size() != 2) fail(field + ".interval", "expected [a, b]");
    return Interval{number(v[0], field + ".interval"), number(v[1], field + ".interval")};
  }
  if (j.contains("rect")) {
    const auto& v = j["rect"];
    if (!v.is_array() || v.size() != 2) fail(field + ".rect", "expected [[x0, y0], [x1, y1]]");
    return Rect{point(v[0], field + ".rect"), point(v[1], field + ".rect")};
  }
  if (j.contains("polygon")) {
    const auto& v = j["polygon"];
    if (!v.is_array()) fail(field + ".polygon", "expected a list of [x, y] vertices");
    Polygon poly;
    for (const auto& vertex : v) poly.vertices.push_back(point(vertex, field + ".polygon"));
    return poly;
  }
  fail(field, "expected exactly one of interval, rect, polygon");
}

PenaltyVariant variant_from(const json& j, const std::string& field) {
  try {
    return parse_penalty_variant(text(j, field));
  } catch (const Error& e) {
    if (e.code() == "config" && e.field() == field) throw;
    fail(field, e.what());
  }
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("config", std::string("config is not valid JSON: ") + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& prefix) {
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      fail(prefix + key, "unknown key");
    }
  }
}

}  // namespace

Shape parse_shape(std::string_view json_text) { return shape_from(parse_json(json_text), "shape"); }

StudyConfig parse_study_config(std::string_view json_text) {
  const json j = parse_json(json_text);
  if (!j.is_object()) fail("config", "expected a JSON object");
  reject_unknown(j,
                 {"shape", "kernels", "penalty", "p", "datum", "datum_csv", "deltas", "ratio", "solver", "eigen",
                  "coercivity", "variants", "output", "threads"},
                 "");
  StudyConfig cfg;
  if (j.contains("shape")) cfg.shape = shape_from(j["shape"], "shape");
  if (j.contains("kernels")) {
    const auto& k = j["kernels"];
    if (!k.is_object()) fail("kernels", "expected an object");
    reject_unknown(k, {"R", "K", "W", "Khat"}, "kernels.");
    if (k.contains("R")) cfg.kernel_R = text(k["R"], "kernels.R");
    if (k.contains("K")) cfg.kernel_K = text(k["K"], "kernels.K");
    if (k.contains("W")) cfg.kernel_W = text(k["W"], "kernels.W");
    if (k.contains("Khat")) cfg.kernel_Khat = text(k["Khat"], "kernels.Khat");
  }
  if (j.contains("penalty")) {
    const auto& pj = j["penalty"];
    if (pj.is_string()) {
      cfg.penalty = variant_from(pj, "penalty");
    } else if (pj.is_object()) {
      reject_unknown(pj, {"variant", "shi_delta_power"}, "penalty.");
      if (!pj.contains("variant")) fail("penalty.variant", "missing");
      cfg.penalty = variant_from(pj["variant"], "penalty.variant");
      if (pj.contains("shi_delta_power")) cfg.shi_delta_power = integer(pj["shi_delta_power"], "penalty.shi_delta_power");
    } else {
      fail("penalty", "expected a variant name or an object");
    }
  }
  if (j.contains("p")) cfg.p = number(j["p"], "p");
  if (j.contains("datum")) cfg.datum = text(j["datum"], "datum");
  if (j.contains("datum_csv")) cfg.datum_csv = text(j["datum_csv"], "datum_csv");
  if (j.contains("deltas")) {
    const auto& d = j["deltas"];
    if (!d.is_array()) fail("deltas", "expected a list of numbers");
    cfg.deltas.clear();
    for (const auto& v : d) cfg.deltas.push_back(number(v, "deltas"));
  }
  if (j.contains("ratio")) cfg.ratio = number(j["ratio"], "ratio");
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    if (!s.is_object()) fail("solver", "expected an object");
    reject_unknown(s, {"tol", "max_iter", "seed", "armijo", "backtrack"}, "solver.");
    if (s.contains("tol")) cfg.solver.tol = number(s["tol"], "solver.tol");
    if (s.contains("max_iter")) cfg.solver.max_iter = integer(s["max_iter"], "solver.max_iter");
    if (s.contains("seed")) {
      if (!s["seed"].is_number_integer() || s["seed"].get<std::int64_t>() < 0) fail("solver.seed", "expected a nonnegative integer");
      cfg.solver.seed = s["seed"].get<std::uint64_t>();
    }
    if (s.contains("armijo")) cfg.solver.armijo = number(s["armijo"], "solver.armijo");
    if (s.contains("backtrack")) cfg.solver.backtrack = number(s["backtrack"], "solver.backtrack");
  }
  if (j.contains("eigen")) {
    const auto& e = j["eigen"];
    if (!e.is_object()) fail("eigen", "expected an object");
    reject_unknown(e, {"modes", "mass_model"}, "eigen.");
    if (e.contains("modes")) cfg.eigen.modes = integer(e["modes"], "eigen.modes");
    if (e.contains("mass_model")) {
      try {
        cfg.eigen.mass = parse_mass_model(text(e["mass_model"], "eigen.mass_model"));
      } catch (const Error& err) {
        if (err.field() == "eigen.mass_model") throw;
        fail("eigen.mass_model", err.what());
      }
    }
  }
  if (j.contains("coercivity")) {
    const auto& c = j["coercivity"];
    if (!c.is_object()) fail("coercivity", "expected an object");
    reject_unknown(c, {"trials"}, "coercivity.");
    if (c.contains("trials")) cfg.coercivity_trials = integer(c["trials"], "coercivity.trials");
  }
  if (j.contains("variants")) {
    const auto& v = j["variants"];
    if (!v.is_array()) fail("variants", "expected a list of penalty variants");
    for (const auto& name : v) cfg.variants.push_back(variant_from(name, "variants"));
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    if (!o.is_object()) fail("output", "expected an object");
    reject_unknown(o, {"csv", "json"}, "output.");
    if (o.contains("csv")) cfg.csv_out = text(o["csv"], "output.csv");
    if (o.contains("json")) cfg.json_out = text(o["json"], "output.json");
  }
  if (j.contains("threads")) cfg.threads = integer(j["threads"], "threads");
  validate_config(cfg);
  return cfg;
}

StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config", "cannot read config file '" + path + "'", "config");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_study_config(buf.str());
}

BoundaryData load_boundary_csv(const std::string& path, const DomainMesh& mesh) {
  std::ifstream in(path);
  if (!in) throw Error("config", "cannot read boundary data file '" + path + "'", "datum_csv");
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const bool first = std::exchange(header_allowed, false);
    const auto comma = line.find_last_of(',');
    const std::string last = comma == std::string::npos ? line : line.substr(comma + 1);
    std::istringstream cell(last);
    double v = 0.0;
    if (!(cell >> v)) {
      if (first) continue;  // header
      throw Error("config", "malformed row " + std::to_string(line_no) + " in '" + path + "'", "datum_csv");
    }
    values.push_back(v);
  }
  if (values.size() != mesh.boundary_count()) {
    throw Error("config",
                "'" + path + "' has " + std::to_string(values.size()) + " values but the mesh has " +
                    std::to_string(mesh.boundary_count()) + " boundary nodes",
                "datum_csv");
  }
  BoundaryData a = BoundaryData::zeros(values.size());
  for (std::size_t b = 0; b < values.size(); ++b) a[b] = values[b];
  return a;
}

}  // namespace nldir
