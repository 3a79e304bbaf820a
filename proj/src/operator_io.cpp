// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#include "nldir/operator_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nldir/error.hpp"

namespace nldir {

using nlohmann::json;

std::string dump_operator(const EnergyOperator& op) {
  const auto& pen = op.penalty();
  json rows = json::array();
  for (const auto& r : pen.rows) {
    rows.push_back({{"coefficient", r.coefficient},
                    {"datum", r.datum},
                    {"kernel_sum", r.kernel_sum},
                    {"begin", r.begin},
                    {"end", r.end}});
  }
  json out = {
      {"format", "nldir-operator"},
      {"version", 1},
      {"delta", op.delta()},
      {"p", op.p()},
      {"variant", std::string(to_string(pen.variant))},
      {"kind", pen.kind == PenaltyKind::averaged ? "averaged" : "pointwise"},
      {"quadrature", std::vector<double>(op.quadrature().begin(), op.quadrature().end())},
      {"pairs",
       {{"offsets", op.pairs().adjacency.offsets},
        {"indices", op.pairs().adjacency.indices},
        {"weights", op.pairs().weights}}},
      {"penalty", {{"rows", rows}, {"cols", pen.cols}, {"coeffs", pen.coeffs}}},
  };
  return out.dump(1);
}

EnergyOperator parse_operator(std::string_view text) {
  json in;
  try {
    in = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("config", std::string("operator dump is not valid JSON: ") + e.what());
  }
  std::string field;
  try {
    field = "format";
    if (in.at("format").get<std::string>() != "nldir-operator") throw Error("config", "not an operator dump", field);
    field = "version";
    if (in.at("version").get<int>() != 1) throw Error("config", "unsupported operator dump version", field);

    field = "pairs";
    InteriorPairs pairs;
    pairs.adjacency.offsets = in.at("pairs").at("offsets").get<std::vector<std::size_t>>();
    pairs.adjacency.indices = in.at("pairs").at("indices").get<std::vector<std::size_t>>();
    pairs.weights = in.at("pairs").at("weights").get<std::vector<double>>();
    const auto& adj = pairs.adjacency;
    if (adj.offsets.empty() || adj.offsets.front() != 0 || adj.offsets.back() != adj.indices.size() ||
        pairs.weights.size() != adj.indices.size()) {
      throw Error("config", "inconsistent pair arrays", field);
    }
    const std::size_t n = adj.rows();
    for (std::size_t i = 0; i < n; ++i) {
      if (adj.offsets[i] > adj.offsets[i + 1]) throw Error("config", "pair offsets must be nondecreasing", field);
    }
    for (std::size_t j : adj.indices) {
      if (j >= n) throw Error("config", "pair index out of range", field);
    }

    field = "penalty";
    PenaltyData pen;
    pen.variant = parse_penalty_variant(in.at("variant").get<std::string>());
    const std::string kind = in.at("kind").get<std::string>();
    if (kind != "averaged" && kind != "pointwise") throw Error("config", "unknown penalty kind", "kind");
    pen.kind = kind == "averaged" ? PenaltyKind::averaged : PenaltyKind::pointwise;
    pen.cols = in.at("penalty").at("cols").get<std::vector<std::size_t>>();
    pen.coeffs = in.at("penalty").at("coeffs").get<std::vector<double>>();
    if (pen.cols.size() != pen.coeffs.size()) throw Error("config", "penalty cols and coeffs differ in length", field);
    for (std::size_t j : pen.cols) {
      if (j >= n) throw Error("config", "penalty column out of range", field);
    }
    for (const auto& r : in.at("penalty").at("rows")) {
      PenaltyRow row;
      row.coefficient = r.at("coefficient").get<double>();
      row.datum = r.at("datum").get<double>();
      row.kernel_sum = r.at("kernel_sum").get<double>();
      row.begin = r.at("begin").get<std::size_t>();
      row.end = r.at("end").get<std::size_t>();
      if (row.begin > row.end || row.end > pen.cols.size()) throw Error("config", "penalty row range invalid", field);
      pen.rows.push_back(row);
    }

    field = "quadrature";
    auto quad = in.at("quadrature").get<std::vector<double>>();
    field = "delta";
    const double delta = in.at("delta").get<double>();
    field = "p";
    const double p = in.at("p").get<double>();
    return EnergyOperator(nullptr, n, delta, p, std::move(quad), std::move(pairs), std::move(pen));
  } catch (const json::exception& e) {
    throw Error("config", std::string("malformed operator dump: ") + e.what(), field);
  }
}

void save_operator(const EnergyOperator& op, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write '" + path + "'", "out");
  out << dump_operator(op) << '\n';
}

EnergyOperator load_operator(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_operator(buf.str());
}

}  // namespace nldir
