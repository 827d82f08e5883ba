#pragma once

// JSON <-> Eigen helpers shared by the serializers and the config loader.
// Private to the core library: keeps nlohmann/json out of public headers.

#include <cmath>

#include <json.hpp>

#include "empcnet/lti.hpp"

namespace empcnet::detail {

using nlohmann::json;

inline json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline json to_json(const Mat& M) {
  json out = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

// `null` entries stand for an absent bound: `null_value` is substituted.
inline Vec vec_from_json(const json& j, double null_value = 0.0, bool allow_null = false) {
  if (!j.is_array()) throw ConfigError("expected a numeric array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_null() && allow_null) {
      v(static_cast<Eigen::Index>(i)) = null_value;
    } else if (j[i].is_number()) {
      v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    } else {
      throw ConfigError("expected a number in array");
    }
  }
  return v;
}

// Accepts a list of rows. A scalar is read as a 1x1 matrix. `cols` fixes
// the width of an empty matrix.
inline Mat mat_from_json(const json& j, Eigen::Index cols = 0) {
  if (j.is_number()) return Mat::Constant(1, 1, j.get<double>());
  if (!j.is_array()) throw ConfigError("expected a matrix (array of rows)");
  if (j.empty()) return Mat(0, cols);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto width = static_cast<Eigen::Index>(j[0].size());
  Mat M(rows, width);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != width) {
      throw ConfigError("matrix rows must be arrays of equal length");
    }
    for (Eigen::Index c = 0; c < width; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ConfigError("matrix entries must be numbers");
      M(i, c) = v.get<double>();
    }
  }
  return M;
}

inline Vec bound_from_json(const json& obj, const char* key, Eigen::Index n, double sentinel) {
  if (!obj.contains(key) || obj.at(key).is_null()) return Vec::Constant(n, sentinel);
  return vec_from_json(obj.at(key), sentinel, true);
}

inline LtiProblem problem_from_json(const json& j) {
  try {
    LtiProblem p;
    p.A = mat_from_json(j.at("A"));
    p.B = mat_from_json(j.at("B"));
    const auto n = p.A.rows();
    const auto m = p.B.cols();
    p.C = j.contains("C") ? mat_from_json(j.at("C"), n) : Mat::Identity(n, n);
    p.x_min = bound_from_json(j, "x_min", n, -kInfiniteBound);
    p.x_max = bound_from_json(j, "x_max", n, kInfiniteBound);
    p.u_min = bound_from_json(j, "u_min", m, -kInfiniteBound);
    p.u_max = bound_from_json(j, "u_max", m, kInfiniteBound);
    p.horizon = j.value("horizon", 1);
    p.Qx = mat_from_json(j.at("Qx"));
    p.Ru = mat_from_json(j.at("Ru"));
    if (j.contains("Qf") && !j.at("Qf").is_null()) {
      const json& qf = j.at("Qf");
      if (qf.is_string()) {
        if (qf.get<std::string>() != "lqr") throw ConfigError("Qf must be a matrix or \"lqr\"");
        p.Qf = solve_dare(p.A, p.B, p.Qx, p.Ru);
      } else {
        p.Qf = mat_from_json(qf);
      }
    }
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid problem definition: ") + e.what());
  }
}

inline json problem_to_json(const LtiProblem& p) {
  auto bound = [](const Vec& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::abs(v(i)) >= kInfiniteBound) {
        out.push_back(nullptr);
      } else {
        out.push_back(v(i));
      }
    }
    return out;
  };
  json j = {{"A", to_json(p.A)},         {"B", to_json(p.B)},         {"C", to_json(p.C)},
            {"x_min", bound(p.x_min)},   {"x_max", bound(p.x_max)},   {"u_min", bound(p.u_min)},
            {"u_max", bound(p.u_max)},   {"horizon", p.horizon},      {"Qx", to_json(p.Qx)},
            {"Ru", to_json(p.Ru)}};
  if (p.Qf) j["Qf"] = to_json(*p.Qf);
  return j;
}

}  // namespace empcnet::detail
