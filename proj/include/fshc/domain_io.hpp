#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fshc/geometry.hpp"

namespace fshc {

namespace detail {

inline Rational json_rational(const nlohmann::json& j, const std::string& what) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long long>());
  throw Error(ErrorCode::ParseError, what + " must be a rational string \"p/q\" or an integer");
}

inline const nlohmann::json& json_field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::ParseError, where + ": missing \"" + key + "\"");
  return j.at(key);
}

}  // namespace detail

/// Reads the domain JSON format:
///   {"d":1,"base":{"interval_length":"1/3"},"maps":[{"ratio":"1/3"},...]}
/// d = 2 uses "base":{"vertices":[["x","y"],...]}, per-map "rotation" (2x2)
/// and "translation", and optionally "y_scale_squared" and
/// "declared_depth_for_disjointness_check".
inline IFSDomain domain_from_json(const nlohmann::json& j) {
  using detail::json_field;
  using detail::json_rational;
  IFSDomain dom;
  const auto& dj = json_field(j, "d", "domain");
  if (!dj.is_number_integer()) throw Error(ErrorCode::ParseError, "domain: \"d\" must be an integer");
  dom.d = dj.get<int>();
  if (dom.d != 1 && dom.d != 2) throw Error(ErrorCode::InvalidDomain, "domain: d must be 1 or 2");
  dom.name = j.value("name", std::string{});
  if (j.contains("y_scale_squared")) dom.y_scale_squared = json_rational(j["y_scale_squared"], "y_scale_squared");
  if (j.contains("declared_depth_for_disjointness_check"))
    dom.disjointness_depth = j["declared_depth_for_disjointness_check"].get<int>();

  const auto& base = json_field(j, "base", "domain");
  if (dom.d == 1) {
    dom.base.interval_length = json_rational(json_field(base, "interval_length", "base"), "interval_length");
  } else {
    for (const auto& v : json_field(base, "vertices", "base")) {
      if (!v.is_array() || v.size() != 2) throw Error(ErrorCode::ParseError, "base vertex must be [x, y]");
      dom.base.vertices.push_back({json_rational(v[0], "vertex"), json_rational(v[1], "vertex")});
    }
  }

  const auto& maps = json_field(j, "maps", "domain");
  if (!maps.is_array()) throw Error(ErrorCode::ParseError, "domain: \"maps\" must be an array");
  for (const auto& m : maps) {
    Similitude s;
    s.ratio = json_rational(json_field(m, "ratio", "map"), "ratio");
    if (dom.d == 1) {
      s.rotation = {1};
      if (m.contains("rotation")) {
        const auto& r = m["rotation"];
        const auto& e = r.is_array() ? (r[0].is_array() ? r[0][0] : r[0]) : r;
        s.rotation = {json_rational(e, "rotation")};
      }
      s.translation = {m.contains("translation") ? json_rational(m["translation"].is_array() ? m["translation"][0]
                                                                                         : m["translation"],
                                                                 "translation")
                                                 : Rational(0)};
    } else {
      s.rotation = {1, 0, 0, 1};
      if (m.contains("rotation")) {
        const auto& r = m["rotation"];
        if (!r.is_array() || r.size() != 2 || !r[0].is_array() || r[0].size() != 2 || !r[1].is_array() ||
            r[1].size() != 2)
          throw Error(ErrorCode::ParseError, "rotation must be a 2x2 matrix");
        s.rotation = {json_rational(r[0][0], "rotation"), json_rational(r[0][1], "rotation"),
                      json_rational(r[1][0], "rotation"), json_rational(r[1][1], "rotation")};
      }
      const auto& t = json_field(m, "translation", "map");
      if (!t.is_array() || t.size() != 2) throw Error(ErrorCode::ParseError, "translation must be [x, y]");
      s.translation = {json_rational(t[0], "translation"), json_rational(t[1], "translation")};
    }
    dom.maps.push_back(std::move(s));
  }
  return dom;
}

inline nlohmann::json domain_to_json(const IFSDomain& dom) {
  nlohmann::json j;
  j["d"] = dom.d;
  if (!dom.name.empty()) j["name"] = dom.name;
  if (dom.d == 1) {
    j["base"] = {{"interval_length", to_string(dom.base.interval_length)}};
  } else {
    nlohmann::json verts = nlohmann::json::array();
    for (const auto& v : dom.base.vertices) verts.push_back(nlohmann::json::array({to_string(v[0]), to_string(v[1])}));
    j["base"] = {{"vertices", verts}};
    if (dom.y_scale_squared != 1) j["y_scale_squared"] = to_string(dom.y_scale_squared);
    j["declared_depth_for_disjointness_check"] = dom.disjointness_depth;
  }
  j["maps"] = nlohmann::json::array();
  for (const auto& m : dom.maps) {
    nlohmann::json mj = {{"ratio", to_string(m.ratio)}};
    if (dom.d == 2) {
      mj["rotation"] = nlohmann::json::array({nlohmann::json::array({to_string(m.rotation[0]), to_string(m.rotation[1])}),
                                              nlohmann::json::array({to_string(m.rotation[2]), to_string(m.rotation[3])})});
      mj["translation"] = nlohmann::json::array({to_string(m.translation[0]), to_string(m.translation[1])});
    } else if (m.rotation[0] != 1) {
      mj["rotation"] = to_string(m.rotation[0]);
    }
    j["maps"].push_back(mj);
  }
  return j;
}

inline IFSDomain load_domain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open domain file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, "invalid JSON in '" + path + "': " + e.what());
  }
  try {
    return domain_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, "malformed domain in '" + path + "': " + e.what());
  }
}

/// Convenience constructor for d = 1 domains.
inline IFSDomain make_domain_1d(const Rational& length, const std::vector<Rational>& ratios, std::string name = {}) {
  IFSDomain dom;
  dom.d = 1;
  dom.name = std::move(name);
  dom.base.interval_length = length;
  for (const auto& r : ratios) dom.maps.push_back({r, {1}, {0}});
  return dom;
}

}  // namespace fshc
