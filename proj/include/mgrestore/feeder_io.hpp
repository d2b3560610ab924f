#pragma once

#include <cstdint>
#include <istream>
#include <iterator>
#include <string>

#include <nlohmann/json.hpp>

#include "mgrestore/grid.hpp"

namespace mgrestore {

inline constexpr int kFeederFormatVersion = 1;

namespace detail {

using nlohmann::json;

template <class T>
T field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + ": field '" + key + "' has the wrong type");
  }
}

template <class T>
T field_or(const json& obj, const char* key, T fallback, const std::string& where) {
  return obj.contains(key) ? field<T>(obj, key, where) : fallback;
}

inline const json& array_field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_array())
    throw ParseError(std::string("feeder document: '") + key + "' must be an array");
  return *it;
}

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + " must be an object");
}

}  // namespace detail

inline nlohmann::json feeder_to_json(const FeederData& d) {
  using nlohmann::json;
  json doc;
  doc["format_version"] = kFeederFormatVersion;
  doc["name"] = d.name;
  doc["base"] = {{"s_base_kva", d.base.s_base_kva}, {"v_base_kv", d.base.v_base_kv}};
  json buses = json::array();
  for (const auto& b : d.buses) buses.push_back({{"id", b.id}, {"v_min", b.v_min}, {"v_max", b.v_max}});
  json lines = json::array();
  for (const auto& l : d.lines)
    lines.push_back({{"id", l.id},
                     {"from_bus", l.from_bus},
                     {"to_bus", l.to_bus},
                     {"resistance", l.resistance},
                     {"reactance", l.reactance},
                     {"s_rating_kva", l.s_rating_kva}});
  json breakers = json::array();
  for (const auto& b : d.breakers)
    breakers.push_back({{"id", b.id}, {"line_id", b.line_id}, {"state", b.closed ? 1 : 0}});
  json loads = json::array();
  for (const auto& l : d.loads)
    loads.push_back({{"id", l.id},
                     {"bus_id", l.bus_id},
                     {"p_rated_kw", l.p_rated_kw},
                     {"q_rated_kvar", l.q_rated_kvar},
                     {"weight", l.weight},
                     {"breaker_id", l.breaker_id}});
  json gens = json::array();
  for (const auto& g : d.generators)
    gens.push_back({{"id", g.id},
                    {"bus_id", g.bus_id},
                    {"p_min_kw", g.p_min_kw},
                    {"p_max_kw", g.p_max_kw},
                    {"q_min_kvar", g.q_min_kvar},
                    {"q_max_kvar", g.q_max_kvar}});
  json partition = json::object();
  for (std::size_t a = 0; a < d.partition.agents.size(); ++a)
    partition[std::to_string(a)] = d.partition.agents[a];
  doc["buses"] = std::move(buses);
  doc["lines"] = std::move(lines);
  doc["breakers"] = std::move(breakers);
  doc["loads"] = std::move(loads);
  doc["generators"] = std::move(gens);
  doc["partition"] = std::move(partition);
  return doc;
}

inline FeederData feeder_from_json(const nlohmann::json& doc) {
  using detail::field;
  using detail::field_or;
  detail::require_object(doc, "feeder document");
  const int version = field<int>(doc, "format_version", "feeder document");
  if (version != kFeederFormatVersion)
    throw ParseError("unsupported feeder format_version " + std::to_string(version));

  FeederData d;
  d.name = field_or<std::string>(doc, "name", "", "feeder document");
  if (doc.contains("base")) {
    const auto& base = doc.at("base");
    detail::require_object(base, "base");
    d.base.s_base_kva = field<double>(base, "s_base_kva", "base");
    d.base.v_base_kv = field<double>(base, "v_base_kv", "base");
  }
  for (const auto& j : detail::array_field(doc, "buses")) {
    detail::require_object(j, "bus");
    Bus b;
    b.id = field<std::string>(j, "id", "bus");
    b.v_min = field_or<double>(j, "v_min", b.v_min, "bus " + b.id);
    b.v_max = field_or<double>(j, "v_max", b.v_max, "bus " + b.id);
    d.buses.push_back(std::move(b));
  }
  for (const auto& j : detail::array_field(doc, "lines")) {
    detail::require_object(j, "line");
    Line l;
    l.id = field<std::string>(j, "id", "line");
    const std::string where = "line " + l.id;
    l.from_bus = field<std::string>(j, "from_bus", where);
    l.to_bus = field<std::string>(j, "to_bus", where);
    l.resistance = field<double>(j, "resistance", where);
    l.reactance = field<double>(j, "reactance", where);
    l.s_rating_kva = field<double>(j, "s_rating_kva", where);
    d.lines.push_back(std::move(l));
  }
  for (const auto& j : detail::array_field(doc, "breakers")) {
    detail::require_object(j, "breaker");
    Breaker b;
    b.id = field<std::string>(j, "id", "breaker");
    b.line_id = field<std::string>(j, "line_id", "breaker " + b.id);
    const int state = field_or<int>(j, "state", 0, "breaker " + b.id);
    if (state != 0 && state != 1) throw ParseError("breaker " + b.id + ": state must be 0 or 1");
    b.closed = state == 1;
    d.breakers.push_back(std::move(b));
  }
  for (const auto& j : detail::array_field(doc, "loads")) {
    detail::require_object(j, "load");
    LoadPoint l;
    l.id = field<std::string>(j, "id", "load");
    const std::string where = "load " + l.id;
    l.bus_id = field<std::string>(j, "bus_id", where);
    l.p_rated_kw = field<double>(j, "p_rated_kw", where);
    l.q_rated_kvar = field_or<double>(j, "q_rated_kvar", 0.0, where);
    l.weight = field_or<double>(j, "weight", 1.0, where);
    l.breaker_id = field<std::string>(j, "breaker_id", where);
    d.loads.push_back(std::move(l));
  }
  for (const auto& j : detail::array_field(doc, "generators")) {
    detail::require_object(j, "generator");
    Generator g;
    g.id = field<std::string>(j, "id", "generator");
    const std::string where = "generator " + g.id;
    g.bus_id = field<std::string>(j, "bus_id", where);
    g.p_min_kw = field_or<double>(j, "p_min_kw", 0.0, where);
    g.p_max_kw = field<double>(j, "p_max_kw", where);
    g.q_min_kvar = field_or<double>(j, "q_min_kvar", 0.0, where);
    g.q_max_kvar = field_or<double>(j, "q_max_kvar", 0.0, where);
    d.generators.push_back(std::move(g));
  }
  auto it = doc.find("partition");
  if (it == doc.end() || !it->is_object())
    throw ParseError("feeder document: 'partition' must be an object");
  d.partition.agents.resize(it->size());
  for (const auto& [key, ids] : it->items()) {
    std::size_t agent = 0;
    try {
      std::size_t used = 0;
      agent = std::stoul(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ParseError("partition key '" + key + "' is not an agent index");
    }
    if (agent >= d.partition.agents.size())
      throw ParseError("partition agent indices must be 0..m-1, got " + key);
    try {
      d.partition.agents[agent] = ids.get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
      throw ParseError("partition agent " + key + " must be a list of breaker ids");
    }
  }
  return d;
}

inline std::string serialize_feeder(const FeederData& d) { return feeder_to_json(d).dump(2) + "\n"; }
inline std::string serialize_feeder(const Feeder& f) { return serialize_feeder(f.data()); }

/// Parses, resolves and validates a feeder document.
/// Throws ParseError, ReferenceError or ValidationError.
inline Feeder load_feeder(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("feeder document is not valid JSON: ") + e.what());
  }
  Feeder f(feeder_from_json(doc));
  auto report = validate_feeder(f);
  if (!report.ok()) throw ValidationError(std::move(report.violations));
  return f;
}

inline Feeder load_feeder(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_feeder(text);
}

// FNV-1a over the canonical serialization; identifies a feeder in caches.
inline std::string feeder_hash(const Feeder& f) {
  const std::string canonical = feeder_to_json(f.data()).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

}  // namespace mgrestore
