#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgrestore/feeder_io.hpp"
#include "mgrestore/trainer.hpp"

namespace mgrestore {

inline constexpr int kCheckpointFormatVersion = 1;

// What one per-agent checkpoint file holds: the agent's networks and the
// breakers its inputs and outputs are bound to.
struct Checkpoint {
  std::size_t agent = 0;
  std::vector<std::string> breakers;
  std::string feeder_hash;
  AgentPair networks;
};

namespace detail {

inline nlohmann::json network_to_json(const QNetwork& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers())
    layers.push_back({{"inputs", l.inputs}, {"outputs", l.outputs}, {"weights", l.weights}, {"biases", l.biases}});
  return layers;
}

inline QNetwork network_from_json(const nlohmann::json& layers, const std::string& where) {
  if (!layers.is_array() || layers.empty()) throw ParseError(where + ": layers must be a non-empty array");
  std::vector<std::size_t> widths;
  for (const auto& l : layers) {
    require_object(l, where + " layer");
    if (widths.empty()) widths.push_back(field<std::size_t>(l, "inputs", where));
    else if (field<std::size_t>(l, "inputs", where) != widths.back())
      throw ParseError(where + ": consecutive layer widths do not chain");
    widths.push_back(field<std::size_t>(l, "outputs", where));
  }
  QNetwork net(widths);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& dst = net.layers()[i];
    dst.weights = field<std::vector<double>>(layers[i], "weights", where);
    dst.biases = field<std::vector<double>>(layers[i], "biases", where);
    if (dst.weights.size() != dst.inputs * dst.outputs || dst.biases.size() != dst.outputs)
      throw ParseError(where + ": parameter count does not match layer shape");
  }
  return net;
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  return {{"format_version", kCheckpointFormatVersion},
          {"agent", c.agent},
          {"breakers", c.breakers},
          {"feeder_hash", c.feeder_hash},
          {"main", detail::network_to_json(c.networks.main)},
          {"target", detail::network_to_json(c.networks.target)}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& doc) {
  const std::string where = "checkpoint";
  detail::require_object(doc, where);
  if (detail::field<int>(doc, "format_version", where) != kCheckpointFormatVersion)
    throw ParseError("checkpoint: unsupported format_version");
  Checkpoint c;
  c.agent = detail::field<std::size_t>(doc, "agent", where);
  c.breakers = detail::field<std::vector<std::string>>(doc, "breakers", where);
  c.feeder_hash = detail::field<std::string>(doc, "feeder_hash", where);
  c.networks.main = detail::network_from_json(doc.at("main"), where + " main");
  c.networks.target = doc.contains("target") ? detail::network_from_json(doc["target"], where + " target")
                                             : c.networks.main;
  return c;
}

inline std::vector<Checkpoint> make_checkpoints(const TrainedModels& models) {
  std::vector<Checkpoint> out;
  const auto hash = feeder_hash(models.feeder);
  for (std::size_t i = 0; i < models.agents.size(); ++i) {
    Checkpoint c{i, {}, hash, models.agents[i]};
    for (auto b : models.feeder.agent_breakers(i)) c.breakers.push_back(models.feeder.breakers()[b].id);
    out.push_back(std::move(c));
  }
  return out;
}

/// Rebinds checkpoints to `f`. In single-agent form (one checkpoint covering
/// every breaker) the feeder's partition is collapsed to match. Breaker ids
/// must line up with the partition; the feeder hash is only compared when
/// `strict` is set.
inline TrainedModels bind_checkpoints(const Feeder& f, std::vector<Checkpoint> cps, bool strict = false) {
  const Feeder layout = (cps.size() == 1 && f.agent_count() != 1) ? f.with_single_agent() : f;
  if (cps.size() != layout.agent_count())
    throw DimensionError("feeder has " + std::to_string(layout.agent_count()) + " agents, got " +
                         std::to_string(cps.size()) + " checkpoints");
  std::sort(cps.begin(), cps.end(), [](const auto& a, const auto& b) { return a.agent < b.agent; });
  const auto hash = feeder_hash(layout);
  TrainedModels models{layout, {}};
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const auto& c = cps[i];
    if (c.agent != i) throw DimensionError("checkpoint agent indices are not 0.." + std::to_string(cps.size() - 1));
    const auto& mine = layout.agent_breakers(i);
    if (c.breakers.size() != mine.size())
      throw DimensionError("checkpoint " + std::to_string(i) + " covers a different breaker count");
    for (std::size_t k = 0; k < mine.size(); ++k)
      if (layout.breakers()[mine[k]].id != c.breakers[k])
        throw DimensionError("checkpoint " + std::to_string(i) + " expects breaker " + c.breakers[k] + " at position " +
                             std::to_string(k));
    if (strict && c.feeder_hash != hash) throw DimensionError("checkpoint was trained on a different feeder");
    if (c.networks.main.input_size() != mine.size() || c.networks.main.output_size() != 2 * mine.size())
      throw DimensionError("checkpoint " + std::to_string(i) + " network shape does not match its breakers");
    models.agents.push_back(c.networks);
  }
  return models;
}

}  // namespace mgrestore
