#include "ranknosh/json_io.hpp"

#include <charconv>
#include <system_error>

#include "ranknosh/errors.hpp"

namespace ranknosh {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

nlohmann::json space_to_json(const SearchSpaceSpec& space) {
  nlohmann::json j;
  j["name"] = space.name;
  j["num_nodes"] = space.num_nodes;
  j["op_vocabulary"] = space.op_vocabulary;
  j["structure"] = space.structure == DagStructure::kFixed ? "fixed_dag" : "free_dag";
  if (space.max_edges) j["max_edges"] = *space.max_edges;
  if (space.structure == DagStructure::kFixed) {
    nlohmann::json edges = nlohmann::json::array();
    for (auto [s, d] : space.fixed_edges) edges.push_back({s, d});
    j["fixed_edges"] = edges;
  }
  if (!space.pinned_ops.empty()) {
    nlohmann::json pins = nlohmann::json::array();
    for (const auto& p : space.pinned_ops) pins.push_back(p ? nlohmann::json(*p) : nlohmann::json());
    j["pinned_ops"] = pins;
  }
  return j;
}

SearchSpaceSpec space_from_json(const nlohmann::json& j) {
  SearchSpaceSpec s;
  try {
    s.name = j.at("name").get<std::string>();
    s.num_nodes = j.at("num_nodes").get<int>();
    s.op_vocabulary = j.at("op_vocabulary").get<std::vector<std::string>>();
    const auto structure = j.at("structure").get<std::string>();
    if (structure == "fixed_dag") {
      s.structure = DagStructure::kFixed;
    } else if (structure == "free_dag") {
      s.structure = DagStructure::kFree;
    } else {
      throw SpaceError("unknown structure '" + structure + "'");
    }
    if (j.contains("max_edges")) s.max_edges = j.at("max_edges").get<int>();
    if (j.contains("fixed_edges")) {
      for (const auto& e : j.at("fixed_edges")) s.fixed_edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }
    if (j.contains("pinned_ops")) {
      for (const auto& p : j.at("pinned_ops")) {
        s.pinned_ops.push_back(p.is_null() ? std::nullopt : std::optional<int>(p.get<int>()));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpaceError(std::string("malformed space description: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json arch_to_json(const Architecture& arch) {
  nlohmann::json j;
  j["ops"] = std::vector<int>(arch.ops().begin(), arch.ops().end());
  nlohmann::json edges = nlohmann::json::array();
  for (auto [s, d] : arch.edges()) edges.push_back({s, d});
  j["edges"] = edges;
  return j;
}

Architecture arch_from_json(const nlohmann::json& j, int num_ops) {
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return Architecture(j.at("ops").get<std::vector<int>>(), std::move(edges), num_ops);
}

}  // namespace ranknosh
