#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lonscape/core.hpp"
#include "lonscape/lon.hpp"
#include "lonscape/rng.hpp"

namespace testing_support {

using namespace lonscape;

inline Module circle(double radius, ControllerParams c = {}) {
  Module m;
  m.kind = ModuleKind::Circle;
  m.radius = radius;
  m.controller = c;
  return m;
}

inline Module rectangle(double w, double h, ControllerParams c = {}) {
  Module m;
  m.kind = ModuleKind::Rectangle;
  m.width = w;
  m.height = h;
  m.controller = c;
  return m;
}

inline PhenotypeNode node(int index, std::optional<int> parent, int site, int depth, Module m, int module_index = 0) {
  PhenotypeNode n;
  n.node_index = index;
  n.module_index = module_index;
  n.parent_index = parent;
  n.site = site;
  n.depth = depth;
  n.module = m;
  return n;
}

inline PhenotypeTree single(Module m) { return PhenotypeTree{{node(0, std::nullopt, 0, 0, m)}}; }

/// Random valid tree: nodes attach to random free sites of earlier nodes.
inline PhenotypeTree random_tree(RngStream& rng, int max_nodes = kMaxNodes) {
  const ModuleList list = random_module_list(rng);
  PhenotypeTree t;
  const int target = rng.uniform_int(1, max_nodes);
  const int root_module = rng.uniform_int(0, kModuleCount - 1);
  t.nodes.push_back(node(0, std::nullopt, 0, 0, list[static_cast<std::size_t>(root_module)], root_module));
  std::vector<std::array<bool, kSitesPerNode>> used(1);
  for (int attempt = 0; attempt < 400 && static_cast<int>(t.nodes.size()) < target; ++attempt) {
    const int p = rng.uniform_int(0, static_cast<int>(t.nodes.size()) - 1);
    const int site = rng.uniform_int(0, kSitesPerNode - 1);
    if (used[static_cast<std::size_t>(p)][static_cast<std::size_t>(site)]) continue;
    if (t.nodes[static_cast<std::size_t>(p)].depth >= kMaxDepth) continue;
    used[static_cast<std::size_t>(p)][static_cast<std::size_t>(site)] = true;
    const int mi = rng.uniform_int(0, kModuleCount - 1);
    t.nodes.push_back(node(static_cast<int>(t.nodes.size()), p, site, t.nodes[static_cast<std::size_t>(p)].depth + 1,
                           list[static_cast<std::size_t>(mi)], mi));
    used.push_back({});
  }
  return t;
}

/// LON over nodes 1..n (ids) with the given fitness values and edges given by position.
inline Lon make_lon(const std::vector<double>& fitness, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                    const std::vector<bool>& killed = {}) {
  Lon lon;
  lon.encoding = "test";
  for (std::size_t i = 0; i < fitness.size(); ++i) {
    LonNode n;
    n.id = i + 1;
    n.fitness = {fitness[i], !killed.empty() && killed[i]};
    n.runs = {0};
    lon.nodes.push_back(n);
  }
  for (auto [a, b] : edges) lon.edges.push_back({a + 1, b + 1, 1});
  return lon;
}

}  // namespace testing_support
