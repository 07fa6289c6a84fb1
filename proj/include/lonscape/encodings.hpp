#pragma once

// The three robot-design genotypes, their expression into phenotype trees and
// their mutation operators.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "lonscape/core.hpp"
#include "lonscape/error.hpp"
#include "lonscape/rng.hpp"

namespace lonscape {

enum class Encoding { Direct, LSystem, Cppn };

constexpr std::string_view to_string(Encoding e) {
  switch (e) {
    case Encoding::Direct: return "direct";
    case Encoding::LSystem: return "lsystem";
    case Encoding::Cppn: return "cppn";
  }
  return "unknown";
}

inline std::optional<Encoding> parse_encoding(std::string_view s) {
  if (s == "direct") return Encoding::Direct;
  if (s == "lsystem") return Encoding::LSystem;
  if (s == "cppn") return Encoding::Cppn;
  return std::nullopt;
}

struct MutationRates {
  double controller_rate = 0.0;
  double design_rate = 0.0;
  double gaussian_sigma = 0.2;

  bool operator==(const MutationRates&) const = default;

  bool valid() const noexcept {
    return controller_rate >= 0.0 && controller_rate <= 1.0 && design_rate >= 0.0 &&
           design_rate <= 1.0 && gaussian_sigma > 0.0;
  }
};

/// Tuned rates per encoding (controller, design); sigma 0.2 throughout.
constexpr MutationRates default_rates(Encoding e) {
  switch (e) {
    case Encoding::Direct: return {0.32, 0.16, 0.2};
    case Encoding::LSystem: return {0.16, 0.04, 0.2};
    case Encoding::Cppn: return {0.02, 0.02, 0.2};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Shared module-list mutation
// ---------------------------------------------------------------------------

inline void perturb_clamped(double& value, Range range, double sigma, RngStream& rng) {
  value = range.clamp(value + rng.gaussian(0.0, sigma));
}

/// Gaussian perturbation of shape (radius or width/height) and connection
/// angle, each with probability design_rate.
inline void mutate_module_geometry(ModuleList& list, const MutationRates& rates, RngStream& rng) {
  if (rates.design_rate <= 0.0) return;
  for (Module& m : list) {
    if (m.kind == ModuleKind::Circle) {
      if (rng.bernoulli(rates.design_rate)) perturb_clamped(m.radius, kRadiusRange, rates.gaussian_sigma, rng);
    } else {
      if (rng.bernoulli(rates.design_rate)) perturb_clamped(m.width, kSideRange, rates.gaussian_sigma, rng);
      if (rng.bernoulli(rates.design_rate)) perturb_clamped(m.height, kSideRange, rates.gaussian_sigma, rng);
    }
    if (rng.bernoulli(rates.design_rate))
      perturb_clamped(m.connection_angle, kAngleRange, rates.gaussian_sigma, rng);
  }
}

inline void mutate_module_controllers(ModuleList& list, const MutationRates& rates, RngStream& rng) {
  if (rates.controller_rate <= 0.0) return;
  for (Module& m : list) {
    ControllerParams& c = m.controller;
    if (rng.bernoulli(rates.controller_rate)) perturb_clamped(c.amplitude, kAmplitudeRange, rates.gaussian_sigma, rng);
    if (rng.bernoulli(rates.controller_rate)) perturb_clamped(c.frequency, kFrequencyRange, rates.gaussian_sigma, rng);
    if (rng.bernoulli(rates.controller_rate)) perturb_clamped(c.phase, kPhaseRange, rates.gaussian_sigma, rng);
    if (rng.bernoulli(rates.controller_rate)) perturb_clamped(c.offset, kOffsetRange, rates.gaussian_sigma, rng);
  }
}

// ---------------------------------------------------------------------------
// Direct encoding
// ---------------------------------------------------------------------------

struct DirectNode {
  int module_index = 0;
  std::optional<int> parent_index;
  int site = 0;

  bool operator==(const DirectNode&) const = default;
};

/// Explicit tree. node_index is the position in `nodes`; parents precede children.
struct DirectGenotype {
  std::vector<DirectNode> nodes;
  ModuleList module_list{};

  bool operator==(const DirectGenotype&) const = default;
};

namespace detail {

inline PhenotypeTree direct_tree_unchecked(const DirectGenotype& g) {
  PhenotypeTree tree;
  tree.nodes.reserve(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const DirectNode& dn = g.nodes[i];
    PhenotypeNode pn;
    pn.node_index = static_cast<int>(i);
    pn.module_index = dn.module_index;
    pn.parent_index = dn.parent_index;
    pn.site = dn.parent_index ? dn.site : 0;
    if (dn.parent_index && *dn.parent_index >= 0 && static_cast<std::size_t>(*dn.parent_index) < i)
      pn.depth = tree.nodes[static_cast<std::size_t>(*dn.parent_index)].depth + 1;
    else if (dn.parent_index)
      pn.depth = -1;  // flagged by validate_tree as a depth mismatch
    if (dn.module_index >= 0 && dn.module_index < kModuleCount)
      pn.module = g.module_list[static_cast<std::size_t>(dn.module_index)];
    tree.nodes.push_back(pn);
  }
  return tree;
}

}  // namespace detail

inline bool is_valid(const DirectGenotype& g) {
  if (!module_list_valid(g.module_list)) return false;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (g.nodes[i].parent_index && *g.nodes[i].parent_index >= static_cast<int>(i)) return false;
  return is_valid_tree(detail::direct_tree_unchecked(g));
}

inline PhenotypeTree express_direct(const DirectGenotype& g) {
  if (!is_valid(g)) throw Error(ErrorCode::InvalidGenotype, "direct genotype violates tree limits");
  return detail::direct_tree_unchecked(g);
}

inline DirectGenotype random_direct(RngStream& rng) {
  DirectGenotype g;
  g.module_list = random_module_list(rng);
  g.nodes.push_back({rng.uniform_int(0, kModuleCount - 1), std::nullopt, 0});
  for (int site = 0; site < kSitesPerNode; ++site)
    if (rng.bernoulli(0.5)) g.nodes.push_back({rng.uniform_int(0, kModuleCount - 1), 0, site});
  return g;
}

/// Removals (rate halved, whole subtree), then additions at the open sites of
/// the remaining tree, then module-list shape/angle perturbation.
inline DirectGenotype mutate_direct(DirectGenotype g, const MutationRates& rates, RngStream& rng) {
  if (rates.design_rate <= 0.0) return g;
  const double remove_rate = rates.design_rate / 2.0;

  std::vector<bool> removed(g.nodes.size(), false);
  for (std::size_t i = 1; i < g.nodes.size(); ++i) {
    if (removed[i]) continue;
    if (rng.bernoulli(remove_rate)) {
      removed[i] = true;
      // Parents precede children, so one forward sweep marks the whole subtree.
      for (std::size_t j = i + 1; j < g.nodes.size(); ++j)
        if (!removed[j] && removed[static_cast<std::size_t>(*g.nodes[j].parent_index)]) removed[j] = true;
    }
  }
  if (std::find(removed.begin(), removed.end(), true) != removed.end()) {
    std::vector<int> remap(g.nodes.size(), -1);
    std::vector<DirectNode> kept;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (removed[i]) continue;
      DirectNode n = g.nodes[i];
      if (n.parent_index) n.parent_index = remap[static_cast<std::size_t>(*n.parent_index)];
      remap[i] = static_cast<int>(kept.size());
      kept.push_back(n);
    }
    g.nodes = std::move(kept);
  }

  const std::size_t existing = g.nodes.size();
  std::vector<int> depth(existing, 0);
  std::vector<std::array<bool, kSitesPerNode>> occupied(existing, std::array<bool, kSitesPerNode>{});
  for (std::size_t i = 0; i < existing; ++i) {
    if (const auto& p = g.nodes[i].parent_index) {
      depth[i] = depth[static_cast<std::size_t>(*p)] + 1;
      occupied[static_cast<std::size_t>(*p)][static_cast<std::size_t>(g.nodes[i].site)] = true;
    }
  }
  for (std::size_t i = 0; i < existing; ++i) {
    for (int site = 0; site < kSitesPerNode; ++site) {
      if (occupied[i][static_cast<std::size_t>(site)]) continue;
      if (!rng.bernoulli(rates.design_rate)) continue;
      const int module = rng.uniform_int(0, kModuleCount - 1);
      if (depth[i] + 1 > kMaxDepth || g.nodes.size() >= static_cast<std::size_t>(kMaxNodes)) continue;
      g.nodes.push_back({module, static_cast<int>(i), site});
    }
  }

  mutate_module_geometry(g.module_list, rates, rng);
  return g;
}

// ---------------------------------------------------------------------------
// L-System encoding
// ---------------------------------------------------------------------------

using RuleSlot = std::optional<int>;  // empty slot attaches nothing
using Rule = std::array<RuleSlot, kSitesPerNode>;

/// Eight symbols, one per module; rule[s][k] is the symbol attached at site k
/// of every node carrying symbol s.
struct LSystemGenotype {
  int axiom = 0;
  std::array<Rule, kModuleCount> rules{};
  ModuleList module_list{};

  bool operator==(const LSystemGenotype&) const = default;
};

inline bool is_valid(const LSystemGenotype& g) {
  if (g.axiom < 0 || g.axiom >= kModuleCount) return false;
  for (const Rule& r : g.rules)
    for (const RuleSlot& s : r)
      if (s && (*s < 0 || *s >= kModuleCount)) return false;
  return module_list_valid(g.module_list);
}

/// Breadth-first growth from the axiom, in site order, until the depth or
/// size limit is met. The first node past the size limit and every later one
/// are dropped.
inline PhenotypeTree express_lsystem(const LSystemGenotype& g) {
  if (!is_valid(g)) throw Error(ErrorCode::InvalidGenotype, "L-System symbol out of range");
  PhenotypeTree tree;
  auto add = [&](int symbol, std::optional<int> parent, int site, int depth) {
    PhenotypeNode n;
    n.node_index = static_cast<int>(tree.nodes.size());
    n.module_index = symbol;
    n.parent_index = parent;
    n.site = site;
    n.depth = depth;
    n.module = g.module_list[static_cast<std::size_t>(symbol)];
    tree.nodes.push_back(n);
  };
  add(g.axiom, std::nullopt, 0, 0);
  for (std::size_t cursor = 0; cursor < tree.nodes.size(); ++cursor) {
    const PhenotypeNode parent = tree.nodes[cursor];
    if (parent.depth >= kMaxDepth) continue;
    const Rule& rule = g.rules[static_cast<std::size_t>(parent.module_index)];
    for (int k = 0; k < kSitesPerNode; ++k) {
      const RuleSlot& slot = rule[static_cast<std::size_t>(k)];
      if (!slot) continue;
      if (tree.nodes.size() >= static_cast<std::size_t>(kMaxNodes)) return tree;
      add(*slot, parent.node_index, k, parent.depth + 1);
    }
  }
  return tree;
}

inline LSystemGenotype random_lsystem(RngStream& rng) {
  LSystemGenotype g;
  g.module_list = random_module_list(rng);
  g.axiom = rng.uniform_int(0, kModuleCount - 1);
  for (Rule& r : g.rules)
    for (RuleSlot& s : r)
      if (!rng.bernoulli(0.5)) s = rng.uniform_int(0, kModuleCount - 1);
  return g;
}

/// Each rule slot toggles with probability design_rate: empty slots receive a
/// random symbol, filled slots are emptied.
inline LSystemGenotype mutate_lsystem(LSystemGenotype g, const MutationRates& rates, RngStream& rng) {
  if (rates.design_rate <= 0.0) return g;
  for (Rule& r : g.rules) {
    for (RuleSlot& s : r) {
      if (!rng.bernoulli(rates.design_rate)) continue;
      if (s)
        s.reset();
      else
        s = rng.uniform_int(0, kModuleCount - 1);
    }
  }
  mutate_module_geometry(g.module_list, rates, rng);
  return g;
}

// ---------------------------------------------------------------------------
// CPPN encoding
// ---------------------------------------------------------------------------

enum class NodeRole : std::uint8_t { Input = 0, Hidden = 1, Output = 2 };
enum class Activation : std::uint8_t { Gaussian = 0, Sine = 1, Sigmoid = 2, Identity = 3 };

inline constexpr int kCppnInputs = 3;
inline constexpr int kCppnOutputs = 6;
inline constexpr Range kWeightRange{-3.0, 3.0};
inline constexpr Range kBiasRange{-1.0, 1.0};

constexpr std::string_view to_string(NodeRole r) {
  switch (r) {
    case NodeRole::Input: return "input";
    case NodeRole::Hidden: return "hidden";
    case NodeRole::Output: return "output";
  }
  return "unknown";
}

constexpr std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Gaussian: return "gaussian";
    case Activation::Sine: return "sine";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Identity: return "identity";
  }
  return "unknown";
}

inline double logistic(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

inline double activate(Activation a, double x) noexcept {
  switch (a) {
    case Activation::Gaussian: return std::exp(-x * x);
    case Activation::Sine: return std::sin(x);
    case Activation::Sigmoid: return logistic(x);
    case Activation::Identity: return x;
  }
  return x;
}

struct CppnNode {
  int id = 0;
  NodeRole role = NodeRole::Hidden;
  Activation activation = Activation::Identity;
  double bias = 0.0;

  bool operator==(const CppnNode&) const = default;
};

struct CppnConnection {
  int from = 0;
  int to = 0;
  double weight = 0.0;
  bool enabled = true;

  bool operator==(const CppnConnection&) const = default;
};

/// Inputs carry ids 0..2 and outputs 3..8; hidden nodes get fresh ids above those.
/// Input order: (site depth, parent module index, site angle).
/// Output order: (attach gate, module type, amplitude, frequency, phase, offset).
struct CppnGenotype {
  std::vector<CppnNode> nodes;
  std::vector<CppnConnection> connections;
  ModuleList module_list{};

  bool operator==(const CppnGenotype&) const = default;

  std::optional<std::size_t> position_of(int id) const noexcept {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].id == id) return i;
    return std::nullopt;
  }

  std::vector<int> ids_with_role(NodeRole role) const {
    std::vector<int> ids;
    for (const auto& n : nodes)
      if (n.role == role) ids.push_back(n.id);
    return ids;
  }

  int next_id() const noexcept {
    int id = kCppnInputs + kCppnOutputs - 1;
    for (const auto& n : nodes) id = std::max(id, n.id);
    return id + 1;
  }
};

namespace detail {

inline std::unordered_map<int, std::size_t> cppn_positions(const CppnGenotype& g) {
  std::unordered_map<int, std::size_t> pos;
  pos.reserve(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) pos.emplace(g.nodes[i].id, i);
  return pos;
}

/// Kahn's algorithm over enabled connections; empty when a cycle exists or a
/// connection names a missing node.
inline std::optional<std::vector<std::size_t>> cppn_topological_order(
    const CppnGenotype& g, const std::unordered_map<int, std::size_t>& pos) {
  const std::size_t n = g.nodes.size();
  std::vector<int> indegree(n, 0);
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& c : g.connections) {
    if (!c.enabled) continue;
    const auto from = pos.find(c.from);
    const auto to = pos.find(c.to);
    if (from == pos.end() || to == pos.end()) return std::nullopt;
    out[from->second].push_back(to->second);
    ++indegree[to->second];
  }
  std::deque<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const std::size_t i = ready.front();
    ready.pop_front();
    order.push_back(i);
    for (std::size_t j : out[i])
      if (--indegree[j] == 0) ready.push_back(j);
  }
  if (order.size() != n) return std::nullopt;
  return order;
}

inline std::optional<std::vector<std::size_t>> cppn_topological_order(const CppnGenotype& g) {
  return cppn_topological_order(g, cppn_positions(g));
}

/// reach[a][b]: b is reachable from a along enabled connections (a reaches itself).
/// Requires an acyclic network.
inline std::vector<std::vector<bool>> cppn_reachability(const CppnGenotype& g) {
  const auto pos = cppn_positions(g);
  const auto order = cppn_topological_order(g, pos);
  if (!order) throw Error(ErrorCode::CycleDetected, "CPPN connections contain a cycle");
  const std::size_t n = g.nodes.size();
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& c : g.connections)
    if (c.enabled) out[pos.at(c.from)].push_back(pos.at(c.to));
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (auto it = order->rbegin(); it != order->rend(); ++it) {
    auto& r = reach[*it];
    r[*it] = true;
    for (std::size_t w : out[*it])
      for (std::size_t k = 0; k < n; ++k)
        if (reach[w][k]) r[k] = true;
  }
  return reach;
}

}  // namespace detail

inline bool is_acyclic(const CppnGenotype& g) { return detail::cppn_topological_order(g).has_value(); }

inline bool is_valid(const CppnGenotype& g) {
  if (!module_list_valid(g.module_list)) return false;
  for (int i = 0; i < kCppnInputs; ++i) {
    const auto p = g.position_of(i);
    if (!p || g.nodes[*p].role != NodeRole::Input) return false;
  }
  for (int i = 0; i < kCppnOutputs; ++i) {
    const auto p = g.position_of(kCppnInputs + i);
    if (!p || g.nodes[*p].role != NodeRole::Output) return false;
  }
  if (g.ids_with_role(NodeRole::Input).size() != kCppnInputs ||
      g.ids_with_role(NodeRole::Output).size() != kCppnOutputs)
    return false;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (std::size_t j = i + 1; j < g.nodes.size(); ++j)
      if (g.nodes[i].id == g.nodes[j].id) return false;
  for (const auto& c : g.connections) {
    const auto to = g.position_of(c.to);
    if (!g.position_of(c.from) || !to || g.nodes[*to].role == NodeRole::Input) return false;
  }
  return is_acyclic(g);
}

using CppnOutputs = std::array<double, kCppnOutputs>;

namespace detail {

/// Evaluation plan: nodes in topological order with their enabled outgoing
/// connections resolved to positions. Built once, queried many times.
class CompiledCppn {
 public:
  explicit CompiledCppn(const CppnGenotype& g) {
    const auto pos = cppn_positions(g);
    auto order = cppn_topological_order(g, pos);
    if (!order) throw Error(ErrorCode::CycleDetected, "CPPN connections contain a cycle");
    order_ = std::move(*order);
    const std::size_t n = g.nodes.size();
    bias_.resize(n);
    activation_.resize(n);
    input_slot_.assign(n, -1);
    outgoing_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const CppnNode& node = g.nodes[i];
      bias_[i] = node.bias;
      activation_[i] = node.activation;
      if (node.role == NodeRole::Input) input_slot_[i] = (node.id >= 0 && node.id < kCppnInputs) ? node.id : kCppnInputs;
    }
    for (const auto& c : g.connections)
      if (c.enabled) outgoing_[pos.at(c.from)].emplace_back(pos.at(c.to), c.weight);
    for (int k = 0; k < kCppnOutputs; ++k) output_pos_[static_cast<std::size_t>(k)] = pos.at(kCppnInputs + k);
    sum_.resize(n);
    value_.resize(n);
  }

  CppnOutputs operator()(std::span<const double, kCppnInputs> inputs) {
    std::copy(bias_.begin(), bias_.end(), sum_.begin());
    for (std::size_t i : order_) {
      const int slot = input_slot_[i];
      if (slot >= 0)
        value_[i] = slot < kCppnInputs ? inputs[static_cast<std::size_t>(slot)] : 0.0;
      else
        value_[i] = activate(activation_[i], sum_[i]);
      for (const auto& [to, weight] : outgoing_[i]) sum_[to] += weight * value_[i];
    }
    CppnOutputs out{};
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = value_[output_pos_[k]];
    return out;
  }

  CppnOutputs operator()(double depth, double parent_module, double angle) {
    const std::array<double, kCppnInputs> in{depth, parent_module, angle};
    return (*this)(std::span<const double, kCppnInputs>(in));
  }

 private:
  std::vector<std::size_t> order_;
  std::vector<double> bias_;
  std::vector<Activation> activation_;
  std::vector<int> input_slot_;  // input index for input nodes, -1 otherwise
  std::vector<std::vector<std::pair<std::size_t, double>>> outgoing_;
  std::array<std::size_t, kCppnOutputs> output_pos_{};
  std::vector<double> sum_;
  std::vector<double> value_;
};

}  // namespace detail

/// Feed-forward evaluation in topological order. Input nodes pass their value
/// through; every other node computes activation(bias + sum of weighted inputs).
inline CppnOutputs cppn_forward(const CppnGenotype& g, std::span<const double, kCppnInputs> inputs) {
  return detail::CompiledCppn(g)(inputs);
}

inline CppnOutputs cppn_forward(const CppnGenotype& g, double depth, double parent_module, double angle) {
  const std::array<double, kCppnInputs> in{depth, parent_module, angle};
  return cppn_forward(g, std::span<const double, kCppnInputs>(in));
}

inline double scale_unit(double unit, Range range) noexcept { return range.lo + unit * range.span(); }

namespace detail {

inline ControllerParams controller_from_outputs(const CppnOutputs& o) {
  ControllerParams c;
  c.amplitude = scale_unit(logistic(o[2]), kAmplitudeRange);
  c.frequency = scale_unit(logistic(o[3]), kFrequencyRange);
  c.phase = scale_unit(logistic(o[4]), kPhaseRange);
  c.offset = scale_unit(logistic(o[5]), kOffsetRange);
  return c;
}

inline int module_from_output(double o) {
  const int idx = static_cast<int>(std::floor(logistic(o) * kModuleCount));
  return std::clamp(idx, 0, kModuleCount - 1);
}

}  // namespace detail

/// Root is module 0 queried at (0, 0, 0); every open site is then queried
/// breadth-first with (site depth, parent module index, site angle).
inline PhenotypeTree express_cppn(const CppnGenotype& g) {
  if (!is_valid(g)) throw Error(ErrorCode::InvalidGenotype, "CPPN genotype is malformed");
  detail::CompiledCppn net(g);
  PhenotypeTree tree;
  {
    const CppnOutputs o = net(0.0, 0.0, 0.0);
    PhenotypeNode root;
    root.module_index = 0;
    root.module = g.module_list[0];
    root.module.controller = detail::controller_from_outputs(o);
    tree.nodes.push_back(root);
  }
  for (std::size_t cursor = 0; cursor < tree.nodes.size(); ++cursor) {
    const PhenotypeNode parent = tree.nodes[cursor];
    if (parent.depth >= kMaxDepth) continue;
    for (int k = 0; k < kSitesPerNode; ++k) {
      const int depth = parent.depth + 1;
      const double angle = nominal_site_angle(k) + parent.module.connection_angle;
      const CppnOutputs o = net(static_cast<double>(depth), static_cast<double>(parent.module_index), angle);
      if (!(o[0] > 0.0)) continue;
      if (tree.nodes.size() >= static_cast<std::size_t>(kMaxNodes)) return tree;
      PhenotypeNode n;
      n.node_index = static_cast<int>(tree.nodes.size());
      n.module_index = detail::module_from_output(o[1]);
      n.parent_index = parent.node_index;
      n.site = k;
      n.depth = depth;
      n.module = g.module_list[static_cast<std::size_t>(n.module_index)];
      n.module.controller = detail::controller_from_outputs(o);
      tree.nodes.push_back(n);
    }
  }
  return tree;
}

/// Inputs fully connected to outputs, no hidden nodes. Outputs use the
/// identity activation; expression applies the logistic squash itself.
inline CppnGenotype random_cppn(RngStream& rng) {
  CppnGenotype g;
  g.module_list = random_module_list(rng);
  for (int i = 0; i < kCppnInputs; ++i) g.nodes.push_back({i, NodeRole::Input, Activation::Identity, 0.0});
  for (int i = 0; i < kCppnOutputs; ++i)
    g.nodes.push_back({kCppnInputs + i, NodeRole::Output, Activation::Identity, rng.uniform(kBiasRange.lo, kBiasRange.hi)});
  for (int i = 0; i < kCppnInputs; ++i)
    for (int o = 0; o < kCppnOutputs; ++o)
      g.connections.push_back({i, kCppnInputs + o, rng.uniform(-1.0, 1.0), true});
  return g;
}

namespace cppn_ops {

inline bool add_connection(CppnGenotype& g, RngStream& rng) {
  const auto reach = detail::cppn_reachability(g);
  std::set<std::pair<int, int>> existing;
  for (const auto& c : g.connections) existing.emplace(c.from, c.to);
  std::vector<std::pair<int, int>> candidates;
  for (std::size_t s = 0; s < g.nodes.size(); ++s) {
    const CppnNode& src = g.nodes[s];
    if (src.role == NodeRole::Output) continue;
    for (std::size_t d = 0; d < g.nodes.size(); ++d) {
      const CppnNode& dst = g.nodes[d];
      if (dst.role == NodeRole::Input || s == d) continue;
      // dst reaching src would close a cycle.
      if (reach[d][s] || existing.contains({src.id, dst.id})) continue;
      candidates.emplace_back(src.id, dst.id);
    }
  }
  if (candidates.empty()) return false;
  const auto [from, to] = candidates[rng.below(candidates.size())];
  g.connections.push_back({from, to, rng.uniform(-1.0, 1.0), true});
  return true;
}

inline bool delete_connection(CppnGenotype& g, RngStream& rng) {
  if (g.connections.empty()) return false;
  g.connections.erase(g.connections.begin() + static_cast<std::ptrdiff_t>(rng.below(g.connections.size())));
  return true;
}

/// Splits an enabled connection a->b into a->new (weight 1) and new->b (old weight).
inline bool add_node(CppnGenotype& g, RngStream& rng) {
  std::vector<std::size_t> enabled;
  for (std::size_t i = 0; i < g.connections.size(); ++i)
    if (g.connections[i].enabled) enabled.push_back(i);
  if (enabled.empty()) return false;
  CppnConnection& split = g.connections[enabled[rng.below(enabled.size())]];
  split.enabled = false;
  const CppnConnection old = split;
  const int id = g.next_id();
  const auto activation = static_cast<Activation>(rng.below(4));
  g.nodes.push_back({id, NodeRole::Hidden, activation, 0.0});
  g.connections.push_back({old.from, id, 1.0, true});
  g.connections.push_back({id, old.to, old.weight, true});
  return true;
}

inline bool delete_node(CppnGenotype& g, RngStream& rng) {
  const std::vector<int> hidden = g.ids_with_role(NodeRole::Hidden);
  if (hidden.empty()) return false;
  const int id = hidden[rng.below(hidden.size())];
  std::erase_if(g.nodes, [id](const CppnNode& n) { return n.id == id; });
  std::erase_if(g.connections, [id](const CppnConnection& c) { return c.from == id || c.to == id; });
  return true;
}

inline bool replace_bias(CppnGenotype& g, RngStream& rng) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (g.nodes[i].role != NodeRole::Input) eligible.push_back(i);
  if (eligible.empty()) return false;
  g.nodes[eligible[rng.below(eligible.size())]].bias = rng.uniform(kBiasRange.lo, kBiasRange.hi);
  return true;
}

}  // namespace cppn_ops

inline CppnGenotype mutate_cppn(CppnGenotype g, const MutationRates& rates, RngStream& rng) {
  if (rates.design_rate <= 0.0) return g;
  if (rng.bernoulli(rates.design_rate)) cppn_ops::add_connection(g, rng);
  if (rng.bernoulli(rates.design_rate)) cppn_ops::delete_connection(g, rng);
  if (rng.bernoulli(rates.design_rate)) cppn_ops::add_node(g, rng);
  if (rng.bernoulli(rates.design_rate)) cppn_ops::delete_node(g, rng);
  if (rng.bernoulli(rates.design_rate)) cppn_ops::replace_bias(g, rng);
  for (auto& c : g.connections)
    if (rng.bernoulli(rates.design_rate)) perturb_clamped(c.weight, kWeightRange, rates.gaussian_sigma, rng);
  mutate_module_geometry(g.module_list, rates, rng);
  return g;
}

// ---------------------------------------------------------------------------
// Encoding-agnostic interface
// ---------------------------------------------------------------------------

using Genotype = std::variant<DirectGenotype, LSystemGenotype, CppnGenotype>;

inline Encoding encoding_of(const Genotype& g) noexcept {
  return static_cast<Encoding>(g.index());
}

inline bool is_valid(const Genotype& g) {
  return std::visit([](const auto& x) { return is_valid(x); }, g);
}

inline PhenotypeTree express(const Genotype& g) {
  return std::visit(
      [](const auto& x) -> PhenotypeTree {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DirectGenotype>)
          return express_direct(x);
        else if constexpr (std::is_same_v<T, LSystemGenotype>)
          return express_lsystem(x);
        else
          return express_cppn(x);
      },
      g);
}

inline Genotype random_genotype(Encoding e, RngStream& rng) {
  switch (e) {
    case Encoding::Direct: return random_direct(rng);
    case Encoding::LSystem: return random_lsystem(rng);
    case Encoding::Cppn: return random_cppn(rng);
  }
  throw Error(ErrorCode::InvalidGenotype, "unknown encoding");
}

inline Genotype mutate_design(const Genotype& g, const MutationRates& rates, RngStream& rng) {
  return std::visit(
      [&](const auto& x) -> Genotype {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DirectGenotype>)
          return mutate_direct(x, rates, rng);
        else if constexpr (std::is_same_v<T, LSystemGenotype>)
          return mutate_lsystem(x, rates, rng);
        else
          return mutate_cppn(x, rates, rng);
      },
      g);
}

/// Controller parameters of the module list; a no-op for CPPN genotypes, whose
/// controllers are network outputs.
inline Genotype mutate_controllers(Genotype g, const MutationRates& rates, RngStream& rng) {
  std::visit(
      [&](auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (!std::is_same_v<T, CppnGenotype>) mutate_module_controllers(x.module_list, rates, rng);
      },
      g);
  return g;
}

/// One neighbour step: a design pass followed by a controller pass.
inline Genotype mutate_bundle(const Genotype& g, const MutationRates& rates, RngStream& rng) {
  return mutate_controllers(mutate_design(g, rates, rng), rates, rng);
}

// ---------------------------------------------------------------------------
// Genotype identity
// ---------------------------------------------------------------------------

namespace detail {

inline void put_module_list(std::vector<std::uint8_t>& out, const ModuleList& list) {
  for (const Module& m : list) {
    put_u8(out, static_cast<std::uint8_t>(m.kind));
    put_real(out, m.width);
    put_real(out, m.height);
    put_real(out, m.radius);
    put_real(out, m.connection_angle);
    put_real(out, m.controller.amplitude);
    put_real(out, m.controller.frequency);
    put_real(out, m.controller.phase);
    put_real(out, m.controller.offset);
  }
}

inline void put_i32(std::vector<std::uint8_t>& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }

}  // namespace detail

/// Tag byte (encoding), then encoding-specific fields, then the module list.
/// Reals use the same 6-decimal fixed point as phenotype bytes.
inline std::vector<std::uint8_t> genotype_bytes(const Genotype& g) {
  std::vector<std::uint8_t> out;
  detail::put_u8(out, static_cast<std::uint8_t>(g.index()));
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DirectGenotype>) {
          detail::put_u32(out, static_cast<std::uint32_t>(x.nodes.size()));
          for (const auto& n : x.nodes) {
            detail::put_u8(out, static_cast<std::uint8_t>(n.module_index));
            detail::put_i32(out, n.parent_index.value_or(-1));
            detail::put_u8(out, static_cast<std::uint8_t>(n.site));
          }
        } else if constexpr (std::is_same_v<T, LSystemGenotype>) {
          detail::put_u8(out, static_cast<std::uint8_t>(x.axiom));
          for (const Rule& r : x.rules)
            for (const RuleSlot& s : r) detail::put_u8(out, s ? static_cast<std::uint8_t>(*s) : std::uint8_t{0xFF});
        } else {
          detail::put_u32(out, static_cast<std::uint32_t>(x.nodes.size()));
          for (const auto& n : x.nodes) {
            detail::put_i32(out, n.id);
            detail::put_u8(out, static_cast<std::uint8_t>(n.role));
            detail::put_u8(out, static_cast<std::uint8_t>(n.activation));
            detail::put_real(out, n.bias);
          }
          detail::put_u32(out, static_cast<std::uint32_t>(x.connections.size()));
          for (const auto& c : x.connections) {
            detail::put_i32(out, c.from);
            detail::put_i32(out, c.to);
            detail::put_real(out, c.weight);
            detail::put_u8(out, c.enabled ? 1 : 0);
          }
        }
        detail::put_module_list(out, x.module_list);
      },
      g);
  return out;
}

inline std::uint64_t hash_genotype(const Genotype& g) { return fnv1a64(genotype_bytes(g)); }

}  // namespace lonscape
