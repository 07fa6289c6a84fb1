#pragma once

// Domain types shared by every encoding: modules, oscillator controllers,
// phenotype trees, canonical serialization and hashing, and tree validation.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lonscape/error.hpp"
#include "lonscape/rng.hpp"

namespace lonscape {

inline constexpr int kModuleCount = 8;
inline constexpr int kCircleCount = 4;
inline constexpr int kSitesPerNode = 3;
/// Levels 0..6, i.e. the deepest allowed node has depth 6.
inline constexpr int kMaxLevels = 7;
inline constexpr int kMaxDepth = kMaxLevels - 1;
inline constexpr int kMaxNodes = 40;

struct Range {
  double lo;
  double hi;

  constexpr double clamp(double x) const noexcept { return std::clamp(x, lo, hi); }
  constexpr bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  constexpr double span() const noexcept { return hi - lo; }
};

inline constexpr Range kAmplitudeRange{-1.0, 1.0};
inline constexpr Range kFrequencyRange{-0.1, 0.1};
inline constexpr Range kPhaseRange{-1.0, 1.0};
inline constexpr Range kOffsetRange{-std::numbers::pi, std::numbers::pi};
inline constexpr Range kSideRange{0.5, 1.0};
inline constexpr Range kRadiusRange{0.25, 0.5};
inline constexpr Range kAngleRange{-std::numbers::pi, std::numbers::pi};

/// Sine oscillator driving one module: y(t) = amplitude * sin(frequency * t + phase) + offset.
struct ControllerParams {
  double amplitude = 0.0;
  double frequency = 0.0;  // rad per step
  double phase = 0.0;
  double offset = 0.0;

  bool operator==(const ControllerParams&) const = default;

  bool in_bounds() const noexcept {
    return kAmplitudeRange.contains(amplitude) && kFrequencyRange.contains(frequency) &&
           kPhaseRange.contains(phase) && kOffsetRange.contains(offset);
  }
};

inline double controller_wave(const ControllerParams& c, double t) noexcept {
  return c.amplitude * std::sin(c.frequency * t + c.phase) + c.offset;
}

enum class ModuleKind : std::uint8_t { Circle = 0, Rectangle = 1 };

constexpr std::string_view to_string(ModuleKind kind) {
  return kind == ModuleKind::Circle ? "circle" : "rectangle";
}

/// One reusable body part. Circles use radius only; rectangles use width and height.
struct Module {
  ModuleKind kind = ModuleKind::Circle;
  double width = 0.0;
  double height = 0.0;
  double radius = 0.0;
  double connection_angle = 0.0;
  ControllerParams controller{};

  bool operator==(const Module&) const = default;

  double area() const noexcept {
    return kind == ModuleKind::Circle ? std::numbers::pi * radius * radius : width * height;
  }

  bool in_bounds() const noexcept {
    const bool geometry = kind == ModuleKind::Circle
                              ? kRadiusRange.contains(radius)
                              : kSideRange.contains(width) && kSideRange.contains(height);
    return geometry && kAngleRange.contains(connection_angle) && controller.in_bounds();
  }
};

/// Indices 0-3 are circles, 4-7 rectangles.
using ModuleList = std::array<Module, kModuleCount>;

inline ControllerParams random_controller(RngStream& rng) {
  ControllerParams c;
  c.amplitude = rng.uniform(kAmplitudeRange.lo, kAmplitudeRange.hi);
  c.frequency = rng.uniform(kFrequencyRange.lo, kFrequencyRange.hi);
  c.phase = rng.uniform(kPhaseRange.lo, kPhaseRange.hi);
  c.offset = rng.uniform(kOffsetRange.lo, kOffsetRange.hi);
  return c;
}

inline ModuleList random_module_list(RngStream& rng) {
  ModuleList list{};
  for (int i = 0; i < kModuleCount; ++i) {
    Module& m = list[static_cast<std::size_t>(i)];
    if (i < kCircleCount) {
      m.kind = ModuleKind::Circle;
      m.radius = rng.uniform(kRadiusRange.lo, kRadiusRange.hi);
    } else {
      m.kind = ModuleKind::Rectangle;
      m.width = rng.uniform(kSideRange.lo, kSideRange.hi);
      m.height = rng.uniform(kSideRange.lo, kSideRange.hi);
    }
    m.connection_angle = rng.uniform(kAngleRange.lo, kAngleRange.hi);
    m.controller = random_controller(rng);
  }
  return list;
}

inline bool module_list_valid(const ModuleList& list) noexcept {
  for (int i = 0; i < kModuleCount; ++i) {
    const Module& m = list[static_cast<std::size_t>(i)];
    const ModuleKind expected = i < kCircleCount ? ModuleKind::Circle : ModuleKind::Rectangle;
    if (m.kind != expected || !m.in_bounds()) return false;
  }
  return true;
}

/// Nominal angle of connection site k relative to the parent, before the
/// parent's own connection angle is added.
constexpr double nominal_site_angle(int site) noexcept {
  return (site - 1) * (std::numbers::pi / 2.0);
}

struct PhenotypeNode {
  int node_index = 0;
  int module_index = 0;
  std::optional<int> parent_index;  // empty for the root
  int site = 0;
  int depth = 0;
  /// Geometry copied from the module list; controller resolved at expression time.
  Module module{};

  bool operator==(const PhenotypeNode&) const = default;
};

/// Nodes are stored with node_index equal to their position in the vector.
struct PhenotypeTree {
  std::vector<PhenotypeNode> nodes;

  bool operator==(const PhenotypeTree&) const = default;

  std::size_t size() const noexcept { return nodes.size(); }

  int max_depth() const noexcept {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
  }
};

enum class TreeViolationKind {
  Empty,
  NodeIndexMismatch,
  RootCount,
  BadParent,
  Cycle,
  DepthMismatch,
  DepthExceeded,
  SizeExceeded,
  ChildrenExceeded,
  BadSite,
  DuplicateSite,
  BadModuleIndex,
};

constexpr std::string_view to_string(TreeViolationKind kind) {
  switch (kind) {
    case TreeViolationKind::Empty: return "EMPTY";
    case TreeViolationKind::NodeIndexMismatch: return "NODE_INDEX_MISMATCH";
    case TreeViolationKind::RootCount: return "ROOT_COUNT";
    case TreeViolationKind::BadParent: return "BAD_PARENT";
    case TreeViolationKind::Cycle: return "CYCLE";
    case TreeViolationKind::DepthMismatch: return "DEPTH_MISMATCH";
    case TreeViolationKind::DepthExceeded: return "DEPTH_EXCEEDED";
    case TreeViolationKind::SizeExceeded: return "SIZE_EXCEEDED";
    case TreeViolationKind::ChildrenExceeded: return "CHILDREN_EXCEEDED";
    case TreeViolationKind::BadSite: return "BAD_SITE";
    case TreeViolationKind::DuplicateSite: return "DUPLICATE_SITE";
    case TreeViolationKind::BadModuleIndex: return "BAD_MODULE_INDEX";
  }
  return "UNKNOWN";
}

struct TreeViolation {
  TreeViolationKind kind;
  int node_index;  // -1 when the violation concerns the whole tree

  bool operator==(const TreeViolation&) const = default;
};

/// Reports every violated invariant; an empty result means the tree is valid.
inline std::vector<TreeViolation> validate_tree(const PhenotypeTree& tree) {
  std::vector<TreeViolation> out;
  const int n = static_cast<int>(tree.nodes.size());
  if (n == 0) {
    out.push_back({TreeViolationKind::Empty, -1});
    return out;
  }
  if (n > kMaxNodes) out.push_back({TreeViolationKind::SizeExceeded, -1});

  int roots = 0;
  std::vector<int> child_count(static_cast<std::size_t>(n), 0);
  std::vector<std::array<bool, kSitesPerNode>> used(static_cast<std::size_t>(n),
                                                    std::array<bool, kSitesPerNode>{});
  bool parents_ok = true;
  for (int i = 0; i < n; ++i) {
    const PhenotypeNode& node = tree.nodes[static_cast<std::size_t>(i)];
    if (node.node_index != i) out.push_back({TreeViolationKind::NodeIndexMismatch, i});
    if (node.module_index < 0 || node.module_index >= kModuleCount)
      out.push_back({TreeViolationKind::BadModuleIndex, i});
    if (node.depth > kMaxDepth) out.push_back({TreeViolationKind::DepthExceeded, i});
    if (!node.parent_index) {
      ++roots;
      if (node.depth != 0) out.push_back({TreeViolationKind::DepthMismatch, i});
      continue;
    }
    const int p = *node.parent_index;
    if (p < 0 || p >= n || p == i) {
      out.push_back({TreeViolationKind::BadParent, i});
      parents_ok = false;
      continue;
    }
    auto& pc = child_count[static_cast<std::size_t>(p)];
    if (++pc == kSitesPerNode + 1) out.push_back({TreeViolationKind::ChildrenExceeded, p});
    if (node.site < 0 || node.site >= kSitesPerNode) {
      out.push_back({TreeViolationKind::BadSite, i});
    } else {
      bool& slot = used[static_cast<std::size_t>(p)][static_cast<std::size_t>(node.site)];
      if (slot) out.push_back({TreeViolationKind::DuplicateSite, i});
      slot = true;
    }
    if (node.depth != tree.nodes[static_cast<std::size_t>(p)].depth + 1)
      out.push_back({TreeViolationKind::DepthMismatch, i});
  }
  if (roots != 1) out.push_back({TreeViolationKind::RootCount, -1});

  if (parents_ok) {
    // Walking up from each node must reach a root within n steps.
    for (int i = 0; i < n; ++i) {
      int cur = i;
      int steps = 0;
      while (tree.nodes[static_cast<std::size_t>(cur)].parent_index && steps <= n) {
        cur = *tree.nodes[static_cast<std::size_t>(cur)].parent_index;
        ++steps;
      }
      if (steps > n) {
        out.push_back({TreeViolationKind::Cycle, i});
        break;
      }
    }
  }
  return out;
}

inline bool is_valid_tree(const PhenotypeTree& tree) { return validate_tree(tree).empty(); }

// ---------------------------------------------------------------------------
// Canonical bytes and hashing
// ---------------------------------------------------------------------------

inline constexpr double kQuantumScale = 1e6;

/// Fixed-point value with 6 decimal places.
inline std::int64_t quantize(double x) noexcept { return std::llround(x * kQuantumScale); }

namespace detail {

inline void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_i64(std::vector<std::uint8_t>& out, std::int64_t v) {
  const auto u = static_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

inline void put_real(std::vector<std::uint8_t>& out, double v) { put_i64(out, quantize(v)); }

}  // namespace detail

/// Deterministic serialization of a phenotype tree. See docs/canonical_bytes.md
/// for the exact layout.
inline std::vector<std::uint8_t> canonical_bytes(const PhenotypeTree& tree, bool include_controllers) {
  if (!is_valid_tree(tree)) throw Error(ErrorCode::InvalidTree, "canonical_bytes on invalid tree");

  const std::size_t n = tree.nodes.size();
  std::vector<std::array<int, kSitesPerNode>> children(n);
  for (auto& c : children) c.fill(-1);
  int root = 0;
  for (const auto& node : tree.nodes) {
    if (node.parent_index)
      children[static_cast<std::size_t>(*node.parent_index)][static_cast<std::size_t>(node.site)] =
          node.node_index;
    else
      root = node.node_index;
  }

  std::vector<std::uint8_t> out;
  out.reserve(4 + n * (3 + 8 * (include_controllers ? 8 : 4)));
  detail::put_u32(out, static_cast<std::uint32_t>(n));

  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    const PhenotypeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    const Module& m = node.module;
    detail::put_u8(out, static_cast<std::uint8_t>(m.kind));
    detail::put_u8(out, static_cast<std::uint8_t>(node.depth));
    detail::put_u8(out, node.parent_index ? static_cast<std::uint8_t>(node.site) : std::uint8_t{0xFF});
    detail::put_real(out, m.width);
    detail::put_real(out, m.height);
    detail::put_real(out, m.radius);
    detail::put_real(out, m.connection_angle);
    if (include_controllers) {
      detail::put_real(out, m.controller.amplitude);
      detail::put_real(out, m.controller.frequency);
      detail::put_real(out, m.controller.phase);
      detail::put_real(out, m.controller.offset);
    }
    const auto& kids = children[static_cast<std::size_t>(idx)];
    for (int k = kSitesPerNode - 1; k >= 0; --k)
      if (kids[static_cast<std::size_t>(k)] >= 0) stack.push_back(kids[static_cast<std::size_t>(k)]);
  }
  return out;
}

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                                std::uint64_t hash = kFnvOffsetBasis) noexcept {
  for (std::uint8_t b : bytes) {
    hash ^= b;
    hash *= kFnvPrime;
  }
  return hash;
}

inline std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t hash = kFnvOffsetBasis;
  for (char c : text) {
    hash ^= static_cast<std::uint8_t>(c);
    hash *= kFnvPrime;
  }
  return hash;
}

inline std::uint64_t hash_phenotype(const PhenotypeTree& tree) {
  return fnv1a64(canonical_bytes(tree, true));
}

/// Body-only hash: controllers do not participate.
inline std::uint64_t hash_design(const PhenotypeTree& tree) {
  return fnv1a64(canonical_bytes(tree, false));
}

inline std::string hash_to_hex(std::uint64_t h) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "0x0000000000000000";
  for (int i = 0; i < 16; ++i) s[static_cast<std::size_t>(17 - i)] = digits[(h >> (4 * i)) & 0xF];
  return s;
}

inline std::uint64_t hash_from_hex(std::string_view s) {
  if (s.size() != 18 || s[0] != '0' || s[1] != 'x')
    throw Error(ErrorCode::SchemaMismatch, "malformed hash '" + std::string(s) + "'");
  std::uint64_t h = 0;
  for (std::size_t i = 2; i < s.size(); ++i) {
    const char c = s[i];
    std::uint64_t d = 0;
    if (c >= '0' && c <= '9')
      d = static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f')
      d = static_cast<std::uint64_t>(c - 'a' + 10);
    else
      throw Error(ErrorCode::SchemaMismatch, "malformed hash '" + std::string(s) + "'");
    h = (h << 4) | d;
  }
  return h;
}

}  // namespace lonscape
