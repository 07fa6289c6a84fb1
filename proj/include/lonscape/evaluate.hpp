#pragma once

// Fitness on the 0-100 distance scale with the minimum-speed kill switch, and
// the deterministic locomotion surrogate used in place of a physics engine.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>
#include <string>

#include "lonscape/core.hpp"
#include "lonscape/error.hpp"

namespace lonscape {

inline constexpr double kKilledFitness = 5.0;
inline constexpr double kMaxFitness = 100.0;

struct Fitness {
  double value = 0.0;
  bool killed = false;

  bool operator==(const Fitness&) const = default;

  static constexpr Fitness kill() noexcept { return {kKilledFitness, true}; }
};

enum class EvaluatorKind { Surrogate, External };

struct EvaluatorConfig {
  EvaluatorKind kind = EvaluatorKind::Surrogate;
  double kill_speed = 0.04;
  double scale = 25.0;
  std::string external_command;
  double timeout_seconds = 120.0;

  bool operator==(const EvaluatorConfig&) const = default;

  bool valid() const noexcept {
    return kill_speed > 0.0 && scale > 0.0 && timeout_seconds > 0.0 &&
           (kind == EvaluatorKind::Surrogate || !external_command.empty());
  }
};

/// Mean over nodes of area * |amplitude| * (|frequency| / 0.1) * (1 - |offset| / pi) * sync,
/// where sync = cos^2((phase - parent phase) / 2) and 1 at the root.
inline double surrogate_velocity(const PhenotypeTree& tree) {
  if (!is_valid_tree(tree)) throw Error(ErrorCode::InvalidTree, "surrogate_velocity on invalid tree");
  double total = 0.0;
  for (const PhenotypeNode& node : tree.nodes) {
    const ControllerParams& c = node.module.controller;
    double sync = 1.0;
    if (node.parent_index) {
      const double parent_phase = tree.nodes[static_cast<std::size_t>(*node.parent_index)].module.controller.phase;
      const double half = (c.phase - parent_phase) / 2.0;
      sync = std::cos(half) * std::cos(half);
    }
    total += node.module.area() * std::abs(c.amplitude) * (std::abs(c.frequency) / kFrequencyRange.hi) *
             (1.0 - std::abs(c.offset) / std::numbers::pi) * sync;
  }
  return total / static_cast<double>(tree.nodes.size());
}

/// Kill iff strictly slower than kill_speed; otherwise scale onto [0, 100].
inline Fitness fitness_from_velocity(double velocity, const EvaluatorConfig& cfg) noexcept {
  if (velocity < cfg.kill_speed) return Fitness::kill();
  return {std::clamp(cfg.scale * velocity, 0.0, kMaxFitness), false};
}

/// Mapping applied to an external backend's reply: an explicit kill wins,
/// otherwise the same kill threshold applies to the reported distance.
inline Fitness fitness_from_distance(double distance, bool killed, const EvaluatorConfig& cfg) noexcept {
  if (killed || distance < cfg.kill_speed) return Fitness::kill();
  return {std::clamp(distance, 0.0, kMaxFitness), false};
}

template <class E>
concept Evaluator = requires(E& e, const PhenotypeTree& tree) {
  { e(tree) } -> std::convertible_to<Fitness>;
};

class SurrogateEvaluator {
 public:
  explicit SurrogateEvaluator(EvaluatorConfig cfg = {}) : cfg_(std::move(cfg)) {}

  Fitness operator()(const PhenotypeTree& tree) const {
    return fitness_from_velocity(surrogate_velocity(tree), cfg_);
  }

  const EvaluatorConfig& config() const noexcept { return cfg_; }

 private:
  EvaluatorConfig cfg_;
};

inline Fitness evaluate(const PhenotypeTree& tree, const EvaluatorConfig& cfg) {
  if (cfg.kind != EvaluatorKind::Surrogate)
    throw Error(ErrorCode::EvalBackendFailure, "evaluate() handles the surrogate only; use ExternalEvaluator");
  return SurrogateEvaluator(cfg)(tree);
}

}  // namespace lonscape
