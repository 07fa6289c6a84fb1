#include <gtest/gtest.h>

#include <chrono>
#include <numbers>
#include <string>

#include "lonscape/encodings.hpp"
#include "lonscape/evaluate.hpp"
#include "lonscape/external_evaluator.hpp"
#include "test_support.hpp"

using namespace lonscape;
using namespace testing_support;

namespace {

EvaluatorConfig backend(const std::string& mode, double timeout = 10.0) {
  EvaluatorConfig cfg;
  cfg.kind = EvaluatorKind::External;
  cfg.external_command = std::string(FAKE_BACKEND_PATH) + " " + mode;
  cfg.timeout_seconds = timeout;
  return cfg;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no lonscape::Error thrown";
  return ErrorCode::Io;
}

}  // namespace

TEST(Surrogate, SingleCircleVelocity) {
  const PhenotypeTree t = single(circle(0.5, {1.0, 0.1, 0.0, 0.0}));
  EXPECT_NEAR(surrogate_velocity(t), std::numbers::pi * 0.25, 1e-12);
  const Fitness f = evaluate(t, {});
  EXPECT_FALSE(f.killed);
  EXPECT_NEAR(f.value, 25.0 * std::numbers::pi * 0.25, 1e-12);
}

TEST(Surrogate, StillRobotIsKilled) {
  const PhenotypeTree t = single(circle(0.5, {0.0, 0.1, 0.0, 0.0}));
  EXPECT_EQ(evaluate(t, {}), Fitness::kill());
  EXPECT_DOUBLE_EQ(Fitness::kill().value, 5.0);
}

TEST(Surrogate, KillThresholdIsStrict) {
  EvaluatorConfig cfg;
  EXPECT_TRUE(fitness_from_velocity(0.0399999, cfg).killed);
  const Fitness at = fitness_from_velocity(0.04, cfg);
  EXPECT_FALSE(at.killed);
  EXPECT_NEAR(at.value, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(fitness_from_velocity(1e6, cfg).value, 100.0);
}

TEST(Surrogate, PhaseSyncBetweenParentAndChild) {
  // Child in antiphase (delta = pi) contributes nothing; in phase contributes fully.
  const ControllerParams parent{1.0, 0.1, -1.0, 0.0};
  PhenotypeTree in_phase{{node(0, std::nullopt, 0, 0, circle(0.5, parent)), node(1, 0, 0, 1, circle(0.5, parent))}};
  EXPECT_NEAR(surrogate_velocity(in_phase), std::numbers::pi * 0.25, 1e-12);

  ControllerParams child = parent;
  child.phase = 1.0;  // delta = 2 rad
  PhenotypeTree shifted{{node(0, std::nullopt, 0, 0, circle(0.5, parent)), node(1, 0, 0, 1, circle(0.5, child))}};
  const double expected = std::numbers::pi * 0.25 * (1.0 + std::cos(1.0) * std::cos(1.0)) / 2.0;
  EXPECT_NEAR(surrogate_velocity(shifted), expected, 1e-12);
}

TEST(Surrogate, FitnessRangeOverRandomTrees) {
  RngStream r(77);
  int alive = 0;
  for (int i = 0; i < 20000; ++i) {
    const Fitness f = evaluate(random_tree(r), {});
    ASSERT_GE(f.value, 0.0);
    ASSERT_LE(f.value, 100.0);
    if (f.killed) {
      ASSERT_DOUBLE_EQ(f.value, 5.0);
    }
    alive += !f.killed;
  }
  EXPECT_GT(alive, 0);
}

TEST(Surrogate, InvalidTreeRejected) {
  EXPECT_EQ(code_of([] { (void)surrogate_velocity(PhenotypeTree{}); }), ErrorCode::InvalidTree);
}

TEST(Surrogate, EvaluateRefusesExternalKind) {
  EXPECT_EQ(code_of([] { (void)evaluate(single(circle(0.3)), backend("nodes")); }), ErrorCode::EvalBackendFailure);
}

TEST(DistanceMapping, KillRules) {
  EvaluatorConfig cfg;
  EXPECT_EQ(fitness_from_distance(50.0, true, cfg), Fitness::kill());
  EXPECT_EQ(fitness_from_distance(0.01, false, cfg), Fitness::kill());
  EXPECT_EQ(fitness_from_distance(3.5, false, cfg), (Fitness{3.5, false}));
  EXPECT_EQ(fitness_from_distance(250.0, false, cfg), (Fitness{100.0, false}));
}

TEST(External, EvaluatesOverThePipe) {
  ExternalEvaluator eval(backend("nodes"));
  RngStream r(3);
  for (int i = 0; i < 20; ++i) {
    const PhenotypeTree t = random_tree(r);
    const Fitness f = eval(t);
    EXPECT_FALSE(f.killed);
    EXPECT_DOUBLE_EQ(f.value, static_cast<double>(t.size()));
  }
}

TEST(External, ExplicitKillFlag) {
  EXPECT_EQ(external_evaluate(single(circle(0.3)), backend("killed")), Fitness::kill());
}

TEST(External, SatisfiesEvaluatorConcept) {
  static_assert(Evaluator<ExternalEvaluator>);
  static_assert(Evaluator<SurrogateEvaluator>);
}

TEST(External, BadHandshake) {
  EXPECT_EQ(code_of([] { ExternalEvaluator e(backend("bad-handshake")); }), ErrorCode::ProtocolError);
}

TEST(External, MalformedReply) {
  EXPECT_EQ(code_of([] { (void)external_evaluate(single(circle(0.3)), backend("malformed")); }),
            ErrorCode::ProtocolError);
}

TEST(External, MismatchedId) {
  EXPECT_EQ(code_of([] { (void)external_evaluate(single(circle(0.3)), backend("wrong-id")); }),
            ErrorCode::ProtocolError);
}

TEST(External, BackendError) {
  EXPECT_EQ(code_of([] { (void)external_evaluate(single(circle(0.3)), backend("error")); }),
            ErrorCode::EvalBackendFailure);
}

TEST(External, BackendCrash) {
  EXPECT_EQ(code_of([] { (void)external_evaluate(single(circle(0.3)), backend("crash")); }),
            ErrorCode::EvalBackendFailure);
}

TEST(External, MissingCommand) {
  EvaluatorConfig cfg;
  cfg.kind = EvaluatorKind::External;
  EXPECT_FALSE(cfg.valid());
  EXPECT_EQ(code_of([&] { ExternalEvaluator e(cfg); }), ErrorCode::EvalBackendFailure);
}

TEST(External, TimeoutOnSilentBackend) {
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(code_of([] { (void)external_evaluate(single(circle(0.3)), backend("silent", 0.5)); }), ErrorCode::Timeout);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(External, TimeoutDuringHandshake) {
  EXPECT_EQ(code_of([] { ExternalEvaluator e(backend("slow-hello", 0.3)); }), ErrorCode::Timeout);
}

TEST(External, CommandNotFound) {
  EvaluatorConfig cfg = backend("nodes");
  cfg.external_command = "/nonexistent/evaluator-binary";
  EXPECT_EQ(code_of([&] { ExternalEvaluator e(cfg); }), ErrorCode::EvalBackendFailure);
}
