#include <gtest/gtest.h>

#include <numbers>

#include "lonscape/encodings.hpp"
#include "lonscape/json_io.hpp"
#include "oracles.hpp"

using namespace lonscape;

namespace {

constexpr Encoding kAll[] = {Encoding::Direct, Encoding::LSystem, Encoding::Cppn};

LSystemGenotype lsystem_with(int axiom, Rule rule_for_all) {
  RngStream r(1);
  LSystemGenotype g;
  g.module_list = random_module_list(r);
  g.axiom = axiom;
  for (Rule& rule : g.rules) rule = rule_for_all;
  return g;
}

/// Inputs fully connected to outputs with zero weights; outputs are then the biases.
CppnGenotype constant_cppn(double gate_bias) {
  RngStream r(2);
  CppnGenotype g = random_cppn(r);
  for (auto& c : g.connections) c.weight = 0.0;
  for (auto& n : g.nodes)
    if (n.role == NodeRole::Output) n.bias = 0.0;
  g.nodes[*g.position_of(kCppnInputs)].bias = gate_bias;
  return g;
}

}  // namespace

TEST(Encoding, NamesRoundTrip) {
  for (Encoding e : kAll) EXPECT_EQ(parse_encoding(to_string(e)), e);
  EXPECT_FALSE(parse_encoding("neat").has_value());
}

TEST(Encoding, DefaultRates) {
  EXPECT_DOUBLE_EQ(default_rates(Encoding::Direct).controller_rate, 0.32);
  EXPECT_DOUBLE_EQ(default_rates(Encoding::Direct).design_rate, 0.16);
  EXPECT_DOUBLE_EQ(default_rates(Encoding::LSystem).controller_rate, 0.16);
  EXPECT_DOUBLE_EQ(default_rates(Encoding::LSystem).design_rate, 0.04);
  EXPECT_DOUBLE_EQ(default_rates(Encoding::Cppn).controller_rate, 0.02);
  EXPECT_DOUBLE_EQ(default_rates(Encoding::Cppn).design_rate, 0.02);
  for (Encoding e : kAll) EXPECT_DOUBLE_EQ(default_rates(e).gaussian_sigma, 0.2);
}

TEST(Direct, RandomGenotypesAreValidAndExpress) {
  RngStream r(10);
  for (int i = 0; i < 2000; ++i) {
    const DirectGenotype g = random_direct(r);
    ASSERT_TRUE(is_valid(g));
    const PhenotypeTree t = express_direct(g);
    ASSERT_TRUE(is_valid_tree(t));
    ASSERT_EQ(t.size(), g.nodes.size());
  }
}

TEST(Direct, InvalidGenotypeThrows) {
  RngStream r(3);
  DirectGenotype g = random_direct(r);
  g.nodes.push_back({9, 0, 0});  // module index out of range
  EXPECT_FALSE(is_valid(g));
  try {
    (void)express_direct(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidGenotype);
  }
}

TEST(Direct, MutationKeepsLimits) {
  RngStream r(11);
  MutationRates heavy{0.5, 0.9, 0.2};
  Genotype g = random_genotype(Encoding::Direct, r);
  for (int i = 0; i < 1000; ++i) {
    g = mutate_bundle(g, heavy, r);
    ASSERT_TRUE(is_valid(g));
    const PhenotypeTree t = express(g);
    ASSERT_LE(t.size(), static_cast<std::size_t>(kMaxNodes));
    ASSERT_LE(t.max_depth(), kMaxDepth);
  }
}

TEST(LSystem, FullRuleFillsFortyNodes) {
  const LSystemGenotype g = lsystem_with(0, Rule{0, 0, 0});
  const PhenotypeTree t = express_lsystem(g);
  EXPECT_EQ(t.size(), 40u);
  EXPECT_TRUE(is_valid_tree(t));
  // Breadth-first: 1 + 3 + 9 + 27 = 40 fills depth three exactly.
  EXPECT_EQ(t.max_depth(), 3);
}

TEST(LSystem, SingleSlotRuleGivesSevenNodeChain) {
  const LSystemGenotype g = lsystem_with(2, Rule{2, std::nullopt, std::nullopt});
  const PhenotypeTree t = express_lsystem(g);
  ASSERT_EQ(t.size(), 7u);
  for (std::size_t i = 1; i < t.size(); ++i) {
    EXPECT_EQ(t.nodes[i].parent_index, static_cast<int>(i) - 1);
    EXPECT_EQ(t.nodes[i].depth, static_cast<int>(i));
    EXPECT_EQ(t.nodes[i].module_index, 2);
  }
}

TEST(LSystem, EmptyRulesGiveAxiomOnly) {
  const LSystemGenotype g = lsystem_with(5, Rule{});
  const PhenotypeTree t = express_lsystem(g);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.nodes[0].module_index, 5);
  EXPECT_EQ(t.nodes[0].module, g.module_list[5]);
}

TEST(LSystem, ExpressionIsDeterministic) {
  RngStream r(4);
  for (int i = 0; i < 200; ++i) {
    const LSystemGenotype g = random_lsystem(r);
    EXPECT_EQ(express_lsystem(g), express_lsystem(g));
  }
}

TEST(Cppn, NegativeGateGivesSingleNode) {
  const PhenotypeTree t = express_cppn(constant_cppn(-1.0));
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.nodes[0].module_index, 0);
}

TEST(Cppn, PositiveGateFillsFortyNodes) {
  const PhenotypeTree t = express_cppn(constant_cppn(1.0));
  EXPECT_EQ(t.size(), 40u);
  EXPECT_TRUE(is_valid_tree(t));
}

TEST(Cppn, OutputsMapIntoRanges) {
  // Zero outputs: logistic(0) = 0.5 lands on module 4 and mid-range controllers.
  const PhenotypeTree t = express_cppn(constant_cppn(1.0));
  EXPECT_EQ(t.nodes[1].module_index, 4);
  EXPECT_NEAR(t.nodes[1].module.controller.amplitude, 0.0, 1e-12);
  EXPECT_NEAR(t.nodes[1].module.controller.frequency, 0.0, 1e-12);
  EXPECT_NEAR(t.nodes[1].module.controller.offset, 0.0, 1e-12);
}

TEST(Cppn, ForwardMatchesRecursiveOracle) {
  RngStream r(21);
  MutationRates rates{0.0, 0.5, 0.2};
  for (int trial = 0; trial < 100; ++trial) {
    CppnGenotype g = random_cppn(r);
    for (int k = 0; k < 20; ++k) g = mutate_cppn(std::move(g), rates, r);
    // Give hidden nodes a mix of activations.
    oracle::NaiveCppn naive(g);
    for (int q = 0; q < 10; ++q) {
      const std::vector<double> in{r.uniform(0, 6), r.uniform(0, 7), r.uniform(-4, 4)};
      const CppnOutputs fast = cppn_forward(g, in[0], in[1], in[2]);
      const std::vector<double> slow = naive.run(in);
      for (int k = 0; k < kCppnOutputs; ++k)
        ASSERT_NEAR(fast[static_cast<std::size_t>(k)], slow[static_cast<std::size_t>(k)], 1e-9);
    }
  }
}

TEST(Cppn, ForwardRejectsCycles) {
  RngStream r(5);
  CppnGenotype g = random_cppn(r);
  ASSERT_TRUE(cppn_ops::add_node(g, r));
  const int hidden = g.ids_with_role(NodeRole::Hidden).front();
  // hidden -> hidden feeds itself.
  g.connections.push_back({hidden, hidden, 1.0, true});
  EXPECT_TRUE(oracle::has_cycle(g));
  EXPECT_FALSE(is_acyclic(g));
  try {
    (void)cppn_forward(g, 0.0, 0.0, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CycleDetected);
  }
}

TEST(Cppn, ThousandMutationsStayAcyclic) {
  RngStream r(6);
  MutationRates rates{0.0, 0.8, 0.2};
  CppnGenotype g = random_cppn(r);
  for (int i = 0; i < 1000; ++i) {
    g = mutate_cppn(std::move(g), rates, r);
    ASSERT_FALSE(oracle::has_cycle(g)) << "step " << i;
    ASSERT_TRUE(is_valid(g));
  }
}

TEST(Cppn, AddConnectionNeverLinksIntoInputsOrOutOfOutputs) {
  RngStream r(7);
  CppnGenotype g = random_cppn(r);
  for (int i = 0; i < 30; ++i) cppn_ops::add_node(g, r);
  for (int i = 0; i < 200; ++i) cppn_ops::add_connection(g, r);
  for (const auto& c : g.connections) {
    EXPECT_NE(g.nodes[*g.position_of(c.to)].role, NodeRole::Input);
    EXPECT_NE(g.nodes[*g.position_of(c.from)].role, NodeRole::Output);
  }
  EXPECT_FALSE(oracle::has_cycle(g));
}

TEST(Cppn, AddNodeSplitsConnection) {
  RngStream r(8);
  CppnGenotype g = random_cppn(r);
  const std::size_t before = g.connections.size();
  ASSERT_TRUE(cppn_ops::add_node(g, r));
  EXPECT_EQ(g.connections.size(), before + 2);
  const auto disabled = std::count_if(g.connections.begin(), g.connections.end(),
                                      [](const CppnConnection& c) { return !c.enabled; });
  EXPECT_EQ(disabled, 1);
  const CppnConnection& in = g.connections[before];
  const CppnConnection& out = g.connections[before + 1];
  EXPECT_DOUBLE_EQ(in.weight, 1.0);
  EXPECT_EQ(in.to, out.from);
}

TEST(Genotype, RandomGenotypesValidForEveryEncoding) {
  for (Encoding e : kAll) {
    RngStream r(100 + static_cast<int>(e));
    for (int i = 0; i < 2000; ++i) {
      const Genotype g = random_genotype(e, r);
      ASSERT_EQ(encoding_of(g), e);
      ASSERT_TRUE(is_valid(g));
      ASSERT_TRUE(is_valid_tree(express(g)));
    }
  }
}

TEST(Genotype, ZeroRatesAreIdentity) {
  const MutationRates zero{0.0, 0.0, 0.2};
  for (Encoding e : kAll) {
    RngStream r(200 + static_cast<int>(e));
    for (int i = 0; i < 200; ++i) {
      const Genotype g = random_genotype(e, r);
      const Genotype m = mutate_bundle(g, zero, r);
      ASSERT_EQ(hash_genotype(g), hash_genotype(m));
      ASSERT_TRUE(g == m);
    }
  }
}

TEST(Genotype, ControllerPassLeavesDesignAlone) {
  RngStream r(12);
  const MutationRates ctrl_only{1.0, 0.0, 0.2};
  for (Encoding e : {Encoding::Direct, Encoding::LSystem}) {
    const Genotype g = random_genotype(e, r);
    const Genotype m = mutate_bundle(g, ctrl_only, r);
    EXPECT_EQ(hash_design(express(g)), hash_design(express(m)));
    EXPECT_NE(hash_phenotype(express(g)), hash_phenotype(express(m)));
  }
}

TEST(Genotype, MutationsStayInBounds) {
  for (Encoding e : kAll) {
    RngStream r(300 + static_cast<int>(e));
    Genotype g = random_genotype(e, r);
    const MutationRates big{0.9, 0.9, 2.0};
    for (int i = 0; i < 500; ++i) {
      g = mutate_bundle(g, big, r);
      ASSERT_TRUE(is_valid(g));
      for (const auto& n : express(g).nodes) ASSERT_TRUE(n.module.in_bounds());
    }
  }
}

TEST(Genotype, JsonRoundTripPreservesHash) {
  for (Encoding e : kAll) {
    RngStream r(400 + static_cast<int>(e));
    for (int i = 0; i < 100; ++i) {
      Genotype g = random_genotype(e, r);
      g = mutate_bundle(g, default_rates(e), r);
      const Genotype back = genotype_from_json(Json::parse(to_json(g).dump()));
      ASSERT_EQ(hash_genotype(back), hash_genotype(g));
      ASSERT_EQ(express(back), express(g));
    }
  }
}

TEST(Genotype, HashSeparatesEncodings) {
  RngStream a(1), b(1);
  EXPECT_NE(hash_genotype(random_genotype(Encoding::Direct, a)), hash_genotype(random_genotype(Encoding::LSystem, b)));
}
