#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <tuple>

#include "support.hpp"
#include "tspine/error.hpp"

using namespace tspine;
using tspine::test::model_of;

TEST(Topology, CountsMatchLayerFormulasOverTheMatrix) {
  for (int n : {3, 5, 7, 9})
    for (int p = 0; p <= 3; ++p) {
      const int m = 3 * p + 3;
      const auto model = model_of(n, m);
      const MemberCounts c = model.counts();
      EXPECT_EQ(c.horizontal, 2 * n) << n << "," << m;
      EXPECT_EQ(c.saddle, 2 * n * (m - 2)) << n << "," << m;
      EXPECT_EQ(c.vertical, n * (m - 1)) << n << "," << m;
      EXPECT_EQ(c.diagonal, n * (m - 1)) << n << "," << m;
      EXPECT_EQ(c.strut, n * (m - 1)) << n << "," << m;
      EXPECT_EQ(model.node_count(), n * (2 * m - 2));
      EXPECT_EQ(c, expected_counts(n, m));
    }
}

TEST(Topology, SmallExamples) {
  EXPECT_EQ(model_of(3, 3).counts(), (MemberCounts{6, 6, 6, 6, 6}));
  const auto c = model_of(3, 6).counts();
  EXPECT_EQ(c.horizontal, 6);
  EXPECT_EQ(c.saddle, 24);
  EXPECT_EQ(c.vertical, 15);
  EXPECT_EQ(c.diagonal, 15);
}

TEST(Topology, SaddlePairsAlternateFamilies) {
  const auto model = model_of(3, 3);
  std::set<std::set<std::string>> got;
  for (const auto& mem : model.members)
    if (mem.kind == MemberKind::Saddle) got.insert({node_label(mem.a), node_label(mem.b)});
  const std::set<std::set<std::string>> want{{"A0-1", "B0-0"}, {"B0-0", "A1-1"}, {"A1-1", "B1-0"},
                                             {"B1-0", "A2-1"}, {"A2-1", "B2-0"}, {"B2-0", "A0-1"}};
  EXPECT_EQ(got, want);
}

TEST(Topology, EveryNodeCarriesExactlyOneStrut) {
  for (int n : {3, 5})
    for (int m : {3, 6, 9}) {
      const auto model = model_of(n, m);
      std::map<NodeId, int> struts;
      for (const auto& mem : model.members)
        if (mem.kind == MemberKind::Strut) {
          ++struts[mem.a];
          ++struts[mem.b];
        }
      for (const auto& id : model.nodes) EXPECT_EQ(struts[id], 1) << node_label(id);
    }
}

TEST(Topology, NodesHaveAtLeastThreeCables) {
  const auto model = model_of(5, 9);
  std::map<NodeId, int> cables;
  for (const auto& mem : model.members)
    if (is_cable(mem.kind)) {
      ++cables[mem.a];
      ++cables[mem.b];
    }
  for (const auto& id : model.nodes) EXPECT_GE(cables[id], 3) << node_label(id);
}

TEST(Topology, GeneratedModelsValidateCleanly) {
  for (int n : {3, 5, 7, 9})
    for (int m : {3, 6, 9, 12}) EXPECT_TRUE(validate_topology(model_of(n, m)).ok()) << n << "," << m;
}

TEST(Topology, DeletedHorizontalIsACountViolation) {
  auto model = model_of(3, 6);
  const auto it = std::find_if(model.members.begin(), model.members.end(),
                               [](const Member& m) { return m.kind == MemberKind::Horizontal; });
  model.members.erase(it);
  const auto report = validate_topology(model);
  EXPECT_TRUE(report.has("count"));
  EXPECT_EQ(model.counts().horizontal, 5);
}

TEST(Topology, DuplicatedVerticalFlagsDuplicateAndCount) {
  auto model = model_of(3, 6);
  const auto it = std::find_if(model.members.begin(), model.members.end(),
                               [](const Member& m) { return m.kind == MemberKind::Vertical; });
  model.members.push_back(*it);
  const auto report = validate_topology(model);
  EXPECT_TRUE(report.has("duplicate_edge"));
  EXPECT_TRUE(report.has("count"));
}

TEST(Topology, RejectsBadParameters) {
  TopologyParams p;
  p.n = 4;
  EXPECT_THROW(generate_topology(p), ParameterError);
  p.n = 3;
  p.m = 5;
  EXPECT_THROW(generate_topology(p), ParameterError);
  p.m = 6;
  p.base_radius = -1.0;
  EXPECT_THROW(generate_topology(p), ParameterError);
}

TEST(Topology, LabelsRoundTrip) {
  for (const auto& id : model_of(5, 9).nodes) {
    const auto back = parse_node_label(node_label(id));
    ASSERT_TRUE(back);
    EXPECT_EQ(*back, id);
  }
  EXPECT_FALSE(parse_node_label("C1-2"));
  EXPECT_FALSE(parse_node_label("A1"));
  for (auto k : {MemberKind::Horizontal, MemberKind::Saddle, MemberKind::Vertical, MemberKind::Diagonal, MemberKind::Strut})
    EXPECT_EQ(parse_member_kind(to_string(k)), k);
}

TEST(Topology, RingsSitOnTheirLevels) {
  const auto model = model_of(3, 6);
  for (const auto& id : model.base_ring()) EXPECT_EQ(level(id), 0);
  for (const auto& id : model.top_ring()) EXPECT_EQ(level(id), 5);
  for (std::size_t i = 0; i < model.nodes.size(); ++i)
    EXPECT_DOUBLE_EQ(model.seed[i].z(), level(model.nodes[i]) * model.params.unit_height);
}

TEST(Topology, GenerationIsDeterministic) { EXPECT_EQ(model_of(7, 9), model_of(7, 9)); }

TEST(Topology, TallerModelsExtendShorterOnes) {
  for (int n : {3, 5})
    for (int m : {3, 6}) {
      const auto small = model_of(n, m), tall = model_of(n, m + 3);
      auto restricted = [&](const StructureModel& model) {
        std::set<std::tuple<MemberKind, std::string, std::string>> out;
        for (const auto& mem : model.members)
          if (level(mem.a) <= m - 2 && level(mem.b) <= m - 2) {
            auto a = node_label(mem.a), b = node_label(mem.b);
            if (b < a) std::swap(a, b);
            out.emplace(mem.kind, a, b);
          }
        return out;
      };
      const auto s = restricted(small);
      EXPECT_FALSE(s.empty());
      EXPECT_EQ(s, restricted(tall)) << n << "," << m;
      for (std::size_t i = 0; i < small.nodes.size(); ++i)
        if (level(small.nodes[i]) <= m - 2)
          EXPECT_EQ(tall.seed[static_cast<std::size_t>(tall.index_of(small.nodes[i]))], small.seed[i]);
    }
}
