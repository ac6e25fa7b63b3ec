#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "kgtopo/kg_store.hpp"
#include "kgtopo/text.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace kgtopo;

namespace {

KnowledgeGraph parse(const std::string& s, DuplicatePolicy p = DuplicatePolicy::Keep) {
  std::istringstream in(s);
  return parse_triples(in, p);
}

}  // namespace

TEST(Text, ThousandsSeparators) {
  EXPECT_EQ(text::with_thousands(0), "0");
  EXPECT_EQ(text::with_thousands(96), "96");
  EXPECT_EQ(text::with_thousands(2902), "2,902");
  EXPECT_EQ(text::with_thousands(20960), "20,960");
  EXPECT_EQ(text::with_thousands(6653), "6,653");
  EXPECT_EQ(text::with_thousands(1234567), "1,234,567");
}

TEST(Text, NormalizeEntity) {
  EXPECT_EQ(text::normalize_entity("  United   Kingdom "), "united kingdom");
  EXPECT_EQ(text::normalize_category("Medical Condition"), "medical_condition");
}

TEST(Text, QuotedListKeepsApostrophes) {
  const auto items = text::find_quoted_list("Sure: ['Sinead O'Connor', 'Ireland']");
  ASSERT_TRUE(items);
  ASSERT_EQ(items->size(), 2u);
  EXPECT_EQ((*items)[0], "Sinead O'Connor");
  EXPECT_EQ((*items)[1], "Ireland");
}

TEST(KgStore, ParsesTabSeparatedTriples) {
  const auto g = parse("a\tr\tb\nb\tr\tc\n");
  EXPECT_EQ(g.num_triples(), 2u);
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.num_relations(), 1u);
}

TEST(KgStore, EmptyInputGivesEmptyGraph) {
  const auto g = parse("");
  EXPECT_TRUE(g.empty());
  EXPECT_EQ(g.num_nodes(), 0u);
}

TEST(KgStore, SkipsHeaderBlankLinesAndCarriageReturns) {
  const auto g = parse("head\trelation\ttail\r\n\r\nx\tr\ty\r\n\n");
  ASSERT_EQ(g.num_triples(), 1u);
  EXPECT_EQ(g.triples()[0], (Triple{"x", "r", "y"}));
}

TEST(KgStore, MalformedLineReportsLineNumber) {
  try {
    parse("a\tr\tb\nbroken line\n");
    FAIL() << "expected MalformedLine";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedLine);
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(KgStore, EmptyFieldIsMalformed) {
  try {
    parse("a\tr\tb\n\na\t\tb\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedLine);
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(KgStore, DuplicatePolicy) {
  const std::string s = "a\tr\tb\na\tr\tb\n";
  EXPECT_EQ(parse(s, DuplicatePolicy::Keep).num_triples(), 2u);
  EXPECT_EQ(parse(s, DuplicatePolicy::Dedupe).num_triples(), 1u);
}

TEST(KgStore, LoadMissingFileIsIoError) {
  try {
    load_triples("/nonexistent/kgtopo/file.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Io);
  }
}

TEST(KgStore, CountsMatchTallyOracle) {
  const auto triples = fixture::synthetic_graph(500, 17, 2000, 7);
  const auto g = KnowledgeGraph::from_triples(triples);
  const auto want = oracle::tally(triples);
  EXPECT_EQ(g.num_nodes(), want.nodes);
  EXPECT_EQ(g.num_relations(), want.relations);
  EXPECT_EQ(g.num_triples(), want.triples);
  EXPECT_EQ(g.num_nodes(), 500u);
  EXPECT_EQ(g.num_relations(), 17u);
}

TEST(KgStore, IndexesAgreeWithScan) {
  const auto g = KnowledgeGraph::from_triples(fixture::musicians());
  std::size_t via_head = 0;
  for (const auto& n : g.nodes()) via_head += g.by_head(n).size();
  EXPECT_EQ(via_head, g.num_triples());
  for (std::size_t i : g.by_relation("located in")) EXPECT_EQ(g.triples()[i].relation, "located in");
  EXPECT_EQ(g.by_relation("located in").size(), 4u);
  EXPECT_TRUE(g.by_head("nobody").empty());
}

TEST(KgStore, NeighborsOfUnknownNodeThrow) {
  const auto g = KnowledgeGraph::from_triples(fixture::musicians());
  EXPECT_THROW(neighbors(g, "Nobody"), Error);
  try {
    neighbors(g, "Miles Davis", 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Unsupported);
  }
}

TEST(KgStore, NeighborsIncludeBothDirections) {
  const auto g = KnowledgeGraph::from_triples(fixture::musicians());
  const auto ns = neighbors(g, "Alton");
  ASSERT_EQ(ns.size(), 2u);
  EXPECT_EQ(ns[0], (Neighbor{"located in", "United States", Direction::Out}));
  EXPECT_EQ(ns[1], (Neighbor{"place of birth", "Miles Davis", Direction::In}));
}

// 1,000 random draws against the full-scan oracle.
TEST(KgStoreProperty, NeighborsEqualScanOracle) {
  const auto triples = fixture::synthetic_graph(300, 9, 1500, 11);
  const auto g = KnowledgeGraph::from_triples(triples);
  const std::vector<std::string> nodes(g.nodes().begin(), g.nodes().end());
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
  for (int i = 0; i < 1000; ++i) {
    const auto& node = nodes[pick(rng)];
    std::set<std::tuple<std::string, std::string, bool>> got;
    for (const auto& n : neighbors(g, node)) got.insert({n.relation, n.other, n.direction == Direction::Out});
    ASSERT_EQ(got, oracle::neighbor_scan(triples, node)) << node;
  }
}

TEST(KgStoreProperty, MergeIsDedupedUnionAndCommutative) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 50; ++round) {
    const auto a = fixture::synthetic_graph(40, 4, 60 + round, rng());
    const auto b = fixture::synthetic_graph(40, 4, 70, rng());
    const auto ga = KnowledgeGraph::from_triples(a);
    const auto gb = KnowledgeGraph::from_triples(b);
    const auto ab = merge(ga, gb);
    const auto ba = merge(gb, ga);
    auto sorted = [](std::vector<Triple> v) {
      std::sort(v.begin(), v.end());
      return v;
    };
    ASSERT_EQ(sorted(ab.triples()), oracle::dedupe_union(a, b));
    ASSERT_EQ(sorted(ab.triples()), sorted(ba.triples()));
    ASSERT_EQ(ab.nodes(), ba.nodes());
  }
}

TEST(KgStore, SamplePairsIsDeterministicAndDistinct) {
  const auto triples = fixture::synthetic_graph(400, 3, 1200, 9);
  const auto g = KnowledgeGraph::from_triples(triples);
  const auto a = sample_pairs(g, "P1", 50, 42);
  const auto b = sample_pairs(g, "P1", 50, 42);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 50u);
  std::set<std::pair<std::string, std::string>> distinct(a.begin(), a.end());
  EXPECT_EQ(distinct.size(), a.size());
  for (const auto& [h, t] : a) {
    bool present = false;
    for (const auto& tr : triples) present |= tr.head == h && tr.relation == "P1" && tr.tail == t;
    EXPECT_TRUE(present);
  }
  EXPECT_NE(a, sample_pairs(g, "P1", 50, 43));
}

TEST(KgStore, SamplePairsCapsAtAvailable) {
  const auto g = KnowledgeGraph::from_triples(fixture::musicians());
  EXPECT_EQ(sample_pairs(g, "located in", 50, 0).size(), 4u);
  try {
    sample_pairs(g, "no such relation", 5, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownRelation);
  }
}

TEST(KgStore, InverseRelationLabel) { EXPECT_EQ(inverse_relation("died In"), "inverse died In"); }

TEST(KgStore, NodesByCategoryNeedsAssignment) {
  const auto g = KnowledgeGraph::from_triples(fixture::musicians());
  try {
    nodes_by_category(g, "city");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CategoriesNotAssigned);
  }
}
