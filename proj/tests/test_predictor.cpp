#include <gtest/gtest.h>

#include <sstream>

#include "kgtopo/eval_harness.hpp"
#include "kgtopo/predictor.hpp"
#include "support/fixtures.hpp"

using namespace kgtopo;

namespace {

constexpr std::string_view kCandidatesIntro = "Potential candidate nodes for the missing node are ";

bool is_tournament_prompt(const std::string& p) {
  return p.find("most likely candidate node") != std::string::npos &&
         p.find("from the provided list") != std::string::npos;
}

std::vector<std::string> listed_candidates(const std::string& prompt) {
  const auto at = prompt.find(kCandidatesIntro);
  if (at == std::string::npos) return {};
  const auto items = text::find_quoted_list(std::string_view(prompt).substr(at + kCandidatesIntro.size()));
  return items ? *items : std::vector<std::string>{};
}

// Tournament prompts: pick the first batch member. Final prompts: echo the
// listed candidates (or a fixed list when none are listed).
MockBackend::Responder echo_first() {
  return [](const CompletionRequest& r) -> std::optional<std::string> {
    const auto listed = listed_candidates(r.prompt);
    if (is_tournament_prompt(r.prompt)) return "I pick '" + listed.front() + "'.";
    if (listed.empty()) {
      return "['c1', 'c2', 'c3', 'c4', 'c5', 'c6', 'c7', 'c8', 'c9', 'c10']";
    }
    std::vector<std::string> top(listed.begin(), listed.begin() + std::min<std::size_t>(10, listed.size()));
    return text::quoted_list(top);
  };
}

struct World {
  KnowledgeGraph graph;
  Ontology ontology;
};

// n people each living in their own city, plus the ontology person -lives in-> city.
World cities(std::size_t n) {
  std::vector<Triple> t;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "city%05zu", i);
    t.push_back({"person" + std::to_string(i), "lives in", buf});
  }
  World w;
  w.ontology.add("person", "lives in", "city");
  w.graph = assign_node_categories(KnowledgeGraph::from_triples(std::move(t)), w.ontology);
  return w;
}

World musicians() {
  World w;
  w.ontology = fixture::musician_ontology();
  w.graph = assign_node_categories(KnowledgeGraph::from_triples(fixture::musicians()), w.ontology);
  return w;
}

const QueryTask kMilesDiedIn{"Miles Davis", "died In", Slot::Tail, "United States"};

}  // namespace

TEST(Predictor, VanillaRecord) {
  auto w = musicians();
  MockBackend m(echo_first());
  Gateway gw(m);
  PredictorContext ctx{w.graph, nullptr, gw};
  const auto rec = predict_one(ctx, kMilesDiedIn, PromptVariant::Vanilla);
  ASSERT_TRUE(rec.ok()) << *rec.error;
  EXPECT_EQ(rec.answer.candidates.size(), 10u);
  EXPECT_TRUE(rec.hints.empty());
  EXPECT_EQ(rec.prompts.size(), 1u);
  EXPECT_EQ(rec.prompts[0], sha256_hex(m.call_log()[0]));
}

TEST(Predictor, OntologyVariantNamesType) {
  auto w = musicians();
  MockBackend m(echo_first());
  Gateway gw(m);
  PredictorContext ctx{w.graph, &w.ontology, gw};
  const auto rec = predict_one(ctx, kMilesDiedIn, PromptVariant::Ontology);
  ASSERT_TRUE(rec.ok());
  EXPECT_NE(m.call_log()[0].find("The missing node should be of type country"), std::string::npos);
  EXPECT_EQ(rec.hints.category, "country");
}

TEST(Predictor, OntologyPathsVariantListsAlternatePath) {
  auto w = musicians();
  MockBackend m(echo_first());
  Gateway gw(m);
  PredictorContext ctx{w.graph, &w.ontology, gw};
  const auto rec = predict_one(ctx, kMilesDiedIn, PromptVariant::OntologyPaths);
  ASSERT_TRUE(rec.ok());
  const auto p = m.call_log()[0];
  EXPECT_NE(p.find("Available node Miles Davis is of node type musician."), std::string::npos);
  EXPECT_NE(p.find("are [musician --> place of birth --> city --> located in --> country]."),
            std::string::npos);
  EXPECT_EQ(rec.hints.n_paths, 1u);
}

TEST(Predictor, NeighborsVariant) {
  auto w = musicians();
  MockBackend m(echo_first());
  Gateway gw(m);
  PredictorContext ctx{w.graph, nullptr, gw};
  const auto rec = predict_one(ctx, {"Alton", "located in", Slot::Tail, "United States"},
                               PromptVariant::Neighbors);
  ASSERT_TRUE(rec.ok());
  EXPECT_NE(m.call_log()[0].find(
                "[Alton --> located in --> United States, Miles Davis --> place of birth --> Alton]"),
            std::string::npos);
  EXPECT_EQ(rec.hints.n_neighbors, 2u);
}

TEST(Predictor, GraphPathsVariantGroundsFromKnownNode) {
  auto w = musicians();
  MockBackend m(echo_first());
  Gateway gw(m);
  PredictorContext ctx{w.graph, &w.ontology, gw};
  const auto rec = predict_one(ctx, {"John Lennon", "died In", Slot::Tail, "United States"},
                               PromptVariant::CandidatesGraphPaths);
  ASSERT_TRUE(rec.ok()) << *rec.error;
  EXPECT_NE(m.call_log().back().find(
                "[John Lennon --> place of birth --> Liverpool --> located in --> United Kingdom]"),
            std::string::npos);
  EXPECT_EQ(rec.hints.n_grounded, 1u);
}

TEST(Predictor, MissingOntologyIsConfigErrorBeforeAnyCall) {
  auto w = musicians();
  MockBackend m(echo_first());
  Gateway gw(m);
  PredictorContext ctx{w.graph, nullptr, gw};
  const auto rec = predict_one(ctx, kMilesDiedIn, PromptVariant::OntologyPaths);
  EXPECT_FALSE(rec.ok());
  EXPECT_EQ(rec.error_code, Errc::Config);
  EXPECT_EQ(m.calls(), 0u);
}

TEST(Predictor, ParseFailureIsRecordedNotThrown) {
  auto w = musicians();
  MockBackend m({{"", "I think it is France."}});
  Gateway gw(m);
  PredictorContext ctx{w.graph, nullptr, gw};
  const auto rec = predict_one(ctx, kMilesDiedIn, PromptVariant::Vanilla);
  EXPECT_EQ(rec.error_code, Errc::ParseFailure);
  EXPECT_TRUE(rec.answer.candidates.empty());
  EXPECT_FALSE(hits_at_k(rec, 10));
}

TEST(Tournament, FiveThousandPoolGivesThreeBatchesAndOneFinal) {
  auto w = cities(5000);
  MockBackend m(echo_first());
  Gateway gw(m);
  PredictorContext ctx{w.graph, &w.ontology, gw};
  const auto rec = predict_one(ctx, {"person0", "lives in", Slot::Tail, "city00000"},
                               PromptVariant::Candidates);
  ASSERT_TRUE(rec.ok()) << *rec.error;
  const auto log = m.call_log();
  ASSERT_EQ(log.size(), 4u);
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(is_tournament_prompt(log[i]));
  EXPECT_FALSE(is_tournament_prompt(log[3]));
  EXPECT_EQ(rec.hints.n_batches, 3u);
  EXPECT_EQ(rec.hints.n_candidates, 5000u);
  EXPECT_EQ(rec.hints.candidates,
            (std::vector<std::string>{"city00000", "city02000", "city04000"}));
  EXPECT_EQ(listed_candidates(log[3]), *rec.hints.candidates);
  // contiguous slices of the sorted pool
  EXPECT_EQ(listed_candidates(log[0]).size(), 2000u);
  EXPECT_EQ(listed_candidates(log[2]).size(), 1000u);
  EXPECT_EQ(listed_candidates(log[1]).front(), "city02000");
}

TEST(Tournament, SmallPoolSkipsTournament) {
  auto w = cities(10);
  MockBackend m(echo_first());
  Gateway gw(m);
  const auto pool = nodes_by_category(w.graph, "city");
  const auto r = run_tournament(gw, {}, {"person0", "lives in", Slot::Tail}, "city", pool, {});
  EXPECT_EQ(r.n_batches, 0u);
  EXPECT_EQ(r.shortlist, pool);
  EXPECT_EQ(m.calls(), 0u);
}

TEST(Tournament, PartitionArithmetic) {
  auto w = cities(4001);
  MockBackend m(echo_first());
  Gateway gw(m);
  const auto pool = nodes_by_category(w.graph, "city");
  const auto r = run_tournament(gw, {}, {"person0", "lives in", Slot::Tail}, "city", pool, {});
  EXPECT_EQ(r.n_batches, 3u);
  EXPECT_EQ(m.calls(), 3u);
  EXPECT_LE(r.shortlist.size(), 3u);
  EXPECT_EQ(listed_candidates(m.call_log()[2]).size(), 1u);
}

TEST(Tournament, MultiWinnerRespectsCap) {
  auto w = cities(4000);
  MockBackend m([](const CompletionRequest& r) -> std::optional<std::string> {
    auto listed = listed_candidates(r.prompt);
    listed.resize(std::min<std::size_t>(listed.size(), 80));  // more than asked for
    return text::quoted_list(listed);
  });
  Gateway gw(m);
  const auto pool = nodes_by_category(w.graph, "city");
  TournamentConfig cfg;
  cfg.mode = TournamentMode::MultiWinner;
  cfg.winners_per_batch = 50;
  const auto r = run_tournament(gw, {}, {"person0", "lives in", Slot::Tail}, "city", pool, cfg);
  EXPECT_EQ(r.n_batches, 2u);
  EXPECT_EQ(r.shortlist.size(), 100u);
  EXPECT_NE(m.call_log()[0].find("respond only with the 50 most likely"), std::string::npos);

  cfg.winners_per_batch = 90;  // clamped to 100 / 2
  const auto r2 = run_tournament(gw, {}, {"person0", "lives in", Slot::Tail}, "city", pool, cfg);
  EXPECT_LE(r2.shortlist.size(), 100u);
}

TEST(Tournament, FailedBatchesContributeNothing) {
  auto w = cities(4500);
  MockBackend m([](const CompletionRequest& r) -> std::optional<std::string> {
    const auto listed = listed_candidates(r.prompt);
    if (listed.front() == "city02000") return "none of these";
    return "'" + listed.front() + "'";
  });
  Gateway gw(m);
  const auto pool = nodes_by_category(w.graph, "city");
  const auto r = run_tournament(gw, {}, {"p", "lives in", Slot::Tail}, "city", pool, {});
  EXPECT_EQ(r.n_failed, 1u);
  EXPECT_EQ(r.shortlist, (std::vector<std::string>{"city00000", "city04000"}));
}

TEST(Tournament, AllBatchesFailedBecomesRecordError) {
  auto w = cities(2500);
  MockBackend m({{"", "no idea"}});
  Gateway gw(m);
  PredictorContext ctx{w.graph, &w.ontology, gw};
  const auto rec = predict_one(ctx, {"person0", "lives in", Slot::Tail, "city00000"},
                               PromptVariant::Candidates);
  EXPECT_EQ(rec.error_code, Errc::AllBatchesFailed);
}

TEST(Tournament, ConfigInvariants) {
  TournamentConfig c;
  c.winners_per_batch = 2;
  EXPECT_THROW(c.validate(), Error);
  c.mode = TournamentMode::MultiWinner;
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Experiment, OneRecordPerTaskAndMode) {
  auto w = musicians();
  MockBackend m(echo_first());
  Gateway gw(m);
  PredictorContext ctx{w.graph, &w.ontology, gw};
  const std::vector<Triple> test{{"Miles Davis", "died In", "United States"},
                                 {"Edith Piaf", "died In", "France"},
                                 {"John Lennon", "genre", "rock"}};
  const auto tasks = tasks_from_triples(test);
  EXPECT_EQ(run_experiment(ctx, tasks, PromptVariant::Vanilla, {PredictionMode::Tail}).size(), 3u);
  const auto all = run_experiment(ctx, tasks, PromptVariant::Vanilla,
                                  {PredictionMode::Tail, PredictionMode::DirectHead, PredictionMode::InverseHead});
  EXPECT_EQ(all.size(), 9u);
}

TEST(Experiment, InverseHeadRewritesTriplet) {
  auto w = musicians();
  MockBackend m(echo_first());
  Gateway gw(m);
  PredictorContext ctx{w.graph, &w.ontology, gw};
  const QueryTask head{"United States", "died In", Slot::Head, "Miles Davis"};
  const std::vector<QueryTask> tasks{head};
  const auto recs = run_experiment(ctx, tasks, PromptVariant::Ontology, {PredictionMode::InverseHead});
  ASSERT_EQ(recs.size(), 1u);
  ASSERT_TRUE(recs[0].ok()) << *recs[0].error;
  EXPECT_EQ(recs[0].task, head);
  EXPECT_EQ(recs[0].asked.relation, "inverse died In");
  const auto p = m.call_log()[0];
  EXPECT_NE(p.find("Triplet with missing node:\nUnited States --> inverse died In --> ?"), std::string::npos);
  EXPECT_NE(p.find("should be of type musician"), std::string::npos);
}

TEST(Experiment, WarmCacheReplaysWithoutBackendCalls) {
  auto w = cities(3000);
  fixture::TempDir dir;
  ResponseCache cache(dir.path());
  const std::vector<QueryTask> tasks{{"person1", "lives in", Slot::Tail, "city00001"},
                                     {"person7", "lives in", Slot::Tail, "city00007"}};
  std::string first_jsonl;
  {
    MockBackend m(echo_first());
    Gateway gw(m, &cache);
    PredictorContext ctx{w.graph, &w.ontology, gw};
    const auto recs = run_experiment(ctx, tasks, PromptVariant::Candidates, {PredictionMode::Tail});
    std::ostringstream out;
    write_records(out, recs);
    first_jsonl = out.str();
    EXPECT_GT(gw.backend_calls(), 0u);
  }
  MockBackend cold({});
  Gateway gw(cold, &cache);
  PredictorContext ctx{w.graph, &w.ontology, gw};
  const auto again = run_experiment(ctx, tasks, PromptVariant::Candidates, {PredictionMode::Tail});
  std::ostringstream out;
  write_records(out, again);
  EXPECT_EQ(out.str(), first_jsonl);
  EXPECT_EQ(gw.backend_calls(), 0u);
  EXPECT_EQ(cold.calls(), 0u);
}

TEST(Experiment, RecordsIndependentOfConcurrency) {
  auto w = cities(2500);
  std::vector<QueryTask> tasks;
  for (int i = 0; i < 12; ++i) {
    tasks.push_back({"person" + std::to_string(i), "lives in", Slot::Tail, std::nullopt});
  }
  auto run = [&](std::size_t in_flight) {
    MockBackend m(echo_first());
    Gateway gw(m, nullptr, {RetryPolicy::none(), in_flight});
    PredictorContext ctx{w.graph, &w.ontology, gw};
    return run_experiment(ctx, tasks, PromptVariant::Candidates, {PredictionMode::Tail});
  };
  EXPECT_EQ(run(1), run(6));
}

TEST(Experiment, CandidatesComeFromInferredCategory) {
  auto w = musicians();
  MockBackend m(echo_first());
  Gateway gw(m);
  PredictorContext ctx{w.graph, &w.ontology, gw};
  const auto tasks = tasks_from_triples(w.graph.triples());
  for (PromptVariant v : {PromptVariant::Candidates, PromptVariant::CandidatesOntologyPathsHint}) {
    for (const auto& rec : run_experiment(ctx, tasks, v, {PredictionMode::Tail, PredictionMode::DirectHead})) {
      ASSERT_TRUE(rec.ok()) << *rec.error;
      const auto pool = nodes_by_category(w.graph, *rec.hints.category);
      for (const auto& c : *rec.hints.candidates) {
        EXPECT_TRUE(std::binary_search(pool.begin(), pool.end(), c)) << c;
      }
    }
  }
}

TEST(Experiment, GoldAnsweringMockScoresPerfectly) {
  auto w = musicians();
  MockBackend m([](const CompletionRequest& r) -> std::optional<std::string> {
    // gold is smuggled through the triplet: tasks ask about "<gold>-holder"
    const auto at = r.prompt.rfind("Triplet with missing node:\n");
    const auto line = r.prompt.substr(at + 27, r.prompt.find('\n', at + 27) - at - 27);
    const auto name = line.substr(0, line.find("-holder"));
    return "['" + name + "', 'other']";
  });
  Gateway gw(m);
  PredictorContext ctx{w.graph, nullptr, gw};
  std::vector<QueryTask> tasks;
  for (const auto& n : w.graph.nodes()) tasks.push_back({n + "-holder", "r", Slot::Tail, n});
  const auto recs = run_experiment(ctx, tasks, PromptVariant::Vanilla, {PredictionMode::Tail});
  const auto report = evaluate_run(recs);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_EQ(report.rows[0].hits1, 1.0);
}

TEST(Records, JsonlRoundTrip) {
  auto w = cities(2100);
  MockBackend m(echo_first());
  Gateway gw(m);
  PredictorContext ctx{w.graph, &w.ontology, gw};
  std::vector<PredictionRecord> recs;
  recs.push_back(predict_one(ctx, {"person3", "lives in", Slot::Tail, "city00003"}, PromptVariant::CandidatesOntology));
  recs.push_back(predict_one(ctx, {"person3", "lives in", Slot::Tail, "city00003"}, PromptVariant::OntologyPaths));
  PredictorContext no_onto{w.graph, nullptr, gw};
  recs.push_back(predict_one(no_onto, {"person3", "lives in", Slot::Tail}, PromptVariant::Ontology));
  std::stringstream io;
  write_records(io, recs);
  EXPECT_EQ(read_records(io), recs);
}

TEST(Records, MalformedLineNumber) {
  std::istringstream in("\n{\"schema\": \"kgtopo.prediction/1\"}\n");
  try {
    read_records(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedLine);
    EXPECT_EQ(e.line(), 2u);
  }
}
