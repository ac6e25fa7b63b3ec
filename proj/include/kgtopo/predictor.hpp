#pragma once

/// @file predictor.hpp
/// Per-task prediction: hint assembly for each prompt variant, candidate
/// tournaments, experiment runs over many tasks, and the JSONL record format.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgtopo/error.hpp"
#include "kgtopo/kg_store.hpp"
#include "kgtopo/llm_gateway.hpp"
#include "kgtopo/ontology.hpp"
#include "kgtopo/prompt_engine.hpp"
#include "kgtopo/text.hpp"
#include "kgtopo/topo_paths.hpp"

namespace kgtopo {

inline constexpr std::string_view kPredictionSchema = "kgtopo.prediction/1";

enum class TournamentMode { SingleWinner, MultiWinner };

constexpr std::string_view tournament_mode_name(TournamentMode m) noexcept {
  return m == TournamentMode::SingleWinner ? "single" : "multi";
}

inline TournamentMode parse_tournament_mode(std::string_view name) {
  if (text::iequals(name, "single") || text::iequals(name, "SingleWinner")) {
    return TournamentMode::SingleWinner;
  }
  if (text::iequals(name, "multi") || text::iequals(name, "MultiWinner")) {
    return TournamentMode::MultiWinner;
  }
  throw Error(Errc::InvalidArgument, "tournament mode must be 'single' or 'multi'");
}

struct TournamentConfig {
  std::size_t batch_size = 2000;
  std::size_t winners_per_batch = 1;
  std::size_t shortlist_cap = 100;
  TournamentMode mode = TournamentMode::SingleWinner;

  void validate() const {
    if (batch_size < 1) throw Error(Errc::Config, "batch_size must be >= 1");
    if (winners_per_batch < 1) throw Error(Errc::Config, "winners_per_batch must be >= 1");
    if (shortlist_cap < 1) throw Error(Errc::Config, "shortlist_cap must be >= 1");
    if (mode == TournamentMode::SingleWinner && winners_per_batch != 1) {
      throw Error(Errc::Config, "single-winner tournaments take exactly one winner per batch");
    }
  }
};

enum class PredictionMode { Tail, DirectHead, InverseHead };

constexpr std::string_view prediction_mode_name(PredictionMode m) noexcept {
  switch (m) {
    case PredictionMode::Tail: return "tail";
    case PredictionMode::DirectHead: return "head-direct";
    case PredictionMode::InverseHead: return "head-inverse";
  }
  return "?";
}

inline PredictionMode parse_prediction_mode(std::string_view name) {
  for (auto m : {PredictionMode::Tail, PredictionMode::DirectHead, PredictionMode::InverseHead}) {
    if (text::iequals(prediction_mode_name(m), name)) return m;
  }
  throw Error(Errc::InvalidArgument,
              "mode must be tail, head-direct or head-inverse, got '" + std::string(name) + "'");
}

constexpr Slot mode_slot(PredictionMode m) noexcept {
  return m == PredictionMode::Tail ? Slot::Tail : Slot::Head;
}

/// Empty fields mean the hint was not part of the prompt.
struct HintSummary {
  std::optional<std::string> category;        // missing node's inferred category
  std::optional<std::string> known_category;
  std::optional<std::size_t> n_paths;
  bool paths_truncated = false;
  std::optional<std::size_t> n_neighbors;
  std::optional<std::size_t> n_grounded;
  std::optional<std::size_t> n_candidates;    // pool size before any tournament
  std::optional<std::size_t> n_batches;       // tournament calls issued
  std::optional<std::size_t> n_failed_batches;
  std::optional<std::vector<std::string>> candidates;  // what the final prompt listed

  bool empty() const noexcept {
    return !category && !known_category && !n_paths && !n_neighbors && !n_grounded &&
           !n_candidates && !n_batches && !n_failed_batches && !candidates;
  }
  bool operator==(const HintSummary&) const = default;
};

struct PredictionRecord {
  QueryTask task;   // as posed by the test set, gold included
  QueryTask asked;  // what the prompt asked (differs for head-inverse)
  PredictionMode mode = PredictionMode::Tail;
  PromptVariant variant = PromptVariant::Vanilla;
  HintSummary hints;
  std::vector<std::string> prompts;  // SHA-256 of every rendered prompt, in send order
  RankedAnswer answer;
  std::optional<Errc> error_code;
  std::optional<std::string> error;

  bool ok() const noexcept { return !error.has_value(); }
  bool operator==(const PredictionRecord&) const = default;
};

struct PredictorContext {
  const KnowledgeGraph& graph;
  const Ontology* ontology = nullptr;
  Gateway& gateway;
  ModelSettings model{};
  TournamentConfig tournament{};
  PathLimits path_limits{};
  std::size_t max_grounded = 16;
};

/// Throws Config when `variant` needs something the context lacks.
inline void check_variant_resources(PromptVariant variant, const KnowledgeGraph& g,
                                    const Ontology* o) {
  if (!is_prediction_variant(variant)) {
    throw Error(Errc::Config, std::string(variant_name(variant)) + " is not a prediction variant");
  }
  if (needs_ontology(variant) && o == nullptr) {
    throw Error(Errc::Config, std::string(variant_name(variant)) + " needs an ontology");
  }
  if (uses_candidates(variant) && !g.node_categories()) {
    throw Error(Errc::Config,
                std::string(variant_name(variant)) + " needs node categories on the graph");
  }
}

/// Relation and slot to look up in the ontology. Tasks asked through an
/// "inverse r" relation resolve to r with the slot flipped.
inline std::pair<std::string, Slot> resolve_ontology_relation(const Ontology& o,
                                                              const QueryTask& task) {
  static constexpr std::string_view kPrefix = "inverse ";
  if (!o.relation_map.contains(task.relation) && task.relation.starts_with(kPrefix)) {
    std::string base = task.relation.substr(kPrefix.size());
    if (o.relation_map.contains(base)) {
      return {std::move(base), task.missing == Slot::Tail ? Slot::Head : Slot::Tail};
    }
  }
  return {task.relation, task.missing};
}

inline std::string format_neighbor(std::string_view node, const Neighbor& n) {
  std::string out;
  if (n.direction == Direction::Out) {
    out.append(node).append(text::kArrow).append(n.relation).append(text::kArrow).append(n.other);
  } else {
    out.append(n.other).append(text::kArrow).append(n.relation).append(text::kArrow).append(node);
  }
  return out;
}

struct TournamentResult {
  std::vector<std::string> shortlist;
  std::size_t n_batches = 0;
  std::size_t n_failed = 0;
  std::vector<std::string> prompts;  // rendered tournament prompts, batch order
};

/// Winners taken per batch in MultiWinner mode so the total stays within the cap.
inline std::size_t effective_winners(const TournamentConfig& cfg, std::size_t n_batches) {
  if (cfg.mode == TournamentMode::SingleWinner) return 1;
  const std::size_t per_batch_cap = std::max<std::size_t>(1, cfg.shortlist_cap / std::max<std::size_t>(1, n_batches));
  return std::clamp<std::size_t>(cfg.winners_per_batch, 1, per_batch_cap);
}

/// Contiguous batches of `pool` (already sorted), one call per batch. Small
/// pools skip the tournament: at most batch_size in SingleWinner mode, at
/// most shortlist_cap in MultiWinner mode.
inline TournamentResult run_tournament(Gateway& gateway, const ModelSettings& model,
                                       const QueryTask& task, std::string_view category,
                                       std::span<const std::string> pool,
                                       const TournamentConfig& cfg) {
  cfg.validate();
  if (pool.empty()) throw Error(Errc::InvalidArgument, "tournament pool is empty");
  TournamentResult result;
  const bool skip = cfg.mode == TournamentMode::SingleWinner ? pool.size() <= cfg.batch_size
                                                             : pool.size() <= cfg.shortlist_cap;
  if (skip) {
    result.shortlist.assign(pool.begin(), pool.end());
    return result;
  }

  const std::size_t n_batches = (pool.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t winners = effective_winners(cfg, n_batches);
  const PromptVariant variant = cfg.mode == TournamentMode::SingleWinner
                                    ? PromptVariant::TournamentSingle
                                    : PromptVariant::TournamentMulti;
  const std::string triplet = render_triplet(task);

  std::vector<std::span<const std::string>> batches;
  std::vector<CompletionRequest> requests;
  for (std::size_t start = 0; start < pool.size(); start += cfg.batch_size) {
    const auto batch = pool.subspan(start, std::min(cfg.batch_size, pool.size() - start));
    Bindings b{{std::string(placeholder::kTriplet), triplet},
               {std::string(placeholder::kType), std::string(category)},
               {std::string(placeholder::kData), text::quoted_list(batch)}};
    if (variant == PromptVariant::TournamentMulti) {
      b.emplace(std::string(placeholder::kWinners), std::to_string(winners));
    }
    std::string prompt = render_prompt(variant, b);
    result.prompts.push_back(prompt);
    requests.push_back(model.request(std::move(prompt)));
    batches.push_back(batch);
  }
  result.n_batches = batches.size();

  const auto outcomes = gateway.complete_many(requests);
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].ok()) {
      ++result.n_failed;
      continue;
    }
    std::vector<std::string> picked;
    try {
      picked = cfg.mode == TournamentMode::SingleWinner
                   ? std::vector<std::string>{parse_single_winner(outcomes[i].result->text, batches[i])}
                   : parse_winners(outcomes[i].result->text, batches[i], winners);
    } catch (const Error&) {
      ++result.n_failed;
      continue;
    }
    for (auto& w : picked) {
      if (result.shortlist.size() == cfg.shortlist_cap) break;
      if (seen.insert(w).second) result.shortlist.push_back(std::move(w));
    }
  }
  if (result.n_failed == result.n_batches) {
    throw Error(Errc::AllBatchesFailed,
                "all " + std::to_string(result.n_batches) + " tournament batches failed");
  }
  return result;
}

namespace detail {

inline void predict_into(const PredictorContext& ctx, PredictionRecord& rec) {
  const QueryTask& task = rec.asked;
  check_variant_resources(rec.variant, ctx.graph, ctx.ontology);
  const PromptVariant v = rec.variant;

  Bindings b{{std::string(placeholder::kTriplet), render_triplet(task)}};
  HintSummary& hints = rec.hints;

  std::string missing_cat;
  std::string known_cat;
  std::string base_relation;
  Slot base_slot = task.missing;
  if (needs_ontology(v)) {
    std::tie(base_relation, base_slot) = resolve_ontology_relation(*ctx.ontology, task);
    const Slot known_slot = base_slot == Slot::Tail ? Slot::Head : Slot::Tail;
    missing_cat = infer_missing_category(*ctx.ontology, base_relation, base_slot);
    known_cat = infer_missing_category(*ctx.ontology, base_relation, known_slot);
    hints.category = missing_cat;
    // OntologyPaths has no missing-type hint, so its one {type} names the
    // known node's category; everywhere else it names the missing category.
    b.emplace(std::string(placeholder::kType),
              v == PromptVariant::OntologyPaths ? known_cat : missing_cat);
  }

  const bool names_known = v == PromptVariant::OntologyPaths ||
                           v == PromptVariant::OntologyPlusPaths ||
                           v == PromptVariant::CandidatesOntologyPaths ||
                           v == PromptVariant::CandidatesOntologyPathsHint ||
                           v == PromptVariant::Neighbors;
  if (names_known) b.emplace(std::string(placeholder::kKnownNode), task.known);
  if (v == PromptVariant::OntologyPaths) hints.known_category = known_cat;

  if (uses_ontology_paths(v)) {
    const auto& pair = ctx.ontology->relation_map.at(base_relation);
    const auto found =
        enumerate_ontology_paths(*ctx.ontology, pair.head, pair.tail, base_relation, ctx.path_limits);
    std::vector<std::string> formatted;
    for (const auto& p : found.paths) formatted.push_back(format_ontology_path(p));
    hints.n_paths = formatted.size();
    hints.paths_truncated = found.truncated;
    b.emplace(std::string(placeholder::kOntologyPaths), text::bracket_list(formatted));
  }

  if (v == PromptVariant::Neighbors) {
    std::vector<std::string> items;
    if (ctx.graph.has_node(task.known)) {
      for (const auto& n : neighbors(ctx.graph, task.known)) items.push_back(format_neighbor(task.known, n));
    }
    hints.n_neighbors = items.size();
    b.emplace(std::string(placeholder::kNeighbours), text::bracket_list(items));
  }

  if (v == PromptVariant::CandidatesGraphPaths) {
    const auto& pair = ctx.ontology->relation_map.at(base_relation);
    const bool forward = base_slot == Slot::Tail;
    const auto found = enumerate_ontology_paths(*ctx.ontology, forward ? pair.head : pair.tail,
                                                forward ? pair.tail : pair.head, base_relation,
                                                ctx.path_limits);
    std::vector<std::string> formatted;
    if (ctx.graph.has_node(task.known)) {
      for (const auto& gp : ground_paths(ctx.graph, task.known, found.paths, ctx.max_grounded)) {
        formatted.push_back(format_grounded_path(gp));
      }
    }
    hints.n_paths = found.paths.size();
    hints.paths_truncated = found.truncated;
    hints.n_grounded = formatted.size();
    b.emplace(std::string(placeholder::kGraphPaths), text::bracket_list(formatted));
  }

  if (uses_candidates(v)) {
    const auto pool = nodes_by_category(ctx.graph, missing_cat);
    hints.n_candidates = pool.size();
    std::vector<std::string> shortlist;
    if (!pool.empty()) {
      TournamentResult t = run_tournament(ctx.gateway, ctx.model, task, missing_cat, pool, ctx.tournament);
      hints.n_batches = t.n_batches;
      hints.n_failed_batches = t.n_failed;
      for (const auto& p : t.prompts) rec.prompts.push_back(sha256_hex(p));
      shortlist = std::move(t.shortlist);
    } else {
      hints.n_batches = 0;
    }
    b.emplace(std::string(placeholder::kData), text::quoted_list(shortlist));
    hints.candidates = std::move(shortlist);
  }

  const std::string prompt = render_prompt(v, b);
  rec.prompts.push_back(sha256_hex(prompt));
  const CompletionResult res = ctx.gateway.complete(ctx.model.request(prompt));
  rec.answer = parse_ranked_answer(res.text);
}

}  // namespace detail

/// Never throws for task-level failures; they land in record.error.
inline PredictionRecord predict_as(const PredictorContext& ctx, const QueryTask& task,
                                   PromptVariant variant, PredictionMode mode) {
  PredictionRecord rec;
  rec.task = task;
  rec.mode = mode;
  rec.variant = variant;
  rec.asked = task;
  if (mode == PredictionMode::InverseHead) {
    rec.asked.relation = inverse_relation(task.relation);
    rec.asked.missing = Slot::Tail;
  }
  try {
    if (task.missing != mode_slot(mode)) {
      throw Error(Errc::InvalidArgument, std::string(prediction_mode_name(mode)) +
                                             " mode cannot answer a missing " +
                                             std::string(slot_name(task.missing)));
    }
    detail::predict_into(ctx, rec);
  } catch (const Error& e) {
    rec.error_code = e.code();
    rec.error = e.detail();
  } catch (const std::exception& e) {
    rec.error_code = Errc::Transport;
    rec.error = e.what();
  }
  return rec;
}

inline PredictionRecord predict_one(const PredictorContext& ctx, const QueryTask& task,
                                    PromptVariant variant) {
  return predict_as(ctx, task, variant,
                    task.missing == Slot::Tail ? PredictionMode::Tail : PredictionMode::DirectHead);
}

/// Tail task then head task for every test triple, in file order.
inline std::vector<QueryTask> tasks_from_triples(std::span<const Triple> test, bool tails = true,
                                                 bool heads = true) {
  std::vector<QueryTask> tasks;
  for (const Triple& t : test) {
    if (tails) tasks.push_back({t.head, t.relation, Slot::Tail, t.tail});
    if (heads) tasks.push_back({t.tail, t.relation, Slot::Head, t.head});
  }
  return tasks;
}

/// One record per (task, mode) where the mode answers the task's missing
/// slot; output order is task order, then mode order, for any concurrency.
inline std::vector<PredictionRecord> run_experiment(const PredictorContext& ctx,
                                                    std::span<const QueryTask> tasks,
                                                    PromptVariant variant,
                                                    const std::set<PredictionMode>& modes) {
  std::vector<std::pair<const QueryTask*, PredictionMode>> jobs;
  for (const auto& task : tasks) {
    for (PredictionMode m : modes) {
      if (mode_slot(m) == task.missing) jobs.emplace_back(&task, m);
    }
  }
  std::vector<PredictionRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
      records[i] = predict_as(ctx, *jobs[i].first, variant, jobs[i].second);
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(1, ctx.gateway.max_in_flight()), jobs.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return records;
}

// ---------------------------------------------------------------------------
// JSONL

inline nlohmann::json task_to_json(const QueryTask& t) {
  nlohmann::json j = {{"known", t.known}, {"relation", t.relation}, {"missing", slot_name(t.missing)}};
  j["gold"] = t.gold ? nlohmann::json(*t.gold) : nlohmann::json(nullptr);
  return j;
}

inline QueryTask task_from_json(const nlohmann::json& j) {
  QueryTask t;
  t.known = j.at("known").get<std::string>();
  t.relation = j.at("relation").get<std::string>();
  t.missing = parse_slot(j.at("missing").get<std::string>());
  if (j.contains("gold") && !j["gold"].is_null()) t.gold = j["gold"].get<std::string>();
  return t;
}

inline nlohmann::json hints_to_json(const HintSummary& h) {
  nlohmann::json j = nlohmann::json::object();
  if (h.category) j["category"] = *h.category;
  if (h.known_category) j["known_category"] = *h.known_category;
  if (h.n_paths) {
    j["n_paths"] = *h.n_paths;
    j["paths_truncated"] = h.paths_truncated;
  }
  if (h.n_neighbors) j["n_neighbors"] = *h.n_neighbors;
  if (h.n_grounded) j["n_grounded"] = *h.n_grounded;
  if (h.n_candidates) j["n_candidates"] = *h.n_candidates;
  if (h.n_batches) j["n_batches"] = *h.n_batches;
  if (h.n_failed_batches) j["n_failed_batches"] = *h.n_failed_batches;
  if (h.candidates) j["candidates"] = *h.candidates;
  return j;
}

inline HintSummary hints_from_json(const nlohmann::json& j) {
  HintSummary h;
  auto opt_count = [&](const char* key) -> std::optional<std::size_t> {
    if (!j.contains(key)) return std::nullopt;
    return j[key].get<std::size_t>();
  };
  if (j.contains("category")) h.category = j["category"].get<std::string>();
  if (j.contains("known_category")) h.known_category = j["known_category"].get<std::string>();
  h.n_paths = opt_count("n_paths");
  h.paths_truncated = j.value("paths_truncated", false);
  h.n_neighbors = opt_count("n_neighbors");
  h.n_grounded = opt_count("n_grounded");
  h.n_candidates = opt_count("n_candidates");
  h.n_batches = opt_count("n_batches");
  h.n_failed_batches = opt_count("n_failed_batches");
  if (j.contains("candidates")) h.candidates = j["candidates"].get<std::vector<std::string>>();
  return h;
}

inline nlohmann::json record_to_json(const PredictionRecord& r) {
  nlohmann::json j = {
      {"schema", kPredictionSchema},
      {"task", task_to_json(r.task)},
      {"asked", task_to_json(r.asked)},
      {"mode", prediction_mode_name(r.mode)},
      {"variant", variant_name(r.variant)},
      {"hints", hints_to_json(r.hints)},
      {"prompts", r.prompts},
      {"answer",
       {{"candidates", r.answer.candidates},
        {"truncated", r.answer.truncated},
        {"raw_response", r.answer.raw_response}}},
  };
  if (r.error) {
    j["error"] = {{"code", errc_name(*r.error_code)}, {"message", *r.error}};
  } else {
    j["error"] = nullptr;
  }
  return j;
}

inline Errc parse_errc(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Errc::Config); ++i) {
    if (errc_name(static_cast<Errc>(i)) == name) return static_cast<Errc>(i);
  }
  throw Error(Errc::ParseFailure, "unknown error code '" + std::string(name) + "'");
}

inline PredictionRecord record_from_json(const nlohmann::json& j) {
  if (j.value("schema", std::string()) != kPredictionSchema) {
    throw Error(Errc::ParseFailure, "record schema is not " + std::string(kPredictionSchema));
  }
  PredictionRecord r;
  r.task = task_from_json(j.at("task"));
  r.asked = task_from_json(j.at("asked"));
  r.mode = parse_prediction_mode(j.at("mode").get<std::string>());
  r.variant = parse_variant(j.at("variant").get<std::string>());
  r.hints = hints_from_json(j.at("hints"));
  r.prompts = j.at("prompts").get<std::vector<std::string>>();
  const auto& a = j.at("answer");
  r.answer.candidates = a.at("candidates").get<std::vector<std::string>>();
  r.answer.truncated = a.at("truncated").get<bool>();
  r.answer.raw_response = a.at("raw_response").get<std::string>();
  if (!j.at("error").is_null()) {
    r.error_code = parse_errc(j["error"].at("code").get<std::string>());
    r.error = j["error"].at("message").get<std::string>();
  }
  return r;
}

inline void write_records(std::ostream& out, std::span<const PredictionRecord> records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

inline std::vector<PredictionRecord> read_records(std::istream& in) {
  std::vector<PredictionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::MalformedLine, e.what(), line_no);
    } catch (const Error& e) {
      throw Error(e.code() == Errc::ParseFailure ? Errc::MalformedLine : e.code(), e.detail(), line_no);
    }
  }
  return records;
}

}  // namespace kgtopo
