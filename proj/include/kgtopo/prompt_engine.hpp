#pragma once

/// @file prompt_engine.hpp
/// Rendering of the prompt variants and parsing of model responses.
///
/// Rendering is a single left-to-right pass: each `{name}` token in the
/// template is replaced by its binding and substituted text is never
/// rescanned, so entity labels containing braces are safe. The binding map
/// must cover exactly the variant's placeholder set.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgtopo/error.hpp"
#include "kgtopo/kg_store.hpp"
#include "kgtopo/prompt_templates.hpp"
#include "kgtopo/text.hpp"

namespace kgtopo {

enum class PromptVariant {
  Vanilla,
  Ontology,
  OntologyPaths,
  OntologyPlusPaths,
  Neighbors,
  Candidates,
  CandidatesOntology,
  CandidatesOntologyPaths,
  CandidatesOntologyPathsHint,
  CandidatesGraphPaths,
  OntologyInduction,
  TournamentSingle,
  TournamentMulti,
};

inline constexpr std::array kAllVariants = {
    PromptVariant::Vanilla,
    PromptVariant::Ontology,
    PromptVariant::OntologyPaths,
    PromptVariant::OntologyPlusPaths,
    PromptVariant::Neighbors,
    PromptVariant::Candidates,
    PromptVariant::CandidatesOntology,
    PromptVariant::CandidatesOntologyPaths,
    PromptVariant::CandidatesOntologyPathsHint,
    PromptVariant::CandidatesGraphPaths,
    PromptVariant::OntologyInduction,
    PromptVariant::TournamentSingle,
    PromptVariant::TournamentMulti,
};

constexpr std::string_view variant_name(PromptVariant v) noexcept {
  switch (v) {
    case PromptVariant::Vanilla: return "Vanilla";
    case PromptVariant::Ontology: return "Ontology";
    case PromptVariant::OntologyPaths: return "OntologyPaths";
    case PromptVariant::OntologyPlusPaths: return "OntologyPlusPaths";
    case PromptVariant::Neighbors: return "Neighbors";
    case PromptVariant::Candidates: return "Candidates";
    case PromptVariant::CandidatesOntology: return "CandidatesOntology";
    case PromptVariant::CandidatesOntologyPaths: return "CandidatesOntologyPaths";
    case PromptVariant::CandidatesOntologyPathsHint: return "CandidatesOntologyPathsHint";
    case PromptVariant::CandidatesGraphPaths: return "CandidatesGraphPaths";
    case PromptVariant::OntologyInduction: return "OntologyInduction";
    case PromptVariant::TournamentSingle: return "TournamentSingle";
    case PromptVariant::TournamentMulti: return "TournamentMulti";
  }
  return "?";
}

inline PromptVariant parse_variant(std::string_view name) {
  for (PromptVariant v : kAllVariants) {
    if (text::iequals(variant_name(v), name)) return v;
  }
  throw Error(Errc::InvalidArgument, "unknown prompt variant '" + std::string(name) + "'");
}

/// Variants that end in a ranked 10-candidate answer.
constexpr bool is_prediction_variant(PromptVariant v) noexcept {
  return v != PromptVariant::OntologyInduction && v != PromptVariant::TournamentSingle &&
         v != PromptVariant::TournamentMulti;
}

constexpr bool uses_candidates(PromptVariant v) noexcept {
  switch (v) {
    case PromptVariant::Candidates:
    case PromptVariant::CandidatesOntology:
    case PromptVariant::CandidatesOntologyPaths:
    case PromptVariant::CandidatesOntologyPathsHint:
    case PromptVariant::CandidatesGraphPaths:
      return true;
    default:
      return false;
  }
}

constexpr bool uses_ontology_paths(PromptVariant v) noexcept {
  return v == PromptVariant::OntologyPaths || v == PromptVariant::OntologyPlusPaths ||
         v == PromptVariant::CandidatesOntologyPaths ||
         v == PromptVariant::CandidatesOntologyPathsHint;
}

/// Every prediction variant except Vanilla and Neighbors reads the ontology.
constexpr bool needs_ontology(PromptVariant v) noexcept {
  return is_prediction_variant(v) && v != PromptVariant::Vanilla && v != PromptVariant::Neighbors;
}

namespace placeholder {
inline constexpr std::string_view kTriplet = "triplet";
inline constexpr std::string_view kType = "type";
inline constexpr std::string_view kKnownNode = "known node";
inline constexpr std::string_view kOntologyPaths = "ontology paths";
inline constexpr std::string_view kData = "data";
inline constexpr std::string_view kNeighbours = "neighbours";
inline constexpr std::string_view kRelation = "relation";
inline constexpr std::string_view kDataPairs = "data_pairs";
inline constexpr std::string_view kOntologyCategories = "ontology_categories";
inline constexpr std::string_view kGraphPaths = "graph paths";
inline constexpr std::string_view kWinners = "winners";

inline constexpr std::array kAll = {kTriplet,  kType,       kKnownNode,          kOntologyPaths,
                                    kData,     kNeighbours, kRelation,           kDataPairs,
                                    kOntologyCategories,    kGraphPaths,         kWinners};
}  // namespace placeholder

struct PromptTemplate {
  PromptVariant variant;
  std::string text;
  std::set<std::string> placeholders;
};

namespace detail {

struct PlaceholderToken {
  std::size_t pos;
  std::size_t len;  // including braces
  std::string name;
};

inline std::vector<PlaceholderToken> scan_placeholders(std::string_view tmpl) {
  std::vector<PlaceholderToken> out;
  std::size_t i = 0;
  while ((i = tmpl.find('{', i)) != std::string_view::npos) {
    const std::size_t close = tmpl.find('}', i + 1);
    if (close == std::string_view::npos) break;
    const std::string_view name = tmpl.substr(i + 1, close - i - 1);
    const bool known = std::find(placeholder::kAll.begin(), placeholder::kAll.end(), name) !=
                       placeholder::kAll.end();
    if (known) {
      out.push_back({i, close - i + 1, std::string(name)});
      i = close + 1;
    } else {
      ++i;
    }
  }
  return out;
}

inline std::string template_text(PromptVariant v) {
  switch (v) {
    case PromptVariant::Vanilla: return templates::vanilla();
    case PromptVariant::Ontology: return templates::ontology();
    case PromptVariant::OntologyPaths: return templates::ontology_paths();
    case PromptVariant::OntologyPlusPaths: return templates::ontology_plus_paths();
    case PromptVariant::Neighbors: return templates::neighbors();
    case PromptVariant::Candidates: return templates::candidates();
    case PromptVariant::CandidatesOntology: return templates::candidates_ontology();
    case PromptVariant::CandidatesOntologyPaths: return templates::candidates_ontology_paths();
    case PromptVariant::CandidatesOntologyPathsHint:
      return templates::candidates_ontology_paths_hint();
    case PromptVariant::CandidatesGraphPaths: return templates::candidates_graph_paths();
    case PromptVariant::OntologyInduction: return templates::ontology_induction();
    case PromptVariant::TournamentSingle: return templates::tournament_single();
    case PromptVariant::TournamentMulti: return templates::tournament_multi();
  }
  return {};
}

inline std::map<PromptVariant, PromptTemplate> build_template_table() {
  std::map<PromptVariant, PromptTemplate> table;
  for (PromptVariant v : kAllVariants) {
    PromptTemplate t{v, template_text(v), {}};
    for (const auto& tok : scan_placeholders(t.text)) t.placeholders.insert(tok.name);
    table.emplace(v, std::move(t));
  }
  return table;
}

}  // namespace detail

inline const PromptTemplate& prompt_template(PromptVariant v) {
  static const std::map<PromptVariant, PromptTemplate> table = detail::build_template_table();
  return table.at(v);
}

using Bindings = std::map<std::string, std::string, std::less<>>;

inline std::string render_prompt(PromptVariant v, const Bindings& bindings) {
  const PromptTemplate& t = prompt_template(v);
  for (const auto& name : t.placeholders) {
    if (!bindings.contains(name)) {
      throw Error(Errc::MissingPlaceholder,
                  std::string(variant_name(v)) + " requires {" + name + "}");
    }
  }
  for (const auto& [name, value] : bindings) {
    if (!t.placeholders.contains(name)) {
      throw Error(Errc::UnknownPlaceholder,
                  std::string(variant_name(v)) + " has no placeholder {" + name + "}");
    }
  }
  std::string out;
  out.reserve(t.text.size() + 256);
  std::size_t cursor = 0;
  for (const auto& tok : detail::scan_placeholders(t.text)) {
    out.append(t.text, cursor, tok.pos - cursor);
    out.append(bindings.find(tok.name)->second);
    cursor = tok.pos + tok.len;
  }
  out.append(t.text, cursor, std::string::npos);
  return out;
}

/// "known --> relation --> ?" for a missing tail, "? --> relation --> known"
/// for a missing head.
inline std::string render_triplet(const QueryTask& task) {
  std::string out;
  if (task.missing == Slot::Tail) {
    out.append(task.known).append(text::kArrow).append(task.relation).append(text::kArrow).append("?");
  } else {
    out.append("?").append(text::kArrow).append(task.relation).append(text::kArrow).append(task.known);
  }
  return out;
}

inline constexpr std::size_t kMaxRankedCandidates = 10;

struct RankedAnswer {
  std::vector<std::string> candidates;
  bool truncated = false;
  std::string raw_response;

  bool operator==(const RankedAnswer&) const = default;
};

/// Extracts the first bracketed list of quoted items, trimmed, deduplicated
/// under entity normalization, and capped at ten entries.
inline RankedAnswer parse_ranked_answer(std::string_view response) {
  auto items = text::find_quoted_list(response, [](const std::vector<std::string>& v) {
    return std::any_of(v.begin(), v.end(),
                       [](const std::string& s) { return !text::trim(s).empty(); });
  });
  if (!items) throw Error(Errc::ParseFailure, "no bracketed list of quoted candidates");
  RankedAnswer answer;
  answer.raw_response = std::string(response);
  std::set<std::string> seen;
  for (const auto& raw : *items) {
    std::string item(text::trim(raw));
    if (item.empty() || !seen.insert(text::normalize_entity(item)).second) continue;
    if (answer.candidates.size() == kMaxRankedCandidates) {
      answer.truncated = true;
      break;
    }
    answer.candidates.push_back(std::move(item));
  }
  return answer;
}

namespace detail {

inline bool is_word_byte(char c) noexcept {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

// Earliest whole-word occurrence of `needle` in `hay`.
inline std::optional<std::size_t> find_word(std::string_view hay, std::string_view needle) {
  if (needle.empty()) return std::nullopt;
  for (std::size_t pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + 1)) {
    const bool left_ok = pos == 0 || !is_word_byte(hay[pos - 1]) || !is_word_byte(needle.front());
    const std::size_t end = pos + needle.size();
    const bool right_ok =
        end == hay.size() || !is_word_byte(hay[end]) || !is_word_byte(needle.back());
    if (left_ok && right_ok) return pos;
  }
  return std::nullopt;
}

}  // namespace detail

/// The batch member mentioned earliest in the response (normalized, whole
/// word; ties go to the longer label). Falls back to the first quoted string
/// when it names a batch member.
inline std::string parse_single_winner(std::string_view response,
                                       std::span<const std::string> batch) {
  if (batch.empty()) throw Error(Errc::InvalidArgument, "empty batch");
  const std::string hay = text::normalize_entity(response);
  std::optional<std::size_t> best_pos;
  std::size_t best_len = 0;
  const std::string* best = nullptr;
  for (const auto& member : batch) {
    const std::string key = text::normalize_entity(member);
    const auto pos = detail::find_word(hay, key);
    if (!pos) continue;
    if (!best_pos || *pos < *best_pos || (*pos == *best_pos && key.size() > best_len)) {
      best_pos = pos;
      best_len = key.size();
      best = &member;
    }
  }
  if (best) return *best;
  if (auto items = text::find_quoted_list(response)) {
    const std::string first = text::normalize_entity(items->front());
    for (const auto& member : batch) {
      if (text::normalize_entity(member) == first) return member;
    }
  }
  throw Error(Errc::NoWinner, "response names no member of the batch");
}

/// Up to `k` batch members named in the response's quoted list, in response
/// order. Falls back to the single-winner rule when no list item matches.
inline std::vector<std::string> parse_winners(std::string_view response,
                                              std::span<const std::string> batch, std::size_t k) {
  if (batch.empty()) throw Error(Errc::InvalidArgument, "empty batch");
  std::unordered_map<std::string, const std::string*> by_key;
  for (const auto& member : batch) by_key.emplace(text::normalize_entity(member), &member);
  std::vector<std::string> winners;
  if (auto items = text::find_quoted_list(response)) {
    std::set<const std::string*> taken;
    for (const auto& item : *items) {
      if (winners.size() == k) break;
      const auto it = by_key.find(text::normalize_entity(item));
      if (it != by_key.end() && taken.insert(it->second).second) winners.push_back(*it->second);
    }
  }
  if (winners.empty() && k > 0) winners.push_back(parse_single_winner(response, batch));
  return winners;
}

}  // namespace kgtopo
