#pragma once

/// @file ontology.hpp
/// Relation-level ontology: every relation maps to exactly one
/// (head category, tail category) pair. Induced relation by relation through
/// a completion backend, verified structurally, serialized as JSON.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgtopo/error.hpp"
#include "kgtopo/kg_store.hpp"
#include "kgtopo/prompt_engine.hpp"
#include "kgtopo/text.hpp"

namespace kgtopo {

struct OntologyEdge {
  std::string head_category;
  std::string relation;
  std::string tail_category;

  auto operator<=>(const OntologyEdge&) const = default;
};

struct CategoryPair {
  std::string head;
  std::string tail;

  bool operator==(const CategoryPair&) const = default;
};

/// Fields are public so that tests and loaders can build inconsistent
/// ontologies; verify_ontology() reports what is wrong with them.
struct Ontology {
  std::set<std::string> categories;
  std::map<std::string, CategoryPair> relation_map;
  std::set<OntologyEdge> edges;

  /// Inserts a consistent (head, relation, tail) triplet. A relation that is
  /// already mapped keeps its first pair.
  bool add(const std::string& head, const std::string& relation, const std::string& tail) {
    if (relation_map.contains(relation)) return false;
    categories.insert(head);
    categories.insert(tail);
    relation_map.emplace(relation, CategoryPair{head, tail});
    edges.insert({head, relation, tail});
    return true;
  }

  bool operator==(const Ontology&) const = default;
};

/// Lowercase, no whitespace, words joined by single underscores.
inline bool is_valid_category_label(std::string_view label) {
  if (label.empty() || label.front() == '_' || label.back() == '_') return false;
  char prev = 0;
  for (char c : label) {
    if (text::is_space(c) || (c >= 'A' && c <= 'Z') || c == '\'' || c == '"') return false;
    if (c == '_' && prev == '_') return false;
    prev = c;
  }
  return true;
}

struct ParsedCategories {
  std::string head_category;
  std::string tail_category;
  std::string relation;

  bool operator==(const ParsedCategories&) const = default;
};

/// Pulls ['head', 'tail', 'relation'] out of a response. Categories are
/// normalized to lowercase_underscore form; the relation only has its
/// whitespace collapsed.
inline ParsedCategories parse_category_response(std::string_view response) {
  auto items = text::find_quoted_list(
      response, [](const std::vector<std::string>& v) { return v.size() == 3; });
  if (!items) {
    throw Error(Errc::ParseFailure,
                "no 3-element bracketed list in response: " + std::string(response));
  }
  ParsedCategories out{text::normalize_category((*items)[0]),
                       text::normalize_category((*items)[1]),
                       text::collapse_whitespace((*items)[2])};
  if (out.head_category.empty() || out.tail_category.empty()) {
    throw Error(Errc::ParseFailure, "empty category in response: " + std::string(response));
  }
  return out;
}

struct CategoryAssignment {
  std::string relation;
  std::string head_category;
  std::string tail_category;
  std::size_t sample_size = 0;
  std::string raw_response;
};

/// Anything that turns a prompt into response text. The gateway provides
/// cached, retrying implementations; tests plug in lambdas.
using CompletionFn = std::function<std::string(const std::string& prompt)>;

/// "['(h1, t1)', '(h2, t2)']" as shown in the induction prompt's examples.
inline std::string format_data_pairs(std::span<const std::pair<std::string, std::string>> pairs) {
  std::vector<std::string> items;
  items.reserve(pairs.size());
  for (const auto& [h, t] : pairs) items.push_back("(" + h + ", " + t + ")");
  return text::quoted_list(items);
}

inline std::string render_induction_prompt(std::string_view relation,
                                           std::span<const std::pair<std::string, std::string>> pairs,
                                           std::span<const std::string> existing_categories) {
  return render_prompt(PromptVariant::OntologyInduction,
                       {{std::string(placeholder::kRelation), std::string(relation)},
                        {std::string(placeholder::kDataPairs), format_data_pairs(pairs)},
                        {std::string(placeholder::kOntologyCategories),
                         text::bracket_list(existing_categories)}});
}

inline CategoryAssignment induce_relation_categories(
    const CompletionFn& complete, const std::string& relation,
    std::span<const std::pair<std::string, std::string>> pairs,
    std::span<const std::string> existing_categories) {
  if (pairs.empty()) throw Error(Errc::InvalidArgument, "no sample pairs for '" + relation + "'");
  const std::string prompt = render_induction_prompt(relation, pairs, existing_categories);
  std::string response = complete(prompt);
  ParsedCategories parsed = parse_category_response(response);
  if (parsed.relation != text::collapse_whitespace(relation)) {
    throw Error(Errc::RelationMismatch,
                "asked about '" + relation + "', response names '" + parsed.relation + "'");
  }
  return {relation, std::move(parsed.head_category), std::move(parsed.tail_category), pairs.size(),
          std::move(response)};
}

struct VerificationReport {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
};

inline VerificationReport verify_ontology(const Ontology& o) {
  VerificationReport report;
  std::map<std::string, std::vector<const OntologyEdge*>> by_relation;
  for (const auto& e : o.edges) by_relation[e.relation].push_back(&e);
  for (const auto& [rel, _] : o.relation_map) by_relation.try_emplace(rel);

  for (const auto& [rel, edges] : by_relation) {
    if (edges.size() != 1) {
      report.violations.push_back("relation '" + rel + "' has " + std::to_string(edges.size()) +
                                  " category pairs");
      continue;
    }
    const auto it = o.relation_map.find(rel);
    if (it == o.relation_map.end()) {
      report.violations.push_back("edge for relation '" + rel + "' missing from relation map");
    } else if (it->second.head != edges.front()->head_category ||
               it->second.tail != edges.front()->tail_category) {
      report.violations.push_back("relation '" + rel + "' disagrees between edges and map");
    }
  }
  std::set<std::string> used;
  for (const auto& e : o.edges) {
    used.insert(e.head_category);
    used.insert(e.tail_category);
  }
  for (const auto& c : used) {
    if (!o.categories.contains(c)) {
      report.violations.push_back("category '" + c + "' used by an edge but not declared");
    }
  }
  std::set<std::string> labels = o.categories;
  labels.insert(used.begin(), used.end());
  for (const auto& c : labels) {
    if (!is_valid_category_label(c)) {
      report.violations.push_back("malformed category label '" + c + "'");
    }
  }
  return report;
}

/// Relations are visited in lexicographic order; each call sees the
/// categories accumulated so far.
inline Ontology build_ontology(const CompletionFn& complete, const KnowledgeGraph& g,
                               std::size_t n_samples = 50, std::uint64_t seed = 0,
                               std::vector<CategoryAssignment>* audit = nullptr) {
  if (g.empty()) throw Error(Errc::InvalidArgument, "cannot build an ontology from an empty graph");
  Ontology o;
  for (const auto& relation : g.relations()) {
    try {
      const auto pairs = sample_pairs(g, relation, n_samples, seed);
      const std::vector<std::string> existing(o.categories.begin(), o.categories.end());
      CategoryAssignment a = induce_relation_categories(complete, relation, pairs, existing);
      o.add(a.head_category, relation, a.tail_category);
      if (audit) audit->push_back(std::move(a));
    } catch (const Error& e) {
      throw e.with_context("relation '" + relation + "'");
    }
  }
  return o;
}

/// Majority vote over incident triple slots; ties go to the lexicographically
/// smallest category. `conflict` marks nodes that received more than one.
inline KnowledgeGraph assign_node_categories(const KnowledgeGraph& g, const Ontology& o) {
  std::map<std::string, std::map<std::string, std::size_t>> tally;
  for (const Triple& t : g.triples()) {
    const auto it = o.relation_map.find(t.relation);
    if (it == o.relation_map.end()) throw Error(Errc::MissingRelation, t.relation);
    ++tally[t.head][it->second.head];
    ++tally[t.tail][it->second.tail];
  }
  std::map<std::string, NodeCategory> assigned;
  for (const auto& [node, counts] : tally) {
    const auto best = std::max_element(counts.begin(), counts.end(),
                                       [](const auto& a, const auto& b) {
                                         return a.second < b.second;  // first max wins ties
                                       });
    assigned.emplace(node, NodeCategory{best->first, counts.size() > 1});
  }
  return g.with_node_categories(std::move(assigned));
}

inline nlohmann::json ontology_to_json(const Ontology& o) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : o.edges) edges.push_back({e.head_category, e.relation, e.tail_category});
  return {{"categories", o.categories}, {"edges", std::move(edges)}};
}

/// Stable text form: two-space indent, trailing newline.
inline std::string serialize_ontology(const Ontology& o) {
  return ontology_to_json(o).dump(2) + "\n";
}

inline Ontology ontology_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("categories") || !j.contains("edges") ||
      !j["categories"].is_array() || !j["edges"].is_array()) {
    throw Error(Errc::ParseFailure, "ontology JSON needs 'categories' and 'edges' arrays");
  }
  Ontology o;
  for (const auto& c : j["categories"]) {
    if (!c.is_string()) throw Error(Errc::ParseFailure, "category labels must be strings");
    o.categories.insert(c.get<std::string>());
  }
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_string() || !e[1].is_string() ||
        !e[2].is_string()) {
      throw Error(Errc::ParseFailure, "each edge must be [head_cat, relation, tail_cat]");
    }
    OntologyEdge edge{e[0].get<std::string>(), e[1].get<std::string>(), e[2].get<std::string>()};
    o.relation_map.try_emplace(edge.relation, CategoryPair{edge.head_category, edge.tail_category});
    o.edges.insert(std::move(edge));
  }
  return o;
}

inline Ontology parse_ontology(std::string_view json_text) {
  try {
    return ontology_from_json(nlohmann::json::parse(json_text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseFailure, std::string("ontology JSON: ") + e.what());
  }
}

inline Ontology load_ontology(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ontology(ss.str());
}

inline void save_ontology(const Ontology& o, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
  out << serialize_ontology(o);
  if (!out) throw Error(Errc::Io, "write failed for '" + path + "'");
}

}  // namespace kgtopo
