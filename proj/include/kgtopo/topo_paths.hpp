#pragma once

/// @file topo_paths.hpp
/// Missing-category inference and alternate path enumeration over the
/// ontology graph, plus grounding of ontology paths in the instance graph.

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "kgtopo/error.hpp"
#include "kgtopo/kg_store.hpp"
#include "kgtopo/ontology.hpp"
#include "kgtopo/text.hpp"

namespace kgtopo {

/// categories.size() == relations.size() + 1.
struct OntologyPath {
  std::vector<std::string> categories;
  std::vector<std::string> relations;

  std::size_t hops() const noexcept { return relations.size(); }
  bool operator==(const OntologyPath&) const = default;
  auto operator<=>(const OntologyPath&) const = default;
};

struct PathEnumeration {
  std::vector<OntologyPath> paths;
  bool truncated = false;
};

struct GroundedPath {
  std::vector<std::string> entities;
  std::vector<std::string> relations;
  std::size_t source_path = 0;  // index into the ontology paths it grounds

  bool operator==(const GroundedPath&) const = default;
};

inline std::string infer_missing_category(const Ontology& o, std::string_view relation,
                                          Slot missing) {
  const auto it = o.relation_map.find(std::string(relation));
  if (it == o.relation_map.end()) throw Error(Errc::UnknownRelation, std::string(relation));
  return missing == Slot::Tail ? it->second.tail : it->second.head;
}

struct PathLimits {
  std::size_t max_hops = 5;
  std::size_t max_paths = 64;
};

/// Simple forward paths src -> dst of 1..max_hops edges, with the single edge
/// (src, exclude_relation, dst) removed. Sorted by hop count, then relation
/// sequence, then category sequence.
inline PathEnumeration enumerate_ontology_paths(const Ontology& o, const std::string& src,
                                                const std::string& dst,
                                                std::string_view exclude_relation,
                                                PathLimits limits = {}) {
  if (!o.categories.contains(src)) throw Error(Errc::UnknownCategory, src);
  if (!o.categories.contains(dst)) throw Error(Errc::UnknownCategory, dst);

  std::map<std::string, std::vector<const OntologyEdge*>> out_edges;
  for (const auto& e : o.edges) {
    if (e.head_category == src && e.tail_category == dst && e.relation == exclude_relation) continue;
    out_edges[e.head_category].push_back(&e);
  }

  std::vector<OntologyPath> found;
  OntologyPath current;
  current.categories.push_back(src);
  std::set<std::string> on_path{src};

  auto dfs = [&](auto&& self, const std::string& at) -> void {
    if (current.hops() == limits.max_hops) return;
    const auto it = out_edges.find(at);
    if (it == out_edges.end()) return;
    for (const OntologyEdge* e : it->second) {
      const std::string& next = e->tail_category;
      if (on_path.contains(next)) continue;
      current.relations.push_back(e->relation);
      current.categories.push_back(next);
      if (next == dst) {
        found.push_back(current);
      } else {
        on_path.insert(next);
        self(self, next);
        on_path.erase(next);
      }
      current.relations.pop_back();
      current.categories.pop_back();
    }
  };
  if (src != dst) dfs(dfs, src);

  std::sort(found.begin(), found.end(), [](const OntologyPath& a, const OntologyPath& b) {
    if (a.hops() != b.hops()) return a.hops() < b.hops();
    return std::tie(a.relations, a.categories) < std::tie(b.relations, b.categories);
  });
  PathEnumeration result;
  if (found.size() > limits.max_paths) {
    found.resize(limits.max_paths);
    result.truncated = true;
  }
  result.paths = std::move(found);
  return result;
}

/// "cat --> relation --> cat --> ... --> cat"
inline std::string format_ontology_path(const OntologyPath& p) {
  std::string out = p.categories.empty() ? std::string() : p.categories.front();
  for (std::size_t i = 0; i < p.relations.size(); ++i) {
    out.append(text::kArrow).append(p.relations[i]).append(text::kArrow).append(p.categories[i + 1]);
  }
  return out;
}

/// Inverse of format_ontology_path for labels that do not contain " --> ".
inline OntologyPath parse_ontology_path(std::string_view formatted) {
  const auto parts = text::split(formatted, text::kArrow);
  if (parts.size() < 3 || parts.size() % 2 == 0) {
    throw Error(Errc::ParseFailure, "not an alternating category/relation path");
  }
  OntologyPath p;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    (i % 2 == 0 ? p.categories : p.relations).push_back(parts[i]);
  }
  return p;
}

inline std::string format_grounded_path(const GroundedPath& p) {
  std::string out = p.entities.empty() ? std::string() : p.entities.front();
  for (std::size_t i = 0; i < p.relations.size(); ++i) {
    out.append(text::kArrow).append(p.relations[i]).append(text::kArrow).append(p.entities[i + 1]);
  }
  return out;
}

/// Every walk from `start` whose relation sequence equals one of the ontology
/// paths, following edge direction. Output is grouped by ontology path in the
/// given order; within a path, walks are in lexicographic entity order (the
/// same order a layer-by-layer expansion with sorted successors produces).
inline std::vector<GroundedPath> ground_paths(const KnowledgeGraph& g, const std::string& start,
                                              std::span<const OntologyPath> ontology_paths,
                                              std::size_t max_grounded = 16) {
  if (!g.has_node(start)) throw Error(Errc::UnknownNode, start);
  std::vector<GroundedPath> out;

  auto successors = [&](const std::string& node, const std::string& relation) {
    std::set<std::string> next;
    for (std::size_t i : g.by_head(node)) {
      const Triple& t = g.triples()[i];
      if (t.relation == relation) next.insert(t.tail);
    }
    return next;
  };

  for (std::size_t pi = 0; pi < ontology_paths.size() && out.size() < max_grounded; ++pi) {
    const auto& rels = ontology_paths[pi].relations;
    if (rels.empty()) continue;
    GroundedPath walk;
    walk.relations = rels;
    walk.source_path = pi;
    walk.entities.push_back(start);
    auto dfs = [&](auto&& self, std::size_t depth) -> void {
      if (out.size() >= max_grounded) return;
      if (depth == rels.size()) {
        out.push_back(walk);
        return;
      }
      for (const auto& next : successors(walk.entities.back(), rels[depth])) {
        walk.entities.push_back(next);
        self(self, depth + 1);
        walk.entities.pop_back();
        if (out.size() >= max_grounded) return;
      }
    };
    dfs(dfs, 0);
  }
  return out;
}

}  // namespace kgtopo
