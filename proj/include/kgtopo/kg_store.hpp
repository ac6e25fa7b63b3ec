#pragma once

/// @file kg_store.hpp
/// Triple-file loading, adjacency indexes and the lookups the rest of the
/// pipeline builds on. A KnowledgeGraph is immutable once constructed; every
/// accessor is safe to call from concurrent readers.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgtopo/error.hpp"
#include "kgtopo/text.hpp"

namespace kgtopo {

struct Triple {
  std::string head;
  std::string relation;
  std::string tail;

  auto operator<=>(const Triple&) const = default;
};

enum class Slot { Head, Tail };

constexpr std::string_view slot_name(Slot slot) noexcept {
  return slot == Slot::Head ? "head" : "tail";
}

inline Slot parse_slot(std::string_view name) {
  if (text::iequals(name, "head")) return Slot::Head;
  if (text::iequals(name, "tail")) return Slot::Tail;
  throw Error(Errc::InvalidArgument, "slot must be 'head' or 'tail', got '" + std::string(name) + "'");
}

/// One triple with a missing slot: Tail is (known, relation, ?), Head is
/// (?, relation, known). `gold` is only set for evaluation runs.
struct QueryTask {
  std::string known;
  std::string relation;
  Slot missing = Slot::Tail;
  std::optional<std::string> gold;

  bool operator==(const QueryTask&) const = default;
};

enum class Direction { Out, In };

struct Neighbor {
  std::string relation;
  std::string other;
  Direction direction = Direction::Out;

  auto operator<=>(const Neighbor&) const = default;
};

struct NodeCategory {
  std::string category;
  bool conflict = false;

  bool operator==(const NodeCategory&) const = default;
};

enum class DuplicatePolicy { Keep, Dedupe };

class KnowledgeGraph {
 public:
  using IndexList = std::vector<std::size_t>;

  KnowledgeGraph() = default;

  static KnowledgeGraph from_triples(std::vector<Triple> triples,
                                     DuplicatePolicy policy = DuplicatePolicy::Dedupe) {
    KnowledgeGraph g;
    if (policy == DuplicatePolicy::Dedupe) {
      std::set<Triple> seen;
      std::vector<Triple> unique;
      unique.reserve(triples.size());
      for (auto& t : triples) {
        if (seen.insert(t).second) unique.push_back(std::move(t));
      }
      triples = std::move(unique);
    }
    g.triples_ = std::move(triples);
    g.build_indexes();
    return g;
  }

  const std::vector<Triple>& triples() const noexcept { return triples_; }
  const std::set<std::string>& nodes() const noexcept { return nodes_; }
  const std::set<std::string>& relations() const noexcept { return relations_; }

  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t num_relations() const noexcept { return relations_.size(); }
  std::size_t num_triples() const noexcept { return triples_.size(); }
  bool empty() const noexcept { return triples_.empty(); }

  bool has_node(std::string_view node) const { return nodes_.contains(std::string(node)); }
  bool has_relation(std::string_view rel) const { return relations_.contains(std::string(rel)); }

  /// Positions in triples() whose head / tail / relation equals the key.
  std::span<const std::size_t> by_head(std::string_view node) const { return lookup(by_head_, node); }
  std::span<const std::size_t> by_tail(std::string_view node) const { return lookup(by_tail_, node); }
  std::span<const std::size_t> by_relation(std::string_view rel) const {
    return lookup(by_relation_, rel);
  }

  const std::optional<std::map<std::string, NodeCategory>>& node_categories() const noexcept {
    return node_category_;
  }

  /// Copy of this graph with the entity -> category map attached.
  KnowledgeGraph with_node_categories(std::map<std::string, NodeCategory> categories) const {
    KnowledgeGraph g = *this;
    g.category_members_.clear();
    for (const auto& [node, cat] : categories) g.category_members_[cat.category].push_back(node);
    g.node_category_ = std::move(categories);
    return g;
  }

  /// Members of `category` in lexicographic order (empty when none).
  std::span<const std::string> category_members(std::string_view category) const {
    const auto it = category_members_.find(std::string(category));
    if (it == category_members_.end()) return {};
    return it->second;
  }

 private:
  using Index = std::unordered_map<std::string, IndexList>;

  static std::span<const std::size_t> lookup(const Index& index, std::string_view key) {
    const auto it = index.find(std::string(key));
    if (it == index.end()) return {};
    return it->second;
  }

  void build_indexes() {
    for (std::size_t i = 0; i < triples_.size(); ++i) {
      const Triple& t = triples_[i];
      nodes_.insert(t.head);
      nodes_.insert(t.tail);
      relations_.insert(t.relation);
      by_head_[t.head].push_back(i);
      by_tail_[t.tail].push_back(i);
      by_relation_[t.relation].push_back(i);
    }
  }

  std::vector<Triple> triples_;
  std::set<std::string> nodes_;
  std::set<std::string> relations_;
  Index by_head_;
  Index by_tail_;
  Index by_relation_;
  std::optional<std::map<std::string, NodeCategory>> node_category_;
  // std::map keeps the member vectors in key order, and nodes were inserted
  // from an ordered map, so each vector is already sorted.
  std::map<std::string, std::vector<std::string>> category_members_;
};

namespace detail {

inline bool is_header_row(const std::vector<std::string>& fields) {
  return fields.size() == 3 && text::iequals(fields[0], "head") &&
         text::iequals(fields[1], "relation") && text::iequals(fields[2], "tail");
}

}  // namespace detail

/// Reads head\trelation\ttail lines. Blank lines are skipped, a trailing CR is
/// dropped, and a leading "head/relation/tail" header row is ignored.
inline KnowledgeGraph parse_triples(std::istream& in,
                                    DuplicatePolicy policy = DuplicatePolicy::Dedupe) {
  std::vector<Triple> triples;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto fields = text::split(line, "\t");
    if (!seen_content) {
      seen_content = true;
      if (detail::is_header_row(fields)) continue;
    }
    if (fields.size() != 3) {
      throw Error(Errc::MalformedLine,
                  "line " + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                      std::to_string(fields.size()),
                  line_no);
    }
    for (const auto& f : fields) {
      if (f.empty()) {
        throw Error(Errc::MalformedLine, "line " + std::to_string(line_no) + ": empty field",
                    line_no);
      }
    }
    triples.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
  }
  if (in.bad()) throw Error(Errc::Io, "read failure");
  return KnowledgeGraph::from_triples(std::move(triples), policy);
}

inline KnowledgeGraph load_triples(const std::string& path,
                                   DuplicatePolicy policy = DuplicatePolicy::Dedupe) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  try {
    return parse_triples(in, policy);
  } catch (const Error& e) {
    throw e.with_context(path);
  }
}

/// Node and relation sets are unioned; triples are the dedupe-union.
/// Node categories are not carried over.
inline KnowledgeGraph merge(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  std::vector<Triple> all;
  all.reserve(a.num_triples() + b.num_triples());
  all.insert(all.end(), a.triples().begin(), a.triples().end());
  all.insert(all.end(), b.triples().begin(), b.triples().end());
  return KnowledgeGraph::from_triples(std::move(all), DuplicatePolicy::Dedupe);
}

/// 1-hop neighbourhood, sorted by (relation, other, direction), duplicates removed.
inline std::vector<Neighbor> neighbors(const KnowledgeGraph& g, std::string_view node,
                                       std::size_t hops = 1) {
  if (hops != 1) {
    throw Error(Errc::Unsupported, "only 1-hop neighbourhoods are supported");
  }
  if (!g.has_node(node)) throw Error(Errc::UnknownNode, std::string(node));
  std::set<Neighbor> out;
  for (std::size_t i : g.by_head(node)) {
    const Triple& t = g.triples()[i];
    out.insert({t.relation, t.tail, Direction::Out});
  }
  for (std::size_t i : g.by_tail(node)) {
    const Triple& t = g.triples()[i];
    out.insert({t.relation, t.head, Direction::In});
  }
  return {out.begin(), out.end()};
}

/// Portable seeded generator: mt19937_64 is fully specified by the standard,
/// and bounded draws use rejection sampling instead of the implementation-
/// defined std::uniform_int_distribution.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = 0;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::mt19937_64 engine_;
};

/// Uniform sample without replacement of distinct (head, tail) pairs joined by
/// `relation`: min(n, available) pairs, reproducible for a fixed seed.
inline std::vector<std::pair<std::string, std::string>> sample_pairs(const KnowledgeGraph& g,
                                                                     std::string_view relation,
                                                                     std::size_t n,
                                                                     std::uint64_t seed) {
  if (!g.has_relation(relation)) throw Error(Errc::UnknownRelation, std::string(relation));
  std::set<std::pair<std::string, std::string>> distinct;
  for (std::size_t i : g.by_relation(relation)) {
    const Triple& t = g.triples()[i];
    distinct.emplace(t.head, t.tail);
  }
  std::vector<std::pair<std::string, std::string>> pool(distinct.begin(), distinct.end());
  const std::size_t take = std::min(n, pool.size());
  SeededRng rng(seed);
  // Partial Fisher-Yates over the sorted pool.
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

/// Head prediction as tail prediction: (?, r, t) becomes (t, "inverse r", ?).
inline std::string inverse_relation(std::string_view relation) {
  return "inverse " + std::string(relation);
}

inline std::vector<std::string> nodes_by_category(const KnowledgeGraph& g,
                                                  std::string_view category) {
  if (!g.node_categories()) {
    throw Error(Errc::CategoriesNotAssigned, "node categories have not been assigned");
  }
  const auto members = g.category_members(category);
  return {members.begin(), members.end()};
}

}  // namespace kgtopo
