#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kgtopo/kg_store.hpp"
#include "kgtopo/ontology.hpp"

namespace fixture {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("kgtopo-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_triples(const std::string& path, const std::vector<kgtopo::Triple>& triples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const auto& t : triples) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
}

// Small musician graph with five relations.
inline std::vector<kgtopo::Triple> musicians() {
  return {
      {"Miles Davis", "place of birth", "Alton"},
      {"Miles Davis", "died In", "United States"},
      {"Miles Davis", "instrument", "trumpet"},
      {"Miles Davis", "genre", "jazz"},
      {"John Coltrane", "place of birth", "Hamlet"},
      {"John Coltrane", "died In", "United States"},
      {"John Coltrane", "instrument", "saxophone"},
      {"John Coltrane", "genre", "jazz"},
      {"John Lennon", "place of birth", "Liverpool"},
      {"John Lennon", "died In", "United States"},
      {"John Lennon", "instrument", "guitar"},
      {"John Lennon", "genre", "rock"},
      {"Edith Piaf", "place of birth", "Paris"},
      {"Edith Piaf", "died In", "France"},
      {"Edith Piaf", "genre", "chanson"},
      {"Alton", "located in", "United States"},
      {"Hamlet", "located in", "United States"},
      {"Liverpool", "located in", "United Kingdom"},
      {"Paris", "located in", "France"},
      {"Django Reinhardt", "instrument", "guitar"},
  };
}

inline kgtopo::Ontology musician_ontology() {
  kgtopo::Ontology o;
  o.add("musician", "place of birth", "city");
  o.add("musician", "died In", "country");
  o.add("musician", "instrument", "instrument");
  o.add("musician", "genre", "genre");
  o.add("city", "located in", "country");
  return o;
}

// Ontology edges reconstructed from the ILPC-small alternate-path listings,
// plus two self-referential relations that have no alternates.
inline kgtopo::Ontology people_ontology() {
  kgtopo::Ontology o;
  o.add("individual", "medical condition", "medical_condition");
  o.add("individual", "cause of death", "medical_condition");
  o.add("individual", "place of birth", "city");
  o.add("individual", "place of death", "city");
  o.add("individual", "residence", "city");
  o.add("individual", "employer", "university_or_organization");
  o.add("university_or_organization", "headquarters location", "city");
  o.add("individual", "part of", "organization");
  o.add("individual", "member of", "organization");
  o.add("individual", "languages spoken, written or signed", "language");
  o.add("university_or_organization", "located in the administrative territorial entity",
        "city_or_country");
  o.add("city_or_country", "official language", "language");
  o.add("city_or_country", "named after", "individual");
  o.add("individual", "unmarried partner", "individual");
  o.add("individual", "sibling", "individual");
  return o;
}

inline kgtopo::Ontology random_ontology(std::mt19937_64& rng, std::size_t max_categories,
                                        std::size_t max_relations) {
  std::uniform_int_distribution<std::size_t> n_cat(2, max_categories);
  std::uniform_int_distribution<std::size_t> n_rel(1, max_relations);
  const std::size_t cats = n_cat(rng);
  const std::size_t rels = n_rel(rng);
  std::uniform_int_distribution<std::size_t> pick(0, cats - 1);
  kgtopo::Ontology o;
  for (std::size_t c = 0; c < cats; ++c) o.categories.insert("c" + std::to_string(c));
  for (std::size_t r = 0; r < rels; ++r) {
    o.add("c" + std::to_string(pick(rng)), "r" + std::to_string(r), "c" + std::to_string(pick(rng)));
  }
  return o;
}

/// Exactly `n_nodes` distinct nodes, `n_relations` distinct relations and
/// `n_triples` distinct triples. Needs n_triples >= n_nodes / 2 + 1 and
/// n_nodes / 2 >= n_relations.
inline std::vector<kgtopo::Triple> synthetic_graph(std::size_t n_nodes, std::size_t n_relations,
                                                   std::size_t n_triples, std::uint64_t seed,
                                                   const std::string& prefix = "Q") {
  auto node = [&](std::size_t i) { return prefix + std::to_string(i); };
  auto rel = [](std::size_t i) { return "P" + std::to_string(i); };
  std::set<kgtopo::Triple> seen;
  std::vector<kgtopo::Triple> out;
  auto push = [&](kgtopo::Triple t) {
    if (seen.insert(t).second) out.push_back(std::move(t));
  };
  // cover every node and every relation first
  for (std::size_t i = 0; i < n_nodes; i += 2) {
    push({node(i), rel((i / 2) % n_relations), node(i + 1 < n_nodes ? i + 1 : 0)});
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pn(0, n_nodes - 1);
  std::uniform_int_distribution<std::size_t> pr(0, n_relations - 1);
  while (out.size() < n_triples) push({node(pn(rng)), rel(pr(rng)), node(pn(rng))});
  return out;
}

/// Test triples over an existing node range: `n` distinct triples.
inline std::vector<kgtopo::Triple> synthetic_test(std::size_t n_nodes, std::size_t n_relations,
                                                  std::size_t n, std::uint64_t seed,
                                                  const std::string& prefix = "Q") {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pn(0, n_nodes - 1);
  std::uniform_int_distribution<std::size_t> pr(0, n_relations - 1);
  std::set<kgtopo::Triple> seen;
  std::vector<kgtopo::Triple> out;
  while (out.size() < n) {
    kgtopo::Triple t{prefix + std::to_string(pn(rng)), "P" + std::to_string(pr(rng)),
                     prefix + std::to_string(pn(rng))};
    if (seen.insert(t).second) out.push_back(std::move(t));
  }
  return out;
}

/// Relation named in the last "Relation: '...'" line of an induction prompt.
inline std::string induction_relation(const std::string& prompt) {
  const std::string tag = "Relation: '";
  const auto at = prompt.rfind(tag);
  const auto start = at + tag.size();
  return prompt.substr(start, prompt.find('\'', start) - start);
}

}  // namespace fixture
