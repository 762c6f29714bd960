// Independent oracles the implementation is checked against. These
// deliberately re-derive results through different routes: plain nested
// loops instead of binding propagation, graph reachability instead of rule
// chaining, the law of cosines instead of the haversine form, and a
// standalone replay of the seeded failure hash.

#ifndef SPSWEB_TESTS_ORACLES_HPP
#define SPSWEB_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "spsweb/semantic_store.hpp"

namespace spsweb::testing {

// --------------------------------------------------------------------------
// Naive BGP evaluation: enumerate every way of assigning one stored triple
// to each pattern, then keep assignments whose variable usage is consistent.

inline bool oracle_unify(const rdf::Term& pattern_term, const rdf::Term& data_term,
                         std::map<std::string, rdf::Term>& binding) {
  if (pattern_term.kind != rdf::TermKind::Variable) {
    return pattern_term == data_term;
  }
  auto it = binding.find(pattern_term.value);
  if (it != binding.end()) return it->second == data_term;
  binding.emplace(pattern_term.value, data_term);
  return true;
}

inline void oracle_bgp_recurse(const std::vector<rdf::TriplePattern>& patterns,
                               const std::vector<rdf::Triple>& triples,
                               std::size_t depth,
                               std::map<std::string, rdf::Term> binding,
                               std::set<rdf::Bindings>& out) {
  if (depth == patterns.size()) {
    out.insert(std::move(binding));
    return;
  }
  for (const auto& t : triples) {
    auto extended = binding;
    if (!oracle_unify(patterns[depth].subject, t.subject, extended)) continue;
    if (!oracle_unify(patterns[depth].predicate, t.predicate, extended)) continue;
    if (!oracle_unify(patterns[depth].object, t.object, extended)) continue;
    oracle_bgp_recurse(patterns, triples, depth + 1, std::move(extended), out);
  }
}

inline std::set<rdf::Bindings> oracle_query_bgp(
    const std::set<rdf::Triple>& store,
    const std::vector<rdf::TriplePattern>& patterns) {
  const std::vector<rdf::Triple> triples(store.begin(), store.end());
  std::set<rdf::Bindings> out;
  oracle_bgp_recurse(patterns, triples, 0, {}, out);
  return out;
}

// --------------------------------------------------------------------------
// RDFS closure via reachability over the hierarchy graphs.

inline std::set<std::string> oracle_reachable(
    const std::vector<std::pair<std::string, std::string>>& edges,
    const std::string& from) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& [child, parent] : edges) adj[child].push_back(parent);
  std::set<std::string> seen;
  std::vector<std::string> stack{from};
  while (!stack.empty()) {
    const std::string n = stack.back();
    stack.pop_back();
    for (const auto& next : adj[n]) {
      if (seen.insert(next).second) stack.push_back(next);
    }
  }
  return seen;
}

inline std::set<rdf::Triple> oracle_rdfs_closure(const std::set<rdf::Triple>& store,
                                                 const rdf::OntologySchema& schema) {
  const rdf::Term type = rdf::rdf_type();
  std::set<rdf::Triple> out = store;
  for (const auto& t : store) {
    if (t.predicate == type && t.object.kind == rdf::TermKind::Iri) {
      for (const auto& ancestor :
           oracle_reachable(schema.subclass_of, t.object.value)) {
        out.insert({t.subject, type, rdf::Term::iri(ancestor)});
      }
    }
    if (t.predicate.kind == rdf::TermKind::Iri) {
      for (const auto& super :
           oracle_reachable(schema.subproperty_of, t.predicate.value)) {
        out.insert({t.subject, rdf::Term::iri(super), t.object});
      }
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// Great-circle distance via the spherical law of cosines.

inline double oracle_great_circle_km(double lat1_deg, double lon1_deg,
                                     double lat2_deg, double lon2_deg) {
  constexpr double kPi = 3.14159265358979323846;
  constexpr double kRadius = 6371.0;
  const double p1 = lat1_deg * kPi / 180.0;
  const double p2 = lat2_deg * kPi / 180.0;
  const double dl = (lon2_deg - lon1_deg) * kPi / 180.0;
  double cosine =
      std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  if (cosine > 1.0) cosine = 1.0;
  if (cosine < -1.0) cosine = -1.0;
  return kRadius * std::acos(cosine);
}

// --------------------------------------------------------------------------
// Standalone replay of the seeded failure decision.

inline bool oracle_failure_decision(std::uint64_t seed, const std::string& task_id,
                                    double failure_rate) {
  std::uint64_t h = 14695981039346656037ULL;
  const std::string key = std::to_string(seed) + ":" + task_id;
  for (const char c : key) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  const double u = static_cast<double>(h >> 11) / 9007199254740992.0;  // 2^53
  return u < failure_rate;
}

}  // namespace spsweb::testing

#endif  // SPSWEB_TESTS_ORACLES_HPP
