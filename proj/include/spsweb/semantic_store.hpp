/*
Copyright 2026 The spsweb Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef SPSWEB_SEMANTIC_STORE_HPP
#define SPSWEB_SEMANTIC_STORE_HPP

#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "spsweb/asset_layer.hpp"
#include "spsweb/errors.hpp"
#include "spsweb/task_model.hpp"
#include "spsweb/time.hpp"

// RDF image of requests and tasks: translation to triples, a set-backed
// store with materialized RDFS entailment, and conjunctive basic-graph-
// pattern matching.

namespace spsweb::rdf {

inline constexpr char kRdfNs[] = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
inline constexpr char kRdfsNs[] = "http://www.w3.org/2000/01/rdf-schema#";
inline constexpr char kSpsNs[] = "http://www.opengis.net/sps/2.0#";
inline constexpr char kXsdNs[] = "http://www.w3.org/2001/XMLSchema#";

/// Built-in prefix table; the artifact does not accept arbitrary prefix
/// declarations.
inline const std::vector<std::pair<std::string, std::string>>& prefix_table() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"rdf:", kRdfNs},
      {"rdfs:", kRdfsNs},
      {"sps:", kSpsNs},
      {"xsd:", kXsdNs},
  };
  return table;
}

inline std::string expand_iri(std::string_view token) {
  for (const auto& [prefix, ns] : prefix_table()) {
    if (token.rfind(prefix, 0) == 0) {
      return ns + std::string(token.substr(prefix.size()));
    }
  }
  return std::string(token);
}

inline std::string compact_iri(std::string_view iri) {
  for (const auto& [prefix, ns] : prefix_table()) {
    if (iri.rfind(ns, 0) == 0) {
      return prefix + std::string(iri.substr(ns.size()));
    }
  }
  return "<" + std::string(iri) + ">";
}

enum class TermKind { Iri, Literal, Variable };
enum class LiteralType { String, Decimal, DateTime };

struct Term {
  TermKind kind = TermKind::Iri;
  std::string value;  // full IRI, lexical form, or variable name
  LiteralType literal_type = LiteralType::String;

  static Term iri(std::string full) {
    return {TermKind::Iri, std::move(full), LiteralType::String};
  }
  static Term prefixed(std::string_view token) { return iri(expand_iri(token)); }
  static Term literal(std::string lexical,
                      LiteralType type = LiteralType::String) {
    return {TermKind::Literal, std::move(lexical), type};
  }
  static Term variable(std::string name) {
    return {TermKind::Variable, std::move(name), LiteralType::String};
  }

  bool is_variable() const noexcept { return kind == TermKind::Variable; }

  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term& a, const Term& b) {
    return std::tie(a.kind, a.value, a.literal_type) <=>
           std::tie(b.kind, b.value, b.literal_type);
  }
};

struct Triple {
  Term subject;
  Term predicate;
  Term object;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple& a, const Triple& b) {
    return std::tie(a.subject, a.predicate, a.object) <=>
           std::tie(b.subject, b.predicate, b.object);
  }
};

using TriplePattern = Triple;  // terms may be variables
using Bindings = std::map<std::string, Term>;

/// Subclass/subproperty hierarchy driving the two entailment rules.
struct OntologySchema {
  std::vector<std::pair<std::string, std::string>> subclass_of;     // (child, parent) IRIs
  std::vector<std::pair<std::string, std::string>> subproperty_of;  // (child, parent) IRIs

  /// The service's own classes: the three operation classes under
  /// TaskingRequest, plus Task and StatusReport.
  static OntologySchema sps_default() {
    OntologySchema s;
    const std::string base = kSpsNs;
    s.subclass_of = {
        {base + "GetFeasibility", base + "TaskingRequest"},
        {base + "Submit", base + "TaskingRequest"},
        {base + "Reserve", base + "TaskingRequest"},
    };
    return s;
  }
};

namespace detail {

inline void check_acyclic(
    const std::vector<std::pair<std::string, std::string>>& edges,
    const char* what) {
  std::map<std::string, std::vector<std::string>> adj;
  std::set<std::string> nodes;
  for (const auto& [child, parent] : edges) {
    adj[child].push_back(parent);
    nodes.insert(child);
    nodes.insert(parent);
  }
  std::map<std::string, int> color;  // 0 new, 1 active, 2 done
  const std::function<void(const std::string&)> visit = [&](const std::string& n) {
    color[n] = 1;
    for (const auto& next : adj[n]) {
      const int c = color[next];
      if (c == 1) {
        throw SpsError(Errc::CyclicSchema,
                       std::string(what) + " hierarchy contains a cycle at " + next);
      }
      if (c == 0) visit(next);
    }
    color[n] = 2;
  };
  for (const auto& n : nodes) {
    if (color[n] == 0) visit(n);
  }
}

}  // namespace detail

inline void validate_schema(const OntologySchema& schema) {
  detail::check_acyclic(schema.subclass_of, "class");
  detail::check_acyclic(schema.subproperty_of, "property");
}

/// Forward-chains the two RDFS rules to fixpoint:
///   (x rdf:type C) and (C subClassOf D)    =>  (x rdf:type D)
///   (x P y)        and (P subPropertyOf Q) =>  (x Q y)
/// Idempotent, and the result always contains the input.
inline std::set<Triple> rdfs_closure(const std::set<Triple>& store,
                                     const OntologySchema& schema) {
  validate_schema(schema);
  std::map<std::string, std::vector<std::string>> class_parents;
  for (const auto& [child, parent] : schema.subclass_of) {
    class_parents[child].push_back(parent);
  }
  std::map<std::string, std::vector<std::string>> property_parents;
  for (const auto& [child, parent] : schema.subproperty_of) {
    property_parents[child].push_back(parent);
  }
  const Term rdf_type = Term::iri(std::string(kRdfNs) + "type");

  std::set<Triple> out = store;
  std::vector<Triple> worklist(store.begin(), store.end());
  while (!worklist.empty()) {
    const Triple t = worklist.back();
    worklist.pop_back();
    if (t.predicate == rdf_type && t.object.kind == TermKind::Iri) {
      auto it = class_parents.find(t.object.value);
      if (it != class_parents.end()) {
        for (const auto& parent : it->second) {
          Triple derived{t.subject, rdf_type, Term::iri(parent)};
          if (out.insert(derived).second) worklist.push_back(std::move(derived));
        }
      }
    }
    if (t.predicate.kind == TermKind::Iri) {
      auto it = property_parents.find(t.predicate.value);
      if (it != property_parents.end()) {
        for (const auto& parent : it->second) {
          Triple derived{t.subject, Term::iri(parent), t.object};
          if (out.insert(derived).second) worklist.push_back(std::move(derived));
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Store with materialized inference

class TripleStore {
 public:
  TripleStore() = default;
  explicit TripleStore(OntologySchema schema) { set_schema(std::move(schema)); }

  void set_schema(OntologySchema schema) {
    validate_schema(schema);
    schema_ = std::move(schema);
    rematerialize();
  }

  const OntologySchema& schema() const noexcept { return schema_; }

  void insert(Triple t) {
    check_ground(t);
    base_.insert(std::move(t));
    rematerialize();
  }

  void insert_batch(const std::vector<Triple>& triples) {
    for (const auto& t : triples) {
      check_ground(t);
      base_.insert(t);
    }
    rematerialize();
  }

  /// Single-valued property update: retracts every (s, p, *) then asserts
  /// the new statement. Used for status/state changes.
  void update_functional(const Term& subject, const Term& predicate, Term object) {
    for (auto it = base_.begin(); it != base_.end();) {
      if (it->subject == subject && it->predicate == predicate) {
        it = base_.erase(it);
      } else {
        ++it;
      }
    }
    Triple t{subject, predicate, std::move(object)};
    check_ground(t);
    base_.insert(std::move(t));
    rematerialize();
  }

  std::size_t size() const noexcept { return materialized_.size(); }
  std::size_t base_size() const noexcept { return base_.size(); }
  const std::set<Triple>& triples() const noexcept { return materialized_; }
  const std::set<Triple>& base_triples() const noexcept { return base_; }

  bool contains(const Triple& t) const noexcept {
    return materialized_.count(t) > 0;
  }

  /// All solution mappings of the conjunctive pattern over the materialized
  /// store. Duplicates removed; order unspecified.
  std::vector<Bindings> query_bgp(const std::vector<TriplePattern>& patterns) const {
    if (patterns.empty()) {
      throw SpsError(Errc::MalformedPattern, "empty basic graph pattern");
    }
    for (const auto& p : patterns) {
      if (p.subject.kind == TermKind::Literal ||
          p.predicate.kind == TermKind::Literal) {
        throw SpsError(Errc::MalformedPattern,
                       "literals cannot appear in subject/predicate position");
      }
      if (p.subject.is_variable() && p.subject.value.empty()) {
        throw SpsError(Errc::MalformedPattern, "unnamed variable");
      }
    }
    std::set<Bindings> solutions;
    std::vector<Bindings> frontier{Bindings{}};
    for (const auto& pattern : patterns) {
      std::vector<Bindings> next;
      for (const auto& binding : frontier) {
        match_pattern(pattern, binding, next);
      }
      frontier = std::move(next);
      if (frontier.empty()) break;
    }
    for (auto& b : frontier) solutions.insert(std::move(b));
    return {solutions.begin(), solutions.end()};
  }

  /// One `subject predicate object .` line per materialized triple, IRIs
  /// compacted against the built-in prefix table.
  std::string dump() const {
    std::string out;
    for (const auto& t : materialized_) {
      out += term_lexical(t.subject);
      out += ' ';
      out += term_lexical(t.predicate);
      out += ' ';
      out += term_lexical(t.object);
      out += " .\n";
    }
    return out;
  }

  static std::string term_lexical(const Term& t) {
    switch (t.kind) {
      case TermKind::Iri:
        return compact_iri(t.value);
      case TermKind::Variable:
        return "?" + t.value;
      case TermKind::Literal: {
        std::string out = "\"";
        for (const char c : t.value) {
          if (c == '"' || c == '\\') out += '\\';
          out += c;
        }
        out += '"';
        if (t.literal_type == LiteralType::Decimal) out += "^^xsd:decimal";
        if (t.literal_type == LiteralType::DateTime) out += "^^xsd:dateTime";
        return out;
      }
    }
    return "?";
  }

 private:
  static void check_ground(const Triple& t) {
    if (t.subject.is_variable() || t.predicate.is_variable() ||
        t.object.is_variable()) {
      throw SpsError(Errc::MalformedPattern,
                     "variables never appear in stored triples");
    }
  }

  void rematerialize() { materialized_ = rdfs_closure(base_, schema_); }

  /// Extends one binding against one pattern; walks a subject-keyed slice of
  /// the ordered set when the subject is ground, otherwise scans.
  void match_pattern(const TriplePattern& pattern, const Bindings& binding,
                     std::vector<Bindings>& out) const {
    const auto resolve = [&](const Term& t) -> Term {
      if (t.is_variable()) {
        auto it = binding.find(t.value);
        if (it != binding.end()) return it->second;
      }
      return t;
    };
    const Term s = resolve(pattern.subject);
    const Term p = resolve(pattern.predicate);
    const Term o = resolve(pattern.object);

    auto begin = materialized_.begin();
    auto end = materialized_.end();
    if (!s.is_variable()) {
      const Term floor{TermKind::Iri, "", LiteralType::String};
      begin = materialized_.lower_bound(Triple{s, floor, floor});
    }
    for (auto it = begin; it != end; ++it) {
      if (!s.is_variable()) {
        if (it->subject != s) break;  // left the subject slice
      }
      Bindings extended = binding;
      if (!try_bind(s, it->subject, extended)) continue;
      if (!try_bind(p, it->predicate, extended)) continue;
      if (!try_bind(o, it->object, extended)) continue;
      out.push_back(std::move(extended));
    }
  }

  static bool try_bind(const Term& pattern_term, const Term& data_term,
                       Bindings& binding) {
    if (!pattern_term.is_variable()) return pattern_term == data_term;
    auto it = binding.find(pattern_term.value);
    if (it != binding.end()) return it->second == data_term;
    binding.emplace(pattern_term.value, data_term);
    return true;
  }

  std::set<Triple> base_;
  std::set<Triple> materialized_;
  OntologySchema schema_;
};

// ---------------------------------------------------------------------------
// Text form of basic graph patterns (one "s p o ." pattern per line)

namespace detail {

inline std::vector<std::string> tokenize_pattern_line(std::string_view line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
      ++i;
      continue;
    }
    if (line[i] == '"') {
      std::string tok = "\"";
      ++i;
      bool closed = false;
      while (i < line.size()) {
        if (line[i] == '\\' && i + 1 < line.size()) {
          tok += line[i + 1];
          i += 2;
          continue;
        }
        if (line[i] == '"') {
          closed = true;
          ++i;
          break;
        }
        tok += line[i];
        ++i;
      }
      if (!closed) {
        throw SpsError(Errc::MalformedPattern, "unterminated literal");
      }
      tok += '"';
      // optional ^^datatype suffix, glued to the closing quote
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
        tok += line[i];
        ++i;
      }
      tokens.push_back(std::move(tok));
      continue;
    }
    std::string tok;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' &&
           line[i] != '\r') {
      tok += line[i];
      ++i;
    }
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

inline Term parse_term(const std::string& tok) {
  if (tok.empty()) throw SpsError(Errc::MalformedPattern, "empty term");
  if (tok[0] == '?') {
    if (tok.size() == 1) {
      throw SpsError(Errc::MalformedPattern, "unnamed variable");
    }
    return Term::variable(tok.substr(1));
  }
  if (tok[0] == '<') {
    if (tok.back() != '>' || tok.size() < 3) {
      throw SpsError(Errc::MalformedPattern, "malformed IRI " + tok);
    }
    return Term::iri(tok.substr(1, tok.size() - 2));
  }
  if (tok[0] == '"') {
    const std::size_t close = tok.rfind('"');
    if (close == 0) throw SpsError(Errc::MalformedPattern, "malformed literal");
    const std::string lexical = tok.substr(1, close - 1);
    const std::string suffix = tok.substr(close + 1);
    if (suffix.empty()) return Term::literal(lexical);
    if (suffix == "^^xsd:decimal") {
      return Term::literal(lexical, LiteralType::Decimal);
    }
    if (suffix == "^^xsd:dateTime") {
      return Term::literal(lexical, LiteralType::DateTime);
    }
    if (suffix == "^^xsd:string") return Term::literal(lexical);
    throw SpsError(Errc::MalformedPattern, "unknown literal datatype " + suffix);
  }
  for (const auto& [prefix, ns] : prefix_table()) {
    if (tok.rfind(prefix, 0) == 0) {
      return Term::iri(ns + tok.substr(prefix.size()));
    }
  }
  if (tok.find("://") != std::string::npos) return Term::iri(tok);
  throw SpsError(Errc::MalformedPattern,
                 "unrecognized term '" + tok + "' (use ?var, <iri>, prefix:name, or a quoted literal)");
}

}  // namespace detail

inline std::vector<TriplePattern> parse_bgp(std::string_view text) {
  std::vector<TriplePattern> patterns;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    auto tokens = detail::tokenize_pattern_line(line);
    if (tokens.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (!tokens.empty() && tokens.back() == ".") tokens.pop_back();
    if (tokens.size() != 3) {
      throw SpsError(Errc::MalformedPattern,
                     "pattern must have subject, predicate, and object");
    }
    TriplePattern p;
    p.subject = detail::parse_term(tokens[0]);
    p.predicate = detail::parse_term(tokens[1]);
    p.object = detail::parse_term(tokens[2]);
    patterns.push_back(std::move(p));
    if (end == text.size()) break;
  }
  if (patterns.empty()) {
    throw SpsError(Errc::MalformedPattern, "empty basic graph pattern");
  }
  return patterns;
}

// ---------------------------------------------------------------------------
// Translation of requests and tasks

namespace detail {

inline std::string id_suffix(std::string_view id) {
  const std::size_t us = id.rfind('_');
  return std::string(us == std::string_view::npos ? id : id.substr(us + 1));
}

/// Lexical image of a value for parameter-node literals; nested structures
/// are comma-joined in field order.
inline std::string value_lexical(const swe::Value& v) {
  using swe::FieldKind;
  switch (v.kind) {
    case FieldKind::Time: return v.time.lexical();
    case FieldKind::Quantity: return swe::format_decimal(v.number);
    case FieldKind::Count: return std::to_string(v.count);
    case FieldKind::Boolean: return v.flag ? "Y" : "N";
    case FieldKind::Text: return v.text;
    case FieldKind::Choice: {
      std::string out = v.branch;
      for (const auto& child : v.children) {
        out += ',';
        out += value_lexical(child.value);
      }
      return out;
    }
    case FieldKind::Vector: {
      std::string out;
      for (std::size_t i = 0; i < v.vector_values.size(); ++i) {
        if (i) out += ',';
        out += swe::format_decimal(v.vector_values[i]);
      }
      return out;
    }
  }
  return "";
}

}  // namespace detail

/// Request subjects are named after their operation: sps:getfes_1,
/// sps:submit_2, sps:reserve_3.
inline Term request_subject(const tasks::TaskingRequest& req) {
  const char* prefix = "submit_";
  switch (req.kind) {
    case tasks::RequestKind::Feasibility: prefix = "getfes_"; break;
    case tasks::RequestKind::Submit: prefix = "submit_"; break;
    case tasks::RequestKind::Reserve: prefix = "reserve_"; break;
  }
  return Term::iri(std::string(kSpsNs) + prefix + detail::id_suffix(req.request_id));
}

inline Term task_subject(const tasks::Task& task) {
  return Term::iri(std::string(kSpsNs) + task.task_id);
}

inline Term sps_term(std::string_view local) {
  return Term::iri(std::string(kSpsNs) + std::string(local));
}

inline Term rdf_type() { return Term::iri(std::string(kRdfNs) + "type"); }

/// Triples describing a tasking request: its operation class, procedure,
/// status, receipt time, and one node per present parameter field.
inline std::vector<Triple> translate_request(const tasks::TaskingRequest& req) {
  std::vector<Triple> out;
  const Term subject = request_subject(req);
  out.push_back({subject, rdf_type(), sps_term(to_string(req.kind))});
  out.push_back({subject, sps_term("procedure"), sps_term(req.procedure_id)});
  out.push_back({subject, sps_term("requestId"), Term::literal(req.request_id)});
  out.push_back({subject, sps_term("status"),
                 Term::literal(std::string(to_string(req.status)))});
  out.push_back({subject, sps_term("receivedAt"),
                 Term::literal(format_instant(req.received_at),
                               LiteralType::DateTime)});
  std::size_t block_index = 0;
  for (const auto& block : req.parameters.blocks) {
    for (const auto& nv : block) {
      const Term node = Term::iri(subject.value + "/b" +
                                  std::to_string(block_index) + "/" + nv.name);
      out.push_back({subject, sps_term("parameter"), node});
      out.push_back({node, sps_term("name"), Term::literal(nv.name)});
      out.push_back({node, sps_term("value"),
                     Term::literal(detail::value_lexical(nv.value))});
    }
    ++block_index;
  }
  return out;
}

/// Triples describing a task: type, status, asset, timestamps, the owning
/// request, and one hasResult triple per published reference.
inline std::vector<Triple> translate_task(
    const tasks::Task& task, const std::vector<assets::ResultReference>& refs) {
  std::vector<Triple> out;
  const Term subject = task_subject(task);
  out.push_back({subject, rdf_type(), sps_term("Task")});
  out.push_back({subject, sps_term("taskKind"),
                 Term::literal(std::string(to_string(task.kind)))});
  out.push_back({subject, sps_term("status"),
                 Term::literal(std::string(to_string(task.state)))});
  out.push_back({subject, sps_term("asset"), sps_term(task.asset_id)});
  out.push_back({subject, sps_term("request"), Term::literal(task.request_id)});
  out.push_back({subject, sps_term("createdAt"),
                 Term::literal(format_instant(task.created_at),
                               LiteralType::DateTime)});
  for (const auto& ref : refs) {
    out.push_back({subject, sps_term("hasResult"), Term::iri(ref.uri)});
  }
  return out;
}

}  // namespace spsweb::rdf

#endif  // SPSWEB_SEMANTIC_STORE_HPP
