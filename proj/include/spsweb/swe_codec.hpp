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

#ifndef SPSWEB_SWE_CODEC_HPP
#define SPSWEB_SWE_CODEC_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spsweb/errors.hpp"
#include "spsweb/time.hpp"
#include "spsweb/xml.hpp"

// Tasking-parameter descriptions plus the token/block text encoding of
// parameter values. Descriptions say what a procedure accepts; ParameterData
// carries the client-supplied values. Everything here is immutable after
// construction and safe to share across threads.

namespace spsweb::swe {

inline constexpr char kSpsNamespace[] = "http://www.opengis.net/sps/2.0";
inline constexpr char kSweNamespace[] = "http://www.opengis.net/swe/2.0";

enum class FieldKind { Time, Quantity, Count, Boolean, Text, Choice, Vector };

inline std::string_view to_string(FieldKind kind) noexcept {
  switch (kind) {
    case FieldKind::Time: return "Time";
    case FieldKind::Quantity: return "Quantity";
    case FieldKind::Count: return "Count";
    case FieldKind::Boolean: return "Boolean";
    case FieldKind::Text: return "Text";
    case FieldKind::Choice: return "Choice";
    case FieldKind::Vector: return "Vector";
  }
  return "?";
}

inline FieldKind field_kind_from(std::string_view name) {
  if (name == "Time") return FieldKind::Time;
  if (name == "Quantity") return FieldKind::Quantity;
  if (name == "Count") return FieldKind::Count;
  if (name == "Boolean") return FieldKind::Boolean;
  if (name == "Text") return FieldKind::Text;
  if (name == "Choice") return FieldKind::Choice;
  if (name == "Vector") return FieldKind::Vector;
  throw SpsError(Errc::SchemaError, "unknown field kind '" + std::string(name) + "'");
}

/// Closed numeric interval for Quantity/Count constraints.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct VectorComponent {
  std::string name;
  std::string uom;
  friend bool operator==(const VectorComponent&, const VectorComponent&) = default;
};

struct FieldDescriptor;

struct ChoiceBranch {
  std::string name;
  std::vector<FieldDescriptor> fields;
  friend bool operator==(const ChoiceBranch&, const ChoiceBranch&);
};

struct FieldDescriptor {
  std::string name;
  FieldKind kind = FieldKind::Text;
  bool optional = false;
  bool updatable = false;
  std::string uom;                                    // Quantity only
  std::optional<Interval> allowed_interval;           // Quantity/Count
  std::optional<std::set<std::string>> allowed_tokens;  // Text values / Choice selectors
  std::optional<std::string> default_value;           // lexical form, scalar kinds
  std::vector<ChoiceBranch> branches;                 // Choice
  std::vector<VectorComponent> components;            // Vector

  const ChoiceBranch* branch(std::string_view branch_name) const noexcept {
    for (const auto& b : branches) {
      if (b.name == branch_name) return &b;
    }
    return nullptr;
  }

  friend bool operator==(const FieldDescriptor&, const FieldDescriptor&);
};

inline bool operator==(const ChoiceBranch& a, const ChoiceBranch& b) {
  return a.name == b.name && a.fields == b.fields;
}

inline bool operator==(const FieldDescriptor& a, const FieldDescriptor& b) {
  return a.name == b.name && a.kind == b.kind && a.optional == b.optional &&
         a.updatable == b.updatable && a.uom == b.uom &&
         a.allowed_interval == b.allowed_interval &&
         a.allowed_tokens == b.allowed_tokens &&
         a.default_value == b.default_value && a.branches == b.branches &&
         a.components == b.components;
}

struct ParameterDescription {
  std::string procedure_id;
  std::vector<FieldDescriptor> fields;

  const FieldDescriptor* field(std::string_view name) const noexcept {
    for (const auto& f : fields) {
      if (f.name == name) return &f;
    }
    return nullptr;
  }

  std::set<std::string> updatable_field_names() const {
    std::set<std::string> out;
    for (const auto& f : fields) {
      if (f.updatable) out.insert(f.name);
    }
    return out;
  }

  friend bool operator==(const ParameterDescription&, const ParameterDescription&) = default;
};

struct TextEncodingSpec {
  std::string token_separator = ",";
  std::string block_separator = "@@";
  friend bool operator==(const TextEncodingSpec&, const TextEncodingSpec&) = default;
};

inline void validate_encoding(const TextEncodingSpec& enc) {
  if (enc.token_separator.empty() || enc.block_separator.empty()) {
    throw SpsError(Errc::SchemaError, "encoding separators must be nonempty");
  }
  if (enc.token_separator.find(enc.block_separator) != std::string::npos ||
      enc.block_separator.find(enc.token_separator) != std::string::npos) {
    throw SpsError(Errc::SchemaError, "encoding separators must not overlap");
  }
}

// ---------------------------------------------------------------------------
// Values

/// A point in time kept as (UTC seconds, original offset, verbatim fractional
/// digits) so re-encoding reproduces the client's lexical form exactly.
struct TimeValue {
  std::int64_t utc_seconds = 0;
  int offset_minutes = 0;
  std::string fraction;  // digits after the decimal point, possibly empty

  Instant to_instant() const noexcept {
    Instant ms = utc_seconds * kMillisPerSecond;
    for (std::size_t i = 0; i < 3; ++i) {
      ms += (i < fraction.size() ? fraction[i] - '0' : 0) *
            (i == 0 ? 100 : i == 1 ? 10 : 1);
    }
    return ms;
  }

  std::string lexical() const {
    const timeutil::CivilTime ct =
        timeutil::civil_from_epoch_seconds(utc_seconds + offset_minutes * 60);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", ct.year,
                  ct.month, ct.day, ct.hour, ct.minute, ct.second);
    std::string out = buf;
    if (!fraction.empty()) {
      out += '.';
      out += fraction;
    }
    const int om = offset_minutes < 0 ? -offset_minutes : offset_minutes;
    std::snprintf(buf, sizeof buf, "%c%02d:%02d",
                  offset_minutes < 0 ? '-' : '+', om / 60, om % 60);
    out += buf;
    return out;
  }

  friend bool operator==(const TimeValue&, const TimeValue&) = default;
};

struct NamedValue;

/// Tagged union over the seven field kinds. Choice values carry their branch
/// selector plus the branch's own named values.
struct Value {
  FieldKind kind = FieldKind::Text;
  TimeValue time{};
  double number = 0.0;
  std::int64_t count = 0;
  bool flag = false;
  std::string text;
  std::string branch;
  std::vector<NamedValue> children;     // Choice branch fields
  std::vector<double> vector_values;    // Vector components

  static Value of_time(TimeValue t);
  static Value quantity(double v);
  static Value of_count(std::int64_t v);
  static Value boolean(bool v);
  static Value of_text(std::string v);
  static Value choice(std::string branch_name, std::vector<NamedValue> fields);
  static Value vector(std::vector<double> values);

  friend bool operator==(const Value& a, const Value& b);
};

struct NamedValue {
  std::string name;
  Value value;
  friend bool operator==(const NamedValue&, const NamedValue&);
};

inline Value Value::of_time(TimeValue t) {
  Value v;
  v.kind = FieldKind::Time;
  v.time = std::move(t);
  return v;
}
inline Value Value::quantity(double d) {
  Value v;
  v.kind = FieldKind::Quantity;
  v.number = d;
  return v;
}
inline Value Value::of_count(std::int64_t c) {
  Value v;
  v.kind = FieldKind::Count;
  v.count = c;
  return v;
}
inline Value Value::boolean(bool b) {
  Value v;
  v.kind = FieldKind::Boolean;
  v.flag = b;
  return v;
}
inline Value Value::of_text(std::string s) {
  Value v;
  v.kind = FieldKind::Text;
  v.text = std::move(s);
  return v;
}
inline Value Value::choice(std::string branch_name,
                           std::vector<NamedValue> fields) {
  Value v;
  v.kind = FieldKind::Choice;
  v.branch = std::move(branch_name);
  v.children = std::move(fields);
  return v;
}
inline Value Value::vector(std::vector<double> values) {
  Value v;
  v.kind = FieldKind::Vector;
  v.vector_values = std::move(values);
  return v;
}

inline bool operator==(const Value& a, const Value& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case FieldKind::Time: return a.time == b.time;
    case FieldKind::Quantity: return a.number == b.number;
    case FieldKind::Count: return a.count == b.count;
    case FieldKind::Boolean: return a.flag == b.flag;
    case FieldKind::Text: return a.text == b.text;
    case FieldKind::Choice: return a.branch == b.branch && a.children == b.children;
    case FieldKind::Vector: return a.vector_values == b.vector_values;
  }
  return false;
}

inline bool operator==(const NamedValue& a, const NamedValue& b) {
  return a.name == b.name && a.value == b.value;
}

/// One block of values; entries follow the description's field order and
/// omit absent optionals.
using ParameterBlock = std::vector<NamedValue>;

inline const Value* find_value(const ParameterBlock& block,
                               std::string_view name) noexcept {
  for (const auto& nv : block) {
    if (nv.name == name) return &nv.value;
  }
  return nullptr;
}

struct ParameterData {
  TextEncodingSpec encoding;
  std::vector<ParameterBlock> blocks;
  friend bool operator==(const ParameterData&, const ParameterData&) = default;
};

// ---------------------------------------------------------------------------
// Lexical forms

/// Shortest decimal rendering that round-trips the stored double.
inline std::string format_decimal(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline bool is_decimal_lexeme(std::string_view tok) noexcept {
  std::size_t i = 0;
  if (i < tok.size() && tok[i] == '-') ++i;
  std::size_t int_digits = 0;
  while (i < tok.size() && tok[i] >= '0' && tok[i] <= '9') {
    ++i;
    ++int_digits;
  }
  std::size_t frac_digits = 0;
  if (i < tok.size() && tok[i] == '.') {
    ++i;
    while (i < tok.size() && tok[i] >= '0' && tok[i] <= '9') {
      ++i;
      ++frac_digits;
    }
  }
  if (int_digits + frac_digits == 0) return false;
  if (i < tok.size() && (tok[i] == 'e' || tok[i] == 'E')) {
    ++i;
    if (i < tok.size() && (tok[i] == '+' || tok[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < tok.size() && tok[i] >= '0' && tok[i] <= '9') {
      ++i;
      ++exp_digits;
    }
    if (exp_digits == 0) return false;
  }
  return i == tok.size();
}

}  // namespace detail

inline double parse_decimal(std::string_view tok, const std::string& where) {
  if (!detail::is_decimal_lexeme(tok)) {
    throw SpsError(Errc::LexicalError, "not a decimal: '" + std::string(tok) + "'",
                   where);
  }
  double v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() ||
      !std::isfinite(v)) {
    throw SpsError(Errc::LexicalError, "not a decimal: '" + std::string(tok) + "'",
                   where);
  }
  return v;
}

inline std::int64_t parse_count(std::string_view tok, const std::string& where) {
  std::int64_t v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw SpsError(Errc::LexicalError, "not an integer: '" + std::string(tok) + "'",
                   where);
  }
  return v;
}

/// Strict ISO-8601 date-time; the UTC offset must be numeric ("Z" is not a
/// valid tasking-parameter lexical form).
inline TimeValue parse_time_token(std::string_view tok, const std::string& where) {
  using namespace timeutil;
  const auto bad = [&]() -> SpsError {
    return SpsError(Errc::LexicalError,
                    "not a timestamp with numeric offset: '" + std::string(tok) + "'",
                    where);
  };
  int y, mo, d, h, mi, sec;
  if (tok.size() < 25) throw bad();
  if (!parse_fixed_digits(tok, 0, 4, y) || tok[4] != '-' ||
      !parse_fixed_digits(tok, 5, 2, mo) || tok[7] != '-' ||
      !parse_fixed_digits(tok, 8, 2, d) || tok[10] != 'T' ||
      !parse_fixed_digits(tok, 11, 2, h) || tok[13] != ':' ||
      !parse_fixed_digits(tok, 14, 2, mi) || tok[16] != ':' ||
      !parse_fixed_digits(tok, 17, 2, sec)) {
    throw bad();
  }
  if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, mo) || h > 23 ||
      mi > 59 || sec > 59) {
    throw bad();
  }
  std::size_t pos = 19;
  std::string fraction;
  if (pos < tok.size() && tok[pos] == '.') {
    ++pos;
    while (pos < tok.size() && tok[pos] >= '0' && tok[pos] <= '9') {
      fraction += tok[pos];
      ++pos;
    }
    if (fraction.empty()) throw bad();
  }
  if (pos + 6 != tok.size() || (tok[pos] != '+' && tok[pos] != '-')) throw bad();
  const int sign = tok[pos] == '-' ? -1 : 1;
  int oh, om;
  if (!parse_fixed_digits(tok, pos + 1, 2, oh) || tok[pos + 3] != ':' ||
      !parse_fixed_digits(tok, pos + 4, 2, om) || oh > 18 || om > 59) {
    throw bad();
  }
  TimeValue tv;
  tv.offset_minutes = sign * (oh * 60 + om);
  tv.utc_seconds =
      civil_to_epoch_seconds(y, mo, d, h, mi, sec) - tv.offset_minutes * 60;
  tv.fraction = std::move(fraction);
  return tv;
}

// ---------------------------------------------------------------------------
// Description validation

namespace detail {

inline bool name_usable(std::string_view name, const TextEncodingSpec& enc) {
  return !name.empty() &&
         name.find(enc.token_separator) == std::string_view::npos &&
         name.find(enc.block_separator) == std::string_view::npos;
}

inline void validate_fields(const std::vector<FieldDescriptor>& fields,
                            const std::string& path, int depth);

inline void validate_field(const FieldDescriptor& f, const std::string& path,
                           int depth) {
  const std::string where = path + f.name;
  if (depth > 16) {
    throw SpsError(Errc::SchemaError, "description nesting too deep", where);
  }
  if (!name_usable(f.name, TextEncodingSpec{})) {
    throw SpsError(Errc::SchemaError,
                   "field name empty or contains separator characters", path);
  }
  const bool scalar = f.kind != FieldKind::Choice && f.kind != FieldKind::Vector;
  if (!f.uom.empty() && f.kind != FieldKind::Quantity) {
    throw SpsError(Errc::SchemaError, "uom only applies to Quantity fields", where);
  }
  if (f.allowed_interval &&
      (f.kind != FieldKind::Quantity && f.kind != FieldKind::Count)) {
    throw SpsError(Errc::SchemaError,
                   "interval constraints only apply to Quantity/Count", where);
  }
  if (f.allowed_interval && !(f.allowed_interval->lo <= f.allowed_interval->hi)) {
    throw SpsError(Errc::SchemaError, "empty allowed interval", where);
  }
  if (f.allowed_tokens &&
      (f.kind != FieldKind::Text && f.kind != FieldKind::Choice)) {
    throw SpsError(Errc::SchemaError,
                   "token constraints only apply to Text/Choice", where);
  }
  if (f.allowed_tokens && f.allowed_tokens->empty()) {
    throw SpsError(Errc::SchemaError, "empty allowed token set", where);
  }
  if (!f.branches.empty() && f.kind != FieldKind::Choice) {
    throw SpsError(Errc::SchemaError, "branches only apply to Choice", where);
  }
  if (!f.components.empty() && f.kind != FieldKind::Vector) {
    throw SpsError(Errc::SchemaError, "components only apply to Vector", where);
  }
  if (f.kind == FieldKind::Choice) {
    if (f.branches.empty()) {
      throw SpsError(Errc::SchemaError, "Choice requires at least one branch", where);
    }
    std::set<std::string_view> names;
    for (const auto& b : f.branches) {
      if (!name_usable(b.name, TextEncodingSpec{})) {
        throw SpsError(Errc::SchemaError, "bad branch name", where);
      }
      if (!names.insert(b.name).second) {
        throw SpsError(Errc::SchemaError, "duplicate branch '" + b.name + "'", where);
      }
      validate_fields(b.fields, where + "/" + b.name + "/", depth + 1);
    }
    if (f.allowed_tokens) {
      for (const auto& t : *f.allowed_tokens) {
        if (!f.branch(t)) {
          throw SpsError(Errc::SchemaError,
                         "allowed selector '" + t + "' names no branch", where);
        }
      }
    }
  }
  if (f.kind == FieldKind::Vector) {
    if (f.components.empty()) {
      throw SpsError(Errc::SchemaError, "Vector requires at least one component",
                     where);
    }
    for (const auto& c : f.components) {
      if (c.name.empty()) {
        throw SpsError(Errc::SchemaError, "unnamed vector component", where);
      }
    }
  }
  if (f.default_value) {
    if (!scalar) {
      throw SpsError(Errc::SchemaError,
                     "defaults are only supported on scalar fields", where);
    }
    switch (f.kind) {
      case FieldKind::Time:
        parse_time_token(*f.default_value, where);
        break;
      case FieldKind::Quantity: {
        const double v = parse_decimal(*f.default_value, where);
        if (f.allowed_interval && !f.allowed_interval->contains(v)) {
          throw SpsError(Errc::SchemaError, "default outside allowed interval",
                         where);
        }
        break;
      }
      case FieldKind::Count: {
        const auto v = parse_count(*f.default_value, where);
        if (f.allowed_interval &&
            !f.allowed_interval->contains(static_cast<double>(v))) {
          throw SpsError(Errc::SchemaError, "default outside allowed interval",
                         where);
        }
        break;
      }
      case FieldKind::Boolean:
        if (*f.default_value != "Y" && *f.default_value != "N") {
          throw SpsError(Errc::SchemaError, "boolean default must be Y or N", where);
        }
        break;
      case FieldKind::Text:
        if (f.allowed_tokens && !f.allowed_tokens->count(*f.default_value)) {
          throw SpsError(Errc::SchemaError, "default outside allowed tokens", where);
        }
        break;
      default:
        break;
    }
  }
}

inline void validate_fields(const std::vector<FieldDescriptor>& fields,
                            const std::string& path, int depth) {
  std::set<std::string_view> names;
  for (const auto& f : fields) {
    if (!names.insert(f.name).second) {
      throw SpsError(Errc::SchemaError, "duplicate field '" + f.name + "'", path);
    }
    validate_field(f, path, depth);
  }
}

}  // namespace detail

inline void validate_description(const ParameterDescription& desc) {
  if (desc.procedure_id.empty()) {
    throw SpsError(Errc::SchemaError, "description has no procedure id");
  }
  detail::validate_fields(desc.fields, "", 0);
}

// ---------------------------------------------------------------------------
// Value validation (violations are data, not errors)

struct Violation {
  enum class Code { MissingMandatory, UnknownField, WrongKind, ConstraintViolation };
  Code code;
  std::string field_path;
  std::string message;
};

inline std::string_view to_string(Violation::Code c) noexcept {
  switch (c) {
    case Violation::Code::MissingMandatory: return "MissingMandatory";
    case Violation::Code::UnknownField: return "UnknownField";
    case Violation::Code::WrongKind: return "WrongKind";
    case Violation::Code::ConstraintViolation: return "ConstraintViolation";
  }
  return "?";
}

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }

  std::string summary() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += std::string(to_string(v.code)) + " at " + v.field_path + ": " + v.message;
    }
    return out;
  }
};

namespace detail {

inline void validate_block_against(const std::vector<FieldDescriptor>& fields,
                                   const ParameterBlock& block,
                                   const std::string& path,
                                   ValidationReport& report) {
  const auto add = [&](Violation::Code c, const std::string& field,
                       std::string msg) {
    report.violations.push_back({c, path + field, std::move(msg)});
  };
  std::set<std::string_view> seen;
  for (const auto& entry : block) {
    if (!seen.insert(entry.name).second) {
      add(Violation::Code::UnknownField, entry.name, "duplicate field");
      continue;
    }
    bool known = false;
    for (const auto& f : fields) known = known || f.name == entry.name;
    if (!known) add(Violation::Code::UnknownField, entry.name, "no such field");
  }
  for (const auto& f : fields) {
    const Value* v = find_value(block, f.name);
    if (!v) {
      if (!f.optional) {
        add(Violation::Code::MissingMandatory, f.name, "mandatory field absent");
      }
      continue;
    }
    if (v->kind != f.kind) {
      add(Violation::Code::WrongKind, f.name,
          "expected " + std::string(to_string(f.kind)) + ", got " +
              std::string(to_string(v->kind)));
      continue;
    }
    switch (f.kind) {
      case FieldKind::Quantity:
        if (!std::isfinite(v->number)) {
          add(Violation::Code::ConstraintViolation, f.name, "not finite");
        } else if (f.allowed_interval && !f.allowed_interval->contains(v->number)) {
          add(Violation::Code::ConstraintViolation, f.name,
              format_decimal(v->number) + " outside [" +
                  format_decimal(f.allowed_interval->lo) + "," +
                  format_decimal(f.allowed_interval->hi) + "]");
        }
        break;
      case FieldKind::Count:
        if (f.allowed_interval &&
            !f.allowed_interval->contains(static_cast<double>(v->count))) {
          add(Violation::Code::ConstraintViolation, f.name,
              std::to_string(v->count) + " outside allowed interval");
        }
        break;
      case FieldKind::Text:
        if (f.allowed_tokens && !f.allowed_tokens->count(v->text)) {
          add(Violation::Code::ConstraintViolation, f.name,
              "'" + v->text + "' not in allowed token set");
        }
        break;
      case FieldKind::Choice: {
        const ChoiceBranch* br = f.branch(v->branch);
        if (!br) {
          add(Violation::Code::ConstraintViolation, f.name,
              "selector '" + v->branch + "' names no branch");
          break;
        }
        if (f.allowed_tokens && !f.allowed_tokens->count(v->branch)) {
          add(Violation::Code::ConstraintViolation, f.name,
              "selector '" + v->branch + "' not allowed");
          break;
        }
        validate_block_against(br->fields, v->children,
                               path + f.name + "/" + br->name + "/", report);
        break;
      }
      case FieldKind::Vector:
        if (v->vector_values.size() != f.components.size()) {
          add(Violation::Code::ConstraintViolation, f.name,
              "expected " + std::to_string(f.components.size()) +
                  " components, got " + std::to_string(v->vector_values.size()));
        } else {
          for (const double d : v->vector_values) {
            if (!std::isfinite(d)) {
              add(Violation::Code::ConstraintViolation, f.name,
                  "component not finite");
              break;
            }
          }
        }
        break;
      default:
        break;
    }
  }
}

}  // namespace detail

/// Checks one block against a description. Absent optionals with a declared
/// default are left absent; defaults are advisory metadata only.
inline ValidationReport validate_values(const ParameterDescription& desc,
                                        const ParameterBlock& block) {
  ValidationReport report;
  detail::validate_block_against(desc.fields, block, "", report);
  return report;
}

// ---------------------------------------------------------------------------
// Text decoding

namespace detail {

inline std::vector<std::string_view> split(std::string_view s,
                                           std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t hit = s.find(sep, pos);
    if (hit == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, hit - pos));
    pos = hit + sep.size();
  }
}

class TokenCursor {
 public:
  TokenCursor(const std::vector<std::string_view>& tokens, std::string block_tag)
      : tokens_(tokens), block_tag_(std::move(block_tag)) {}

  std::string_view take(const std::string& context) {
    if (next_ >= tokens_.size()) {
      throw SpsError(Errc::TokenCountMismatch,
                     "ran out of tokens while reading " + context, block_tag_);
    }
    return tokens_[next_++];
  }

  std::size_t consumed() const noexcept { return next_; }
  std::size_t total() const noexcept { return tokens_.size(); }
  const std::string& block_tag() const noexcept { return block_tag_; }

 private:
  const std::vector<std::string_view>& tokens_;
  std::string block_tag_;
  std::size_t next_ = 0;
};

inline ParameterBlock decode_fields(const std::vector<FieldDescriptor>& fields,
                                    TokenCursor& cur, const std::string& path);

inline Value decode_field_value(const FieldDescriptor& f, TokenCursor& cur,
                                const std::string& path) {
  const std::string where = path + f.name;
  switch (f.kind) {
    case FieldKind::Time:
      return Value::of_time(parse_time_token(cur.take(where), where));
    case FieldKind::Quantity: {
      const double v = parse_decimal(cur.take(where), where);
      if (f.allowed_interval && !f.allowed_interval->contains(v)) {
        throw SpsError(Errc::ConstraintViolation,
                       format_decimal(v) + " outside allowed interval", where);
      }
      return Value::quantity(v);
    }
    case FieldKind::Count: {
      const std::int64_t v = parse_count(cur.take(where), where);
      if (f.allowed_interval &&
          !f.allowed_interval->contains(static_cast<double>(v))) {
        throw SpsError(Errc::ConstraintViolation,
                       std::to_string(v) + " outside allowed interval", where);
      }
      return Value::of_count(v);
    }
    case FieldKind::Boolean: {
      const std::string_view tok = cur.take(where);
      if (tok == "Y") return Value::boolean(true);
      if (tok == "N") return Value::boolean(false);
      throw SpsError(Errc::LexicalError,
                     "boolean must be Y or N, got '" + std::string(tok) + "'", where);
    }
    case FieldKind::Text: {
      const std::string_view tok = cur.take(where);
      if (f.allowed_tokens && !f.allowed_tokens->count(std::string(tok))) {
        throw SpsError(Errc::ConstraintViolation,
                       "'" + std::string(tok) + "' not in allowed token set", where);
      }
      return Value::of_text(std::string(tok));
    }
    case FieldKind::Choice: {
      const std::string_view selector = cur.take(where + " selector");
      const ChoiceBranch* br = f.branch(selector);
      if (!br) {
        throw SpsError(Errc::UnknownSelector,
                       "'" + std::string(selector) + "' names no branch of " + f.name,
                       where);
      }
      if (f.allowed_tokens && !f.allowed_tokens->count(std::string(selector))) {
        throw SpsError(Errc::ConstraintViolation,
                       "selector '" + std::string(selector) + "' not allowed", where);
      }
      return Value::choice(br->name,
                           decode_fields(br->fields, cur, where + "/" + br->name + "/"));
    }
    case FieldKind::Vector: {
      std::vector<double> components;
      components.reserve(f.components.size());
      for (const auto& c : f.components) {
        components.push_back(parse_decimal(cur.take(where + "." + c.name),
                                           where + "." + c.name));
      }
      return Value::vector(std::move(components));
    }
  }
  throw SpsError(Errc::SchemaError, "unhandled field kind", where);
}

inline ParameterBlock decode_fields(const std::vector<FieldDescriptor>& fields,
                                    TokenCursor& cur, const std::string& path) {
  ParameterBlock block;
  for (const auto& f : fields) {
    if (f.optional) {
      const std::string_view flag = cur.take(path + f.name + " presence flag");
      if (flag == "N") continue;
      if (flag != "Y") {
        throw SpsError(Errc::LexicalError,
                       "presence flag must be Y or N, got '" + std::string(flag) + "'",
                       path + f.name);
      }
    }
    block.push_back({f.name, decode_field_value(f, cur, path)});
  }
  return block;
}

}  // namespace detail

/// Splits on the block separator, then on the token separator, and consumes
/// tokens in field order. Every token must be consumed exactly once.
inline ParameterData decode_parameter_data(const ParameterDescription& desc,
                                           const TextEncodingSpec& enc,
                                           std::string_view text) {
  validate_encoding(enc);
  if (text.empty()) {
    throw SpsError(Errc::TokenCountMismatch, "empty value string");
  }
  ParameterData data;
  data.encoding = enc;
  const auto raw_blocks = detail::split(text, enc.block_separator);
  std::size_t index = 0;
  for (const std::string_view raw : raw_blocks) {
    const std::string tag = "block:" + std::to_string(index);
    const auto tokens = detail::split(raw, enc.token_separator);
    detail::TokenCursor cur(tokens, tag);
    data.blocks.push_back(detail::decode_fields(desc.fields, cur, ""));
    if (cur.consumed() != cur.total()) {
      throw SpsError(Errc::TokenCountMismatch,
                     std::to_string(cur.total() - cur.consumed()) +
                         " token(s) left over",
                     tag);
    }
    ++index;
  }
  return data;
}

// ---------------------------------------------------------------------------
// Text encoding

namespace detail {

inline void require_token_clean(std::string_view tok, const TextEncodingSpec& enc,
                                const std::string& where) {
  if (tok.find(enc.token_separator) != std::string_view::npos ||
      tok.find(enc.block_separator) != std::string_view::npos) {
    throw SpsError(Errc::ValidationFailure,
                   "token '" + std::string(tok) + "' contains a separator", where);
  }
}

inline void encode_fields(const std::vector<FieldDescriptor>& fields,
                          const ParameterBlock& block,
                          const TextEncodingSpec& enc, const std::string& path,
                          std::vector<std::string>& out);

inline void encode_value(const FieldDescriptor& f, const Value& v,
                         const TextEncodingSpec& enc, const std::string& path,
                         std::vector<std::string>& out) {
  const std::string where = path + f.name;
  switch (f.kind) {
    case FieldKind::Time:
      out.push_back(v.time.lexical());
      break;
    case FieldKind::Quantity:
      out.push_back(format_decimal(v.number));
      break;
    case FieldKind::Count:
      out.push_back(std::to_string(v.count));
      break;
    case FieldKind::Boolean:
      out.push_back(v.flag ? "Y" : "N");
      break;
    case FieldKind::Text:
      require_token_clean(v.text, enc, where);
      out.push_back(v.text);
      break;
    case FieldKind::Choice: {
      require_token_clean(v.branch, enc, where);
      const ChoiceBranch* br = f.branch(v.branch);
      if (!br) {
        throw SpsError(Errc::ValidationFailure,
                       "selector '" + v.branch + "' names no branch", where);
      }
      out.push_back(v.branch);
      encode_fields(br->fields, v.children, enc, where + "/" + br->name + "/", out);
      break;
    }
    case FieldKind::Vector:
      for (const double d : v.vector_values) out.push_back(format_decimal(d));
      break;
  }
}

inline void encode_fields(const std::vector<FieldDescriptor>& fields,
                          const ParameterBlock& block,
                          const TextEncodingSpec& enc, const std::string& path,
                          std::vector<std::string>& out) {
  for (const auto& f : fields) {
    const Value* v = find_value(block, f.name);
    if (f.optional) {
      out.push_back(v ? "Y" : "N");
      if (!v) continue;
    } else if (!v) {
      throw SpsError(Errc::ValidationFailure, "mandatory field absent",
                     path + f.name);
    }
    encode_value(f, *v, enc, path, out);
  }
}

inline std::string join(const std::vector<std::string>& parts,
                        std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace detail

/// Token stream for a single field value (selector and presence tokens for
/// nested structures included), as it would appear on the wire.
inline std::vector<std::string> encode_field_tokens(const FieldDescriptor& field,
                                                    const Value& value,
                                                    const TextEncodingSpec& enc) {
  std::vector<std::string> out;
  detail::encode_value(field, value, enc, "", out);
  return out;
}

/// Exact inverse of decode_parameter_data for conforming data.
inline std::string encode_parameter_data(const ParameterDescription& desc,
                                         const ParameterData& data) {
  validate_encoding(data.encoding);
  if (data.blocks.empty()) {
    throw SpsError(Errc::ValidationFailure, "parameter data has no blocks");
  }
  std::vector<std::string> blocks;
  std::size_t index = 0;
  for (const auto& block : data.blocks) {
    const ValidationReport report = validate_values(desc, block);
    if (!report.ok()) {
      throw SpsError(Errc::ValidationFailure, report.summary(),
                     "block:" + std::to_string(index));
    }
    std::vector<std::string> tokens;
    detail::encode_fields(desc.fields, block, data.encoding, "", tokens);
    for (const auto& t : tokens) {
      detail::require_token_clean(t, data.encoding, "block:" + std::to_string(index));
    }
    blocks.push_back(detail::join(tokens, data.encoding.token_separator));
    ++index;
  }
  return detail::join(blocks, data.encoding.block_separator);
}

// ---------------------------------------------------------------------------
// XML forms

namespace detail {

inline xml::Element field_to_xml(const FieldDescriptor& f) {
  xml::Element el("sps:field");
  el.set_attr("name", f.name);
  el.set_attr("kind", std::string(to_string(f.kind)));
  if (f.optional) el.set_attr("optional", "true");
  if (f.updatable) el.set_attr("updatable", "true");
  if (!f.uom.empty()) el.set_attr("uom", f.uom);
  if (f.allowed_interval) {
    xml::Element iv("sps:allowedInterval");
    iv.set_attr("min", format_decimal(f.allowed_interval->lo));
    iv.set_attr("max", format_decimal(f.allowed_interval->hi));
    el.add_child(std::move(iv));
  }
  if (f.allowed_tokens) {
    xml::Element at("sps:allowedTokens");
    for (const auto& t : *f.allowed_tokens) {
      at.add_child(xml::Element("sps:token").set_text(t));
    }
    el.add_child(std::move(at));
  }
  if (f.default_value) {
    el.add_child(xml::Element("sps:default").set_text(*f.default_value));
  }
  for (const auto& b : f.branches) {
    xml::Element br("sps:branch");
    br.set_attr("name", b.name);
    for (const auto& bf : b.fields) br.add_child(field_to_xml(bf));
    el.add_child(std::move(br));
  }
  for (const auto& c : f.components) {
    xml::Element comp("sps:component");
    comp.set_attr("name", c.name);
    if (!c.uom.empty()) comp.set_attr("uom", c.uom);
    el.add_child(std::move(comp));
  }
  return el;
}

inline FieldDescriptor field_from_xml(const xml::Element& el) {
  FieldDescriptor f;
  f.name = el.required_attr("name");
  f.kind = field_kind_from(el.required_attr("kind"));
  f.optional = el.attr_or("optional", "false") == "true";
  f.updatable = el.attr_or("updatable", "false") == "true";
  f.uom = el.attr_or("uom", "");
  for (const auto& c : el.children) {
    if (c.name == "sps:allowedInterval") {
      Interval iv;
      iv.lo = parse_decimal(c.required_attr("min"), f.name);
      iv.hi = parse_decimal(c.required_attr("max"), f.name);
      f.allowed_interval = iv;
    } else if (c.name == "sps:allowedTokens") {
      std::set<std::string> tokens;
      for (const auto& t : c.children) {
        if (t.name == "sps:token") tokens.insert(t.text);
      }
      f.allowed_tokens = std::move(tokens);
    } else if (c.name == "sps:default") {
      f.default_value = c.text;
    } else if (c.name == "sps:branch") {
      ChoiceBranch b;
      b.name = c.required_attr("name");
      for (const auto& bf : c.children) {
        if (bf.name == "sps:field") b.fields.push_back(field_from_xml(bf));
      }
      f.branches.push_back(std::move(b));
    } else if (c.name == "sps:component") {
      f.components.push_back({c.required_attr("name"), c.attr_or("uom", "")});
    } else {
      throw SpsError(Errc::SchemaError, "unexpected element <" + c.name + ">",
                     f.name);
    }
  }
  return f;
}

}  // namespace detail

inline xml::Element description_to_xml(const ParameterDescription& desc) {
  xml::Element el("sps:ParameterDescription");
  el.set_attr("xmlns:sps", kSpsNamespace);
  el.set_attr("procedure", desc.procedure_id);
  for (const auto& f : desc.fields) el.add_child(detail::field_to_xml(f));
  return el;
}

/// Lossless inverse of description_to_xml; rejects descriptions violating
/// the schema invariants with an element-path locator.
inline ParameterDescription parse_tasking_description(const xml::Element& root) {
  if (root.name != "sps:ParameterDescription") {
    throw SpsError(Errc::SchemaError,
                   "expected <sps:ParameterDescription>, got <" + root.name + ">");
  }
  ParameterDescription desc;
  desc.procedure_id = root.required_attr("procedure");
  for (const auto& c : root.children) {
    if (c.name != "sps:field") {
      throw SpsError(Errc::SchemaError, "unexpected element <" + c.name + ">",
                     root.name);
    }
    desc.fields.push_back(detail::field_from_xml(c));
  }
  validate_description(desc);
  return desc;
}

inline ParameterDescription parse_tasking_description(std::string_view doc) {
  return parse_tasking_description(xml::parse(doc));
}

inline xml::Element parameter_data_to_xml(const ParameterDescription& desc,
                                          const ParameterData& data) {
  xml::Element el("sps:ParameterData");
  xml::Element enc("sps:encoding");
  xml::Element text_enc("swe:TextEncoding");
  text_enc.set_attr("tokenSeparator", data.encoding.token_separator);
  text_enc.set_attr("blockSeparator", data.encoding.block_separator);
  enc.add_child(std::move(text_enc));
  el.add_child(std::move(enc));
  el.add_child(xml::Element("sps:values").set_text(encode_parameter_data(desc, data)));
  return el;
}

inline ParameterData parameter_data_from_xml(const ParameterDescription& desc,
                                             const xml::Element& el) {
  if (el.name != "sps:ParameterData") {
    throw SpsError(Errc::SchemaError,
                   "expected <sps:ParameterData>, got <" + el.name + ">");
  }
  TextEncodingSpec enc;
  if (const xml::Element* enc_el = el.child("sps:encoding")) {
    if (const xml::Element* text_enc = enc_el->child("swe:TextEncoding")) {
      enc.token_separator = text_enc->attr_or("tokenSeparator", ",");
      enc.block_separator = text_enc->attr_or("blockSeparator", "@@");
    }
  }
  const xml::Element& values = el.required_child("sps:values");
  return decode_parameter_data(desc, enc, values.text);
}

}  // namespace spsweb::swe

#endif  // SPSWEB_SWE_CODEC_HPP
