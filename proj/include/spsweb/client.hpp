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

#ifndef SPSWEB_CLIENT_HPP
#define SPSWEB_CLIENT_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>

#include "spsweb/errors.hpp"
#include "spsweb/swe_codec.hpp"
#include "spsweb/xml.hpp"

// Client-side building blocks: operation documents, the name=value parameter
// mini-syntax, and an HTTP wrapper that classifies responses. The command
// line tool is a thin shell over these.

namespace spsweb::cli {

// ---------------------------------------------------------------------------
// Parameter assignments: name=value, with "branch:v1,v2,..." for choices and
// "v1,v2,..." for vectors. Values are the wire token forms.

struct Assignment {
  std::string name;
  std::string value;
};

inline std::vector<Assignment> parse_assignments(
    const std::vector<std::string>& args) {
  std::vector<Assignment> out;
  for (const auto& arg : args) {
    const std::size_t eq = arg.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw SpsError(Errc::InvalidParameterValue,
                     "expected name=value, got '" + arg + "'");
    }
    out.push_back({arg.substr(0, eq), arg.substr(eq + 1)});
  }
  return out;
}

inline const Assignment* find_assignment(const std::vector<Assignment>& list,
                                         std::string_view name) {
  for (const auto& a : list) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

namespace detail {

inline void append_assignment_tokens(const swe::FieldDescriptor& field,
                                     const std::string& value,
                                     std::vector<std::string>& out) {
  switch (field.kind) {
    case swe::FieldKind::Choice: {
      const std::size_t colon = value.find(':');
      out.push_back(value.substr(0, colon));
      if (colon != std::string::npos) {
        std::string rest = value.substr(colon + 1);
        std::size_t pos = 0;
        while (pos <= rest.size()) {
          const std::size_t comma = rest.find(',', pos);
          if (comma == std::string::npos) {
            out.push_back(rest.substr(pos));
            break;
          }
          out.push_back(rest.substr(pos, comma - pos));
          pos = comma + 1;
        }
      }
      break;
    }
    case swe::FieldKind::Vector: {
      std::size_t pos = 0;
      while (pos <= value.size()) {
        const std::size_t comma = value.find(',', pos);
        if (comma == std::string::npos) {
          out.push_back(value.substr(pos));
          break;
        }
        out.push_back(value.substr(pos, comma - pos));
        pos = comma + 1;
      }
      break;
    }
    default:
      out.push_back(value);
      break;
  }
}

inline void append_synthesized_tokens(const swe::FieldDescriptor& field,
                                      int& time_fields_seen,
                                      std::vector<std::string>& out) {
  using swe::FieldKind;
  if (field.default_value) {
    out.push_back(*field.default_value);
    return;
  }
  switch (field.kind) {
    case FieldKind::Time:
      out.push_back(time_fields_seen++ == 0 ? "1970-01-01T00:00:00+00:00"
                                            : "1970-01-01T01:00:00+00:00");
      break;
    case FieldKind::Quantity:
      out.push_back(field.allowed_interval
                        ? swe::format_decimal(field.allowed_interval->lo)
                        : "0");
      break;
    case FieldKind::Count:
      out.push_back(field.allowed_interval
                        ? std::to_string(static_cast<long long>(
                              field.allowed_interval->lo))
                        : "0");
      break;
    case FieldKind::Boolean:
      out.push_back("N");
      break;
    case FieldKind::Text:
      out.push_back(field.allowed_tokens ? *field.allowed_tokens->begin()
                                         : "auto");
      break;
    case FieldKind::Choice: {
      const auto& branch = field.branches.front();
      out.push_back(branch.name);
      for (const auto& nested : branch.fields) {
        if (nested.optional) {
          out.push_back("N");
          continue;
        }
        append_synthesized_tokens(nested, time_fields_seen, out);
      }
      break;
    }
    case FieldKind::Vector:
      for (std::size_t i = 0; i < field.components.size(); ++i) {
        out.push_back("0");
      }
      break;
  }
}

}  // namespace detail

/// Assembles the wire value string for one block from assignments.
/// With synthesize_missing, unassigned mandatory fields get conservative
/// defaults (declared default, interval floor, first branch / allowed token,
/// epoch-based times); otherwise a missing mandatory assignment is an error.
inline std::string build_value_string(const swe::ParameterDescription& desc,
                                      const std::vector<Assignment>& assignments,
                                      bool synthesize_missing) {
  for (const auto& a : assignments) {
    if (!desc.field(a.name)) {
      throw SpsError(Errc::InvalidParameterValue,
                     "procedure " + desc.procedure_id + " has no field '" +
                         a.name + "'");
    }
  }
  std::vector<std::string> tokens;
  int time_fields_seen = 0;
  for (const auto& field : desc.fields) {
    const Assignment* given = find_assignment(assignments, field.name);
    if (field.optional) {
      if (!given) {
        tokens.push_back("N");
        continue;
      }
      tokens.push_back("Y");
      detail::append_assignment_tokens(field, given->value, tokens);
      continue;
    }
    if (given) {
      if (field.kind == swe::FieldKind::Time) ++time_fields_seen;
      detail::append_assignment_tokens(field, given->value, tokens);
    } else if (synthesize_missing) {
      detail::append_synthesized_tokens(field, time_fields_seen, tokens);
    } else {
      throw SpsError(Errc::InvalidParameterValue,
                     "mandatory field '" + field.name + "' needs a value");
    }
  }
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ',';
    out += tokens[i];
  }
  return out;
}

/// Builds and locally validates ParameterData from assignments by running
/// the value string through the codec.
inline swe::ParameterData build_parameter_data(
    const swe::ParameterDescription& desc,
    const std::vector<Assignment>& assignments, bool synthesize_missing) {
  const std::string values =
      build_value_string(desc, assignments, synthesize_missing);
  return swe::decode_parameter_data(desc, swe::TextEncodingSpec{}, values);
}

/// Assignment string that reproduces an existing value (for update flows
/// that start from the task's current parameters).
inline std::string value_to_assignment(const swe::FieldDescriptor& field,
                                       const swe::Value& value) {
  const auto tokens =
      swe::encode_field_tokens(field, value, swe::TextEncodingSpec{});
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i == 1 && field.kind == swe::FieldKind::Choice) {
      out += ':';
    } else if (i) {
      out += ',';
    }
    out += tokens[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operation documents

inline xml::Element make_operation(std::string_view op_name) {
  xml::Element el("sps:" + std::string(op_name));
  el.set_attr("xmlns:sps", swe::kSpsNamespace);
  el.set_attr("xmlns:swe", swe::kSweNamespace);
  el.set_attr("service", "SPS");
  el.set_attr("version", "2.0");
  return el;
}

inline xml::Element make_procedure_operation(std::string_view op_name,
                                             const std::string& procedure_id) {
  xml::Element el = make_operation(op_name);
  el.add_child(xml::Element("sps:procedure").set_text(procedure_id));
  return el;
}

inline xml::Element make_task_operation(std::string_view op_name,
                                        const std::string& task_id) {
  xml::Element el = make_operation(op_name);
  el.add_child(xml::Element("sps:task").set_text(task_id));
  return el;
}

inline xml::Element make_tasking_request(std::string_view op_name,
                                         const swe::ParameterDescription& desc,
                                         const swe::ParameterData& data) {
  xml::Element el = make_procedure_operation(op_name, desc.procedure_id);
  xml::Element holder("sps:taskingParameters");
  holder.add_child(swe::parameter_data_to_xml(desc, data));
  el.add_child(std::move(holder));
  return el;
}

// ---------------------------------------------------------------------------
// HTTP wrapper

struct ServiceException {
  std::string code;
  std::string locator;
  std::string message;
};

struct OpResult {
  enum class Kind { Ok, NetworkError, ServiceError };
  Kind kind = Kind::NetworkError;
  xml::Element doc;          // response document when Ok
  ServiceException error;    // when ServiceError
  std::string raw;           // raw body (both cases)
};

class Endpoint {
 public:
  /// Accepts http://host[:port][/sps]; the path defaults to /sps.
  static Endpoint parse(const std::string& url) {
    Endpoint ep;
    std::string rest = url;
    const std::string scheme = "http://";
    if (rest.rfind(scheme, 0) != 0) {
      throw SpsError(Errc::InvalidParameterValue,
                     "endpoint must start with http://", url);
    }
    rest = rest.substr(scheme.size());
    const std::size_t slash = rest.find('/');
    std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    ep.sps_path_ = slash == std::string::npos ? "/sps" : rest.substr(slash);
    if (ep.sps_path_.size() > 1 && ep.sps_path_.back() == '/') {
      ep.sps_path_.pop_back();
    }
    const std::size_t colon = hostport.rfind(':');
    if (colon == std::string::npos) {
      ep.host_ = hostport;
      ep.port_ = 80;
    } else {
      ep.host_ = hostport.substr(0, colon);
      try {
        ep.port_ = std::stoi(hostport.substr(colon + 1));
      } catch (...) {
        throw SpsError(Errc::InvalidParameterValue, "bad endpoint port", url);
      }
    }
    if (ep.host_.empty()) {
      throw SpsError(Errc::InvalidParameterValue, "bad endpoint host", url);
    }
    return ep;
  }

  const std::string& host() const noexcept { return host_; }
  int port() const noexcept { return port_; }
  const std::string& sps_path() const noexcept { return sps_path_; }

 private:
  std::string host_;
  int port_ = 8484;
  std::string sps_path_ = "/sps";
};

class Client {
 public:
  Client(const Endpoint& endpoint, int timeout_seconds)
      : endpoint_(endpoint), http_(endpoint.host(), endpoint.port()) {
    http_.set_connection_timeout(timeout_seconds, 0);
    http_.set_read_timeout(timeout_seconds, 0);
  }

  OpResult post_operation(const xml::Element& op) {
    auto res = http_.Post(endpoint_.sps_path(), xml::serialize(op),
                          "application/xml");
    return classify(std::move(res));
  }

  OpResult get(const std::string& path) {
    return classify(http_.Get(path));
  }

  OpResult get_raw(const std::string& path) {
    auto res = http_.Get(path);
    OpResult out;
    if (!res) return out;
    out.kind = OpResult::Kind::Ok;
    out.raw = res->body;
    return out;
  }

  OpResult post_body(const std::string& path, const std::string& body,
                     const std::string& content_type) {
    return classify(http_.Post(path, body, content_type));
  }

  OpResult subscribe(const std::string& topic) {
    xml::Element sub("sps:Subscribe");
    sub.set_attr("xmlns:sps", swe::kSpsNamespace);
    sub.set_attr("topic", topic);
    return classify(http_.Post(endpoint_.sps_path() + "/subscriptions",
                               xml::serialize(sub), "application/xml"));
  }

  OpResult drain(const std::string& subscription_id) {
    return get(endpoint_.sps_path() + "/subscriptions/" + subscription_id +
               "/events");
  }

  OpResult advance_clock(double seconds) {
    return classify(http_.Post("/clock/advance", swe::format_decimal(seconds),
                               "text/plain"));
  }

  /// Fetches and parses the procedure's tasking description.
  swe::ParameterDescription fetch_description(const std::string& procedure_id) {
    const OpResult result =
        post_operation(make_procedure_operation("DescribeTasking", procedure_id));
    if (result.kind == OpResult::Kind::NetworkError) {
      throw SpsError(Errc::InvalidRequest, "network failure", "DescribeTasking");
    }
    if (result.kind == OpResult::Kind::ServiceError) {
      throw SpsError(Errc::InvalidParameterValue,
                     result.error.code + ": " + result.error.message,
                     procedure_id);
    }
    return swe::parse_tasking_description(
        result.doc.required_child("sps:ParameterDescription"));
  }

  const Endpoint& endpoint() const noexcept { return endpoint_; }

 private:
  static OpResult classify(httplib::Result res) {
    OpResult out;
    if (!res) {
      out.kind = OpResult::Kind::NetworkError;
      return out;
    }
    out.raw = res->body;
    xml::Element doc;
    try {
      doc = xml::parse(res->body);
    } catch (const SpsError&) {
      out.kind = OpResult::Kind::ServiceError;
      out.error = {"InvalidResponse", "", "response is not well-formed XML"};
      return out;
    }
    if (doc.name == "sps:ExceptionReport") {
      out.kind = OpResult::Kind::ServiceError;
      if (const xml::Element* ex = doc.child("sps:Exception")) {
        out.error.code = ex->attr_or("code", "UnknownError");
        out.error.locator = ex->attr_or("locator", "");
        if (const xml::Element* msg = ex->child("sps:Message")) {
          out.error.message = msg->text;
        }
      }
      out.doc = std::move(doc);
      return out;
    }
    out.kind = OpResult::Kind::Ok;
    out.doc = std::move(doc);
    return out;
  }

  Endpoint endpoint_;
  httplib::Client http_;
};

}  // namespace spsweb::cli

#endif  // SPSWEB_CLIENT_HPP
