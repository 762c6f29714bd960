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

#ifndef SPSWEB_ERRORS_HPP
#define SPSWEB_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace spsweb {

/// Closed set of machine-readable failure codes. Every error response the
/// service renders carries exactly one of these.
enum class Errc {
  // codec
  UnknownSelector,
  TokenCountMismatch,
  LexicalError,
  ConstraintViolation,
  ValidationFailure,
  SchemaError,
  // task lifecycle
  RejectedRequest,
  IllegalTransition,
  UpdateNotFeasible,
  NotYetExpired,
  FeasibilityIdNotReusable,
  UnknownTask,
  UnknownRequest,
  // notifications
  UnknownTopic,
  UnknownEventKind,
  PayloadTypeMismatch,
  // assets
  ProcedureMismatch,
  CapacityExhausted,
  NotHeld,
  // semantic layer
  MalformedPattern,
  CyclicSchema,
  // service facade
  OperationNotSupported,
  InvalidRequest,
  InvalidParameterValue,
  ConfigurationError,
};

inline std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::UnknownSelector: return "UnknownSelector";
    case Errc::TokenCountMismatch: return "TokenCountMismatch";
    case Errc::LexicalError: return "LexicalError";
    case Errc::ConstraintViolation: return "ConstraintViolation";
    case Errc::ValidationFailure: return "ValidationFailure";
    case Errc::SchemaError: return "SchemaError";
    case Errc::RejectedRequest: return "RejectedRequest";
    case Errc::IllegalTransition: return "IllegalTransition";
    case Errc::UpdateNotFeasible: return "UpdateNotFeasible";
    case Errc::NotYetExpired: return "NotYetExpired";
    case Errc::FeasibilityIdNotReusable: return "FeasibilityIdNotReusable";
    case Errc::UnknownTask: return "UnknownTask";
    case Errc::UnknownRequest: return "UnknownRequest";
    case Errc::UnknownTopic: return "UnknownTopic";
    case Errc::UnknownEventKind: return "UnknownEventKind";
    case Errc::PayloadTypeMismatch: return "PayloadTypeMismatch";
    case Errc::ProcedureMismatch: return "ProcedureMismatch";
    case Errc::CapacityExhausted: return "CapacityExhausted";
    case Errc::NotHeld: return "NotHeld";
    case Errc::MalformedPattern: return "MalformedPattern";
    case Errc::CyclicSchema: return "CyclicSchema";
    case Errc::OperationNotSupported: return "OperationNotSupported";
    case Errc::InvalidRequest: return "InvalidRequest";
    case Errc::InvalidParameterValue: return "InvalidParameterValue";
    case Errc::ConfigurationError: return "ConfigurationError";
  }
  return "UnknownError";
}

/// One exception type for the whole library; handlers classify by code().
/// The locator pinpoints the offending element, field path, or byte offset.
class SpsError : public std::runtime_error {
 public:
  SpsError(Errc code, std::string message, std::string locator = "")
      : std::runtime_error(std::string(errc_name(code)) + ": " + message +
                           (locator.empty() ? "" : " [" + locator + "]")),
        code_(code),
        message_(std::move(message)),
        locator_(std::move(locator)) {}

  Errc code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& locator() const noexcept { return locator_; }

 private:
  Errc code_;
  std::string message_;
  std::string locator_;
};

}  // namespace spsweb

#endif  // SPSWEB_ERRORS_HPP
