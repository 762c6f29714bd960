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

#ifndef SPSWEB_TASK_MODEL_HPP
#define SPSWEB_TASK_MODEL_HPP

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spsweb/errors.hpp"
#include "spsweb/notification_hub.hpp"
#include "spsweb/swe_codec.hpp"
#include "spsweb/time.hpp"

// Tasking requests and tasks, with the lifecycle enforced as a closed
// transition table under an injectable virtual clock. A feasibility study is
// itself a persisted task, but its identifier can never seed a Submit or
// Reserve.

namespace spsweb::tasks {

enum class RequestKind { Feasibility, Submit, Reserve };
enum class RequestStatus { Pending, Accepted, Rejected, Expired };
enum class TaskKind { FeasibilityStudy, Submission };
enum class TaskState {
  Feasible,
  Infeasible,
  Reserved,
  InExecution,
  Completed,
  Failed,
  Cancelled,
  ReservationExpired,
};

inline std::string_view to_string(RequestKind k) noexcept {
  switch (k) {
    case RequestKind::Feasibility: return "GetFeasibility";
    case RequestKind::Submit: return "Submit";
    case RequestKind::Reserve: return "Reserve";
  }
  return "?";
}

inline std::string_view to_string(RequestStatus s) noexcept {
  switch (s) {
    case RequestStatus::Pending: return "Pending";
    case RequestStatus::Accepted: return "Accepted";
    case RequestStatus::Rejected: return "Rejected";
    case RequestStatus::Expired: return "Expired";
  }
  return "?";
}

inline std::string_view to_string(TaskKind k) noexcept {
  return k == TaskKind::FeasibilityStudy ? "FeasibilityStudy" : "Submission";
}

inline std::string_view to_string(TaskState s) noexcept {
  switch (s) {
    case TaskState::Feasible: return "Feasible";
    case TaskState::Infeasible: return "Infeasible";
    case TaskState::Reserved: return "Reserved";
    case TaskState::InExecution: return "InExecution";
    case TaskState::Completed: return "Completed";
    case TaskState::Failed: return "Failed";
    case TaskState::Cancelled: return "Cancelled";
    case TaskState::ReservationExpired: return "ReservationExpired";
  }
  return "?";
}

inline constexpr TaskState kAllTaskStates[] = {
    TaskState::Feasible,   TaskState::Infeasible, TaskState::Reserved,
    TaskState::InExecution, TaskState::Completed,  TaskState::Failed,
    TaskState::Cancelled,  TaskState::ReservationExpired,
};

struct TaskingRequest {
  std::string request_id;
  RequestKind kind = RequestKind::Submit;
  std::string procedure_id;
  swe::ParameterData parameters;
  Instant received_at = 0;
  RequestStatus status = RequestStatus::Pending;
  std::vector<swe::ParameterData> alternatives;  // nonempty only when Rejected
  std::string asset_id;
  std::string task_id;  // set once a task was created for the request
  std::string reason;
};

struct HistoryEntry {
  Instant at = 0;
  std::string event;
};

struct Task {
  std::string task_id;
  TaskKind kind = TaskKind::Submission;
  TaskState state = TaskState::InExecution;
  std::string procedure_id;
  swe::ParameterData parameters;
  std::optional<Instant> reservation_expiration;  // present iff state Reserved
  std::string asset_id;
  std::string request_id;
  Instant created_at = 0;
  std::vector<HistoryEntry> history;

  bool terminal() const noexcept {
    switch (state) {
      case TaskState::Reserved:
      case TaskState::InExecution:
        return false;
      default:
        return true;
    }
  }
};

struct Command {
  enum class Kind {
    Confirm,
    Update,
    Cancel,
    ExecutionCompleted,
    ExecutionFailed,
    ExpireReservation,
  };

  Kind kind = Kind::Confirm;
  std::optional<swe::ParameterData> new_parameters;  // Update only

  static Command confirm() { return {Kind::Confirm, std::nullopt}; }
  static Command update(swe::ParameterData params) {
    return {Kind::Update, std::move(params)};
  }
  static Command cancel() { return {Kind::Cancel, std::nullopt}; }
  static Command execution_completed() {
    return {Kind::ExecutionCompleted, std::nullopt};
  }
  static Command execution_failed() {
    return {Kind::ExecutionFailed, std::nullopt};
  }
  static Command expire_reservation() {
    return {Kind::ExpireReservation, std::nullopt};
  }
};

inline std::string_view to_string(Command::Kind k) noexcept {
  switch (k) {
    case Command::Kind::Confirm: return "Confirm";
    case Command::Kind::Update: return "Update";
    case Command::Kind::Cancel: return "Cancel";
    case Command::Kind::ExecutionCompleted: return "ExecutionCompleted";
    case Command::Kind::ExecutionFailed: return "ExecutionFailed";
    case Command::Kind::ExpireReservation: return "ExpireReservation";
  }
  return "?";
}

inline constexpr Command::Kind kAllCommandKinds[] = {
    Command::Kind::Confirm,          Command::Kind::Update,
    Command::Kind::Cancel,           Command::Kind::ExecutionCompleted,
    Command::Kind::ExecutionFailed,  Command::Kind::ExpireReservation,
};

/// Monotone virtual time source. Nothing in the service reads wall-clock
/// time; tests and the debug endpoint drive this instead.
class VirtualClock {
 public:
  explicit VirtualClock(Instant start = 0) : now_(start) {}

  Instant now() const noexcept { return now_.load(std::memory_order_relaxed); }

  void advance_to(Instant t) noexcept {
    Instant cur = now_.load(std::memory_order_relaxed);
    while (t > cur &&
           !now_.compare_exchange_weak(cur, t, std::memory_order_relaxed)) {
    }
  }

  void advance_by(DurationMs delta) noexcept {
    if (delta > 0) now_.fetch_add(delta, std::memory_order_relaxed);
  }

 private:
  std::atomic<Instant> now_;
};

namespace detail {

inline void append_history(Task& task, Instant now, std::string event) {
  Instant at = now;
  if (!task.history.empty() && at <= task.history.back().at) {
    at = task.history.back().at + 1;  // keep history strictly time-ordered
  }
  task.history.push_back({at, std::move(event)});
}

}  // namespace detail

/// Builds the task for an accepted request. Feasibility requests persist a
/// FeasibilityStudy task whose verdict state is terminal.
struct CreateOutcome {
  Task task;
  std::vector<topics::EventKind> events;
};

inline CreateOutcome create_task(const TaskingRequest& req, bool feasible,
                                 std::string asset_id, std::string task_id,
                                 Instant now, DurationMs reservation_lifetime) {
  if (req.status != RequestStatus::Accepted) {
    throw SpsError(Errc::RejectedRequest,
                   "request " + req.request_id + " is not accepted");
  }
  CreateOutcome out;
  Task& task = out.task;
  task.task_id = std::move(task_id);
  task.procedure_id = req.procedure_id;
  task.parameters = req.parameters;
  task.asset_id = std::move(asset_id);
  task.request_id = req.request_id;
  task.created_at = now;
  switch (req.kind) {
    case RequestKind::Feasibility:
      task.kind = TaskKind::FeasibilityStudy;
      task.state = feasible ? TaskState::Feasible : TaskState::Infeasible;
      break;
    case RequestKind::Submit:
      task.kind = TaskKind::Submission;
      task.state = TaskState::InExecution;
      out.events.push_back(topics::EventKind::TaskSubmission);
      break;
    case RequestKind::Reserve:
      task.kind = TaskKind::Submission;
      task.state = TaskState::Reserved;
      task.reservation_expiration = now + reservation_lifetime;
      out.events.push_back(topics::EventKind::TaskReservation);
      break;
  }
  detail::append_history(task, now,
                         "Created(" + std::string(to_string(task.state)) + ")");
  return out;
}

struct TransitionOutcome {
  Task task;
  std::vector<topics::EventKind> events;
};

/// The closed transition table. Every (state, command) pair not listed, and
/// any command against a FeasibilityStudy task, raises IllegalTransition
/// with the task unchanged. Update swaps parameters only; validation and
/// feasibility re-checks happen in the service layer before this is called.
inline TransitionOutcome transition(const Task& before, const Command& command,
                                    Instant now) {
  const auto illegal = [&]() -> SpsError {
    return SpsError(Errc::IllegalTransition,
                    std::string(to_string(command.kind)) + " not allowed in state " +
                        std::string(to_string(before.state)),
                    before.task_id);
  };
  if (before.kind == TaskKind::FeasibilityStudy) throw illegal();

  TransitionOutcome out;
  out.task = before;
  Task& task = out.task;
  const std::string from(to_string(before.state));

  switch (command.kind) {
    case Command::Kind::Confirm:
      if (before.state != TaskState::Reserved) throw illegal();
      task.state = TaskState::InExecution;
      task.reservation_expiration.reset();
      out.events.push_back(topics::EventKind::TaskConfirmation);
      break;
    case Command::Kind::Cancel:
      if (before.state != TaskState::Reserved &&
          before.state != TaskState::InExecution) {
        throw illegal();
      }
      task.state = TaskState::Cancelled;
      task.reservation_expiration.reset();
      out.events.push_back(topics::EventKind::TaskCancellation);
      break;
    case Command::Kind::Update:
      if (before.state != TaskState::Reserved &&
          before.state != TaskState::InExecution) {
        throw illegal();
      }
      if (!command.new_parameters) {
        throw SpsError(Errc::InvalidRequest, "Update carries no parameters",
                       before.task_id);
      }
      task.parameters = *command.new_parameters;
      out.events.push_back(topics::EventKind::TaskUpdate);
      break;
    case Command::Kind::ExecutionCompleted:
      if (before.state != TaskState::InExecution) throw illegal();
      task.state = TaskState::Completed;
      out.events.push_back(topics::EventKind::TaskCompletion);
      break;
    case Command::Kind::ExecutionFailed:
      if (before.state != TaskState::InExecution) throw illegal();
      task.state = TaskState::Failed;
      out.events.push_back(topics::EventKind::TaskFailure);
      break;
    case Command::Kind::ExpireReservation:
      if (before.state != TaskState::Reserved) throw illegal();
      if (!before.reservation_expiration || now < *before.reservation_expiration) {
        throw SpsError(Errc::NotYetExpired,
                       "reservation has not reached its expiration instant",
                       before.task_id);
      }
      task.state = TaskState::ReservationExpired;
      task.reservation_expiration.reset();
      out.events.push_back(topics::EventKind::ReservationExpiration);
      break;
  }
  detail::append_history(task, now,
                         std::string(to_string(command.kind)) + ": " + from +
                             " -> " + std::string(to_string(task.state)));
  return out;
}

/// Snapshot status of a task. percentCompletion is 100 exactly for Completed
/// tasks; dataAvailable reflects the asset layer's published references.
inline topics::StatusReport make_status_report(const Task& task, Instant now,
                                               int percent, bool data_available) {
  topics::StatusReport report;
  report.task_id = task.task_id;
  report.request_id = task.request_id;
  report.state = std::string(to_string(task.state));
  report.percent_completion =
      task.state == TaskState::Completed ? 100 : (percent > 99 ? 99 : percent);
  if (report.percent_completion < 0) report.percent_completion = 0;
  report.timestamp = now;
  report.data_available = data_available;
  return report;
}

/// In-memory request/task store. Identifier counters are monotonic so golden
/// transcripts stay reproducible; all mutation is serialized by the owning
/// service engine.
class TaskStore {
 public:
  std::string next_request_id() { return "req_" + std::to_string(++request_counter_); }
  std::string next_task_id() { return "task_" + std::to_string(++task_counter_); }

  void put_request(TaskingRequest req) {
    requests_[req.request_id] = std::move(req);
  }

  void put_task(Task task) { tasks_[task.task_id] = std::move(task); }

  TaskingRequest* find_request(std::string_view id) {
    auto it = requests_.find(std::string(id));
    return it == requests_.end() ? nullptr : &it->second;
  }

  Task* find_task(std::string_view id) {
    auto it = tasks_.find(std::string(id));
    return it == tasks_.end() ? nullptr : &it->second;
  }

  const TaskingRequest& request(std::string_view id) const {
    auto it = requests_.find(std::string(id));
    if (it == requests_.end()) {
      throw SpsError(Errc::UnknownRequest, "no request '" + std::string(id) + "'");
    }
    return it->second;
  }

  const Task& task(std::string_view id) const {
    auto it = tasks_.find(std::string(id));
    if (it == tasks_.end()) {
      throw SpsError(Errc::UnknownTask, "no task '" + std::string(id) + "'");
    }
    return it->second;
  }

  const std::map<std::string, Task>& tasks() const noexcept { return tasks_; }
  const std::map<std::string, TaskingRequest>& requests() const noexcept {
    return requests_;
  }

  std::vector<std::string> reserved_due(Instant now) const {
    std::vector<std::string> out;
    for (const auto& [id, task] : tasks_) {
      if (task.state == TaskState::Reserved && task.reservation_expiration &&
          *task.reservation_expiration <= now) {
        out.push_back(id);
      }
    }
    return out;
  }

  std::vector<std::string> pending_requests() const {
    std::vector<std::string> out;
    for (const auto& [id, req] : requests_) {
      if (req.status == RequestStatus::Pending) out.push_back(id);
    }
    return out;
  }

 private:
  std::map<std::string, TaskingRequest> requests_;
  std::map<std::string, Task> tasks_;
  std::uint64_t request_counter_ = 0;
  std::uint64_t task_counter_ = 0;
};

/// Expires every due reservation. Idempotent: a second sweep at the same
/// instant finds nothing Reserved and returns empty. Capacity release and
/// event publication are composed by the caller from the outcomes.
inline std::vector<TransitionOutcome> expiration_sweep(TaskStore& store,
                                                       Instant now) {
  std::vector<TransitionOutcome> out;
  for (const std::string& id : store.reserved_due(now)) {
    Task* task = store.find_task(id);
    TransitionOutcome outcome = transition(*task, Command::expire_reservation(), now);
    *task = outcome.task;
    out.push_back(std::move(outcome));
  }
  return out;
}

}  // namespace spsweb::tasks

#endif  // SPSWEB_TASK_MODEL_HPP
