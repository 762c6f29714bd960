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

#ifndef SPSWEB_ENGINE_HPP
#define SPSWEB_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spsweb/asset_layer.hpp"
#include "spsweb/config.hpp"
#include "spsweb/errors.hpp"
#include "spsweb/notification_hub.hpp"
#include "spsweb/semantic_store.hpp"
#include "spsweb/swe_codec.hpp"
#include "spsweb/task_model.hpp"
#include "spsweb/time.hpp"
#include "spsweb/xml.hpp"

// The request operator and per-operation listeners behind the HTTP facade.
// One engine owns all mutable state (store, assets, hub, graph, schedule);
// every public entry point serializes on the engine mutex, so task states
// are linearizable and semantic queries read consistent snapshots.

namespace spsweb::service {

inline constexpr char kServiceVersion[] = "2.0";

inline const std::vector<std::string>& operation_names() {
  static const std::vector<std::string> names = {
      "GetCapabilities", "DescribeSensor", "DescribeTasking", "GetFeasibility",
      "Submit",          "Reserve",        "Confirm",         "Update",
      "Cancel",          "GetStatus",      "GetTask",         "DescribeResultAccess",
  };
  return names;
}

/// Update was syntactically fine but cannot be applied; carries alternative
/// parameter settings (already encoded as value strings) when the asset can
/// offer them.
class UpdateNotFeasibleError : public SpsError {
 public:
  UpdateNotFeasibleError(std::string message,
                         std::vector<std::string> alternative_values,
                         std::string locator = "")
      : SpsError(Errc::UpdateNotFeasible, std::move(message), std::move(locator)),
        alternative_values_(std::move(alternative_values)) {}

  const std::vector<std::string>& alternative_values() const noexcept {
    return alternative_values_;
  }

 private:
  std::vector<std::string> alternative_values_;
};

/// Tasking parameters failed codec validation; the report lists violations.
class ValidationFailureError : public SpsError {
 public:
  ValidationFailureError(std::string message, swe::ValidationReport report,
                         std::string locator = "")
      : SpsError(Errc::ValidationFailure, std::move(message), std::move(locator)),
        report_(std::move(report)) {}

  const swe::ValidationReport& report() const noexcept { return report_; }

 private:
  swe::ValidationReport report_;
};

class Engine {
 public:
  explicit Engine(ServiceConfig config)
      : config_(std::move(config)),
        clock_(config_.start_time),
        assets_(config_.assets, config_.seed),
        hub_(config_.subscription_queue_capacity),
        graph_(rdf::OntologySchema::sps_default()) {
    if (config_.procedures.empty()) {
      throw SpsError(Errc::ConfigurationError, "no procedures configured");
    }
    for (const auto& p : config_.procedures) {
      swe::validate_description(p.description);
    }
  }

  struct HttpResponse {
    int status = 200;
    std::string content_type = "application/xml";
    std::string body;
  };

  // ---- transport entry points ---------------------------------------------

  /// POST /sps. Never throws: failures render as exception reports.
  HttpResponse handle_operation(const std::string& body) {
    try {
      xml::Element request = xml::parse(body);
      if (request.name == "sps:DescribeSensor") {
        // Stored sensor descriptions are opaque; serve the bytes untouched.
        std::lock_guard lock(mutex_);
        validate_envelope(request);
        const ProcedureEntry& entry =
            resolve_procedure(require_child_text(request, "sps:procedure"));
        return {200, "application/xml", entry.sensor_document};
      }
      return {200, "application/xml", xml::serialize(dispatch(std::move(request)))};
    } catch (const SpsError& e) {
      return error_response(e);
    } catch (const std::exception& e) {
      return error_response(SpsError(Errc::InvalidRequest, e.what()));
    }
  }

  /// GET /sps?service=SPS&request=GetCapabilities (KVP binding).
  HttpResponse handle_kvp(const std::map<std::string, std::string>& params) {
    try {
      const auto it = params.find("request");
      if (it == params.end() || it->second != "GetCapabilities") {
        throw SpsError(Errc::OperationNotSupported,
                       "KVP binding supports GetCapabilities only", "request");
      }
      const auto service = params.find("service");
      if (service != params.end() && service->second != "SPS") {
        throw SpsError(Errc::InvalidParameterValue, "service must be SPS",
                       "service");
      }
      xml::Element request("sps:GetCapabilities");
      request.set_attr("service", "SPS");
      return {200, "application/xml", xml::serialize(dispatch(std::move(request)))};
    } catch (const SpsError& e) {
      return error_response(e);
    }
  }

  std::string topics_document() const {
    return xml::serialize(topics::topic_namespace_document());
  }

  HttpResponse handle_subscribe(const std::string& body) {
    try {
      const xml::Element request = xml::parse(body);
      if (request.name != "sps:Subscribe") {
        throw SpsError(Errc::InvalidRequest, "expected <sps:Subscribe>");
      }
      const std::string& topic = request.required_attr("topic");
      const std::string id = hub_.subscribe(topic);
      xml::Element response("sps:SubscribeResponse");
      response.set_attr("version", kServiceVersion);
      response.set_attr("subscription", id);
      response.set_attr("topic", topic);
      return {200, "application/xml", xml::serialize(response)};
    } catch (const SpsError& e) {
      return error_response(e);
    }
  }

  HttpResponse handle_drain(const std::string& subscription_id) {
    try {
      const auto drained = hub_.drain(subscription_id);
      xml::Element response("sps:NotificationList");
      response.set_attr("version", kServiceVersion);
      response.set_attr("subscription", subscription_id);
      response.set_attr("overflow", drained.overflowed ? "true" : "false");
      for (const auto& ev : drained.events) {
        xml::Element item("sps:Notification");
        item.set_attr("topic", ev.topic);
        item.set_attr("sequence", std::to_string(ev.sequence));
        item.set_attr("emittedAt", format_instant(ev.emitted_at));
        item.add_child(topics::report_to_xml(ev));
        response.add_child(std::move(item));
      }
      return {200, "application/xml", xml::serialize(response)};
    } catch (const SpsError& e) {
      HttpResponse r = error_response(e);
      r.status = 404;
      return r;
    }
  }

  /// GET /sps/semantics/query?q=<text BGP>.
  HttpResponse handle_semantic_query(const std::string& bgp_text) {
    try {
      std::lock_guard lock(mutex_);
      const auto patterns = rdf::parse_bgp(bgp_text);
      const auto solutions = graph_.query_bgp(patterns);
      std::set<std::string> variables;
      for (const auto& p : patterns) {
        for (const rdf::Term* t : {&p.subject, &p.predicate, &p.object}) {
          if (t->is_variable()) variables.insert(t->value);
        }
      }
      xml::Element response("sps:QueryResults");
      response.set_attr("version", kServiceVersion);
      xml::Element head("sps:head");
      for (const auto& v : variables) {
        head.add_child(xml::Element("sps:variable").set_text(v));
      }
      response.add_child(std::move(head));
      for (const auto& binding : solutions) {
        xml::Element row("sps:result");
        for (const auto& [name, term] : binding) {
          xml::Element cell("sps:binding");
          cell.set_attr("variable", name);
          switch (term.kind) {
            case rdf::TermKind::Iri:
              cell.set_attr("kind", "iri");
              cell.set_text(term.value);
              break;
            case rdf::TermKind::Literal:
              cell.set_attr("kind", "literal");
              if (term.literal_type == rdf::LiteralType::Decimal) {
                cell.set_attr("datatype", "xsd:decimal");
              } else if (term.literal_type == rdf::LiteralType::DateTime) {
                cell.set_attr("datatype", "xsd:dateTime");
              }
              cell.set_text(term.value);
              break;
            case rdf::TermKind::Variable:
              break;
          }
          row.add_child(std::move(cell));
        }
        response.add_child(std::move(row));
      }
      return {200, "application/xml", xml::serialize(response)};
    } catch (const SpsError& e) {
      return error_response(e);
    }
  }

  /// GET /sps/semantics/dump: one triple per line.
  std::string semantic_dump() const {
    std::lock_guard lock(mutex_);
    return graph_.dump();
  }

  /// POST /clock/advance (virtual seconds in the body); debug builds only.
  HttpResponse handle_clock_advance(const std::string& body) {
    try {
      if (!config_.debug_clock) {
        throw SpsError(Errc::OperationNotSupported,
                       "virtual clock control is disabled", "/clock/advance");
      }
      const double seconds = swe::parse_decimal(trimmed(body), "/clock/advance");
      if (seconds < 0) {
        throw SpsError(Errc::InvalidParameterValue, "cannot advance backwards",
                       "/clock/advance");
      }
      advance_clock(static_cast<DurationMs>(seconds * kMillisPerSecond));
      xml::Element response("sps:ClockAdvanced");
      response.set_attr("version", kServiceVersion);
      response.set_attr("now", format_instant(now()));
      return {200, "application/xml", xml::serialize(response)};
    } catch (const SpsError& e) {
      return error_response(e);
    }
  }

  /// GET /results/{taskId}/{n}: synthetic result documents.
  HttpResponse handle_result_document(const std::string& task_id,
                                      const std::string& index) {
    try {
      std::lock_guard lock(mutex_);
      std::size_t n = 0;
      try {
        n = static_cast<std::size_t>(std::stoul(index));
      } catch (...) {
        throw SpsError(Errc::InvalidParameterValue, "bad result index", index);
      }
      const auto refs = assets_.result_references(task_id);
      if (n == 0 || n > refs.size()) {
        throw SpsError(Errc::InvalidParameterValue,
                       "task " + task_id + " has no result " + index);
      }
      const auto& ref = refs[n - 1];
      std::string body = "Synthetic observation product " + index + " for " +
                         task_id + ", produced at " +
                         format_instant(ref.produced_at) + ".\n" +
                         ref.description + "\n";
      return {200, "text/plain", std::move(body)};
    } catch (const SpsError& e) {
      HttpResponse r = error_response(e);
      r.status = 404;
      return r;
    }
  }

  // ---- operation dispatch -------------------------------------------------

  /// Resolves the root element to exactly one listener and invokes it.
  /// Throws SpsError; the transport wrapper renders exception reports.
  xml::Element dispatch(xml::Element request) {
    std::lock_guard lock(mutex_);
    validate_envelope(request);
    const std::string_view name = request.name;
    if (name == "sps:GetCapabilities") return op_get_capabilities();
    if (name == "sps:DescribeSensor") {
      const ProcedureEntry& entry =
          resolve_procedure(require_child_text(request, "sps:procedure"));
      return xml::parse(entry.sensor_document);
    }
    if (name == "sps:DescribeTasking") return op_describe_tasking(request);
    if (name == "sps:GetFeasibility") {
      return op_tasking_request(tasks::RequestKind::Feasibility, request);
    }
    if (name == "sps:Submit") {
      return op_tasking_request(tasks::RequestKind::Submit, request);
    }
    if (name == "sps:Reserve") {
      return op_tasking_request(tasks::RequestKind::Reserve, request);
    }
    if (name == "sps:Confirm") {
      return op_task_command(tasks::Command::Kind::Confirm, request);
    }
    if (name == "sps:Update") {
      return op_task_command(tasks::Command::Kind::Update, request);
    }
    if (name == "sps:Cancel") {
      return op_task_command(tasks::Command::Kind::Cancel, request);
    }
    if (name == "sps:GetStatus") return op_get_status(request);
    if (name == "sps:GetTask") return op_get_task(request);
    if (name == "sps:DescribeResultAccess") return op_describe_result_access(request);
    throw SpsError(Errc::OperationNotSupported,
                   "no listener for <" + std::string(name) + ">",
                   std::string(name));
  }

  // ---- direct accessors (tests, CLI plumbing, tools) ----------------------

  Instant now() const { return clock_.now(); }

  /// Moves the virtual clock forward, firing every scheduled action (request
  /// decisions, execution progress, expirations) at its exact instant.
  void advance_clock(DurationMs delta) {
    std::lock_guard lock(mutex_);
    advance_locked(clock_.now() + (delta < 0 ? 0 : delta));
  }

  topics::NotificationHub& hub() noexcept { return hub_; }
  const ServiceConfig& config() const noexcept { return config_; }

  tasks::Task task_snapshot(std::string_view id) const {
    std::lock_guard lock(mutex_);
    return store_.task(id);
  }

  tasks::TaskingRequest request_snapshot(std::string_view id) const {
    std::lock_guard lock(mutex_);
    return store_.request(id);
  }

  std::vector<assets::ResultReference> result_references(std::string_view id) const {
    std::lock_guard lock(mutex_);
    return assets_.result_references(id);
  }

  int blocked_capacity(std::string_view asset_id) const {
    std::lock_guard lock(mutex_);
    return assets_.blocked(asset_id);
  }

  std::vector<rdf::Bindings> semantic_query(const std::string& bgp_text) const {
    std::lock_guard lock(mutex_);
    return graph_.query_bgp(rdf::parse_bgp(bgp_text));
  }

  std::size_t triple_count() const {
    std::lock_guard lock(mutex_);
    return graph_.size();
  }

  /// Serialized view of every piece of mutable state; read-only operations
  /// must leave it untouched.
  std::string state_fingerprint() const {
    std::lock_guard lock(mutex_);
    std::string out = "clock=" + std::to_string(clock_.now()) + "\n";
    for (const auto& [id, req] : store_.requests()) {
      out += "request " + id + " " + std::string(to_string(req.status)) + "\n";
    }
    for (const auto& [id, task] : store_.tasks()) {
      out += "task " + id + " " + std::string(to_string(task.state)) + " h" +
             std::to_string(task.history.size()) + "\n";
    }
    for (const auto& profile : assets_.profiles()) {
      out += "asset " + profile.asset_id + " blocked=" +
             std::to_string(assets_.blocked(profile.asset_id)) + "\n";
    }
    out += "triples=" + std::to_string(graph_.size()) + "\n";
    out += "schedule=" + std::to_string(schedule_.size()) + "\n";
    return out;
  }

  static HttpResponse error_response(const SpsError& e) {
    xml::Element report("sps:ExceptionReport");
    report.set_attr("xmlns:sps", swe::kSpsNamespace);
    report.set_attr("version", kServiceVersion);
    xml::Element ex("sps:Exception");
    ex.set_attr("code", std::string(errc_name(e.code())));
    if (!e.locator().empty()) ex.set_attr("locator", e.locator());
    ex.add_child(xml::Element("sps:Message").set_text(e.message()));
    if (const auto* unf = dynamic_cast<const UpdateNotFeasibleError*>(&e)) {
      if (!unf->alternative_values().empty()) {
        xml::Element alts("sps:alternatives");
        for (const auto& values : unf->alternative_values()) {
          alts.add_child(xml::Element("sps:values").set_text(values));
        }
        ex.add_child(std::move(alts));
      }
    }
    if (const auto* vf = dynamic_cast<const ValidationFailureError*>(&e)) {
      if (!vf->report().ok()) {
        xml::Element rep("sps:ValidationReport");
        for (const auto& violation : vf->report().violations) {
          xml::Element v("sps:violation");
          v.set_attr("code", std::string(swe::to_string(violation.code)));
          v.set_attr("field", violation.field_path);
          v.set_text(violation.message);
          rep.add_child(std::move(v));
        }
        ex.add_child(std::move(rep));
      }
    }
    report.add_child(std::move(ex));
    return {400, "application/xml", xml::serialize(report)};
  }

 private:
  // ---- scheduled actions ---------------------------------------------------

  struct Action {
    enum class Kind {
      ExecutionMidpoint,
      ExecutionFinish,
      ReservationExpiry,
      RequestDecision,
      RequestExpiry,
    };
    Instant at = 0;
    std::uint64_t seq = 0;
    Kind kind = Kind::ExecutionFinish;
    std::string id;  // task or request id

    bool operator>(const Action& other) const noexcept {
      if (at != other.at) return at > other.at;
      return seq > other.seq;
    }
  };

  void schedule(Instant at, Action::Kind kind, std::string id) {
    schedule_.push(Action{at, ++action_counter_, kind, std::move(id)});
  }

  void advance_locked(Instant target) {
    while (!schedule_.empty() && schedule_.top().at <= target) {
      const Action action = schedule_.top();
      schedule_.pop();
      clock_.advance_to(action.at);
      fire(action);
    }
    clock_.advance_to(target);
    run_expiration_sweep();
  }

  void fire(const Action& action) {
    switch (action.kind) {
      case Action::Kind::ReservationExpiry:
        run_expiration_sweep();
        break;
      case Action::Kind::ExecutionMidpoint: {
        tasks::Task* task = store_.find_task(action.id);
        if (!task || task->state != tasks::TaskState::InExecution) break;
        assets_.set_progress(task->task_id, 50);
        const auto ref = assets_.add_result_reference(
            task->task_id, clock_.now(), "first scene segment");
        graph_.insert({rdf::task_subject(*task), rdf::sps_term("hasResult"),
                       rdf::Term::iri(ref.uri)});
        publish_task_event(topics::EventKind::DataPublication, *task,
                           "new data published: " + ref.uri);
        break;
      }
      case Action::Kind::ExecutionFinish: {
        tasks::Task* task = store_.find_task(action.id);
        if (!task || task->state != tasks::TaskState::InExecution) break;
        const auto& profile = assets_.profile(task->asset_id);
        const bool failed =
            assets_.decide_failure(task->task_id, profile.failure_rate);
        const auto outcome = tasks::transition(
            *task,
            failed ? tasks::Command::execution_failed()
                   : tasks::Command::execution_completed(),
            clock_.now());
        *task = outcome.task;
        if (!failed) assets_.set_progress(task->task_id, 100);
        assets_.release_capacity(task->asset_id, task->task_id);
        update_task_graph(*task);
        for (const auto kind : outcome.events) {
          publish_task_event(kind, *task,
                             failed ? "execution failed" : "execution completed");
        }
        break;
      }
      case Action::Kind::RequestDecision: {
        tasks::TaskingRequest* req = store_.find_request(action.id);
        if (!req || req->status != tasks::RequestStatus::Pending) break;
        decide_request(*req);
        break;
      }
      case Action::Kind::RequestExpiry: {
        tasks::TaskingRequest* req = store_.find_request(action.id);
        if (!req || req->status != tasks::RequestStatus::Pending) break;
        req->status = tasks::RequestStatus::Expired;
        graph_.update_functional(
            rdf::request_subject(*req), rdf::sps_term("status"),
            rdf::Term::literal(std::string(to_string(req->status))));
        publish_request_event(topics::EventKind::TaskingRequestExpiration, *req);
        break;
      }
    }
  }

  void run_expiration_sweep() {
    const auto expired = tasks::expiration_sweep(store_, clock_.now());
    for (const auto& outcome : expired) {
      assets_.release_capacity(outcome.task.asset_id, outcome.task.task_id);
      update_task_graph(outcome.task);
      for (const auto kind : outcome.events) {
        publish_task_event(kind, outcome.task, "reservation expired");
      }
    }
  }

  // ---- listeners -----------------------------------------------------------

  xml::Element op_get_capabilities() const {
    xml::Element caps("sps:Capabilities");
    caps.set_attr("xmlns:sps", swe::kSpsNamespace);
    caps.set_attr("service", "SPS");
    caps.set_attr("version", kServiceVersion);

    xml::Element ident("sps:serviceIdentification");
    ident.add_child(xml::Element("sps:title").set_text(config_.title));
    ident.add_child(xml::Element("sps:provider").set_text(config_.provider));
    caps.add_child(std::move(ident));

    xml::Element operations("sps:operations");
    for (const auto& name : operation_names()) {
      xml::Element op("sps:operation");
      op.set_attr("name", name);
      operations.add_child(std::move(op));
    }
    caps.add_child(std::move(operations));

    xml::Element contents("sps:contents");
    for (const auto& asset : assets_.profiles()) {
      xml::Element offering("sps:offering");
      offering.set_attr("procedure", asset.procedure_id);
      offering.set_attr("asset", asset.asset_id);
      offering.set_attr("executionDuration",
                        std::to_string(asset.execution_duration / kMillisPerSecond));
      offering.add_child(
          xml::Element("sps:supportedEncoding").set_text("TextEncoding"));
      contents.add_child(std::move(offering));
    }
    caps.add_child(std::move(contents));

    xml::Element notifications("sps:notifications");
    notifications.set_attr("topics", "/sps/topics");
    notifications.set_attr("subscriptions", "/sps/subscriptions");
    caps.add_child(std::move(notifications));
    return caps;
  }

  xml::Element op_describe_tasking(const xml::Element& request) const {
    const ProcedureEntry& entry =
        resolve_procedure(require_child_text(request, "sps:procedure"));
    xml::Element response("sps:DescribeTaskingResponse");
    response.set_attr("version", kServiceVersion);
    response.add_child(swe::description_to_xml(entry.description));
    return response;
  }

  xml::Element op_tasking_request(tasks::RequestKind kind, const xml::Element& request) {
    // A task identifier in a Submit/Reserve is a reuse attempt; feasibility
    // study ids are explicitly not reusable.
    if (kind != tasks::RequestKind::Feasibility) {
      if (const xml::Element* reused = request.child("sps:task")) {
        const tasks::Task& prior = store_.task(reused->text);
        if (prior.kind == tasks::TaskKind::FeasibilityStudy) {
          throw SpsError(Errc::FeasibilityIdNotReusable,
                         "feasibility study " + prior.task_id +
                             " cannot seed a tasking request; send the full "
                             "parameters instead",
                         prior.task_id);
        }
        throw SpsError(Errc::InvalidParameterValue,
                       "task identifiers cannot seed tasking requests",
                       prior.task_id);
      }
    }

    const ProcedureEntry& entry =
        resolve_procedure(require_child_text(request, "sps:procedure"));
    const xml::Element& params_holder = request.required_child("sps:taskingParameters");
    const xml::Element& data_el = params_holder.required_child("sps:ParameterData");

    swe::ParameterData data;
    try {
      data = swe::parameter_data_from_xml(entry.description, data_el);
    } catch (const SpsError& e) {
      switch (e.code()) {
        case Errc::LexicalError:
        case Errc::TokenCountMismatch:
        case Errc::UnknownSelector:
        case Errc::ConstraintViolation:
        case Errc::SchemaError:
          throw ValidationFailureError(e.message(), {}, e.locator());
        default:
          throw;
      }
    }

    tasks::TaskingRequest req;
    req.request_id = store_.next_request_id();
    req.kind = kind;
    req.procedure_id = entry.id;
    req.parameters = std::move(data);
    req.received_at = clock_.now();
    req.status = tasks::RequestStatus::Pending;
    store_.put_request(req);
    tasks::TaskingRequest* stored = store_.find_request(req.request_id);
    graph_.insert_batch(rdf::translate_request(*stored));

    const auto candidates = assets_.assets_for_procedure(entry.id);
    const bool async = kind != tasks::RequestKind::Feasibility &&
                       !candidates.empty() &&
                       candidates.front()->decision_mode == assets::DecisionMode::Async;
    if (async) {
      const auto* asset = candidates.front();
      publish_request_event(topics::EventKind::TaskingRequestPending, *stored);
      schedule(clock_.now() + asset->decision_delay, Action::Kind::RequestDecision,
               stored->request_id);
      if (asset->pending_ttl > 0) {
        schedule(clock_.now() + asset->pending_ttl, Action::Kind::RequestExpiry,
                 stored->request_id);
      }
      return tasking_response(kind, *stored, {});
    }
    const assets::FeasibilityResult verdict = decide_request(*stored);
    return tasking_response(kind, *stored, verdict.alternatives);
  }

  xml::Element op_task_command(tasks::Command::Kind kind, const xml::Element& request) {
    const std::string& task_id = require_child_text(request, "sps:task");
    tasks::Task* task = store_.find_task(task_id);
    if (!task) {
      throw SpsError(Errc::UnknownTask, "no task '" + task_id + "'", task_id);
    }

    tasks::Command command{kind, std::nullopt};
    if (kind == tasks::Command::Kind::Update) {
      command = prepare_update(*task, request);
    }

    const auto prior_state = task->state;
    const auto outcome = tasks::transition(*task, command, clock_.now());
    *task = outcome.task;

    if (task->state == tasks::TaskState::Cancelled &&
        (prior_state == tasks::TaskState::Reserved ||
         prior_state == tasks::TaskState::InExecution)) {
      assets_.release_capacity(task->asset_id, task->task_id);
    }
    if (kind == tasks::Command::Kind::Confirm) {
      start_execution(*task);
    }
    update_task_graph(*task);
    for (const auto event : outcome.events) {
      publish_task_event(event, *task,
                         std::string(to_string(kind)) + " applied");
    }

    xml::Element response("sps:" + std::string(to_string(kind)) + "Response");
    response.set_attr("version", kServiceVersion);
    response.add_child(status_report_xml(*task));
    return response;
  }

  xml::Element op_get_status(const xml::Element& request) const {
    if (const xml::Element* task_el = request.child("sps:task")) {
      const tasks::Task& task = store_.task(task_el->text);
      xml::Element response("sps:GetStatusResponse");
      response.set_attr("version", kServiceVersion);
      response.add_child(status_report_xml(task));
      return response;
    }
    if (const xml::Element* req_el = request.child("sps:request")) {
      const tasks::TaskingRequest& req = store_.request(req_el->text);
      xml::Element response("sps:GetStatusResponse");
      response.set_attr("version", kServiceVersion);
      xml::Element status("sps:RequestStatus");
      status.set_attr("request", req.request_id);
      status.set_attr("kind", std::string(to_string(req.kind)));
      status.set_attr("status", std::string(to_string(req.status)));
      status.set_attr("receivedAt", format_instant(req.received_at));
      if (!req.task_id.empty()) status.set_attr("task", req.task_id);
      if (!req.reason.empty()) {
        status.add_child(xml::Element("sps:reason").set_text(req.reason));
      }
      if (!req.alternatives.empty()) {
        status.add_child(alternatives_xml(req.procedure_id, req.alternatives));
      }
      response.add_child(std::move(status));
      return response;
    }
    throw SpsError(Errc::InvalidRequest,
                   "GetStatus needs <sps:task> or <sps:request>");
  }

  xml::Element op_get_task(const xml::Element& request) const {
    const tasks::Task& task = store_.task(require_child_text(request, "sps:task"));
    xml::Element response("sps:GetTaskResponse");
    response.set_attr("version", kServiceVersion);

    xml::Element record("sps:Task");
    record.set_attr("id", task.task_id);
    record.set_attr("kind", std::string(to_string(task.kind)));
    record.set_attr("state", std::string(to_string(task.state)));
    record.set_attr("procedure", task.procedure_id);
    record.set_attr("asset", task.asset_id);
    record.set_attr("request", task.request_id);
    record.set_attr("createdAt", format_instant(task.created_at));
    if (task.reservation_expiration) {
      record.set_attr("reservationExpiration",
                      format_instant(*task.reservation_expiration));
    }
    xml::Element params("sps:taskingParameters");
    params.add_child(swe::parameter_data_to_xml(
        resolve_procedure(task.procedure_id).description, task.parameters));
    record.add_child(std::move(params));
    xml::Element history("sps:history");
    for (const auto& entry : task.history) {
      xml::Element ev("sps:event");
      ev.set_attr("at", format_instant(entry.at));
      ev.set_text(entry.event);
      history.add_child(std::move(ev));
    }
    record.add_child(std::move(history));
    response.add_child(std::move(record));
    return response;
  }

  xml::Element op_describe_result_access(const xml::Element& request) const {
    const std::string& task_id = require_child_text(request, "sps:task");
    store_.task(task_id);  // UnknownTask for unknown ids
    const auto refs = assets_.result_references(task_id);
    xml::Element response("sps:DescribeResultAccessResponse");
    response.set_attr("version", kServiceVersion);
    response.set_attr("task", task_id);
    if (refs.empty()) {
      response.add_child(xml::Element("sps:none"));
      return response;
    }
    for (const auto& ref : refs) {
      xml::Element item("sps:ResultReference");
      item.set_attr("uri", ref.uri);
      item.set_attr("producedAt", format_instant(ref.produced_at));
      item.set_text(ref.description);
      response.add_child(std::move(item));
    }
    return response;
  }

  // ---- request decision and execution --------------------------------------

  assets::FeasibilityResult decide_request(tasks::TaskingRequest& req) {
    const ProcedureEntry& entry = resolve_procedure(req.procedure_id);
    const auto candidates = assets_.assets_for_procedure(entry.id);
    if (candidates.empty()) {
      throw SpsError(Errc::InvalidParameterValue,
                     "no asset offers procedure " + entry.id, entry.id);
    }

    assets::FeasibilityResult verdict;
    for (const auto* profile : candidates) {
      verdict = assets::check_feasibility(*profile, entry.description,
                                          req.parameters,
                                          assets_.blocked(profile->asset_id));
      if (verdict.feasible) break;
    }
    const std::string asset_id =
        verdict.feasible ? verdict.asset_id : candidates.front()->asset_id;

    if (req.kind == tasks::RequestKind::Feasibility) {
      req.status = tasks::RequestStatus::Accepted;
      req.reason = verdict.reason;
      set_request_status_triple(req);
      publish_request_event(topics::EventKind::TaskingRequestAcceptance, req);
      auto created = tasks::create_task(req, verdict.feasible, asset_id,
                                        store_.next_task_id(), clock_.now(),
                                        config_.reservation_lifetime);
      req.task_id = created.task.task_id;
      assets_.register_task(created.task.task_id);
      store_.put_task(created.task);
      graph_.insert_batch(rdf::translate_task(created.task, {}));
      return verdict;
    }

    if (!verdict.feasible) {
      req.status = tasks::RequestStatus::Rejected;
      req.alternatives = verdict.alternatives;
      req.reason = verdict.reason;
      set_request_status_triple(req);
      publish_request_event(topics::EventKind::TaskingRequestRejection, req);
      return verdict;
    }

    req.status = tasks::RequestStatus::Accepted;
    set_request_status_triple(req);
    publish_request_event(topics::EventKind::TaskingRequestAcceptance, req);

    auto created = tasks::create_task(req, true, asset_id, store_.next_task_id(),
                                      clock_.now(), config_.reservation_lifetime);
    tasks::Task& task = created.task;
    req.task_id = task.task_id;
    assets_.register_task(task.task_id);
    assets_.reserve_capacity(task.asset_id, task.task_id);
    store_.put_task(task);
    graph_.insert_batch(rdf::translate_task(task, {}));

    if (task.state == tasks::TaskState::InExecution) {
      start_execution(task);
    } else if (task.state == tasks::TaskState::Reserved) {
      schedule(*task.reservation_expiration, Action::Kind::ReservationExpiry,
               task.task_id);
    }
    for (const auto event : created.events) {
      publish_task_event(event, task, "request " + req.request_id + " accepted");
    }
    return verdict;
  }

  void start_execution(const tasks::Task& task) {
    const auto& profile = assets_.profile(task.asset_id);
    assets_.set_progress(task.task_id, 0);
    schedule(clock_.now() + profile.execution_duration / 2,
             Action::Kind::ExecutionMidpoint, task.task_id);
    schedule(clock_.now() + profile.execution_duration,
             Action::Kind::ExecutionFinish, task.task_id);
  }

  tasks::Command prepare_update(const tasks::Task& task, const xml::Element& request) {
    if (task.state != tasks::TaskState::Reserved &&
        task.state != tasks::TaskState::InExecution) {
      throw SpsError(Errc::IllegalTransition,
                     "Update not allowed in state " +
                         std::string(to_string(task.state)),
                     task.task_id);
    }
    const ProcedureEntry& entry = resolve_procedure(task.procedure_id);
    const xml::Element& holder = request.required_child("sps:taskingParameters");
    const xml::Element& data_el = holder.required_child("sps:ParameterData");
    swe::ParameterData new_params;
    try {
      new_params = swe::parameter_data_from_xml(entry.description, data_el);
    } catch (const SpsError& e) {
      switch (e.code()) {
        case Errc::LexicalError:
        case Errc::TokenCountMismatch:
        case Errc::UnknownSelector:
        case Errc::ConstraintViolation:
        case Errc::SchemaError:
          throw ValidationFailureError(e.message(), {}, e.locator());
        default:
          throw;
      }
    }

    // Only fields the description marks updatable may change.
    const auto updatable = entry.description.updatable_field_names();
    if (new_params.blocks.size() != task.parameters.blocks.size()) {
      throw UpdateNotFeasibleError("update may not change the block count", {},
                                   task.task_id);
    }
    for (std::size_t b = 0; b < new_params.blocks.size(); ++b) {
      for (const auto& f : entry.description.fields) {
        const swe::Value* old_value = swe::find_value(task.parameters.blocks[b], f.name);
        const swe::Value* new_value = swe::find_value(new_params.blocks[b], f.name);
        const bool changed =
            (old_value == nullptr) != (new_value == nullptr) ||
            (old_value && new_value && !(*old_value == *new_value));
        if (changed && !updatable.count(f.name)) {
          throw UpdateNotFeasibleError(
              "field '" + f.name + "' is not updatable for procedure " + entry.id,
              {}, task.task_id);
        }
      }
    }

    // Re-run the asset feasibility check with the task's own capacity unit
    // discounted.
    const auto& profile = assets_.profile(task.asset_id);
    const int blocked = assets_.blocked(task.asset_id);
    const auto verdict = assets::check_feasibility(
        profile, entry.description, new_params, blocked > 0 ? blocked - 1 : 0);
    if (!verdict.feasible) {
      std::vector<std::string> rendered;
      for (const auto& alt : verdict.alternatives) {
        rendered.push_back(swe::encode_parameter_data(entry.description, alt));
      }
      throw UpdateNotFeasibleError(
          "updated parameters are not feasible: " + verdict.reason,
          std::move(rendered), task.task_id);
    }
    return tasks::Command::update(std::move(new_params));
  }

  // ---- shared helpers -------------------------------------------------------

  void validate_envelope(const xml::Element& request) const {
    if (request.name.rfind("sps:", 0) != 0) {
      throw SpsError(Errc::OperationNotSupported,
                     "operations live in the sps namespace", request.name);
    }
    if (const std::string* service = request.attr("service")) {
      if (*service != "SPS") {
        throw SpsError(Errc::InvalidParameterValue, "service must be SPS",
                       "service");
      }
    }
    if (const std::string* version = request.attr("version")) {
      if (*version != kServiceVersion) {
        throw SpsError(Errc::InvalidParameterValue,
                       "unsupported version " + *version, "version");
      }
    }
  }

  const ProcedureEntry& resolve_procedure(std::string_view procedure_id) const {
    const ProcedureEntry* entry = config_.procedure(procedure_id);
    if (!entry) {
      throw SpsError(Errc::InvalidParameterValue,
                     "unknown procedure '" + std::string(procedure_id) + "'",
                     std::string(procedure_id));
    }
    return *entry;
  }

  static const std::string& require_child_text(const xml::Element& request,
                                               std::string_view child_name) {
    const xml::Element& child = request.required_child(child_name);
    if (child.text.empty()) {
      throw SpsError(Errc::InvalidRequest,
                     "<" + std::string(child_name) + "> is empty",
                     request.name);
    }
    return child.text;
  }

  static std::string trimmed(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  int task_percent(const tasks::Task& task) const {
    if (task.state == tasks::TaskState::Completed) return 100;
    return assets_.progress(task.task_id);
  }

  bool task_data_available(const tasks::Task& task) const {
    try {
      return !assets_.result_references(task.task_id).empty();
    } catch (const SpsError&) {
      return false;
    }
  }

  topics::StatusReport report_for(const tasks::Task& task) const {
    return tasks::make_status_report(task, clock_.now(), task_percent(task),
                                     task_data_available(task));
  }

  xml::Element status_report_xml(const tasks::Task& task) const {
    const bool reservation = task.state == tasks::TaskState::Reserved;
    return topics::report_to_xml(
        report_for(task), task.reservation_expiration,
        reservation ? topics::MessageType::ReservationReport
                    : topics::MessageType::StatusReport);
  }

  void publish_task_event(topics::EventKind kind, const tasks::Task& task,
                          std::string message) {
    topics::StatusReport report = report_for(task);
    report.message = std::move(message);
    std::optional<Instant> expiration;
    if (topics::topic_for_event(kind).message_type ==
        topics::MessageType::ReservationReport) {
      // ReservationReport payloads carry the (last known) expiration.
      expiration = task.reservation_expiration;
      if (!expiration) expiration = clock_.now();
    }
    hub_.publish(kind, std::move(report), clock_.now(), expiration);
  }

  void publish_request_event(topics::EventKind kind, const tasks::TaskingRequest& req) {
    topics::StatusReport report;
    report.task_id = req.task_id;
    report.request_id = req.request_id;
    report.state = std::string(to_string(req.status));
    report.percent_completion = 0;
    report.message = req.reason;
    report.timestamp = clock_.now();
    report.data_available = false;
    hub_.publish(kind, std::move(report), clock_.now());
  }

  void set_request_status_triple(const tasks::TaskingRequest& req) {
    graph_.update_functional(rdf::request_subject(req), rdf::sps_term("status"),
                             rdf::Term::literal(std::string(to_string(req.status))));
  }

  void update_task_graph(const tasks::Task& task) {
    graph_.update_functional(rdf::task_subject(task), rdf::sps_term("status"),
                             rdf::Term::literal(std::string(to_string(task.state))));
  }

  xml::Element alternatives_xml(const std::string& procedure_id,
                                const std::vector<swe::ParameterData>& alts) const {
    const ProcedureEntry& entry = resolve_procedure(procedure_id);
    xml::Element out("sps:alternatives");
    for (const auto& alt : alts) {
      out.add_child(swe::parameter_data_to_xml(entry.description, alt));
    }
    return out;
  }

  xml::Element tasking_response(
      tasks::RequestKind kind, const tasks::TaskingRequest& req,
      const std::vector<swe::ParameterData>& verdict_alternatives) const {
    std::string name = "sps:";
    name += to_string(kind);
    name += "Response";
    xml::Element response(name);
    response.set_attr("version", kServiceVersion);
    response.set_attr("request", req.request_id);
    response.set_attr("status", std::string(to_string(req.status)));
    if (!req.task_id.empty()) {
      response.set_attr("task", req.task_id);
      const tasks::Task& task = store_.task(req.task_id);
      response.set_attr("state", std::string(to_string(task.state)));
      if (kind == tasks::RequestKind::Feasibility) {
        response.set_attr("feasible",
                          task.state == tasks::TaskState::Feasible ? "true"
                                                                   : "false");
      }
      if (task.reservation_expiration) {
        response.set_attr("reservationExpiration",
                          format_instant(*task.reservation_expiration));
      }
    }
    if (!req.reason.empty()) {
      response.add_child(xml::Element("sps:reason").set_text(req.reason));
    }
    const auto& alternatives =
        req.alternatives.empty() ? verdict_alternatives : req.alternatives;
    if (!alternatives.empty()) {
      response.add_child(alternatives_xml(req.procedure_id, alternatives));
    }
    return response;
  }

  ServiceConfig config_;
  mutable std::mutex mutex_;
  tasks::VirtualClock clock_;
  tasks::TaskStore store_;
  assets::AssetRegistry assets_;
  topics::NotificationHub hub_;
  rdf::TripleStore graph_;
  std::priority_queue<Action, std::vector<Action>, std::greater<Action>> schedule_;
  std::uint64_t action_counter_ = 0;
};

}  // namespace spsweb::service

#endif  // SPSWEB_ENGINE_HPP
