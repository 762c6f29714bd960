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

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "spsweb/client.hpp"

using namespace spsweb;
using cli::Assignment;
using cli::Client;
using cli::OpResult;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNetwork = 2;
constexpr int kExitService = 3;
constexpr int kExitLocal = 4;

struct Options {
  std::string endpoint = "http://localhost:8484/sps";
  std::string output = "summary";
  int timeout_seconds = 10;
  bool xml() const { return output == "xml"; }
};

int report_network() {
  std::fprintf(stderr, "sps_cli: network failure (endpoint unreachable)\n");
  return kExitNetwork;
}

int report_service_error(const OpResult& result, const Options& opts) {
  std::fprintf(stderr, "sps_cli: service exception %s: %s\n",
               result.error.code.c_str(), result.error.message.c_str());
  if (opts.xml() && !result.raw.empty()) std::fputs(result.raw.c_str(), stdout);
  return kExitService;
}

/// Renders an Ok result; `summary` turns the response document into lines.
template <typename SummaryFn>
int render(const OpResult& result, const Options& opts, SummaryFn summary) {
  switch (result.kind) {
    case OpResult::Kind::NetworkError:
      return report_network();
    case OpResult::Kind::ServiceError:
      return report_service_error(result, opts);
    case OpResult::Kind::Ok:
      break;
  }
  if (opts.xml()) {
    std::fputs(result.raw.c_str(), stdout);
  } else {
    std::fputs(summary(result.doc).c_str(), stdout);
  }
  return kExitOk;
}

std::string describe_status_report(const xml::Element& report) {
  std::string out = report.attr_or("task", "-");
  out += " state=" + report.attr_or("state", "?");
  out += " percent=" + report.attr_or("percentCompletion", "?");
  out += " dataAvailable=" + report.attr_or("dataAvailable", "?");
  if (const std::string* exp = report.attr("reservationExpiration")) {
    out += " reservationExpiration=" + *exp;
  }
  if (!report.text.empty()) out += " message=\"" + report.text + "\"";
  return out;
}

const xml::Element* find_report(const xml::Element& doc) {
  if (const xml::Element* r = doc.child("sps:StatusReport")) return r;
  return doc.child("sps:ReservationReport");
}

std::string summarize_command_response(const xml::Element& doc) {
  const xml::Element* report = find_report(doc);
  return report ? describe_status_report(*report) + "\n" : "ok\n";
}

std::string summarize_tasking_response(const xml::Element& doc) {
  std::string out = "request " + doc.attr_or("request", "?") + " " +
                    doc.attr_or("status", "?");
  if (const std::string* feasible = doc.attr("feasible")) {
    out += std::string(" feasible=") + *feasible;
  }
  if (const std::string* task = doc.attr("task")) {
    out += " task " + *task;
    if (const std::string* state = doc.attr("state")) out += " " + *state;
  }
  if (const std::string* exp = doc.attr("reservationExpiration")) {
    out += " reservationExpiration=" + *exp;
  }
  out += "\n";
  if (const xml::Element* reason = doc.child("sps:reason")) {
    out += "reason: " + reason->text + "\n";
  }
  if (const xml::Element* alts = doc.child("sps:alternatives")) {
    out += "alternatives: " + std::to_string(alts->children.size()) + "\n";
  }
  return out;
}

swe::ParameterDescription fetch_description_or_throw(Client& client,
                                                     const std::string& procedure) {
  return client.fetch_description(procedure);
}

/// Builds ParameterData for a tasking operation, shared by the feasibility,
/// submit, and reserve subcommands.
swe::ParameterData build_data(Client& client, const std::string& procedure,
                              const std::vector<std::string>& raw_assignments,
                              bool synthesize,
                              swe::ParameterDescription* out_desc) {
  const auto desc = fetch_description_or_throw(client, procedure);
  const auto assignments = cli::parse_assignments(raw_assignments);
  auto data = cli::build_parameter_data(desc, assignments, synthesize);
  if (out_desc) *out_desc = desc;
  return data;
}

// ---------------------------------------------------------------------------
// workflow: the end-to-end client-server interaction in one invocation.

struct WorkflowFailure {
  int exit_code;
  std::string message;
};

const OpResult& require_ok(const OpResult& result, const std::string& step) {
  if (result.kind == OpResult::Kind::NetworkError) {
    throw WorkflowFailure{kExitNetwork, step + ": network failure"};
  }
  if (result.kind == OpResult::Kind::ServiceError) {
    throw WorkflowFailure{kExitService, step + ": " + result.error.code + " " +
                                            result.error.message};
  }
  return result;
}

int run_workflow(Client& client, const std::string& procedure_arg,
                 const std::vector<std::string>& raw_assignments,
                 bool cancel_midway) {
  try {
    int step = 0;
    const auto say = [&step](const std::string& line) {
      ++step;
      std::printf("[%d/6] %s\n", step, line.c_str());
    };

    // capabilities
    OpResult caps = client.post_operation(cli::make_operation("GetCapabilities"));
    require_ok(caps, "capabilities");
    std::string procedure = procedure_arg;
    std::string asset;
    long duration_seconds = 0;
    {
      const xml::Element& contents = caps.doc.required_child("sps:contents");
      const xml::Element* chosen = nullptr;
      for (const auto& offering : contents.children) {
        if (offering.name != "sps:offering") continue;
        if (procedure.empty() || offering.attr_or("procedure", "") == procedure) {
          chosen = &offering;
          break;
        }
      }
      if (!chosen) {
        throw WorkflowFailure{kExitService,
                              "capabilities list no offering for " + procedure};
      }
      procedure = chosen->attr_or("procedure", procedure);
      asset = chosen->attr_or("asset", "?");
      duration_seconds = std::stol(chosen->attr_or("executionDuration", "0"));
      const xml::Element* title_el =
          caps.doc.required_child("sps:serviceIdentification").child("sps:title");
      say("capabilities: service '" + (title_el ? title_el->text : "?") +
          "' offers " + std::to_string(contents.children.size()) +
          " offering(s); using " + procedure + " via " + asset);
    }

    // describe-tasking
    const auto desc = fetch_description_or_throw(client, procedure);
    {
      std::string updatable;
      for (const auto& name : desc.updatable_field_names()) {
        if (!updatable.empty()) updatable += ", ";
        updatable += name;
      }
      say("describe-tasking: " + procedure + " has " +
          std::to_string(desc.fields.size()) + " field(s)" +
          (updatable.empty() ? "" : " (updatable: " + updatable + ")"));
    }

    // feasibility, adopting an alternative when the guessed span misses
    auto data = cli::build_parameter_data(
        desc, cli::parse_assignments(raw_assignments), true);
    std::string feasibility_note;
    OpResult feas = client.post_operation(
        cli::make_tasking_request("GetFeasibility", desc, data));
    require_ok(feas, "feasibility");
    if (feas.doc.attr_or("feasible", "false") != "true") {
      const xml::Element* alts = feas.doc.child("sps:alternatives");
      if (!alts || alts->children.empty()) {
        throw WorkflowFailure{kExitService,
                              "feasibility: infeasible and no alternatives offered"};
      }
      data = swe::parameter_data_from_xml(desc, alts->children.front());
      feasibility_note = "initial request infeasible; adopted alternative 1; ";
      feas = client.post_operation(
          cli::make_tasking_request("GetFeasibility", desc, data));
      require_ok(feas, "feasibility");
      if (feas.doc.attr_or("feasible", "false") != "true") {
        throw WorkflowFailure{kExitService,
                              "feasibility: alternative still infeasible"};
      }
    }
    say("feasibility: " + feasibility_note + "feasible (study task " +
        feas.doc.attr_or("task", "?") + ")");

    // submit
    OpResult submit =
        client.post_operation(cli::make_tasking_request("Submit", desc, data));
    require_ok(submit, "submit");
    if (submit.doc.attr_or("status", "") != "Accepted") {
      throw WorkflowFailure{kExitService, "submit: request not accepted"};
    }
    const std::string task_id = submit.doc.attr_or("task", "");
    say("submit: request " + submit.doc.attr_or("request", "?") +
        " Accepted, task " + task_id + " " + submit.doc.attr_or("state", "?"));

    // status + notifications under the virtual clock
    OpResult sub = client.subscribe("TaskEvent");
    require_ok(sub, "subscribe");
    const std::string subscription = sub.doc.attr_or("subscription", "?");
    const long advance_by =
        cancel_midway ? duration_seconds / 2 : duration_seconds;
    OpResult advanced = client.advance_clock(static_cast<double>(advance_by));
    if (advanced.kind == OpResult::Kind::ServiceError) {
      throw WorkflowFailure{kExitService,
                            "clock advance: " + advanced.error.code +
                                " (is debugClock enabled in the service config?)"};
    }
    require_ok(advanced, "clock advance");
    if (cancel_midway) {
      require_ok(client.post_operation(cli::make_task_operation("Cancel", task_id)),
                 "cancel");
    }
    OpResult status =
        client.post_operation(cli::make_task_operation("GetStatus", task_id));
    require_ok(status, "status");
    const xml::Element* report = find_report(status.doc);
    OpResult drained = client.drain(subscription);
    require_ok(drained, "drain");
    std::string notes;
    for (const auto& item : drained.doc.children) {
      if (item.name != "sps:Notification") continue;
      if (!notes.empty()) notes += ", ";
      notes += item.attr_or("topic", "?") + "#" + item.attr_or("sequence", "?");
    }
    say("status: subscribed " + subscription + " to TaskEvent; advanced clock by " +
        std::to_string(advance_by) + "s (virtual now " +
        advanced.doc.attr_or("now", "?") + "); task " + task_id + " " +
        (report ? report->attr_or("state", "?") : "?") + " (" +
        (report ? report->attr_or("percentCompletion", "?") : "?") +
        "%); notifications: " + (notes.empty() ? "none" : notes));

    // results
    OpResult results = client.post_operation(
        cli::make_task_operation("DescribeResultAccess", task_id));
    require_ok(results, "results");
    std::string uris;
    int count = 0;
    for (const auto& ref : results.doc.children) {
      if (ref.name != "sps:ResultReference") continue;
      ++count;
      if (!uris.empty()) uris += ", ";
      uris += ref.attr_or("uri", "?");
    }
    if (count == 0) {
      throw WorkflowFailure{kExitService, "results: no data references returned"};
    }
    say("results: " + std::to_string(count) + " reference(s): " + uris);
    std::printf("workflow complete\n");
    return kExitOk;
  } catch (const WorkflowFailure& failure) {
    std::fprintf(stderr, "sps_cli: workflow failed: %s\n", failure.message.c_str());
    return failure.exit_code;
  } catch (const SpsError& e) {
    std::fprintf(stderr, "sps_cli: workflow failed: %s\n", e.what());
    return kExitLocal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  Options opts;
  CLI::App app{"Client for the sensor planning service"};
  app.require_subcommand(1);
  app.add_option("--endpoint", opts.endpoint, "service endpoint URL")
      ->capture_default_str();
  app.add_option("--output", opts.output, "output mode: xml or summary")
      ->check(CLI::IsMember({"xml", "summary"}))
      ->capture_default_str();
  app.add_option("--timeout", opts.timeout_seconds, "HTTP timeout in seconds")
      ->capture_default_str();

  std::string procedure;
  std::string task_id;
  std::string request_id;
  std::string topic;
  std::string subscription;
  std::string reuse_task;
  std::vector<std::string> params;
  bool cancel_midway = false;
  int wait_seconds = 0;

  CLI::App* cmd_capabilities = app.add_subcommand("capabilities", "service metadata");
  CLI::App* cmd_describe_sensor =
      app.add_subcommand("describe-sensor", "stored sensor description");
  cmd_describe_sensor->add_option("--procedure", procedure)->required();
  CLI::App* cmd_describe_tasking =
      app.add_subcommand("describe-tasking", "tasking parameter description");
  cmd_describe_tasking->add_option("--procedure", procedure)->required();

  const auto add_tasking = [&](const char* name, const char* help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->add_option("--procedure", procedure)->required();
    cmd->add_option("params", params,
                    "field assignments: name=value, choice name=branch:v1,v2,..., "
                    "vector name=v1,v2,...");
    return cmd;
  };
  CLI::App* cmd_feasibility = add_tasking("feasibility", "run a feasibility study");
  CLI::App* cmd_submit = add_tasking("submit", "submit a task for execution");
  cmd_submit->add_option("--reuse-task", reuse_task,
                         "attempt to reference an earlier task id");
  CLI::App* cmd_reserve = add_tasking("reserve", "reserve a task");

  CLI::App* cmd_confirm = app.add_subcommand("confirm", "confirm a reservation");
  cmd_confirm->add_option("--task", task_id)->required();
  CLI::App* cmd_update = app.add_subcommand("update", "update task parameters");
  cmd_update->add_option("--task", task_id)->required();
  cmd_update->add_option("params", params, "field assignments to change");
  CLI::App* cmd_cancel = app.add_subcommand("cancel", "cancel a task");
  cmd_cancel->add_option("--task", task_id)->required();

  CLI::App* cmd_status = app.add_subcommand("status", "task or request status");
  cmd_status->add_option("--task", task_id);
  cmd_status->add_option("--request", request_id);
  CLI::App* cmd_task = app.add_subcommand("task", "full task record");
  cmd_task->add_option("--task", task_id)->required();
  CLI::App* cmd_results =
      app.add_subcommand("results", "references to produced data");
  cmd_results->add_option("--task", task_id)->required();

  CLI::App* cmd_topics = app.add_subcommand("topics", "notification topic namespace");
  CLI::App* cmd_subscribe = app.add_subcommand("subscribe", "create a subscription");
  cmd_subscribe->add_option("--topic", topic)->required();
  CLI::App* cmd_drain = app.add_subcommand("drain", "drain pending notifications");
  cmd_drain->add_option("--subscription", subscription)->required();
  cmd_drain->add_option("--wait", wait_seconds,
                        "poll up to this many seconds for events");

  CLI::App* cmd_workflow = app.add_subcommand(
      "workflow", "capabilities through results in one invocation");
  cmd_workflow->add_option("--procedure", procedure);
  cmd_workflow->add_option("params", params, "field assignments");
  cmd_workflow->add_flag("--cancel-midway", cancel_midway,
                         "cancel the task halfway through execution");

  CLI11_PARSE(app, argc, argv);

  try {
    Client client(cli::Endpoint::parse(opts.endpoint), opts.timeout_seconds);

    if (cmd_capabilities->parsed()) {
      return render(client.post_operation(cli::make_operation("GetCapabilities")),
                    opts, [](const xml::Element& doc) {
                      std::string out;
                      const xml::Element& ident =
                          doc.required_child("sps:serviceIdentification");
                      if (const auto* title = ident.child("sps:title")) {
                        out += "service: " + title->text + "\n";
                      }
                      out += "operations:";
                      for (const auto& op :
                           doc.required_child("sps:operations").children) {
                        out += " " + op.attr_or("name", "?");
                      }
                      out += "\nofferings:\n";
                      for (const auto& off :
                           doc.required_child("sps:contents").children) {
                        out += "  " + off.attr_or("procedure", "?") + " via " +
                               off.attr_or("asset", "?") + " (executionDuration " +
                               off.attr_or("executionDuration", "?") + "s)\n";
                      }
                      return out;
                    });
    }

    if (cmd_describe_sensor->parsed()) {
      return render(client.post_operation(
                        cli::make_procedure_operation("DescribeSensor", procedure)),
                    opts, [&](const xml::Element& doc) {
                      return "sensor document for " + procedure + ": <" + doc.name +
                             "> with " + std::to_string(doc.children.size()) +
                             " child element(s)\n";
                    });
    }

    if (cmd_describe_tasking->parsed()) {
      return render(
          client.post_operation(
              cli::make_procedure_operation("DescribeTasking", procedure)),
          opts, [](const xml::Element& doc) {
            std::string out;
            const xml::Element& desc_el =
                doc.required_child("sps:ParameterDescription");
            out += "procedure: " + desc_el.attr_or("procedure", "?") + "\n";
            for (const auto& f : desc_el.children) {
              if (f.name != "sps:field") continue;
              out += "  " + f.attr_or("name", "?") + ": " + f.attr_or("kind", "?");
              if (f.attr_or("optional", "false") == "true") out += " [optional]";
              if (f.attr_or("updatable", "false") == "true") out += " [updatable]";
              out += "\n";
            }
            return out;
          });
    }

    const auto tasking = [&](const char* op_name) -> int {
      swe::ParameterDescription desc;
      const auto data = build_data(client, procedure, params, false, &desc);
      return render(
          client.post_operation(cli::make_tasking_request(op_name, desc, data)),
          opts, summarize_tasking_response);
    };
    if (cmd_feasibility->parsed()) return tasking("GetFeasibility");
    if (cmd_submit->parsed()) {
      if (!reuse_task.empty()) {
        xml::Element op = cli::make_procedure_operation("Submit", procedure);
        op.add_child(xml::Element("sps:task").set_text(reuse_task));
        return render(client.post_operation(op), opts, summarize_tasking_response);
      }
      return tasking("Submit");
    }
    if (cmd_reserve->parsed()) return tasking("Reserve");

    if (cmd_confirm->parsed()) {
      return render(client.post_operation(cli::make_task_operation("Confirm", task_id)),
                    opts, summarize_command_response);
    }
    if (cmd_cancel->parsed()) {
      return render(client.post_operation(cli::make_task_operation("Cancel", task_id)),
                    opts, summarize_command_response);
    }

    if (cmd_update->parsed()) {
      // Start from the task's current parameters and overlay the assignments.
      OpResult current =
          client.post_operation(cli::make_task_operation("GetTask", task_id));
      if (current.kind == OpResult::Kind::NetworkError) return report_network();
      if (current.kind == OpResult::Kind::ServiceError) {
        return report_service_error(current, opts);
      }
      const xml::Element& record = current.doc.required_child("sps:Task");
      const auto desc =
          fetch_description_or_throw(client, record.attr_or("procedure", ""));
      const auto data = swe::parameter_data_from_xml(
          desc, record.required_child("sps:taskingParameters")
                    .required_child("sps:ParameterData"));
      if (data.blocks.size() != 1) {
        throw SpsError(Errc::InvalidParameterValue,
                       "update supports single-block tasks only", task_id);
      }
      std::vector<Assignment> merged;
      for (const auto& f : desc.fields) {
        if (const swe::Value* v = swe::find_value(data.blocks[0], f.name)) {
          merged.push_back({f.name, cli::value_to_assignment(f, *v)});
        }
      }
      for (const auto& given : cli::parse_assignments(params)) {
        bool replaced = false;
        for (auto& a : merged) {
          if (a.name == given.name) {
            a.value = given.value;
            replaced = true;
          }
        }
        if (!replaced) merged.push_back(given);
      }
      const auto new_data = cli::build_parameter_data(desc, merged, false);
      xml::Element op = cli::make_task_operation("Update", task_id);
      xml::Element holder("sps:taskingParameters");
      holder.add_child(swe::parameter_data_to_xml(desc, new_data));
      op.add_child(std::move(holder));
      return render(client.post_operation(op), opts, summarize_command_response);
    }

    if (cmd_status->parsed()) {
      if (task_id.empty() == request_id.empty()) {
        throw SpsError(Errc::InvalidParameterValue,
                       "status needs exactly one of --task / --request");
      }
      xml::Element op = cli::make_operation("GetStatus");
      if (!task_id.empty()) {
        op.add_child(xml::Element("sps:task").set_text(task_id));
      } else {
        op.add_child(xml::Element("sps:request").set_text(request_id));
      }
      return render(client.post_operation(op), opts, [](const xml::Element& doc) {
        if (const xml::Element* report = find_report(doc)) {
          return describe_status_report(*report) + "\n";
        }
        if (const xml::Element* rs = doc.child("sps:RequestStatus")) {
          std::string out = rs->attr_or("request", "?") + " " +
                            rs->attr_or("kind", "?") + " status=" +
                            rs->attr_or("status", "?");
          if (const std::string* task = rs->attr("task")) out += " task=" + *task;
          out += "\n";
          if (const xml::Element* reason = rs->child("sps:reason")) {
            out += "reason: " + reason->text + "\n";
          }
          if (const xml::Element* alts = rs->child("sps:alternatives")) {
            out += "alternatives: " + std::to_string(alts->children.size()) + "\n";
          }
          return out;
        }
        return std::string("ok\n");
      });
    }

    if (cmd_task->parsed()) {
      return render(client.post_operation(cli::make_task_operation("GetTask", task_id)),
                    opts, [](const xml::Element& doc) {
                      const xml::Element& record = doc.required_child("sps:Task");
                      std::string out = record.attr_or("id", "?") + " kind=" +
                                        record.attr_or("kind", "?") + " state=" +
                                        record.attr_or("state", "?") + " asset=" +
                                        record.attr_or("asset", "?") + "\n";
                      if (const xml::Element* history = record.child("sps:history")) {
                        for (const auto& ev : history->children) {
                          out += "  " + ev.attr_or("at", "?") + "  " + ev.text + "\n";
                        }
                      }
                      return out;
                    });
    }

    if (cmd_results->parsed()) {
      return render(
          client.post_operation(
              cli::make_task_operation("DescribeResultAccess", task_id)),
          opts, [](const xml::Element& doc) {
            std::string out;
            int count = 0;
            for (const auto& ref : doc.children) {
              if (ref.name != "sps:ResultReference") continue;
              ++count;
              out += ref.attr_or("uri", "?") + " producedAt=" +
                     ref.attr_or("producedAt", "?") + "\n";
            }
            if (count == 0) out = "no data produced yet\n";
            return out;
          });
    }

    if (cmd_topics->parsed()) {
      const OpResult result =
          client.get(client.endpoint().sps_path() + "/topics");
      return render(result, opts, [](const xml::Element& doc) {
        std::string out;
        for (const auto& parent : doc.children) {
          out += parent.attr_or("name", "?") + "\n";
          for (const auto& leaf : parent.children) {
            out += "  " + leaf.attr_or("name", "?") + " (" +
                   leaf.attr_or("messageTypes", "?") + ")\n";
          }
        }
        return out;
      });
    }

    if (cmd_subscribe->parsed()) {
      return render(client.subscribe(topic), opts, [](const xml::Element& doc) {
        return doc.attr_or("subscription", "?") + " on " + doc.attr_or("topic", "?") +
               "\n";
      });
    }

    if (cmd_drain->parsed()) {
      const auto deadline = std::chrono::steady_clock::now() +
                            std::chrono::seconds(wait_seconds);
      for (;;) {
        OpResult result = client.drain(subscription);
        if (result.kind != OpResult::Kind::Ok) {
          return result.kind == OpResult::Kind::NetworkError
                     ? report_network()
                     : report_service_error(result, opts);
        }
        const bool any = !result.doc.children.empty();
        if (any || std::chrono::steady_clock::now() >= deadline) {
          return render(result, opts, [](const xml::Element& doc) {
            std::string out;
            for (const auto& item : doc.children) {
              if (item.name != "sps:Notification") continue;
              out += item.attr_or("topic", "?") + "#" +
                     item.attr_or("sequence", "?") + " at " +
                     item.attr_or("emittedAt", "?");
              if (!item.children.empty()) {
                out += ": " + describe_status_report(item.children.front());
              }
              out += "\n";
            }
            if (out.empty()) out = "no pending events\n";
            return out;
          });
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
      }
    }

    if (cmd_workflow->parsed()) {
      return run_workflow(client, procedure, params, cancel_midway);
    }
  } catch (const SpsError& e) {
    std::fprintf(stderr, "sps_cli: %s\n", e.what());
    return kExitLocal;
  }
  return kExitLocal;
}
