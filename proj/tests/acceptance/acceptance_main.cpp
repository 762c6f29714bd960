// Acceptance suite: runs every acceptance criterion end to end and prints
// one pass/fail line each. Criteria 5 and 8 drive the real server and CLI
// binaries; everything else runs in process. Exit code = number of failures.
//
// Usage: spsweb_acceptance <sps_server> <sps_cli> <config.json>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "spsweb/client.hpp"
#include "spsweb/engine.hpp"
#include "spsweb/http_service.hpp"
#include "support/engine_fixtures.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/rdf_random.hpp"

using namespace spsweb;

namespace {

struct CriterionResult {
  bool passed = false;
  std::string detail;
};

struct Check {
  bool ok = true;
  std::string first_failure;

  void require(bool condition, const std::string& what) {
    if (!condition && ok) {
      ok = false;
      first_failure = what;
    }
  }
};

std::string g_server_path;
std::string g_cli_path;
std::string g_config_path;
constexpr int kServerPort = 18484;

// ---------------------------------------------------------------------------
// child process helpers

pid_t spawn_server(int port) {
  const pid_t pid = fork();
  if (pid == 0) {
    const std::string port_str = std::to_string(port);
    // Quiet the child's stderr so transcripts stay clean.
    if (!std::freopen("/dev/null", "w", stderr)) std::_Exit(126);
    execl(g_server_path.c_str(), g_server_path.c_str(), "--config",
          g_config_path.c_str(), "--port", port_str.c_str(),
          static_cast<char*>(nullptr));
    std::_Exit(127);
  }
  return pid;
}

bool wait_for_server(int port, int max_ms) {
  httplib::Client probe("127.0.0.1", port);
  probe.set_connection_timeout(0, 200000);
  for (int waited = 0; waited < max_ms; waited += 100) {
    auto res = probe.Get("/sps?service=SPS&request=GetCapabilities");
    if (res && res->status == 200) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  return false;
}

void stop_server(pid_t pid) {
  if (pid <= 0) return;
  kill(pid, SIGTERM);
  int status = 0;
  for (int waited = 0; waited < 3000; waited += 50) {
    if (waitpid(pid, &status, WNOHANG) == pid) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  kill(pid, SIGKILL);
  waitpid(pid, &status, 0);
}

struct CliRun {
  int exit_code = -1;
  std::string output;
};

CliRun run_cli(const std::string& args) {
  CliRun run;
  const std::string cmd = g_cli_path + " --endpoint http://127.0.0.1:" +
                          std::to_string(kServerPort) + "/sps " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return run;
  char buffer[4096];
  std::size_t n = 0;
  while ((n = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) {
    run.output.append(buffer, n);
  }
  const int status = pclose(pipe);
  run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return run;
}

// ---------------------------------------------------------------------------
// criteria

CriterionResult criterion_listing_fidelity() {
  Check c;
  const auto desc = testing::imager_description();
  const std::string values = testing::kImagerValues;

  int tokens = 1;
  for (std::size_t i = 0; i + 1 <= values.size(); ++i) {
    if (values[i] == ',') ++tokens;
  }
  c.require(tokens == 9, "value string should hold 9 tokens");

  const auto data = swe::decode_parameter_data(desc, swe::TextEncodingSpec{}, values);
  c.require(data.blocks.size() == 1, "expected exactly 1 block");
  c.require(data.blocks[0] == testing::imager_block(),
            "decoded block differs from the expected typed fields");
  c.require(swe::encode_parameter_data(desc, data) == values,
            "re-encoding is not byte-identical");
  return {c.ok, c.first_failure};
}

CriterionResult criterion_codec_roundtrip() {
  Check c;
  testing::Rng rng(424242);
  for (int i = 0; i < 1000 && c.ok; ++i) {
    const auto desc = testing::random_description(rng);
    const auto data = testing::random_data(desc, rng);
    const std::string text = swe::encode_parameter_data(desc, data);
    const auto decoded = swe::decode_parameter_data(desc, data.encoding, text);
    c.require(decoded == data,
              "round-trip mismatch on pair " + std::to_string(i) + " (" + text + ")");
  }
  return {c.ok, c.first_failure};
}

CriterionResult criterion_topic_namespace() {
  Check c;
  service::Engine engine(testing::make_test_config());
  httplib::Server server;
  service::register_routes(server, engine);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client http("127.0.0.1", port);
  auto res = http.Get("/sps/topics");
  c.require(res && res->status == 200, "GET /sps/topics failed");
  if (res) {
    const auto doc = xml::parse(res->body);
    c.require(doc.children.size() == 2, "expected 2 parent topics");
    int leaves = 0;
    std::set<std::string> reservation_typed;
    for (const auto& parent : doc.children) {
      for (const auto& leaf : parent.children) {
        ++leaves;
        const std::string type = leaf.attr_or("messageTypes", "");
        if (type == "sps:ReservationReport") {
          reservation_typed.insert(leaf.attr_or("name", ""));
        } else {
          c.require(type == "sps:StatusReport",
                    "leaf " + leaf.attr_or("name", "?") + " has bad messageTypes");
        }
      }
    }
    c.require(leaves == 13, "expected 13 leaf topics");
    c.require(reservation_typed ==
                  std::set<std::string>{"TaskReservation", "ReservationExpiration"},
              "ReservationReport must be on exactly TaskReservation and "
              "ReservationExpiration");
  }
  server.stop();
  thread.join();
  return {c.ok, c.first_failure};
}

CriterionResult criterion_lifecycle() {
  Check c;

  // Exhaustive (state, command) enumeration against the hand-built table.
  using tasks::Command;
  using tasks::TaskState;
  const std::map<std::pair<TaskState, Command::Kind>, TaskState> legal = {
      {{TaskState::Reserved, Command::Kind::Confirm}, TaskState::InExecution},
      {{TaskState::Reserved, Command::Kind::Cancel}, TaskState::Cancelled},
      {{TaskState::Reserved, Command::Kind::Update}, TaskState::Reserved},
      {{TaskState::Reserved, Command::Kind::ExpireReservation},
       TaskState::ReservationExpired},
      {{TaskState::InExecution, Command::Kind::Cancel}, TaskState::Cancelled},
      {{TaskState::InExecution, Command::Kind::Update}, TaskState::InExecution},
      {{TaskState::InExecution, Command::Kind::ExecutionCompleted},
       TaskState::Completed},
      {{TaskState::InExecution, Command::Kind::ExecutionFailed}, TaskState::Failed},
  };
  for (const TaskState state : tasks::kAllTaskStates) {
    for (const Command::Kind kind : tasks::kAllCommandKinds) {
      tasks::Task task;
      task.task_id = "task_1";
      task.kind = tasks::TaskKind::Submission;
      task.state = state;
      task.parameters = testing::imager_data();
      task.asset_id = "asset-imager-1";
      task.created_at = 0;
      task.history.push_back({0, "Created"});
      if (state == TaskState::Reserved) task.reservation_expiration = 60000;

      Command command{kind, std::nullopt};
      if (kind == Command::Kind::Update) {
        command = Command::update(testing::imager_data());
      }
      const auto expected = legal.find({state, kind});
      try {
        const auto outcome = tasks::transition(task, command, 60000);
        c.require(expected != legal.end(),
                  std::string("unexpectedly legal: ") +
                      std::string(to_string(state)) + " + " +
                      std::string(to_string(kind)));
        if (expected != legal.end()) {
          c.require(outcome.task.state == expected->second,
                    "wrong target state for " + std::string(to_string(state)) +
                        " + " + std::string(to_string(kind)));
        }
      } catch (const SpsError& e) {
        c.require(expected == legal.end() && e.code() == Errc::IllegalTransition,
                  std::string("expected legal transition, got ") +
                      std::string(errc_name(e.code())) + " for " +
                      std::string(to_string(state)) + " + " +
                      std::string(to_string(kind)));
        c.require(task.state == state && task.history.size() == 1,
                  "rejected command must leave the task unchanged");
      }
    }
  }

  // Reservation expiry at exactly +60 under the virtual clock, with capacity
  // returning to its pre-reserve value.
  auto cfg = testing::make_test_config();
  cfg.reservation_lifetime = 60 * kMillisPerSecond;
  service::Engine engine(std::move(cfg));
  const int blocked_before = engine.blocked_capacity("asset-imager-1");
  const std::string sub = engine.hub().subscribe("TaskEvent");
  const auto response = engine.dispatch(testing::make_tasking_request_xml(
      "Reserve", "pointable-imager-01", testing::imager_values()));
  c.require(response.attr_or("state", "") == "Reserved", "reserve failed");
  const std::string task_id = response.attr_or("task", "");
  const Instant t0 = engine.now();
  engine.hub().drain(sub);

  engine.advance_clock(59 * kMillisPerSecond);
  c.require(engine.task_snapshot(task_id).state == tasks::TaskState::Reserved,
            "reservation expired early");
  engine.advance_clock(1 * kMillisPerSecond);
  const auto task = engine.task_snapshot(task_id);
  c.require(task.state == tasks::TaskState::ReservationExpired,
            "reservation did not expire at +60");
  c.require(task.history.back().at == t0 + 60 * kMillisPerSecond,
            "expiry instant is not exactly +60s");
  bool saw_expiration = false;
  for (const auto& ev : engine.hub().drain(sub).events) {
    if (ev.topic == "ReservationExpiration" &&
        ev.payload_kind == topics::MessageType::ReservationReport) {
      saw_expiration = true;
    }
  }
  c.require(saw_expiration, "no ReservationExpiration event observed");
  c.require(engine.blocked_capacity("asset-imager-1") == blocked_before,
            "capacity did not return to its pre-reserve value");
  return {c.ok, c.first_failure};
}

struct WorkflowTranscripts {
  bool ok = false;
  std::string detail;
  std::string combined;  // workflow A + workflow B stdout
};

WorkflowTranscripts run_fig4_procedure() {
  WorkflowTranscripts out;
  const pid_t server = spawn_server(kServerPort);
  if (server <= 0) {
    out.detail = "could not fork server";
    return out;
  }
  if (!wait_for_server(kServerPort, 8000)) {
    out.detail = "server did not become ready";
    stop_server(server);
    return out;
  }

  Check c;
  const CliRun complete = run_cli("workflow --procedure pointable-imager-01");
  c.require(complete.exit_code == 0, "workflow exit code " +
                                         std::to_string(complete.exit_code));
  c.require(complete.output.find("[6/6] results:") != std::string::npos,
            "workflow transcript is missing step 6");
  c.require(complete.output.find("TaskCompletion") != std::string::npos,
            "completion notification not observed on the TaskEvent subscription");
  c.require(complete.output.find("results/") != std::string::npos,
            "no result reference in the transcript");

  const CliRun cancelled =
      run_cli("workflow --procedure pointable-imager-01 --cancel-midway");
  c.require(cancelled.exit_code == 0, "cancel-midway workflow exit code " +
                                          std::to_string(cancelled.exit_code));
  c.require(cancelled.output.find("Cancelled") != std::string::npos,
            "cancel-midway transcript does not show a cancelled task");
  c.require(cancelled.output.find("results/") != std::string::npos,
            "cancelled run lost its partial reference");

  stop_server(server);
  out.ok = c.ok;
  out.detail = c.first_failure;
  out.combined = complete.output + "----\n" + cancelled.output;
  return out;
}

std::string g_first_transcript;  // criterion 5 output reused by criterion 8

CriterionResult criterion_fig4_end_to_end() {
  const auto run = run_fig4_procedure();
  g_first_transcript = run.combined;
  return {run.ok, run.detail};
}

CriterionResult criterion_feasibility_id_reuse() {
  Check c;
  service::Engine engine(testing::make_test_config());
  const auto feasibility = engine.dispatch(testing::make_tasking_request_xml(
      "GetFeasibility", "pointable-imager-01", testing::imager_values()));
  const std::string study_id = feasibility.attr_or("task", "");
  c.require(!study_id.empty(), "feasibility study created no task id");

  auto reuse = testing::make_request("Submit");
  reuse.add_child(xml::Element("sps:procedure").set_text("pointable-imager-01"));
  reuse.add_child(xml::Element("sps:task").set_text(study_id));
  try {
    engine.dispatch(reuse);
    c.require(false, "Submit accepted a feasibility study id");
  } catch (const SpsError& e) {
    c.require(e.code() == Errc::FeasibilityIdNotReusable,
              std::string("expected FeasibilityIdNotReusable, got ") +
                  std::string(errc_name(e.code())));
  }
  return {c.ok, c.first_failure};
}

CriterionResult criterion_semantic_equivalence() {
  Check c;
  testing::Rng rng(20100820);
  const auto vocab = testing::small_vocabulary();

  // 200 random 1..3-pattern queries against stores of up to 1000 triples.
  for (int run = 0; run < 200 && c.ok; ++run) {
    rdf::TripleStore store;
    const auto triples = testing::random_store(rng, vocab, 1000);
    store.insert_batch({triples.begin(), triples.end()});
    const auto patterns = testing::random_patterns(rng, vocab);
    const auto got = store.query_bgp(patterns);
    const std::set<rdf::Bindings> got_set(got.begin(), got.end());
    c.require(got_set == testing::oracle_query_bgp(store.triples(), patterns),
              "query " + std::to_string(run) + " disagrees with the oracle");
  }

  // Closure vs reachability oracle on random acyclic hierarchies (<= 50
  // classes), plus idempotence.
  for (int run = 0; run < 40 && c.ok; ++run) {
    const auto schema = testing::random_hierarchy(rng, 50);
    auto store = testing::random_store(rng, vocab, 120);
    for (int i = 0; i < 15; ++i) {
      store.insert({vocab.subjects[static_cast<std::size_t>(rng.range(0, 9))],
                    rdf::rdf_type(),
                    rdf::sps_term("C" + std::to_string(rng.range(0, 45)))});
    }
    const auto once = rdfs_closure(store, schema);
    c.require(once == testing::oracle_rdfs_closure(store, schema),
              "closure " + std::to_string(run) + " disagrees with the oracle");
    c.require(rdfs_closure(once, schema) == once,
              "closure " + std::to_string(run) + " is not idempotent");
  }

  // Accepted requests are queryable the moment the HTTP response arrives.
  service::Engine engine(testing::make_test_config());
  httplib::Server server;
  service::register_routes(server, engine);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client http("127.0.0.1", port);
  auto res = http.Post("/sps",
                       xml::serialize(testing::make_tasking_request_xml(
                           "Submit", "pointable-imager-01",
                           testing::imager_values())),
                       "application/xml");
  c.require(res && res->status == 200, "submit over HTTP failed");
  auto query = http.Get("/sps/semantics/query?q=%3Fr%20rdf%3Atype%20sps%3ASubmit");
  c.require(query && query->status == 200, "semantic query failed");
  if (query) {
    bool found = false;
    for (const auto& row : xml::parse(query->body).children) {
      if (row.name == "sps:result") found = true;
    }
    c.require(found, "accepted request's rdf:type triple is not queryable");
  }
  server.stop();
  thread.join();
  return {c.ok, c.first_failure};
}

CriterionResult criterion_determinism() {
  Check c;
  c.require(!g_first_transcript.empty(), "criterion 5 produced no transcript");
  const auto rerun = run_fig4_procedure();
  c.require(rerun.ok, "second procedure run failed: " + rerun.detail);
  c.require(rerun.combined == g_first_transcript,
            "event transcripts differ between identically-seeded runs");
  return {c.ok, c.first_failure};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 4) {
    std::fprintf(stderr, "usage: %s <sps_server> <sps_cli> <config.json>\n",
                 argv[0]);
    return 64;
  }
  g_server_path = argv[1];
  g_cli_path = argv[2];
  g_config_path = argv[3];

  struct Criterion {
    const char* name;
    double budget_seconds;
    std::function<CriterionResult()> run;
  };
  const std::vector<Criterion> criteria = {
      {"1 value-string fidelity", 1.0, criterion_listing_fidelity},
      {"2 codec round-trip x1000", 10.0, criterion_codec_roundtrip},
      {"3 topic namespace over HTTP", 1.0, criterion_topic_namespace},
      {"4 lifecycle exhaustiveness + expiry", 5.0, criterion_lifecycle},
      {"5 end-to-end workflow", 10.0, criterion_fig4_end_to_end},
      {"6 feasibility id non-reuse", 1.0, criterion_feasibility_id_reuse},
      {"7 semantic oracle equivalence", 30.0, criterion_semantic_equivalence},
      {"8 deterministic transcripts", 15.0, criterion_determinism},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult result;
    try {
      result = criterion.run();
    } catch (const std::exception& e) {
      result = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (elapsed > criterion.budget_seconds) {
      result.passed = false;
      result.detail = "exceeded runtime budget (" + std::to_string(elapsed) +
                      "s > " + std::to_string(criterion.budget_seconds) + "s)";
    }
    if (result.passed) {
      std::printf("[PASS] criterion %s (%.2fs)\n", criterion.name, elapsed);
    } else {
      ++failures;
      std::printf("[FAIL] criterion %s (%.2fs): %s\n", criterion.name, elapsed,
                  result.detail.c_str());
    }
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("all acceptance criteria passed\n");
  } else {
    std::printf("%d criterion(s) failed\n", failures);
  }
  return failures;
}
