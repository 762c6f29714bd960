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

#ifndef SPSWEB_NOTIFICATION_HUB_HPP
#define SPSWEB_NOTIFICATION_HUB_HPP

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spsweb/errors.hpp"
#include "spsweb/time.hpp"
#include "spsweb/xml.hpp"

// Channel-based notification routing over the fixed WS-Topics namespace:
// two parent topics, thirteen leaves, and a declared payload type per leaf.
// Delivery is pull-based; subscribers drain their queue over HTTP.

namespace spsweb::topics {

inline constexpr char kWstopNamespace[] = "http://docs.oasis-open.org/wsn/t-1";
inline constexpr char kSpsNamespace[] = "http://www.opengis.net/sps/2.0";

enum class EventKind {
  TaskFailure,
  TaskCancellation,
  TaskCompletion,
  TaskConfirmation,
  TaskUpdate,
  DataPublication,
  TaskReservation,
  TaskSubmission,
  ReservationExpiration,
  TaskingRequestExpiration,
  TaskingRequestRejection,
  TaskingRequestAcceptance,
  TaskingRequestPending,
};

inline constexpr int kEventKindCount = 13;

/// Event kinds map to leaf topics by name identity.
inline std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::TaskFailure: return "TaskFailure";
    case EventKind::TaskCancellation: return "TaskCancellation";
    case EventKind::TaskCompletion: return "TaskCompletion";
    case EventKind::TaskConfirmation: return "TaskConfirmation";
    case EventKind::TaskUpdate: return "TaskUpdate";
    case EventKind::DataPublication: return "DataPublication";
    case EventKind::TaskReservation: return "TaskReservation";
    case EventKind::TaskSubmission: return "TaskSubmission";
    case EventKind::ReservationExpiration: return "ReservationExpiration";
    case EventKind::TaskingRequestExpiration: return "TaskingRequestExpiration";
    case EventKind::TaskingRequestRejection: return "TaskingRequestRejection";
    case EventKind::TaskingRequestAcceptance: return "TaskingRequestAcceptance";
    case EventKind::TaskingRequestPending: return "TaskingRequestPending";
  }
  return "?";
}

inline EventKind event_kind_from(std::string_view name) {
  for (int i = 0; i < kEventKindCount; ++i) {
    const auto kind = static_cast<EventKind>(i);
    if (to_string(kind) == name) return kind;
  }
  throw SpsError(Errc::UnknownEventKind, "no event kind '" + std::string(name) + "'");
}

enum class MessageType { StatusReport, ReservationReport };

inline std::string_view to_string(MessageType t) noexcept {
  return t == MessageType::StatusReport ? "sps:StatusReport"
                                        : "sps:ReservationReport";
}

struct Topic {
  std::string name;
  std::string parent;  // empty for the two roots
  std::optional<MessageType> message_type;  // set on leaves only
  bool leaf() const noexcept { return message_type.has_value(); }
};

/// The full topic set, parents first, children in namespace-document order.
inline const std::vector<Topic>& topic_namespace() {
  static const std::vector<Topic> topics = [] {
    std::vector<Topic> t;
    const auto status = MessageType::StatusReport;
    const auto reservation = MessageType::ReservationReport;
    t.push_back({"TaskEvent", "", std::nullopt});
    t.push_back({"TaskFailure", "TaskEvent", status});
    t.push_back({"TaskCancellation", "TaskEvent", status});
    t.push_back({"TaskCompletion", "TaskEvent", status});
    t.push_back({"TaskConfirmation", "TaskEvent", status});
    t.push_back({"TaskUpdate", "TaskEvent", status});
    t.push_back({"DataPublication", "TaskEvent", status});
    t.push_back({"TaskReservation", "TaskEvent", reservation});
    t.push_back({"TaskSubmission", "TaskEvent", status});
    t.push_back({"ReservationExpiration", "TaskEvent", reservation});
    t.push_back({"TaskingRequestEvent", "", std::nullopt});
    t.push_back({"TaskingRequestExpiration", "TaskingRequestEvent", status});
    t.push_back({"TaskingRequestRejection", "TaskingRequestEvent", status});
    t.push_back({"TaskingRequestAcceptance", "TaskingRequestEvent", status});
    t.push_back({"TaskingRequestPending", "TaskingRequestEvent", status});
    return t;
  }();
  return topics;
}

inline const Topic* find_topic(std::string_view name) noexcept {
  for (const auto& t : topic_namespace()) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

/// Bijection between lifecycle event kinds and leaf topics.
inline const Topic& topic_for_event(EventKind kind) {
  const Topic* t = find_topic(to_string(kind));
  if (!t || !t->leaf()) {
    throw SpsError(Errc::UnknownEventKind,
                   "no topic for event kind " + std::string(to_string(kind)));
  }
  return *t;
}

/// Notification payload; per-task progress and result availability snapshot.
struct StatusReport {
  std::string task_id;     // empty for request-level events
  std::string request_id;  // empty when unknown
  std::string state;       // task state or request status name
  int percent_completion = 0;
  std::string message;
  Instant timestamp = 0;
  bool data_available = false;
};

struct NotificationEvent {
  std::string topic;
  MessageType payload_kind = MessageType::StatusReport;
  StatusReport report;
  std::optional<Instant> reservation_expiration;  // ReservationReport extra
  std::uint64_t sequence = 0;  // assigned by the hub, per topic
  Instant emitted_at = 0;
};

inline xml::Element report_to_xml(const StatusReport& report,
                                  std::optional<Instant> reservation_expiration,
                                  MessageType kind) {
  xml::Element el(kind == MessageType::ReservationReport ? "sps:ReservationReport"
                                                         : "sps:StatusReport");
  if (!report.task_id.empty()) el.set_attr("task", report.task_id);
  if (!report.request_id.empty()) el.set_attr("request", report.request_id);
  el.set_attr("state", report.state);
  el.set_attr("percentCompletion", std::to_string(report.percent_completion));
  el.set_attr("dataAvailable", report.data_available ? "true" : "false");
  el.set_attr("timestamp", format_instant(report.timestamp));
  if (reservation_expiration) {
    el.set_attr("reservationExpiration", format_instant(*reservation_expiration));
  }
  if (!report.message.empty()) el.set_text(report.message);
  return el;
}

inline xml::Element report_to_xml(const NotificationEvent& ev) {
  return report_to_xml(ev.report, ev.reservation_expiration, ev.payload_kind);
}

/// WS-Topics namespace document for GET /sps/topics.
inline xml::Element topic_namespace_document() {
  xml::Element root("wstop:TopicNamespace");
  root.set_attr("xmlns:wstop", kWstopNamespace);
  root.set_attr("xmlns:sps", kSpsNamespace);
  root.set_attr("name", "SPS-Topic-Namespace");
  root.set_attr("targetNamespace", kSpsNamespace);
  root.set_attr("final", "true");
  for (const auto& parent : topic_namespace()) {
    if (parent.leaf()) continue;
    xml::Element parent_el("wstop:Topic");
    parent_el.set_attr("name", parent.name);
    for (const auto& child : topic_namespace()) {
      if (child.parent != parent.name) continue;
      xml::Element child_el("wstop:Topic");
      child_el.set_attr("name", child.name);
      child_el.set_attr("messageTypes", std::string(to_string(*child.message_type)));
      parent_el.add_child(std::move(child_el));
    }
    root.add_child(std::move(parent_el));
  }
  return root;
}

/// In-process broker: per-topic sequence numbers, bounded per-subscription
/// queues (overflow drops the oldest event and flags the subscription).
class NotificationHub {
 public:
  explicit NotificationHub(std::size_t queue_capacity = 1024)
      : queue_capacity_(queue_capacity) {}

  /// A parent filter matches every child topic; no replay of past events.
  std::string subscribe(std::string_view topic_filter) {
    const Topic* topic = find_topic(topic_filter);
    if (!topic) {
      throw SpsError(Errc::UnknownTopic,
                     "no topic '" + std::string(topic_filter) + "'");
    }
    std::lock_guard lock(mutex_);
    const std::string id = "sub_" + std::to_string(++subscription_counter_);
    subscriptions_[id] = SubscriptionState{topic->name, {}, false};
    return id;
  }

  bool has_subscription(std::string_view id) const {
    std::lock_guard lock(mutex_);
    return subscriptions_.count(std::string(id)) > 0;
  }

  /// Appends the event to every matching queue; returns the delivery count.
  std::size_t publish(NotificationEvent event) {
    const Topic* topic = find_topic(event.topic);
    if (!topic || !topic->leaf()) {
      throw SpsError(Errc::UnknownTopic, "no leaf topic '" + event.topic + "'");
    }
    if (event.payload_kind != *topic->message_type) {
      throw SpsError(Errc::PayloadTypeMismatch,
                     "topic " + event.topic + " carries " +
                         std::string(to_string(*topic->message_type)));
    }
    std::lock_guard lock(mutex_);
    event.sequence = ++topic_sequences_[event.topic];
    std::size_t delivered = 0;
    for (auto& [id, sub] : subscriptions_) {
      if (sub.filter != event.topic && sub.filter != topic->parent) continue;
      if (sub.queue.size() >= queue_capacity_) {
        sub.queue.pop_front();
        sub.overflowed = true;
      }
      sub.queue.push_back(event);
      ++delivered;
    }
    return delivered;
  }

  std::size_t publish(EventKind kind, StatusReport report, Instant emitted_at,
                      std::optional<Instant> reservation_expiration = std::nullopt) {
    const Topic& topic = topic_for_event(kind);
    NotificationEvent ev;
    ev.topic = topic.name;
    ev.payload_kind = *topic.message_type;
    ev.report = std::move(report);
    ev.reservation_expiration = reservation_expiration;
    ev.emitted_at = emitted_at;
    return publish(std::move(ev));
  }

  struct Drained {
    std::vector<NotificationEvent> events;
    bool overflowed = false;
  };

  /// Empties the subscription's queue; the overflow marker resets on read.
  Drained drain(std::string_view subscription_id) {
    std::lock_guard lock(mutex_);
    auto it = subscriptions_.find(std::string(subscription_id));
    if (it == subscriptions_.end()) {
      throw SpsError(Errc::UnknownTopic,
                     "no subscription '" + std::string(subscription_id) + "'");
    }
    Drained out;
    out.overflowed = it->second.overflowed;
    out.events.assign(it->second.queue.begin(), it->second.queue.end());
    it->second.queue.clear();
    it->second.overflowed = false;
    return out;
  }

  std::size_t pending(std::string_view subscription_id) const {
    std::lock_guard lock(mutex_);
    auto it = subscriptions_.find(std::string(subscription_id));
    return it == subscriptions_.end() ? 0 : it->second.queue.size();
  }

 private:
  struct SubscriptionState {
    std::string filter;
    std::deque<NotificationEvent> queue;
    bool overflowed = false;
  };

  std::size_t queue_capacity_;
  mutable std::mutex mutex_;
  std::map<std::string, SubscriptionState> subscriptions_;
  std::map<std::string, std::uint64_t> topic_sequences_;
  std::uint64_t subscription_counter_ = 0;
};

}  // namespace spsweb::topics

#endif  // SPSWEB_NOTIFICATION_HUB_HPP
