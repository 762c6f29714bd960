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

#ifndef SPSWEB_CONFIG_HPP
#define SPSWEB_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spsweb/asset_layer.hpp"
#include "spsweb/errors.hpp"
#include "spsweb/swe_codec.hpp"
#include "spsweb/time.hpp"

namespace spsweb::service {

struct ProcedureEntry {
  std::string id;
  swe::ParameterDescription description;
  std::string sensor_document;  // opaque stored XML, served verbatim
};

struct ServiceConfig {
  std::string title = "SPS Simulation Service";
  std::string provider = "spsweb";
  std::string host = "127.0.0.1";
  int port = 8484;
  Instant start_time = 0;
  DurationMs reservation_lifetime = 300 * kMillisPerSecond;
  std::uint64_t seed = 42;
  bool debug_clock = false;
  std::size_t subscription_queue_capacity = 1024;
  std::vector<ProcedureEntry> procedures;
  std::vector<assets::AssetProfile> assets;

  const ProcedureEntry* procedure(std::string_view id) const noexcept {
    for (const auto& p : procedures) {
      if (p.id == id) return &p;
    }
    return nullptr;
  }
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw SpsError(Errc::ConfigurationError,
                   "cannot read file " + path.string());
  }
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline Instant parse_config_instant(const nlohmann::json& j, const char* key,
                                    Instant fallback) {
  if (!j.contains(key)) return fallback;
  const std::string s = j.at(key).get<std::string>();
  const auto t = parse_instant(s);
  if (!t) {
    throw SpsError(Errc::ConfigurationError,
                   std::string(key) + " is not an ISO-8601 timestamp: " + s);
  }
  return *t;
}

inline assets::AssetProfile asset_from_json(const nlohmann::json& j) {
  assets::AssetProfile p;
  p.asset_id = j.at("assetId").get<std::string>();
  p.procedure_id = j.at("procedureId").get<std::string>();
  for (const auto& w : j.value("availabilityWindows", nlohmann::json::array())) {
    const auto start = parse_instant(w.at("start").get<std::string>());
    const auto end = parse_instant(w.at("end").get<std::string>());
    if (!start || !end) {
      throw SpsError(Errc::ConfigurationError,
                     "bad availability window for " + p.asset_id);
    }
    p.availability_windows.push_back({*start, *end});
  }
  if (j.contains("footprintCenter")) {
    p.footprint_center.lat_deg = j.at("footprintCenter").at("lat").get<double>();
    p.footprint_center.lon_deg = j.at("footprintCenter").at("lon").get<double>();
  }
  p.footprint_radius_km = j.value("footprintRadiusKm", 100.0);
  p.capacity = j.value("capacity", 1);
  p.execution_duration = static_cast<DurationMs>(
      j.value("executionDurationSeconds", 60.0) * kMillisPerSecond);
  p.failure_rate = j.value("failureRate", 0.0);
  if (j.contains("decision")) {
    const auto& d = j.at("decision");
    const std::string mode = d.value("mode", "sync");
    if (mode == "async") {
      p.decision_mode = assets::DecisionMode::Async;
      p.decision_delay = static_cast<DurationMs>(
          d.value("delaySeconds", 30.0) * kMillisPerSecond);
      p.pending_ttl = static_cast<DurationMs>(
          d.value("pendingTtlSeconds", 0.0) * kMillisPerSecond);
    } else if (mode != "sync") {
      throw SpsError(Errc::ConfigurationError,
                     "decision mode must be sync or async for " + p.asset_id);
    }
  }
  assets::validate_profile(p);
  return p;
}

}  // namespace detail

/// Loads a service configuration; file paths inside resolve relative to the
/// configuration file's directory.
inline ServiceConfig load_config(const std::string& config_path) {
  namespace fs = std::filesystem;
  const fs::path path(config_path);
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw SpsError(Errc::ConfigurationError,
                   "config " + config_path + ": " + e.what());
  }

  ServiceConfig cfg;
  try {
    if (j.contains("service")) {
      const auto& s = j.at("service");
      cfg.title = s.value("title", cfg.title);
      cfg.provider = s.value("provider", cfg.provider);
      cfg.host = s.value("host", cfg.host);
      cfg.port = s.value("port", cfg.port);
    }
    cfg.start_time = detail::parse_config_instant(j, "startTime", 0);
    cfg.reservation_lifetime = static_cast<DurationMs>(
        j.value("reservationLifetimeSeconds", 300.0) * kMillisPerSecond);
    cfg.seed = j.value("seed", std::uint64_t{42});
    cfg.debug_clock = j.value("debugClock", false);
    cfg.subscription_queue_capacity =
        j.value("subscriptionQueueCapacity", std::size_t{1024});

    for (const auto& pj : j.value("procedures", nlohmann::json::array())) {
      ProcedureEntry entry;
      entry.id = pj.at("id").get<std::string>();
      const std::string desc_file = pj.at("descriptionFile").get<std::string>();
      entry.description =
          swe::parse_tasking_description(detail::read_file(base / desc_file));
      if (entry.description.procedure_id != entry.id) {
        throw SpsError(Errc::ConfigurationError,
                       "description in " + desc_file + " names procedure '" +
                           entry.description.procedure_id + "', expected '" +
                           entry.id + "'");
      }
      if (pj.contains("sensorFile")) {
        entry.sensor_document =
            detail::read_file(base / pj.at("sensorFile").get<std::string>());
      }
      cfg.procedures.push_back(std::move(entry));
    }
    for (const auto& aj : j.value("assets", nlohmann::json::array())) {
      cfg.assets.push_back(detail::asset_from_json(aj));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpsError(Errc::ConfigurationError,
                   "config " + config_path + ": " + e.what());
  }

  for (const auto& asset : cfg.assets) {
    if (!cfg.procedure(asset.procedure_id)) {
      throw SpsError(Errc::ConfigurationError,
                     "asset " + asset.asset_id + " references unknown procedure " +
                         asset.procedure_id);
    }
  }
  return cfg;
}

}  // namespace spsweb::service

#endif  // SPSWEB_CONFIG_HPP
