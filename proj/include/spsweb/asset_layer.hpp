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

#ifndef SPSWEB_ASSET_LAYER_HPP
#define SPSWEB_ASSET_LAYER_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spsweb/errors.hpp"
#include "spsweb/swe_codec.hpp"
#include "spsweb/time.hpp"

// Simulated collection assets: each answers feasibility against availability
// windows and a circular ground footprint, blocks a bounded number of
// concurrent tasks, and "executes" under the virtual clock with a seeded,
// reproducible failure decision.

namespace spsweb::assets {

struct Window {
  Instant start = 0;
  Instant end = 0;
  DurationMs length() const noexcept { return end - start; }
};

struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

enum class DecisionMode { Sync, Async };

struct AssetProfile {
  std::string asset_id;
  std::string procedure_id;
  std::vector<Window> availability_windows;  // ordered, non-overlapping
  GeoPoint footprint_center{};
  double footprint_radius_km = 0.0;
  int capacity = 1;
  DurationMs execution_duration = 0;
  double failure_rate = 0.0;
  DecisionMode decision_mode = DecisionMode::Sync;
  DurationMs decision_delay = 0;  // async only: request decided this long after receipt
  DurationMs pending_ttl = 0;     // async only: 0 = pending requests never expire
};

inline void validate_profile(const AssetProfile& p) {
  const auto bad = [&](const std::string& what) -> SpsError {
    return SpsError(Errc::ConfigurationError, what, p.asset_id);
  };
  if (p.asset_id.empty() || p.procedure_id.empty()) {
    throw bad("asset and procedure ids must be nonempty");
  }
  if (p.capacity < 1) throw bad("capacity must be at least 1");
  if (!(p.footprint_radius_km > 0.0)) throw bad("footprint radius must be positive");
  if (p.failure_rate < 0.0 || p.failure_rate > 1.0) {
    throw bad("failure rate must lie in [0,1]");
  }
  if (p.execution_duration < 0) throw bad("negative execution duration");
  Instant prev_end = 0;
  bool first = true;
  for (const auto& w : p.availability_windows) {
    if (w.end <= w.start) throw bad("window end must follow start");
    if (!first && w.start < prev_end) throw bad("windows overlap or are unordered");
    prev_end = w.end;
    first = false;
  }
}

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance on a spherical earth.
inline double haversine_km(const GeoPoint& a, const GeoPoint& b) noexcept {
  constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
  const double lat1 = a.lat_deg * kDegToRad;
  const double lat2 = b.lat_deg * kDegToRad;
  const double dlat = (b.lat_deg - a.lat_deg) * kDegToRad;
  const double dlon = (b.lon_deg - a.lon_deg) * kDegToRad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

struct FeasibilityResult {
  bool feasible = false;
  std::string asset_id;
  std::vector<swe::ParameterData> alternatives;
  std::string reason;
};

struct ResultReference {
  std::string task_id;
  std::string uri;
  Instant produced_at = 0;
  std::string description;
};

namespace detail {

/// Time span and optional target point pulled out of a block: the first two
/// Time fields in description order bound the measurement, and the first
/// present Choice whose branch holds a >=2 component Vector names the target.
struct RequestGeometry {
  std::optional<Instant> start;
  std::optional<Instant> end;
  std::optional<GeoPoint> target;
};

inline RequestGeometry extract_geometry(const swe::ParameterDescription& desc,
                                        const swe::ParameterBlock& block) {
  RequestGeometry geo;
  for (const auto& f : desc.fields) {
    const swe::Value* v = swe::find_value(block, f.name);
    if (!v) continue;
    if (f.kind == swe::FieldKind::Time) {
      const Instant t = v->time.to_instant();
      if (!geo.start) {
        geo.start = t;
      } else if (!geo.end) {
        geo.end = t;
      }
    } else if (f.kind == swe::FieldKind::Choice && !geo.target) {
      for (const auto& nested : v->children) {
        if (nested.value.kind == swe::FieldKind::Vector &&
            nested.value.vector_values.size() >= 2) {
          geo.target = GeoPoint{nested.value.vector_values[0],
                                nested.value.vector_values[1]};
          break;
        }
      }
    }
  }
  return geo;
}

/// Rewrites the first two Time fields of a block to the given span,
/// preserving each value's original UTC offset.
inline swe::ParameterBlock substitute_span(const swe::ParameterDescription& desc,
                                           const swe::ParameterBlock& block,
                                           Instant start, Instant end) {
  swe::ParameterBlock out = block;
  int seen = 0;
  for (const auto& f : desc.fields) {
    if (f.kind != swe::FieldKind::Time) continue;
    for (auto& nv : out) {
      if (nv.name != f.name || nv.value.kind != swe::FieldKind::Time) continue;
      swe::TimeValue tv = nv.value.time;
      tv.utc_seconds = (seen == 0 ? start : end) / kMillisPerSecond;
      tv.fraction.clear();
      nv.value = swe::Value::of_time(tv);
      break;
    }
    if (++seen == 2) break;
  }
  return out;
}

}  // namespace detail

/// Capacity bookkeeping, published result references, and execution progress
/// per task. Counters never overshoot a profile's capacity regardless of
/// caller interleaving.
class AssetRegistry {
 public:
  AssetRegistry(std::vector<AssetProfile> profiles, std::uint64_t seed)
      : profiles_(std::move(profiles)), seed_(seed) {
    for (const auto& p : profiles_) validate_profile(p);
  }

  const std::vector<AssetProfile>& profiles() const noexcept { return profiles_; }

  const AssetProfile& profile(std::string_view asset_id) const {
    for (const auto& p : profiles_) {
      if (p.asset_id == asset_id) return p;
    }
    throw SpsError(Errc::ConfigurationError,
                   "no asset '" + std::string(asset_id) + "'");
  }

  /// Assets offering the procedure, in configuration order.
  std::vector<const AssetProfile*> assets_for_procedure(
      std::string_view procedure_id) const {
    std::vector<const AssetProfile*> out;
    for (const auto& p : profiles_) {
      if (p.procedure_id == procedure_id) out.push_back(&p);
    }
    return out;
  }

  int blocked(std::string_view asset_id) const {
    std::lock_guard lock(mutex_);
    auto it = holds_.find(std::string(asset_id));
    return it == holds_.end() ? 0 : static_cast<int>(it->second.size());
  }

  bool has_capacity(std::string_view asset_id) const {
    return blocked(asset_id) < profile(asset_id).capacity;
  }

  void reserve_capacity(const std::string& asset_id, const std::string& task_id) {
    const AssetProfile& p = profile(asset_id);
    std::lock_guard lock(mutex_);
    auto& holds = holds_[asset_id];
    if (static_cast<int>(holds.size()) >= p.capacity) {
      throw SpsError(Errc::CapacityExhausted,
                     "asset " + asset_id + " has no free capacity", task_id);
    }
    holds.insert(task_id);
  }

  void release_capacity(const std::string& asset_id, const std::string& task_id) {
    std::lock_guard lock(mutex_);
    auto it = holds_.find(asset_id);
    if (it == holds_.end() || it->second.erase(task_id) == 0) {
      throw SpsError(Errc::NotHeld,
                     "task " + task_id + " holds no capacity on " + asset_id);
    }
  }

  /// Uniform hash of (seed, taskId) into [0,1): FNV-1a over the decimal seed
  /// and the task identifier, then a 64-bit finalizer mix so short keys
  /// spread across the whole range. Stateless, so any replay reproduces it.
  static double unit_hash(std::uint64_t seed, std::string_view task_id) noexcept {
    const std::string key = std::to_string(seed) + ":" + std::string(task_id);
    std::uint64_t h = 14695981039346656037ULL;
    for (const char c : key) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    h *= 0xc4ceb9fe1a85ec53ULL;
    h ^= h >> 33;
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }

  bool decide_failure(std::string_view task_id, double failure_rate) const noexcept {
    return unit_hash(seed_, task_id) < failure_rate;
  }

  std::uint64_t seed() const noexcept { return seed_; }

  void register_task(const std::string& task_id) {
    std::lock_guard lock(mutex_);
    known_tasks_.insert(task_id);
    progress_.emplace(task_id, 0);
  }

  void set_progress(const std::string& task_id, int percent) {
    std::lock_guard lock(mutex_);
    progress_[task_id] = percent;
  }

  int progress(std::string_view task_id) const {
    std::lock_guard lock(mutex_);
    auto it = progress_.find(std::string(task_id));
    return it == progress_.end() ? 0 : it->second;
  }

  ResultReference add_result_reference(const std::string& task_id, Instant now,
                                       std::string description) {
    std::lock_guard lock(mutex_);
    auto& refs = references_[task_id];
    ResultReference ref;
    ref.task_id = task_id;
    ref.uri = "results/" + task_id + "/" + std::to_string(refs.size() + 1);
    ref.produced_at = now;
    ref.description = std::move(description);
    refs.push_back(ref);
    return ref;
  }

  /// Every reference produced so far, whatever the task's terminal state.
  std::vector<ResultReference> result_references(std::string_view task_id) const {
    std::lock_guard lock(mutex_);
    if (!known_tasks_.count(std::string(task_id))) {
      throw SpsError(Errc::UnknownTask, "no task '" + std::string(task_id) + "'");
    }
    auto it = references_.find(std::string(task_id));
    return it == references_.end() ? std::vector<ResultReference>{} : it->second;
  }

 private:
  std::vector<AssetProfile> profiles_;
  std::uint64_t seed_;
  mutable std::mutex mutex_;
  std::map<std::string, std::set<std::string>> holds_;
  std::map<std::string, std::vector<ResultReference>> references_;
  std::map<std::string, int> progress_;
  std::set<std::string> known_tasks_;
};

/// Feasibility verdict for one parameter set against one asset:
///  (a) the requested span must intersect an availability window for at
///      least the execution duration,
///  (b) a present target must fall inside the ground footprint, and
///  (c) the asset must have free capacity.
/// A window miss yields up to three alternatives with the span moved into
/// the earliest fitting windows.
inline FeasibilityResult check_feasibility(const AssetProfile& profile,
                                           const swe::ParameterDescription& desc,
                                           const swe::ParameterData& data,
                                           int blocked_now) {
  if (desc.procedure_id != profile.procedure_id) {
    throw SpsError(Errc::ProcedureMismatch,
                   "asset " + profile.asset_id + " serves " + profile.procedure_id +
                       ", not " + desc.procedure_id);
  }
  FeasibilityResult result;
  result.asset_id = profile.asset_id;

  const auto window_fits = [&](const Window& w, Instant start, Instant end) {
    const Instant lo = start > w.start ? start : w.start;
    const Instant hi = end < w.end ? end : w.end;
    return hi - lo >= profile.execution_duration;
  };

  bool window_miss = false;
  std::optional<Instant> miss_span;
  for (const auto& block : data.blocks) {
    const auto geo = detail::extract_geometry(desc, block);
    if (geo.start && geo.end) {
      bool fits = false;
      for (const auto& w : profile.availability_windows) {
        if (window_fits(w, *geo.start, *geo.end)) {
          fits = true;
          break;
        }
      }
      if (!fits) {
        window_miss = true;
        if (!miss_span) miss_span = *geo.end - *geo.start;
        result.reason = "requested span misses every availability window";
      }
    }
    if (geo.target) {
      const double distance = haversine_km(profile.footprint_center, *geo.target);
      if (distance > profile.footprint_radius_km) {
        result.reason = "target outside footprint";
        return result;
      }
    }
  }

  if (window_miss) {
    // Alternatives: same blocks with the span moved to the earliest windows
    // long enough for the execution duration.
    const Instant span = *miss_span > profile.execution_duration
                             ? *miss_span
                             : profile.execution_duration;
    int produced = 0;
    for (const auto& w : profile.availability_windows) {
      if (w.length() < profile.execution_duration) continue;
      const Instant start = w.start;
      const Instant end = start + (span < w.length() ? span : w.length());
      swe::ParameterData alt;
      alt.encoding = data.encoding;
      for (const auto& block : data.blocks) {
        alt.blocks.push_back(detail::substitute_span(desc, block, start, end));
      }
      result.alternatives.push_back(std::move(alt));
      if (++produced == 3) break;
    }
    return result;
  }

  if (blocked_now >= profile.capacity) {
    result.reason = "capacity exhausted";
    return result;
  }

  result.feasible = true;
  return result;
}

}  // namespace spsweb::assets

#endif  // SPSWEB_ASSET_LAYER_HPP
