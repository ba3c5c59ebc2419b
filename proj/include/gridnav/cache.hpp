#pragma once

/**
 * Hierarchical trajectory cache: task-level entries keyed by prompt alone,
 * subtask entries keyed by (prompt, location). Lookups never fuzzy-match
 * prompts; locations match within a Chebyshev tolerance. Bounded caches
 * evict least-recently-hit subtask entries before any task entry.
 */

#include <algorithm>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridnav/errors.hpp"
#include "gridnav/task.hpp"
#include "gridnav/world.hpp"

namespace gridnav {

enum class CacheTier : uint8_t { Task, SubtaskAtLocation };

enum class TrajectorySource : uint8_t { Backend, Composed, Merged };

inline std::string source_name(TrajectorySource s) {
    switch (s) {
        case TrajectorySource::Backend: return "Backend";
        case TrajectorySource::Composed: return "Composed";
        case TrajectorySource::Merged: return "Merged";
    }
    return "?";
}

inline TrajectorySource source_from_name(const std::string& s) {
    if (s == "Backend") return TrajectorySource::Backend;
    if (s == "Composed") return TrajectorySource::Composed;
    if (s == "Merged") return TrajectorySource::Merged;
    throw ParseError("unknown trajectory source '" + s + "'");
}

struct Trajectory {
    std::vector<Pose> waypoints;
    struct Meta {
        long created_at = 0;  // step counter, not wall clock
        TrajectorySource source = TrajectorySource::Backend;

        friend bool operator==(const Meta&, const Meta&) = default;
    } meta;

    Cell start_cell() const { return waypoints.front().cell(); }
    Cell end_cell() const { return waypoints.back().cell(); }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// The single legal action taking pose a to pose b, if any.
inline std::optional<Action> action_between(const Pose& a, const Pose& b) {
    if (a.cell() == b.cell()) {
        if (b.heading == turn_left(a.heading)) return Action::TurnLeft;
        if (b.heading == turn_right(a.heading)) return Action::TurnRight;
        return std::nullopt;
    }
    if (a.heading != b.heading) return std::nullopt;
    Cell d = heading_delta(a.heading);
    if (b.x == a.x + d.x && b.y == a.y + d.y) return Action::MoveForward;
    return std::nullopt;
}

inline void validate_trajectory(const Trajectory& t, const std::string& what = "trajectory") {
    if (t.waypoints.empty()) throw InvalidTrajectoryError(what + ": empty");
    for (size_t i = 1; i < t.waypoints.size(); ++i) {
        if (!action_between(t.waypoints[i - 1], t.waypoints[i]))
            throw InvalidTrajectoryError(what + ": waypoints " + std::to_string(i - 1) + " -> " +
                                         std::to_string(i) + " are not one legal action apart");
    }
}

// Shortest rotation sequence from heading `from` to `to`, excluding both
// endpoints; a 180-degree bridge goes through the left turn.
inline std::vector<Pose> bridge_rotations(Cell cell, Heading from, Heading to) {
    if (from == to || turn_left(from) == to || turn_right(from) == to) return {};
    return {{cell.x, cell.y, turn_left(from)}};
}

// Append `tail` to `head` at a shared cell, inserting bridging rotations and
// dropping the duplicated waypoint when poses coincide exactly.
inline Trajectory concat_trajectories(const Trajectory& head, const Trajectory& tail) {
    if (head.end_cell() != tail.start_cell())
        throw InvalidTrajectoryError("concat: trajectories do not share a junction cell");
    Trajectory out = head;
    Heading at = head.waypoints.back().heading;
    Heading want = tail.waypoints.front().heading;
    for (const Pose& p : bridge_rotations(head.end_cell(), at, want)) out.waypoints.push_back(p);
    size_t first = (at == want) ? 1 : 0;  // identical junction pose counted once
    out.waypoints.insert(out.waypoints.end(), tail.waypoints.begin() + first, tail.waypoints.end());
    return out;
}

struct CacheKey {
    CacheTier tier = CacheTier::Task;
    std::string prompt;  // normalized
    std::optional<Cell> location;  // present iff tier == SubtaskAtLocation

    static CacheKey task(const TaskPrompt& p) { return {CacheTier::Task, p.normalized, {}}; }
    static CacheKey subtask(const TaskPrompt& p, Cell at) {
        return {CacheTier::SubtaskAtLocation, p.normalized, at};
    }

    friend bool operator==(const CacheKey&, const CacheKey&) = default;
    friend auto operator<=>(const CacheKey&, const CacheKey&) = default;
};

struct CacheStats {
    long task_hits = 0;
    long task_misses = 0;
    long subtask_hits = 0;
    long subtask_misses = 0;
    long insertions = 0;
    long evictions = 0;
    long discontinuities = 0;

    friend bool operator==(const CacheStats&, const CacheStats&) = default;
};

inline int chebyshev(Cell a, Cell b) {
    return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

class TrajectoryCache {
  public:
    TrajectoryCache() = default;
    explicit TrajectoryCache(std::optional<size_t> capacity) : capacity_(capacity) {}

    TrajectoryCache(const TrajectoryCache& other) {
        std::shared_lock lock(other.mutex_);
        entries_ = other.entries_;
        stats_ = other.stats_;
        capacity_ = other.capacity_;
        clock_ = other.clock_;
    }

    TrajectoryCache& operator=(const TrajectoryCache& other) {
        if (this == &other) return *this;
        TrajectoryCache snapshot(other);  // locks only `other`, then only `this`
        std::unique_lock lock(mutex_);
        entries_ = std::move(snapshot.entries_);
        stats_ = snapshot.stats_;
        capacity_ = snapshot.capacity_;
        clock_ = snapshot.clock_;
        return *this;
    }

    std::optional<Trajectory> lookup_task(const TaskPrompt& task) {
        std::unique_lock lock(mutex_);
        auto it = entries_.find(CacheKey::task(task));
        if (it == entries_.end()) {
            ++stats_.task_misses;
            return std::nullopt;
        }
        ++stats_.task_hits;
        it->second.last_touch = ++clock_;
        return it->second.traj;
    }

    /// Best entry for this subtask whose stored trajectory starts within
    /// `tolerance` (Chebyshev) of `location`; nearest start wins, ties go to
    /// the earliest insertion.
    std::optional<Trajectory> lookup_subtask(const TaskPrompt& subtask_prompt, Cell location,
                                             int tolerance) {
        if (tolerance < 0) throw std::invalid_argument("lookup_subtask: negative tolerance");
        std::unique_lock lock(mutex_);
        Entry* best = nullptr;
        int best_dist = 0;
        for (auto& [key, entry] : entries_) {
            if (key.tier != CacheTier::SubtaskAtLocation) continue;
            if (key.prompt != subtask_prompt.normalized) continue;
            int d = chebyshev(entry.traj.start_cell(), location);
            if (d > tolerance) continue;
            if (!best || d < best_dist ||
                (d == best_dist && entry.inserted_seq < best->inserted_seq)) {
                best = &entry;
                best_dist = d;
            }
        }
        if (!best) {
            ++stats_.subtask_misses;
            return std::nullopt;
        }
        ++stats_.subtask_hits;
        best->last_touch = ++clock_;
        return best->traj;
    }

    void store(const CacheKey& key, Trajectory traj) {
        validate_trajectory(traj, "store(" + key.prompt + ")");
        if ((key.tier == CacheTier::SubtaskAtLocation) != key.location.has_value())
            throw std::invalid_argument("store: key tier/location mismatch");
        std::unique_lock lock(mutex_);
        store_locked(key, std::move(traj));
    }

    /// Task-tier merge: append when the new fragment continues the stored
    /// trajectory's last cell, otherwise replace and count a discontinuity.
    void merge_into_task(const TaskPrompt& task, Trajectory traj) {
        validate_trajectory(traj, "merge_into_task(" + task.normalized + ")");
        std::unique_lock lock(mutex_);
        CacheKey key = CacheKey::task(task);
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            store_locked(key, std::move(traj));
            return;
        }
        if (it->second.traj.end_cell() == traj.start_cell()) {
            Trajectory merged = concat_trajectories(it->second.traj, traj);
            merged.meta.source = TrajectorySource::Merged;
            merged.meta.created_at = it->second.traj.meta.created_at;
            it->second.traj = std::move(merged);
        } else {
            ++stats_.discontinuities;
            it->second.traj = std::move(traj);
        }
        it->second.last_touch = ++clock_;
    }

    /// Chain subtask fragments end-to-start from `start`; all-or-nothing.
    std::optional<Trajectory> compose(const std::vector<Subtask>& subtasks, Cell start) {
        std::optional<Trajectory> out;
        Cell at = start;
        for (const Subtask& st : subtasks) {
            auto fragment = lookup_subtask(st.prompt, at, 0);
            if (!fragment || fragment->start_cell() != at) return std::nullopt;
            if (!out)
                out = *fragment;
            else
                out = concat_trajectories(*out, *fragment);
            at = fragment->end_cell();
        }
        if (out) out->meta.source = TrajectorySource::Composed;
        return out;
    }

    bool erase(const CacheKey& key) {
        std::unique_lock lock(mutex_);
        return entries_.erase(key) > 0;
    }

    /// Evict by policy until at most `max_entries` remain.
    size_t evict_to(size_t max_entries) {
        std::unique_lock lock(mutex_);
        size_t evicted = 0;
        while (entries_.size() > max_entries) {
            evict_one_locked();
            ++evicted;
        }
        return evicted;
    }

    size_t size() const {
        std::shared_lock lock(mutex_);
        return entries_.size();
    }

    CacheStats stats() const {
        std::shared_lock lock(mutex_);
        return stats_;
    }

    std::optional<size_t> capacity() const { return capacity_; }

    struct EntryView {
        CacheKey key;
        Trajectory traj;
    };

    // Snapshot in insertion order.
    std::vector<EntryView> entries() const {
        std::shared_lock lock(mutex_);
        std::vector<std::pair<long, EntryView>> tmp;
        tmp.reserve(entries_.size());
        for (const auto& [key, entry] : entries_)
            tmp.push_back({entry.inserted_seq, {key, entry.traj}});
        std::sort(tmp.begin(), tmp.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<EntryView> out;
        out.reserve(tmp.size());
        for (auto& [seq, view] : tmp) out.push_back(std::move(view));
        return out;
    }

    std::string save() const {
        std::shared_lock lock(mutex_);
        nlohmann::json j;
        j["version"] = 1;
        nlohmann::json arr = nlohmann::json::array();
        std::vector<std::pair<long, const std::pair<const CacheKey, Entry>*>> ordered;
        for (const auto& kv : entries_) ordered.push_back({kv.second.inserted_seq, &kv});
        std::sort(ordered.begin(), ordered.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [seq, kv] : ordered) {
            const auto& [key, entry] = *kv;
            nlohmann::json ej;
            ej["tier"] = key.tier == CacheTier::Task ? "task" : "subtask";
            ej["prompt"] = key.prompt;
            if (key.location) ej["location"] = {key.location->x, key.location->y};
            nlohmann::json wps = nlohmann::json::array();
            for (const Pose& p : entry.traj.waypoints)
                wps.push_back({p.x, p.y, std::string(1, heading_char(p.heading))});
            ej["waypoints"] = wps;
            ej["meta"] = {{"created_at", entry.traj.meta.created_at},
                          {"source", source_name(entry.traj.meta.source)}};
            arr.push_back(ej);
        }
        j["entries"] = arr;
        j["stats"] = {{"task_hits", stats_.task_hits},
                      {"task_misses", stats_.task_misses},
                      {"subtask_hits", stats_.subtask_hits},
                      {"subtask_misses", stats_.subtask_misses},
                      {"insertions", stats_.insertions},
                      {"evictions", stats_.evictions},
                      {"discontinuities", stats_.discontinuities}};
        return j.dump(2) + "\n";
    }

    static TrajectoryCache load(const std::string& bytes) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(bytes);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("cache JSON: ") + e.what());
        }
        TrajectoryCache cache;
        try {
            if (j.at("version").get<int>() != 1)
                throw ParseError("cache JSON: unsupported version");
            for (const auto& ej : j.at("entries")) {
                CacheKey key;
                std::string tier = ej.at("tier").get<std::string>();
                if (tier == "task")
                    key.tier = CacheTier::Task;
                else if (tier == "subtask")
                    key.tier = CacheTier::SubtaskAtLocation;
                else
                    throw ParseError("cache JSON: unknown tier '" + tier + "'");
                key.prompt = ej.at("prompt").get<std::string>();
                if (ej.contains("location"))
                    key.location = Cell{ej.at("location").at(0).get<int>(),
                                        ej.at("location").at(1).get<int>()};
                if ((key.tier == CacheTier::SubtaskAtLocation) != key.location.has_value())
                    throw ParseError("cache JSON: tier/location mismatch for '" + key.prompt + "'");
                Trajectory traj;
                for (const auto& wj : ej.at("waypoints")) {
                    std::string h = wj.at(2).get<std::string>();
                    if (h.size() != 1) throw ParseError("cache JSON: bad heading");
                    traj.waypoints.push_back(
                        {wj.at(0).get<int>(), wj.at(1).get<int>(), heading_from_char(h[0])});
                }
                traj.meta.created_at = ej.at("meta").at("created_at").get<long>();
                traj.meta.source = source_from_name(ej.at("meta").at("source").get<std::string>());
                try {
                    validate_trajectory(traj);
                } catch (const InvalidTrajectoryError& e) {
                    throw InvalidTrajectoryError("cache entry ('" + key.prompt + "'" +
                                                 (key.location ? " @ (" + std::to_string(key.location->x) +
                                                                     "," + std::to_string(key.location->y) + ")"
                                                               : "") +
                                                 "): " + e.what());
                }
                if (cache.entries_.count(key))
                    throw ParseError("cache JSON: duplicate key '" + key.prompt + "'");
                cache.entries_[key] = Entry{std::move(traj), ++cache.clock_, cache.clock_};
            }
            const auto& sj = j.at("stats");
            cache.stats_.task_hits = sj.value("task_hits", 0L);
            cache.stats_.task_misses = sj.value("task_misses", 0L);
            cache.stats_.subtask_hits = sj.value("subtask_hits", 0L);
            cache.stats_.subtask_misses = sj.value("subtask_misses", 0L);
            cache.stats_.insertions = sj.value("insertions", 0L);
            cache.stats_.evictions = sj.value("evictions", 0L);
            cache.stats_.discontinuities = sj.value("discontinuities", 0L);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("cache JSON: ") + e.what());
        }
        return cache;
    }

  private:
    struct Entry {
        Trajectory traj;
        long inserted_seq = 0;
        long last_touch = 0;
    };

    void store_locked(const CacheKey& key, Trajectory traj) {
        auto it = entries_.find(key);
        if (it != entries_.end()) {
            it->second.traj = std::move(traj);
            it->second.last_touch = ++clock_;
        } else {
            ++clock_;
            entries_[key] = Entry{std::move(traj), clock_, clock_};
            ++stats_.insertions;
        }
        if (capacity_) {
            while (entries_.size() > *capacity_) evict_one_locked();
        }
    }

    // Least-recently-hit, subtask tier before task tier.
    void evict_one_locked() {
        auto pick = [&](CacheTier tier) {
            auto victim = entries_.end();
            for (auto it = entries_.begin(); it != entries_.end(); ++it) {
                if (it->first.tier != tier) continue;
                if (victim == entries_.end() || it->second.last_touch < victim->second.last_touch ||
                    (it->second.last_touch == victim->second.last_touch &&
                     it->second.inserted_seq < victim->second.inserted_seq))
                    victim = it;
            }
            return victim;
        };
        auto victim = pick(CacheTier::SubtaskAtLocation);
        if (victim == entries_.end()) victim = pick(CacheTier::Task);
        if (victim != entries_.end()) {
            entries_.erase(victim);
            ++stats_.evictions;
        }
    }

    std::map<CacheKey, Entry> entries_;
    CacheStats stats_;
    std::optional<size_t> capacity_;
    long clock_ = 0;
    mutable std::shared_mutex mutex_;
};

/// Every waypoint of every entry must be Navigable in the graph; offending
/// keys are reported, not repaired.
template <typename GraphT>
std::vector<CacheKey> find_corrupt_entries(const TrajectoryCache& cache, const GraphT& graph) {
    std::vector<CacheKey> bad;
    for (const auto& view : cache.entries()) {
        for (const Pose& p : view.traj.waypoints) {
            if (!graph.navigable(p.cell())) {
                bad.push_back(view.key);
                break;
            }
        }
    }
    return bad;
}

}  // namespace gridnav
