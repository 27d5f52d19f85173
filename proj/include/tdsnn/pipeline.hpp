#pragma once

// Logical timing model of the delay-spike inference pipeline: every layer
// alternates an accumulation phase and a firing phase of T steps each, the
// firing phase starting T_delay steps into accumulation. Layer i+1
// accumulates directly off layer i's firing (inter-layer direct
// transmission); sample k+1 enters layer 1 exactly T steps after sample k
// (inter-sample pipelining). No neuron math happens here, only step
// counters on half-open intervals [start, end).

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tdsnn/tensor.hpp"

namespace tdsnn {

enum class Phase { accumulate, fire };

inline const char* phase_name(Phase p) {
    return p == Phase::accumulate ? "accumulate" : "fire";
}

struct ScheduleEntry {
    int sample = 1;  // 1-based
    int layer = 1;   // 1-based
    Phase phase = Phase::accumulate;
    long start = 0;
    long end = 0;  // exclusive
};

struct PipelineSchedule {
    int n_layers = 1;
    int T = 1;
    int T_delay = 0;
    int n_samples = 1;
    std::vector<ScheduleEntry> entries;
};

inline PipelineSchedule build_schedule(int n_layers, int T, int T_delay,
                                       int n_samples) {
    detail::require(n_layers >= 1 && T >= 1 && n_samples >= 1,
                    "build_schedule: n_layers, T, n_samples must be >= 1");
    detail::require(T_delay >= 0 && T_delay <= T,
                    "build_schedule: T_delay must be in [0, T]");
    PipelineSchedule s{n_layers, T, T_delay, n_samples, {}};
    s.entries.reserve(static_cast<std::size_t>(n_layers) * n_samples * 2);
    for (int k = 1; k <= n_samples; ++k) {
        const long admit = static_cast<long>(k - 1) * T;
        for (int i = 1; i <= n_layers; ++i) {
            const long acc = admit + static_cast<long>(i - 1) * T_delay;
            s.entries.push_back({k, i, Phase::accumulate, acc, acc + T});
            s.entries.push_back({k, i, Phase::fire, acc + T_delay,
                                 acc + T_delay + T});
        }
    }
    return s;
}

inline long completion_step(const PipelineSchedule& s, int sample) {
    long done = 0;
    for (const ScheduleEntry& e : s.entries)
        if (e.sample == sample && e.layer == s.n_layers && e.phase == Phase::fire)
            done = std::max(done, e.end);
    return done;
}

inline long first_sample_latency(const PipelineSchedule& s) {
    return completion_step(s, 1);
}

// Completion gap between consecutive samples once the pipeline is warm.
inline long throughput_period(const PipelineSchedule& s) {
    if (s.n_samples < 2) return s.T;
    return completion_step(s, s.n_samples) - completion_step(s, s.n_samples - 1);
}

// Empty iff no (layer, phase) is double-booked and every entry keeps the
// phase-offset and phase-length invariants.
inline std::vector<std::string> validate_schedule(const PipelineSchedule& s) {
    std::vector<std::string> conflicts;
    std::map<std::pair<int, int>, std::vector<ScheduleEntry>> by_resource;
    std::map<std::pair<int, int>, std::pair<long, long>> phase_starts;

    for (const ScheduleEntry& e : s.entries) {
        if (e.end - e.start != s.T) {
            std::ostringstream os;
            os << "sample " << e.sample << " layer " << e.layer << " "
               << phase_name(e.phase) << " spans " << (e.end - e.start)
               << " steps, expected " << s.T;
            conflicts.push_back(os.str());
        }
        by_resource[{e.layer, e.phase == Phase::fire}].push_back(e);
        auto& ps = phase_starts[{e.sample, e.layer}];
        (e.phase == Phase::accumulate ? ps.first : ps.second) = e.start;
    }
    for (const auto& [key, ps] : phase_starts) {
        if (ps.second != ps.first + s.T_delay) {
            std::ostringstream os;
            os << "sample " << key.first << " layer " << key.second
               << " fire starts at " << ps.second << ", expected accumulate+"
               << s.T_delay << " = " << ps.first + s.T_delay;
            conflicts.push_back(os.str());
        }
    }
    for (auto& [key, entries] : by_resource) {
        std::sort(entries.begin(), entries.end(),
                  [](const ScheduleEntry& a, const ScheduleEntry& b) {
                      return a.start < b.start;
                  });
        for (std::size_t i = 1; i < entries.size(); ++i) {
            if (entries[i].start < entries[i - 1].end) {
                std::ostringstream os;
                os << "layer " << key.first << " "
                   << phase_name(entries[i].phase) << " double-booked at step "
                   << entries[i].start << " by samples "
                   << entries[i - 1].sample << " and " << entries[i].sample;
                conflicts.push_back(os.str());
            }
        }
    }
    return conflicts;
}

// Step-by-layer occupancy chart; one row per (layer, phase), one column per
// step, cells show the occupying sample id.
inline std::string render_gantt(const PipelineSchedule& s, long max_steps = 160) {
    long horizon = 0;
    for (const ScheduleEntry& e : s.entries) horizon = std::max(horizon, e.end);
    const bool truncated = horizon > max_steps;
    horizon = std::min(horizon, max_steps);

    auto cell = [](int sample) -> char {
        if (sample <= 9) return static_cast<char>('0' + sample);
        if (sample <= 35) return static_cast<char>('a' + sample - 10);
        return '+';
    };

    std::ostringstream os;
    for (int layer = 1; layer <= s.n_layers; ++layer) {
        for (Phase phase : {Phase::accumulate, Phase::fire}) {
            std::string row(static_cast<std::size_t>(horizon), '.');
            for (const ScheduleEntry& e : s.entries) {
                if (e.layer != layer || e.phase != phase) continue;
                for (long t = e.start; t < std::min(e.end, horizon); ++t)
                    row[static_cast<std::size_t>(t)] = cell(e.sample);
            }
            os << "L" << layer << (phase == Phase::fire ? ".fire " : ".acc  ")
               << "|" << row << (truncated ? "..." : "|") << "\n";
        }
    }
    os << "steps 0.." << horizon << (truncated ? " (truncated)" : "") << "\n";
    return os.str();
}

}  // namespace tdsnn
