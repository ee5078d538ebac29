#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scalebench/kernels.hpp"
#include "scalebench/placement.hpp"
#include "scalebench/policy.hpp"

namespace scalebench {

/// Raw wall-clock repetitions for one benchmark point.
struct measurement {
    std::string kernel;
    backend_id backend = backend_id::seq;
    std::size_t threads = 1;
    std::uint64_t n = 0;
    allocator_kind allocator = allocator_kind::first_touch;
    element_type element = element_type::int32;
    std::vector<std::int64_t> durations_ns;
    std::uint64_t bytes_per_iteration = 0;
    bool valid = false;
    bool fallback = false;
};

struct stats {
    double median_ns = 0.0;
    std::int64_t min_ns = 0;
    std::int64_t max_ns = 0;
    double throughput_bytes_per_s = 0.0;
};

/// Runs setup untimed, then measures body alone on the monotonic clock.
/// Wall time, not CPU time: the body may be multi-threaded.
template <typename Setup, typename Body>
std::int64_t time_once(Setup&& setup, Body&& body) {
    setup();
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body();
    } catch (const std::exception& e) {
        throw execution_error(std::string("timed body failed: ") + e.what());
    } catch (...) {
        throw execution_error("timed body failed: unknown exception");
    }
    const auto t1 = std::chrono::steady_clock::now();
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
    return std::max<std::int64_t>(1, ns);  // clock granularity floor; durations stay positive
}

/// Median with the even-count convention: arithmetic mean of the two
/// central values.
inline double median_of(std::span<const std::int64_t> durations) {
    if (durations.empty()) {
        throw invalid_spec_error("median_of: need at least one duration");
    }
    std::vector<std::int64_t> sorted(durations.begin(), durations.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    if (sorted.size() % 2 != 0) {
        return static_cast<double>(sorted[mid]);
    }
    return (static_cast<double>(sorted[mid - 1]) + static_cast<double>(sorted[mid])) / 2.0;
}

inline double throughput_bytes_per_s(std::uint64_t bytes_per_iteration, double median_ns) {
    return static_cast<double>(bytes_per_iteration) * 1e9 / median_ns;
}

/// One benchmark point: build the instance, verify once (untimed), run the
/// warmups, then record `reps` timed executions. Refreshes (target redraw,
/// re-shuffle) always happen outside the timed region. A failing verifier
/// marks the measurement invalid; the timings are still collected so the
/// sweep can continue uniformly.
inline measurement run_point(const kernel_spec& kernel, const execution_policy& policy,
                             const data_spec& spec, int reps, int warmups,
                             const placement_config& placement = {}) {
    if (reps < 1) {
        throw invalid_spec_error("run_point: reps must be >= 1");
    }
    if (warmups < 0) {
        throw invalid_spec_error("run_point: warmups must be >= 0");
    }
    measurement m;
    m.kernel = kernel.id;
    m.backend = policy.backend;
    m.threads = policy.threads;
    m.n = spec.n;
    m.allocator = placement.allocator;
    m.element = spec.element;
    m.bytes_per_iteration = kernel.bytes_rule ? kernel.bytes_rule(spec.n, element_size(spec.element))
                                              : default_bytes_rule(spec.n, element_size(spec.element));

    kernel_instance instance = kernel.make_instance(spec, policy, placement.allocator);
    try {
        m.valid = kernel.verify(policy, instance);
    } catch (const std::exception&) {
        m.valid = false;
    }

    auto refresh = [&] {
        if (kernel.refresh) kernel.refresh(instance);
    };
    auto body = [&] { kernel.body(policy, instance); };

    for (int w = 0; w < warmups; ++w) {
        refresh();
        body();
    }
    m.durations_ns.reserve(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        m.durations_ns.push_back(time_once(refresh, body));
    }
    m.fallback = instance.fell_back;
    return m;
}

inline stats summarize(const measurement& m) {
    if (!m.valid) {
        throw invalid_spec_error("summarize: measurement failed verification");
    }
    stats s;
    s.median_ns = median_of(m.durations_ns);
    s.min_ns = *std::min_element(m.durations_ns.begin(), m.durations_ns.end());
    s.max_ns = *std::max_element(m.durations_ns.begin(), m.durations_ns.end());
    s.throughput_bytes_per_s = throughput_bytes_per_s(m.bytes_per_iteration, s.median_ns);
    return s;
}

} // namespace scalebench
