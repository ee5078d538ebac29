#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "scalebench/errors.hpp"
#include "scalebench/thread_pool.hpp"

#if SCALEBENCH_HAS_NATIVE
#include <tbb/global_control.h>
#endif

namespace scalebench {

enum class backend_id { seq, pool, native };

/// How the pool backend carves an index space into per-worker work.
/// static_chunks: one balanced contiguous range per worker (NUMA-friendly,
/// mirrors first-touch placement). guided: workers grab shrinking chunks
/// from a shared counter.
enum class chunk_mode { static_chunks, guided };

/// One of the uniform parallel primitives a backend may implement.
enum class primitive_kind { map, reduce, scan, sort, find };

inline const char* to_string(backend_id b) {
    switch (b) {
    case backend_id::seq: return "seq";
    case backend_id::pool: return "pool";
    case backend_id::native: return "native";
    }
    return "?";
}

inline std::optional<backend_id> backend_from_string(std::string_view s) {
    if (s == "seq") return backend_id::seq;
    if (s == "pool") return backend_id::pool;
    if (s == "native") return backend_id::native;
    return std::nullopt;
}

inline const char* to_string(primitive_kind p) {
    switch (p) {
    case primitive_kind::map: return "map";
    case primitive_kind::reduce: return "reduce";
    case primitive_kind::scan: return "scan";
    case primitive_kind::sort: return "sort";
    case primitive_kind::find: return "find";
    }
    return "?";
}

constexpr bool native_backend_compiled() {
#if SCALEBENCH_HAS_NATIVE
    return true;
#else
    return false;
#endif
}

/// Capability card for one backend. A backend lacking a primitive is
/// reported as unsupported by the sweep runner, never silently
/// sequentialized without a flag in the results.
struct backend_descriptor {
    backend_id id = backend_id::seq;
    std::string name;
    bool available = true;
    bool supports_map = true;
    bool supports_reduce = true;
    bool supports_scan = true;
    bool supports_sort = true;
    bool supports_find = true;
    bool thread_control = true;        ///< honors an exact worker budget
    bool first_touch_compatible = true;
    double sort_scratch_factor = 0.0;  ///< extra bytes per input byte while sorting

    bool supports(primitive_kind p) const {
        switch (p) {
        case primitive_kind::map: return supports_map;
        case primitive_kind::reduce: return supports_reduce;
        case primitive_kind::scan: return supports_scan;
        case primitive_kind::sort: return supports_sort;
        case primitive_kind::find: return supports_find;
        }
        return false;
    }
};

/// The compiled-in backend set: seq and pool always, native when the build
/// found a vendor parallel STL to bind to.
inline std::vector<backend_descriptor> list_backends() {
    std::vector<backend_descriptor> out;
    out.push_back({backend_id::seq, "sequential", true, true, true, true, true, true,
                   true, true, 0.0});
    out.push_back({backend_id::pool, "worker pool", true, true, true, true, true, true,
                   true, true, 1.0});
    if (native_backend_compiled()) {
        // std::sort(par) in the vendor runtime stages through a temp buffer.
        out.push_back({backend_id::native, "vendor parallel STL", true, true, true, true,
                       true, true, true, true, 1.0});
    }
    return out;
}

inline backend_descriptor descriptor_for(backend_id id) {
    for (auto& d : list_backends()) {
        if (d.id == id) return d;
    }
    throw capability_error(std::string("backend not available in this build: ") + to_string(id));
}

inline std::size_t logical_core_count() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

/// Names a backend plus a thread budget; every kernel and the allocator are
/// parameterized by one of these. For the pool backend the policy owns its
/// worker pool, created up front and reused across repetitions.
struct execution_policy {
    backend_id backend = backend_id::seq;
    std::size_t threads = 1;
    chunk_mode chunking = chunk_mode::static_chunks;
    std::size_t min_chunk = 1;
    std::size_t sort_seq_cutoff = 4096;  ///< pool sort goes sequential at or below this size
    std::shared_ptr<thread_pool> workers;       // non-null iff backend == pool
    std::shared_ptr<void> native_thread_limit;  // keeps the vendor runtime capped
};

struct policy_options {
    chunk_mode chunking = chunk_mode::static_chunks;
    std::size_t min_chunk = 1;
    std::size_t sort_seq_cutoff = 4096;
    /// Permits thread budgets above the logical core count (otherwise the
    /// budget is clamped to the machine).
    bool allow_oversubscribe = false;
};

inline execution_policy make_policy(backend_id backend, std::size_t threads,
                                    const policy_options& opts = {}) {
    if (threads == 0) {
        throw invalid_spec_error("make_policy: thread count must be >= 1");
    }
    execution_policy p;
    p.backend = backend;
    p.chunking = opts.chunking;
    p.min_chunk = opts.min_chunk == 0 ? 1 : opts.min_chunk;
    p.sort_seq_cutoff = opts.sort_seq_cutoff;
    if (backend == backend_id::seq) {
        p.threads = 1;  // seq implies a single worker, whatever was asked
        return p;
    }
    p.threads = threads;
    if (!opts.allow_oversubscribe) {
        p.threads = std::min(p.threads, logical_core_count());
    }
    if (backend == backend_id::pool) {
        p.workers = std::make_shared<thread_pool>(p.threads);
        return p;
    }
#if SCALEBENCH_HAS_NATIVE
    p.native_thread_limit = std::make_shared<tbb::global_control>(
        tbb::global_control::max_allowed_parallelism, p.threads);
    return p;
#else
    throw capability_error("native backend not compiled in");
#endif
}

namespace detail {

inline thread_pool& require_pool(const execution_policy& p) {
    if (!p.workers) {
        throw invalid_spec_error("execution_policy: pool backend without a worker pool; "
                                 "construct policies with make_policy");
    }
    return *p.workers;
}

} // namespace detail

} // namespace scalebench
