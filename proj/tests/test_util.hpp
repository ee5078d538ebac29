#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "scalebench/policy.hpp"

namespace sbtest {

// Oversubscription is on for every test policy: CI machines may have fewer
// cores than the thread counts the suites exercise.
inline scalebench::execution_policy pool_policy(
    std::size_t threads,
    scalebench::chunk_mode mode = scalebench::chunk_mode::static_chunks,
    std::size_t min_chunk = 1, std::size_t sort_cutoff = 4096) {
    scalebench::policy_options opts;
    opts.allow_oversubscribe = true;
    opts.chunking = mode;
    opts.min_chunk = min_chunk;
    opts.sort_seq_cutoff = sort_cutoff;
    return scalebench::make_policy(scalebench::backend_id::pool, threads, opts);
}

inline scalebench::execution_policy seq_policy() {
    return scalebench::make_policy(scalebench::backend_id::seq, 1);
}

inline scalebench::execution_policy native_policy(std::size_t threads) {
    scalebench::policy_options opts;
    opts.allow_oversubscribe = true;
    return scalebench::make_policy(scalebench::backend_id::native, threads, opts);
}

/// Policies covering every compiled-in backend at the given thread counts.
inline std::vector<scalebench::execution_policy> all_policies(
    std::initializer_list<std::size_t> thread_counts,
    scalebench::chunk_mode mode = scalebench::chunk_mode::static_chunks) {
    std::vector<scalebench::execution_policy> out;
    out.push_back(seq_policy());
    for (const auto t : thread_counts) {
        out.push_back(pool_policy(t, mode));
    }
    if (scalebench::native_backend_compiled()) {
        for (const auto t : thread_counts) {
            out.push_back(native_policy(t));
        }
    }
    return out;
}

/// Test-data generator, deliberately independent of the library's PRNG.
inline std::vector<std::int32_t> random_ints(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int32_t> dist(-1000000, 1000000);
    std::vector<std::int32_t> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

} // namespace sbtest
