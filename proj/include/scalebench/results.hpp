#pragma once

#include <cstdint>
#include <ctime>
#include <string>
#include <vector>

#include "scalebench/datagen.hpp"
#include "scalebench/placement.hpp"
#include "scalebench/policy.hpp"

#if defined(__linux__) || defined(__APPLE__)
#include <sys/utsname.h>
#include <unistd.h>
#endif

namespace scalebench {

inline constexpr int result_schema_version = 1;
inline constexpr const char* artifact_version = "0.1.0";

struct run_metadata {
    int schema_version = result_schema_version;
    std::string machine;
    std::string os;
    std::string version = artifact_version;
    unsigned logical_cores = 0;
    std::uint64_t seed = 0;
    std::string timestamp;
    bool pinned = false;
    std::string pin_warning;
    std::string max_threads_env;  // value of the env override, when set

    friend bool operator==(const run_metadata&, const run_metadata&) = default;
};

/// One row of a ResultFile. Skipped points (memory budget, unsupported
/// primitive) stay present so the grid remains complete; `note` carries the
/// reason. allocator_used records the first_touch -> default substitution
/// applied for allocator-incompatible backends.
struct point_record {
    std::string kernel;
    std::string backend;
    std::size_t threads = 1;
    std::uint64_t n = 0;
    std::string allocator;
    std::string allocator_used;
    std::string element;
    int reps = 0;
    std::vector<std::int64_t> durations_ns;
    double median_ns = 0.0;
    double throughput_bytes_per_s = 0.0;
    bool valid = false;
    bool fallback = false;
    bool skipped = false;
    std::string note;

    friend bool operator==(const point_record&, const point_record&) = default;
};

struct result_set {
    run_metadata meta;
    std::vector<point_record> points;

    friend bool operator==(const result_set&, const result_set&) = default;
};

/// Identity of a point within a plan/result set.
struct point_key {
    std::string kernel;
    std::string backend;
    std::size_t threads = 1;
    std::uint64_t n = 0;
    std::string allocator;

    friend bool operator==(const point_key&, const point_key&) = default;
    friend auto operator<=>(const point_key&, const point_key&) = default;
};

inline point_key key_of(const point_record& p) {
    return {p.kernel, p.backend, p.threads, p.n, p.allocator};
}

inline std::string to_string(const point_key& k) {
    return "(" + k.kernel + ", " + k.backend + ", threads=" + std::to_string(k.threads) +
           ", n=" + std::to_string(k.n) + ", " + k.allocator + ")";
}

inline std::string utc_timestamp() {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
#if defined(_WIN32)
    gmtime_s(&tm, &now);
#else
    gmtime_r(&now, &tm);
#endif
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline run_metadata collect_run_metadata(std::uint64_t seed) {
    run_metadata meta;
    meta.seed = seed;
    meta.logical_cores = static_cast<unsigned>(logical_core_count());
    meta.timestamp = utc_timestamp();
#if defined(__linux__) || defined(__APPLE__)
    utsname uts{};
    if (uname(&uts) == 0) {
        meta.os = std::string(uts.sysname) + " " + uts.release;
        meta.machine = uts.nodename;
    }
#endif
    if (meta.machine.empty()) meta.machine = "unknown";
    if (meta.os.empty()) meta.os = "unknown";
    return meta;
}

} // namespace scalebench
