#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <new>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scalebench/parallel.hpp"
#include "scalebench/policy.hpp"

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif

namespace scalebench {

enum class allocator_kind { first_touch, plain };

inline const char* to_string(allocator_kind a) {
    return a == allocator_kind::first_touch ? "first_touch" : "default";
}

inline std::optional<allocator_kind> allocator_from_string(std::string_view s) {
    if (s == "first_touch") return allocator_kind::first_touch;
    if (s == "default" || s == "plain") return allocator_kind::plain;
    return std::nullopt;
}

/// Move-only owner of a block obtained from ::operator new. The block is
/// exactly the requested size; no headers live inside the returned region.
class raw_buffer {
public:
    raw_buffer() = default;

    explicit raw_buffer(std::size_t bytes)
        : ptr_(::operator new(bytes, std::nothrow)), bytes_(bytes) {
        if (ptr_ == nullptr) {
            throw resource_error("allocation of " + std::to_string(bytes) + " bytes failed");
        }
    }

    raw_buffer(raw_buffer&& other) noexcept : ptr_(other.ptr_), bytes_(other.bytes_) {
        other.ptr_ = nullptr;
        other.bytes_ = 0;
    }

    raw_buffer& operator=(raw_buffer&& other) noexcept {
        if (this != &other) {
            ::operator delete(ptr_);
            ptr_ = other.ptr_;
            bytes_ = other.bytes_;
            other.ptr_ = nullptr;
            other.bytes_ = 0;
        }
        return *this;
    }

    raw_buffer(const raw_buffer&) = delete;
    raw_buffer& operator=(const raw_buffer&) = delete;

    ~raw_buffer() { ::operator delete(ptr_); }

    std::byte* data() noexcept { return static_cast<std::byte*>(ptr_); }
    const std::byte* data() const noexcept { return static_cast<const std::byte*>(ptr_); }
    std::size_t size_bytes() const noexcept { return bytes_; }
    explicit operator bool() const noexcept { return ptr_ != nullptr; }

private:
    void* ptr_ = nullptr;
    std::size_t bytes_ = 0;
};

/// Typed view over a raw_buffer holding `count` elements of T.
template <typename T>
class buffer {
    static_assert(std::is_trivially_copyable_v<T>);

public:
    using value_type = T;

    buffer() = default;

    buffer(raw_buffer raw, std::size_t count) : raw_(std::move(raw)), count_(count) {
        if (raw_.size_bytes() != count * sizeof(T)) {
            throw invalid_spec_error("buffer: byte size does not match element count");
        }
    }

    std::size_t size() const noexcept { return count_; }
    bool empty() const noexcept { return count_ == 0; }
    T* data() noexcept { return reinterpret_cast<T*>(raw_.data()); }
    const T* data() const noexcept { return reinterpret_cast<const T*>(raw_.data()); }
    std::span<T> span() noexcept { return {data(), count_}; }
    std::span<const T> span() const noexcept { return {data(), count_}; }
    T& operator[](std::size_t i) noexcept { return data()[i]; }
    const T& operator[](std::size_t i) const noexcept { return data()[i]; }

private:
    raw_buffer raw_;
    std::size_t count_ = 0;
};

/// One worker's slice of the first-touch pass: objects [begin, end).
struct touch_range {
    std::size_t worker = 0;
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }

    friend bool operator==(const touch_range&, const touch_range&) = default;
};

namespace detail {

inline std::size_t checked_total_bytes(std::size_t count, std::size_t element_size) {
    if (count == 0) {
        throw invalid_spec_error("allocate: element count must be >= 1");
    }
    if (element_size == 0) {
        throw invalid_spec_error("allocate: element size must be >= 1");
    }
    if (count > static_cast<std::size_t>(-1) / element_size) {
        throw resource_error("allocate: byte size overflows size_t");
    }
    return count * element_size;
}

} // namespace detail

/// Allocates count*element_size bytes and makes the policy's workers write
/// the first byte of every object (value 0) over contiguous static chunks,
/// so the OS first-touch policy places each page near the worker that will
/// process it. The touched ranges can be captured for inspection;
/// they partition [0, count) exactly.
inline raw_buffer first_touch_allocate(std::size_t count, std::size_t element_size,
                                       const execution_policy& policy,
                                       std::vector<touch_range>* touched = nullptr) {
    const std::size_t bytes = detail::checked_total_bytes(count, element_size);
    raw_buffer buf(bytes);
    std::byte* base = buf.data();
    std::mutex record_mutex;
    std::vector<touch_range> record;
    for_chunks(policy, count, [&](index_range r, std::size_t slot) {
        for (std::size_t i = r.begin; i < r.end; ++i) {
            base[i * element_size] = std::byte{0};
        }
        if (touched != nullptr) {
            std::lock_guard lock(record_mutex);
            record.push_back({slot, r.begin, r.end});
        }
    });
    if (touched != nullptr) {
        std::sort(record.begin(), record.end(),
                  [](const touch_range& a, const touch_range& b) { return a.begin < b.begin; });
        *touched = std::move(record);
    }
    return buf;
}

/// Plain allocation with no touching; the baseline side of allocator A/B
/// comparisons. The returned memory is uninitialized.
inline raw_buffer default_allocate(std::size_t count, std::size_t element_size) {
    return raw_buffer(detail::checked_total_bytes(count, element_size));
}

inline raw_buffer allocate_buffer(allocator_kind kind, std::size_t count,
                                  std::size_t element_size, const execution_policy& policy,
                                  std::vector<touch_range>* touched = nullptr) {
    if (kind == allocator_kind::first_touch) {
        return first_touch_allocate(count, element_size, policy, touched);
    }
    return default_allocate(count, element_size);
}

struct placement_config {
    allocator_kind allocator = allocator_kind::first_touch;
    bool pin_threads = false;
};

struct pin_report {
    bool pinned = false;
    std::string warning;
};

/// Binds worker k to logical CPU k (compact order). Failures downgrade to a
/// recorded warning; execution continues unpinned.
inline pin_report pin_workers(const execution_policy& policy) {
#if defined(__linux__)
    auto pin_self = [](std::size_t cpu) -> int {
        cpu_set_t set;
        CPU_ZERO(&set);
        if (cpu >= CPU_SETSIZE) return EINVAL;
        CPU_SET(cpu, &set);
        return pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
    };
    switch (policy.backend) {
    case backend_id::seq: {
        // The calling thread is the only worker.
        const int rc = pin_self(0);
        if (rc != 0) {
            return {false, "pinning failed for the sequential worker (errno " +
                               std::to_string(rc) + ")"};
        }
        return {true, {}};
    }
    case backend_id::pool: {
        auto& pool = detail::require_pool(policy);
        std::vector<int> rcs(pool.size(), 0);
        pool.run([&](std::size_t w) { rcs[w] = pin_self(w); });
        for (std::size_t w = 0; w < rcs.size(); ++w) {
            if (rcs[w] != 0) {
                return {false, "pinning worker " + std::to_string(w) + " to cpu " +
                                   std::to_string(w) + " failed (errno " +
                                   std::to_string(rcs[w]) + ")"};
            }
        }
        return {true, {}};
    }
    case backend_id::native:
        return {false, "native backend workers are managed by the vendor runtime; "
                       "pinning is not applied"};
    }
    return {false, "unknown backend"};
#else
    (void)policy;
    return {false, "thread affinity is not supported on this platform"};
#endif
}

} // namespace scalebench
