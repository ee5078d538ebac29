#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <memory>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include "scalebench/policy.hpp"

#if SCALEBENCH_HAS_NATIVE
#include <execution>
#include <numeric>
#endif

namespace scalebench {

/// Per-call execution report. fell_back_to_seq is set when a policy with a
/// multi-thread budget routed the call through the sequential path (e.g.
/// pool sort at or below its cutoff).
struct exec_info {
    bool fell_back_to_seq = false;
};

struct index_range {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool empty() const noexcept { return begin == end; }
};

/// Balanced contiguous partition of [0, n) into at most `parts` ranges.
/// Whenever n >= min_chunk * parts every range holds at least min_chunk
/// elements; for smaller n fewer ranges are produced instead of slicing
/// below the minimum.
inline std::vector<index_range> static_partition(std::size_t n, std::size_t parts,
                                                 std::size_t min_chunk = 1) {
    std::vector<index_range> out;
    if (n == 0) {
        return out;
    }
    if (parts == 0) parts = 1;
    if (min_chunk == 0) min_chunk = 1;
    const std::size_t k = std::min(parts, std::max<std::size_t>(1, n / min_chunk));
    const std::size_t base = n / k;
    const std::size_t rem = n % k;
    out.reserve(k);
    std::size_t at = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t len = base + (i < rem ? 1 : 0);
        out.push_back({at, at + len});
        at += len;
    }
    return out;
}

/// Modular addition: re-associated parallel integer sums stay bit-exact.
template <typename T>
struct wrapping_add {
    T operator()(T a, T b) const {
        if constexpr (std::is_integral_v<T>) {
            using U = std::make_unsigned_t<T>;
            return static_cast<T>(static_cast<U>(a) + static_cast<U>(b));
        } else {
            return a + b;
        }
    }
};

namespace detail {

/// Elements scanned between checks of the shared cancellation flag in the
/// chunked find. 4096 keeps the flag out of the inner loop while bounding
/// how far workers overrun a hit.
inline constexpr std::size_t find_cancel_stride = 4096;

// Random-access counting iterator; lets the vendor STL drive chunk loops.
class counting_iterator {
public:
    using value_type = std::size_t;
    using difference_type = std::ptrdiff_t;
    using pointer = const std::size_t*;
    using reference = std::size_t;
    using iterator_category = std::random_access_iterator_tag;

    counting_iterator() = default;
    explicit counting_iterator(std::size_t v) : v_(v) {}

    std::size_t operator*() const { return v_; }
    std::size_t operator[](difference_type d) const { return v_ + static_cast<std::size_t>(d); }

    counting_iterator& operator++() { ++v_; return *this; }
    counting_iterator operator++(int) { auto t = *this; ++v_; return t; }
    counting_iterator& operator--() { --v_; return *this; }
    counting_iterator operator--(int) { auto t = *this; --v_; return t; }
    counting_iterator& operator+=(difference_type d) { v_ += static_cast<std::size_t>(d); return *this; }
    counting_iterator& operator-=(difference_type d) { v_ -= static_cast<std::size_t>(d); return *this; }

    friend counting_iterator operator+(counting_iterator it, difference_type d) { return it += d; }
    friend counting_iterator operator+(difference_type d, counting_iterator it) { return it += d; }
    friend counting_iterator operator-(counting_iterator it, difference_type d) { return it -= d; }
    friend difference_type operator-(counting_iterator a, counting_iterator b) {
        return static_cast<difference_type>(a.v_) - static_cast<difference_type>(b.v_);
    }
    friend bool operator==(counting_iterator a, counting_iterator b) { return a.v_ == b.v_; }
    friend bool operator!=(counting_iterator a, counting_iterator b) { return a.v_ != b.v_; }
    friend bool operator<(counting_iterator a, counting_iterator b) { return a.v_ < b.v_; }
    friend bool operator>(counting_iterator a, counting_iterator b) { return a.v_ > b.v_; }
    friend bool operator<=(counting_iterator a, counting_iterator b) { return a.v_ <= b.v_; }
    friend bool operator>=(counting_iterator a, counting_iterator b) { return a.v_ >= b.v_; }

private:
    std::size_t v_ = 0;
};

/// Workers grab shrinking chunks from a shared counter. Every grab holds at
/// least min_chunk elements; a sub-minimum tail is folded into the grab
/// before it.
template <typename Fn>
void run_guided(thread_pool& pool, std::size_t n, std::size_t threads, std::size_t min_chunk,
                Fn&& fn) {
    if (n == 0) return;
    if (min_chunk == 0) min_chunk = 1;
    std::atomic<std::size_t> next{0};
    pool.run([&](std::size_t worker) {
        for (;;) {
            std::size_t cur = next.load(std::memory_order_relaxed);
            std::size_t chunk = 0;
            do {
                if (cur >= n) return;
                const std::size_t remaining = n - cur;
                chunk = std::max(min_chunk, remaining / (2 * threads));
                if (remaining < chunk + min_chunk) {
                    chunk = remaining;
                }
            } while (!next.compare_exchange_weak(cur, cur + chunk, std::memory_order_relaxed));
            fn(index_range{cur, cur + chunk}, worker);
        }
    });
}

[[noreturn]] inline void native_unavailable() {
    throw capability_error("native backend not compiled in");
}

} // namespace detail

/// Applies fn(range, slot) over a static contiguous partition of [0, count)
/// using the policy's execution resources. slot identifies the partition
/// index, not an OS thread. Used for data generation and first-touch.
template <typename Fn>
void for_chunks(const execution_policy& p, std::size_t count, Fn&& fn) {
    if (count == 0) return;
    switch (p.backend) {
    case backend_id::seq:
        fn(index_range{0, count}, std::size_t{0});
        return;
    case backend_id::pool: {
        auto& pool = detail::require_pool(p);
        const auto ranges = static_partition(count, pool.size(), p.min_chunk);
        pool.run([&](std::size_t w) {
            if (w < ranges.size()) fn(ranges[w], w);
        });
        return;
    }
    case backend_id::native: {
#if SCALEBENCH_HAS_NATIVE
        const auto ranges = static_partition(count, p.threads, p.min_chunk);
        std::for_each(std::execution::par, detail::counting_iterator(0),
                      detail::counting_iterator(ranges.size()),
                      [&](std::size_t i) { fn(ranges[i], i); });
        return;
#else
        detail::native_unavailable();
#endif
    }
    }
}

/// In-place elementwise application: data[i] = f(data[i]), any order.
template <typename T, typename F>
void par_map(const execution_policy& p, std::span<T> data, F f, exec_info* info = nullptr) {
    if (info) *info = {};
    switch (p.backend) {
    case backend_id::seq:
        for (auto& x : data) x = f(x);
        return;
    case backend_id::pool: {
        auto& pool = detail::require_pool(p);
        auto apply = [&](index_range r, std::size_t) {
            for (std::size_t i = r.begin; i < r.end; ++i) data[i] = f(data[i]);
        };
        if (p.chunking == chunk_mode::guided) {
            detail::run_guided(pool, data.size(), p.threads, p.min_chunk, apply);
        } else {
            const auto ranges = static_partition(data.size(), pool.size(), p.min_chunk);
            pool.run([&](std::size_t w) {
                if (w < ranges.size()) apply(ranges[w], w);
            });
        }
        return;
    }
    case backend_id::native: {
#if SCALEBENCH_HAS_NATIVE
        std::for_each(std::execution::par, data.data(), data.data() + data.size(),
                      [&f](T& x) { x = f(x); });
        return;
#else
        detail::native_unavailable();
#endif
    }
    }
}

/// Fold of all elements under an associative, commutative op; identity is
/// returned for empty input. Partial results are combined in slot order.
template <typename T, typename Op>
T par_reduce(const execution_policy& p, std::span<const T> data, Op op, T identity,
             exec_info* info = nullptr) {
    if (info) *info = {};
    switch (p.backend) {
    case backend_id::seq: {
        T acc = identity;
        for (const auto& x : data) acc = op(acc, x);
        return acc;
    }
    case backend_id::pool: {
        auto& pool = detail::require_pool(p);
        struct alignas(64) slot {
            T value;
        };
        std::vector<slot> partials(pool.size(), slot{identity});
        auto fold = [&](index_range r, std::size_t w) {
            T acc = partials[w].value;
            for (std::size_t i = r.begin; i < r.end; ++i) acc = op(acc, data[i]);
            partials[w].value = acc;
        };
        if (p.chunking == chunk_mode::guided) {
            detail::run_guided(pool, data.size(), p.threads, p.min_chunk, fold);
        } else {
            const auto ranges = static_partition(data.size(), pool.size(), p.min_chunk);
            pool.run([&](std::size_t w) {
                if (w < ranges.size()) fold(ranges[w], w);
            });
        }
        T acc = identity;
        for (const auto& s : partials) acc = op(acc, s.value);
        return acc;
    }
    case backend_id::native: {
#if SCALEBENCH_HAS_NATIVE
        return std::reduce(std::execution::par, data.data(), data.data() + data.size(),
                           identity, op);
#else
        detail::native_unavailable();
#endif
    }
    }
    return identity;
}

/// Inclusive prefix sum under wrapping arithmetic: out[i] = sum of in[0..i].
/// The pool backend runs the classic two-pass scheme over static contiguous
/// blocks (block sums, exclusive prefix of the sums, seeded local scans);
/// block boundaries must be stable across phases, so guided chunking does
/// not apply here.
template <typename T>
void par_inclusive_scan(const execution_policy& p, std::span<const T> in, std::span<T> out,
                        exec_info* info = nullptr) {
    if (info) *info = {};
    if (in.size() != out.size()) {
        throw invalid_spec_error("inclusive_scan: output length (" + std::to_string(out.size()) +
                                 ") must equal input length (" + std::to_string(in.size()) + ")");
    }
    if (in.empty()) return;
    const wrapping_add<T> add;
    switch (p.backend) {
    case backend_id::seq: {
        T acc{};
        for (std::size_t i = 0; i < in.size(); ++i) {
            acc = add(acc, in[i]);
            out[i] = acc;
        }
        return;
    }
    case backend_id::pool: {
        auto& pool = detail::require_pool(p);
        const auto ranges = static_partition(in.size(), pool.size(), p.min_chunk);
        struct alignas(64) slot {
            T value;
        };
        std::vector<slot> block_sums(ranges.size(), slot{T{}});
        pool.run([&](std::size_t w) {
            if (w >= ranges.size()) return;
            T acc{};
            for (std::size_t i = ranges[w].begin; i < ranges[w].end; ++i) acc = add(acc, in[i]);
            block_sums[w].value = acc;
        });
        std::vector<T> offsets(ranges.size(), T{});
        T running{};
        for (std::size_t b = 0; b < ranges.size(); ++b) {
            offsets[b] = running;
            running = add(running, block_sums[b].value);
        }
        pool.run([&](std::size_t w) {
            if (w >= ranges.size()) return;
            T acc = offsets[w];
            for (std::size_t i = ranges[w].begin; i < ranges[w].end; ++i) {
                acc = add(acc, in[i]);
                out[i] = acc;
            }
        });
        return;
    }
    case backend_id::native: {
#if SCALEBENCH_HAS_NATIVE
        std::inclusive_scan(std::execution::par, in.data(), in.data() + in.size(), out.data(),
                            add);
        return;
#else
        detail::native_unavailable();
#endif
    }
    }
}

/// In-place ascending sort. The pool backend sorts static blocks in
/// parallel and merges them pairwise through a scratch buffer; inputs at or
/// below sort_seq_cutoff take the sequential path and report a fallback
/// when the budget was > 1 thread.
template <typename T>
void par_sort(const execution_policy& p, std::span<T> data, exec_info* info = nullptr) {
    if (info) *info = {};
    const std::size_t n = data.size();
    switch (p.backend) {
    case backend_id::seq:
        std::sort(data.begin(), data.end());
        return;
    case backend_id::pool: {
        auto& pool = detail::require_pool(p);
        if (n <= p.sort_seq_cutoff || pool.size() == 1) {
            if (info && p.threads > 1) info->fell_back_to_seq = true;
            std::sort(data.begin(), data.end());
            return;
        }
        auto blocks = static_partition(n, pool.size(), 1);
        pool.run([&](std::size_t w) {
            if (w < blocks.size()) {
                std::sort(data.data() + blocks[w].begin, data.data() + blocks[w].end);
            }
        });
        if (blocks.size() == 1) return;
        // Pairwise merge rounds, ping-ponging between data and scratch.
        std::unique_ptr<T[]> scratch(new T[n]);
        T* src = data.data();
        T* dst = scratch.get();
        while (blocks.size() > 1) {
            const std::size_t pairs = blocks.size() / 2;
            pool.run([&](std::size_t w) {
                for (std::size_t j = w; j < pairs; j += pool.size()) {
                    const auto a = blocks[2 * j];
                    const auto b = blocks[2 * j + 1];
                    std::merge(src + a.begin, src + a.end, src + b.begin, src + b.end,
                               dst + a.begin);
                }
            });
            std::vector<index_range> merged;
            merged.reserve(pairs + 1);
            for (std::size_t j = 0; j < pairs; ++j) {
                merged.push_back({blocks[2 * j].begin, blocks[2 * j + 1].end});
            }
            if (blocks.size() % 2 != 0) {
                const auto tail = blocks.back();
                std::copy(src + tail.begin, src + tail.end, dst + tail.begin);
                merged.push_back(tail);
            }
            blocks = std::move(merged);
            std::swap(src, dst);
        }
        if (src != data.data()) {
            const auto ranges = static_partition(n, pool.size(), 1);
            pool.run([&](std::size_t w) {
                if (w < ranges.size()) {
                    std::copy(src + ranges[w].begin, src + ranges[w].end,
                              data.data() + ranges[w].begin);
                }
            });
        }
        return;
    }
    case backend_id::native: {
#if SCALEBENCH_HAS_NATIVE
        std::sort(std::execution::par, data.data(), data.data() + n);
        return;
#else
        detail::native_unavailable();
#endif
    }
    }
}

/// Linear search; returns an index holding target if present (any witness
/// is acceptable). The pool backend searches chunks with early exit via a
/// shared flag checked every find_cancel_stride elements; the smallest
/// index discovered before cancellation wins.
template <typename T>
std::optional<std::size_t> par_find(const execution_policy& p, std::span<const T> data, T target,
                                    exec_info* info = nullptr) {
    if (info) *info = {};
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    switch (p.backend) {
    case backend_id::seq: {
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (data[i] == target) return i;
        }
        return std::nullopt;
    }
    case backend_id::pool: {
        auto& pool = detail::require_pool(p);
        std::atomic<std::size_t> best{npos};
        auto search = [&](index_range r, std::size_t) {
            for (std::size_t at = r.begin; at < r.end; at += detail::find_cancel_stride) {
                if (best.load(std::memory_order_relaxed) != npos) return;
                const std::size_t stop = std::min(r.end, at + detail::find_cancel_stride);
                for (std::size_t i = at; i < stop; ++i) {
                    if (data[i] == target) {
                        std::size_t cur = best.load(std::memory_order_relaxed);
                        while (i < cur &&
                               !best.compare_exchange_weak(cur, i, std::memory_order_relaxed)) {
                        }
                        return;
                    }
                }
            }
        };
        if (p.chunking == chunk_mode::guided) {
            detail::run_guided(pool, data.size(), p.threads, p.min_chunk,
                               [&](index_range r, std::size_t w) {
                                   if (best.load(std::memory_order_relaxed) == npos) search(r, w);
                               });
        } else {
            const auto ranges = static_partition(data.size(), pool.size(), p.min_chunk);
            pool.run([&](std::size_t w) {
                if (w < ranges.size()) search(ranges[w], w);
            });
        }
        const std::size_t found = best.load(std::memory_order_relaxed);
        if (found == npos) return std::nullopt;
        return found;
    }
    case backend_id::native: {
#if SCALEBENCH_HAS_NATIVE
        const T* begin = data.data();
        const T* end = begin + data.size();
        const T* it = std::find(std::execution::par, begin, end, target);
        if (it == end) return std::nullopt;
        return static_cast<std::size_t>(it - begin);
#else
        detail::native_unavailable();
#endif
    }
    }
    return std::nullopt;
}

} // namespace scalebench
