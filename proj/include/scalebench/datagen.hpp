#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <type_traits>
#include <utility>

#include "scalebench/parallel.hpp"
#include "scalebench/placement.hpp"

namespace scalebench {

enum class element_type { int32, int64, float32, float64 };

inline std::size_t element_size(element_type t) {
    switch (t) {
    case element_type::int32: return 4;
    case element_type::int64: return 8;
    case element_type::float32: return 4;
    case element_type::float64: return 8;
    }
    return 0;
}

inline const char* to_string(element_type t) {
    switch (t) {
    case element_type::int32: return "int32";
    case element_type::int64: return "int64";
    case element_type::float32: return "float32";
    case element_type::float64: return "float64";
    }
    return "?";
}

inline std::optional<element_type> element_from_string(std::string_view s) {
    if (s == "int32") return element_type::int32;
    if (s == "int64") return element_type::int64;
    if (s == "float32") return element_type::float32;
    if (s == "float64") return element_type::float64;
    return std::nullopt;
}

template <typename T>
constexpr element_type element_tag_of() {
    if constexpr (std::is_same_v<T, std::int32_t>) return element_type::int32;
    else if constexpr (std::is_same_v<T, std::int64_t>) return element_type::int64;
    else if constexpr (std::is_same_v<T, float>) return element_type::float32;
    else return element_type::float64;
}

enum class data_pattern { increment, shuffled_permutation };

/// Fully determines an input array: the same (n, element, seed, pattern)
/// always yields bit-identical data, on any backend, at any thread count.
struct data_spec {
    std::uint64_t n = 0;
    element_type element = element_type::int32;
    std::uint64_t seed = 0;
    data_pattern pattern = data_pattern::increment;
};

/// splitmix64: the suite's pinned PRNG. Tiny, seedable, identical output on
/// every platform, which keeps shuffles and target draws reproducible.
class splitmix64 {
public:
    explicit splitmix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform draw from [0, bound), bound >= 1. Lemire's multiply-shift
    /// with rejection, so the distribution is exact and the consumed stream
    /// is deterministic.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) {
            throw invalid_spec_error("splitmix64::next_below: bound must be >= 1");
        }
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(next()) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    std::uint64_t state_;
};

/// Order-sensitive FNV-1a over raw bytes; the empty input hashes to the
/// offset basis. Used as a dead-code-elimination sink and for cheap
/// cross-backend comparisons.
inline std::uint64_t checksum(std::span<const std::byte> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const std::byte b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename T>
std::uint64_t checksum(std::span<const T> data) {
    return checksum(std::as_bytes(data));
}

/// Fisher-Yates over the given PRNG stream. Inherently sequential; callers
/// run it after the parallel first-touch fill.
template <typename T>
void reshuffle(std::span<T> data, splitmix64& rng) {
    for (std::size_t i = data.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(data[i - 1], data[j]);
    }
}

/// v = [1, 2, ..., n] converted to T. Memory comes from the requested
/// allocator; the fill writes disjoint index ranges per worker, so values
/// land on the pages each worker first touched.
template <typename T>
buffer<T> generate_increment(const data_spec& spec, const execution_policy& policy,
                             allocator_kind alloc = allocator_kind::first_touch) {
    if (spec.pattern != data_pattern::increment) {
        throw invalid_spec_error("generate_increment: spec pattern must be increment");
    }
    if (spec.n == 0) {
        throw invalid_spec_error("generate_increment: element count must be >= 1");
    }
    buffer<T> buf(allocate_buffer(alloc, spec.n, sizeof(T), policy), spec.n);
    auto out = buf.span();
    for_chunks(policy, spec.n, [&](index_range r, std::size_t) {
        for (std::size_t i = r.begin; i < r.end; ++i) {
            out[i] = static_cast<T>(i + 1);
        }
    });
    return buf;
}

/// A seed-determined permutation of {1..n}.
template <typename T>
buffer<T> generate_shuffled(const data_spec& spec, const execution_policy& policy,
                            allocator_kind alloc = allocator_kind::first_touch) {
    static_assert(std::is_integral_v<T>, "permutations take integral element types");
    if (spec.pattern != data_pattern::shuffled_permutation) {
        throw invalid_spec_error("generate_shuffled: spec pattern must be shuffled_permutation");
    }
    if (spec.n == 0) {
        throw invalid_spec_error("generate_shuffled: element count must be >= 1");
    }
    data_spec inc = spec;
    inc.pattern = data_pattern::increment;
    buffer<T> buf = generate_increment<T>(inc, policy, alloc);
    splitmix64 rng(spec.seed);
    reshuffle(buf.span(), rng);
    return buf;
}

} // namespace scalebench
