#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "scalebench/results.hpp"

namespace scalebench {

inline constexpr double default_efficiency_threshold = 0.70;

namespace detail {

/// Usable = the point actually produced a trustworthy median.
inline bool usable(const point_record& p) {
    return p.valid && !p.skipped && !p.durations_ns.empty();
}

class point_index {
public:
    explicit point_index(const result_set& results) {
        for (const auto& p : results.points) {
            index_.emplace(key_of(p), &p);
        }
    }

    const point_record* find(const point_key& key) const {
        const auto it = index_.find(key);
        return it == index_.end() ? nullptr : it->second;
    }

    const point_record* find_usable(const point_key& key) const {
        const point_record* p = find(key);
        return (p != nullptr && usable(*p)) ? p : nullptr;
    }

private:
    std::map<point_key, const point_record*> index_;
};

} // namespace detail

struct speedup_entry {
    std::string backend;
    std::size_t threads = 1;
    double speedup = 0.0;
};

/// Fixed-baseline speedups: every row divides the sequential 1-thread
/// median by its own median, so values may exceed the core count.
struct speedup_table {
    std::string kernel;
    std::uint64_t n = 0;
    std::string allocator;
    double baseline_median_ns = 0.0;
    std::vector<speedup_entry> entries;  // (backend, threads) ascending
};

inline speedup_table compute_speedup_table(const result_set& results, const std::string& kernel,
                                           std::uint64_t n,
                                           const std::string& allocator = "first_touch") {
    const detail::point_index index(results);
    const point_key baseline_key{kernel, "seq", 1, n, allocator};
    const point_record* baseline = index.find_usable(baseline_key);
    if (baseline == nullptr) {
        throw analysis_error("missing baseline point: " + to_string(baseline_key));
    }
    speedup_table table;
    table.kernel = kernel;
    table.n = n;
    table.allocator = allocator;
    table.baseline_median_ns = baseline->median_ns;
    for (const auto& p : results.points) {
        if (p.kernel != kernel || p.n != n || p.allocator != allocator) continue;
        if (!detail::usable(p)) continue;
        table.entries.push_back({p.backend, p.threads, baseline->median_ns / p.median_ns});
    }
    std::sort(table.entries.begin(), table.entries.end(),
              [](const speedup_entry& a, const speedup_entry& b) {
                  return std::tie(a.backend, a.threads) < std::tie(b.backend, b.threads);
              });
    return table;
}

/// Per-backend strong-scaling efficiency E(p) = T(1) / (p * T(p)) against
/// the backend's own 1-thread run, and the largest grid thread count whose
/// efficiency still meets the threshold (inclusive comparison).
struct efficiency_record {
    std::string backend;
    std::vector<std::pair<std::size_t, double>> efficiency;  // threads ascending
    std::size_t threshold_threads = 0;
};

inline std::vector<efficiency_record> compute_efficiency(
    const result_set& results, const std::string& kernel, std::uint64_t n,
    const std::string& allocator = "first_touch",
    double threshold = default_efficiency_threshold) {
    std::map<std::string, std::map<std::size_t, const point_record*>> by_backend;
    for (const auto& p : results.points) {
        if (p.kernel != kernel || p.n != n || p.allocator != allocator) continue;
        if (!detail::usable(p)) continue;
        by_backend[p.backend][p.threads] = &p;
    }
    std::vector<efficiency_record> out;
    for (const auto& [backend, rows] : by_backend) {
        const auto one = rows.find(1);
        if (one == rows.end()) {
            throw analysis_error("missing 1-thread point for backend " + backend + ": " +
                                 to_string(point_key{kernel, backend, 1, n, allocator}));
        }
        efficiency_record rec;
        rec.backend = backend;
        const double t1 = one->second->median_ns;
        for (const auto& [threads, point] : rows) {
            const double e = t1 / (static_cast<double>(threads) * point->median_ns);
            rec.efficiency.emplace_back(threads, e);
            if (e >= threshold) {
                rec.threshold_threads = std::max(rec.threshold_threads, threads);
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

/// One matched pair in an allocator A/B comparison. percent is empty when
/// either side is skipped or failed verification.
struct allocator_delta {
    std::string kernel;
    std::string backend;
    std::size_t threads = 1;
    std::uint64_t n = 0;
    std::optional<double> percent;  // 100 * (T_default / T_first_touch - 1)
};

/// Matches two campaigns point-for-point on (kernel, backend, threads, n).
/// Both sides must cover the same grid; unmatched points are an error.
inline std::vector<allocator_delta> compare_allocators(const result_set& with_default,
                                                       const result_set& with_first_touch) {
    using grid_key = std::tuple<std::string, std::string, std::size_t, std::uint64_t>;
    auto collect = [](const result_set& rs, const char* side) {
        std::map<grid_key, const point_record*> out;
        for (const auto& p : rs.points) {
            const grid_key key{p.kernel, p.backend, p.threads, p.n};
            if (!out.emplace(key, &p).second) {
                throw analysis_error(std::string("duplicate point in ") + side +
                                     " results: " + to_string(key_of(p)));
            }
        }
        return out;
    };
    const auto lhs = collect(with_default, "default-allocator");
    const auto rhs = collect(with_first_touch, "first-touch");

    std::vector<std::string> unmatched;
    for (const auto& [key, p] : lhs) {
        if (rhs.find(key) == rhs.end()) unmatched.push_back(to_string(key_of(*p)));
    }
    for (const auto& [key, p] : rhs) {
        if (lhs.find(key) == lhs.end()) unmatched.push_back(to_string(key_of(*p)));
    }
    if (!unmatched.empty()) {
        std::string msg = "allocator comparison grids do not match; unmatched points:";
        for (const auto& u : unmatched) msg += "\n  - " + u;
        throw analysis_error(msg);
    }

    std::vector<allocator_delta> out;
    out.reserve(lhs.size());
    for (const auto& [key, def] : lhs) {
        const point_record* ft = rhs.at(key);
        allocator_delta d;
        d.kernel = std::get<0>(key);
        d.backend = std::get<1>(key);
        d.threads = std::get<2>(key);
        d.n = std::get<3>(key);
        if (detail::usable(*def) && detail::usable(*ft)) {
            d.percent = 100.0 * (def->median_ns / ft->median_ns - 1.0);
        }
        out.push_back(std::move(d));
    }
    return out;
}

/// Restricts a result set to one allocator tag (metadata is kept).
inline result_set filter_by_allocator(const result_set& results, const std::string& allocator) {
    result_set out;
    out.meta = results.meta;
    for (const auto& p : results.points) {
        if (p.allocator == allocator) out.points.push_back(p);
    }
    return out;
}

struct sweet_spot_result {
    std::string kernel;
    std::string backend;
    std::size_t threads_used = 0;         ///< the parallel series' thread count
    std::optional<std::uint64_t> size;    ///< empty: parallel never stably wins
};

/// Smallest size from which the backend at its highest measured thread
/// count beats the sequential baseline for every larger measured size
/// (stable crossover; isolated small-size wins don't count).
inline sweet_spot_result find_sweet_spot(const result_set& results, const std::string& kernel,
                                         const std::string& backend,
                                         const std::string& allocator = "first_touch") {
    std::set<std::uint64_t> sizes;
    std::size_t max_threads = 0;
    for (const auto& p : results.points) {
        if (p.kernel != kernel || p.allocator != allocator) continue;
        if (p.backend == backend) {
            max_threads = std::max(max_threads, p.threads);
        }
        sizes.insert(p.n);
    }
    if (sizes.empty() || max_threads == 0) {
        throw analysis_error("incomplete sweep: no points for kernel " + kernel +
                             ", backend " + backend + ", allocator " + allocator);
    }

    const detail::point_index index(results);
    std::vector<std::pair<std::uint64_t, bool>> beats;  // size ascending -> parallel wins
    for (const auto n : sizes) {
        const point_record* seq = index.find_usable({kernel, "seq", 1, n, allocator});
        const point_record* par = index.find_usable({kernel, backend, max_threads, n, allocator});
        if (seq == nullptr || par == nullptr) {
            throw analysis_error("incomplete sweep: missing " +
                                 to_string(point_key{kernel, seq == nullptr ? "seq" : backend,
                                                     seq == nullptr ? 1 : max_threads, n,
                                                     allocator}));
        }
        beats.emplace_back(n, par->median_ns < seq->median_ns);
    }

    sweet_spot_result out;
    out.kernel = kernel;
    out.backend = backend;
    out.threads_used = max_threads;
    for (auto it = beats.rbegin(); it != beats.rend(); ++it) {
        if (!it->second) break;
        out.size = it->first;
    }
    return out;
}

} // namespace scalebench
