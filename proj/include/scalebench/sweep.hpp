#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "scalebench/harness.hpp"
#include "scalebench/kernels.hpp"
#include "scalebench/results.hpp"

#if defined(__linux__) || defined(__APPLE__)
#include <unistd.h>
#endif

namespace scalebench {

inline std::uint64_t physical_memory_bytes() {
#if defined(__linux__) || defined(__APPLE__)
    const long pages = sysconf(_SC_PHYS_PAGES);
    const long page_size = sysconf(_SC_PAGE_SIZE);
    if (pages > 0 && page_size > 0) {
        return static_cast<std::uint64_t>(pages) * static_cast<std::uint64_t>(page_size);
    }
#endif
    return 8ULL << 30;  // conservative guess when the platform won't say
}

/// Strong-scaling thread grid: powers of two up to max_threads, plus
/// max_threads itself when it is not a power of two.
inline std::vector<std::size_t> thread_grid(std::size_t max_threads) {
    if (max_threads == 0) {
        throw invalid_spec_error("thread_grid: max threads must be >= 1");
    }
    std::vector<std::size_t> grid;
    for (std::size_t t = 1; t <= max_threads; t *= 2) {
        grid.push_back(t);
        if (t > max_threads / 2) break;  // avoid overflow on huge counts
    }
    if (grid.back() != max_threads) {
        grid.push_back(max_threads);
    }
    return grid;
}

struct sweep_config {
    std::vector<std::string> kernels;      // empty -> all registered
    std::vector<backend_id> backends;      // empty -> all compiled in
    std::size_t max_threads = 0;           // 0 -> logical core count
    int min_exp = 3;
    int max_exp = 30;
    std::vector<allocator_kind> allocators = {allocator_kind::first_touch};
    std::uint64_t seed = 0x5ca1eb01dULL;
    int reps = 10;
    int warmups = 1;
    bool pin = false;
    chunk_mode chunking = chunk_mode::static_chunks;
    std::size_t min_chunk = 1;
    std::size_t sort_seq_cutoff = 4096;
    bool oversubscribe = false;
    std::uint64_t memory_budget_bytes = 0;  // 0 -> 75% of physical RAM
};

struct plan_point {
    std::string kernel;
    backend_id backend = backend_id::seq;
    std::size_t threads = 1;
    std::uint64_t n = 0;
    allocator_kind allocator = allocator_kind::first_touch;
};

/// The cross-product {kernel x backend x threads x size x allocator}, with
/// the sequential backend contributing threads=1 rows only. A pure function
/// of its config.
struct sweep_plan {
    std::vector<std::string> kernels;
    std::vector<backend_id> backends;
    std::vector<std::size_t> threads;
    std::vector<std::uint64_t> sizes;
    std::vector<allocator_kind> allocators;
    std::uint64_t seed = 0;
    int reps = 10;
    int warmups = 1;
    bool pin = false;
    chunk_mode chunking = chunk_mode::static_chunks;
    std::size_t min_chunk = 1;
    std::size_t sort_seq_cutoff = 4096;
    bool oversubscribe = false;
    std::uint64_t memory_budget_bytes = 0;

    /// Points in execution order: kernel, backend, allocator, size
    /// ascending, threads ascending.
    std::vector<plan_point> points(const kernel_registry& registry) const {
        std::vector<plan_point> out;
        for (const auto& kernel : kernels) {
            (void)registry.at(kernel);  // existence re-checked at expansion
            for (const auto backend : backends) {
                const bool seq = backend == backend_id::seq;
                for (const auto alloc : allocators) {
                    for (const auto n : sizes) {
                        for (const auto t : threads) {
                            if (seq && t != 1) continue;
                            out.push_back({kernel, backend, t, n, alloc});
                        }
                    }
                }
            }
        }
        return out;
    }
};

inline sweep_plan build_plan(const sweep_config& config,
                             const kernel_registry& registry = kernel_registry::global()) {
    std::vector<std::string> violations;

    sweep_plan plan;
    plan.kernels = config.kernels.empty() ? registry.ids() : config.kernels;
    {
        std::set<std::string> seen;
        for (const auto& id : plan.kernels) {
            if (!registry.contains(id)) {
                violations.push_back("unknown kernel: " + id);
            }
            if (!seen.insert(id).second) {
                violations.push_back("duplicate kernel in plan: " + id);
            }
        }
    }

    if (config.backends.empty()) {
        for (const auto& d : list_backends()) plan.backends.push_back(d.id);
    } else {
        plan.backends = config.backends;
        std::set<backend_id> seen;
        for (const auto b : plan.backends) {
            if (!seen.insert(b).second) {
                violations.push_back(std::string("duplicate backend in plan: ") + to_string(b));
            }
        }
    }

    std::size_t max_threads = config.max_threads == 0 ? logical_core_count() : config.max_threads;
    if (!config.oversubscribe) {
        max_threads = std::min(max_threads, logical_core_count());
    }
    if (max_threads == 0) {
        violations.push_back("max threads must be >= 1");
    }

    if (config.min_exp < 0) violations.push_back("min size exponent must be >= 0");
    if (config.min_exp > config.max_exp) {
        violations.push_back("min size exponent exceeds max size exponent");
    }
    if (config.max_exp > 62) violations.push_back("max size exponent exceeds 62");
    if (config.reps < 1) violations.push_back("reps must be >= 1");
    if (config.warmups < 0) violations.push_back("warmups must be >= 0");
    if (config.allocators.empty()) violations.push_back("allocator list must not be empty");
    {
        std::set<allocator_kind> seen;
        for (const auto a : config.allocators) {
            if (!seen.insert(a).second) {
                violations.push_back(std::string("duplicate allocator in plan: ") + to_string(a));
            }
        }
    }

    if (!violations.empty()) {
        std::string msg = "invalid sweep config:";
        for (const auto& v : violations) msg += "\n  - " + v;
        throw invalid_spec_error(msg);
    }

    plan.threads = thread_grid(max_threads);
    for (int e = config.min_exp; e <= config.max_exp; ++e) {
        plan.sizes.push_back(1ULL << e);
    }
    plan.allocators = config.allocators;
    plan.seed = config.seed;
    plan.reps = config.reps;
    plan.warmups = config.warmups;
    plan.pin = config.pin;
    plan.chunking = config.chunking;
    plan.min_chunk = config.min_chunk;
    plan.sort_seq_cutoff = config.sort_seq_cutoff;
    plan.oversubscribe = config.oversubscribe;
    plan.memory_budget_bytes = config.memory_budget_bytes == 0
                                   ? physical_memory_bytes() / 4 * 3
                                   : config.memory_budget_bytes;
    return plan;
}

/// Input + auxiliary footprint of one point: the input array, the scan
/// output, and the backend's sort scratch.
inline std::uint64_t estimate_memory(const plan_point& point, const kernel_registry& registry,
                                     const std::vector<backend_descriptor>& descriptors) {
    const kernel_spec& kernel = registry.at(point.kernel);
    const std::uint64_t input = point.n * element_size(kernel.default_element);
    std::uint64_t total = input;
    if (kernel.uses_output) {
        total += input;
    }
    if (kernel.required == primitive_kind::sort) {
        for (const auto& d : descriptors) {
            if (d.id == point.backend) {
                total += static_cast<std::uint64_t>(static_cast<double>(input) *
                                                    d.sort_scratch_factor);
                break;
            }
        }
    }
    return total;
}

namespace detail {

inline const backend_descriptor* find_descriptor(const std::vector<backend_descriptor>& ds,
                                                 backend_id id) {
    for (const auto& d : ds) {
        if (d.id == id) return &d;
    }
    return nullptr;
}

} // namespace detail

using progress_fn = std::function<void(const point_record&)>;

/// Executes every plan point in deterministic order. Per-point failures are
/// recorded, never fatal; skipped and unsupported points keep their row so
/// the result cardinality always equals the plan cardinality. Worker pools
/// are created once per (backend, threads) and reused; each point's data is
/// released before the next point runs.
inline result_set execute_plan(const sweep_plan& plan,
                               const kernel_registry& registry = kernel_registry::global(),
                               const std::vector<backend_descriptor>& descriptors = list_backends(),
                               const progress_fn& progress = {}) {
    result_set results;
    results.meta = collect_run_metadata(plan.seed);
    results.meta.pinned = plan.pin;

    policy_options opts;
    opts.chunking = plan.chunking;
    opts.min_chunk = plan.min_chunk;
    opts.sort_seq_cutoff = plan.sort_seq_cutoff;
    opts.allow_oversubscribe = plan.oversubscribe;

    // seq/pool policies are cached for the whole sweep; the native policy is
    // built per point so its runtime thread cap never overlaps another's.
    std::map<std::pair<backend_id, std::size_t>, execution_policy> cached;
    auto policy_for = [&](backend_id backend, std::size_t threads) -> execution_policy {
        if (backend == backend_id::native) {
            return make_policy(backend, threads, opts);
        }
        const auto key = std::make_pair(backend, threads);
        auto it = cached.find(key);
        if (it == cached.end()) {
            it = cached.emplace(key, make_policy(backend, threads, opts)).first;
            if (plan.pin) {
                const pin_report rep = pin_workers(it->second);
                if (!rep.pinned) {
                    results.meta.pinned = false;
                    if (results.meta.pin_warning.empty()) {
                        results.meta.pin_warning = rep.warning;
                    }
                }
            }
        }
        return it->second;
    };

    for (const auto& point : plan.points(registry)) {
        const kernel_spec& kernel = registry.at(point.kernel);
        point_record rec;
        rec.kernel = point.kernel;
        rec.backend = to_string(point.backend);
        rec.threads = point.threads;
        rec.n = point.n;
        rec.allocator = to_string(point.allocator);
        rec.allocator_used = rec.allocator;
        rec.element = to_string(kernel.default_element);

        const backend_descriptor* desc = detail::find_descriptor(descriptors, point.backend);
        if (desc == nullptr || !desc->available) {
            rec.skipped = true;
            rec.note = "unsupported: backend not available in this build";
        } else if (!desc->supports(kernel.required)) {
            rec.skipped = true;
            rec.note = std::string("unsupported: backend lacks ") + to_string(kernel.required);
        } else {
            const std::uint64_t need = estimate_memory(point, registry, descriptors);
            if (need > plan.memory_budget_bytes) {
                rec.skipped = true;
                rec.note = "memory: point needs " + std::to_string(need) +
                           " bytes, budget is " + std::to_string(plan.memory_budget_bytes);
            }
        }

        if (!rec.skipped) {
            placement_config placement;
            placement.allocator = point.allocator;
            if (point.allocator == allocator_kind::first_touch &&
                !desc->first_touch_compatible) {
                // Allocator-incompatible backends get the default allocator
                // and the row records the substitution.
                placement.allocator = allocator_kind::plain;
                rec.allocator_used = to_string(allocator_kind::plain);
            }
            try {
                const execution_policy policy = policy_for(point.backend, point.threads);
                const data_spec spec = default_data_spec(kernel, point.n, plan.seed);
                const measurement m =
                    run_point(kernel, policy, spec, plan.reps, plan.warmups, placement);
                rec.reps = static_cast<int>(m.durations_ns.size());
                rec.durations_ns = m.durations_ns;
                rec.median_ns = median_of(m.durations_ns);
                rec.throughput_bytes_per_s =
                    throughput_bytes_per_s(m.bytes_per_iteration, rec.median_ns);
                rec.valid = m.valid;
                rec.fallback = m.fallback;
                if (!m.valid) rec.note = "verification failed";
            } catch (const std::exception& e) {
                rec.valid = false;
                rec.reps = static_cast<int>(rec.durations_ns.size());
                rec.note = std::string("error: ") + e.what();
            }
        }

        if (progress) progress(rec);
        results.points.push_back(std::move(rec));
    }
    return results;
}

struct verify_outcome {
    plan_point point;
    bool ran = false;
    bool passed = false;
    std::string note;
};

/// Oracle-only pass over a plan: builds each point's instance and runs its
/// verifier once, no timing. Points the sweep would skip are reported as
/// not-run with the same reason.
inline std::vector<verify_outcome> verify_plan(
    const sweep_plan& plan, const kernel_registry& registry = kernel_registry::global(),
    const std::vector<backend_descriptor>& descriptors = list_backends()) {
    std::vector<verify_outcome> outcomes;
    policy_options opts;
    opts.chunking = plan.chunking;
    opts.min_chunk = plan.min_chunk;
    opts.sort_seq_cutoff = plan.sort_seq_cutoff;
    opts.allow_oversubscribe = plan.oversubscribe;

    std::map<std::pair<backend_id, std::size_t>, execution_policy> cached;
    for (const auto& point : plan.points(registry)) {
        const kernel_spec& kernel = registry.at(point.kernel);
        verify_outcome out;
        out.point = point;
        const backend_descriptor* desc = detail::find_descriptor(descriptors, point.backend);
        if (desc == nullptr || !desc->available) {
            out.note = "unsupported: backend not available in this build";
        } else if (!desc->supports(kernel.required)) {
            out.note = std::string("unsupported: backend lacks ") + to_string(kernel.required);
        } else if (estimate_memory(point, registry, descriptors) > plan.memory_budget_bytes) {
            out.note = "memory budget exceeded";
        } else {
            try {
                execution_policy policy;
                if (point.backend == backend_id::native) {
                    policy = make_policy(point.backend, point.threads, opts);
                } else {
                    const auto key = std::make_pair(point.backend, point.threads);
                    auto it = cached.find(key);
                    if (it == cached.end()) {
                        it = cached.emplace(key, make_policy(point.backend, point.threads, opts))
                                 .first;
                    }
                    policy = it->second;
                }
                allocator_kind alloc = point.allocator;
                if (alloc == allocator_kind::first_touch && !desc->first_touch_compatible) {
                    alloc = allocator_kind::plain;
                }
                kernel_instance instance =
                    kernel.make_instance(default_data_spec(kernel, point.n, plan.seed),
                                         policy, alloc);
                out.ran = true;
                out.passed = kernel.verify(policy, instance);
                if (!out.passed) out.note = "verifier rejected the kernel result";
            } catch (const std::exception& e) {
                out.ran = true;
                out.passed = false;
                out.note = std::string("error: ") + e.what();
            }
        }
        outcomes.push_back(std::move(out));
    }
    return outcomes;
}

} // namespace scalebench
