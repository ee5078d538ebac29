#pragma once

#include <cstdio>
#include <filesystem>
#include <string>

#include "scalebench/report.hpp"
#include "scalebench/sweep.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <sys/wait.h>
#include <unistd.h>
#define SCALEBENCH_HAS_ISOLATE 1
#endif

namespace scalebench {

constexpr bool isolate_supported() {
#if defined(SCALEBENCH_HAS_ISOLATE)
    return true;
#else
    return false;
#endif
}

/// Runs every plan point in its own subprocess, for contamination-sensitive
/// studies: allocator state, page placement and runtime pools from one
/// point cannot leak into the next, and a crashing kernel only loses its
/// own row. Each child executes exactly one point and hands the record
/// back through a temp file; a child failure becomes an error row so the
/// grid stays complete.
inline result_set execute_plan_isolated(
    const sweep_plan& plan, const kernel_registry& registry = kernel_registry::global(),
    const std::vector<backend_descriptor>& descriptors = list_backends(),
    const progress_fn& progress = {}) {
#if !defined(SCALEBENCH_HAS_ISOLATE)
    (void)plan;
    (void)registry;
    (void)descriptors;
    (void)progress;
    throw capability_error("point isolation requires a POSIX platform");
#else
    result_set results;
    results.meta = collect_run_metadata(plan.seed);
    results.meta.pinned = plan.pin;

    const auto points = plan.points(registry);
    std::size_t index = 0;
    for (const auto& point : points) {
        const std::string tmp =
            (std::filesystem::temp_directory_path() /
             ("scalebench_point_" + std::to_string(getpid()) + "_" + std::to_string(index++) +
              ".json"))
                .string();
        const pid_t pid = fork();
        if (pid < 0) {
            throw resource_error("fork failed while isolating a plan point");
        }
        if (pid == 0) {
            int code = 1;
            try {
                sweep_plan single = plan;
                single.kernels = {point.kernel};
                single.backends = {point.backend};
                single.threads = {point.threads};
                single.sizes = {point.n};
                single.allocators = {point.allocator};
                const result_set r = execute_plan(single, registry, descriptors);
                save_results(r, tmp);
                code = 0;
            } catch (...) {
            }
            _exit(code);
        }
        int status = 0;
        waitpid(pid, &status, 0);
        const bool clean_exit = WIFEXITED(status) && WEXITSTATUS(status) == 0;

        point_record rec;
        bool have_record = false;
        if (clean_exit) {
            try {
                result_set child = load_results(tmp);
                if (child.points.size() == 1) {
                    rec = std::move(child.points.front());
                    have_record = true;
                    results.meta.pinned = results.meta.pinned && child.meta.pinned;
                    if (results.meta.pin_warning.empty()) {
                        results.meta.pin_warning = child.meta.pin_warning;
                    }
                }
            } catch (const error&) {
            }
        }
        std::remove(tmp.c_str());
        if (!have_record) {
            rec.kernel = point.kernel;
            rec.backend = to_string(point.backend);
            rec.threads = point.threads;
            rec.n = point.n;
            rec.allocator = to_string(point.allocator);
            rec.allocator_used = rec.allocator;
            rec.element = to_string(registry.at(point.kernel).default_element);
            rec.valid = false;
            if (WIFSIGNALED(status)) {
                rec.note = "error: isolated subprocess killed by signal " +
                           std::to_string(WTERMSIG(status));
            } else {
                rec.note = "error: isolated subprocess exited with status " +
                           std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1);
            }
        }
        if (progress) progress(rec);
        results.points.push_back(std::move(rec));
    }
    return results;
#endif
}

} // namespace scalebench
