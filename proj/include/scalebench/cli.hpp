#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scalebench/isolate.hpp"
#include "scalebench/report.hpp"
#include "scalebench/sweep.hpp"

namespace scalebench::cli {

inline constexpr const char* max_threads_env_var = "SCALEBENCH_MAX_THREADS";

/// Accepts "1048576" or "2^20".
inline std::optional<std::uint64_t> parse_size(const std::string& text) {
    try {
        if (const auto caret = text.find('^'); caret != std::string::npos) {
            if (text.substr(0, caret) != "2") return std::nullopt;
            const int exp = std::stoi(text.substr(caret + 1));
            if (exp < 0 || exp > 62) return std::nullopt;
            return 1ULL << exp;
        }
        return std::stoull(text);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

namespace detail {

struct plan_flags {
    std::vector<std::string> kernels;
    std::vector<std::string> backends;
    std::vector<std::string> allocators;
    std::size_t max_threads = 0;
    int min_exp = 3;
    int max_exp = 30;
    std::uint64_t seed = 0x5ca1eb01dULL;
    int reps = 10;
    int warmups = 1;
    std::string pin = "off";
    std::string chunking = "static";
    std::size_t min_chunk = 1;
    std::size_t sort_cutoff = 4096;
    bool oversubscribe = false;
    std::uint64_t memory_budget = 0;
};

inline void add_plan_flags(CLI::App* cmd, plan_flags& f, bool timing_flags) {
    cmd->add_option("--kernels", f.kernels, "Kernels to run (default: all registered)")
        ->delimiter(',');
    cmd->add_option("--backends", f.backends, "Backends to run (default: all compiled in)")
        ->delimiter(',');
    cmd->add_option("--max-threads", f.max_threads,
                    "Top of the thread grid (default: logical core count)");
    cmd->add_option("--min-exp", f.min_exp, "Smallest size exponent, size = 2^k")->capture_default_str();
    cmd->add_option("--max-exp", f.max_exp, "Largest size exponent, size = 2^k")->capture_default_str();
    cmd->add_option("--allocators", f.allocators, "Allocator tags: first_touch,default")
        ->delimiter(',');
    cmd->add_option("--allocator", f.allocators, "Single allocator tag (alias of --allocators)");
    cmd->add_option("--seed", f.seed, "Data generation seed")->capture_default_str();
    if (timing_flags) {
        cmd->add_option("--reps", f.reps, "Timed repetitions per point")->capture_default_str();
        cmd->add_option("--warmup", f.warmups, "Untimed warmup executions per point")->capture_default_str();
    }
    cmd->add_option("--pin", f.pin, "Pin worker k to logical CPU k")->capture_default_str()
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--chunking", f.chunking, "Pool chunking mode")->capture_default_str()
        ->check(CLI::IsMember({"static", "guided"}));
    cmd->add_option("--min-chunk", f.min_chunk, "Minimum elements per chunk")->capture_default_str();
    cmd->add_option("--sort-cutoff", f.sort_cutoff,
                    "Pool sort goes sequential at or below this size")
        ->capture_default_str();
    cmd->add_flag("--oversubscribe", f.oversubscribe,
                  "Allow thread budgets above the logical core count");
    cmd->add_option("--memory-budget", f.memory_budget,
                    "Per-point memory budget in bytes (default: 75% of RAM)");
}

/// Maps the string flags onto a sweep_config; bad names produce a usage
/// error message listing what is available.
inline sweep_config config_from_flags(const plan_flags& f, const kernel_registry& registry,
                                      std::string& usage_error) {
    sweep_config cfg;
    for (const auto& id : f.kernels) {
        if (!registry.contains(id)) {
            std::string msg = "unknown kernel '" + id + "'; registered kernels:";
            for (const auto& known : registry.ids()) msg += " " + known;
            usage_error = msg;
            return cfg;
        }
        cfg.kernels.push_back(id);
    }
    for (const auto& name : f.backends) {
        const auto b = backend_from_string(name);
        bool compiled = false;
        if (b) {
            for (const auto& d : list_backends()) compiled |= d.id == *b;
        }
        if (!b || !compiled) {
            std::string msg = "unknown backend '" + name + "'; available backends:";
            for (const auto& d : list_backends()) msg += std::string(" ") + to_string(d.id);
            usage_error = msg;
            return cfg;
        }
        cfg.backends.push_back(*b);
    }
    cfg.allocators.clear();
    if (f.allocators.empty()) {
        cfg.allocators.push_back(allocator_kind::first_touch);
    }
    for (const auto& name : f.allocators) {
        const auto a = allocator_from_string(name);
        if (!a) {
            usage_error = "unknown allocator '" + name + "'; valid: first_touch, default";
            return cfg;
        }
        cfg.allocators.push_back(*a);
    }
    cfg.max_threads = f.max_threads;
    cfg.min_exp = f.min_exp;
    cfg.max_exp = f.max_exp;
    cfg.seed = f.seed;
    cfg.reps = f.reps;
    cfg.warmups = f.warmups;
    cfg.pin = f.pin == "on";
    cfg.chunking = f.chunking == "guided" ? chunk_mode::guided : chunk_mode::static_chunks;
    cfg.min_chunk = f.min_chunk;
    cfg.sort_seq_cutoff = f.sort_cutoff;
    cfg.oversubscribe = f.oversubscribe;
    cfg.memory_budget_bytes = f.memory_budget;
    return cfg;
}

inline std::string read_max_threads_env(sweep_config& cfg) {
    const char* env = std::getenv(max_threads_env_var);
    if (env == nullptr || *env == '\0') return "";
    const auto parsed = parse_size(env);
    if (parsed && *parsed >= 1) {
        cfg.max_threads = static_cast<std::size_t>(*parsed);
    }
    return env;
}

inline std::string format_duration_ns(double ns) {
    char buf[64];
    if (ns < 1e3) {
        std::snprintf(buf, sizeof(buf), "%.0f ns", ns);
    } else if (ns < 1e6) {
        std::snprintf(buf, sizeof(buf), "%.2f us", ns / 1e3);
    } else if (ns < 1e9) {
        std::snprintf(buf, sizeof(buf), "%.2f ms", ns / 1e6);
    } else {
        std::snprintf(buf, sizeof(buf), "%.3f s", ns / 1e9);
    }
    return buf;
}

inline int write_or_print(const std::string& text, const std::string& out_path,
                          std::ostream& console) {
    if (out_path.empty() || out_path == "-") {
        console << text;
        return 0;
    }
    std::ofstream out(out_path);
    if (!out) {
        console << "error: cannot open output file: " << out_path << "\n";
        return 1;
    }
    out << text;
    return 0;
}

} // namespace detail

/// Entry point used by the binary and by the tests. Exit codes: 0 success,
/// 1 operational failure (verification failures, missing baselines), 2
/// usage errors.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"scalebench: strong-scaling micro-benchmarks for parallel kernels"};
    app.require_subcommand(1);

    kernel_registry& registry = kernel_registry::global();

    // --- run ---------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "Execute a sweep and write a result file");
    detail::plan_flags run_flags;
    detail::add_plan_flags(run_cmd, run_flags, true);
    std::string run_out = "results.json";
    bool run_quiet = false;
    bool run_isolate = false;
    run_cmd->add_option("--out", run_out, "Result file path")->capture_default_str();
    run_cmd->add_flag("--quiet", run_quiet, "Suppress per-point progress");
    run_cmd->add_flag("--isolate", run_isolate,
                      "Re-execute each point in a fresh subprocess");

    // --- verify ------------------------------------------------------------
    auto* verify_cmd =
        app.add_subcommand("verify", "Run every point's verifier once; no timing");
    detail::plan_flags verify_flags;
    detail::add_plan_flags(verify_cmd, verify_flags, false);
    bool verify_quiet = false;
    verify_cmd->add_flag("--quiet", verify_quiet, "Only print failures and the summary");

    // --- list --------------------------------------------------------------
    auto* list_cmd = app.add_subcommand("list", "List registered kernels and backends");

    // --- report ------------------------------------------------------------
    auto* report_cmd = app.add_subcommand("report", "Derive tables from result files");
    std::vector<std::string> report_in;
    std::string report_artifact = "speedup";
    std::string report_kernel;
    std::string report_size;
    std::size_t report_threads = 0;
    double report_threshold = default_efficiency_threshold;
    std::string report_format = "md";
    std::string report_out;
    std::string report_allocator = "first_touch";
    report_cmd->add_option("--in", report_in, "Result file(s); two for allocator comparison")
        ->required()
        ->expected(1, 2);
    report_cmd
        ->add_option("--artifact", report_artifact,
                     "speedup | efficiency | allocator | sweetspot | plotdata")
        ->capture_default_str()
        ->check(CLI::IsMember({"speedup", "efficiency", "allocator", "sweetspot", "plotdata"}));
    report_cmd->add_option("--kernel", report_kernel, "Restrict to one kernel");
    report_cmd->add_option("--size", report_size, "Problem size, e.g. 2^20 or 1048576");
    report_cmd->add_option("--threads", report_threads,
                           "Thread count for table cells (default: max measured)");
    report_cmd->add_option("--threshold", report_threshold, "Efficiency threshold")->capture_default_str();
    report_cmd->add_option("--allocator", report_allocator, "Allocator tag to report on")
        ->capture_default_str();
    report_cmd->add_option("--format", report_format, "md | csv")->capture_default_str()
        ->check(CLI::IsMember({"md", "csv"}));
    report_cmd->add_option("--out", report_out, "Output path (default: stdout)");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("scalebench");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (list_cmd->parsed()) {
            out << "kernels:\n";
            for (const auto& id : registry.ids()) out << "  " << id << "\n";
            out << "backends:\n";
            for (const auto& d : list_backends()) {
                out << "  " << to_string(d.id) << " (" << d.name << ")";
                std::string missing;
                for (const auto prim : {primitive_kind::map, primitive_kind::reduce,
                                        primitive_kind::scan, primitive_kind::sort,
                                        primitive_kind::find}) {
                    if (!d.supports(prim)) missing += std::string(" ") + to_string(prim);
                }
                if (!missing.empty()) out << " [unsupported:" << missing << "]";
                out << "\n";
            }
            return 0;
        }

        if (run_cmd->parsed()) {
            std::string usage_error;
            sweep_config cfg = detail::config_from_flags(run_flags, registry, usage_error);
            if (!usage_error.empty()) {
                err << "error: " << usage_error << "\n";
                return 2;
            }
            const std::string env_value = detail::read_max_threads_env(cfg);
            sweep_plan plan;
            try {
                plan = build_plan(cfg, registry);
            } catch (const invalid_spec_error& e) {
                err << "error: " << e.what() << "\n";
                return 2;
            }
            progress_fn progress;
            if (!run_quiet) {
                progress = [&](const point_record& rec) {
                    out << rec.kernel << " " << rec.backend << " t=" << rec.threads
                        << " n=" << rec.n << " " << rec.allocator;
                    if (rec.skipped) {
                        out << " skipped (" << rec.note << ")";
                    } else if (!rec.valid) {
                        out << " INVALID (" << rec.note << ")";
                    } else {
                        out << " median=" << detail::format_duration_ns(rec.median_ns);
                        if (rec.fallback) out << " [fallback]";
                    }
                    out << "\n";
                };
            }
            result_set results =
                run_isolate ? execute_plan_isolated(plan, registry, list_backends(), progress)
                            : execute_plan(plan, registry, list_backends(), progress);
            results.meta.max_threads_env = env_value;
            save_results(results, run_out);

            std::size_t skipped = 0;
            std::vector<const point_record*> failures;
            for (const auto& p : results.points) {
                if (p.skipped) ++skipped;
                else if (!p.valid) failures.push_back(&p);
            }
            out << results.points.size() << " points (" << skipped << " skipped, "
                << failures.size() << " failed verification) -> " << run_out << "\n";
            if (!failures.empty()) {
                err << "verification failures:\n";
                for (const auto* p : failures) {
                    err << "  " << to_string(key_of(*p)) << ": " << p->note << "\n";
                }
                return 1;
            }
            return 0;
        }

        if (verify_cmd->parsed()) {
            std::string usage_error;
            sweep_config cfg = detail::config_from_flags(verify_flags, registry, usage_error);
            if (!usage_error.empty()) {
                err << "error: " << usage_error << "\n";
                return 2;
            }
            detail::read_max_threads_env(cfg);
            sweep_plan plan;
            try {
                plan = build_plan(cfg, registry);
            } catch (const invalid_spec_error& e) {
                err << "error: " << e.what() << "\n";
                return 2;
            }
            std::size_t passed = 0, failed = 0, not_run = 0;
            for (const auto& o : verify_plan(plan, registry)) {
                const point_key key{o.point.kernel, to_string(o.point.backend), o.point.threads,
                                    o.point.n, to_string(o.point.allocator)};
                if (!o.ran) {
                    ++not_run;
                    if (!verify_quiet) out << "[skip] " << to_string(key) << ": " << o.note << "\n";
                } else if (o.passed) {
                    ++passed;
                    if (!verify_quiet) out << "[ok]   " << to_string(key) << "\n";
                } else {
                    ++failed;
                    out << "[FAIL] " << to_string(key) << ": " << o.note << "\n";
                }
            }
            out << passed << " passed, " << failed << " failed, " << not_run << " skipped\n";
            return failed == 0 ? 0 : 1;
        }

        // report
        std::vector<result_set> inputs;
        for (const auto& path : report_in) {
            inputs.push_back(load_results(path));
        }
        std::uint64_t size = 0;
        if (!report_size.empty()) {
            const auto parsed = parse_size(report_size);
            if (!parsed) {
                err << "error: cannot parse --size '" << report_size << "'\n";
                return 2;
            }
            size = *parsed;
        }
        const table_format format = *table_format_from_string(report_format);

        result_set merged = inputs.size() == 1 ? inputs.front() : merge_results(inputs);
        if (!report_kernel.empty()) {
            result_set filtered;
            filtered.meta = merged.meta;
            for (const auto& p : merged.points) {
                if (p.kernel == report_kernel) filtered.points.push_back(p);
            }
            merged = std::move(filtered);
        }
        if (size == 0) {
            for (const auto& p : merged.points) size = std::max(size, p.n);
        }

        std::string text;
        if (report_artifact == "plotdata") {
            text = render_plot_data(merged);
        } else if (report_artifact == "speedup") {
            text = render_speedup(merged, size, report_allocator, report_threads, format);
        } else if (report_artifact == "efficiency") {
            text = render_efficiency(merged, size, report_allocator, report_threshold, format);
        } else if (report_artifact == "sweetspot") {
            text = render_sweet_spots(merged, report_allocator, format);
        } else {  // allocator
            result_set side_default;
            result_set side_first_touch;
            if (inputs.size() == 2) {
                side_default = filter_by_allocator(inputs[0], "default");
                side_first_touch = filter_by_allocator(inputs[1], "first_touch");
            } else {
                side_default = filter_by_allocator(merged, "default");
                side_first_touch = filter_by_allocator(merged, "first_touch");
            }
            if (side_default.points.empty() || side_first_touch.points.empty()) {
                err << "error: allocator comparison needs points for both tags "
                       "(default and first_touch)\n";
                return 1;
            }
            text = render_allocator_comparison(side_default, side_first_touch, size,
                                               report_threads, format);
        }
        return detail::write_or_print(text, report_out, out);
    } catch (const analysis_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const schema_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(std::move(args), out, err);
}

} // namespace scalebench::cli
