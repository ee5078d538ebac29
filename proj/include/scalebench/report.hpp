#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scalebench/analysis.hpp"
#include "scalebench/results.hpp"

namespace scalebench {

inline void to_json(nlohmann::json& j, const run_metadata& m) {
    j = nlohmann::json{{"schema_version", m.schema_version},
                       {"machine", m.machine},
                       {"os", m.os},
                       {"version", m.version},
                       {"logical_cores", m.logical_cores},
                       {"seed", m.seed},
                       {"timestamp", m.timestamp},
                       {"pinned", m.pinned},
                       {"pin_warning", m.pin_warning},
                       {"max_threads_env", m.max_threads_env}};
}

inline void from_json(const nlohmann::json& j, run_metadata& m) {
    j.at("schema_version").get_to(m.schema_version);
    j.at("machine").get_to(m.machine);
    j.at("os").get_to(m.os);
    j.at("version").get_to(m.version);
    j.at("logical_cores").get_to(m.logical_cores);
    j.at("seed").get_to(m.seed);
    j.at("timestamp").get_to(m.timestamp);
    j.at("pinned").get_to(m.pinned);
    j.at("pin_warning").get_to(m.pin_warning);
    j.at("max_threads_env").get_to(m.max_threads_env);
}

inline void to_json(nlohmann::json& j, const point_record& p) {
    j = nlohmann::json{{"kernel", p.kernel},
                       {"backend", p.backend},
                       {"threads", p.threads},
                       {"n", p.n},
                       {"allocator", p.allocator},
                       {"allocator_used", p.allocator_used},
                       {"element", p.element},
                       {"reps", p.reps},
                       {"durations_ns", p.durations_ns},
                       {"median_ns", p.median_ns},
                       {"throughput_bytes_per_s", p.throughput_bytes_per_s},
                       {"valid", p.valid},
                       {"fallback", p.fallback},
                       {"skipped", p.skipped},
                       {"note", p.note}};
}

inline void from_json(const nlohmann::json& j, point_record& p) {
    j.at("kernel").get_to(p.kernel);
    j.at("backend").get_to(p.backend);
    j.at("threads").get_to(p.threads);
    j.at("n").get_to(p.n);
    j.at("allocator").get_to(p.allocator);
    j.at("allocator_used").get_to(p.allocator_used);
    j.at("element").get_to(p.element);
    j.at("reps").get_to(p.reps);
    j.at("durations_ns").get_to(p.durations_ns);
    j.at("median_ns").get_to(p.median_ns);
    j.at("throughput_bytes_per_s").get_to(p.throughput_bytes_per_s);
    j.at("valid").get_to(p.valid);
    j.at("fallback").get_to(p.fallback);
    j.at("skipped").get_to(p.skipped);
    j.at("note").get_to(p.note);
}

inline void to_json(nlohmann::json& j, const result_set& r) {
    j = nlohmann::json{{"schema_version", r.meta.schema_version},
                       {"metadata", r.meta},
                       {"points", r.points}};
}

inline void from_json(const nlohmann::json& j, result_set& r) {
    j.at("metadata").get_to(r.meta);
    j.at("points").get_to(r.points);
}

inline std::string emit_results(const result_set& results) {
    return nlohmann::json(results).dump(2) + "\n";
}

inline void save_results(const result_set& results, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw resource_error("cannot open result file for writing: " + path);
    }
    out << emit_results(results);
}

inline result_set parse_results(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(std::string("result file is not valid JSON: ") + e.what());
    }
    const int version = j.value("schema_version", -1);
    if (version != result_schema_version) {
        throw schema_error("unsupported result schema_version " + std::to_string(version) +
                           "; this build reads version " +
                           std::to_string(result_schema_version));
    }
    try {
        return j.get<result_set>();
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(std::string("malformed result file: ") + e.what());
    }
}

inline result_set load_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw resource_error("cannot open result file: " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_results(ss.str());
}

/// Union of several campaigns. Point keys must be disjoint; collisions are
/// reported, not resolved. Metadata comes from the first set.
inline result_set merge_results(const std::vector<result_set>& sets) {
    if (sets.empty()) {
        throw invalid_spec_error("merge_results: need at least one result set");
    }
    result_set merged;
    merged.meta = sets.front().meta;
    std::set<point_key> seen;
    std::vector<std::string> collisions;
    for (const auto& rs : sets) {
        for (const auto& p : rs.points) {
            if (!seen.insert(key_of(p)).second) {
                collisions.push_back(to_string(key_of(p)));
            }
            merged.points.push_back(p);
        }
    }
    if (!collisions.empty()) {
        std::string msg = "merge rejects duplicate point keys:";
        for (const auto& c : collisions) msg += "\n  - " + c;
        throw schema_error(msg);
    }
    return merged;
}

enum class table_format { markdown, csv };

inline std::optional<table_format> table_format_from_string(std::string_view s) {
    if (s == "md" || s == "markdown") return table_format::markdown;
    if (s == "csv") return table_format::csv;
    return std::nullopt;
}

namespace detail {

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

inline std::string format_percent(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%+.1f%%", v);
    return buf;
}

inline std::string format_size(std::uint64_t n) {
    if (n != 0 && (n & (n - 1)) == 0) {
        int exp = 0;
        for (std::uint64_t v = n; v > 1; v >>= 1) ++exp;
        return "2^" + std::to_string(exp);
    }
    return std::to_string(n);
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Pads every column to its widest cell; first row is the header.
inline std::string markdown_table(const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty()) return "";
    std::vector<std::size_t> widths(rows.front().size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }
    std::string out;
    auto emit_row = [&](const std::vector<std::string>& row) {
        out += "|";
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += " " + row[c] + std::string(widths[c] - row[c].size(), ' ') + " |";
        }
        out += "\n";
    };
    emit_row(rows.front());
    out += "|";
    for (const auto w : widths) {
        out += std::string(w + 2, '-') + "|";
    }
    out += "\n";
    for (std::size_t r = 1; r < rows.size(); ++r) {
        emit_row(rows[r]);
    }
    return out;
}

inline std::vector<std::string> kernels_in(const result_set& rs) {
    std::set<std::string> set;
    for (const auto& p : rs.points) set.insert(p.kernel);
    return {set.begin(), set.end()};
}

/// Backends in display order: seq, pool, native, then anything else.
inline std::vector<std::string> backends_in(const result_set& rs) {
    std::set<std::string> set;
    for (const auto& p : rs.points) set.insert(p.backend);
    std::vector<std::string> out;
    for (const char* canonical : {"seq", "pool", "native"}) {
        if (set.erase(canonical) > 0) out.push_back(canonical);
    }
    out.insert(out.end(), set.begin(), set.end());
    return out;
}

inline std::size_t max_threads_for(const result_set& rs, const std::string& kernel,
                                   const std::string& backend, std::uint64_t n,
                                   const std::string& allocator) {
    std::size_t best = 0;
    for (const auto& p : rs.points) {
        if (p.kernel == kernel && p.backend == backend && p.n == n &&
            p.allocator == allocator && usable(p)) {
            best = std::max(best, p.threads);
        }
    }
    return best;
}

} // namespace detail

/// Speedup against the sequential baseline, one column per kernel, one row
/// per backend. threads == 0 picks each backend's highest measured thread
/// count (its all-cores row). Cells render with two decimals; absent or
/// invalid cells render "---".
inline std::string render_speedup(const result_set& results, std::uint64_t n,
                                  const std::string& allocator, std::size_t threads,
                                  table_format format) {
    const auto kernels = detail::kernels_in(results);
    if (format == table_format::csv) {
        std::string out = "kernel,backend,threads,n,allocator,speedup\n";
        for (const auto& kernel : kernels) {
            const speedup_table table = compute_speedup_table(results, kernel, n, allocator);
            for (const auto& e : table.entries) {
                out += kernel + "," + e.backend + "," + std::to_string(e.threads) + "," +
                       std::to_string(n) + "," + allocator + "," +
                       detail::format_fixed(e.speedup, 6) + "\n";
            }
        }
        return out;
    }
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"backend"};
    header.insert(header.end(), kernels.begin(), kernels.end());
    rows.push_back(header);
    for (const auto& backend : detail::backends_in(results)) {
        std::vector<std::string> row{backend};
        for (const auto& kernel : kernels) {
            const speedup_table table = compute_speedup_table(results, kernel, n, allocator);
            const std::size_t want =
                threads != 0 ? threads
                             : detail::max_threads_for(results, kernel, backend, n, allocator);
            std::string cell = "---";
            for (const auto& e : table.entries) {
                if (e.backend == backend && e.threads == want) {
                    cell = detail::format_fixed(e.speedup, 2);
                    break;
                }
            }
            row.push_back(cell);
        }
        rows.push_back(row);
    }
    std::string out = "Speedup vs sequential baseline, n=" + detail::format_size(n) +
                      ", allocator=" + allocator +
                      (threads != 0 ? ", threads=" + std::to_string(threads)
                                    : ", threads=max measured") +
                      "\n\n";
    out += detail::markdown_table(rows);
    return out;
}

/// Largest thread count per backend whose parallel efficiency stays at or
/// above the threshold; cells are thread counts from the grid.
inline std::string render_efficiency(const result_set& results, std::uint64_t n,
                                     const std::string& allocator, double threshold,
                                     table_format format) {
    const auto kernels = detail::kernels_in(results);
    if (format == table_format::csv) {
        std::string out = "kernel,backend,threads,n,allocator,efficiency,threshold_threads\n";
        for (const auto& kernel : kernels) {
            for (const auto& rec : compute_efficiency(results, kernel, n, allocator, threshold)) {
                for (const auto& [threads, eff] : rec.efficiency) {
                    out += kernel + "," + rec.backend + "," + std::to_string(threads) + "," +
                           std::to_string(n) + "," + allocator + "," +
                           detail::format_fixed(eff, 6) + "," +
                           std::to_string(rec.threshold_threads) + "\n";
                }
            }
        }
        return out;
    }
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"backend"};
    header.insert(header.end(), kernels.begin(), kernels.end());
    rows.push_back(header);
    for (const auto& backend : detail::backends_in(results)) {
        std::vector<std::string> row{backend};
        for (const auto& kernel : kernels) {
            std::string cell = "---";
            for (const auto& rec : compute_efficiency(results, kernel, n, allocator, threshold)) {
                if (rec.backend == backend && rec.threshold_threads > 0) {
                    cell = std::to_string(rec.threshold_threads);
                    break;
                }
            }
            row.push_back(cell);
        }
        rows.push_back(row);
    }
    std::string out = "Max threads with parallel efficiency >= " +
                      detail::format_fixed(threshold * 100.0, 0) + "%, n=" +
                      detail::format_size(n) + ", allocator=" + allocator + "\n\n";
    out += detail::markdown_table(rows);
    return out;
}

/// Percent change from the default allocator to first-touch, per kernel and
/// backend; positive means first-touch is faster.
inline std::string render_allocator_comparison(const result_set& with_default,
                                               const result_set& with_first_touch,
                                               std::uint64_t n, std::size_t threads,
                                               table_format format) {
    const auto deltas = compare_allocators(with_default, with_first_touch);
    if (format == table_format::csv) {
        std::string out = "kernel,backend,threads,n,percent\n";
        for (const auto& d : deltas) {
            out += d.kernel + "," + d.backend + "," + std::to_string(d.threads) + "," +
                   std::to_string(d.n) + "," +
                   (d.percent ? detail::format_fixed(*d.percent, 4) : "") + "\n";
        }
        return out;
    }
    std::set<std::string> kernel_set;
    std::set<std::string> backend_set;
    for (const auto& d : deltas) {
        kernel_set.insert(d.kernel);
        backend_set.insert(d.backend);
    }
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"backend"};
    header.insert(header.end(), kernel_set.begin(), kernel_set.end());
    rows.push_back(header);
    for (const auto& backend : backend_set) {
        std::vector<std::string> row{backend};
        for (const auto& kernel : kernel_set) {
            std::string cell = "---";
            std::size_t best_threads = 0;
            for (const auto& d : deltas) {
                if (d.kernel != kernel || d.backend != backend || d.n != n || !d.percent) {
                    continue;
                }
                const bool matches = threads != 0 ? d.threads == threads
                                                  : d.threads >= best_threads;
                if (matches) {
                    best_threads = d.threads;
                    cell = detail::format_percent(*d.percent);
                }
            }
            row.push_back(cell);
        }
        rows.push_back(row);
    }
    std::string out = "First-touch allocator speedup over default allocation, n=" +
                      detail::format_size(n) +
                      (threads != 0 ? ", threads=" + std::to_string(threads)
                                    : ", threads=max measured") +
                      "\n\n";
    out += detail::markdown_table(rows);
    return out;
}

/// Smallest stable-crossover size per (kernel, parallel backend).
inline std::string render_sweet_spots(const result_set& results, const std::string& allocator,
                                      table_format format) {
    const auto kernels = detail::kernels_in(results);
    auto backends = detail::backends_in(results);
    std::erase(backends, "seq");
    if (format == table_format::csv) {
        std::string out = "kernel,backend,threads,allocator,sweet_spot\n";
        for (const auto& kernel : kernels) {
            for (const auto& backend : backends) {
                const auto spot = find_sweet_spot(results, kernel, backend, allocator);
                out += kernel + "," + backend + "," + std::to_string(spot.threads_used) + "," +
                       allocator + "," + (spot.size ? std::to_string(*spot.size) : "none") + "\n";
            }
        }
        return out;
    }
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"kernel"};
    header.insert(header.end(), backends.begin(), backends.end());
    rows.push_back(header);
    for (const auto& kernel : kernels) {
        std::vector<std::string> row{kernel};
        for (const auto& backend : backends) {
            const auto spot = find_sweet_spot(results, kernel, backend, allocator);
            row.push_back(spot.size ? detail::format_size(*spot.size) : "none");
        }
        rows.push_back(row);
    }
    std::string out = "Smallest size where parallel stably beats sequential, allocator=" +
                      allocator + "\n\n";
    out += detail::markdown_table(rows);
    return out;
}

/// Long-format CSV of every point, ready for external plotting.
inline std::string render_plot_data(const result_set& results) {
    std::string out =
        "kernel,backend,threads,n,allocator,allocator_used,element,reps,median_ns,"
        "throughput_bytes_per_s,valid,fallback,skipped,note\n";
    for (const auto& p : results.points) {
        out += p.kernel + "," + p.backend + "," + std::to_string(p.threads) + "," +
               std::to_string(p.n) + "," + p.allocator + "," + p.allocator_used + "," +
               p.element + "," + std::to_string(p.reps) + "," +
               detail::format_fixed(p.median_ns, 3) + "," +
               detail::format_fixed(p.throughput_bytes_per_s, 3) + "," +
               (p.valid ? "true" : "false") + "," + (p.fallback ? "true" : "false") + "," +
               (p.skipped ? "true" : "false") + "," + detail::csv_quote(p.note) + "\n";
    }
    return out;
}

} // namespace scalebench
