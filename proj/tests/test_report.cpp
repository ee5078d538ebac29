#include <doctest.h>

#include <cstdint>
#include <string>
#include <vector>

#include "analysis_oracles.hpp"
#include "scalebench/report.hpp"

using namespace scalebench;
using sbtest::mk_point;

namespace {

result_set sample_set(std::size_t points, std::uint64_t seed) {
    result_set rs;
    rs.meta = collect_run_metadata(seed);
    rs.meta.max_threads_env = "16";
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < points; ++i) {
        point_record p = mk_point("kernel_" + std::to_string(i % 5),
                                  i % 3 == 0 ? "seq" : (i % 3 == 1 ? "pool" : "native"),
                                  i % 3 == 0 ? 1 : (i % 4) + 1, 1ULL << (3 + i % 20),
                                  1e3 + static_cast<double>(rng() % (1ULL << 40)) / 1048.576);
        p.reps = 3;
        p.durations_ns = {static_cast<std::int64_t>(rng() % 1000000 + 1),
                          static_cast<std::int64_t>(rng() % 1000000 + 1),
                          static_cast<std::int64_t>(rng() % 1000000 + 1)};
        p.fallback = i % 7 == 0;
        p.skipped = i % 11 == 0;
        if (p.skipped) {
            p.note = "memory: too big";
            p.reps = 0;
            p.durations_ns.clear();
            p.valid = false;
            p.median_ns = 0;
            p.throughput_bytes_per_s = 0;
        }
        p.n = 1ULL << (3 + i % 20);
        p.threads = p.backend == "seq" ? 1 : (i % 4) + 1;
        // keys must stay unique
        p.kernel += "_" + std::to_string(i / 5);
        rs.points.push_back(std::move(p));
    }
    return rs;
}

} // namespace

TEST_CASE("emit and load round-trip a result set field for field") {
    const result_set original = sample_set(50, 9);
    const std::string text = emit_results(original);
    const result_set loaded = parse_results(text);
    CHECK(loaded == original);
}

TEST_CASE("save and load work through files") {
    const result_set original = sample_set(10, 5);
    const std::string path = "roundtrip_test.json";
    save_results(original, path);
    const result_set loaded = load_results(path);
    CHECK(loaded == original);
    std::remove(path.c_str());
}

TEST_CASE("unsupported schema versions are rejected explicitly") {
    const result_set original = sample_set(2, 1);
    nlohmann::json j = original;
    j["schema_version"] = 99;
    CHECK_THROWS_AS(parse_results(j.dump()), schema_error);
    CHECK_THROWS_AS(parse_results("{not json"), schema_error);
    CHECK_THROWS_AS(parse_results("{\"schema_version\": 1}"), schema_error);
    CHECK_THROWS_AS(load_results("no_such_file.json"), resource_error);
}

TEST_CASE("merging disjoint campaigns unions the points") {
    result_set a;
    a.meta = collect_run_metadata(1);
    a.points.push_back(mk_point("k", "seq", 1, 8, 1e6, "default"));
    result_set b;
    b.meta = collect_run_metadata(2);
    b.points.push_back(mk_point("k", "seq", 1, 8, 1e6, "first_touch"));
    const result_set merged = merge_results({a, b});
    CHECK(merged.points.size() == 2);
    CHECK(merged.meta == a.meta);
}

TEST_CASE("merging overlapping campaigns reports the collisions") {
    result_set a;
    a.points.push_back(mk_point("k", "seq", 1, 8, 1e6));
    result_set b;
    b.points.push_back(mk_point("k", "seq", 1, 8, 2e6));
    try {
        merge_results({a, b});
        FAIL("expected schema_error");
    } catch (const schema_error& e) {
        CHECK(std::string(e.what()).find("(k, seq, threads=1, n=8, first_touch)") !=
              std::string::npos);
    }
}

TEST_CASE("speedup cells render with two decimals") {
    result_set rs;
    rs.points.push_back(mk_point("find", "seq", 1, 1 << 20, 9.54e9));
    rs.points.push_back(mk_point("find", "pool", 32, 1 << 20, 1.00e9));
    const std::string md = render_speedup(rs, 1 << 20, "first_touch", 0, table_format::markdown);
    CHECK(md.find("9.54") != std::string::npos);
    CHECK(md.find("1.00") != std::string::npos);

    const std::string csv = render_speedup(rs, 1 << 20, "first_touch", 0, table_format::csv);
    CHECK(csv.find("find,pool,32,1048576,first_touch,9.54") != std::string::npos);
}

TEST_CASE("absent backend cells render as dashes") {
    result_set rs;
    rs.points.push_back(mk_point("find", "seq", 1, 8, 1e9));
    rs.points.push_back(mk_point("find", "pool", 2, 8, 5e8));
    rs.points.push_back(mk_point("sort", "seq", 1, 8, 1e9));
    // No pool row for sort: its cell must be "---".
    const std::string md = render_speedup(rs, 8, "first_touch", 0, table_format::markdown);
    CHECK(md.find("---") != std::string::npos);
}

TEST_CASE("efficiency table cells are integer thread counts") {
    result_set rs;
    for (const std::size_t p : {1, 2, 4, 8}) {
        rs.points.push_back(mk_point("reduce", "pool", p, 64, 100e6 / static_cast<double>(p)));
    }
    rs.points.push_back(mk_point("reduce", "seq", 1, 64, 100e6));
    const std::string md = render_efficiency(rs, 64, "first_touch",
                                             default_efficiency_threshold,
                                             table_format::markdown);
    CHECK(md.find("| 8") != std::string::npos);  // perfect scaling: threshold = 8
    const std::string csv =
        render_efficiency(rs, 64, "first_touch", default_efficiency_threshold, table_format::csv);
    CHECK(csv.find("reduce,pool,8,64,first_touch,1.000000,8") != std::string::npos);
}

TEST_CASE("allocator comparison renders signed percentages") {
    result_set def;
    result_set ft;
    def.points.push_back(mk_point("reduce", "pool", 4, 64, 2.94e9, "default"));
    ft.points.push_back(mk_point("reduce", "pool", 4, 64, 1.00e9));
    const std::string md =
        render_allocator_comparison(def, ft, 64, 0, table_format::markdown);
    CHECK(md.find("+194.0%") != std::string::npos);
    const std::string csv = render_allocator_comparison(def, ft, 64, 0, table_format::csv);
    CHECK(csv.find("reduce,pool,4,64,194.0") != std::string::npos);
}

TEST_CASE("sweet spot tables show sizes as powers of two") {
    result_set rs;
    for (const auto& [n, wins] : std::vector<std::pair<std::uint64_t, bool>>{
             {1 << 10, false}, {1 << 16, true}, {1 << 20, true}}) {
        rs.points.push_back(mk_point("find", "seq", 1, n, 1e6));
        rs.points.push_back(mk_point("find", "pool", 4, n, wins ? 0.5e6 : 2e6));
    }
    const std::string md = render_sweet_spots(rs, "first_touch", table_format::markdown);
    CHECK(md.find("2^16") != std::string::npos);
    const std::string csv = render_sweet_spots(rs, "first_touch", table_format::csv);
    CHECK(csv.find("find,pool,4,first_touch,65536") != std::string::npos);
}

TEST_CASE("plot data emits one line per point") {
    const result_set rs = sample_set(23, 3);
    const std::string csv = render_plot_data(rs);
    std::size_t lines = 0;
    for (const char c : csv) lines += c == '\n';
    CHECK(lines == 24);  // header + 23 points
    CHECK(csv.rfind("kernel,backend,threads,n,allocator", 0) == 0);
}

TEST_CASE("size labels use exponent notation only for powers of two") {
    CHECK(detail::format_size(1048576) == "2^20");
    CHECK(detail::format_size(8) == "2^3");
    CHECK(detail::format_size(1000) == "1000");
    CHECK(detail::format_size(12) == "12");
}

TEST_CASE("markdown tables align their columns") {
    const std::string md = detail::markdown_table({{"h", "header2"}, {"x", "y"}});
    CHECK(md.find("| h | header2 |") != std::string::npos);
    CHECK(md.find("| x | y       |") != std::string::npos);
}

TEST_CASE("renderers honor an explicit thread selection") {
    result_set rs;
    rs.points.push_back(mk_point("k", "seq", 1, 8, 8e9));
    rs.points.push_back(mk_point("k", "pool", 2, 8, 4e9));
    rs.points.push_back(mk_point("k", "pool", 4, 8, 1e9));
    const std::string at2 = render_speedup(rs, 8, "first_touch", 2, table_format::markdown);
    CHECK(at2.find("2.00") != std::string::npos);   // 8e9 / 4e9
    CHECK(at2.find("8.00") == std::string::npos);
    const std::string at_max = render_speedup(rs, 8, "first_touch", 0, table_format::markdown);
    CHECK(at_max.find("8.00") != std::string::npos);  // picks threads=4
}
