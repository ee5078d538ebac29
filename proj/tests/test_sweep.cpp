#include <doctest.h>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "scalebench/sweep.hpp"
#include "test_util.hpp"

using namespace scalebench;

namespace {

sweep_config small_config() {
    sweep_config cfg;
    cfg.kernels = {"reduce"};
    cfg.backends = {backend_id::seq, backend_id::pool};
    cfg.max_threads = 2;
    cfg.oversubscribe = true;
    cfg.min_exp = 3;
    cfg.max_exp = 6;
    cfg.reps = 2;
    cfg.warmups = 0;
    return cfg;
}

} // namespace

TEST_CASE("thread grid is powers of two plus the core count") {
    CHECK(thread_grid(32) == std::vector<std::size_t>{1, 2, 4, 8, 16, 32});
    CHECK(thread_grid(12) == std::vector<std::size_t>{1, 2, 4, 8, 12});
    CHECK(thread_grid(1) == std::vector<std::size_t>{1});
    CHECK(thread_grid(2) == std::vector<std::size_t>{1, 2});
    CHECK(thread_grid(7) == std::vector<std::size_t>{1, 2, 4, 7});
    CHECK_THROWS_AS(thread_grid(0), invalid_spec_error);
}

TEST_CASE("build_plan fills defaults from the registry and machine") {
    sweep_config cfg;
    cfg.max_threads = 32;
    cfg.oversubscribe = true;
    const sweep_plan plan = build_plan(cfg);
    CHECK(plan.kernels ==
          std::vector<std::string>{"find", "for_each", "inclusive_scan", "reduce", "sort"});
    CHECK(plan.threads == std::vector<std::size_t>{1, 2, 4, 8, 16, 32});
    CHECK(plan.sizes.size() == 28);  // exponents 3..30
    CHECK(plan.sizes.front() == 8);
    CHECK(plan.sizes.back() == 1ULL << 30);
    CHECK(plan.memory_budget_bytes > 0);
}

TEST_CASE("build_plan lists every violation at once") {
    sweep_config cfg;
    cfg.kernels = {"reduce", "reduce", "warp_drive"};
    cfg.min_exp = 9;
    cfg.max_exp = 3;
    cfg.reps = 0;
    cfg.warmups = -2;
    try {
        build_plan(cfg);
        FAIL("expected invalid_spec_error");
    } catch (const invalid_spec_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("unknown kernel: warp_drive") != std::string::npos);
        CHECK(msg.find("duplicate kernel") != std::string::npos);
        CHECK(msg.find("min size exponent exceeds max") != std::string::npos);
        CHECK(msg.find("reps must be >= 1") != std::string::npos);
        CHECK(msg.find("warmups must be >= 0") != std::string::npos);
    }
}

TEST_CASE("plan cardinality: seq contributes threads=1 rows only") {
    sweep_config cfg = small_config();
    cfg.kernels = {"reduce"};
    cfg.backends = {backend_id::pool};
    cfg.max_threads = 4;  // grid {1,2,4}
    cfg.min_exp = 3;
    cfg.max_exp = 4;  // two sizes
    const sweep_plan plan = build_plan(cfg);
    const auto points = plan.points(kernel_registry::global());
    CHECK(points.size() == 1 * 1 * 3 * 2);  // kernel x backend x threads x sizes

    sweep_config with_seq = cfg;
    with_seq.backends = {backend_id::seq, backend_id::pool};
    const auto both = build_plan(with_seq).points(kernel_registry::global());
    CHECK(both.size() == 2 * 1 + 3 * 2);  // seq only at threads=1
}

TEST_CASE("plan construction is a pure function of its config") {
    const sweep_config cfg = small_config();
    const auto a = build_plan(cfg).points(kernel_registry::global());
    const auto b = build_plan(cfg).points(kernel_registry::global());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].kernel == b[i].kernel);
        CHECK(a[i].backend == b[i].backend);
        CHECK(a[i].threads == b[i].threads);
        CHECK(a[i].n == b[i].n);
        CHECK(a[i].allocator == b[i].allocator);
    }
}

TEST_CASE("estimate_memory covers input, scan output and sort scratch") {
    const auto& registry = kernel_registry::global();
    const auto descriptors = list_backends();
    CHECK(estimate_memory({"reduce", backend_id::seq, 1, 1ULL << 30, allocator_kind::first_touch},
                          registry, descriptors) == 4ULL << 30);
    CHECK(estimate_memory({"inclusive_scan", backend_id::seq, 1, 1ULL << 20,
                           allocator_kind::first_touch},
                          registry, descriptors) == 8ULL << 20);
    // Pool sort stages through a same-size merge buffer; seq sorts in place.
    CHECK(estimate_memory({"sort", backend_id::pool, 2, 1ULL << 10, allocator_kind::first_touch},
                          registry, descriptors) == 8192);
    CHECK(estimate_memory({"sort", backend_id::seq, 1, 1ULL << 10, allocator_kind::first_touch},
                          registry, descriptors) == 4096);
}

TEST_CASE("execute_plan yields one record per plan point in order") {
    const sweep_plan plan = build_plan(small_config());
    const auto points = plan.points(kernel_registry::global());
    const result_set results = execute_plan(plan);
    REQUIRE(results.points.size() == points.size());
    std::set<point_key> keys;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& rec = results.points[i];
        CHECK(rec.kernel == points[i].kernel);
        CHECK(rec.backend == to_string(points[i].backend));
        CHECK(rec.threads == points[i].threads);
        CHECK(rec.n == points[i].n);
        CHECK(rec.allocator == to_string(points[i].allocator));
        CHECK(keys.insert(key_of(rec)).second);  // no duplicates
        CHECK(!rec.skipped);
        CHECK(rec.valid);
        CHECK(rec.reps == plan.reps);
        CHECK(rec.durations_ns.size() == static_cast<std::size_t>(plan.reps));
        CHECK(rec.median_ns > 0);
    }
    CHECK(results.meta.logical_cores >= 1);
    CHECK(!results.meta.timestamp.empty());
}

TEST_CASE("a backend lacking scan flags those points and runs the rest") {
    sweep_config cfg = small_config();
    cfg.kernels = {"inclusive_scan", "reduce"};
    const sweep_plan plan = build_plan(cfg);

    auto descriptors = list_backends();
    for (auto& d : descriptors) {
        if (d.id == backend_id::pool) d.supports_scan = false;
    }
    const result_set results = execute_plan(plan, kernel_registry::global(), descriptors);
    REQUIRE(results.points.size() == plan.points(kernel_registry::global()).size());
    for (const auto& rec : results.points) {
        if (rec.kernel == "inclusive_scan" && rec.backend == "pool") {
            CHECK(rec.skipped);
            CHECK(rec.note.find("unsupported") != std::string::npos);
            CHECK(rec.note.find("scan") != std::string::npos);
        } else {
            CHECK(!rec.skipped);
            CHECK(rec.valid);
        }
    }
}

TEST_CASE("points over the memory budget are skipped with their reason") {
    sweep_config cfg = small_config();
    cfg.memory_budget_bytes = 100;  // below even 2^3 * 4 bytes? no: 32 bytes fits; scan at 2^6 = 512 does not
    cfg.kernels = {"inclusive_scan"};
    cfg.min_exp = 3;
    cfg.max_exp = 8;
    const sweep_plan plan = build_plan(cfg);
    const result_set results = execute_plan(plan);
    REQUIRE(results.points.size() == plan.points(kernel_registry::global()).size());
    bool saw_run = false;
    bool saw_skip = false;
    for (const auto& rec : results.points) {
        const std::uint64_t need = 2 * rec.n * 4;
        if (need > 100) {
            CHECK(rec.skipped);
            CHECK(rec.note.find("memory") != std::string::npos);
            saw_skip = true;
        } else {
            CHECK(!rec.skipped);
            saw_run = true;
        }
    }
    CHECK(saw_run);
    CHECK(saw_skip);
}

TEST_CASE("allocator-incompatible backends fall back to the default allocator") {
    sweep_config cfg = small_config();
    const sweep_plan plan = build_plan(cfg);
    auto descriptors = list_backends();
    for (auto& d : descriptors) {
        if (d.id == backend_id::pool) d.first_touch_compatible = false;
    }
    const result_set results = execute_plan(plan, kernel_registry::global(), descriptors);
    for (const auto& rec : results.points) {
        CHECK(rec.allocator == "first_touch");  // the plan tag is the row key
        if (rec.backend == "pool") {
            CHECK(rec.allocator_used == "default");
        } else {
            CHECK(rec.allocator_used == "first_touch");
        }
        CHECK(rec.valid);
    }
}

TEST_CASE("pool sort below its cutoff produces fallback-flagged rows") {
    sweep_config cfg = small_config();
    cfg.kernels = {"sort"};
    cfg.max_threads = 2;
    cfg.min_exp = 3;
    cfg.max_exp = 5;
    cfg.sort_seq_cutoff = 1ULL << 10;  // all sizes in the plan are below this
    const sweep_plan plan = build_plan(cfg);
    const result_set results = execute_plan(plan);
    for (const auto& rec : results.points) {
        CHECK(rec.valid);
        if (rec.backend == "pool" && rec.threads > 1) {
            CHECK(rec.fallback);
        } else {
            CHECK(!rec.fallback);
        }
    }
}

TEST_CASE("the same plan and seed reproduce outcomes and ordering") {
    const sweep_plan plan = build_plan(small_config());
    const result_set a = execute_plan(plan);
    const result_set b = execute_plan(plan);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(key_of(a.points[i]) == key_of(b.points[i]));
        CHECK(a.points[i].valid == b.points[i].valid);
        CHECK(a.points[i].skipped == b.points[i].skipped);
        CHECK(a.points[i].fallback == b.points[i].fallback);
    }
}

TEST_CASE("verify_plan runs each point's oracle without timing") {
    sweep_config cfg = small_config();
    cfg.kernels = {"find", "sort"};
    const sweep_plan plan = build_plan(cfg);
    const auto outcomes = verify_plan(plan);
    REQUIRE(outcomes.size() == plan.points(kernel_registry::global()).size());
    for (const auto& o : outcomes) {
        CHECK(o.ran);
        CHECK(o.passed);
    }
}
