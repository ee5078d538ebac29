#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "scalebench/cli.hpp"

using scalebench::cli::run_cli;

namespace {

struct cli_result {
    int code = 0;
    std::string out;
    std::string err;
};

cli_result invoke(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

struct temp_file {
    std::string path;
    explicit temp_file(std::string p) : path(std::move(p)) {}
    ~temp_file() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("list names the kernels and backends") {
    const auto r = invoke({"list"});
    CHECK(r.code == 0);
    for (const char* id : {"find", "for_each", "inclusive_scan", "reduce", "sort"}) {
        CHECK(r.out.find(id) != std::string::npos);
    }
    CHECK(r.out.find("seq") != std::string::npos);
    CHECK(r.out.find("pool") != std::string::npos);
}

TEST_CASE("run writes a result file with the plan's cardinality") {
    temp_file file("cli_run_test.json");
    const auto r = invoke({"run", "--kernels", "reduce", "--backends", "seq,pool",
                           "--max-threads", "2", "--oversubscribe", "--min-exp", "3",
                           "--max-exp", "5", "--reps", "2", "--warmup", "0", "--quiet",
                           "--out", file.path});
    REQUIRE(r.code == 0);
    const auto results = scalebench::load_results(file.path);
    // 3 sizes x (seq@1 + pool@{1,2}) = 9 points
    CHECK(results.points.size() == 9);
    for (const auto& p : results.points) {
        CHECK(p.valid);
        CHECK(p.reps == 2);
    }
}

TEST_CASE("the default repetition count is ten") {
    temp_file file("cli_reps_test.json");
    const auto r = invoke({"run", "--kernels", "reduce", "--backends", "seq", "--min-exp", "3",
                           "--max-exp", "3", "--quiet", "--out", file.path});
    REQUIRE(r.code == 0);
    const auto results = scalebench::load_results(file.path);
    REQUIRE(results.points.size() == 1);
    CHECK(results.points[0].reps == 10);
    CHECK(results.points[0].durations_ns.size() == 10);
}

TEST_CASE("unknown kernels exit with a usage error listing the registry") {
    const auto r = invoke({"run", "--kernels", "quicksort_but_worse"});
    CHECK(r.code == 2);
    CHECK(r.err.find("unknown kernel") != std::string::npos);
    for (const char* id : {"find", "for_each", "inclusive_scan", "reduce", "sort"}) {
        CHECK(r.err.find(id) != std::string::npos);
    }
}

TEST_CASE("unknown backends and bad flags are usage errors") {
    CHECK(invoke({"run", "--backends", "gpu_cluster"}).code == 2);
    CHECK(invoke({"run", "--allocator", "hugepages"}).code == 2);
    CHECK(invoke({"run", "--pin", "sideways"}).code == 2);
    CHECK(invoke({"definitely-not-a-subcommand"}).code == 2);
    CHECK(invoke({"run", "--min-exp", "9", "--max-exp", "3"}).code == 2);
}

TEST_CASE("the max-threads environment override is honored and recorded") {
    temp_file file("cli_env_test.json");
    setenv(scalebench::cli::max_threads_env_var, "2", 1);
    const auto r = invoke({"run", "--kernels", "reduce", "--backends", "pool", "--oversubscribe",
                           "--min-exp", "3", "--max-exp", "3", "--reps", "1", "--warmup", "0",
                           "--quiet", "--out", file.path});
    unsetenv(scalebench::cli::max_threads_env_var);
    REQUIRE(r.code == 0);
    const auto results = scalebench::load_results(file.path);
    CHECK(results.meta.max_threads_env == "2");
    std::size_t max_threads = 0;
    for (const auto& p : results.points) max_threads = std::max(max_threads, p.threads);
    CHECK(max_threads == 2);
}

TEST_CASE("verify runs the oracle pass and reports per point") {
    const auto r = invoke({"verify", "--kernels", "find,sort", "--backends", "seq", "--min-exp",
                           "3", "--max-exp", "5"});
    CHECK(r.code == 0);
    CHECK(r.out.find("[ok]") != std::string::npos);
    CHECK(r.out.find("0 failed") != std::string::npos);
}

TEST_CASE("report renders speedup tables from a result file") {
    temp_file file("cli_report_test.json");
    auto run = invoke({"run", "--kernels", "reduce,find", "--backends", "seq,pool",
                       "--max-threads", "2", "--oversubscribe", "--min-exp", "3", "--max-exp",
                       "6", "--reps", "2", "--warmup", "0", "--quiet", "--out", file.path});
    REQUIRE(run.code == 0);

    const auto md = invoke({"report", "--in", file.path, "--artifact", "speedup", "--size", "2^6"});
    CHECK(md.code == 0);
    CHECK(md.out.find("| backend") != std::string::npos);
    CHECK(md.out.find("reduce") != std::string::npos);

    const auto csv =
        invoke({"report", "--in", file.path, "--artifact", "plotdata", "--format", "csv"});
    CHECK(csv.code == 0);
    CHECK(csv.out.find("kernel,backend,") != std::string::npos);

    const auto eff = invoke({"report", "--in", file.path, "--artifact", "efficiency"});
    CHECK(eff.code == 0);

    const auto spot = invoke({"report", "--in", file.path, "--artifact", "sweetspot"});
    CHECK(spot.code == 0);

    temp_file out_file("cli_report_out.md");
    const auto to_file = invoke({"report", "--in", file.path, "--artifact", "speedup", "--out",
                                 out_file.path});
    CHECK(to_file.code == 0);
    std::ifstream in(out_file.path);
    CHECK(in.good());
}

TEST_CASE("report fails cleanly when the baseline is missing") {
    temp_file file("cli_nobaseline_test.json");
    auto run = invoke({"run", "--kernels", "reduce", "--backends", "pool", "--max-threads", "2",
                       "--oversubscribe", "--min-exp", "3", "--max-exp", "3", "--reps", "1",
                       "--warmup", "0", "--quiet", "--out", file.path});
    REQUIRE(run.code == 0);
    const auto r = invoke({"report", "--in", file.path, "--artifact", "speedup"});
    CHECK(r.code == 1);
    CHECK(r.err.find("missing baseline") != std::string::npos);
    CHECK(r.err.find("seq") != std::string::npos);
}

TEST_CASE("allocator comparison consumes a mixed campaign") {
    temp_file file("cli_alloc_test.json");
    auto run = invoke({"run", "--kernels", "reduce", "--backends", "seq,pool", "--max-threads",
                       "2", "--oversubscribe", "--min-exp", "3", "--max-exp", "4",
                       "--allocators", "first_touch,default", "--reps", "1", "--warmup", "0",
                       "--quiet", "--out", file.path});
    REQUIRE(run.code == 0);
    const auto results = scalebench::load_results(file.path);
    CHECK(results.points.size() == 2 * 2 * (1 + 2));  // sizes x allocators x (seq + pool grid)

    const auto r = invoke({"report", "--in", file.path, "--artifact", "allocator"});
    CHECK(r.code == 0);
    CHECK(r.out.find("%") != std::string::npos);
}

TEST_CASE("verification failures surface as exit code 1 with a summary") {
    // A broken kernel: its verifier always rejects.
    auto& registry = scalebench::kernel_registry::global();
    if (!registry.contains("always_wrong")) {
        scalebench::kernel_spec broken = scalebench::make_reduce_kernel();
        broken.id = "always_wrong";
        broken.verify = [](const scalebench::execution_policy&, scalebench::kernel_instance&) {
            return false;
        };
        registry.register_kernel(broken);
    }
    temp_file file("cli_invalid_test.json");
    const auto r = invoke({"run", "--kernels", "always_wrong", "--backends", "seq", "--min-exp",
                           "3", "--max-exp", "3", "--reps", "1", "--warmup", "0", "--quiet",
                           "--out", file.path});
    CHECK(r.code == 1);
    CHECK(r.err.find("verification failures") != std::string::npos);
    CHECK(r.err.find("always_wrong") != std::string::npos);
}

TEST_CASE("isolated runs execute each point in a subprocess") {
    if (!scalebench::isolate_supported()) {
        return;
    }
    temp_file file("cli_isolate_test.json");
    const auto r = invoke({"run", "--kernels", "reduce", "--backends", "seq,pool",
                           "--max-threads", "2", "--oversubscribe", "--min-exp", "3",
                           "--max-exp", "4", "--reps", "1", "--warmup", "0", "--quiet",
                           "--isolate", "--out", file.path});
    REQUIRE(r.code == 0);
    const auto results = scalebench::load_results(file.path);
    CHECK(results.points.size() == 2 * (1 + 2));
    for (const auto& p : results.points) CHECK(p.valid);
}

TEST_CASE("a crashing kernel loses only its own row under isolation") {
    if (!scalebench::isolate_supported()) {
        return;
    }
    auto& registry = scalebench::kernel_registry::global();
    if (!registry.contains("crashes_hard")) {
        scalebench::kernel_spec crash = scalebench::make_reduce_kernel();
        crash.id = "crashes_hard";
        crash.body = [](const scalebench::execution_policy&, scalebench::kernel_instance&) {
            std::abort();
        };
        registry.register_kernel(crash);
    }
    scalebench::sweep_config cfg;
    cfg.kernels = {"crashes_hard", "reduce"};
    cfg.backends = {scalebench::backend_id::seq};
    cfg.min_exp = 3;
    cfg.max_exp = 3;
    cfg.reps = 1;
    cfg.warmups = 0;
    const auto plan = scalebench::build_plan(cfg);
    const auto results = scalebench::execute_plan_isolated(plan);
    REQUIRE(results.points.size() == 2);
    CHECK(!results.points[0].valid);
    CHECK(results.points[0].note.find("signal") != std::string::npos);
    CHECK(results.points[1].valid);  // the sweep continued
}

TEST_CASE("allocator comparison accepts two separate campaign files") {
    temp_file def_file("cli_alloc_def.json");
    temp_file ft_file("cli_alloc_ft.json");
    const std::vector<std::string> common = {"--kernels", "reduce", "--backends", "seq,pool",
                                             "--max-threads", "2", "--oversubscribe",
                                             "--min-exp", "3", "--max-exp", "4", "--reps", "1",
                                             "--warmup", "0", "--quiet"};
    auto with = [&](const char* alloc, const std::string& out) {
        std::vector<std::string> args = {"run", "--allocator", alloc, "--out", out};
        args.insert(args.end(), common.begin(), common.end());
        return invoke(args);
    };
    REQUIRE(with("default", def_file.path).code == 0);
    REQUIRE(with("first_touch", ft_file.path).code == 0);
    const auto r = invoke({"report", "--in", def_file.path, "--in", ft_file.path, "--artifact",
                           "allocator", "--format", "csv"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("kernel,backend,threads,n,percent", 0) == 0);
    std::size_t lines = 0;
    for (const char c : r.out) lines += c == '\n';
    CHECK(lines == 1 + 2 * 3);  // header + sizes x (seq + pool{1,2})
}
