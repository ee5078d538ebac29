#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "scalebench/datagen.hpp"
#include "scalebench/parallel.hpp"
#include "scalebench/placement.hpp"

namespace scalebench {

using any_buffer = std::variant<buffer<std::int32_t>, buffer<std::int64_t>, buffer<float>,
                                buffer<double>>;

namespace detail {

inline any_buffer generate_any(const data_spec& spec, const execution_policy& policy,
                               allocator_kind alloc) {
    auto make = [&](auto tag) -> any_buffer {
        using T = decltype(tag);
        if (spec.pattern == data_pattern::increment) {
            return generate_increment<T>(spec, policy, alloc);
        }
        if constexpr (std::is_integral_v<T>) {
            return generate_shuffled<T>(spec, policy, alloc);
        } else {
            throw invalid_spec_error("shuffled_permutation requires an integral element type");
        }
    };
    switch (spec.element) {
    case element_type::int32: return make(std::int32_t{});
    case element_type::int64: return make(std::int64_t{});
    case element_type::float32: return make(float{});
    case element_type::float64: return make(double{});
    }
    throw invalid_spec_error("unknown element type");
}

inline any_buffer allocate_any(element_type t, std::uint64_t n, const execution_policy& policy,
                               allocator_kind alloc) {
    auto make = [&](auto tag) -> any_buffer {
        using T = decltype(tag);
        return buffer<T>(allocate_buffer(alloc, n, sizeof(T), policy), n);
    };
    switch (t) {
    case element_type::int32: return make(std::int32_t{});
    case element_type::int64: return make(std::int64_t{});
    case element_type::float32: return make(float{});
    case element_type::float64: return make(double{});
    }
    throw invalid_spec_error("unknown element type");
}

/// Canonical bit pattern of a kernel result value, so outcomes of different
/// element types share one comparison currency.
template <typename T>
std::uint64_t result_bits(T v) {
    if constexpr (std::is_integral_v<T>) {
        return static_cast<std::uint64_t>(static_cast<std::make_unsigned_t<T>>(v));
    } else if constexpr (sizeof(T) == 4) {
        return std::bit_cast<std::uint32_t>(v);
    } else {
        return std::bit_cast<std::uint64_t>(v);
    }
}

template <typename T>
constexpr T map_verify_tolerance() {
    if constexpr (std::is_same_v<T, float>) {
        return 1e-5f;
    } else {
        return 1e-12;
    }
}

} // namespace detail

/// The elementwise map benchmarked by for_each: min of sine and tangent.
struct min_sin_tan {
    template <typename T>
    T operator()(T x) const {
        const T s = std::sin(x);
        const T t = std::tan(x);
        return std::min(s, t);
    }
};

/// Everything one benchmark point owns: the generated input, the scan
/// output, the find target, and the instance's private PRNG stream that
/// per-repetition refreshes draw from. Owned by exactly one run at a time.
struct kernel_instance {
    data_spec spec;
    any_buffer input;
    any_buffer output;
    bool has_output = false;
    std::uint64_t find_target = 0;
    splitmix64 rng{0};

    // Set by the last body run.
    std::optional<std::size_t> found_index;
    std::uint64_t reduce_bits = 0;
    bool fell_back = false;
};

/// A registered benchmark: how to build an instance, how to refresh it
/// between repetitions (outside the timed region), the timed body, an
/// untimed verifier, and the bytes-processed rule.
struct kernel_spec {
    std::string id;
    element_type default_element = element_type::int32;
    data_pattern pattern = data_pattern::increment;
    bool uses_output = false;
    primitive_kind required = primitive_kind::map;

    std::function<kernel_instance(const data_spec&, const execution_policy&, allocator_kind)>
        make_instance;
    std::function<void(kernel_instance&)> refresh;  // may be null (no per-rep setup)
    std::function<void(const execution_policy&, kernel_instance&)> body;
    std::function<bool(const execution_policy&, kernel_instance&)> verify;
    std::function<std::uint64_t(std::uint64_t, std::size_t)> bytes_rule;
};

inline std::uint64_t default_bytes_rule(std::uint64_t n, std::size_t element_size) {
    return n * element_size;
}

/// DataSpec an instance of this kernel defaults to.
inline data_spec default_data_spec(const kernel_spec& k, std::uint64_t n, std::uint64_t seed) {
    return data_spec{n, k.default_element, seed, k.pattern};
}

namespace detail {

inline kernel_instance make_standard_instance(const kernel_spec& k, const data_spec& spec,
                                              const execution_policy& policy,
                                              allocator_kind alloc) {
    kernel_instance ins;
    ins.spec = spec;
    ins.rng = splitmix64(spec.seed);
    if (spec.pattern == data_pattern::shuffled_permutation) {
        // Single stream: the generation shuffle and all later re-shuffles
        // come from the same seeded sequence.
        data_spec inc = spec;
        inc.pattern = data_pattern::increment;
        ins.input = generate_any(inc, policy, alloc);
        std::visit(
            [&](auto& buf) {
                using T = std::decay_t<decltype(buf)>;
                if constexpr (std::is_integral_v<typename T::value_type>) {
                    reshuffle(buf.span(), ins.rng);
                } else {
                    throw invalid_spec_error(
                        "shuffled_permutation requires an integral element type");
                }
            },
            ins.input);
    } else {
        ins.input = generate_any(spec, policy, alloc);
    }
    if (k.uses_output) {
        ins.output = allocate_any(spec.element, spec.n, policy, alloc);
        ins.has_output = true;
    }
    return ins;
}

} // namespace detail

inline kernel_spec make_find_kernel() {
    kernel_spec k;
    k.id = "find";
    k.default_element = element_type::int32;
    k.pattern = data_pattern::increment;
    k.required = primitive_kind::find;
    k.bytes_rule = default_bytes_rule;
    k.make_instance = [k](const data_spec& spec, const execution_policy& policy,
                          allocator_kind alloc) {
        return detail::make_standard_instance(k, spec, policy, alloc);
    };
    // A fresh target per repetition keeps the early-exit position moving.
    k.refresh = [](kernel_instance& ins) {
        ins.find_target = 1 + ins.rng.next_below(ins.spec.n);
    };
    k.body = [](const execution_policy& policy, kernel_instance& ins) {
        std::visit(
            [&](auto& buf) {
                using T = std::decay_t<decltype(*buf.data())>;
                exec_info info;
                ins.found_index = par_find(policy, std::span<const T>(buf.span()),
                                           static_cast<T>(ins.find_target), &info);
                ins.fell_back |= info.fell_back_to_seq;
            },
            ins.input);
    };
    k.verify = [k](const execution_policy& policy, kernel_instance& ins) {
        k.refresh(ins);
        k.body(policy, ins);
        return ins.found_index.has_value() && *ins.found_index == ins.find_target - 1;
    };
    return k;
}

/// rel_tolerance == 0 picks the element type's default (1e-12 for float64,
/// 1e-5 for float32).
inline kernel_spec make_for_each_kernel(double rel_tolerance = 0.0) {
    kernel_spec k;
    k.id = "for_each";
    k.default_element = element_type::float64;
    k.pattern = data_pattern::increment;
    k.required = primitive_kind::map;
    k.bytes_rule = default_bytes_rule;
    k.make_instance = [k](const data_spec& spec, const execution_policy& policy,
                          allocator_kind alloc) {
        return detail::make_standard_instance(k, spec, policy, alloc);
    };
    k.refresh = nullptr;  // repeated application times the same trig work
    k.body = [](const execution_policy& policy, kernel_instance& ins) {
        std::visit(
            [&](auto& buf) {
                exec_info info;
                par_map(policy, buf.span(), min_sin_tan{}, &info);
                ins.fell_back |= info.fell_back_to_seq;
            },
            ins.input);
    };
    k.verify = [k, rel_tolerance](const execution_policy& policy, kernel_instance& ins) {
        // Restore pristine values, apply once, check elementwise against
        // the scalar reference.
        return std::visit(
            [&](auto& buf) -> bool {
                using T = std::decay_t<decltype(*buf.data())>;
                auto sp = buf.span();
                for (std::size_t i = 0; i < sp.size(); ++i) sp[i] = static_cast<T>(i + 1);
                k.body(policy, ins);
                const T tol = rel_tolerance > 0.0 ? static_cast<T>(rel_tolerance)
                                                  : detail::map_verify_tolerance<T>();
                for (std::size_t i = 0; i < sp.size(); ++i) {
                    const T expect = min_sin_tan{}(static_cast<T>(i + 1));
                    const T scale = std::max(T(1), std::abs(expect));
                    if (!(std::abs(sp[i] - expect) <= tol * scale)) return false;
                }
                return true;
            },
            ins.input);
    };
    return k;
}

inline kernel_spec make_inclusive_scan_kernel() {
    kernel_spec k;
    k.id = "inclusive_scan";
    k.default_element = element_type::int32;
    k.pattern = data_pattern::increment;
    k.uses_output = true;
    k.required = primitive_kind::scan;
    k.bytes_rule = default_bytes_rule;
    k.make_instance = [k](const data_spec& spec, const execution_policy& policy,
                          allocator_kind alloc) {
        return detail::make_standard_instance(k, spec, policy, alloc);
    };
    k.refresh = nullptr;
    k.body = [](const execution_policy& policy, kernel_instance& ins) {
        std::visit(
            [&](auto& in) {
                using B = std::decay_t<decltype(in)>;
                auto& out = std::get<B>(ins.output);
                using T = std::decay_t<decltype(*in.data())>;
                exec_info info;
                par_inclusive_scan(policy, std::span<const T>(in.span()), out.span(), &info);
                ins.fell_back |= info.fell_back_to_seq;
            },
            ins.input);
    };
    k.verify = [k](const execution_policy& policy, kernel_instance& ins) {
        k.body(policy, ins);
        return std::visit(
            [&](auto& in) -> bool {
                using B = std::decay_t<decltype(in)>;
                using T = std::decay_t<decltype(*in.data())>;
                auto& out = std::get<B>(ins.output);
                const wrapping_add<T> add;
                T acc{};
                for (std::size_t i = 0; i < in.size(); ++i) {
                    acc = add(acc, in[i]);
                    if (detail::result_bits(out[i]) != detail::result_bits(acc)) return false;
                }
                return true;
            },
            ins.input);
    };
    return k;
}

inline kernel_spec make_reduce_kernel() {
    kernel_spec k;
    k.id = "reduce";
    k.default_element = element_type::int32;
    k.pattern = data_pattern::increment;
    k.required = primitive_kind::reduce;
    k.bytes_rule = default_bytes_rule;
    k.make_instance = [k](const data_spec& spec, const execution_policy& policy,
                          allocator_kind alloc) {
        return detail::make_standard_instance(k, spec, policy, alloc);
    };
    k.refresh = nullptr;
    k.body = [](const execution_policy& policy, kernel_instance& ins) {
        std::visit(
            [&](auto& buf) {
                using T = std::decay_t<decltype(*buf.data())>;
                exec_info info;
                const T total = par_reduce(policy, std::span<const T>(buf.span()),
                                           wrapping_add<T>{}, T{}, &info);
                ins.reduce_bits = detail::result_bits(total);
                ins.fell_back |= info.fell_back_to_seq;
            },
            ins.input);
    };
    k.verify = [k](const execution_policy& policy, kernel_instance& ins) {
        k.body(policy, ins);
        return std::visit(
            [&](auto& buf) -> bool {
                using T = std::decay_t<decltype(*buf.data())>;
                const wrapping_add<T> add;
                T acc{};
                for (const T x : buf.span()) acc = add(acc, x);
                return detail::result_bits(acc) == ins.reduce_bits;
            },
            ins.input);
    };
    return k;
}

inline kernel_spec make_sort_kernel() {
    kernel_spec k;
    k.id = "sort";
    k.default_element = element_type::int32;
    k.pattern = data_pattern::shuffled_permutation;
    k.required = primitive_kind::sort;
    k.bytes_rule = default_bytes_rule;
    k.make_instance = [k](const data_spec& spec, const execution_policy& policy,
                          allocator_kind alloc) {
        return detail::make_standard_instance(k, spec, policy, alloc);
    };
    // Sorting already-sorted data measures a different code path, so the
    // input is re-shuffled before every timed repetition.
    k.refresh = [](kernel_instance& ins) {
        std::visit(
            [&](auto& buf) {
                using T = std::decay_t<decltype(*buf.data())>;
                if constexpr (std::is_integral_v<T>) {
                    reshuffle(buf.span(), ins.rng);
                }
            },
            ins.input);
    };
    k.body = [](const execution_policy& policy, kernel_instance& ins) {
        std::visit(
            [&](auto& buf) {
                exec_info info;
                par_sort(policy, buf.span(), &info);
                ins.fell_back |= info.fell_back_to_seq;
            },
            ins.input);
    };
    k.verify = [k](const execution_policy& policy, kernel_instance& ins) {
        k.refresh(ins);
        k.body(policy, ins);
        return std::visit(
            [&](auto& buf) -> bool {
                using T = std::decay_t<decltype(*buf.data())>;
                auto sp = buf.span();
                for (std::size_t i = 0; i < sp.size(); ++i) {
                    if (sp[i] != static_cast<T>(i + 1)) return false;
                }
                return true;
            },
            ins.input);
    };
    return k;
}

/// Holds the selectable benchmarks. Construction registers the five
/// built-ins; additional kernels can be registered under fresh ids.
class kernel_registry {
public:
    kernel_registry() {
        register_kernel(make_find_kernel());
        register_kernel(make_for_each_kernel());
        register_kernel(make_inclusive_scan_kernel());
        register_kernel(make_reduce_kernel());
        register_kernel(make_sort_kernel());
    }

    static kernel_registry& global() {
        static kernel_registry instance;
        return instance;
    }

    void register_kernel(kernel_spec spec) {
        if (spec.id.empty()) {
            throw registry_error("kernel id must not be empty");
        }
        if (contains(spec.id)) {
            throw registry_error("kernel id already registered: " + spec.id);
        }
        kernels_.push_back(std::move(spec));
    }

    bool contains(std::string_view id) const {
        for (const auto& k : kernels_) {
            if (k.id == id) return true;
        }
        return false;
    }

    const kernel_spec& at(std::string_view id) const {
        for (const auto& k : kernels_) {
            if (k.id == id) return k;
        }
        std::string msg = "unknown kernel '" + std::string(id) + "'; registered kernels:";
        for (const auto& k : kernels_) msg += " " + k.id;
        throw registry_error(msg);
    }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        out.reserve(kernels_.size());
        for (const auto& k : kernels_) out.push_back(k.id);
        return out;
    }

private:
    std::vector<kernel_spec> kernels_;
};

} // namespace scalebench
