// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cassert>
#include <cstdlib>
#include <string>

#include "metok/kernels.hpp"

namespace metok::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(METOK_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa initial_isa() {
    Isa best = detect_isa();
    if (const char* env = std::getenv("METOK_KERNELS")) {
        std::string want(env);
        if (want == "scalar") {
            return Isa::scalar;
        }
        if (want == "avx2" && isa_supported(Isa::avx2)) {
            return Isa::avx2;
        }
    }
    return best;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return "scalar";
        case Isa::avx2:
            return "avx2";
    }
    return "unknown";
}

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2: {
            static const bool has = cpu_has_avx2();
            return has;
        }
    }
    return false;
}

Isa detect_isa() {
    return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

Isa active_isa() {
    return current().load(std::memory_order_relaxed);
}

bool set_isa(Isa isa) {
    if (!isa_supported(isa)) {
        return false;
    }
    current().store(isa, std::memory_order_relaxed);
    return true;
}

#if defined(METOK_BUILD_AVX2)
#define METOK_DISPATCH(fn, ...)                   \
    do {                                          \
        if (active_isa() == Isa::avx2) {          \
            return avx2::fn(__VA_ARGS__);         \
        }                                         \
        return scalar::fn(__VA_ARGS__);           \
    } while (0)
#else
#define METOK_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    METOK_DISPATCH(dot, a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    METOK_DISPATCH(axpy, alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<double> x) {
    METOK_DISPATCH(scale, alpha, x.data(), x.size());
}

void matvec(std::span<const double> w, std::span<const double> x, std::span<double> out) {
    assert(w.size() == out.size() * x.size());
    METOK_DISPATCH(matvec, w.data(), x.data(), out.data(), out.size(), x.size());
}

#undef METOK_DISPATCH

}  // namespace metok::kernels
