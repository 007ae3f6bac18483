// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dense inner-loop kernels with a scalar reference implementation and an
// AVX2/FMA variant. The variant is chosen once at startup from CPUID and can
// be overridden with METOK_KERNELS=scalar|avx2 or set_isa().

#include <cstddef>
#include <span>
#include <string_view>

namespace metok::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// Best ISA this CPU and build support.
Isa detect_isa();

/// ISA currently used by the dispatching entry points.
Isa active_isa();

/// Forces an ISA. Returns false (and changes nothing) if unsupported.
bool set_isa(Isa isa);

bool isa_supported(Isa isa);

// Dispatching entry points. Spans must have equal length where paired.
double dot(std::span<const double> a, std::span<const double> b);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// x *= alpha
void scale(double alpha, std::span<double> x);
/// out[r] = dot(W[r, :], x) for a row-major rows x x.size() matrix.
void matvec(std::span<const double> w, std::span<const double> x, std::span<double> out);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
void matvec(const double* w, const double* x, double* out, std::size_t rows, std::size_t cols);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
void matvec(const double* w, const double* x, double* out, std::size_t rows, std::size_t cols);
}  // namespace avx2

}  // namespace metok::kernels
