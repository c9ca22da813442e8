/*
 * Copyright 2026 The ltcal Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

// Dense double-precision inner loops used by scoring and backprop.
//
// Every kernel has a portable scalar reference plus optional vector variants
// (AVX2+FMA on x86-64, NEON on AArch64). The variant is chosen once at start-up
// from the host CPU; `LTCAL_KERNELS=scalar` in the environment or
// `set_backend()` forces a specific one. Vector variants reassociate sums, so
// results agree with the scalar reference to rounding, not bit-for-bit.

#include <cassert>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace ltcal::kernels {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
    Backend backend;
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace neon
#endif

std::string_view to_string(Backend b) noexcept;

// True when the backend was compiled in and the running CPU supports it.
bool is_supported(Backend b) noexcept;

// Backends usable on this host, scalar first.
std::vector<Backend> supported_backends();

const KernelTable& table(Backend b);
const KernelTable& active() noexcept;
Backend active_backend() noexcept;

// Throws InvalidArgument when `b` is not supported on this host.
void set_backend(Backend b);

inline double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return active().dot(a.data(), b.data(), a.size());
}

inline double squared_norm(std::span<const double> a) { return active().dot(a.data(), a.data(), a.size()); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    active().axpy(alpha, x.data(), y.data(), x.size());
}

// RAII override of the active backend, restored on scope exit.
class ScopedBackend {
public:
    explicit ScopedBackend(Backend b) : previous_(active_backend()) { set_backend(b); }
    ~ScopedBackend() { set_backend(previous_); }
    ScopedBackend(const ScopedBackend&) = delete;
    ScopedBackend& operator=(const ScopedBackend&) = delete;

private:
    Backend previous_;
};

}  // namespace ltcal::kernels
