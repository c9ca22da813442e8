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


#include "ltcal/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "ltcal/error.hpp"

namespace ltcal::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace scalar

namespace {

constexpr KernelTable kScalarTable{Backend::scalar, &scalar::dot, &scalar::axpy};

#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable kAvx2Table{Backend::avx2, &avx2::dot, &avx2::axpy};
#endif

#if defined(__aarch64__)
constexpr KernelTable kNeonTable{Backend::neon, &neon::dot, &neon::axpy};
#endif

bool cpu_has_avx2() noexcept {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* pick_default() noexcept {
    if (const char* env = std::getenv("LTCAL_KERNELS")) {
        const std::string want(env);
        if (want == "scalar") return &kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
        if (want == "avx2" && cpu_has_avx2()) return &kAvx2Table;
#endif
#if defined(__aarch64__)
        if (want == "neon") return &kNeonTable;
#endif
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (cpu_has_avx2()) return &kAvx2Table;
#endif
#if defined(__aarch64__)
    return &kNeonTable;
#else
    return &kScalarTable;
#endif
}

std::atomic<const KernelTable*>& active_slot() noexcept {
    static std::atomic<const KernelTable*> slot{pick_default()};
    return slot;
}

}  // namespace

std::string_view to_string(Backend b) noexcept {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "unknown";
}

bool is_supported(Backend b) noexcept {
    switch (b) {
        case Backend::scalar: return true;
        case Backend::avx2: return cpu_has_avx2();
        case Backend::neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

std::vector<Backend> supported_backends() {
    std::vector<Backend> out;
    for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon})
        if (is_supported(b)) out.push_back(b);
    return out;
}

const KernelTable& table(Backend b) {
    if (!is_supported(b))
        throw InvalidArgument("kernel backend '" + std::string(to_string(b)) + "' is not available on this host");
    switch (b) {
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2: return kAvx2Table;
#endif
#if defined(__aarch64__)
        case Backend::neon: return kNeonTable;
#endif
        default: return kScalarTable;
    }
}

const KernelTable& active() noexcept { return *active_slot().load(std::memory_order_relaxed); }

Backend active_backend() noexcept { return active().backend; }

void set_backend(Backend b) { active_slot().store(&table(b), std::memory_order_relaxed); }

}  // namespace ltcal::kernels
