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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ltcal/error.hpp"
#include "ltcal/kernels.hpp"

namespace ltcal::kernels {
namespace {

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

TEST(Kernels, ScalarIsAlwaysSupported) {
    EXPECT_TRUE(is_supported(Backend::scalar));
    const auto all = supported_backends();
    ASSERT_FALSE(all.empty());
    EXPECT_EQ(all.front(), Backend::scalar);
}

TEST(Kernels, EnvironmentOverrideSelectsScalar) {
    const char* env = std::getenv("LTCAL_KERNELS");
    if (env == nullptr || std::string(env) != "scalar") GTEST_SKIP() << "only meaningful with LTCAL_KERNELS=scalar";
    EXPECT_EQ(active_backend(), Backend::scalar);
}

TEST(Kernels, UnsupportedBackendIsRejected) {
    for (Backend b : {Backend::avx2, Backend::neon})
        if (!is_supported(b)) {
            EXPECT_THROW(set_backend(b), InvalidArgument);
        }
}

TEST(Kernels, ScopedBackendRestoresPrevious) {
    const Backend before = active_backend();
    {
        ScopedBackend s(Backend::scalar);
        EXPECT_EQ(active_backend(), Backend::scalar);
    }
    EXPECT_EQ(active_backend(), before);
}

// Every length from 0 to 67 hits each tail path of the vector loops.
TEST(Kernels, DotMatchesScalarReferenceOnEveryBackend) {
    std::mt19937_64 rng(7);
    for (std::size_t n = 0; n < 68; ++n) {
        const auto a = random_values(rng, n), b = random_values(rng, n);
        const double ref = scalar::dot(a.data(), b.data(), n);
        double mag = 0.0;
        for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
        for (Backend be : supported_backends()) {
            const double got = table(be).dot(a.data(), b.data(), n);
            EXPECT_NEAR(got, ref, 4.0 * n * 1.2e-16 * mag + 1e-300) << to_string(be) << " n=" << n;
        }
    }
}

TEST(Kernels, AxpyMatchesScalarReferenceOnEveryBackend) {
    std::mt19937_64 rng(11);
    for (std::size_t n = 0; n < 68; ++n) {
        const auto x = random_values(rng, n), y0 = random_values(rng, n);
        auto ref = y0;
        scalar::axpy(0.37, x.data(), ref.data(), n);
        for (Backend be : supported_backends()) {
            auto y = y0;
            table(be).axpy(0.37, x.data(), y.data(), n);
            // One fused multiply-add differs from mul+add by at most one rounding.
            for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y[i], ref[i], 4e-16) << to_string(be);
        }
    }
}

TEST(Kernels, SpanWrappersUseActiveTable) {
    const std::vector<double> a{1.0, 2.0, 3.0}, b{4.0, -5.0, 6.0};
    EXPECT_DOUBLE_EQ(dot(a, b), 12.0);
    EXPECT_DOUBLE_EQ(squared_norm(a), 14.0);
    std::vector<double> y{1.0, 1.0, 1.0};
    axpy(2.0, a, y);
    EXPECT_EQ(y, (std::vector<double>{3.0, 5.0, 7.0}));
}

}  // namespace
}  // namespace ltcal::kernels
