// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "flowpilot/core.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace flowpilot {

/// mt19937_64 with portable draws. The standard distributions are
/// implementation-defined, so seeded outputs would differ between standard
/// libraries; these helpers do not.
class Rng
{
public:
    explicit Rng(std::uint64_t seed)
    : engine_(seed)
    {}

    /// Independent stream for a (seed, label) pair.
    Rng(std::uint64_t seed, std::string_view stream)
    : engine_(seed ^ fnv1a64(stream))
    {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n)
    {
        std::uint64_t const limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Uniform in [0, 1).
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return unit() < p; }

private:
    std::mt19937_64 engine_;
};

} // namespace flowpilot
