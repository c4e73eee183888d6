// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

namespace graft {

/// Philox4x32-10 block: a keyed bijection of a 128-bit counter. Output words
/// depend only on (counter, key), never on call order.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key) noexcept;

/// Uniform double in the open interval (0, 1) built from 64 random bits.
double uniform_open(std::uint32_t hi, std::uint32_t lo) noexcept;

/// Standard normal draw addressed by (seed, row, column): one Philox block
/// feeds a Box-Muller transform.
double standard_normal(std::uint64_t seed, std::uint64_t row, std::uint64_t column) noexcept;

}  // namespace graft
