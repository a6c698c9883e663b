// SPDX-License-Identifier: Apache-2.0

#include "phasecal/rng.hpp"

#include <cmath>
#include <numbers>

namespace phasecal {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, StreamId stream, std::uint32_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), index};
  return std::mt19937_64(seq);
}

}  // namespace

Substream::Substream(std::uint64_t seed, StreamId stream, std::uint32_t index)
    : engine_(make_engine(seed, stream, index)) {}

double Substream::uniform() {
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  return (static_cast<double>(engine_() >> 11) + 0.5) * kScale;
}

double Substream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

std::complex<double> Substream::complex_normal(double variance) {
  const double scale = std::sqrt(0.5 * variance);
  const double re = normal();
  const double im = normal();
  return {scale * re, scale * im};
}

}  // namespace phasecal
