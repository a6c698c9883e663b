// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace phasecal {

/// Identifiers of the independent substreams derived from one experiment seed.
enum class StreamId : std::uint32_t {
  kFrequencyOffsets = 1,
  kSpatialOffsets = 2,
  kNoise = 3,
};

/// Portable random substream.
///
/// The engine is std::mt19937_64 (its output sequence is fixed by the C++
/// standard) seeded through std::seed_seq with {seed_lo, seed_hi, stream,
/// index}. The std distribution classes are implementation-defined, so the
/// uniform and Gaussian transforms are done here:
///   uniform  = ((u64 >> 11) + 0.5) * 2^-53        in (0, 1)
///   gaussian = Box-Muller, both outputs consumed in order
/// Identical (seed, stream, index) therefore give bit-identical draws on any
/// conforming platform.
class Substream {
 public:
  Substream(std::uint64_t seed, StreamId stream, std::uint32_t index = 0);

  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Circular complex Gaussian with E|w|^2 = variance.
  std::complex<double> complex_normal(double variance);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace phasecal
