// SPDX-License-Identifier: Apache-2.0
//
// CSIB: little-endian binary container for an N x K x L CSI tensor.
//
//   offset  size  field
//        0     4  magic "CSIB"
//        4     4  version (u32) = 1
//        8    12  N, K, L (u32)
//       20    16  carrier_frequency, subcarrier_spacing (f64, Hz)
//       36     1  geometry_kind (u8): 0 = ULA, 1 = explicit positions
//       37     8  antenna_spacing (f64, m; 0 for explicit positions)
//       45  16 N  x, y per antenna (f64), only when geometry_kind = 1
//        .   8 NKL payload: (re, im) float32 pairs, n-major, k-middle, l-minor

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "phasecal/types.hpp"

namespace phasecal {

inline constexpr std::uint32_t kCsibVersion = 1;
inline constexpr std::size_t kCsibHeaderBytes = 45;

struct CsiFileHeader {
  std::uint32_t version = kCsibVersion;
  std::uint32_t num_antennas = 0;
  std::uint32_t num_subcarriers = 0;
  std::uint32_t num_symbols = 0;
  double carrier_frequency = 0.0;
  double subcarrier_spacing = 0.0;
  std::uint8_t geometry_kind = 0;
  double antenna_spacing = 0.0;
  std::vector<Position> positions;  ///< filled for both kinds after reading

  /// Bytes from the start of the file to the payload.
  std::uint64_t payload_offset() const;
  /// N K L * 8. Throws DataError on overflow.
  std::uint64_t payload_bytes() const;

  ArrayGeometry geometry() const;
  static CsiFileHeader describe(const SystemConfig& config, const ArrayGeometry& geometry);
};

/// Reads and validates the header only (including that the file length
/// matches the header). Throws FormatError.
CsiFileHeader read_csi_header(const std::filesystem::path& path);

struct CsiFile {
  CsiFileHeader header;
  CsiTensor tensor;
};

/// Whole-file read. Nothing is returned on error.
CsiFile read_csi(const std::filesystem::path& path);
void write_csi(const std::filesystem::path& path, const CsiTensor& csi,
               const ArrayGeometry& geometry);

/// Streams the payload lane by lane, (n, k) in file order.
class CsiReader {
 public:
  using LaneFn = std::function<void(int n, int k, std::span<const cdouble> lane)>;

  explicit CsiReader(const std::filesystem::path& path);
  const CsiFileHeader& header() const { return header_; }
  void for_each_lane(const LaneFn& fn);

 private:
  std::filesystem::path path_;
  CsiFileHeader header_;
};

/// Writes lanes in file order; finish() checks that every lane was written.
class CsiWriter {
 public:
  CsiWriter(const std::filesystem::path& path, const CsiFileHeader& header);
  void write_lane(int n, int k, std::span<const cdouble> lane);
  void finish();

 private:
  std::ofstream out_;
  CsiFileHeader header_;
  std::uint64_t next_lane_ = 0;
  std::vector<char> buffer_;
};

}  // namespace phasecal
