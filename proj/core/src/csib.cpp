// SPDX-License-Identifier: Apache-2.0

#include "phasecal/csib.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "phasecal/errors.hpp"

namespace phasecal {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'S', 'I', 'B'};

template <typename U>
void put_le(std::vector<char>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i)
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_u32(std::vector<char>& out, std::uint32_t v) { put_le(out, v); }
void put_f64(std::vector<char>& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
void put_f32(std::vector<char>& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }

template <typename U>
U get_le(const char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    v |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

float get_f32(const char* p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }
double get_f64(const char* p) { return std::bit_cast<double>(get_le<std::uint64_t>(p)); }

std::vector<char> encode_header(const CsiFileHeader& h) {
  std::vector<char> out(kMagic.begin(), kMagic.end());
  put_u32(out, h.version);
  put_u32(out, h.num_antennas);
  put_u32(out, h.num_subcarriers);
  put_u32(out, h.num_symbols);
  put_f64(out, h.carrier_frequency);
  put_f64(out, h.subcarrier_spacing);
  out.push_back(static_cast<char>(h.geometry_kind));
  put_f64(out, h.antenna_spacing);
  if (h.geometry_kind == 1) {
    for (const Position& p : h.positions) {
      put_f64(out, p.x);
      put_f64(out, p.y);
    }
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

void read_exact(std::ifstream& in, char* dst, std::size_t n, const std::string& what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw FormatError("truncated " + what);
}

CsiFileHeader parse_header(std::ifstream& in, std::uint64_t file_size) {
  std::array<char, kCsibHeaderBytes> raw{};
  read_exact(in, raw.data(), raw.size(), "header");
  if (!std::equal(kMagic.begin(), kMagic.end(), raw.begin())) throw FormatError("bad magic");

  CsiFileHeader h;
  h.version = get_le<std::uint32_t>(raw.data() + 4);
  if (h.version != kCsibVersion)
    throw FormatError("unsupported version " + std::to_string(h.version));
  h.num_antennas = get_le<std::uint32_t>(raw.data() + 8);
  h.num_subcarriers = get_le<std::uint32_t>(raw.data() + 12);
  h.num_symbols = get_le<std::uint32_t>(raw.data() + 16);
  h.carrier_frequency = get_f64(raw.data() + 20);
  h.subcarrier_spacing = get_f64(raw.data() + 28);
  h.geometry_kind = static_cast<std::uint8_t>(raw[36]);
  h.antenna_spacing = get_f64(raw.data() + 37);

  if (h.num_antennas == 0 || h.num_subcarriers == 0 || h.num_symbols == 0)
    throw FormatError("zero dimension in header");
  if (h.num_antennas > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
      h.num_subcarriers > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
      h.num_symbols > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
    throw FormatError("dimension overflow");
  if (h.geometry_kind > 1) throw FormatError("unknown geometry kind");

  const std::uint64_t payload = h.payload_bytes();
  const std::uint64_t offset = h.payload_offset();
  if (file_size < offset) throw FormatError("truncated header");

  if (h.geometry_kind == 1) {
    std::vector<char> pos(static_cast<std::size_t>(16) * h.num_antennas);
    read_exact(in, pos.data(), pos.size(), "position table");
    for (std::uint32_t n = 0; n < h.num_antennas; ++n)
      h.positions.push_back({get_f64(pos.data() + 16 * n), get_f64(pos.data() + 16 * n + 8)});
  } else {
    try {
      h.positions = h.geometry().positions();
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("invalid ULA in header: ") + e.what());
    }
  }

  if (file_size - offset < payload) throw FormatError("truncated payload");
  if (file_size - offset > payload) throw FormatError("trailing bytes after payload");
  return h;
}

constexpr std::size_t kSampleBytes = 8;

}  // namespace

std::uint64_t CsiFileHeader::payload_offset() const {
  return kCsibHeaderBytes + (geometry_kind == 1 ? 16ull * num_antennas : 0ull);
}

std::uint64_t CsiFileHeader::payload_bytes() const {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t v = kSampleBytes;
  for (std::uint64_t d : {std::uint64_t{num_antennas}, std::uint64_t{num_subcarriers},
                          std::uint64_t{num_symbols}}) {
    if (d != 0 && v > kMax / d) throw FormatError("dimension overflow");
    v *= d;
  }
  return v;
}

ArrayGeometry CsiFileHeader::geometry() const {
  if (geometry_kind == 0) return ArrayGeometry::ula(static_cast<int>(num_antennas), antenna_spacing);
  return ArrayGeometry(positions);
}

CsiFileHeader CsiFileHeader::describe(const SystemConfig& config, const ArrayGeometry& geometry) {
  config.validate();
  if (geometry.size() != static_cast<std::size_t>(config.num_antennas))
    throw ShapeMismatch("geometry size does not match N");
  CsiFileHeader h;
  h.num_antennas = static_cast<std::uint32_t>(config.num_antennas);
  h.num_subcarriers = static_cast<std::uint32_t>(config.num_subcarriers);
  h.num_symbols = static_cast<std::uint32_t>(config.num_symbols);
  h.carrier_frequency = config.carrier_frequency;
  h.subcarrier_spacing = config.subcarrier_spacing;
  h.positions = geometry.positions();
  if (geometry.ula_spacing()) {
    h.geometry_kind = 0;
    h.antenna_spacing = *geometry.ula_spacing();
  } else {
    h.geometry_kind = 1;
    h.antenna_spacing = 0.0;
  }
  return h;
}

CsiFileHeader read_csi_header(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_header(in, std::filesystem::file_size(path));
}

CsiReader::CsiReader(const std::filesystem::path& path) : path_(path) {
  header_ = read_csi_header(path);
}

void CsiReader::for_each_lane(const LaneFn& fn) {
  std::ifstream in = open_input(path_);
  in.seekg(static_cast<std::streamoff>(header_.payload_offset()));
  const std::size_t l = header_.num_symbols;
  std::vector<char> raw(l * kSampleBytes);
  std::vector<cdouble> lane(l);
  for (std::uint32_t n = 0; n < header_.num_antennas; ++n) {
    for (std::uint32_t k = 0; k < header_.num_subcarriers; ++k) {
      read_exact(in, raw.data(), raw.size(), "payload");
      for (std::size_t i = 0; i < l; ++i)
        lane[i] = {get_f32(raw.data() + 8 * i), get_f32(raw.data() + 8 * i + 4)};
      fn(static_cast<int>(n), static_cast<int>(k), lane);
    }
  }
}

CsiFile read_csi(const std::filesystem::path& path) {
  CsiReader reader(path);
  const CsiFileHeader& h = reader.header();
  CsiTensor tensor(static_cast<int>(h.num_antennas), static_cast<int>(h.num_subcarriers),
                   static_cast<int>(h.num_symbols), h.carrier_frequency, h.subcarrier_spacing);
  reader.for_each_lane([&](int n, int k, std::span<const cdouble> lane) {
    std::copy(lane.begin(), lane.end(), tensor.lane(n, k).begin());
  });
  return {h, std::move(tensor)};
}

void write_csi(const std::filesystem::path& path, const CsiTensor& csi,
               const ArrayGeometry& geometry) {
  if (geometry.size() != static_cast<std::size_t>(csi.num_antennas()))
    throw ShapeMismatch("geometry size does not match the tensor");
  CsiFileHeader h;
  h.num_antennas = static_cast<std::uint32_t>(csi.num_antennas());
  h.num_subcarriers = static_cast<std::uint32_t>(csi.num_subcarriers());
  h.num_symbols = static_cast<std::uint32_t>(csi.num_symbols());
  h.carrier_frequency = csi.carrier_frequency();
  h.subcarrier_spacing = csi.subcarrier_spacing();
  h.positions = geometry.positions();
  h.geometry_kind = geometry.ula_spacing() ? 0 : 1;
  h.antenna_spacing = geometry.ula_spacing().value_or(0.0);

  CsiWriter writer(path, h);
  for (int n = 0; n < csi.num_antennas(); ++n)
    for (int k = 0; k < csi.num_subcarriers(); ++k) writer.write_lane(n, k, csi.lane(n, k));
  writer.finish();
}

CsiWriter::CsiWriter(const std::filesystem::path& path, const CsiFileHeader& header)
    : out_(path, std::ios::binary | std::ios::trunc), header_(header) {
  if (!out_) throw DataError("cannot open " + path.string() + " for writing");
  header_.payload_bytes();  // overflow check
  if (header_.geometry_kind == 1 && header_.positions.size() != header_.num_antennas)
    throw ShapeMismatch("position table does not match N");
  const std::vector<char> head = encode_header(header_);
  out_.write(head.data(), static_cast<std::streamsize>(head.size()));
}

void CsiWriter::write_lane(int n, int k, std::span<const cdouble> lane) {
  const std::uint64_t expected = next_lane_;
  const std::uint64_t index = static_cast<std::uint64_t>(n) * header_.num_subcarriers + k;
  if (n < 0 || k < 0 || index != expected)
    throw PreconditionViolation("lanes must be written in (n, k) order");
  if (lane.size() != header_.num_symbols) throw ShapeMismatch("lane length must equal L");
  buffer_.clear();
  buffer_.reserve(lane.size() * kSampleBytes);
  for (const cdouble& v : lane) {
    put_f32(buffer_, static_cast<float>(v.real()));
    put_f32(buffer_, static_cast<float>(v.imag()));
  }
  out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  if (!out_) throw DataError("write failed");
  ++next_lane_;
}

void CsiWriter::finish() {
  if (next_lane_ != static_cast<std::uint64_t>(header_.num_antennas) * header_.num_subcarriers)
    throw PreconditionViolation("not every lane was written");
  out_.flush();
  if (!out_) throw DataError("write failed");
  out_.close();
}

}  // namespace phasecal
