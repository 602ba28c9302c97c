#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "qgsm/estimator.hpp"
#include "qgsm/model.hpp"

// Serialized form of one quantized observation. The header carries every
// model parameter the decoder needs (sigma2, c2, seed included), so a stream
// is self-contained. All multi-byte fields are big-endian; the payload packs
// the magnitude index then the direction index MSB-first and zero-pads to a
// byte boundary.

namespace qgsm {

inline constexpr std::array<std::uint8_t, 4> kStreamMagic = {'Q', 'G', 'S', 'M'};
inline constexpr std::uint8_t kStreamVersion = 1;

struct StreamHeader {
  std::array<std::uint8_t, 4> magic = kStreamMagic;
  std::uint8_t version = kStreamVersion;
  std::uint32_t n = 1;
  std::uint32_t rate_num = 0;
  std::uint32_t rate_den = 1;
  double sigma2 = 1.0;
  double c2 = 1.0;
  std::uint64_t seed = 0;

  ModelParams params() const;
  static StreamHeader from(const ModelParams& params, std::uint64_t seed);
};

// header layout, in order: magic(4) version(1) n(4) rate_num(4) rate_den(4)
// sigma2(8) c2(8) seed(8)
inline constexpr std::size_t kHeaderBytes = 41;

// bits needed to address `count` values; 0 when there is nothing to choose
unsigned width_bits(std::uint64_t count);

std::vector<std::uint8_t> pack(const StreamHeader& header, const QuantizedIndex& index);

struct Unpacked {
  StreamHeader header;
  QuantizedIndex index;
};

// exact inverse of pack on valid streams; throws ParseError naming the
// offending part (magic, version, truncation, padding, index bounds, header
// fields) otherwise
Unpacked unpack(std::span<const std::uint8_t> bytes);

}  // namespace qgsm
