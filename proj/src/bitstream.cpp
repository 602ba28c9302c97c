#include "qgsm/bitstream.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "qgsm/codebook.hpp"

namespace qgsm {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  std::uint8_t u8(const char* what) {
    if (pos >= bytes.size()) throw ParseError(std::string("truncated stream: ") + what);
    return bytes[pos++];
  }
  std::uint32_t u32(const char* what) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8(what);
    return v;
  }
  std::uint64_t u64(const char* what) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | u8(what);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
};

// MSB-first bit packing
class BitWriter {
 public:
  void put(std::uint64_t value, unsigned bits) {
    for (unsigned i = bits; i-- > 0;) push_bit((value >> i) & 1);
  }
  std::vector<std::uint8_t> finish() {
    if (fill_ != 0) bytes_.push_back(static_cast<std::uint8_t>(acc_ << (8 - fill_)));
    return std::move(bytes_);
  }

 private:
  void push_bit(std::uint64_t b) {
    acc_ = (acc_ << 1) | b;
    if (++fill_ == 8) {
      bytes_.push_back(static_cast<std::uint8_t>(acc_));
      acc_ = 0;
      fill_ = 0;
    }
  }
  std::vector<std::uint8_t> bytes_;
  std::uint64_t acc_ = 0;
  unsigned fill_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t get(unsigned bits, const char* what) {
    std::uint64_t v = 0;
    for (unsigned i = 0; i < bits; ++i) v = (v << 1) | next_bit(what);
    return v;
  }
  // remaining bits of the current byte must be zero padding
  void expect_zero_tail() {
    while (bit_ != 0) {
      if (next_bit("padding") != 0) throw ParseError("nonzero padding bits in final byte");
    }
    if (pos_ != bytes_.size()) throw ParseError("unexpected trailing bytes after payload");
  }

 private:
  std::uint64_t next_bit(const char* what) {
    if (pos_ >= bytes_.size()) throw ParseError(std::string("truncated stream: ") + what);
    const std::uint64_t b = (bytes_[pos_] >> (7 - bit_)) & 1;
    if (++bit_ == 8) {
      bit_ = 0;
      ++pos_;
    }
    return b;
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  unsigned bit_ = 0;
};

void check_header(const StreamHeader& h) {
  if (h.n < 1) throw ParseError("invalid header field: n must be at least 1");
  if (h.rate_den == 0) throw ParseError("invalid header field: rate denominator is zero");
  if (!std::isfinite(h.sigma2) || h.sigma2 <= 0.0)
    throw ParseError("invalid header field: sigma2 must be positive");
  if (!std::isfinite(h.c2) || h.c2 <= 0.0)
    throw ParseError("invalid header field: c2 must be positive");
}

}  // namespace

unsigned width_bits(std::uint64_t count) {
  return count <= 1 ? 0 : std::bit_width(count - 1);
}

ModelParams StreamHeader::params() const {
  ModelParams p;
  p.n = n;
  p.rate_b = Rational(rate_num, rate_den);
  p.sigma2 = sigma2;
  p.c2 = c2;
  return p;
}

StreamHeader StreamHeader::from(const ModelParams& params, std::uint64_t seed) {
  params.validate();
  StreamHeader h;
  h.n = params.n;
  h.rate_num = params.rate_b.num;
  h.rate_den = params.rate_b.den;
  h.sigma2 = params.sigma2;
  h.c2 = params.c2;
  h.seed = seed;
  return h;
}

std::vector<std::uint8_t> pack(const StreamHeader& header, const QuantizedIndex& index) {
  if (header.magic != kStreamMagic) throw std::invalid_argument("pack: bad magic in header");
  if (header.version != kStreamVersion) throw std::invalid_argument("pack: unsupported version");
  check_header(header);
  if (index.seed != header.seed)
    throw std::invalid_argument("pack: index seed does not match header seed");
  const ModelParams p = header.params();
  const MagnitudeGrid grid = magnitude_grid(p.n, p.c2);
  const std::uint64_t count = codeword_count(p.n, p.rate_b);
  if (index.mag_index >= grid.size)
    throw std::invalid_argument("pack: magnitude index out of range");
  if (index.dir_index >= count)
    throw std::invalid_argument("pack: direction index out of range");

  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 16);
  out.insert(out.end(), header.magic.begin(), header.magic.end());
  out.push_back(header.version);
  put_u32(out, header.n);
  put_u32(out, header.rate_num);
  put_u32(out, header.rate_den);
  put_f64(out, header.sigma2);
  put_f64(out, header.c2);
  put_u64(out, header.seed);

  BitWriter bw;
  bw.put(index.mag_index, width_bits(grid.size));
  bw.put(index.dir_index, width_bits(count));
  const std::vector<std::uint8_t> payload = bw.finish();
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Unpacked unpack(std::span<const std::uint8_t> bytes) {
  Reader r{bytes};
  StreamHeader h;
  for (auto& m : h.magic) m = r.u8("magic");
  if (h.magic != kStreamMagic) throw ParseError("bad magic: not a QGSM stream");
  h.version = r.u8("version");
  if (h.version != kStreamVersion)
    throw ParseError("unsupported version " + std::to_string(h.version));
  h.n = r.u32("n");
  h.rate_num = r.u32("rate_num");
  h.rate_den = r.u32("rate_den");
  h.sigma2 = r.f64("sigma2");
  h.c2 = r.f64("c2");
  h.seed = r.u64("seed");
  check_header(h);

  const ModelParams p = h.params();
  const MagnitudeGrid grid = magnitude_grid(p.n, p.c2);
  const std::uint64_t count = codeword_count(p.n, p.rate_b);

  BitReader br(bytes.subspan(r.pos));
  QuantizedIndex idx;
  idx.mag_index = br.get(width_bits(grid.size), "magnitude index");
  idx.dir_index = br.get(width_bits(count), "direction index");
  br.expect_zero_tail();
  idx.seed = h.seed;
  if (idx.mag_index >= grid.size) throw ParseError("magnitude index out of range");
  if (idx.dir_index >= count) throw ParseError("direction index out of range");
  return {h, idx};
}

}  // namespace qgsm
