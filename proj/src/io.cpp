#include "bsann/io.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "bsann/core.hpp"

namespace bsann::io {
namespace {

constexpr std::uint16_t kFormatIeeeFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;
// KSDATAFORMAT_SUBTYPE_IEEE_FLOAT
constexpr std::uint8_t kFloatGuid[16] = {0x03, 0x00, 0x00, 0x00, 0x00, 0x00, 0x10, 0x00,
                                         0x80, 0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}
std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<float> WavData::channel(int c) const {
  std::vector<float> out(frames());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = interleaved[i * channels + c];
  return out;
}

void append_f32_le(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

float read_f32_le(const std::uint8_t* p) {
  const std::uint32_t bits = get_u32(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void append_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

std::uint64_t read_u64_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path);
}

void write_wav_float(const std::string& path, const WavData& wav) {
  if (wav.channels <= 0 || wav.sample_rate <= 0) throw ConfigError("invalid WAV parameters");
  const bool extensible = wav.channels > 2;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(wav.interleaved.size() * 4);
  const std::uint32_t fmt_bytes = extensible ? 40 : 16;
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes + 24);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 4 + 8 + fmt_bytes + 8 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, fmt_bytes);
  put_u16(out, extensible ? kFormatExtensible : kFormatIeeeFloat);
  put_u16(out, static_cast<std::uint16_t>(wav.channels));
  put_u32(out, static_cast<std::uint32_t>(wav.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(wav.sample_rate * wav.channels * 4));
  put_u16(out, static_cast<std::uint16_t>(wav.channels * 4));
  put_u16(out, 32);
  if (extensible) {
    put_u16(out, 22);
    put_u16(out, 32);
    put_u32(out, 0);  // no speaker-position mask
    out.insert(out.end(), std::begin(kFloatGuid), std::end(kFloatGuid));
  }
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (float v : wav.interleaved) append_f32_le(out, v);
  write_file(path, out);
}

WavData read_wav_float(const std::string& path) {
  const std::vector<std::uint8_t> b = read_file(path);
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0)
    throw FormatError(path + ": not a RIFF/WAVE file");
  WavData wav;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::uint32_t size = get_u32(b.data() + pos + 4);
    const std::uint8_t* body = b.data() + pos + 8;
    if (pos + 8 + size > b.size()) throw FormatError(path + ": truncated chunk");
    if (std::memcmp(b.data() + pos, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError(path + ": short fmt chunk");
      std::uint16_t format = get_u16(body);
      if (format == kFormatExtensible && size >= 40) format = get_u16(body + 24);
      if (format != kFormatIeeeFloat || get_u16(body + 14) != 32)
        throw FormatError(path + ": only 32-bit float WAV is supported");
      wav.channels = get_u16(body + 2);
      wav.sample_rate = static_cast<int>(get_u32(body + 4));
      have_fmt = true;
    } else if (std::memcmp(b.data() + pos, "data", 4) == 0) {
      if (!have_fmt) throw FormatError(path + ": data before fmt");
      wav.interleaved.resize(size / 4);
      for (std::size_t i = 0; i < wav.interleaved.size(); ++i)
        wav.interleaved[i] = read_f32_le(body + 4 * i);
    }
    pos += 8 + size + (size & 1u);
  }
  if (!have_fmt || wav.channels == 0) throw FormatError(path + ": missing fmt chunk");
  return wav;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("sha256 failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

void write_container(const std::string& path, const char magic[4], const std::string& header,
                     std::span<const std::uint8_t> blob) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + header.size() + blob.size());
  out.insert(out.end(), magic, magic + 4);
  append_u64_le(out, header.size());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), blob.begin(), blob.end());
  write_file(path, out);
}

Container read_container(const std::string& path, const char magic[4]) {
  std::vector<std::uint8_t> b = read_file(path);
  if (b.size() < 12 || std::memcmp(b.data(), magic, 4) != 0)
    throw FormatError(path + ": bad magic, expected " + std::string(magic, 4));
  const std::uint64_t len = read_u64_le(b.data() + 4);
  if (len > b.size() - 12) throw FormatError(path + ": truncated header");
  Container c;
  c.header.assign(reinterpret_cast<const char*>(b.data() + 12), len);
  c.blob.assign(b.begin() + 12 + static_cast<std::ptrdiff_t>(len), b.end());
  return c;
}

}  // namespace bsann::io
