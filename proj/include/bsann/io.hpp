#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bsann::io {

struct WavData {
  int channels = 0;
  int sample_rate = 0;
  std::vector<float> interleaved;  // frames * channels

  std::size_t frames() const { return channels ? interleaved.size() / channels : 0; }
  std::vector<float> channel(int c) const;
};

// 32-bit IEEE float WAV (WAVE_FORMAT_EXTENSIBLE when channels > 2).
void write_wav_float(const std::string& path, const WavData& wav);
WavData read_wav_float(const std::string& path);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::string& path);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

// Little-endian packing of float32 payloads.
void append_f32_le(std::vector<std::uint8_t>& out, float v);
float read_f32_le(const std::uint8_t* p);
void append_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v);
std::uint64_t read_u64_le(const std::uint8_t* p);

// Binary container shared by datasets and checkpoints: 4 magic bytes, u64 LE
// header length, UTF-8 JSON header, then the payload blob.
struct Container {
  std::string header;
  std::vector<std::uint8_t> blob;
};
void write_container(const std::string& path, const char magic[4], const std::string& header,
                     std::span<const std::uint8_t> blob);
Container read_container(const std::string& path, const char magic[4]);

}  // namespace bsann::io
