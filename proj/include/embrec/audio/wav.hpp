#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace embrec::audio {

inline constexpr std::uint32_t kSampleRate = 22050;

// Mono samples in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  std::uint32_t sample_rate = kSampleRate;

  double duration() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

// Parses a RIFF/WAVE file holding 16-bit integer or 32-bit float PCM, mono or
// stereo. Stereo is averaged to mono and the result is linearly resampled to
// `target_rate` when the source rate differs.
AudioClip decode_pcm(std::string_view bytes, std::uint32_t target_rate = kSampleRate);
AudioClip read_wav(const std::filesystem::path& path, std::uint32_t target_rate = kSampleRate);

// 16-bit mono PCM encoding with samples clipped to [-1, 1].
std::string encode_wav_pcm16(const AudioClip& clip);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

std::vector<float> resample_linear(const std::vector<float>& samples, std::uint32_t from_rate,
                                   std::uint32_t to_rate);

}  // namespace embrec::audio
