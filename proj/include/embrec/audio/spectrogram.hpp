#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "embrec/audio/wav.hpp"

namespace embrec::audio {

inline constexpr std::size_t kFftSize = 2048;
inline constexpr std::size_t kHop = 512;
inline constexpr std::size_t kMelBins = 128;
inline constexpr double kLogFloor = 1e-6;
inline constexpr double kMaxSeconds = 30.0;

// Complex STFT, row-major [bins x frames] with bins = fft_size / 2 + 1.
struct ComplexSpectrogram {
  std::size_t bins = 0;
  std::size_t frames = 0;
  std::vector<std::complex<float>> values;

  std::complex<float> at(std::size_t bin, std::size_t frame) const {
    return values[bin * frames + frame];
  }
};

// Frames produced by a window of fft_size sliding by hop over n samples.
// Zero when n < fft_size.
std::size_t frame_count(std::size_t n_samples, std::size_t fft_size, std::size_t hop);

// Periodic Hann window per frame, no padding. Throws InsufficientAudioError
// when the clip is shorter than one frame.
ComplexSpectrogram stft(const AudioClip& clip, std::size_t fft_size = kFftSize,
                        std::size_t hop = kHop);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters with unit peak, row-major [n_mels x fft_size/2+1].
struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t n_bins = 0;
  std::vector<float> weights;
  std::vector<double> centers_hz;

  float at(std::size_t mel, std::size_t bin) const { return weights[mel * n_bins + bin]; }
};

MelFilterbank mel_filterbank(std::uint32_t sample_rate = kSampleRate,
                             std::size_t fft_size = kFftSize, std::size_t n_mels = kMelBins);

// Row-major [bins x frames] natural-log mel energies.
struct LogMelSpectrogram {
  std::size_t bins = kMelBins;
  std::size_t frames = 0;
  std::vector<float> values;
  std::uint32_t hop = kHop;
  std::uint32_t sample_rate = kSampleRate;

  float at(std::size_t bin, std::size_t frame) const { return values[bin * frames + frame]; }
};

// ln(mel * |stft|^2 + 1e-6) over the first 30 s of a 22050 Hz clip.
LogMelSpectrogram log_mel(const AudioClip& clip);

// Frames covered by a context of the given length in seconds (0 < d <= 30).
std::size_t segment_frames(double context_duration);

struct LogMelSegment {
  std::size_t bins = kMelBins;
  std::size_t frames = 0;
  std::vector<float> values;  // row-major [bins x frames]
  double context_duration = 0.0;
  std::size_t source_offset = 0;
};

// Offset uniform over [0, min(frames, frames_30s) - F].
LogMelSegment sample_segment(const LogMelSpectrogram& spec, double context_duration,
                             std::uint64_t seed);

// Deterministic middle window, used at export and evaluation time.
LogMelSegment center_segment(const LogMelSpectrogram& spec, double context_duration);

LogMelSegment segment_at(const LogMelSpectrogram& spec, std::size_t frames, std::size_t offset,
                         double context_duration);

// LMEL cache file.
std::string encode_log_mel(const LogMelSpectrogram& spec);
LogMelSpectrogram decode_log_mel(std::string_view bytes);
void save_log_mel(const std::filesystem::path& path, const LogMelSpectrogram& spec);
LogMelSpectrogram load_log_mel(const std::filesystem::path& path);

}  // namespace embrec::audio
