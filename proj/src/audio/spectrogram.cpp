#include "embrec/audio/spectrogram.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "embrec/binary_io.hpp"
#include "embrec/errors.hpp"
#include "embrec/rng.hpp"
#include "embrec/simd/kernels.hpp"

namespace embrec::audio {
namespace {

struct FftwFree {
  void operator()(void* p) const { fftwf_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

// FFTW planning is not thread-safe; execution with new-array functions is.
fftwf_plan plan_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, fftwf_plan> plans;
  std::lock_guard lock(mu);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  FftwBuffer<float> in(static_cast<float*>(fftwf_malloc(sizeof(float) * n)));
  FftwBuffer<fftwf_complex> out(
      static_cast<fftwf_complex*>(fftwf_malloc(sizeof(fftwf_complex) * (n / 2 + 1))));
  fftwf_plan p = fftwf_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans.emplace(n, p);
  return p;
}

std::vector<float> hann(std::size_t n) {
  std::vector<float> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = static_cast<float>(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n));
  }
  return w;
}

const MelFilterbank& default_filterbank() {
  static const MelFilterbank fb = mel_filterbank();
  return fb;
}

}  // namespace

std::size_t frame_count(std::size_t n_samples, std::size_t fft_size, std::size_t hop) {
  if (n_samples < fft_size) return 0;
  return (n_samples - fft_size) / hop + 1;
}

ComplexSpectrogram stft(const AudioClip& clip, std::size_t fft_size, std::size_t hop) {
  if (fft_size < 2 || hop == 0) throw ContractError("stft: fft_size >= 2 and hop > 0 required");
  const std::size_t frames = frame_count(clip.samples.size(), fft_size, hop);
  if (frames == 0) {
    throw InsufficientAudioError("stft: " + std::to_string(clip.samples.size()) +
                                 " samples is shorter than one " + std::to_string(fft_size) +
                                 "-sample frame");
  }
  const std::size_t bins = fft_size / 2 + 1;
  const std::vector<float> window = hann(fft_size);
  fftwf_plan plan = plan_for(fft_size);
  std::vector<float> in(fft_size);
  std::vector<std::complex<float>> out(bins);

  ComplexSpectrogram spec;
  spec.bins = bins;
  spec.frames = frames;
  spec.values.resize(bins * frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const float* src = clip.samples.data() + f * hop;
    for (std::size_t i = 0; i < fft_size; ++i) in[i] = src[i] * window[i];
    fftwf_execute_dft_r2c(plan, in.data(), reinterpret_cast<fftwf_complex*>(out.data()));
    for (std::size_t b = 0; b < bins; ++b) spec.values[b * frames + f] = out[b];
  }
  return spec;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(std::uint32_t sample_rate, std::size_t fft_size, std::size_t n_mels) {
  if (sample_rate == 0 || n_mels == 0 || n_mels >= fft_size / 2) {
    throw ContractError("mel_filterbank: need 0 < n_mels < fft_size/2");
  }
  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.n_bins = fft_size / 2 + 1;
  fb.weights.assign(fb.n_mels * fb.n_bins, 0.0f);

  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> points(n_mels + 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    points[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = points[m], mid = points[m + 1], hi = points[m + 2];
    fb.centers_hz.push_back(mid);
    for (std::size_t b = 0; b < fb.n_bins; ++b) {
      const double f = static_cast<double>(b) * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      fb.weights[m * fb.n_bins + b] = static_cast<float>(w);
    }
  }
  return fb;
}

LogMelSpectrogram log_mel(const AudioClip& clip) {
  if (clip.sample_rate != kSampleRate) {
    throw ContractError("log_mel: expected a " + std::to_string(kSampleRate) + " Hz clip, got " +
                        std::to_string(clip.sample_rate));
  }
  const auto limit = static_cast<std::size_t>(kMaxSeconds * kSampleRate);
  AudioClip head;
  head.sample_rate = clip.sample_rate;
  head.samples.assign(clip.samples.begin(),
                      clip.samples.begin() +
                          static_cast<std::ptrdiff_t>(std::min(limit, clip.samples.size())));
  const ComplexSpectrogram spec = stft(head, kFftSize, kHop);

  std::vector<float> power(spec.values.size());
  for (std::size_t i = 0; i < power.size(); ++i) power[i] = std::norm(spec.values[i]);

  const MelFilterbank& fb = default_filterbank();
  LogMelSpectrogram out;
  out.frames = spec.frames;
  out.values.assign(kMelBins * spec.frames, 0.0f);
  simd::active().gemm(kMelBins, spec.frames, spec.bins, fb.weights.data(), fb.n_bins,
                      power.data(), spec.frames, out.values.data(), spec.frames, false);
  for (float& v : out.values) {
    v = static_cast<float>(std::log(static_cast<double>(std::max(v, 0.0f)) + kLogFloor));
  }
  return out;
}

std::size_t segment_frames(double context_duration) {
  if (!(context_duration > 0.0) || context_duration > kMaxSeconds) {
    throw ContractError("segment_frames: context duration must be in (0, 30] seconds");
  }
  const double samples = std::round(context_duration * kSampleRate * 1e6) / 1e6;
  if (samples < static_cast<double>(kFftSize)) {
    throw ContractError("segment_frames: context shorter than one analysis frame");
  }
  return static_cast<std::size_t>(std::floor((samples - kFftSize) / kHop)) + 1;
}

LogMelSegment segment_at(const LogMelSpectrogram& spec, std::size_t frames, std::size_t offset,
                         double context_duration) {
  if (offset + frames > spec.frames) {
    throw InsufficientAudioError("segment of " + std::to_string(frames) + " frames at offset " +
                                 std::to_string(offset) + " exceeds " +
                                 std::to_string(spec.frames) + " frames");
  }
  LogMelSegment seg;
  seg.bins = spec.bins;
  seg.frames = frames;
  seg.context_duration = context_duration;
  seg.source_offset = offset;
  seg.values.resize(spec.bins * frames);
  for (std::size_t b = 0; b < spec.bins; ++b) {
    std::copy_n(spec.values.begin() + static_cast<std::ptrdiff_t>(b * spec.frames + offset),
                frames, seg.values.begin() + static_cast<std::ptrdiff_t>(b * frames));
  }
  return seg;
}

namespace {

std::size_t usable_frames(const LogMelSpectrogram& spec, std::size_t need) {
  const std::size_t usable = std::min(spec.frames, segment_frames(kMaxSeconds));
  if (usable < need) {
    throw InsufficientAudioError("spectrogram has " + std::to_string(spec.frames) +
                                 " frames, segment needs " + std::to_string(need));
  }
  return usable;
}

}  // namespace

LogMelSegment sample_segment(const LogMelSpectrogram& spec, double context_duration,
                             std::uint64_t seed) {
  const std::size_t f = segment_frames(context_duration);
  const std::size_t usable = usable_frames(spec, f);
  Rng rng(seed);
  const std::size_t offset = rng.below(usable - f + 1);
  return segment_at(spec, f, offset, context_duration);
}

LogMelSegment center_segment(const LogMelSpectrogram& spec, double context_duration) {
  const std::size_t f = segment_frames(context_duration);
  const std::size_t usable = usable_frames(spec, f);
  return segment_at(spec, f, (usable - f) / 2, context_duration);
}

std::string encode_log_mel(const LogMelSpectrogram& spec) {
  io::ByteWriter w;
  w.bytes("LMEL");
  w.u32(static_cast<std::uint32_t>(spec.bins));
  w.u32(static_cast<std::uint32_t>(spec.frames));
  w.u32(spec.sample_rate);
  w.u32(spec.hop);
  w.f32s(spec.values.data(), spec.values.size());
  return w.buffer();
}

LogMelSpectrogram decode_log_mel(std::string_view bytes) {
  io::ByteReader r(bytes, "log-mel cache");
  if (r.bytes(4) != "LMEL") throw FormatError("log-mel cache: bad magic");
  LogMelSpectrogram spec;
  spec.bins = r.u32();
  spec.frames = r.u32();
  spec.sample_rate = r.u32();
  spec.hop = r.u32();
  if (spec.bins != kMelBins) {
    throw FormatError("log-mel cache: expected 128 bins, found " + std::to_string(spec.bins));
  }
  if (spec.frames == 0 || spec.sample_rate == 0 || spec.hop == 0) {
    throw FormatError("log-mel cache: zero frames, rate or hop");
  }
  if (r.remaining() != spec.bins * spec.frames * 4) {
    throw FormatError("log-mel cache: payload size does not match header");
  }
  spec.values.resize(spec.bins * spec.frames);
  r.f32s(spec.values.data(), spec.values.size());
  for (float v : spec.values) {
    if (!std::isfinite(v)) throw FormatError("log-mel cache: non-finite value");
  }
  return spec;
}

void save_log_mel(const std::filesystem::path& path, const LogMelSpectrogram& spec) {
  io::write_file_atomic(path, encode_log_mel(spec));
}

LogMelSpectrogram load_log_mel(const std::filesystem::path& path) {
  return decode_log_mel(io::read_file(path));
}

}  // namespace embrec::audio
