#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "embrec/audio/spectrogram.hpp"
#include "embrec/audio/wav.hpp"
#include "embrec/binary_io.hpp"
#include "embrec/errors.hpp"
#include "embrec/rng.hpp"

using namespace embrec;
using namespace embrec::audio;

namespace {

AudioClip sine(double hz, double seconds, std::uint32_t rate, double amp = 0.5) {
  AudioClip c;
  c.sample_rate = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  for (std::size_t i = 0; i < n; ++i) {
    c.samples.push_back(static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * i / rate)));
  }
  return c;
}

AudioClip noise(double seconds, std::uint64_t seed) {
  Rng rng(seed);
  AudioClip c;
  const auto n = static_cast<std::size_t>(seconds * kSampleRate);
  for (std::size_t i = 0; i < n; ++i) c.samples.push_back(static_cast<float>(rng.uniform(-0.5, 0.5)));
  return c;
}

// Hand-built WAV with arbitrary format fields.
std::string wav_bytes(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                      std::uint16_t bits, const std::string& payload) {
  io::ByteWriter w;
  w.bytes("RIFF");
  w.u32(static_cast<std::uint32_t>(36 + payload.size()));
  w.bytes("WAVE");
  w.bytes("fmt ");
  w.u32(16);
  w.u16(format);
  w.u16(channels);
  w.u32(rate);
  w.u32(rate * channels * bits / 8);
  w.u16(static_cast<std::uint16_t>(channels * bits / 8));
  w.u16(bits);
  w.bytes("data");
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.bytes(payload);
  return w.buffer();
}

// Direct O(N^2) DFT magnitude of one Hann-windowed frame, in double.
std::vector<double> dft_magnitude(const std::vector<float>& x, std::size_t start, std::size_t n) {
  std::vector<double> mag(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * t / n);
      const double v = x[start + t] * w;
      const double ang = -2.0 * std::numbers::pi * double(k) * double(t) / double(n);
      re += v * std::cos(ang);
      im += v * std::sin(ang);
    }
    mag[k] = std::hypot(re, im);
  }
  return mag;
}

// Integer framing oracle: floor((n - 2048) / 512) + 1.
std::size_t frames_oracle(std::size_t n) { return (n - 2048) / 512 + 1; }

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST(DecodePcm, SilenceAtNativeRate) {
  const std::string payload(22050 * 2, '\0');
  AudioClip c = decode_pcm(wav_bytes(1, 1, 22050, 16, payload));
  EXPECT_EQ(c.sample_rate, 22050u);
  ASSERT_EQ(c.samples.size(), 22050u);
  for (float v : c.samples) EXPECT_EQ(v, 0.0f);
}

TEST(DecodePcm, StereoOppositeChannelsCancel) {
  io::ByteWriter p;
  for (int i = 0; i < 1000; ++i) {
    p.f32(0.5f);
    p.f32(-0.5f);
  }
  AudioClip c = decode_pcm(wav_bytes(3, 2, 22050, 32, p.buffer()));
  ASSERT_EQ(c.samples.size(), 1000u);
  for (float v : c.samples) EXPECT_EQ(v, 0.0f);
}

TEST(DecodePcm, ResampledSineKeepsItsPitch) {
  const AudioClip src = sine(440.0, 1.0, 44100);
  AudioClip c = decode_pcm(encode_wav_pcm16(src));
  EXPECT_EQ(c.sample_rate, 22050u);
  EXPECT_EQ(c.samples.size(), 22050u);
  const double bin_hz = 22050.0 / 2048.0;
  const std::size_t oracle_peak = argmax(dft_magnitude(c.samples, 4096, 2048));
  EXPECT_NEAR(oracle_peak * bin_hz, 440.0, bin_hz);

  const ComplexSpectrogram s = stft(c);
  for (std::size_t f = 0; f < s.frames; ++f) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < s.bins; ++b) {
      if (std::abs(s.at(b, f)) > std::abs(s.at(best, f))) best = b;
    }
    EXPECT_NEAR(best * bin_hz, 440.0, bin_hz) << "frame " << f;
  }
}

TEST(DecodePcm, WavRoundTripThroughFile) {
  const AudioClip src = sine(300.0, 0.25, 22050);
  const auto path = std::filesystem::temp_directory_path() / "embrec_audio_test.wav";
  write_wav(path, src);
  AudioClip c = read_wav(path);
  ASSERT_EQ(c.samples.size(), src.samples.size());
  for (std::size_t i = 0; i < c.samples.size(); ++i) EXPECT_NEAR(c.samples[i], src.samples[i], 1e-4);
  std::filesystem::remove(path);
}

TEST(DecodePcm, MalformedAndUnsupportedInputs) {
  EXPECT_THROW(decode_pcm("RIFF"), ParseError);
  EXPECT_THROW(decode_pcm(std::string(64, 'x')), ParseError);
  std::string good = wav_bytes(1, 1, 22050, 16, std::string(100, '\0'));
  std::string no_data = good.substr(0, 36);
  EXPECT_THROW(decode_pcm(no_data), ParseError);
  EXPECT_THROW(decode_pcm(wav_bytes(1, 1, 22050, 24, std::string(99, '\0'))),
               UnsupportedFormatError);
  EXPECT_THROW(decode_pcm(wav_bytes(1, 3, 22050, 16, std::string(120, '\0'))),
               UnsupportedFormatError);
  EXPECT_THROW(decode_pcm(wav_bytes(6, 1, 22050, 8, std::string(10, '\0'))),
               UnsupportedFormatError);
}

TEST(Stft, FrameCountsFollowFramingFormula) {
  EXPECT_EQ(frames_oracle(661500), 1288u);
  EXPECT_EQ(stft(AudioClip{std::vector<float>(661500, 0.0f)}).frames, frames_oracle(661500));
  EXPECT_EQ(stft(AudioClip{std::vector<float>(220500, 0.0f)}).frames, 427u);
  for (std::size_t n : {2048u, 2049u, 2559u, 2560u, 5000u}) {
    for (std::size_t hop : {256u, 512u, 700u}) {
      const ComplexSpectrogram s = stft(AudioClip{std::vector<float>(n, 0.1f)}, 2048, hop);
      EXPECT_EQ(s.frames, (n - 2048) / hop + 1);
      EXPECT_EQ(s.bins, 1025u);
    }
  }
}

TEST(Stft, ZeroInputGivesZeroMagnitudes) {
  const ComplexSpectrogram s = stft(AudioClip{std::vector<float>(5000, 0.0f)});
  for (auto v : s.values) EXPECT_EQ(std::abs(v), 0.0f);
}

TEST(Stft, ShortClipIsInsufficient) {
  EXPECT_THROW(stft(AudioClip{std::vector<float>(2047, 0.0f)}), InsufficientAudioError);
}

TEST(Stft, MatchesDirectDft) {
  const AudioClip c = noise(0.2, 3);
  const ComplexSpectrogram s = stft(c, 256, 100);
  for (std::size_t f = 0; f < s.frames; f += 7) {
    const auto mag = dft_magnitude(c.samples, f * 100, 256);
    for (std::size_t b = 0; b < s.bins; ++b) {
      EXPECT_NEAR(std::abs(s.at(b, f)), mag[b], 1e-4 * (1.0 + mag[b]));
    }
  }
}

TEST(MelFilterbank, RowsAreContiguousNonNegativeTriangles) {
  const MelFilterbank fb = mel_filterbank(22050, 2048, 128);
  ASSERT_EQ(fb.n_mels, 128u);
  ASSERT_EQ(fb.n_bins, 1025u);
  for (std::size_t m = 0; m < fb.n_mels; ++m) {
    std::size_t runs = 0;
    bool inside = false;
    float peak = 0.0f;
    for (std::size_t b = 0; b < fb.n_bins; ++b) {
      const float w = fb.at(m, b);
      EXPECT_GE(w, 0.0f);
      EXPECT_LE(w, 1.0f);
      peak = std::max(peak, w);
      if (w > 0.0f && !inside) ++runs;
      inside = w > 0.0f;
    }
    EXPECT_EQ(runs, 1u) << "filter " << m;
    EXPECT_GT(peak, 0.0f);
  }
  for (std::size_t m = 1; m < fb.n_mels; ++m) EXPECT_GT(fb.centers_hz[m], fb.centers_hz[m - 1]);
}

TEST(MelFilterbank, CoversEveryBinBetweenOuterCenters) {
  const MelFilterbank fb = mel_filterbank(22050, 2048, 128);
  // Recompute the mel grid independently of the implementation.
  const double top = 2595.0 * std::log10(1.0 + 11025.0 / 700.0);
  auto center = [&](std::size_t m) {
    return 700.0 * (std::pow(10.0, top * double(m + 1) / 129.0 / 2595.0) - 1.0);
  };
  EXPECT_NEAR(fb.centers_hz.front(), center(0), 1e-9);
  EXPECT_NEAR(fb.centers_hz.back(), center(127), 1e-6);
  const double bin_hz = 22050.0 / 2048.0;
  std::size_t covered = 0;
  for (std::size_t b = 0; b < fb.n_bins; ++b) {
    const double f = b * bin_hz;
    if (f < center(0) || f > center(127)) continue;
    double total = 0.0;
    for (std::size_t m = 0; m < fb.n_mels; ++m) total += fb.at(m, b);
    EXPECT_GT(total, 0.0) << "bin " << b;
    ++covered;
  }
  EXPECT_GT(covered, 900u);
}

TEST(MelFilterbank, RejectsTooManyBands) {
  EXPECT_THROW(mel_filterbank(22050, 256, 128), ContractError);
}

TEST(LogMel, SilenceSitsAtTheLogFloor) {
  const LogMelSpectrogram s = log_mel(AudioClip{std::vector<float>(22050 * 3, 0.0f)});
  EXPECT_EQ(s.bins, 128u);
  EXPECT_EQ(s.frames, 126u);
  for (float v : s.values) EXPECT_NEAR(v, std::log(1e-6), 1e-5);
  EXPECT_NEAR(std::log(1e-6), -13.8155, 1e-4);
}

TEST(LogMel, NoiseFramesAreLouderThanSilence) {
  const LogMelSpectrogram n = log_mel(noise(2.0, 9));
  const LogMelSpectrogram z = log_mel(AudioClip{std::vector<float>(44100, 0.0f)});
  ASSERT_EQ(n.frames, z.frames);
  for (std::size_t f = 0; f < n.frames; ++f) {
    double a = 0.0, b = 0.0;
    for (std::size_t m = 0; m < 128; ++m) {
      a += n.at(m, f);
      b += z.at(m, f);
    }
    EXPECT_GT(a, b);
  }
}

TEST(LogMel, SinePeaksInTheNearestMelBand) {
  const LogMelSpectrogram s = log_mel(sine(440.0, 1.0, 22050));
  const MelFilterbank fb = mel_filterbank();
  std::size_t nearest = 0;
  for (std::size_t m = 1; m < 128; ++m) {
    if (std::abs(fb.centers_hz[m] - 440.0) < std::abs(fb.centers_hz[nearest] - 440.0)) nearest = m;
  }
  for (std::size_t f = 0; f < s.frames; ++f) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < 128; ++m) {
      if (s.at(m, f) > s.at(best, f)) best = m;
    }
    EXPECT_EQ(best, nearest) << "frame " << f;
  }
}

TEST(LogMel, AudioPastThirtySecondsIsIgnored) {
  AudioClip a = noise(30.0, 4);
  AudioClip b = a;
  Rng rng(8);
  for (int i = 0; i < 22050 * 3; ++i) b.samples.push_back(static_cast<float>(rng.uniform(-1, 1)));
  const LogMelSpectrogram sa = log_mel(a), sb = log_mel(b);
  EXPECT_EQ(sa.frames, frames_oracle(661500));
  EXPECT_EQ(sa.values, sb.values);
}

TEST(LogMel, LouderClipNeverLowersEnergy) {
  AudioClip a = noise(1.0, 5);
  AudioClip b = a;
  for (float& v : b.samples) v *= 1.5f;
  const LogMelSpectrogram sa = log_mel(a), sb = log_mel(b);
  for (std::size_t i = 0; i < sa.values.size(); ++i) EXPECT_GE(sb.values[i], sa.values[i]);
}

TEST(LogMel, RequiresNativeRate) {
  AudioClip c{std::vector<float>(5000, 0.0f), 44100};
  EXPECT_THROW(log_mel(c), ContractError);
}

TEST(SegmentFrames, ClosedFormValues) {
  EXPECT_EQ(segment_frames(3.0), 126u);
  EXPECT_EQ(segment_frames(10.0), 427u);
  EXPECT_EQ(segment_frames(30.0), frames_oracle(661500));
  for (double d : {0.5, 1.0, 4.5, 7.0, 29.9}) {
    const double samples = d * 22050;
    EXPECT_EQ(segment_frames(d), static_cast<std::size_t>(std::floor((samples - 2048) / 512)) + 1);
  }
  EXPECT_THROW(segment_frames(0.0), ContractError);
  EXPECT_THROW(segment_frames(-1.0), ContractError);
  EXPECT_THROW(segment_frames(30.5), ContractError);
}

namespace {

LogMelSpectrogram ramp_spec(std::size_t frames) {
  LogMelSpectrogram s;
  s.frames = frames;
  s.values.resize(128 * frames);
  for (std::size_t m = 0; m < 128; ++m)
    for (std::size_t f = 0; f < frames; ++f) s.values[m * frames + f] = float(m * 10000 + f);
  return s;
}

}  // namespace

TEST(SampleSegment, ExactLengthHasSingleOffset) {
  const LogMelSpectrogram s = ramp_spec(126);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    EXPECT_EQ(sample_segment(s, 3.0, seed).source_offset, 0u);
  }
}

TEST(SampleSegment, DeterministicAndSlicesTheSource) {
  const LogMelSpectrogram s = ramp_spec(1500);
  const LogMelSegment a = sample_segment(s, 3.0, 77), b = sample_segment(s, 3.0, 77);
  EXPECT_EQ(a.source_offset, b.source_offset);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.frames, 126u);
  EXPECT_LE(a.source_offset + a.frames, frames_oracle(661500));
  for (std::size_t m = 0; m < 128; m += 17)
    for (std::size_t f = 0; f < a.frames; f += 11)
      EXPECT_EQ(a.values[m * a.frames + f], float(m * 10000 + a.source_offset + f));
}

TEST(SampleSegment, TooShortIsInsufficient) {
  EXPECT_THROW(sample_segment(ramp_spec(125), 3.0, 1), InsufficientAudioError);
  EXPECT_THROW(center_segment(ramp_spec(125), 3.0), InsufficientAudioError);
}

TEST(SampleSegment, OffsetsAreUniformByChiSquare) {
  const LogMelSpectrogram s = ramp_spec(1289);
  // offsets may not reach past the 30 s window
  const std::size_t cells = frames_oracle(661500) - 427 + 1;
  std::vector<double> counts(cells, 0.0);
  const std::size_t draws = 10000;
  for (std::size_t i = 0; i < draws; ++i) {
    const LogMelSegment seg = sample_segment(s, 10.0, Rng::mix(2024, i));
    ASSERT_LT(seg.source_offset, cells);
    counts[seg.source_offset] += 1.0;
  }
  const double expected = double(draws) / cells;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // Wilson-Hilferty upper 1% point of chi-square with cells-1 degrees of freedom.
  const double k = double(cells - 1), z = 2.3263478740;
  const double critical = k * std::pow(1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k)), 3);
  EXPECT_LT(chi2, critical);
}

TEST(SampleSegment, CenterIsMiddleOfFirstThirtySeconds) {
  EXPECT_EQ(center_segment(ramp_spec(2000), 10.0).source_offset, (frames_oracle(661500) - 427u) / 2);
  EXPECT_EQ(center_segment(ramp_spec(200), 3.0).source_offset, (200u - 126u) / 2);
}

TEST(LogMelCache, RoundTripAndRejection) {
  const LogMelSpectrogram s = log_mel(noise(0.5, 6));
  const std::string bytes = encode_log_mel(s);
  EXPECT_EQ(bytes.substr(0, 4), "LMEL");
  EXPECT_EQ(bytes.size(), 20 + 128 * s.frames * 4);
  const LogMelSpectrogram back = decode_log_mel(bytes);
  EXPECT_EQ(back.frames, s.frames);
  EXPECT_EQ(back.hop, 512u);
  EXPECT_EQ(back.sample_rate, 22050u);
  EXPECT_EQ(back.values, s.values);
  EXPECT_THROW(decode_log_mel(bytes.substr(0, bytes.size() - 1)), FormatError);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_log_mel(bad), FormatError);
  bad = bytes;
  bad[4] = 64;
  EXPECT_THROW(decode_log_mel(bad), FormatError);

  const auto path = std::filesystem::temp_directory_path() / "embrec_cache_test.lmel";
  save_log_mel(path, s);
  EXPECT_EQ(load_log_mel(path).values, s.values);
  std::filesystem::remove(path);
}
