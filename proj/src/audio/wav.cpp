#include "embrec/audio/wav.hpp"

#include <algorithm>
#include <cmath>

#include "embrec/binary_io.hpp"
#include "embrec/errors.hpp"

namespace embrec::audio {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct FormatChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

}  // namespace

std::vector<float> resample_linear(const std::vector<float>& samples, std::uint32_t from_rate,
                                   std::uint32_t to_rate) {
  if (from_rate == to_rate || samples.empty()) return samples;
  const double ratio = static_cast<double>(from_rate) / static_cast<double>(to_rate);
  const auto out_len = static_cast<std::size_t>(
      std::floor(static_cast<double>(samples.size()) * to_rate / from_rate));
  std::vector<float> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const auto left = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(left);
    const float a = samples[std::min(left, samples.size() - 1)];
    const float b = samples[std::min(left + 1, samples.size() - 1)];
    out[i] = static_cast<float>(a + (b - a) * frac);
  }
  return out;
}

AudioClip decode_pcm(std::string_view bytes, std::uint32_t target_rate) {
  io::ByteReader r(bytes, "wav");
  std::string_view riff, wave;
  try {
    riff = r.bytes(4);
    r.u32();
    wave = r.bytes(4);
  } catch (const FormatError&) {
    throw ParseError("wav: file too short for a RIFF header");
  }
  if (riff != "RIFF" || wave != "WAVE") throw ParseError("wav: missing RIFF/WAVE signature");

  FormatChunk fmt;
  bool have_fmt = false;
  std::string_view data;
  bool have_data = false;
  try {
    while (!r.done() && !have_data) {
      const std::string_view id = r.bytes(4);
      const std::uint32_t size = r.u32();
      if (id == "fmt ") {
        io::ByteReader f(r.bytes(size), "wav fmt");
        fmt.format = f.u16();
        fmt.channels = f.u16();
        fmt.sample_rate = f.u32();
        f.u32();  // byte rate
        fmt.block_align = f.u16();
        fmt.bits = f.u16();
        if (fmt.format == kFormatExtensible) {
          f.u16();  // cbSize
          f.u16();  // valid bits
          f.u32();  // channel mask
          fmt.format = f.u16();  // first two bytes of the subformat GUID
        }
        have_fmt = true;
      } else if (id == "data") {
        data = r.bytes(std::min<std::size_t>(size, r.remaining()));
        have_data = true;
      } else {
        r.bytes(size);
      }
      if (size % 2 == 1 && !r.done() && !have_data) r.bytes(1);
    }
  } catch (const FormatError& e) {
    throw ParseError(std::string("wav: malformed chunk structure (") + e.what() + ")");
  }
  if (!have_fmt) throw ParseError("wav: no fmt chunk");
  if (!have_data) throw ParseError("wav: no data chunk");
  if (fmt.channels != 1 && fmt.channels != 2) {
    throw UnsupportedFormatError("wav: " + std::to_string(fmt.channels) + " channels");
  }
  if (fmt.sample_rate == 0) throw ParseError("wav: zero sample rate");
  const bool pcm16 = fmt.format == kFormatPcm && fmt.bits == 16;
  const bool float32 = fmt.format == kFormatFloat && fmt.bits == 32;
  if (!pcm16 && !float32) {
    throw UnsupportedFormatError("wav: format " + std::to_string(fmt.format) + " with " +
                                 std::to_string(fmt.bits) + " bits");
  }
  const std::size_t width = fmt.bits / 8;
  const std::size_t frame_bytes = width * fmt.channels;
  const std::size_t frames = data.size() / frame_bytes;

  io::ByteReader d(data, "wav data");
  AudioClip clip;
  clip.sample_rate = fmt.sample_rate;
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    float acc = 0.0f;
    for (std::uint16_t c = 0; c < fmt.channels; ++c) {
      float v;
      if (pcm16) {
        v = static_cast<float>(static_cast<std::int16_t>(d.u16())) / 32768.0f;
      } else {
        v = std::clamp(d.f32(), -1.0f, 1.0f);
      }
      acc += v;
    }
    clip.samples[i] = acc / static_cast<float>(fmt.channels);
  }
  if (clip.sample_rate != target_rate) {
    clip.samples = resample_linear(clip.samples, clip.sample_rate, target_rate);
    clip.sample_rate = target_rate;
  }
  return clip;
}

AudioClip read_wav(const std::filesystem::path& path, std::uint32_t target_rate) {
  return decode_pcm(io::read_file(path), target_rate);
}

std::string encode_wav_pcm16(const AudioClip& clip) {
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  io::ByteWriter w;
  w.bytes("RIFF");
  w.u32(36 + data_bytes);
  w.bytes("WAVE");
  w.bytes("fmt ");
  w.u32(16);
  w.u16(kFormatPcm);
  w.u16(1);
  w.u32(clip.sample_rate);
  w.u32(clip.sample_rate * 2);
  w.u16(2);
  w.u16(16);
  w.bytes("data");
  w.u32(data_bytes);
  for (float s : clip.samples) {
    const float c = std::clamp(s, -1.0f, 1.0f);
    const auto q = static_cast<std::int16_t>(std::lround(c * 32767.0f));
    w.u16(static_cast<std::uint16_t>(q));
  }
  return w.buffer();
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  io::write_file_atomic(path, encode_wav_pcm16(clip));
}

}  // namespace embrec::audio
