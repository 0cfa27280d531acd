#pragma once

// Minimal RIFF/WAVE reader and writer for the encodings the measurement
// pipeline uses: 16- and 24-bit integer PCM and 32-bit float, any channel
// count, interleaved. Integer codes map to doubles as code / 2^(bits-1), so
// the most negative code reads back exactly -1.0 and values produced by a
// uniform mid-tread quantizer round-trip bit-exactly.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmanull {

enum class WavEncoding { pcm16, pcm24, float32 };

struct WavData {
  double sample_rate_hz = 44100.0;
  WavEncoding encoding = WavEncoding::pcm16;
  std::vector<std::vector<double>> channels;  // equal-length, deinterleaved
};

namespace detail {

inline void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xff));
  b.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

inline void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::int32_t clamp_code(double x, double scale, std::int32_t lo,
                               std::int32_t hi) {
  const double v = std::round(x * scale);
  if (v <= static_cast<double>(lo)) return lo;
  if (v >= static_cast<double>(hi)) return hi;
  return static_cast<std::int32_t>(v);
}

}  // namespace detail

inline void write_wav(const std::string& path, const WavData& d) {
  if (d.channels.empty()) throw std::invalid_argument("no channels to write");
  const std::size_t frames = d.channels.front().size();
  for (const auto& c : d.channels)
    if (c.size() != frames)
      throw std::invalid_argument("channel lengths differ");
  if (!(d.sample_rate_hz > 0.0) ||
      d.sample_rate_hz != std::floor(d.sample_rate_hz))
    throw std::invalid_argument("sample rate must be a positive integer");

  const std::uint16_t nch = static_cast<std::uint16_t>(d.channels.size());
  std::uint16_t bits = 0, fmt = 1;
  switch (d.encoding) {
    case WavEncoding::pcm16: bits = 16; fmt = 1; break;
    case WavEncoding::pcm24: bits = 24; fmt = 1; break;
    case WavEncoding::float32: bits = 32; fmt = 3; break;
  }
  const std::uint16_t block = static_cast<std::uint16_t>(nch * bits / 8);
  const std::uint32_t rate = static_cast<std::uint32_t>(d.sample_rate_hz);
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(frames * block);

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  const auto put_tag = [&out](const char* t) {
    out.insert(out.end(), t, t + 4);
  };
  put_tag("RIFF");
  detail::put_u32(out, 36 + data_size);
  put_tag("WAVE");
  put_tag("fmt ");
  detail::put_u32(out, 16);
  detail::put_u16(out, fmt);
  detail::put_u16(out, nch);
  detail::put_u32(out, rate);
  detail::put_u32(out, rate * block);
  detail::put_u16(out, block);
  detail::put_u16(out, bits);
  put_tag("data");
  detail::put_u32(out, data_size);

  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < nch; ++c) {
      const double x = d.channels[c][n];
      switch (d.encoding) {
        case WavEncoding::pcm16: {
          const std::int32_t v = detail::clamp_code(x, 32768.0, -32768, 32767);
          out.push_back(static_cast<unsigned char>(v & 0xff));
          out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
          break;
        }
        case WavEncoding::pcm24: {
          const std::int32_t v =
              detail::clamp_code(x, 8388608.0, -8388608, 8388607);
          out.push_back(static_cast<unsigned char>(v & 0xff));
          out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
          out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
          break;
        }
        case WavEncoding::float32: {
          const float f = static_cast<float>(x);
          std::uint32_t u = 0;
          std::memcpy(&u, &f, 4);
          detail::put_u32(out, u);
          break;
        }
      }
    }
  }

  std::ofstream fs(path, std::ios::binary | std::ios::trunc);
  if (!fs) throw std::runtime_error("cannot open for writing: " + path);
  fs.write(reinterpret_cast<const char*>(out.data()),
           static_cast<std::streamsize>(out.size()));
  if (!fs) throw std::runtime_error("write failed: " + path);
}

inline WavData read_wav(const std::string& path) {
  std::ifstream fs(path, std::ios::binary);
  if (!fs) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(fs)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("not a RIFF/WAVE file: " + path);

  std::uint16_t fmt = 0, nch = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const unsigned char* hdr = buf.data() + pos;
    const std::uint32_t size = detail::get_u32(hdr + 4);
    const unsigned char* body = hdr + 8;
    if (pos + 8 + size > buf.size())
      throw std::runtime_error("truncated chunk in: " + path);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16) throw std::runtime_error("short fmt chunk in: " + path);
      fmt = detail::get_u16(body);
      nch = detail::get_u16(body + 2);
      rate = detail::get_u32(body + 4);
      bits = detail::get_u16(body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = body;
      data_size = size;
    }
    pos += 8 + size + (size % 2);  // chunks are word-aligned
  }
  if (!have_fmt || data == nullptr)
    throw std::runtime_error("missing fmt or data chunk in: " + path);
  if (nch == 0) throw std::runtime_error("zero channels in: " + path);

  WavData d;
  d.sample_rate_hz = static_cast<double>(rate);
  std::size_t bytes_per = 0;
  if (fmt == 1 && bits == 16) {
    d.encoding = WavEncoding::pcm16;
    bytes_per = 2;
  } else if (fmt == 1 && bits == 24) {
    d.encoding = WavEncoding::pcm24;
    bytes_per = 3;
  } else if (fmt == 3 && bits == 32) {
    d.encoding = WavEncoding::float32;
    bytes_per = 4;
  } else {
    throw std::runtime_error("unsupported encoding in: " + path);
  }
  const std::size_t block = bytes_per * nch;
  const std::size_t frames = data_size / block;
  d.channels.assign(nch, std::vector<double>(frames));
  const unsigned char* p = data;
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < nch; ++c) {
      switch (d.encoding) {
        case WavEncoding::pcm16: {
          const std::int16_t v =
              static_cast<std::int16_t>(detail::get_u16(p));
          d.channels[c][n] = static_cast<double>(v) / 32768.0;
          break;
        }
        case WavEncoding::pcm24: {
          std::int32_t v = static_cast<std::int32_t>(
              p[0] | (p[1] << 8) | (p[2] << 16));
          if (v & 0x800000) v -= 0x1000000;
          d.channels[c][n] = static_cast<double>(v) / 8388608.0;
          break;
        }
        case WavEncoding::float32: {
          std::uint32_t u = detail::get_u32(p);
          float f = 0.0f;
          std::memcpy(&f, &u, 4);
          d.channels[c][n] = static_cast<double>(f);
          break;
        }
      }
      p += bytes_per;
    }
  }
  return d;
}

}  // namespace dmanull
