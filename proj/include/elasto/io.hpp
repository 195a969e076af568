#pragma once

// Binary containers for frames, displacement fields and strain images, plus
// PGM/CSV emitters. All multi-byte values are little-endian. Sample planes are
// f32, stored line by line (depth is the fast axis, matching Grid2's layout).
//
//   RFE1: magic, u32 m, u32 n, f64 axial mm, f64 lateral mm, f64 center MHz,
//         f64 sampling MHz, m*n f32
//   DSP1: magic, u32 m, u32 n, u8 stage, m*n f32 axial, m*n f32 lateral
//   STR1: magic, u32 m, u32 n, u32 kernel, m*n f32

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "elasto/error.hpp"
#include "elasto/grid.hpp"

namespace elasto::io {

namespace detail {

class ByteWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void plane(const Image& img) {
    bytes_.reserve(bytes_.size() + 4 * img.size());
    for (double v : img.data()) f32(static_cast<float>(v));
  }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  std::uint64_t offset() const { return pos_; }

  void expect_magic(std::string_view m) {
    need(m.size(), "magic");
    if (std::memcmp(bytes_.data() + pos_, m.data(), m.size()) != 0)
      throw FormatError("bad magic, expected \"" + std::string(m) + "\"", pos_);
    pos_ += m.size();
  }
  std::uint8_t u8() {
    need(1, "u8");
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t{bytes_[pos_ + k]} << (8 * k);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8, "u64");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t{bytes_[pos_ + k]} << (8 * k);
    pos_ += 8;
    return v;
  }
  double finite_f64(const char* what) {
    auto at = pos_;
    double v = std::bit_cast<double>(u64());
    if (!std::isfinite(v)) throw FormatError(std::string("non-finite header field ") + what, at);
    return v;
  }
  Image plane(std::uint32_t m, std::uint32_t n) {
    std::uint64_t count = std::uint64_t{m} * n;
    need(count * 4, "sample plane");
    Image img(m, n);
    auto out = img.data();
    for (std::uint64_t k = 0; k < count; ++k) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= std::uint32_t{bytes_[pos_ + b]} << (8 * b);
      out[k] = static_cast<double>(std::bit_cast<float>(bits));
      pos_ += 4;
    }
    return img;
  }
  void expect_end() const {
    if (pos_ != bytes_.size()) throw FormatError("trailing bytes after payload", pos_);
  }

 private:
  void need(std::uint64_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("truncated ") + what, bytes_.size());
  }

  std::vector<std::uint8_t> bytes_;
  std::uint64_t pos_ = 0;
};

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t dim(std::size_t v) {
  if (v > 0xFFFFFFFFu) throw InvariantError("dimension exceeds u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_frame(const RfFrame& frame) {
  frame.validate();
  detail::ByteWriter w;
  w.magic("RFE1");
  w.u32(detail::dim(frame.rows()));
  w.u32(detail::dim(frame.lines()));
  w.f64(frame.geometry.axial_spacing_mm);
  w.f64(frame.geometry.lateral_spacing_mm);
  w.f64(frame.geometry.center_mhz);
  w.f64(frame.geometry.sampling_mhz);
  w.plane(frame.samples);
  return w.bytes();
}

inline RfFrame decode_frame(std::vector<std::uint8_t> bytes) {
  detail::ByteReader r(std::move(bytes));
  r.expect_magic("RFE1");
  auto m = r.u32();
  auto n = r.u32();
  RfFrame f;
  f.geometry.axial_spacing_mm = r.finite_f64("axial spacing");
  f.geometry.lateral_spacing_mm = r.finite_f64("lateral spacing");
  f.geometry.center_mhz = r.finite_f64("center frequency");
  f.geometry.sampling_mhz = r.finite_f64("sampling frequency");
  f.samples = r.plane(m, n);
  r.expect_end();
  f.validate();
  return f;
}

inline std::vector<std::uint8_t> encode_field(const DisplacementField& field) {
  field.validate();
  detail::ByteWriter w;
  w.magic("DSP1");
  w.u32(detail::dim(field.rows()));
  w.u32(detail::dim(field.cols()));
  w.u8(static_cast<std::uint8_t>(field.stage));
  w.plane(field.axial);
  w.plane(field.lateral);
  return w.bytes();
}

inline DisplacementField decode_field(std::vector<std::uint8_t> bytes) {
  detail::ByteReader r(std::move(bytes));
  r.expect_magic("DSP1");
  auto m = r.u32();
  auto n = r.u32();
  auto at = r.offset();
  auto stage = r.u8();
  if (stage > 1) throw FormatError("unknown displacement stage " + std::to_string(stage), at);
  DisplacementField f;
  f.stage = static_cast<DisplacementStage>(stage);
  f.axial = r.plane(m, n);
  f.lateral = r.plane(m, n);
  r.expect_end();
  f.validate();
  return f;
}

inline std::vector<std::uint8_t> encode_strain(const StrainImage& strain) {
  strain.validate();
  detail::ByteWriter w;
  w.magic("STR1");
  w.u32(detail::dim(strain.rows()));
  w.u32(detail::dim(strain.cols()));
  w.u32(static_cast<std::uint32_t>(strain.kernel));
  w.plane(strain.values);
  return w.bytes();
}

inline StrainImage decode_strain(std::vector<std::uint8_t> bytes) {
  detail::ByteReader r(std::move(bytes));
  r.expect_magic("STR1");
  auto m = r.u32();
  auto n = r.u32();
  StrainImage s;
  s.kernel = static_cast<int>(r.u32());
  s.values = r.plane(m, n);
  r.expect_end();
  s.validate();
  return s;
}

inline void write_frame(const RfFrame& frame, const std::filesystem::path& path) {
  detail::write_bytes(path, encode_frame(frame));
}
inline RfFrame read_frame(const std::filesystem::path& path) { return decode_frame(detail::read_bytes(path)); }

inline void write_field(const DisplacementField& field, const std::filesystem::path& path) {
  detail::write_bytes(path, encode_field(field));
}
inline DisplacementField read_field(const std::filesystem::path& path) {
  return decode_field(detail::read_bytes(path));
}

inline void write_strain(const StrainImage& strain, const std::filesystem::path& path) {
  detail::write_bytes(path, encode_strain(strain));
}
inline StrainImage read_strain(const std::filesystem::path& path) {
  return decode_strain(detail::read_bytes(path));
}

/// Maps x to 8 bits over [lo, hi], rounding half up and clamping.
inline std::uint8_t pgm_level(double x, double lo, double hi) {
  double v = std::floor(255.0 * (x - lo) / (hi - lo) + 0.5);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

/// Binary P5 PGM; image rows are depth, width is the number of lines.
inline void write_pgm(const Image& image, const std::filesystem::path& path, double lo, double hi) {
  if (!(lo < hi)) throw DomainError("write_pgm requires lo < hi");
  std::string header = "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + image.size());
  for (std::size_t i = 0; i < image.rows(); ++i)
    for (std::size_t j = 0; j < image.cols(); ++j) bytes.push_back(pgm_level(image(i, j), lo, hi));
  detail::write_bytes(path, bytes);
}

struct Column {
  std::string name;
  std::vector<double> values;
};

/// 17 significant digits: round-trips any double.
inline std::string format_real(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

inline std::string csv_text(const std::vector<Column>& columns) {
  std::size_t rows = columns.empty() ? 0 : columns.front().values.size();
  for (const auto& c : columns)
    if (c.values.size() != rows) throw DomainError("ragged CSV columns: '" + c.name + "'");
  std::string out;
  for (std::size_t k = 0; k < columns.size(); ++k) out += (k ? "," : "") + columns[k].name;
  out += '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < columns.size(); ++k) out += (k ? "," : "") + format_real(columns[k].values[r]);
    out += '\n';
  }
  return out;
}

inline void write_csv(const std::vector<Column>& columns, const std::filesystem::path& path) {
  auto text = csv_text(columns);
  detail::write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace elasto::io
