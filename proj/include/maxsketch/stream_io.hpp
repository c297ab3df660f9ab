#pragma once

// Embedding stream files.
//
//   binary: "MXS1", u32 LE n, u32 LE d, then n*d LE float32, row-major
//   csv:    one vector per line, d comma-separated decimals
//
// stream_reader consumes either format incrementally with a bounded buffer.

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "maxsketch/detail/bytes.hpp"
#include "maxsketch/error.hpp"

namespace maxsketch {

enum class stream_format { binary, csv };

inline constexpr std::array<char, 4> stream_magic = {'M', 'X', 'S', '1'};

class stream_reader {
public:
  /// Reads the header (binary) or first line (csv). `fallback_d` supplies
  /// the dimension for a zero-byte input, which is treated as an empty csv.
  explicit stream_reader(std::istream& in, std::size_t fallback_d = 0) : in_(&in) {
    char head[4] = {};
    in_->read(head, 4);
    const auto got = static_cast<std::size_t>(in_->gcount());
    if (got == 4 && std::memcmp(head, stream_magic.data(), 4) == 0) {
      format_ = stream_format::binary;
      offset_ = 4;
      std::uint8_t hdr[8];
      in_->read(reinterpret_cast<char*>(hdr), 8);
      if (in_->gcount() != 8) throw format_error("truncated stream header", offset_ + in_->gcount());
      total_ = detail::load_le<std::uint32_t>(hdr);
      d_ = detail::load_le<std::uint32_t>(hdr + 4);
      offset_ += 8;
      if (d_ == 0) throw format_error("stream header declares d = 0", 8);
      return;
    }
    format_ = stream_format::csv;
    in_->clear();
    if (got == 0) {
      if (fallback_d == 0) throw format_error("empty input and no dimension given", 0);
      d_ = fallback_d;
      total_ = 0;
      return;
    }
    pushback_.assign(head, got);
    std::string line;
    if (!next_csv_line(line)) {
      d_ = fallback_d;
      if (d_ == 0) throw format_error("input has no vectors and no dimension given", 0);
      return;
    }
    first_line_ = std::move(line);
    d_ = static_cast<std::size_t>(std::count(first_line_.begin(), first_line_.end(), ',')) + 1;
    has_first_ = true;
  }

  [[nodiscard]] stream_format format() const noexcept { return format_; }
  [[nodiscard]] std::size_t d() const noexcept { return d_; }
  /// Declared row count for binary input; unknown (max) for csv.
  [[nodiscard]] std::size_t declared_rows() const noexcept {
    return format_ == stream_format::binary ? total_ : std::numeric_limits<std::size_t>::max();
  }
  [[nodiscard]] std::size_t rows_read() const noexcept { return rows_; }
  [[nodiscard]] std::size_t byte_offset() const noexcept { return offset_; }

  /// Reads up to `max_rows` raw vectors into `out` (resized to rows * d).
  /// Returns the number of rows read; 0 at end of stream.
  std::size_t read_batch(std::vector<double>& out, std::size_t max_rows) {
    out.clear();
    if (format_ == stream_format::binary) return read_binary(out, max_rows);
    return read_csv(out, max_rows);
  }

private:
  std::size_t read_binary(std::vector<double>& out, std::size_t max_rows) {
    const std::size_t want = std::min(max_rows, total_ - rows_);
    if (want == 0) {
      if (in_->peek() != std::char_traits<char>::eof()) throw format_error("trailing bytes after stream", offset_);
      return 0;
    }
    raw_.resize(want * d_ * 4);
    in_->read(reinterpret_cast<char*>(raw_.data()), static_cast<std::streamsize>(raw_.size()));
    const auto got = static_cast<std::size_t>(in_->gcount());
    if (got != raw_.size()) {
      throw format_error("stream truncated: expected " + std::to_string(total_) + " vectors", offset_ + got);
    }
    out.resize(want * d_);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<double>(std::bit_cast<float>(detail::load_le<std::uint32_t>(raw_.data() + 4 * i)));
    }
    offset_ += got;
    rows_ += want;
    return want;
  }

  std::size_t read_csv(std::vector<double>& out, std::size_t max_rows) {
    std::size_t n = 0;
    std::string line;
    while (n < max_rows) {
      if (has_first_) {
        line = std::move(first_line_);
        has_first_ = false;
      } else if (!next_csv_line(line)) {
        break;
      }
      parse_csv_row(line, line_start_, out);
      ++n;
      ++rows_;
    }
    return n;
  }

  void parse_csv_row(const std::string& line, std::size_t line_start, std::vector<double>& out) const {
    std::size_t fields = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        throw format_error("unparseable number in csv row " + std::to_string(rows_ + 1),
                           line_start + static_cast<std::size_t>(p - line.data()));
      }
      out.push_back(v);
      ++fields;
      p = next;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p == end) break;
      if (*p != ',') {
        throw format_error("unexpected character in csv row " + std::to_string(rows_ + 1),
                           line_start + static_cast<std::size_t>(p - line.data()));
      }
      ++p;
    }
    if (fields != d_) {
      throw format_error("csv row " + std::to_string(rows_ + 1) + " has " + std::to_string(fields) +
                             " fields, expected " + std::to_string(d_),
                         line_start);
    }
  }

  // Next non-blank line; advances offset_ past it and records where it began.
  bool next_csv_line(std::string& line) {
    while (true) {
      std::string raw;
      std::size_t consumed = 0;
      if (!pushback_.empty()) {
        raw = std::move(pushback_);
        pushback_.clear();
        const auto nl = raw.find('\n');
        if (nl != std::string::npos) {
          pushback_ = raw.substr(nl + 1);
          raw.resize(nl);
          consumed = nl + 1;
        } else {
          std::string rest;
          bool newline = false;
          if (std::getline(*in_, rest)) {
            raw += rest;
            newline = !in_->eof();
          }
          consumed = raw.size() + (newline ? 1 : 0);
        }
      } else {
        if (!std::getline(*in_, raw)) return false;
        consumed = raw.size() + (in_->eof() ? 0 : 1);
      }
      line_start_ = offset_;
      offset_ += consumed;
      const auto s = strip(raw);
      if (!s.empty()) {
        line.assign(s);
        return true;
      }
    }
  }

  static std::string_view strip(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
  }

  std::istream* in_;
  stream_format format_ = stream_format::csv;
  std::size_t d_ = 0;
  std::size_t total_ = 0;
  std::size_t rows_ = 0;
  std::size_t offset_ = 0;
  std::size_t line_start_ = 0;
  bool has_first_ = false;
  std::string first_line_;
  std::string pushback_;
  std::vector<std::uint8_t> raw_;
};

/// Write n x d row-major values as an MXS1 binary stream (values stored as float32).
inline void write_binary_stream(std::ostream& out, std::span<const double> rows, std::size_t d) {
  if (d == 0 || rows.size() % d != 0) throw invalid_parameter("write_binary_stream: rows are not a multiple of d");
  const std::size_t n = rows.size() / d;
  if (n > std::numeric_limits<std::uint32_t>::max() || d > std::numeric_limits<std::uint32_t>::max()) {
    throw invalid_parameter("stream too large for the u32 header fields");
  }
  std::vector<std::uint8_t> buf;
  buf.reserve(12 + 4 * rows.size());
  for (char c : stream_magic) buf.push_back(static_cast<std::uint8_t>(c));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(n));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(d));
  for (double v : rows) detail::put_f32(buf, static_cast<float>(v));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw io_error("failed writing binary stream");
}

/// One vector per line, 17 significant digits per value.
inline void write_csv_stream(std::ostream& out, std::span<const double> rows, std::size_t d) {
  if (d == 0 || rows.size() % d != 0) throw invalid_parameter("write_csv_stream: rows are not a multiple of d");
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t i = 0; i < rows.size(); i += d) {
    line.str({});
    for (std::size_t c = 0; c < d; ++c) {
      if (c) line << ',';
      line << rows[i + c];
    }
    line << '\n';
    out << line.str();
  }
  if (!out) throw io_error("failed writing csv stream");
}

struct stream_data {
  std::size_t d = 0;
  std::vector<double> rows;
  [[nodiscard]] std::size_t n() const noexcept { return d == 0 ? 0 : rows.size() / d; }
};

[[nodiscard]] inline stream_data read_stream(std::istream& in, std::size_t fallback_d = 0) {
  stream_reader reader(in, fallback_d);
  stream_data data;
  data.d = reader.d();
  std::vector<double> batch;
  while (reader.read_batch(batch, 4096) > 0) data.rows.insert(data.rows.end(), batch.begin(), batch.end());
  return data;
}

} // namespace maxsketch
