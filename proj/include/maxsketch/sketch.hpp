#pragma once

// MaxSketch state: the m running maxima M_j = max_i <w_j, x_i> over a
// single pass of unit vectors, plus the derived statistic
// S = (1/m) * sum_j M_j.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "maxsketch/detail/bytes.hpp"
#include "maxsketch/error.hpp"
#include "maxsketch/projections.hpp"

namespace maxsketch {

/// Inputs whose norm is within this distance of 1 are renormalized; anything
/// farther is rejected.
inline constexpr double unit_norm_tolerance = 1e-3;

/// Copy `in` into `out` scaled to unit norm. Rejects non-finite entries and
/// norms outside 1 +- unit_norm_tolerance.
template <class T>
  requires std::is_floating_point_v<T>
inline void normalize_into(std::span<const T> in, std::span<double> out) {
  if (in.empty()) throw invalid_input("vector has dimension 0");
  if (out.size() != in.size()) throw dimension_error("normalize_into: output dimension mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = static_cast<double>(in[i]);
    if (!std::isfinite(v)) throw invalid_input("vector has a non-finite entry at coordinate " + std::to_string(i));
    out[i] = v;
    sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (!(std::abs(norm - 1.0) <= unit_norm_tolerance)) {
    throw invalid_input("vector norm " + std::to_string(norm) + " is not within " +
                        std::to_string(unit_norm_tolerance) + " of 1");
  }
  for (double& v : out) v /= norm;
}

/// A point on the unit sphere S^{d-1}.
class unit_vector {
public:
  template <class T>
    requires std::is_floating_point_v<T>
  [[nodiscard]] static unit_vector from(std::span<const T> coords) {
    unit_vector u;
    u.coords_.resize(coords.size());
    normalize_into(coords, std::span<double>(u.coords_));
    return u;
  }

  [[nodiscard]] static unit_vector from(const std::vector<double>& coords) {
    return from(std::span<const double>(coords));
  }

  [[nodiscard]] std::span<const double> coords() const noexcept { return coords_; }
  [[nodiscard]] std::size_t d() const noexcept { return coords_.size(); }

private:
  unit_vector() = default;
  std::vector<double> coords_;
};

/// Running maxima bound to one projection set.
class sketch_state {
public:
  [[nodiscard]] static sketch_state empty_for(const projection_set& proj) {
    return sketch_state(proj.seed(), proj.d(), proj.m());
  }

  /// Empty state for the projection set identified by (seed, d, m).
  sketch_state(std::uint64_t seed, std::size_t d, std::size_t m)
      : maxima_(m, -std::numeric_limits<double>::infinity()), seed_(seed), d_(d) {
    if (d == 0 || m == 0) throw invalid_parameter("sketch needs d >= 1 and m >= 1");
  }

  [[nodiscard]] std::span<const double> maxima() const noexcept { return maxima_; }
  [[nodiscard]] std::uint64_t items_seen() const noexcept { return items_seen_; }
  [[nodiscard]] bool empty() const noexcept { return items_seen_ == 0; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::size_t d() const noexcept { return d_; }
  [[nodiscard]] std::size_t m() const noexcept { return maxima_.size(); }
  [[nodiscard]] std::uint64_t fingerprint() const noexcept { return projection_fingerprint(seed_, d_, m()); }

  /// Bytes of sketch state: the m maxima plus the fixed header fields.
  /// Independent of the number of items seen.
  [[nodiscard]] std::size_t state_bytes() const noexcept { return maxima_.size() * sizeof(double) + fixed_overhead; }
  static constexpr std::size_t fixed_overhead = sizeof(std::uint64_t) * 2 + sizeof(std::size_t);

  void require_bound_to(const projection_set& proj) const {
    if (proj.fingerprint() != fingerprint()) {
      throw binding_error("sketch is bound to a different projection set (seed/d/m mismatch)");
    }
  }

  friend bool operator==(const sketch_state& a, const sketch_state& b) noexcept {
    if (a.seed_ != b.seed_ || a.d_ != b.d_ || a.items_seen_ != b.items_seen_ || a.m() != b.m()) return false;
    // Bitwise so that -inf sentinels and signed zeros compare exactly.
    for (std::size_t j = 0; j < a.m(); ++j) {
      if (std::bit_cast<std::uint64_t>(a.maxima_[j]) != std::bit_cast<std::uint64_t>(b.maxima_[j])) return false;
    }
    return true;
  }

private:
  friend void update(sketch_state&, const unit_vector&, const projection_set&);
  friend void update_batch(sketch_state&, std::span<const double>, std::size_t, const projection_set&);
  friend sketch_state merge(const sketch_state&, const sketch_state&);
  friend sketch_state deserialize(std::span<const std::uint8_t>);

  std::vector<double> maxima_;
  std::uint64_t items_seen_ = 0;
  std::uint64_t seed_;
  std::size_t d_;
};

/// Fold one vector into the sketch: M_j <- max(M_j, <w_j, x>).
inline void update(sketch_state& state, const unit_vector& x, const projection_set& proj) {
  state.require_bound_to(proj);
  if (x.d() != proj.d()) {
    throw dimension_error("vector dimension " + std::to_string(x.d()) + " does not match projection dimension " +
                          std::to_string(proj.d()));
  }
  proj.accumulate_max(x.coords(), 1, state.maxima_);
  ++state.items_seen_;
}

/// Fold `count` already-normalized row-major vectors into the sketch.
inline void update_batch(sketch_state& state, std::span<const double> rows, std::size_t count,
                         const projection_set& proj) {
  state.require_bound_to(proj);
  if (rows.size() != count * proj.d()) throw dimension_error("update_batch: rows are not count x d");
  proj.accumulate_max(rows, count, state.maxima_);
  state.items_seen_ += count;
}

/// S = mean of the maxima. Undefined for an empty sketch.
[[nodiscard]] inline double statistic(const sketch_state& state) {
  if (state.empty()) throw empty_sketch_error("statistic is undefined for an empty sketch");
  double sum = 0.0;
  for (double v : state.maxima()) sum += v;
  return sum / static_cast<double>(state.m());
}

[[nodiscard]] inline sketch_state merge(const sketch_state& a, const sketch_state& b) {
  if (a.fingerprint() != b.fingerprint()) throw binding_error("cannot merge sketches bound to different projections");
  sketch_state out = a;
  for (std::size_t j = 0; j < out.m(); ++j) out.maxima_[j] = std::max(a.maxima_[j], b.maxima_[j]);
  out.items_seen_ = a.items_seen_ + b.items_seen_;
  return out;
}

inline constexpr std::uint16_t sketch_format_version = 1;

/// "MXSK", u16 version, u64 seed, u32 m, u32 d, u64 items_seen, m x f64 (LE).
[[nodiscard]] inline std::vector<std::uint8_t> serialize(const sketch_state& s) {
  std::vector<std::uint8_t> out;
  out.reserve(30 + 8 * s.m());
  for (char c : {'M', 'X', 'S', 'K'}) out.push_back(static_cast<std::uint8_t>(c));
  detail::put_le<std::uint16_t>(out, sketch_format_version);
  detail::put_le<std::uint64_t>(out, s.seed());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.m()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.d()));
  detail::put_le<std::uint64_t>(out, s.items_seen());
  for (double v : s.maxima()) detail::put_f64(out, v);
  return out;
}

[[nodiscard]] inline sketch_state deserialize(std::span<const std::uint8_t> bytes) {
  detail::byte_cursor in(bytes);
  in.expect_magic("MXSK");
  const auto version_at = in.position();
  const auto version = in.read<std::uint16_t>();
  if (version != sketch_format_version) {
    throw format_error("unsupported sketch format version " + std::to_string(version), version_at);
  }
  const auto seed = in.read<std::uint64_t>();
  const auto m = in.read<std::uint32_t>();
  const auto d = in.read<std::uint32_t>();
  const auto items = in.read<std::uint64_t>();
  if (m == 0 || d == 0) throw format_error("sketch header has m = 0 or d = 0", in.position());
  if (in.remaining() != std::size_t{8} * m) {
    throw format_error("sketch payload holds " + std::to_string(in.remaining()) + " bytes, expected " +
                           std::to_string(std::size_t{8} * m),
                       in.position());
  }
  sketch_state s(seed, d, m);
  s.items_seen_ = items;
  bool all_empty = true;
  for (std::uint32_t j = 0; j < m; ++j) {
    const double v = in.read_f64();
    if (std::isnan(v)) throw format_error("NaN maximum in sketch payload", in.position() - 8);
    all_empty = all_empty && v == -std::numeric_limits<double>::infinity();
    s.maxima_[j] = v;
  }
  if ((items == 0) != all_empty) {
    throw format_error("sketch items_seen is inconsistent with its empty-sentinel maxima");
  }
  return s;
}

/// Buffered single-pass ingestion: vectors are normalized into a fixed-size
/// batch and flushed through the blocked projection kernel.
class sketcher {
public:
  static constexpr std::size_t default_batch = 256;

  explicit sketcher(const projection_set& proj, std::size_t batch = default_batch)
      : proj_(&proj), state_(sketch_state::empty_for(proj)), batch_(std::max<std::size_t>(batch, 1)) {
    buffer_.resize(batch_ * proj.d());
  }

  sketcher(const projection_set& proj, sketch_state initial, std::size_t batch = default_batch)
      : proj_(&proj), state_(std::move(initial)), batch_(std::max<std::size_t>(batch, 1)) {
    state_.require_bound_to(proj);
    buffer_.resize(batch_ * proj.d());
  }

  template <class T>
    requires std::is_floating_point_v<T>
  void add(std::span<const T> x) {
    if (x.size() != proj_->d()) {
      throw dimension_error("vector dimension " + std::to_string(x.size()) +
                            " does not match projection dimension " + std::to_string(proj_->d()));
    }
    normalize_into(x, std::span<double>(buffer_.data() + pending_ * proj_->d(), proj_->d()));
    if (++pending_ == batch_) flush();
  }

  void add(const std::vector<double>& x) { add(std::span<const double>(x)); }

  void flush() {
    if (pending_ == 0) return;
    update_batch(state_, std::span<const double>(buffer_.data(), pending_ * proj_->d()), pending_, *proj_);
    pending_ = 0;
  }

  /// Flushes pending vectors and returns the state.
  [[nodiscard]] const sketch_state& state() {
    flush();
    return state_;
  }

  [[nodiscard]] sketch_state release() && {
    flush();
    return std::move(state_);
  }

  /// Bytes held by the ingestion buffer; fixed at construction.
  [[nodiscard]] std::size_t buffer_bytes() const noexcept { return buffer_.capacity() * sizeof(double); }

private:
  const projection_set* proj_;
  sketch_state state_;
  std::size_t batch_;
  std::size_t pending_ = 0;
  std::vector<double> buffer_;
};

/// Sketch a whole row-major buffer of unit (or nearly unit) vectors.
[[nodiscard]] inline sketch_state sketch_rows(std::span<const double> rows, const projection_set& proj) {
  if (rows.size() % proj.d() != 0) throw dimension_error("sketch_rows: buffer is not a multiple of d");
  sketcher sk(proj);
  for (std::size_t i = 0; i < rows.size() / proj.d(); ++i) sk.add(rows.subspan(i * proj.d(), proj.d()));
  return std::move(sk).release();
}

} // namespace maxsketch
