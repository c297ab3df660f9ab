#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace maxsketch {

/// Base of every error thrown by the library.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class invalid_parameter : public error {
public:
  using error::error;
};

class invalid_input : public error {
public:
  using error::error;
};

/// Vector dimension does not match the projection set.
class dimension_error : public error {
public:
  using error::error;
};

/// A sketch, readout or projection set was combined with state drawn from a
/// different projection set.
class binding_error : public error {
public:
  using error::error;
};

class empty_sketch_error : public error {
public:
  using error::error;
};

/// Malformed, truncated or version-mismatched bytes. `offset` is the byte
/// position where parsing gave up, when known.
class format_error : public error {
public:
  explicit format_error(const std::string& what, std::size_t offset = npos)
      : error(offset == npos ? what : what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  std::size_t offset_;
};

class io_error : public error {
public:
  using error::error;
};

class generation_failure : public error {
public:
  generation_failure(const std::string& what, double achievable_rho)
      : error(what), achievable_rho_(achievable_rho) {}

  [[nodiscard]] double achievable_rho() const noexcept { return achievable_rho_; }

private:
  double achievable_rho_;
};

/// L(t_{r+1}) - U(t_r) <= 0 at some grid level: the thresholds cannot separate
/// neighbouring counts under the configured rho and eta.
class grid_soundness_error : public error {
public:
  grid_soundness_error(const std::string& what, std::size_t level) : error(what), level_(level) {}

  [[nodiscard]] std::size_t level() const noexcept { return level_; }

private:
  std::size_t level_;
};

} // namespace maxsketch
