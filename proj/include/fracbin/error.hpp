#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fracbin {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter outside its mathematical domain (H, sigma, h, N, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Index outside the range covered by a kernel table or array.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Arrays that must be aligned have different shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Enumeration requested for a horizon whose 2^N paths are not tractable.
class TooLargeError : public Error {
 public:
  using Error::Error;
};

/// Panel budget exhausted before the requested tolerance was met.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, std::int64_t n, std::int64_t i)
      : Error(what + " (n=" + std::to_string(n) + ", i=" + std::to_string(i) + ")"), n_(n), i_(i) {}

  std::int64_t n() const noexcept { return n_; }
  std::int64_t i() const noexcept { return i_; }

 private:
  std::int64_t n_;
  std::int64_t i_;
};

/// A price factor 1 + X_n / N^H was not strictly positive.
class PriceError : public Error {
 public:
  explicit PriceError(std::int64_t n)
      : Error("nonpositive price factor at n=" + std::to_string(n)), n_(n) {}

  std::int64_t n() const noexcept { return n_; }

 private:
  std::int64_t n_;
};

}  // namespace fracbin
