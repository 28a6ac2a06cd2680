// SPDX-License-Identifier: Apache-2.0
//
// Shared value types for the normal-integration library: dense pixel grids,
// the error type, and a couple of small numeric helpers.

#ifndef NINT_COMMON_HPP
#define NINT_COMMON_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace nint {

using Vec3 = Eigen::Vector3d;

enum class ErrorCode {
  InvalidArgument,
  OutOfBounds,
  NonConvergentUndistortion,
  DegenerateRay,
  SingularSystem,
  NonPositiveLogArgument,
  EmptyGraph,
  DimensionMismatch,
  EmptyMask,
  NonConvergentRoot,
  MalformedHeader,
  NonUnitNormals,
  IoFailure,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::NonConvergentUndistortion: return "NonConvergentUndistortion";
    case ErrorCode::DegenerateRay: return "DegenerateRay";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonPositiveLogArgument: return "NonPositiveLogArgument";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::NonConvergentRoot: return "NonConvergentRoot";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::NonUnitNormals: return "NonUnitNormals";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

/// Integer pixel location; pixel centers sit at integer coordinates.
struct Pixel {
  int u = 0;
  int v = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Row-major dense grid. Index = v * width + u.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, const T& fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(checked_area(width, height)), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int u, int v) const noexcept {
    return u >= 0 && v >= 0 && u < width_ && v < height_;
  }
  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }
  Pixel pixel(std::size_t idx) const noexcept {
    return {static_cast<int>(idx % static_cast<std::size_t>(width_)),
            static_cast<int>(idx / static_cast<std::size_t>(width_))};
  }

  T& operator()(int u, int v) { return data_[index(u, v)]; }
  const T& operator()(int u, int v) const { return data_[index(u, v)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  template <typename U>
  bool same_shape(const Image<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

 private:
  static long long checked_area(int w, int h) {
    if (w < 0 || h < 0) throw Error(ErrorCode::InvalidArgument, "negative image size");
    return static_cast<long long>(w) * h;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using NormalMap = Image<Vec3>;
using DepthMap = Image<double>;
using PixelMask = Image<std::uint8_t>;

inline std::size_t count_valid(const PixelMask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.data().begin(), mask.data().end(), [](std::uint8_t m) { return m != 0; }));
}

template <typename A, typename B>
void require_same_shape(const Image<A>& a, const Image<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()));
  }
}

/// Logistic function 1 / (1 + exp(-x)); the exponent is clamped to +-500.
inline double logistic(double x) {
  const double e = std::clamp(-x, -500.0, 500.0);
  return 1.0 / (1.0 + std::exp(e));
}

/// Sharpened logistic sigma_k(x) = 1 / (1 + exp(-k x)).
inline double logistic(double k, double x) { return logistic(k * x); }

/// Number of worker threads: NINT_THREADS if set and > 0, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("NINT_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1U : hw;
}

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each index must
/// only write its own output slot; the result is then independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
  if (workers <= 1 || n < 1024) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::exception_ptr> failures(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    threads.emplace_back([&, w, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

}  // namespace nint

#endif  // NINT_COMMON_HPP
