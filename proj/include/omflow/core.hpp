#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace omflow {

/// Largest chart dimension supported by the geometry kernels. Small vectors and
/// matrices live on the stack, which keeps the Monte Carlo inner loops free of
/// heap traffic.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// Error taxonomy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfDomain : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class SingularMetric : public Error {
 public:
  using Error::Error;
};

class NotOrthonormal : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class StepFailure : public Error {
 public:
  using Error::Error;
};

class NonPositiveWeight : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimension : public Error {
 public:
  using Error::Error;
};

class DegenerateRatio : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {
constexpr std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}
}  // namespace detail

/// Dense rank-3/rank-4 array over a chart of dimension n <= kMaxDim, stored inline.
template <int Rank>
class SmallTensor {
 public:
  SmallTensor() = default;
  explicit SmallTensor(int n) : n_(n) { data_.fill(0.0); }

  int dim() const { return n_; }

  template <typename... I>
  double& operator()(I... idx) {
    static_assert(sizeof...(I) == Rank);
    return data_[offset(static_cast<int>(idx)...)];
  }
  template <typename... I>
  double operator()(I... idx) const {
    static_assert(sizeof...(I) == Rank);
    return data_[offset(static_cast<int>(idx)...)];
  }

  double max_abs() const {
    double m = 0.0;
    const std::size_t count = detail::ipow(static_cast<std::size_t>(n_), Rank);
    for (std::size_t i = 0; i < count; ++i) m = std::max(m, std::abs(data_[i]));
    return m;
  }

 private:
  template <typename... I>
  std::size_t offset(I... idx) const {
    std::size_t off = 0;
    ((off = off * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx)), ...);
    return off;
  }

  int n_ = 0;
  std::array<double, detail::ipow(kMaxDim, Rank)> data_{};
};

using Tensor3 = SmallTensor<3>;
using Tensor4 = SmallTensor<4>;

}  // namespace omflow
