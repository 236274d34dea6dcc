#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace nlsi {

/// Symmetric banded matrix stored by its lower band: entry (i, j) for
/// i - bw <= j <= i. Symmetric in the bilinear (non-conjugate) sense, so the
/// same storage serves real SPD operators and complex-symmetric
/// Crank-Nicolson systems.
template <class T>
class SymBand {
 public:
  SymBand() = default;
  SymBand(std::size_t n, std::size_t bw) : n_(n), bw_(bw), a_(n * (bw + 1), T{}) {}

  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return bw_; }

  /// Access with i >= j and i - j <= bw.
  T& at(std::size_t i, std::size_t j) { return a_[i * (bw_ + 1) + (i - j)]; }
  const T& at(std::size_t i, std::size_t j) const { return a_[i * (bw_ + 1) + (i - j)]; }

  /// Adds to the symmetric pair (i, j) / (j, i) once.
  void add(std::size_t i, std::size_t j, T value) {
    if (i < j) std::swap(i, j);
    if (i - j > bw_) throw std::out_of_range("SymBand::add outside band");
    at(i, j) += value;
  }

  template <class U>
  void multiply(std::span<const U> x, std::span<U> y) const {
    for (std::size_t i = 0; i < n_; ++i) y[i] = U{};
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j0 = i >= bw_ ? i - bw_ : 0;
      for (std::size_t j = j0; j < i; ++j) {
        const T a = at(i, j);
        y[i] += a * x[j];
        y[j] += a * x[i];
      }
      y[i] += at(i, i) * x[i];
    }
  }

  /// Returns alpha * A + beta * B (same shape).
  template <class U>
  SymBand<U> combine(U alpha, const SymBand<T>& b, U beta) const;

 private:
  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::vector<T> a_;
  template <class>
  friend class SymBand;
};

template <class T>
template <class U>
SymBand<U> SymBand<T>::combine(U alpha, const SymBand<T>& b, U beta) const {
  if (b.n_ != n_ || b.bw_ != bw_) throw std::invalid_argument("SymBand::combine shape mismatch");
  SymBand<U> out(n_, bw_);
  for (std::size_t k = 0; k < a_.size(); ++k) out.a_[k] = alpha * U(a_[k]) + beta * U(b.a_[k]);
  return out;
}

/// LDL^T factorization without pivoting. Valid for SPD matrices and for
/// complex-symmetric matrices W + i*K with W > 0 diagonal and K real symmetric.
template <class T>
class BandLDLT {
 public:
  explicit BandLDLT(SymBand<T> m) : f_(std::move(m)) {
    const std::size_t n = f_.size(), bw = f_.bandwidth();
    std::vector<T> tmp(bw + 1);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k0 = j >= bw ? j - bw : 0;
      T d = f_.at(j, j);
      for (std::size_t k = k0; k < j; ++k) d -= f_.at(j, k) * f_.at(j, k) * f_.at(k, k);
      if (d == T{}) throw std::runtime_error("BandLDLT: zero pivot");
      f_.at(j, j) = d;
      const std::size_t iend = std::min(n, j + bw + 1);
      for (std::size_t i = j + 1; i < iend; ++i) {
        const std::size_t kk0 = i >= bw ? i - bw : 0;
        T s = f_.at(i, j);
        for (std::size_t k = std::max(k0, kk0); k < j; ++k) s -= f_.at(i, k) * f_.at(j, k) * f_.at(k, k);
        f_.at(i, j) = s / d;
      }
    }
  }

  template <class U>
  void solve_in_place(std::span<U> x) const {
    const std::size_t n = f_.size(), bw = f_.bandwidth();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k0 = i >= bw ? i - bw : 0;
      for (std::size_t k = k0; k < i; ++k) x[i] -= f_.at(i, k) * x[k];
    }
    for (std::size_t i = 0; i < n; ++i) x[i] /= f_.at(i, i);
    for (std::size_t ii = n; ii-- > 0;) {
      const std::size_t iend = std::min(n, ii + bw + 1);
      for (std::size_t k = ii + 1; k < iend; ++k) x[ii] -= f_.at(k, ii) * x[k];
    }
  }

  /// Number of negative pivots (real T only): the count of negative
  /// eigenvalues by Sylvester's law of inertia.
  std::size_t negative_pivots() const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < f_.size(); ++i)
      if (std::real(f_.at(i, i)) < 0) ++c;
    return c;
  }

 private:
  SymBand<T> f_;
};

}  // namespace nlsi
