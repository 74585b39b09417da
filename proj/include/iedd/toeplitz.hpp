#pragma once

// Fast products with the d-level Toeplitz matrix A through circulant
// embedding in a (2n)^d periodic array.

#include "iedd/kernel.hpp"

#include <fftw3.h>

#include <complex>
#include <memory>
#include <mutex>

namespace iedd {

namespace detail {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t count) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * count));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

// Planner calls are not thread-safe in FFTW.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

class ToeplitzMatvec {
 public:
  explicit ToeplitzMatvec(const KernelOperator& op)
      : dim_(op.dim()), n_(op.grid().n()), L_(2 * op.grid().n()) {
    real_size_ = static_cast<std::size_t>(ipow(L_, dim_));
    complex_size_ = real_size_ / static_cast<std::size_t>(L_) * static_cast<std::size_t>(L_ / 2 + 1);

    // FFTW is row-major (last index fastest); our lex order has axis 0 fastest.
    int dims[3];
    for (int k = 0; k < dim_; ++k) dims[k] = static_cast<int>(L_);

    auto in = detail::fftw_buffer<double>(real_size_);
    auto out = detail::fftw_buffer<fftw_complex>(complex_size_);
    {
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      forward_ = fftw_plan_dft_r2c(dim_, dims, in.get(), out.get(), FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_c2r(dim_, dims, out.get(), in.get(), FFTW_ESTIMATE);
    }
    if (forward_ == nullptr || backward_ == nullptr) throw NumericalError("FFTW planning failed");

    generator_.resize(real_size_);
    for (std::size_t t = 0; t < real_size_; ++t) {
      const MultiIndex k = unravel(static_cast<Index>(t), L_, dim_);
      MultiIndex lag{0, 0, 0};
      bool wrap = false;
      for (int a = 0; a < dim_; ++a) {
        if (k[a] < n_) lag[a] = k[a];
        else if (k[a] > n_) lag[a] = k[a] - L_;
        else wrap = true;
      }
      generator_[t] = wrap ? 0.0 : op.lag_entry(lag);
      in[t] = generator_[t];
    }
    fftw_execute_dft_r2c(forward_, in.get(), out.get());
    symbol_.resize(complex_size_);
    for (std::size_t t = 0; t < complex_size_; ++t) symbol_[t] = {out[t][0], out[t][1]};
  }

  ~ToeplitzMatvec() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
  }
  ToeplitzMatvec(const ToeplitzMatvec&) = delete;
  ToeplitzMatvec& operator=(const ToeplitzMatvec&) = delete;

  int dim() const { return dim_; }
  Index n() const { return n_; }
  Index size() const { return ipow(n_, dim_); }
  /// Embedding extent per dimension (2n).
  Index embedding_extent() const { return L_; }
  /// Periodic generator on the (2n)^d embedding, axis 0 fastest.
  const std::vector<double>& generator() const { return generator_; }
  /// Half-spectrum of the generator in FFTW r2c layout.
  const std::vector<std::complex<double>>& symbol() const { return symbol_; }

  Vector apply(const Vector& v) const {
    require(v.size() == size(), "matvec: vector length " + std::to_string(v.size()) + " does not match N = " +
                                    std::to_string(size()));
    auto in = detail::fftw_buffer<double>(real_size_);
    auto out = detail::fftw_buffer<fftw_complex>(complex_size_);
    std::fill(in.get(), in.get() + real_size_, 0.0);
    for (Index i = 0; i < v.size(); ++i) in[static_cast<std::size_t>(embed(i))] = v[i];
    fftw_execute_dft_r2c(forward_, in.get(), out.get());
    for (std::size_t t = 0; t < complex_size_; ++t) {
      const std::complex<double> z = std::complex<double>(out[t][0], out[t][1]) * symbol_[t];
      out[t][0] = z.real();
      out[t][1] = z.imag();
    }
    fftw_execute_dft_c2r(backward_, out.get(), in.get());
    const double scale = 1.0 / static_cast<double>(real_size_);
    Vector y(v.size());
    for (Index i = 0; i < v.size(); ++i) y[i] = scale * in[static_cast<std::size_t>(embed(i))];
    return y;
  }

  Matrix apply(const Matrix& V) const {
    Matrix Y(V.rows(), V.cols());
    for (Index j = 0; j < V.cols(); ++j) Y.col(j) = apply(Vector(V.col(j)));
    return Y;
  }

 private:
  Index embed(Index lex) const { return ravel(unravel(lex, n_, dim_), L_, dim_); }

  int dim_;
  Index n_;
  Index L_;
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  std::vector<double> generator_;
  std::vector<std::complex<double>> symbol_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace iedd
