#include <algorithm>
#include <cassert>

#include "uavids/kernels.hpp"

namespace uavids::kernels::parallel {

void affine_forward(const Matrix& in, const Matrix& weight,
                    std::span<const double> bias, Matrix& out) {
  assert(in.cols() == weight.cols() && bias.size() == weight.rows());
  assert(out.rows() == in.rows() && out.cols() == weight.rows());
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const auto x = in.row(r);
    for (std::size_t o = 0; o < weight.rows(); ++o) {
      const auto w = weight.row(o);
      double acc = bias[o];
      for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
      out(r, o) = acc;
    }
  }
}

void weight_grad(const Matrix& dout, const Matrix& in, Matrix& grad) {
  assert(dout.rows() == in.rows());
  assert(grad.rows() == dout.cols() && grad.cols() == in.cols());
#pragma omp parallel for schedule(static)
  for (std::size_t o = 0; o < grad.rows(); ++o) {
    auto g = grad.row(o);
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t r = 0; r < in.rows(); ++r) {
      const double d = dout(r, o);
      if (d == 0.0) continue;
      const auto x = in.row(r);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += d * x[i];
    }
  }
}

void input_grad(const Matrix& dout, const Matrix& weight, Matrix& din) {
  assert(dout.cols() == weight.rows());
  assert(din.rows() == dout.rows() && din.cols() == weight.cols());
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < dout.rows(); ++r) {
    auto dx = din.row(r);
    std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t o = 0; o < weight.rows(); ++o) {
      const double d = dout(r, o);
      if (d == 0.0) continue;
      const auto w = weight.row(o);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += d * w[i];
    }
  }
}

void row_squared_error(const Matrix& a, const Matrix& b, std::span<double> out) {
  assert(a.rows() == b.rows() && a.cols() == b.cols() && out.size() == a.rows());
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto x = a.row(r);
    const auto y = b.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
      const double d = x[c] - y[c];
      acc += d * d;
    }
    out[r] = acc;
  }
}

void column_mean_var(const Matrix& m, std::span<double> mean, std::span<double> var) {
  assert(mean.size() == m.cols() && var.size() == m.cols() && m.rows() > 0);
  const double n = static_cast<double>(m.rows());
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) s += m(r, c);
    const double mu = s / n;
    double v = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const double d = m(r, c) - mu;
      v += d * d;
    }
    mean[c] = mu;
    var[c] = v / n;
  }
}

void min_max_scale(Matrix& m, std::span<const double> mins,
                   std::span<const double> maxs, bool clip) {
  assert(mins.size() == m.cols() && maxs.size() == m.cols());
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto x = m.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) {
      double v = (x[c] - mins[c]) / (maxs[c] - mins[c]);
      if (clip) v = std::clamp(v, 0.0, 1.0);
      x[c] = v;
    }
  }
}

}  // namespace uavids::kernels::parallel
