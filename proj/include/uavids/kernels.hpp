#pragma once

#include <span>

#include "uavids/matrix.hpp"

namespace uavids {

/// Selects the serial reference kernels or their OpenMP counterparts.
/// Both produce bitwise-identical results: parallel loops only split
/// independent outputs, never a reduction.
enum class Execution { Serial, Parallel };

namespace kernels {

namespace serial {
// out(r, o) = bias[o] + sum_i in(r, i) * weight(o, i)
void affine_forward(const Matrix& in, const Matrix& weight,
                    std::span<const double> bias, Matrix& out);
// grad(o, i) = sum_r dout(r, o) * in(r, i)
void weight_grad(const Matrix& dout, const Matrix& in, Matrix& grad);
// din(r, i) = sum_o dout(r, o) * weight(o, i)
void input_grad(const Matrix& dout, const Matrix& weight, Matrix& din);
// out[r] = sum_c (a(r, c) - b(r, c))^2
void row_squared_error(const Matrix& a, const Matrix& b, std::span<double> out);
void column_mean_var(const Matrix& m, std::span<double> mean, std::span<double> var);
void min_max_scale(Matrix& m, std::span<const double> mins,
                   std::span<const double> maxs, bool clip);
}  // namespace serial

namespace parallel {
void affine_forward(const Matrix& in, const Matrix& weight,
                    std::span<const double> bias, Matrix& out);
void weight_grad(const Matrix& dout, const Matrix& in, Matrix& grad);
void input_grad(const Matrix& dout, const Matrix& weight, Matrix& din);
void row_squared_error(const Matrix& a, const Matrix& b, std::span<double> out);
void column_mean_var(const Matrix& m, std::span<double> mean, std::span<double> var);
void min_max_scale(Matrix& m, std::span<const double> mins,
                   std::span<const double> maxs, bool clip);
}  // namespace parallel

inline void affine_forward(const Matrix& in, const Matrix& weight,
                           std::span<const double> bias, Matrix& out,
                           Execution exec = Execution::Parallel) {
  exec == Execution::Serial ? serial::affine_forward(in, weight, bias, out)
                            : parallel::affine_forward(in, weight, bias, out);
}

inline void weight_grad(const Matrix& dout, const Matrix& in, Matrix& grad,
                        Execution exec = Execution::Parallel) {
  exec == Execution::Serial ? serial::weight_grad(dout, in, grad)
                            : parallel::weight_grad(dout, in, grad);
}

inline void input_grad(const Matrix& dout, const Matrix& weight, Matrix& din,
                       Execution exec = Execution::Parallel) {
  exec == Execution::Serial ? serial::input_grad(dout, weight, din)
                            : parallel::input_grad(dout, weight, din);
}

inline void row_squared_error(const Matrix& a, const Matrix& b, std::span<double> out,
                              Execution exec = Execution::Parallel) {
  exec == Execution::Serial ? serial::row_squared_error(a, b, out)
                            : parallel::row_squared_error(a, b, out);
}

inline void column_mean_var(const Matrix& m, std::span<double> mean,
                            std::span<double> var,
                            Execution exec = Execution::Parallel) {
  exec == Execution::Serial ? serial::column_mean_var(m, mean, var)
                            : parallel::column_mean_var(m, mean, var);
}

inline void min_max_scale(Matrix& m, std::span<const double> mins,
                          std::span<const double> maxs, bool clip,
                          Execution exec = Execution::Parallel) {
  exec == Execution::Serial ? serial::min_max_scale(m, mins, maxs, clip)
                            : parallel::min_max_scale(m, mins, maxs, clip);
}

}  // namespace kernels
}  // namespace uavids
