#include "uavids/autoencoder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "text_util.hpp"
#include "uavids/error.hpp"
#include "uavids/rng.hpp"

namespace uavids {

namespace {

std::string layer_name(std::size_t i) { return "layer" + std::to_string(i); }

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto x = m.row(r);
    for (std::size_t c = 0; c < s.size(); ++c) s[c] += x[c];
  }
  return s;
}

struct Backprop {
  Gradients grads;
  ForwardResult fwd;
  double data_loss = 0.0;
};

Backprop backprop(const ModelParams& params, const Matrix& batch, const TrainConfig& cfg,
                  Execution exec) {
  Backprop bp;
  bp.fwd = forward(params, batch, Mode::Train, exec);
  const Matrix& out = bp.fwd.reconstruction;

  std::vector<double> losses(batch.rows());
  kernels::row_squared_error(out, batch, losses, exec);
  bp.data_loss = std::accumulate(losses.begin(), losses.end(), 0.0);

  // d/dR of sum ||R - X||^2
  Matrix d_act(out.rows(), out.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    d_act.flat()[i] = 2.0 * (out.flat()[i] - batch.flat()[i]);
  }

  const auto n_layers = params.layers.size();
  bp.grads.layers.resize(n_layers);
  const double n = static_cast<double>(batch.rows());
  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& layer = params.layers[li];
    const auto& cache = bp.fwd.cache[li];
    auto& g = bp.grads.layers[li];
    const std::size_t fan_out = layer.weight.rows();

    Matrix d_pre = std::move(d_act);
    for (std::size_t i = 0; i < d_pre.size(); ++i) {
      if (!(cache.activation_input.flat()[i] > 0.0)) d_pre.flat()[i] = 0.0;
    }

    if (layer.has_batchnorm()) {
      g.gamma.assign(fan_out, 0.0);
      g.beta.assign(fan_out, 0.0);
      std::vector<double> sum_dn(fan_out, 0.0);
      std::vector<double> sum_dn_n(fan_out, 0.0);
      for (std::size_t r = 0; r < d_pre.rows(); ++r) {
        for (std::size_t o = 0; o < fan_out; ++o) {
          const double dy = d_pre(r, o);
          const double zhat = cache.normalized(r, o);
          g.gamma[o] += dy * zhat;
          g.beta[o] += dy;
          const double dn = dy * layer.gamma[o];
          sum_dn[o] += dn;
          sum_dn_n[o] += dn * zhat;
        }
      }
      for (std::size_t r = 0; r < d_pre.rows(); ++r) {
        for (std::size_t o = 0; o < fan_out; ++o) {
          const double dn = d_pre(r, o) * layer.gamma[o];
          d_pre(r, o) = cache.inv_std[o] / n *
                        (n * dn - sum_dn[o] - cache.normalized(r, o) * sum_dn_n[o]);
        }
      }
    }

    g.weight = Matrix(layer.weight.rows(), layer.weight.cols());
    kernels::weight_grad(d_pre, cache.input, g.weight, exec);
    g.bias = column_sums(d_pre);

    if (cfg.lambda_l1 != 0.0 || cfg.lambda_l2 != 0.0) {
      const auto w = layer.weight.flat();
      auto gw = g.weight.flat();
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double sign = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
        gw[i] += cfg.lambda_l1 * sign + 2.0 * cfg.lambda_l2 * w[i];
      }
    }

    if (li > 0) {
      d_act = Matrix(cache.input.rows(), cache.input.cols());
      kernels::input_grad(d_pre, layer.weight, d_act, exec);
    }
  }
  return bp;
}

LayerGrad zero_like(const LayerParams& l) {
  LayerGrad g;
  g.weight = Matrix(l.weight.rows(), l.weight.cols());
  g.bias.assign(l.bias.size(), 0.0);
  g.gamma.assign(l.gamma.size(), 0.0);
  g.beta.assign(l.beta.size(), 0.0);
  return g;
}

void adam_update(std::span<double> theta, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, const TrainConfig& cfg, double bias1, double bias2) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
    v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
  }
}

}  // namespace

std::vector<std::size_t> Architecture::decoder_dims() const {
  std::vector<std::size_t> dims(encoder_dims.rbegin(), encoder_dims.rend());
  dims.erase(dims.begin());
  dims.push_back(input_dim);
  return dims;
}

std::vector<std::pair<std::size_t, std::size_t>> Architecture::layer_shapes() const {
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), encoder_dims.begin(), encoder_dims.end());
  const auto dec = decoder_dims();
  widths.insert(widths.end(), dec.begin(), dec.end());
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) shapes.emplace_back(widths[i], widths[i + 1]);
  return shapes;
}

void Architecture::validate() const {
  if (input_dim == 0) throw Error(ErrorKind::Precondition, "input_dim must be positive");
  if (encoder_dims.empty()) throw Error(ErrorKind::Precondition, "need at least one encoder layer");
  for (auto d : encoder_dims) {
    if (d == 0) throw Error(ErrorKind::Precondition, "layer widths must be positive");
  }
  if (bottleneck() >= input_dim) {
    throw Error(ErrorKind::Precondition, "bottleneck width " + std::to_string(bottleneck()) +
                                             " must be below input_dim " +
                                             std::to_string(input_dim));
  }
  if (batchnorm && !(batchnorm_epsilon > 0.0)) {
    throw Error(ErrorKind::Precondition, "batchnorm epsilon must be positive");
  }
}

void ModelParams::validate() const {
  const auto shapes = arch.layer_shapes();
  if (layers.size() != shapes.size()) {
    throw Error(ErrorKind::Shape, "model has " + std::to_string(layers.size()) +
                                      " layers, architecture wants " +
                                      std::to_string(shapes.size()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const auto [fan_in, fan_out] = shapes[i];
    const bool want_bn = arch.batchnorm && i + 1 < layers.size();
    const auto bad = [&](const std::string& what) {
      throw Error(ErrorKind::Shape, layer_name(i) + ": " + what);
    };
    if (l.weight.rows() != fan_out || l.weight.cols() != fan_in) bad("weight shape mismatch");
    if (l.bias.size() != fan_out) bad("bias length mismatch");
    const std::size_t bn = want_bn ? fan_out : 0;
    if (l.gamma.size() != bn || l.beta.size() != bn || l.running_mean.size() != bn ||
        l.running_var.size() != bn) {
      bad("batchnorm parameter length mismatch");
    }
    for (double v : l.running_var) {
      if (!(v >= 0.0)) bad("negative running variance");
    }
  }
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size() + l.gamma.size() + l.beta.size();
  return n;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::Precondition, "learning_rate must be > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw Error(ErrorKind::Precondition, "adam betas must lie in (0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw Error(ErrorKind::Precondition, "adam_epsilon must be > 0");
  if (!(lambda_l1 >= 0.0) || !(lambda_l2 >= 0.0)) {
    throw Error(ErrorKind::Precondition, "regularization weights must be >= 0");
  }
  if (batch_size < 1) throw Error(ErrorKind::Precondition, "batch_size must be >= 1");
  if (!(batchnorm_momentum > 0.0 && batchnorm_momentum < 1.0)) {
    throw Error(ErrorKind::Precondition, "batchnorm_momentum must lie in (0, 1)");
  }
}

ModelParams init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  ModelParams p;
  p.arch = arch;
  const auto shapes = arch.layer_shapes();
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto [fan_in, fan_out] = shapes[i];
    const bool output = i + 1 == shapes.size();
    const double limit = output ? std::sqrt(6.0 / static_cast<double>(fan_in + fan_out))
                                : std::sqrt(6.0 / static_cast<double>(fan_in));
    LayerParams l;
    l.weight = Matrix(fan_out, fan_in);
    for (double& w : l.weight.flat()) w = rng.uniform(-limit, limit);
    l.bias.assign(fan_out, 0.0);
    if (arch.batchnorm && !output) {
      l.gamma.assign(fan_out, 1.0);
      l.beta.assign(fan_out, 0.0);
      l.running_mean.assign(fan_out, 0.0);
      l.running_var.assign(fan_out, 1.0);
    }
    p.layers.push_back(std::move(l));
  }
  return p;
}

ForwardResult forward(const ModelParams& params, const Matrix& batch, Mode mode,
                      Execution exec) {
  if (batch.cols() != params.arch.input_dim) {
    throw Error(ErrorKind::Shape, "input has " + std::to_string(batch.cols()) +
                                      " features, model wants " +
                                      std::to_string(params.arch.input_dim));
  }
  ForwardResult res;
  res.cache.resize(params.layers.size());
  Matrix current = batch;
  const double eps = params.arch.batchnorm_epsilon;
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto& layer = params.layers[li];
    auto& c = res.cache[li];
    c.input = std::move(current);
    c.pre = Matrix(c.input.rows(), layer.weight.rows());
    kernels::affine_forward(c.input, layer.weight, layer.bias, c.pre, exec);

    if (layer.has_batchnorm()) {
      const std::size_t fan_out = layer.weight.rows();
      if (mode == Mode::Train) {
        if (c.pre.rows() == 0) throw Error(ErrorKind::Precondition, "empty training batch");
        c.mean.resize(fan_out);
        c.var.resize(fan_out);
        kernels::column_mean_var(c.pre, c.mean, c.var, exec);
      } else {
        c.mean = layer.running_mean;
        c.var = layer.running_var;
      }
      c.inv_std.resize(fan_out);
      for (std::size_t o = 0; o < fan_out; ++o) c.inv_std[o] = 1.0 / std::sqrt(c.var[o] + eps);
      c.normalized = Matrix(c.pre.rows(), fan_out);
      c.activation_input = Matrix(c.pre.rows(), fan_out);
      for (std::size_t r = 0; r < c.pre.rows(); ++r) {
        for (std::size_t o = 0; o < fan_out; ++o) {
          const double zhat = (c.pre(r, o) - c.mean[o]) * c.inv_std[o];
          c.normalized(r, o) = zhat;
          c.activation_input(r, o) = layer.gamma[o] * zhat + layer.beta[o];
        }
      }
    } else {
      c.activation_input = c.pre;
    }

    c.output = c.activation_input;
    for (double& v : c.output.flat()) v = v > 0.0 ? v : 0.0;
    current = c.output;
  }
  res.reconstruction = std::move(current);
  return res;
}

std::vector<double> forward(const ModelParams& params, std::span<const double> x) {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.row(0).begin());
  const auto res = forward(params, m, Mode::Infer, Execution::Serial);
  const auto row = res.reconstruction.row(0);
  return {row.begin(), row.end()};
}

double reconstruction_loss(std::span<const double> reconstruction,
                           std::span<const double> target) {
  if (reconstruction.size() != target.size()) {
    throw Error(ErrorKind::Shape, "reconstruction_loss: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = reconstruction[i] - target[i];
    acc += d * d;
  }
  return acc;
}

Penalty weight_penalty(const ModelParams& params) {
  Penalty p;
  for (const auto& l : params.layers) {
    for (double w : l.weight.flat()) {
      p.l1 += std::abs(w);
      p.l2 += w * w;
    }
  }
  return p;
}

ObjectiveTerms objective_terms(const ModelParams& params, const Matrix& batch,
                               const TrainConfig& cfg, Execution exec) {
  if (batch.rows() == 0) throw Error(ErrorKind::Precondition, "objective needs a non-empty batch");
  const auto res = forward(params, batch, Mode::Train, exec);
  std::vector<double> losses(batch.rows());
  kernels::row_squared_error(res.reconstruction, batch, losses, exec);
  ObjectiveTerms t;
  t.data = std::accumulate(losses.begin(), losses.end(), 0.0);
  const auto pen = weight_penalty(params);
  t.penalty = cfg.lambda_l1 * pen.l1 + cfg.lambda_l2 * pen.l2;
  return t;
}

double objective(const ModelParams& params, const Matrix& batch, const TrainConfig& cfg,
                 Execution exec) {
  return objective_terms(params, batch, cfg, exec).total();
}

Gradients gradients(const ModelParams& params, const Matrix& batch, const TrainConfig& cfg,
                    Execution exec) {
  if (batch.rows() == 0) throw Error(ErrorKind::Precondition, "gradients need a non-empty batch");
  return backprop(params, batch, cfg, exec).grads;
}

AdamState make_adam_state(const ModelParams& params) {
  AdamState s;
  for (const auto& l : params.layers) {
    s.first_moment.layers.push_back(zero_like(l));
    s.second_moment.layers.push_back(zero_like(l));
  }
  return s;
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg) {
  if (grads.layers.size() != params.layers.size() ||
      state.first_moment.layers.size() != params.layers.size()) {
    throw Error(ErrorKind::Shape, "adam_step: gradient/state layout mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.adam_beta2, t);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& p = params.layers[i];
    const auto& g = grads.layers[i];
    auto& m = state.first_moment.layers[i];
    auto& v = state.second_moment.layers[i];
    adam_update(p.weight.flat(), g.weight.flat(), m.weight.flat(), v.weight.flat(), cfg, bias1, bias2);
    adam_update(p.bias, g.bias, m.bias, v.bias, cfg, bias1, bias2);
    adam_update(p.gamma, g.gamma, m.gamma, v.gamma, cfg, bias1, bias2);
    adam_update(p.beta, g.beta, m.beta, v.beta, cfg, bias1, bias2);
  }
}

TrainResult train(const WindowedMatrix& data, Architecture arch, const TrainConfig& cfg,
                  Execution exec) {
  cfg.validate();
  data.validate();
  if (data.attack_rows() != 0) {
    throw Error(ErrorKind::Precondition,
                "training data contains " + std::to_string(data.attack_rows()) +
                    " attack-labeled rows; train on benign windows only");
  }
  if (data.rows() == 0) throw Error(ErrorKind::Precondition, "training data is empty");
  if (data.features.size() != arch.input_dim) {
    throw Error(ErrorKind::Shape, "training data has " + std::to_string(data.features.size()) +
                                      " features, architecture wants " +
                                      std::to_string(arch.input_dim));
  }
  arch.batchnorm = cfg.batchnorm_enabled;

  TrainResult result;
  result.params = init_params(arch, cfg.rng_seed);
  auto& params = result.params;

  // Start the output layer at the column means so no output unit begins dead.
  const auto means = column_sums(data.values);
  auto& out_bias = params.layers.back().bias;
  for (std::size_t c = 0; c < out_bias.size(); ++c) {
    out_bias[c] = means[c] / static_cast<double>(data.rows());
  }

  AdamState adam = make_adam_state(params);
  Rng shuffler(cfg.rng_seed ^ 0x5348554646ULL);
  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch_size = std::min(cfg.batch_size, data.rows());
  const double keep = cfg.batchnorm_momentum;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffler.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      // A single-row batch has no variance to normalize with.
      if (arch.batchnorm && end - start < 2 && order.size() >= 2) continue;
      Matrix batch(end - start, data.features.size());
      for (std::size_t r = start; r < end; ++r) {
        const auto src = data.values.row(order[r]);
        std::copy(src.begin(), src.end(), batch.row(r - start).begin());
      }
      auto bp = backprop(params, batch, cfg, exec);
      loss_sum += bp.data_loss;
      seen += batch.rows();
      for (std::size_t li = 0; li < params.layers.size(); ++li) {
        auto& layer = params.layers[li];
        if (!layer.has_batchnorm()) continue;
        const auto& c = bp.fwd.cache[li];
        for (std::size_t o = 0; o < layer.running_mean.size(); ++o) {
          layer.running_mean[o] = keep * layer.running_mean[o] + (1.0 - keep) * c.mean[o];
          layer.running_var[o] = keep * layer.running_var[o] + (1.0 - keep) * c.var[o];
        }
      }
      adam_step(params, bp.grads, adam, cfg);
    }
    const auto pen = weight_penalty(params);
    EpochStats st;
    st.mean_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    st.penalty = cfg.lambda_l1 * pen.l1 + cfg.lambda_l2 * pen.l2;
    st.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.trace.epochs.push_back(st);
  }
  return result;
}

// --- model file -----------------------------------------------------------

namespace {

constexpr std::string_view kModelMagic = "AEMODEL";
constexpr std::string_view kModelVersion = "v1";

void write_tensor(std::ostream& out, const std::string& name, std::size_t rows,
                  std::size_t cols, std::span<const double> data) {
  out << "TENSOR " << name << ' ' << rows << ' ' << cols << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out << ' ';
      out << detail::format_double(data[r * cols + c]);
    }
    out << '\n';
  }
}

class ModelReader {
 public:
  explicit ModelReader(std::istream& in) : in_(in) {}

  std::string next_line(std::string_view what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto t = detail::trim(line);
      if (!t.empty()) return std::string(t);
    }
    throw Error(ErrorKind::Parse, "model file truncated: expected " + std::string(what));
  }

  void read_tensor(const std::string& name, std::size_t rows, std::size_t cols,
                   std::span<double> dst) {
    const auto header = next_line("TENSOR " + name);
    std::istringstream hs(header);
    std::string tag, got_name;
    std::size_t got_rows = 0, got_cols = 0;
    if (!(hs >> tag >> got_name >> got_rows >> got_cols) || tag != "TENSOR") {
      throw Error(ErrorKind::Parse, "model file line " + std::to_string(line_no_) +
                                        ": expected TENSOR " + name);
    }
    if (got_name != name) {
      throw Error(ErrorKind::Shape, "model file: expected tensor " + name + ", found " + got_name);
    }
    if (got_rows != rows || got_cols != cols) {
      throw Error(ErrorKind::Shape, "tensor " + name + ": declared " + std::to_string(got_rows) +
                                        "x" + std::to_string(got_cols) + ", architecture wants " +
                                        std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (std::size_t r = 0; r < rows; ++r) {
      const auto line = next_line("row " + std::to_string(r) + " of " + name);
      const auto fields = split_ws(line);
      if (fields.front() == "TENSOR" || fields.front() == "END") {
        throw Error(ErrorKind::Shape, "tensor " + name + ": declared " + std::to_string(rows) +
                                          " rows, found " + std::to_string(r));
      }
      if (fields.size() != cols) {
        throw Error(ErrorKind::Shape, "tensor " + name + ": row " + std::to_string(r) + " has " +
                                          std::to_string(fields.size()) + " values, declared " +
                                          std::to_string(cols));
      }
      for (std::size_t c = 0; c < cols; ++c) {
        const auto v = detail::parse_double(fields[c]);
        if (!v || !std::isfinite(*v)) {
          throw Error(ErrorKind::Parse, "tensor " + name + ": bad value '" +
                                            std::string(fields[c]) + "'");
        }
        dst[r * cols + c] = *v;
      }
    }
  }

 private:
  static std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
      const auto start = i;
      while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
      if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
  }

  std::istream& in_;
  std::size_t line_no_ = 0;
};

std::vector<std::size_t> parse_dims(std::string_view s) {
  std::vector<std::size_t> dims;
  for (auto part : detail::split(s, ',')) {
    const auto v = detail::parse_int(part);
    if (!v || *v <= 0) throw Error(ErrorKind::Parse, "bad layer width '" + std::string(part) + "'");
    dims.push_back(static_cast<std::size_t>(*v));
  }
  return dims;
}

}  // namespace

void write_model(std::ostream& out, const ModelParams& params) {
  params.validate();
  const auto& a = params.arch;
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "ARCH input_dim " << a.input_dim << " encoder ";
  for (std::size_t i = 0; i < a.encoder_dims.size(); ++i) {
    if (i) out << ',';
    out << a.encoder_dims[i];
  }
  out << " batchnorm " << (a.batchnorm ? 1 : 0) << " epsilon "
      << detail::format_double(a.batchnorm_epsilon) << '\n';
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    const auto base = layer_name(i);
    write_tensor(out, base + ".weight", l.weight.rows(), l.weight.cols(), l.weight.flat());
    write_tensor(out, base + ".bias", 1, l.bias.size(), l.bias);
    if (l.has_batchnorm()) {
      write_tensor(out, base + ".bn_gamma", 1, l.gamma.size(), l.gamma);
      write_tensor(out, base + ".bn_beta", 1, l.beta.size(), l.beta);
      write_tensor(out, base + ".bn_running_mean", 1, l.running_mean.size(), l.running_mean);
      write_tensor(out, base + ".bn_running_var", 1, l.running_var.size(), l.running_var);
    }
  }
  out << "END\n";
}

void save_model(const std::filesystem::path& path, const ModelParams& params) {
  std::ostringstream buf;
  write_model(buf, params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write model " + path.string());
  out << buf.str();
}

ModelParams read_model(std::istream& in) {
  ModelReader reader(in);
  {
    std::istringstream hs(reader.next_line("AEMODEL header"));
    std::string magic, version;
    hs >> magic >> version;
    if (magic != kModelMagic) throw Error(ErrorKind::Parse, "not an AEMODEL file");
    if (version != kModelVersion) {
      throw Error(ErrorKind::Version, "unsupported model version '" + version + "', want " +
                                          std::string(kModelVersion));
    }
  }
  ModelParams p;
  {
    std::istringstream as(reader.next_line("ARCH line"));
    std::string tag, k1, dims, k2, k3, k4;
    std::size_t input_dim = 0;
    int bn = 0;
    std::string eps;
    if (!(as >> tag >> k1 >> input_dim >> k2 >> dims >> k3 >> bn >> k4 >> eps) || tag != "ARCH" ||
        k1 != "input_dim" || k2 != "encoder" || k3 != "batchnorm" || k4 != "epsilon") {
      throw Error(ErrorKind::Parse, "malformed ARCH line");
    }
    p.arch.input_dim = input_dim;
    p.arch.encoder_dims = parse_dims(dims);
    p.arch.batchnorm = bn != 0;
    const auto e = detail::parse_double(eps);
    if (!e) throw Error(ErrorKind::Parse, "malformed ARCH epsilon");
    p.arch.batchnorm_epsilon = *e;
    p.arch.validate();
  }
  const auto shapes = p.arch.layer_shapes();
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto [fan_in, fan_out] = shapes[i];
    const auto base = layer_name(i);
    LayerParams l;
    l.weight = Matrix(fan_out, fan_in);
    reader.read_tensor(base + ".weight", fan_out, fan_in, l.weight.flat());
    l.bias.resize(fan_out);
    reader.read_tensor(base + ".bias", 1, fan_out, l.bias);
    if (p.arch.batchnorm && i + 1 < shapes.size()) {
      for (auto* v : {&l.gamma, &l.beta, &l.running_mean, &l.running_var}) v->resize(fan_out);
      reader.read_tensor(base + ".bn_gamma", 1, fan_out, l.gamma);
      reader.read_tensor(base + ".bn_beta", 1, fan_out, l.beta);
      reader.read_tensor(base + ".bn_running_mean", 1, fan_out, l.running_mean);
      reader.read_tensor(base + ".bn_running_var", 1, fan_out, l.running_var);
    }
    p.layers.push_back(std::move(l));
  }
  if (reader.next_line("END") != "END") {
    throw Error(ErrorKind::Shape, "model file: unexpected data after last tensor");
  }
  p.validate();
  return p;
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read model " + path.string());
  return read_model(in);
}

std::string model_fingerprint(const ModelParams& params) {
  std::ostringstream buf;
  write_model(buf, params);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a(buf.str())));
  return hex;
}

void write_trace(std::ostream& out, const TrainTrace& trace, bool include_wall_time) {
  out << "epoch,mean_loss,penalty";
  if (include_wall_time) out << ",wall_seconds";
  out << '\n';
  for (std::size_t e = 0; e < trace.epochs.size(); ++e) {
    const auto& st = trace.epochs[e];
    out << e + 1 << ',' << detail::format_double(st.mean_loss) << ','
        << detail::format_double(st.penalty);
    if (include_wall_time) out << ',' << detail::format_double(st.wall_seconds);
    out << '\n';
  }
}

}  // namespace uavids
