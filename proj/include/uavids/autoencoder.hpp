#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "uavids/feature_engineering.hpp"
#include "uavids/kernels.hpp"
#include "uavids/matrix.hpp"

namespace uavids {

/// Mirrored autoencoder shape. Encoder layer k maps widths[k] -> widths[k+1]
/// where widths = input_dim, encoder_dims...; the decoder retraces the widths
/// back to input_dim. Every layer is affine followed by ReLU; hidden layers
/// (all but the output layer) optionally batch-normalize the affine output
/// before the ReLU.
struct Architecture {
  std::size_t input_dim = 33;
  std::vector<std::size_t> encoder_dims{24, 12, 6};
  bool batchnorm = true;
  double batchnorm_epsilon = 1e-5;

  std::size_t n_layers() const noexcept { return encoder_dims.size(); }
  std::size_t bottleneck() const { return encoder_dims.back(); }
  std::vector<std::size_t> decoder_dims() const;
  /// (fan_in, fan_out) for all 2n layers, encoder first.
  std::vector<std::pair<std::size_t, std::size_t>> layer_shapes() const;

  /// Checks widths are positive and the bottleneck is narrower than the input.
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct LayerParams {
  Matrix weight;  // fan_out x fan_in
  std::vector<double> bias;
  // Batch normalization; empty on the output layer or when disabled.
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;

  bool has_batchnorm() const noexcept { return !gamma.empty(); }
  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct ModelParams {
  Architecture arch;
  std::vector<LayerParams> layers;  // encoder layers, then decoder layers

  /// Throws ErrorKind::Shape when a tensor disagrees with `arch`.
  void validate() const;
  std::size_t parameter_count() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double lambda_l1 = 1e-5;
  double lambda_l2 = 1e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 200;
  std::uint64_t rng_seed = 0;
  bool batchnorm_enabled = true;
  double batchnorm_momentum = 0.9;

  void validate() const;
};

struct EpochStats {
  double mean_loss = 0.0;  // mean per-window data term over the epoch
  double penalty = 0.0;    // regularization penalty after the epoch
  double wall_seconds = 0.0;
};

struct TrainTrace {
  std::vector<EpochStats> epochs;
};

enum class Mode { Train, Infer };

struct LayerCache {
  Matrix input;       // layer input
  Matrix pre;         // affine output
  Matrix normalized;  // batch-normalized affine output, if batchnorm
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> inv_std;
  Matrix activation_input;  // what the ReLU sees
  Matrix output;
};

struct ForwardResult {
  Matrix reconstruction;
  std::vector<LayerCache> cache;
};

struct LayerGrad {
  Matrix weight;
  std::vector<double> bias;
  std::vector<double> gamma;
  std::vector<double> beta;
};

struct Gradients {
  std::vector<LayerGrad> layers;
};

struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  std::uint64_t step = 0;
};

/// He-uniform hidden weights, Glorot-uniform output weights, zero biases,
/// identity batch normalization.
ModelParams init_params(const Architecture& arch, std::uint64_t seed);

/// Batched forward pass; rows of `batch` are samples. Train mode normalizes
/// with the batch's own statistics, Infer mode with the running statistics.
ForwardResult forward(const ModelParams& params, const Matrix& batch, Mode mode,
                      Execution exec = Execution::Parallel);
/// Single-sample Infer-mode forward.
std::vector<double> forward(const ModelParams& params, std::span<const double> x);

/// Squared Euclidean distance between a reconstruction and its target.
double reconstruction_loss(std::span<const double> reconstruction,
                           std::span<const double> target);

/// Sum of |w| and w^2 over weight matrices only.
struct Penalty {
  double l1 = 0.0;
  double l2 = 0.0;
};
Penalty weight_penalty(const ModelParams& params);

struct ObjectiveTerms {
  double data = 0.0;     // sum of per-sample reconstruction losses
  double penalty = 0.0;  // lambda_l1 * l1 + lambda_l2 * l2
  double total() const noexcept { return data + penalty; }
};

/// Train-mode objective over the batch, targets equal to inputs.
ObjectiveTerms objective_terms(const ModelParams& params, const Matrix& batch,
                               const TrainConfig& cfg, Execution exec = Execution::Parallel);
double objective(const ModelParams& params, const Matrix& batch, const TrainConfig& cfg,
                 Execution exec = Execution::Parallel);

/// Analytic gradient of `objective`. ReLU and |w| use a zero subgradient at 0.
Gradients gradients(const ModelParams& params, const Matrix& batch, const TrainConfig& cfg,
                    Execution exec = Execution::Parallel);

AdamState make_adam_state(const ModelParams& params);
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg);

struct TrainResult {
  ModelParams params;
  TrainTrace trace;
};

/// Trains on benign rows only; any Attack label is rejected before the first
/// update. Deterministic for a given seed.
TrainResult train(const WindowedMatrix& data, Architecture arch, const TrainConfig& cfg,
                  Execution exec = Execution::Parallel);

void write_model(std::ostream& out, const ModelParams& params);
void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams read_model(std::istream& in);
ModelParams load_model(const std::filesystem::path& path);

/// Hash of the serialized model, 16 hex digits.
std::string model_fingerprint(const ModelParams& params);

void write_trace(std::ostream& out, const TrainTrace& trace, bool include_wall_time);

}  // namespace uavids
