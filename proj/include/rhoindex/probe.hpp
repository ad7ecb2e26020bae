#pragma once

// Small feedforward networks with a coupling layer after every hidden layer.
//
//   h = phi(W x + b),  h~ = C h
//
// IN_BETWEEN routes h~ into the next layer (y = V h~ at the top); AUXILIARY
// keeps the prediction path on h (y = V h) and fits C on a side branch with
// the probe objective mean (C h - h)^2, h held constant. The redundancy index
// of every C is traced per epoch.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rhoindex/error.hpp"
#include "rhoindex/estimator.hpp"

namespace rhoindex {

enum class Task { Classify, Autoencode };
enum class CouplingMode { InBetween, Auxiliary };
enum class Activation { Tanh, Logistic };
enum class InitScheme { UniformGlorot, NormalGlorot };

std::string_view to_string(Task v) noexcept;
std::string_view to_string(CouplingMode v) noexcept;
std::string_view to_string(Activation v) noexcept;
std::string_view to_string(InitScheme v) noexcept;
Task task_from_string(std::string_view s);
CouplingMode coupling_from_string(std::string_view s);
Activation activation_from_string(std::string_view s);
InitScheme init_from_string(std::string_view s);

struct ProbeConfig {
  Task task = Task::Classify;
  CouplingMode coupling = CouplingMode::InBetween;
  std::size_t input_dim = 8;
  std::vector<std::size_t> hidden_dims = {96};
  std::size_t output_dim = 2;
  Activation activation = Activation::Tanh;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  InitScheme init = InitScheme::UniformGlorot;
  double l2 = 0.0;

  /// Keep every C fixed at its initial value.
  bool freeze_coupling = false;
  /// Add N(0, 1/d) off-diagonal noise to the identity at initialization.
  bool coupling_noise = true;
  /// AUXILIARY only: fit C with the probe objective.
  bool side_objective = true;
  /// Store a copy of every C at each traced epoch.
  bool keep_snapshots = false;
};

void validate(const ProbeConfig& config);

/// Canonical one-line description, also the input to `config_digest`.
std::string describe(const ProbeConfig& config);
std::string config_digest(const ProbeConfig& config);

struct ProbeLayer {
  Matrix weight;          // d x p_in
  Eigen::VectorXd bias;   // d
  Matrix coupling;        // d x d
};

struct ProbeNetwork {
  std::vector<ProbeLayer> layers;
  Matrix readout;  // q x d_last
};

ProbeNetwork init_network(const ProbeConfig& config);

/// Glorot limits for a fan_in -> fan_out weight.
double glorot_uniform_bound(std::size_t fan_in, std::size_t fan_out) noexcept;
double glorot_normal_stddev(std::size_t fan_in, std::size_t fan_out) noexcept;

/// Activations of one forward pass; rows are samples.
struct ForwardCache {
  std::vector<Matrix> inputs;       // input to each hidden layer
  std::vector<Matrix> preactivation;
  std::vector<Matrix> hidden;       // h
  std::vector<Matrix> coupled;      // h~ = h C^T
  Matrix output;                    // logits or reconstruction
};

ForwardCache forward(const ProbeNetwork& net, const Matrix& batch, CouplingMode mode, Activation activation);

/// Supervision for one batch: class labels (CLASSIFY) or reconstruction
/// targets (AUTOENCODE).
struct Targets {
  std::span<const int> labels;
  const Matrix* values = nullptr;
};

struct ObjectiveParts {
  double task = 0.0;       // cross-entropy or MSE
  double side = 0.0;       // probe objective summed over layers (AUXILIARY)
  double penalty_main = 0.0;      // l2/2 ||.||^2 over W and V
  double penalty_coupling = 0.0;  // l2/2 ||C||^2

  /// Objective whose gradient moves W, b, V (and C for IN_BETWEEN).
  double main(CouplingMode mode) const noexcept {
    return task + penalty_main + (mode == CouplingMode::InBetween ? penalty_coupling : 0.0);
  }
  /// Objective whose gradient moves C in AUXILIARY mode.
  double probe() const noexcept { return side + penalty_coupling; }
};

ObjectiveParts objective(const ProbeNetwork& net, const ProbeConfig& config, const Matrix& batch, const Targets& targets);

/// Analytic gradients with the same layout as the network. In AUXILIARY
/// mode the coupling gradients are those of `ObjectiveParts::probe`.
ProbeNetwork gradients(const ProbeNetwork& net, const ProbeConfig& config, const Matrix& batch,
                       const Targets& targets);

struct Dataset {
  Matrix train_x;
  std::vector<int> train_labels;
  Matrix eval_x;
  std::vector<int> eval_labels;
  std::size_t classes = 0;
};

/// Gaussian clusters with unit covariance. Class c is centred at
/// separation * s_c with s_c[j] = +1 if bit (j mod B) of c is set and -1
/// otherwise, B = ceil(log2(classes)). Train and eval splits hold
/// `per_class` points per class each.
Dataset make_blobs(std::size_t p, std::size_t classes, std::size_t per_class, double separation, std::uint64_t seed);

/// Splits rows into train/eval, the last `eval_fraction` of rows going to
/// eval. Labels may be empty (autoencoding).
Dataset split_dataset(const Matrix& x, std::span<const int> labels, double eval_fraction);

/// Accuracy (CLASSIFY) or mean squared reconstruction error (AUTOENCODE).
double evaluate(const ProbeNetwork& net, const ProbeConfig& config, const Matrix& x, std::span<const int> labels);

struct LayerMeasurement {
  double rho_weight = 0.0;  // rho_hat of rho_from_weights(C)
  double rho_fisher = 0.0;  // rho_hat of rho_from_activations(h~ on the probe batch)
  std::string error_flag;
};

struct TraceEpoch {
  std::size_t epoch = 0;  // 0 = before the first update
  double loss = 0.0;      // main objective on the full training split
  double metric = 0.0;    // evaluate() on the eval split
  std::vector<LayerMeasurement> layers;
  double rho_mean = 0.0;  // mean of per-layer max(0, rho_weight)
};

struct TrainingTrace {
  std::vector<TraceEpoch> epochs;
  /// snapshots[e][l]: coupling of layer l at traced epoch e (keep_snapshots).
  std::vector<std::vector<Matrix>> snapshots;
  ProbeNetwork network;
};

/// Thrown when the training loss becomes non-finite.
class DivergedLossError : public Error {
 public:
  DivergedLossError(const std::string& message, TrainingTrace partial)
      : Error(ErrorCode::DivergedLoss, message), partial_(std::move(partial)) {}
  const TrainingTrace& partial() const noexcept { return partial_; }

 private:
  TrainingTrace partial_;
};

/// Rows of the eval split used for rho_fisher.
inline constexpr std::size_t kProbeBatchRows = 512;

/// Redundancy measurements for the current network.
std::vector<LayerMeasurement> measure_layers(const ProbeNetwork& net, const ProbeConfig& config, const Matrix& probe_batch);

/// Mean of max(0, rho_weight) over layers without a weight error; NaN if none.
double rho_mean(std::span<const LayerMeasurement> layers);

TrainingTrace train(const ProbeConfig& config, const Dataset& data);

}  // namespace rhoindex
