#include "rhoindex/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "rhoindex/numeric.hpp"

namespace rhoindex {

std::string_view to_string(Task v) noexcept { return v == Task::Classify ? "classify" : "autoencode"; }
std::string_view to_string(CouplingMode v) noexcept {
  return v == CouplingMode::InBetween ? "in-between" : "auxiliary";
}
std::string_view to_string(Activation v) noexcept { return v == Activation::Tanh ? "tanh" : "logistic"; }
std::string_view to_string(InitScheme v) noexcept {
  return v == InitScheme::UniformGlorot ? "uniform" : "normal";
}

Task task_from_string(std::string_view s) {
  if (s == "classify") return Task::Classify;
  if (s == "autoencode") return Task::Autoencode;
  throw Error(ErrorCode::InvalidArgument, "unknown task '" + std::string(s) + "'");
}
CouplingMode coupling_from_string(std::string_view s) {
  if (s == "in-between") return CouplingMode::InBetween;
  if (s == "auxiliary") return CouplingMode::Auxiliary;
  throw Error(ErrorCode::InvalidArgument, "unknown coupling mode '" + std::string(s) + "'");
}
Activation activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "logistic") return Activation::Logistic;
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + std::string(s) + "'");
}
InitScheme init_from_string(std::string_view s) {
  if (s == "uniform") return InitScheme::UniformGlorot;
  if (s == "normal") return InitScheme::NormalGlorot;
  throw Error(ErrorCode::InvalidArgument, "unknown init scheme '" + std::string(s) + "'");
}

void validate(const ProbeConfig& c) {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (c.input_dim == 0) fail("input_dim must be positive");
  if (c.output_dim == 0) fail("output_dim must be positive");
  if (c.hidden_dims.empty() || c.hidden_dims.size() > 3) fail("hidden_dims must have 1 to 3 entries");
  for (const std::size_t d : c.hidden_dims) {
    if (d < 4) fail("hidden layer widths must be at least 4");
  }
  if (c.task == Task::Autoencode && c.output_dim != c.input_dim) fail("autoencoding requires output_dim == input_dim");
  if (c.task == Task::Classify && c.output_dim < 2) fail("classification requires at least 2 outputs");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) fail("learning_rate must be positive");
  if (c.batch_size == 0) fail("batch_size must be positive");
  if (c.epochs == 0) fail("epochs must be positive");
  if (!(c.l2 >= 0.0) || !std::isfinite(c.l2)) fail("l2 must be nonnegative");
}

std::string describe(const ProbeConfig& c) {
  std::string hidden;
  for (std::size_t i = 0; i < c.hidden_dims.size(); ++i) {
    if (i > 0) hidden += 'x';
    hidden += std::to_string(c.hidden_dims[i]);
  }
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "task=%s coupling=%s p=%zu hidden=%s q=%zu act=%s lr=%.17g batch=%zu epochs=%zu seed=%llu "
                "init=%s l2=%.17g freeze=%d noise=%d side=%d",
                std::string(to_string(c.task)).c_str(), std::string(to_string(c.coupling)).c_str(), c.input_dim,
                hidden.c_str(), c.output_dim, std::string(to_string(c.activation)).c_str(), c.learning_rate,
                c.batch_size, c.epochs, static_cast<unsigned long long>(c.seed),
                std::string(to_string(c.init)).c_str(), c.l2, c.freeze_coupling ? 1 : 0, c.coupling_noise ? 1 : 0,
                c.side_objective ? 1 : 0);
  return buf;
}

std::string config_digest(const ProbeConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const char ch : describe(c)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double glorot_uniform_bound(std::size_t fan_in, std::size_t fan_out) noexcept {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

double glorot_normal_stddev(std::size_t fan_in, std::size_t fan_out) noexcept {
  return std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
}

namespace {

Matrix glorot_matrix(std::size_t fan_out, std::size_t fan_in, InitScheme scheme, Engine& engine) {
  Matrix m(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
  if (scheme == InitScheme::UniformGlorot) {
    const double bound = glorot_uniform_bound(fan_in, fan_out);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(engine);
  } else {
    std::normal_distribution<double> dist(0.0, glorot_normal_stddev(fan_in, fan_out));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(engine);
  }
  return m;
}

Matrix apply_activation(const Matrix& a, Activation act) {
  if (act == Activation::Tanh) return a.array().tanh().matrix();
  return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

// phi'(a) expressed through h = phi(a).
Matrix activation_derivative(const Matrix& h, Activation act) {
  if (act == Activation::Tanh) return (1.0 - h.array().square()).matrix();
  return (h.array() * (1.0 - h.array())).matrix();
}

// Row-wise softmax probabilities.
Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  const Eigen::VectorXd norm = p.rowwise().sum();
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= norm(i);
  return p;
}

void check_targets(const ProbeConfig& config, const Matrix& batch, const Targets& targets) {
  if (batch.cols() != static_cast<Eigen::Index>(config.input_dim)) {
    throw Error(ErrorCode::ShapeMismatch, "batch has " + std::to_string(batch.cols()) + " columns, expected " +
                                              std::to_string(config.input_dim));
  }
  if (config.task == Task::Classify) {
    if (targets.labels.size() != static_cast<std::size_t>(batch.rows())) {
      throw Error(ErrorCode::ShapeMismatch, "label count does not match batch rows");
    }
    for (const int y : targets.labels) {
      if (y < 0 || y >= static_cast<int>(config.output_dim)) {
        throw Error(ErrorCode::ShapeMismatch, "label " + std::to_string(y) + " outside [0, output_dim)");
      }
    }
  } else {
    if (targets.values == nullptr || targets.values->rows() != batch.rows() ||
        targets.values->cols() != static_cast<Eigen::Index>(config.output_dim)) {
      throw Error(ErrorCode::ShapeMismatch, "reconstruction targets do not match the batch");
    }
  }
}

double task_loss(const ProbeConfig& config, const Matrix& output, const Targets& targets) {
  const double rows = static_cast<double>(output.rows());
  if (config.task == Task::Classify) {
    CompensatedSum sum;
    for (Eigen::Index i = 0; i < output.rows(); ++i) {
      const double mx = output.row(i).maxCoeff();
      const double lse = mx + std::log((output.row(i).array() - mx).exp().sum());
      sum += lse - output(i, targets.labels[static_cast<std::size_t>(i)]);
    }
    return sum.value() / rows;
  }
  return (output - *targets.values).squaredNorm() / (rows * static_cast<double>(output.cols()));
}

// dL/d(output).
Matrix task_loss_gradient(const ProbeConfig& config, const Matrix& output, const Targets& targets) {
  const double rows = static_cast<double>(output.rows());
  if (config.task == Task::Classify) {
    Matrix g = softmax_rows(output);
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, targets.labels[static_cast<std::size_t>(i)]) -= 1.0;
    return g / rows;
  }
  return 2.0 * (output - *targets.values) / (rows * static_cast<double>(output.cols()));
}

}  // namespace

ProbeNetwork init_network(const ProbeConfig& config) {
  validate(config);
  Engine engine = make_engine(derive_seed(config.seed, {1}));
  ProbeNetwork net;
  std::size_t fan_in = config.input_dim;
  for (const std::size_t d : config.hidden_dims) {
    ProbeLayer layer;
    layer.weight = glorot_matrix(d, fan_in, config.init, engine);
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    layer.coupling = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    if (config.coupling_noise) {
      std::normal_distribution<double> noise(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
      for (Eigen::Index i = 0; i < layer.coupling.rows(); ++i)
        for (Eigen::Index j = 0; j < layer.coupling.cols(); ++j)
          if (i != j) layer.coupling(i, j) = noise(engine);
    }
    net.layers.push_back(std::move(layer));
    fan_in = d;
  }
  net.readout = glorot_matrix(config.output_dim, fan_in, config.init, engine);
  return net;
}

ForwardCache forward(const ProbeNetwork& net, const Matrix& batch, CouplingMode mode, Activation activation) {
  if (net.layers.empty()) throw Error(ErrorCode::ShapeMismatch, "network has no hidden layers");
  if (batch.cols() != net.layers.front().weight.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                                              std::to_string(net.layers.front().weight.cols()));
  }
  ForwardCache cache;
  Matrix x = batch;
  for (const ProbeLayer& layer : net.layers) {
    Matrix a = x * layer.weight.transpose();
    a.rowwise() += layer.bias.transpose();
    Matrix h = apply_activation(a, activation);
    Matrix coupled = h * layer.coupling.transpose();
    cache.inputs.push_back(std::move(x));
    cache.preactivation.push_back(std::move(a));
    x = mode == CouplingMode::InBetween ? coupled : h;
    cache.hidden.push_back(std::move(h));
    cache.coupled.push_back(std::move(coupled));
  }
  cache.output = x * net.readout.transpose();
  return cache;
}

ObjectiveParts objective(const ProbeNetwork& net, const ProbeConfig& config, const Matrix& batch,
                         const Targets& targets) {
  check_targets(config, batch, targets);
  const ForwardCache cache = forward(net, batch, config.coupling, config.activation);
  ObjectiveParts parts;
  parts.task = task_loss(config, cache.output, targets);

  double wv = net.readout.squaredNorm();
  double cc = 0.0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    wv += net.layers[l].weight.squaredNorm();
    cc += net.layers[l].coupling.squaredNorm();
    if (config.coupling == CouplingMode::Auxiliary) {
      const Matrix& h = cache.hidden[l];
      parts.side += (cache.coupled[l] - h).squaredNorm() / static_cast<double>(h.size());
    }
  }
  parts.penalty_main = 0.5 * config.l2 * wv;
  parts.penalty_coupling = 0.5 * config.l2 * cc;
  return parts;
}

ProbeNetwork gradients(const ProbeNetwork& net, const ProbeConfig& config, const Matrix& batch,
                       const Targets& targets) {
  check_targets(config, batch, targets);
  const ForwardCache cache = forward(net, batch, config.coupling, config.activation);
  const bool in_between = config.coupling == CouplingMode::InBetween;

  ProbeNetwork grad;
  grad.layers.resize(net.layers.size());

  const Matrix g_out = task_loss_gradient(config, cache.output, targets);
  const Matrix& top = in_between ? cache.coupled.back() : cache.hidden.back();
  grad.readout = g_out.transpose() * top + config.l2 * net.readout;
  Matrix g_x = g_out * net.readout;  // gradient w.r.t. the current layer output

  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const ProbeLayer& layer = net.layers[l];
    const Matrix& h = cache.hidden[l];
    ProbeLayer& g = grad.layers[l];

    Matrix g_h;
    if (in_between) {
      g.coupling = g_x.transpose() * h + config.l2 * layer.coupling;
      g_h = g_x * layer.coupling;
    } else {
      // Probe objective: h is a constant, so nothing flows back into W, b.
      const double scale = 2.0 / static_cast<double>(h.size());
      g.coupling = scale * (cache.coupled[l] - h).transpose() * h + config.l2 * layer.coupling;
      g_h = std::move(g_x);
    }

    const Matrix g_a = (g_h.array() * activation_derivative(h, config.activation).array()).matrix();
    g.weight = g_a.transpose() * cache.inputs[l] + config.l2 * layer.weight;
    g.bias = g_a.colwise().sum().transpose();
    if (l > 0) g_x = g_a * layer.weight;
  }
  return grad;
}

Dataset make_blobs(std::size_t p, std::size_t classes, std::size_t per_class, double separation, std::uint64_t seed) {
  if (classes < 2) throw Error(ErrorCode::InvalidArgument, "blobs need at least 2 classes");
  if (p == 0 || per_class == 0) throw Error(ErrorCode::InvalidArgument, "blobs need p > 0 and per_class > 0");
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < classes) ++bits;

  Matrix means(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(p));
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t j = 0; j < p; ++j) {
      const bool set = (c >> (j % bits)) & 1u;
      means(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) = set ? separation : -separation;
    }
  }

  Engine engine = make_engine(seed);
  std::normal_distribution<double> normal;
  const auto draw = [&](Matrix& x, std::vector<int>& labels) {
    const std::size_t n = classes * per_class;
    x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    labels.resize(n);
    // Classes interleaved so any prefix is roughly balanced.
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = i % classes;
      labels[i] = static_cast<int>(c);
      for (std::size_t j = 0; j < p; ++j) {
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            means(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) + normal(engine);
      }
    }
  };

  Dataset data;
  data.classes = classes;
  draw(data.train_x, data.train_labels);
  draw(data.eval_x, data.eval_labels);
  return data;
}

Dataset split_dataset(const Matrix& x, std::span<const int> labels, double eval_fraction) {
  if (!labels.empty() && labels.size() != static_cast<std::size_t>(x.rows())) {
    throw Error(ErrorCode::ShapeMismatch, "label count does not match the number of rows");
  }
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "eval_fraction must lie in (0, 1)");
  }
  const auto n = x.rows();
  const auto n_eval = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(eval_fraction * n)), 1, n - 1);
  const auto n_train = n - n_eval;
  if (n_train < 1) throw Error(ErrorCode::InvalidArgument, "dataset is too small to split");

  Dataset data;
  data.train_x = x.topRows(n_train);
  data.eval_x = x.bottomRows(n_eval);
  if (!labels.empty()) {
    data.train_labels.assign(labels.begin(), labels.begin() + n_train);
    data.eval_labels.assign(labels.begin() + n_train, labels.end());
    data.classes = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end()) + 1);
  }
  return data;
}

double evaluate(const ProbeNetwork& net, const ProbeConfig& config, const Matrix& x, std::span<const int> labels) {
  const ForwardCache cache = forward(net, x, config.coupling, config.activation);
  if (config.task == Task::Autoencode) {
    return (cache.output - x).squaredNorm() / static_cast<double>(x.size());
  }
  if (labels.size() != static_cast<std::size_t>(x.rows())) {
    throw Error(ErrorCode::ShapeMismatch, "label count does not match the number of rows");
  }
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < cache.output.rows(); ++i) {
    Eigen::Index best = 0;
    cache.output.row(i).maxCoeff(&best);
    if (best == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(x.rows());
}

std::vector<LayerMeasurement> measure_layers(const ProbeNetwork& net, const ProbeConfig& config,
                                             const Matrix& probe_batch) {
  const ForwardCache cache = forward(net, probe_batch, config.coupling, config.activation);
  std::vector<LayerMeasurement> out(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    LayerMeasurement& m = out[l];
    std::string flags;
    try {
      m.rho_weight = rho_from_weights(net.layers[l].coupling).rho_hat;
    } catch (const Error& e) {
      m.rho_weight = std::numeric_limits<double>::quiet_NaN();
      flags += "rho_weight=" + std::string(to_string(e.code()));
    }
    try {
      m.rho_fisher = rho_from_activations(cache.coupled[l]).rho_hat;
    } catch (const Error& e) {
      m.rho_fisher = std::numeric_limits<double>::quiet_NaN();
      if (!flags.empty()) flags += ';';
      flags += "rho_fisher=" + std::string(to_string(e.code()));
    }
    m.error_flag = std::move(flags);
  }
  return out;
}

double rho_mean(std::span<const LayerMeasurement> layers) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const LayerMeasurement& m : layers) {
    if (std::isnan(m.rho_weight)) continue;
    sum += std::max(0.0, m.rho_weight);
    ++count;
  }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(count);
}

namespace {

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

double full_loss(const ProbeNetwork& net, const ProbeConfig& config, const Dataset& data) {
  Targets targets;
  if (config.task == Task::Classify) {
    targets.labels = data.train_labels;
  } else {
    targets.values = &data.train_x;
  }
  return objective(net, config, data.train_x, targets).main(config.coupling);
}

}  // namespace

TrainingTrace train(const ProbeConfig& config, const Dataset& data) {
  validate(config);
  if (data.train_x.rows() == 0) throw Error(ErrorCode::InvalidArgument, "training split is empty");
  if (data.train_x.cols() != static_cast<Eigen::Index>(config.input_dim)) {
    throw Error(ErrorCode::ShapeMismatch, "dataset has " + std::to_string(data.train_x.cols()) +
                                              " features, config expects " + std::to_string(config.input_dim));
  }
  const Matrix& eval_x = data.eval_x.rows() > 0 ? data.eval_x : data.train_x;
  const std::vector<int>& eval_labels = data.eval_x.rows() > 0 ? data.eval_labels : data.train_labels;
  const Matrix probe_batch = eval_x.topRows(std::min<Eigen::Index>(eval_x.rows(), kProbeBatchRows));

  TrainingTrace trace;
  trace.network = init_network(config);
  ProbeNetwork& net = trace.network;

  const auto record = [&](std::size_t epoch, double loss) {
    TraceEpoch e;
    e.epoch = epoch;
    e.loss = loss;
    e.metric = evaluate(net, config, eval_x, eval_labels);
    e.layers = measure_layers(net, config, probe_batch);
    e.rho_mean = rho_mean(e.layers);
    trace.epochs.push_back(std::move(e));
    if (config.keep_snapshots) {
      std::vector<Matrix> cs;
      for (const ProbeLayer& layer : net.layers) cs.push_back(layer.coupling);
      trace.snapshots.push_back(std::move(cs));
    }
  };

  const bool update_coupling =
      !config.freeze_coupling && (config.coupling == CouplingMode::InBetween || config.side_objective);

  record(0, full_loss(net, config, data));

  Engine shuffle_engine = make_engine(derive_seed(config.seed, {2}));
  std::vector<std::size_t> order(static_cast<std::size_t>(data.train_x.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<int> batch_labels;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_engine);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(config.batch_size, order.size() - start));
      const Matrix batch = gather_rows(data.train_x, idx);
      Targets targets;
      if (config.task == Task::Classify) {
        batch_labels.resize(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) batch_labels[i] = data.train_labels[idx[i]];
        targets.labels = batch_labels;
      } else {
        targets.values = &batch;
      }

      const ProbeNetwork g = gradients(net, config, batch, targets);
      const double lr = config.learning_rate;
      for (std::size_t l = 0; l < net.layers.size(); ++l) {
        net.layers[l].weight -= lr * g.layers[l].weight;
        net.layers[l].bias -= lr * g.layers[l].bias;
        if (update_coupling) net.layers[l].coupling -= lr * g.layers[l].coupling;
      }
      net.readout -= lr * g.readout;
    }

    const double loss = full_loss(net, config, data);
    if (!std::isfinite(loss)) {
      throw DivergedLossError("training loss became non-finite at epoch " + std::to_string(epoch), std::move(trace));
    }
    record(epoch, loss);
  }
  return trace;
}

}  // namespace rhoindex
