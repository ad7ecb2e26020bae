// rhoindex: command-line front end for the redundancy-index toolkit.
//
// Exit codes: 0 success, 1 I/O error, 2 validation error, 3 numerical
// divergence during training.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rhoindex/dimension_study.hpp"
#include "rhoindex/divergence.hpp"
#include "rhoindex/estimator.hpp"
#include "rhoindex/matrix_io.hpp"
#include "rhoindex/probe.hpp"
#include "rhoindex/report.hpp"
#include "rhoindex/sweep.hpp"

namespace fs = std::filesystem;
using namespace rhoindex;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitDiverged = 3;

int exit_code_for(const Error& e) {
  switch (category(e.code())) {
    case ErrorCategory::Io: return kExitIo;
    case ErrorCategory::Validation: return kExitValidation;
    case ErrorCategory::Numerical: return kExitDiverged;
  }
  return kExitIo;
}

struct RhoArgs {
  std::string input;
  std::string format;
  std::string path;
  std::string mode = "all-pairs";
  std::string out;
  std::string out_format = "csv";
};

struct DimscanArgs {
  std::vector<std::size_t> dims = kDefaultDims;
  std::size_t trials = 100;
  std::string symmetry = "nonsym";
  std::string budget = "single";
  std::uint64_t seed = 0;
  std::string out;
};

struct DivergenceArgs {
  std::size_t samples = 2000;
  std::uint64_t seed = 0;
  std::size_t mmd_max_samples = 2000;
  std::string out;
  std::string out_format = "csv";
};

struct DataArgs {
  std::string data = "blobs";
  std::string labels;
  std::size_t blob_dim = 8;
  std::size_t blob_classes = 2;
  std::size_t blob_per_class = 256;
  double blob_separation = 2.0;
  std::uint64_t data_seed = 0;
  double eval_fraction = 0.2;
};

struct ProbeArgs {
  std::string task = "classify";
  std::string coupling = "in-between";
  std::vector<std::size_t> hidden = {96};
  std::string activation = "tanh";
  std::string init = "uniform";
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  bool freeze_coupling = false;
  bool no_side_objective = false;
};

struct TrainArgs {
  std::string trace;
  std::string out_format = "csv";
};

struct SweepArgs {
  std::string space;
  std::size_t trials = 32;
  std::uint64_t seed = 0;
  std::string out;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--data", a.data, "blobs | idx:IMAGES_PATH")->capture_default_str();
  cmd->add_option("--labels", a.labels, "IDX label file (classification on IDX data)");
  cmd->add_option("--blob-dim", a.blob_dim, "blob feature dimension")->capture_default_str();
  cmd->add_option("--blob-classes", a.blob_classes, "number of blob classes")->capture_default_str();
  cmd->add_option("--blob-per-class", a.blob_per_class, "points per class and split")->capture_default_str();
  cmd->add_option("--blob-separation", a.blob_separation, "blob mean separation")->capture_default_str();
  cmd->add_option("--data-seed", a.data_seed, "seed for blob generation")->capture_default_str();
  cmd->add_option("--eval-fraction", a.eval_fraction, "eval share of IDX rows")->capture_default_str();
}

void add_probe_options(CLI::App* cmd, ProbeArgs& a) {
  cmd->add_option("--task", a.task, "classify | autoencode")->capture_default_str();
  cmd->add_option("--coupling", a.coupling, "in-between | auxiliary")->capture_default_str();
  cmd->add_option("--hidden", a.hidden, "hidden widths, comma separated")->delimiter(',')->capture_default_str();
  cmd->add_option("--activation", a.activation, "tanh | logistic")->capture_default_str();
  cmd->add_option("--init", a.init, "uniform | normal (Glorot)")->capture_default_str();
  cmd->add_option("--lr", a.learning_rate, "SGD learning rate")->capture_default_str();
  cmd->add_option("--batch-size", a.batch_size, "mini-batch size")->capture_default_str();
  cmd->add_option("--epochs", a.epochs, "training epochs")->capture_default_str();
  cmd->add_option("--l2", a.l2, "L2 penalty on W, V, C")->capture_default_str();
  cmd->add_option("--seed", a.seed, "initialization and shuffling seed")->capture_default_str();
  cmd->add_flag("--freeze-coupling", a.freeze_coupling, "keep C at its initial value");
  cmd->add_flag("--no-side-objective", a.no_side_objective, "auxiliary mode: do not fit C");
}

Dataset load_dataset(const DataArgs& a, Task task) {
  if (a.data == "blobs") {
    return make_blobs(a.blob_dim, a.blob_classes, a.blob_per_class, a.blob_separation, a.data_seed);
  }
  if (a.data.starts_with("idx:")) {
    const Matrix images = read_idx_images(a.data.substr(4));
    std::vector<int> labels;
    if (!a.labels.empty()) {
      labels = read_idx_labels(a.labels);
    } else if (task == Task::Classify) {
      throw Error(ErrorCode::InvalidArgument, "classification on IDX data requires --labels");
    }
    return split_dataset(images, labels, a.eval_fraction);
  }
  throw Error(ErrorCode::InvalidArgument, "--data must be 'blobs' or 'idx:PATH'");
}

ProbeConfig make_probe_config(const ProbeArgs& a, const Dataset& data) {
  ProbeConfig c;
  c.task = task_from_string(a.task);
  c.coupling = coupling_from_string(a.coupling);
  c.input_dim = static_cast<std::size_t>(data.train_x.cols());
  c.hidden_dims = a.hidden;
  c.output_dim = c.task == Task::Autoencode ? c.input_dim : std::max<std::size_t>(data.classes, 2);
  c.activation = activation_from_string(a.activation);
  c.init = init_from_string(a.init);
  c.learning_rate = a.learning_rate;
  c.batch_size = a.batch_size;
  c.epochs = a.epochs;
  c.l2 = a.l2;
  c.seed = a.seed;
  c.freeze_coupling = a.freeze_coupling;
  c.side_objective = !a.no_side_objective;
  validate(c);
  return c;
}

MatrixFormat infer_format(const std::string& explicit_format, const std::string& path) {
  if (!explicit_format.empty()) return matrix_format_from_string(explicit_format);
  return fs::path(path).extension() == ".npy" ? MatrixFormat::Npy : MatrixFormat::Csv;
}

int run_rho(const RhoArgs& a) {
  const MatrixFormat format = infer_format(a.format, a.input);
  const ReportFormat out_format = report_format_from_string(a.out_format);
  if (a.mode != "all-pairs" && a.mode != "upper") throw Error(ErrorCode::InvalidArgument, "--mode must be all-pairs or upper");
  const ExtractionMode mode = a.mode == "upper" ? ExtractionMode::UpperTriangle : ExtractionMode::AllPairs;

  std::cout << "rho: input=" << a.input << " format=" << (format == MatrixFormat::Npy ? "npy" : "csv")
            << " path=" << a.path << " mode=" << (a.path == "activations" ? "upper" : a.mode) << " out=" << a.out
            << " out-format=" << a.out_format << " seed=none\n";

  RhoEstimate estimate;
  if (a.path == "weights") {
    estimate = rho_from_weights(read_coupling_matrix(a.input, format), mode);
  } else if (a.path == "activations") {
    estimate = rho_from_activations(read_matrix(a.input, format));
  } else {
    throw Error(ErrorCode::InvalidArgument, "--path must be weights or activations");
  }
  write_report(std::span<const RhoEstimate>(&estimate, 1), a.out, out_format);

  std::printf("rho_hat=%.10g rho_hat_plus=%.10g m=%zu\n", estimate.rho_hat, estimate.rho_hat_plus, estimate.m);
  return kExitOk;
}

int run_dimscan_cmd(const DimscanArgs& a) {
  DimScanConfig config;
  config.dims = a.dims;
  config.trials = a.trials;
  config.master_seed = a.seed;
  if (a.symmetry == "sym") {
    config.symmetry = Symmetry::Symmetric;
  } else if (a.symmetry == "nonsym") {
    config.symmetry = Symmetry::Nonsymmetric;
  } else if (a.symmetry == "both") {
    config.symmetry = Symmetry::Both;
  } else {
    throw Error(ErrorCode::InvalidArgument, "--symmetry must be sym, nonsym or both");
  }
  if (a.budget == "single") {
    config.budget = BudgetMode::SingleMatrix;
  } else if (a.budget == "fixed-total") {
    config.budget = BudgetMode::FixedTotal;
  } else {
    throw Error(ErrorCode::InvalidArgument, "--budget must be single or fixed-total");
  }

  std::string dims;
  for (const std::size_t n : config.dims) dims += (dims.empty() ? "" : ",") + std::to_string(n);
  std::cout << "dimscan: dims=" << dims << " trials=" << a.trials << " symmetry=" << a.symmetry
            << " budget=" << a.budget << " seed=" << a.seed << " out=" << a.out << "\n";

  const std::vector<DimScanRecord> records = run_dimscan(config);
  const std::vector<DimScanSummary> summary = summarize_dimscan(records);
  fs::path summary_path = a.out;
  summary_path.replace_extension(".summary.csv");
  write_report(std::span<const DimScanRecord>(records), a.out, ReportFormat::Csv);
  write_report(std::span<const DimScanSummary>(summary), summary_path, ReportFormat::Csv);

  for (const DimScanSummary& s : summary) {
    std::printf("n=%zu symmetric=%d mean=%.3e std=%.3e q05=%.3e q95=%.3e\n", s.n, s.symmetric ? 1 : 0, s.mean,
                s.stddev, s.q05, s.q95);
  }
  std::cout << "summary written to " << summary_path.string() << "\n";
  return kExitOk;
}

int run_divergence_cmd(const DivergenceArgs& a) {
  std::cout << "divergence: samples=" << a.samples << " seed=" << a.seed << " mmd-max-samples=" << a.mmd_max_samples
            << " out=" << a.out << " out-format=" << a.out_format << "\n"
            << "note: student_t3 is drawn at its natural scale (variance 3)\n";
  const ReportFormat out_format = report_format_from_string(a.out_format);
  const std::vector<DivergenceReport> rows = divergence_table(a.samples, a.seed, {a.mmd_max_samples});
  write_report(std::span<const DivergenceReport>(rows), a.out, out_format);
  for (const DivergenceReport& r : rows) {
    std::printf("%-20s ED=%+.4f MMD=%+.4f skew2=%.3f excess2=%.3f W2=%.3f\n", std::string(to_string(r.distribution)).c_str(),
                r.energy_distance, r.mmd_rbf, r.mardia_skew2, r.mardia_excess2, r.wasserstein2);
  }
  return kExitOk;
}

void write_trace(const TrainingTrace& trace, const std::string& path, ReportFormat format) {
  const std::vector<TraceRow> rows = flatten_trace(trace.epochs);
  write_report(std::span<const TraceRow>(rows), path, format);
}

int run_train_cmd(const ProbeArgs& p, const DataArgs& d, const TrainArgs& t) {
  const ReportFormat out_format = report_format_from_string(t.out_format);
  const Dataset data = load_dataset(d, task_from_string(p.task));
  const ProbeConfig config = make_probe_config(p, data);
  std::cout << "train: " << describe(config) << " data=" << d.data << " data-seed=" << d.data_seed
            << " trace=" << t.trace << "\n";
  try {
    const TrainingTrace trace = train(config, data);
    write_trace(trace, t.trace, out_format);
    const TraceEpoch& last = trace.epochs.back();
    std::printf("final epoch=%zu loss=%.6g metric=%.6g rho_mean=%.6g\n", last.epoch, last.loss, last.metric,
                last.rho_mean);
  } catch (const DivergedLossError& e) {
    write_trace(e.partial(), t.trace, out_format);
    std::cerr << "error: " << e.what() << " (partial trace written to " << t.trace << ")\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int run_sweep_cmd(const ProbeArgs& p, const DataArgs& d, const SweepArgs& s) {
  const SweepSpace space = s.space.empty() ? default_sweep_space() : parse_sweep_space(read_file_bytes(s.space));
  const Dataset data = load_dataset(d, task_from_string(p.task));
  const ProbeConfig base = make_probe_config(p, data);
  std::cout << "sweep: trials=" << s.trials << " seed=" << s.seed << " space=" << (s.space.empty() ? "default" : s.space)
            << " data=" << d.data << " data-seed=" << d.data_seed << " out=" << s.out << "\n"
            << "base: " << describe(base) << "\n";
  const std::vector<SweepRow> rows = sweep(space, base, data, s.trials, s.seed);
  write_report(std::span<const SweepRow>(rows), s.out, ReportFormat::Csv);

  std::vector<double> rho, metric;
  std::size_t failed = 0;
  for (const SweepRow& r : rows) {
    rho.push_back(r.rho_mean);
    metric.push_back(r.metric);
    if (!r.error_flag.empty()) ++failed;
  }
  std::printf("trials=%zu flagged=%zu spearman(rho_mean, metric)=%.4f\n", rows.size(), failed, spearman(rho, metric));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-distance redundancy index toolkit"};
  app.require_subcommand(1);

  RhoArgs rho;
  auto* rho_cmd = app.add_subcommand("rho", "redundancy index of one matrix");
  rho_cmd->add_option("--input", rho.input, "matrix file")->required();
  rho_cmd->add_option("--format", rho.format, "csv | npy (default: from extension)");
  rho_cmd->add_option("--path", rho.path, "weights | activations")->required();
  rho_cmd->add_option("--mode", rho.mode, "all-pairs | upper (weights path)")->capture_default_str();
  rho_cmd->add_option("--out", rho.out, "report file")->required();
  rho_cmd->add_option("--out-format", rho.out_format, "csv | json")->capture_default_str();

  DimscanArgs dim;
  auto* dim_cmd = app.add_subcommand("dimscan", "Monte Carlo scan of the estimator across dimensions");
  dim_cmd->add_option("--dims", dim.dims, "comma-separated dimensions")->delimiter(',')->capture_default_str();
  dim_cmd->add_option("--trials", dim.trials, "trials per dimension")->capture_default_str();
  dim_cmd->add_option("--symmetry", dim.symmetry, "sym | nonsym | both")->capture_default_str();
  dim_cmd->add_option("--budget", dim.budget, "single | fixed-total")->capture_default_str();
  dim_cmd->add_option("--seed", dim.seed, "master seed")->capture_default_str();
  dim_cmd->add_option("--out", dim.out, "records CSV (summary goes to *.summary.csv)")->required();

  DivergenceArgs div;
  auto* div_cmd = app.add_subcommand("divergence", "divergence-from-normality table");
  div_cmd->add_option("--samples", div.samples, "sample size per distribution")->capture_default_str();
  div_cmd->add_option("--seed", div.seed, "table seed")->capture_default_str();
  div_cmd->add_option("--mmd-max-samples", div.mmd_max_samples, "cap on points used for MMD (0 = all)")
      ->capture_default_str();
  div_cmd->add_option("--out", div.out, "report file")->required();
  div_cmd->add_option("--out-format", div.out_format, "csv | json")->capture_default_str();

  ProbeArgs train_probe;
  DataArgs train_data;
  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a coupling-probe network and trace rho per epoch");
  add_probe_options(train_cmd, train_probe);
  add_data_options(train_cmd, train_data);
  train_cmd->add_option("--trace", train_args.trace, "trace file")->required();
  train_cmd->add_option("--out-format", train_args.out_format, "csv | json")->capture_default_str();

  ProbeArgs sweep_probe;
  DataArgs sweep_data;
  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "random-search sweep emitting rho-vs-metric rows");
  add_probe_options(sweep_cmd, sweep_probe);
  add_data_options(sweep_cmd, sweep_data);
  sweep_cmd->add_option("--space", sweep_args.space, "sweep space file");
  sweep_cmd->add_option("--trials", sweep_args.trials, "number of trials")->capture_default_str();
  sweep_cmd->add_option("--sweep-seed", sweep_args.seed, "sweep seed")->capture_default_str();
  sweep_cmd->add_option("--out", sweep_args.out, "sweep CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*rho_cmd) return run_rho(rho);
    if (*dim_cmd) return run_dimscan_cmd(dim);
    if (*div_cmd) return run_divergence_cmd(div);
    if (*train_cmd) return run_train_cmd(train_probe, train_data, train_args);
    if (*sweep_cmd) return run_sweep_cmd(sweep_probe, sweep_data, sweep_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitValidation;
}
