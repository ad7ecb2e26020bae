#include "rhoindex/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "rhoindex/numeric.hpp"

namespace rhoindex {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& token, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used == token.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ParseError, "sweep space line " + std::to_string(line) + ": bad number '" + token + "'");
}

long long to_integer(const std::string& token) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(ErrorCode::ParseError, "bad integer '" + token + "'");
  }
  return v;
}

std::string draw(const ParamRange& range, Engine& engine) {
  switch (range.kind) {
    case ParamRange::Kind::Fixed:
      return range.choices.front();
    case ParamRange::Kind::Choice: {
      std::uniform_int_distribution<std::size_t> pick(0, range.choices.size() - 1);
      return range.choices[pick(engine)];
    }
    case ParamRange::Kind::Uniform: {
      std::uniform_real_distribution<double> u(range.lo, range.hi);
      std::ostringstream os;
      os.precision(17);
      os << u(engine);
      return os.str();
    }
    case ParamRange::Kind::LogUniform: {
      std::uniform_real_distribution<double> u(std::log(range.lo), std::log(range.hi));
      std::ostringstream os;
      os.precision(17);
      os << std::exp(u(engine));
      return os.str();
    }
    case ParamRange::Kind::Int: {
      const auto lo = static_cast<long long>(range.lo);
      const auto hi = static_cast<long long>(range.hi);
      std::uniform_int_distribution<long long> pick(0, (hi - lo) / range.step);
      return std::to_string(lo + pick(engine) * range.step);
    }
  }
  return {};
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

const std::vector<std::string>& sweep_space_keys() {
  static const std::vector<std::string> keys = {"task",   "coupling",  "learning_rate", "batch_size", "activation",
                                                "init",   "layers",    "hidden",        "l2_option",  "l2",
                                                "epochs"};
  return keys;
}

SweepSpace parse_sweep_space(std::string_view text) {
  SweepSpace space;
  std::size_t line_no = 0;
  const auto& keys = sweep_space_keys();
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    const auto fail = [&](const std::string& what) {
      throw Error(ErrorCode::ParseError, "sweep space line " + std::to_string(line_no) + ": " + what);
    };
    if (eq == std::string_view::npos) fail("expected 'key = spec'");
    const std::string key(trim(line.substr(0, eq)));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) fail("unknown key '" + key + "'");

    std::istringstream spec{std::string(line.substr(eq + 1))};
    std::string kind;
    spec >> kind;
    std::vector<std::string> args;
    for (std::string tok; spec >> tok;) args.push_back(tok);

    ParamRange range;
    if (kind == "fixed") {
      if (args.size() != 1) fail("fixed takes exactly one value");
      range.kind = ParamRange::Kind::Fixed;
      range.choices = args;
    } else if (kind == "choice") {
      if (args.empty()) fail("choice needs at least one option");
      range.kind = ParamRange::Kind::Choice;
      range.choices = args;
    } else if (kind == "uniform" || kind == "loguniform") {
      if (args.size() != 2) fail(kind + " takes LO HI");
      range.kind = kind == "uniform" ? ParamRange::Kind::Uniform : ParamRange::Kind::LogUniform;
      range.lo = to_double(args[0], line_no);
      range.hi = to_double(args[1], line_no);
      if (!(range.lo <= range.hi)) fail("LO must not exceed HI");
      if (range.kind == ParamRange::Kind::LogUniform && !(range.lo > 0.0)) fail("loguniform needs LO > 0");
    } else if (kind == "int") {
      if (args.size() != 2 && args.size() != 3) fail("int takes LO HI [STEP]");
      range.kind = ParamRange::Kind::Int;
      range.lo = static_cast<double>(to_integer(args[0]));
      range.hi = static_cast<double>(to_integer(args[1]));
      range.step = args.size() == 3 ? to_integer(args[2]) : 1;
      if (range.step <= 0 || range.lo > range.hi) fail("int range needs LO <= HI and STEP > 0");
    } else {
      fail("unknown range kind '" + kind + "'");
    }
    space.params[key] = std::move(range);
  }
  return space;
}

SweepSpace default_sweep_space() {
  return parse_sweep_space(
      "learning_rate = loguniform 1e-3 1.0\n"
      "batch_size = choice 20 100\n"
      "activation = choice tanh logistic\n"
      "init = choice uniform normal\n"
      "layers = int 1 1\n"
      "hidden = int 16 128 16\n"
      "l2_option = choice zero nz\n"
      "l2 = loguniform 1e-8 1e-2\n"
      "epochs = fixed 100\n");
}

std::uint64_t sweep_trial_seed(std::uint64_t sweep_seed, std::size_t trial) noexcept {
  return derive_seed(sweep_seed, {0x5eedULL, trial});
}

ProbeConfig sample_config(const SweepSpace& space, const ProbeConfig& base, std::uint64_t sweep_seed,
                          std::size_t trial) {
  Engine engine = make_engine(sweep_trial_seed(sweep_seed, trial));
  ProbeConfig c = base;
  c.seed = derive_seed(sweep_seed, {0xc0f1ULL, trial});

  std::map<std::string, std::string> drawn;
  for (const std::string& key : sweep_space_keys()) {
    const auto it = space.params.find(key);
    if (it == space.params.end()) continue;
    if (key == "hidden") continue;  // drawn per layer below
    drawn[key] = draw(it->second, engine);
  }

  if (auto it = drawn.find("task"); it != drawn.end()) c.task = task_from_string(it->second);
  if (auto it = drawn.find("coupling"); it != drawn.end()) c.coupling = coupling_from_string(it->second);
  if (auto it = drawn.find("learning_rate"); it != drawn.end()) c.learning_rate = std::stod(it->second);
  if (auto it = drawn.find("batch_size"); it != drawn.end()) c.batch_size = static_cast<std::size_t>(to_integer(it->second));
  if (auto it = drawn.find("activation"); it != drawn.end()) c.activation = activation_from_string(it->second);
  if (auto it = drawn.find("init"); it != drawn.end()) c.init = init_from_string(it->second);
  if (auto it = drawn.find("epochs"); it != drawn.end()) c.epochs = static_cast<std::size_t>(to_integer(it->second));

  std::size_t layers = c.hidden_dims.size();
  if (auto it = drawn.find("layers"); it != drawn.end()) layers = static_cast<std::size_t>(to_integer(it->second));
  if (const auto it = space.params.find("hidden"); it != space.params.end()) {
    c.hidden_dims.clear();
    for (std::size_t l = 0; l < layers; ++l) {
      c.hidden_dims.push_back(static_cast<std::size_t>(to_integer(draw(it->second, engine))));
    }
  } else {
    c.hidden_dims.resize(layers, c.hidden_dims.empty() ? 96 : c.hidden_dims.back());
  }

  const auto l2_it = drawn.find("l2");
  const auto opt_it = drawn.find("l2_option");
  if (opt_it != drawn.end()) {
    if (opt_it->second == "zero") {
      c.l2 = 0.0;
    } else if (opt_it->second == "nz") {
      if (l2_it == drawn.end()) throw Error(ErrorCode::ParseError, "l2_option = nz requires an l2 range");
      c.l2 = std::stod(l2_it->second);
    } else {
      throw Error(ErrorCode::ParseError, "l2_option must be zero or nz");
    }
  } else if (l2_it != drawn.end()) {
    c.l2 = std::stod(l2_it->second);
  }
  if (c.task == Task::Autoencode) c.output_dim = c.input_dim;

  validate(c);
  return c;
}

SweepRow run_sweep_trial(const SweepSpace& space, const ProbeConfig& base, const Dataset& data,
                         std::uint64_t sweep_seed, std::size_t trial) {
  SweepRow row;
  row.trial = trial;
  row.config = sample_config(space, base, sweep_seed, trial);
  row.digest = config_digest(row.config);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  const auto fill = [&](const TrainingTrace& trace) {
    const TraceEpoch& last = trace.epochs.back();
    row.metric = last.metric;
    row.rho_mean = last.rho_mean;
    row.layer_rho.clear();
    for (const LayerMeasurement& m : last.layers) row.layer_rho.push_back(m.rho_weight);
    for (const LayerMeasurement& m : last.layers) {
      if (m.error_flag.empty()) continue;
      if (!row.error_flag.empty()) row.error_flag += ';';
      row.error_flag += m.error_flag;
    }
  };

  try {
    fill(train(row.config, data));
  } catch (const DivergedLossError&) {
    row.metric = nan;
    row.rho_mean = nan;
    row.layer_rho.assign(row.config.hidden_dims.size(), nan);
    row.error_flag = "DivergedLoss";
  } catch (const Error& e) {
    row.metric = nan;
    row.rho_mean = nan;
    row.layer_rho.assign(row.config.hidden_dims.size(), nan);
    row.error_flag = std::string(to_string(e.code()));
  }
  return row;
}

std::vector<SweepRow> sweep(const SweepSpace& space, const ProbeConfig& base, const Dataset& data, std::size_t trials,
                            std::uint64_t sweep_seed) {
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "a sweep needs at least one trial");
  std::vector<SweepRow> rows;
  rows.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) rows.push_back(run_sweep_trial(space, base, data, sweep_seed, t));
  return rows;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (x.size() != y.size()) throw Error(ErrorCode::ShapeMismatch, "spearman inputs differ in length");
  std::vector<double> a, b;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(y[i])) {
      a.push_back(x[i]);
      b.push_back(y[i]);
    }
  }
  if (a.size() < 2) return nan;
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(ra.size());
  const double mean = (n + 1.0) / 2.0;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - mean) * (rb[i] - mean);
    saa += (ra[i] - mean) * (ra[i] - mean);
    sbb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (saa == 0.0 || sbb == 0.0) return nan;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace rhoindex
