#pragma once

// Random-search sweeps over probe-network hyperparameters.
//
// A sweep space is a flat text file, one `key = spec` per line, '#' comments:
//
//   learning_rate = loguniform 1e-3 1.0
//   batch_size    = choice 20 100
//   activation    = choice tanh logistic
//   init          = choice uniform normal
//   layers        = int 1 1
//   hidden        = int 16 128 16        # lo hi [step]
//   l2_option     = choice zero nz
//   l2            = loguniform 1e-8 1e-2 # used when l2_option = nz
//   epochs        = fixed 30
//
// Spec kinds: fixed V | choice A B ... | uniform LO HI | loguniform LO HI |
// int LO HI [STEP]. Keys not listed keep the base configuration's value.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rhoindex/probe.hpp"

namespace rhoindex {

struct ParamRange {
  enum class Kind { Fixed, Choice, Uniform, LogUniform, Int };
  Kind kind = Kind::Fixed;
  std::vector<std::string> choices;  // Fixed (one entry) and Choice
  double lo = 0.0;
  double hi = 0.0;
  long long step = 1;
};

struct SweepSpace {
  std::map<std::string, ParamRange> params;
};

/// Keys understood by `sample_config`, in sampling order.
const std::vector<std::string>& sweep_space_keys();

SweepSpace parse_sweep_space(std::string_view text);

/// Reduced hyperparameter space used when no space file is given.
SweepSpace default_sweep_space();

std::uint64_t sweep_trial_seed(std::uint64_t sweep_seed, std::size_t trial) noexcept;

ProbeConfig sample_config(const SweepSpace& space, const ProbeConfig& base, std::uint64_t sweep_seed, std::size_t trial);

struct SweepRow {
  std::size_t trial = 0;
  ProbeConfig config;
  std::string digest;
  double metric = 0.0;
  double rho_mean = 0.0;
  std::vector<double> layer_rho;  // final rho_weight per coupling layer
  std::string error_flag;
};

SweepRow run_sweep_trial(const SweepSpace& space, const ProbeConfig& base, const Dataset& data, std::uint64_t sweep_seed,
                         std::size_t trial);

/// One row per trial; failures are flagged in the row.
std::vector<SweepRow> sweep(const SweepSpace& space, const ProbeConfig& base, const Dataset& data, std::size_t trials,
                            std::uint64_t sweep_seed);

/// Spearman rank correlation with average ranks for ties; pairs with a
/// non-finite member are dropped. NaN if fewer than 2 pairs remain or a
/// variable is constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace rhoindex
