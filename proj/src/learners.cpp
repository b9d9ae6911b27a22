// Copyright 2026 The mpmab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mpmab/learners.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mpmab/errors.hpp"

namespace mpmab {

void check_distribution(std::span<const double> p, double tolerance) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw ValidationError(fmt::format("probability {} is negative or NaN", x));
    total += x;
  }
  if (std::abs(total - 1.0) > tolerance) {
    throw ValidationError(fmt::format("probabilities sum to {:.17g}, not 1", total));
  }
}

int dyadic_epoch(long long t) {
  if (t < 1) throw ConfigError("rounds start at 1");
  int j = 0;
  while ((1LL << j) < t) ++j;
  return j;
}

double anytime_learning_rate(long long t, int support_size) {
  if (support_size < 1) throw ConfigError("learning rate needs a nonempty support");
  const double scale = std::ldexp(1.0, dyadic_epoch(t));
  return std::sqrt(std::log(static_cast<double>(support_size)) / (support_size * scale));
}

// -- Exp3 -------------------------------------------------------------------

Exp3::Exp3(std::vector<Arm> support, double eta)
    : support_(std::move(support)), cumulative_(support_.size(), 0.0), fixed_eta_(eta) {
  if (support_.empty()) throw ConfigError("Exp3 needs a nonempty support");
  if (!(eta >= 0.0)) throw ConfigError("Exp3 learning rate must be nonnegative");
}

Exp3 Exp3::anytime(std::vector<Arm> support) {
  Exp3 e(std::move(support), 0.0);
  e.anytime_ = true;
  return e;
}

double Exp3::eta() const { return anytime_ ? anytime_learning_rate(round_, size()) : fixed_eta_; }

int Exp3::index_of(Arm a) const {
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (support_[i] == a) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> Exp3::local_probabilities() const {
  const double lr = eta();
  const double lowest = *std::min_element(cumulative_.begin(), cumulative_.end());
  std::vector<double> p(cumulative_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(-lr * (cumulative_[i] - lowest));
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

double Exp3::probability(Arm a) const {
  const int i = index_of(a);
  return i < 0 ? 0.0 : local_probabilities()[i];
}

Distribution Exp3::distribution(int arms) const {
  Distribution d(arms, 0.0);
  const auto p = local_probabilities();
  for (std::size_t i = 0; i < p.size(); ++i) d[support_[i].slot()] = p[i];
  return d;
}

Arm Exp3::sample(RngStream& rng) const { return support_[rng.categorical(local_probabilities())]; }

void Exp3::update(Arm played, double loss) {
  const int i = index_of(played);
  if (i < 0) throw ConfigError(fmt::format("arm {} is not in the Exp3 support", played.value));
  if (!(loss >= 0.0)) throw ConfigError("loss estimates must be nonnegative");
  cumulative_[i] += loss / local_probabilities()[i];
  advance();
}

void Exp3::add_estimate(Arm arm, double estimate) {
  const int i = index_of(arm);
  if (i < 0) throw ConfigError(fmt::format("arm {} is not in the Exp3 support", arm.value));
  if (!(estimate >= 0.0)) throw ConfigError("loss estimates must be nonnegative");
  cumulative_[i] += estimate;
}

void Exp3::advance() {
  ++round_;
  if (anytime_ && dyadic_epoch(round_) != dyadic_epoch(round_ - 1)) {
    std::fill(cumulative_.begin(), cumulative_.end(), 0.0);
  }
}

// -- Stationary distribution ------------------------------------------------

namespace {

double residual_l1(std::span<const double> m, int n, const std::vector<double>& p, std::vector<double>& next) {
  std::fill(next.begin(), next.end(), 0.0);
  for (int i = 0; i < n; ++i) {
    const double pi = p[i];
    if (pi == 0.0) continue;
    const double* row = m.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) next[j] += pi * row[j];
  }
  double r = 0.0;
  for (int j = 0; j < n; ++j) r += std::abs(next[j] - p[j]);
  return r;
}

constexpr int kMaxPowerIterations = 100000;
constexpr double kStationaryTarget = 1e-9;
constexpr int kDirectSolveLimit = 64;

}  // namespace

std::vector<double> stationary_distribution(std::span<const double> matrix, int n) {
  if (n < 1 || matrix.size() != static_cast<std::size_t>(n) * n) {
    throw ValidationError("stationary_distribution needs an n x n matrix");
  }
  for (int i = 0; i < n; ++i) {
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      const double x = matrix[static_cast<std::size_t>(i) * n + j];
      if (!(x >= 0.0)) throw ValidationError(fmt::format("matrix entry ({},{}) = {} is negative", i, j, x));
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError(fmt::format("row {} sums to {:.17g}", i, total));
  }

  std::vector<double> p(n, 1.0 / n), next(n);
  for (int it = 0; it < kMaxPowerIterations; ++it) {
    const double r = residual_l1(matrix, n, p, next);
    if (r <= 1e-13) return p;
    double total = 0.0;
    for (double x : next) total += x;
    for (int j = 0; j < n; ++j) p[j] = next[j] / total;
  }
  if (residual_l1(matrix, n, p, next) <= kStationaryTarget) return p;
  if (n > kDirectSolveLimit) throw ValidationError("power iteration did not converge");

  Eigen::MatrixXd a(n + 1, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(j, i) = matrix[static_cast<std::size_t>(i) * n + j] - (i == j ? 1.0 : 0.0);
  }
  a.row(n).setOnes();
  b(n) = 1.0;
  const Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    p[j] = std::max(0.0, x(j));
    total += p[j];
  }
  for (double& v : p) v /= total;
  if (residual_l1(matrix, n, p, next) > kStationaryTarget) {
    throw ValidationError("no stationary distribution found within tolerance");
  }
  return p;
}

// -- Swap regret ------------------------------------------------------------

SwapRegretLearner::SwapRegretLearner(std::vector<Arm> support) : support_(std::move(support)) {
  if (support_.empty()) throw ConfigError("swap-regret learner needs a nonempty support");
  instances_.reserve(support_.size());
  for (std::size_t i = 0; i < support_.size(); ++i) instances_.push_back(Exp3::anytime(support_));
  recombine();
}

SwapRegretLearner::SwapRegretLearner(std::vector<Arm> support, double eta) : support_(std::move(support)) {
  if (support_.empty()) throw ConfigError("swap-regret learner needs a nonempty support");
  instances_.reserve(support_.size());
  for (std::size_t i = 0; i < support_.size(); ++i) instances_.emplace_back(support_, eta);
  recombine();
}

double SwapRegretLearner::tuned_rate(int n, long long rounds) {
  if (n < 1 || rounds < 1) throw ConfigError("tuned rate needs n >= 1 and rounds >= 1");
  if (n == 1) return 1.0;
  return std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(rounds));
}

int SwapRegretLearner::index_of(Arm a) const {
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (support_[i] == a) return static_cast<int>(i);
  }
  return -1;
}

double SwapRegretLearner::probability(Arm a) const {
  const int i = index_of(a);
  return i < 0 ? 0.0 : combined_[i];
}

Distribution SwapRegretLearner::distribution(int arms) const {
  Distribution d(arms, 0.0);
  for (std::size_t i = 0; i < support_.size(); ++i) d[support_[i].slot()] = combined_[i];
  return d;
}

Arm SwapRegretLearner::sample(RngStream& rng) const { return support_[rng.categorical(combined_)]; }

void SwapRegretLearner::update(Arm played, double loss) {
  const int i = index_of(played);
  if (i < 0) throw ConfigError(fmt::format("arm {} is not in the learner support", played.value));
  apply_estimate(played, loss / combined_[i]);
}

void SwapRegretLearner::apply_estimate(Arm played, double estimate) {
  if (index_of(played) < 0) throw ConfigError(fmt::format("arm {} is not in the learner support", played.value));
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    instances_[i].add_estimate(played, combined_[i] * estimate);
    instances_[i].advance();
  }
  recombine();
}

void SwapRegretLearner::recombine() {
  const int n = static_cast<int>(support_.size());
  std::vector<double> m(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const auto row = instances_[i].local_probabilities();
    std::copy(row.begin(), row.end(), m.begin() + static_cast<std::ptrdiff_t>(i) * n);
  }
  combined_ = stationary_distribution(m, n);
}

// -- Realized regret --------------------------------------------------------

double external_regret(std::span<const Arm> actions, const LossSequence& losses, std::span<const Arm> support) {
  if (static_cast<long long>(actions.size()) != losses.horizon()) throw ConfigError("one action per loss row");
  double incurred = 0.0;
  std::vector<double> fixed(support.size(), 0.0);
  for (long long t = 1; t <= losses.horizon(); ++t) {
    incurred += losses.loss(t, actions[t - 1]);
    for (std::size_t k = 0; k < support.size(); ++k) fixed[k] += losses.loss(t, support[k]);
  }
  return incurred - *std::min_element(fixed.begin(), fixed.end());
}

double swap_regret(std::span<const Arm> actions, const LossSequence& losses, std::span<const Arm> support) {
  if (static_cast<long long>(actions.size()) != losses.horizon()) throw ConfigError("one action per loss row");
  const int n = static_cast<int>(support.size());
  if (n < 1 || n > 8) throw ConfigError("swap regret enumeration supports 1..8 arms");
  auto index = [&](Arm a) {
    for (int i = 0; i < n; ++i) {
      if (support[i] == a) return i;
    }
    throw ConfigError(fmt::format("action {} outside the comparator support", a.value));
  };
  // gain[i][j]: loss saved by replaying j whenever i was played.
  std::vector<double> gain(static_cast<std::size_t>(n) * n, 0.0);
  for (long long t = 1; t <= losses.horizon(); ++t) {
    const int i = index(actions[t - 1]);
    const double own = losses.loss(t, support[i]);
    for (int j = 0; j < n; ++j) gain[i * n + j] += own - losses.loss(t, support[j]);
  }
  std::vector<int> map(n, 0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += gain[i * n + map[i]];
    best = std::max(best, total);
    int k = 0;
    while (k < n && ++map[k] == n) map[k++] = 0;
    if (k == n) break;
  }
  return best;
}

}  // namespace mpmab
