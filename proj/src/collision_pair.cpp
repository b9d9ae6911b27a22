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

#include "mpmab/collision_pair.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "mpmab/errors.hpp"

namespace mpmab {

namespace {

constexpr std::uint32_t kCoinLane = 0;
constexpr std::uint32_t kPickLane = 1;
constexpr std::uint32_t kRoundingLane = 2;
constexpr std::uint32_t kSeedLane = 7;

void require_arms(std::size_t k) {
  if (k < 2) throw ConfigError("pair strategies need at least two arms");
}

// a - b for 128-bit fixed-point sums, as a real number.
double signed_difference(Fixed a, Fixed b, const Quantizer& quant) {
  return a >= b ? quant.decode(a - b) : -quant.decode(b - a);
}

std::vector<double> phase_weights(const Phase& phase, std::span<const Fixed> sums, double eta,
                                  const Quantizer& quant) {
  const std::size_t k = sums.size();
  std::vector<double> w(k);
  for (std::size_t label = 0; label < k; ++label) {
    const Fixed s = sums[phase.label_to_slot[label]];
    w[label] = std::exp(-eta * signed_difference(s, phase.reference, quant));
  }
  return w;
}

Distribution labels_to_slots(const Phase& phase, std::span<const double> by_label) {
  Distribution out(by_label.size());
  for (std::size_t label = 0; label < by_label.size(); ++label) out[phase.label_to_slot[label]] = by_label[label];
  return out;
}

}  // namespace

// -- Pair laws ---------------------------------------------------------------

UnorderedPairDist::UnorderedPairDist(int arms, std::vector<double> table, double normalizer)
    : arms_(arms), table_(std::move(table)), normalizer_(normalizer) {}

double UnorderedPairDist::operator()(Arm a, Arm b) const {
  return table_[static_cast<std::size_t>(a.slot()) * arms_ + b.slot()];
}

double UnorderedPairDist::total() const {
  double s = 0.0;
  for (int a = 0; a < arms_; ++a) {
    for (int b = a + 1; b < arms_; ++b) s += table_[static_cast<std::size_t>(a) * arms_ + b];
  }
  return s;
}

OrderedPairDist::OrderedPairDist(int arms, std::vector<double> table, double eps)
    : arms_(arms), table_(std::move(table)), eps_(eps) {}

double OrderedPairDist::operator()(Arm a, Arm b) const {
  return table_[static_cast<std::size_t>(a.slot()) * arms_ + b.slot()];
}

Distribution OrderedPairDist::alice_marginal() const {
  Distribution p(arms_, 0.0);
  for (int a = 0; a < arms_; ++a) {
    for (int b = 0; b < arms_; ++b) p[a] += table_[static_cast<std::size_t>(a) * arms_ + b];
  }
  return p;
}

Distribution OrderedPairDist::conditional(Arm a) const {
  Distribution p(arms_, 0.0);
  double row = 0.0;
  for (int b = 0; b < arms_; ++b) row += table_[static_cast<std::size_t>(a.slot()) * arms_ + b];
  if (!(row > 0.0)) throw ValidationError(fmt::format("conditional law given arm {} is undefined", a.value));
  for (int b = 0; b < arms_; ++b) p[b] = table_[static_cast<std::size_t>(a.slot()) * arms_ + b] / row;
  return p;
}

UnorderedPairDist compute_q(std::span<const double> weights) {
  require_arms(weights.size());
  const int k = static_cast<int>(weights.size());
  for (double x : weights) {
    if (!(x > 0.0)) throw ValidationError("pair weights must be positive");
  }
  double z = 0.0;
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      if (a != b) z += weights[a] * weights[b];
    }
  }
  std::vector<double> table(static_cast<std::size_t>(k) * k, 0.0);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      if (a != b) table[static_cast<std::size_t>(a) * k + b] = 2.0 * weights[a] * weights[b] / z;
    }
  }
  return {k, std::move(table), z};
}

OrderedPairDist assign_p(const UnorderedPairDist& q, double eps) {
  if (!(eps > 0.0 && eps <= 0.5)) throw ConfigError(fmt::format("assignment parameter {} outside (0, 1/2]", eps));
  const int k = q.arms();
  std::vector<double> table(static_cast<std::size_t>(k) * k, 0.0);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      if (a == b) continue;
      const double pair = q(Arm::from_slot(a), Arm::from_slot(b));
      double share = 0.5;
      if (a == 0) share = 1.0 - eps;
      if (b == 0) share = eps;
      table[static_cast<std::size_t>(a) * k + b] = share * pair;
    }
  }
  return {k, std::move(table), eps};
}

Distribution conditional_pb(const OrderedPairDist& p, Arm a) { return p.conditional(a); }

Distribution alice_marginal(std::span<const double> w, double eps) {
  require_arms(w.size());
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  double sq = 0.0;
  for (double x : w) sq += x * x;
  const double z = s * s - sq;
  Distribution p(w.size());
  p[0] = (1.0 - eps) * 2.0 * w[0] * (s - w[0]) / z;
  for (std::size_t a = 1; a < w.size(); ++a) p[a] = w[a] * (2.0 * eps * w[0] + s - w[0] - w[a]) / z;
  return p;
}

Distribution bob_conditional(std::span<const double> w, double eps, Arm a) {
  require_arms(w.size());
  const std::size_t given = a.slot();
  Distribution p(w.size(), 0.0);
  double total = 0.0;
  for (std::size_t b = 0; b < w.size(); ++b) {
    if (b == given) continue;
    p[b] = (b == 0) ? 2.0 * eps * w[0] : w[b];
    total += p[b];
  }
  for (double& x : p) x /= total;
  return p;
}

PhaseParams phase_params(std::span<const double> w_tau, std::span<const double> w_t) {
  require_arms(w_tau.size());
  if (w_tau.size() != w_t.size()) throw ConfigError("weight vectors differ in length");
  return phase_params(w_tau[0], w_tau[1], w_t);
}

PhaseParams phase_params(double w_tau_first, double w_tau_second, std::span<const double> w_t) {
  require_arms(w_t.size());
  if (!(w_tau_first > 0.0 && w_tau_second > 0.0)) throw InvariantViolation("phase weights underflowed to zero");
  const double k = static_cast<double>(w_t.size());
  PhaseParams out;
  out.eps = w_tau_second / (2.0 * w_tau_first);
  out.xi.resize(w_t.size());
  out.xi[0] = 1.0 / (8.0 * k);
  for (std::size_t i = 1; i < w_t.size(); ++i) out.xi[i] = w_t[i] / (2.0 * k * w_tau_second);
  return out;
}

double variance_functional(const UnorderedPairDist& q, const OrderedPairDist& p) {
  const int k = q.arms();
  const Distribution pa = p.alice_marginal();
  std::vector<double> column(k, 0.0);
  for (int b = 0; b < k; ++b) {
    for (int a = 0; a < k; ++a) column[b] += q(Arm::from_slot(a), Arm::from_slot(b));
  }
  double v = 0.0;
  for (int a = 0; a < k; ++a) {
    if (pa[a] == 0.0) continue;
    for (int b = 0; b < k; ++b) {
      if (b == a) continue;
      const double pab = p(Arm::from_slot(a), Arm::from_slot(b));
      if (pab == 0.0) return std::numeric_limits<double>::infinity();
      v += pa[a] * column[b] * pa[a] / pab;
    }
  }
  return v;
}

CoupledBits sample_coupled_bits(double xi_a, double xi_b, double pb, double u, BitLayout layout) {
  const double y = xi_b / pb;
  if (!(xi_a >= 0.0 && y >= 0.0) || xi_a + y > 1.0 + 1e-12) {
    throw InvariantViolation(fmt::format("coupled-bit intervals overflow: {} + {} > 1", xi_a, y));
  }
  CoupledBits bits;
  bits.a = u < xi_a;
  bits.b = layout == BitLayout::kAdjacent ? (u >= xi_a && u < xi_a + y) : (u >= 1.0 - y);
  return bits;
}

EstimatorRecord build_estimator(int arms, Arm alice, Arm bob, double loss_alice, double loss_bob,
                                CoupledBits bits, double xi_alice, double xi_bob) {
  EstimatorRecord rec{std::vector<double>(arms, 0.0), bits};
  if (bits.a) rec.values[alice.slot()] += loss_alice / xi_alice;
  if (bits.b) rec.values[bob.slot()] += loss_bob / xi_bob;
  return rec;
}

Distribution filter_target(std::span<const double> p, std::span<const double> q, std::span<const double> eps) {
  if (p.size() != q.size() || p.size() != eps.size() || p.empty()) throw ConfigError("filter inputs differ in length");
  double denom = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) denom += p[j] * eps[j];
  if (!(denom > 0.0)) throw InvariantViolation("filtering needs a positive switching mass");
  Distribution r(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    r[i] = (q[i] - (1.0 - eps[i]) * p[i]) / denom;
    if (r[i] < -1e-9) {
      throw InvariantViolation(fmt::format("filtering assumption fails at arm {}: q = {}, (1 - eps) p = {}", i + 1,
                                           q[i], (1.0 - eps[i]) * p[i]));
    }
    r[i] = std::max(r[i], 0.0);
    total += r[i];
  }
  for (double& x : r) x /= total;
  return r;
}

FilterOutcome filter_resample(std::span<const double> p, std::span<const double> q, std::span<const double> eps,
                              Arm current, double u_switch, double u_pick) {
  const Distribution r = filter_target(p, q, eps);
  if (u_switch >= eps[current.slot()]) return {current, false};
  return {Arm::from_slot(sample_index(r, u_pick)), true};
}

// -- Configuration -----------------------------------------------------------

double pair_learning_rate(int arms, long long horizon) {
  return std::ldexp(1.0, -7) / (std::pow(static_cast<double>(arms), 1.5) * std::sqrt(static_cast<double>(horizon)));
}

long long fixed_period(int arms, long long horizon) {
  if (arms < 1 || horizon < 1) throw ConfigError("fixed period needs positive K and T");
  auto d = static_cast<long long>(std::floor(std::sqrt(static_cast<double>(horizon) / arms)));
  d = std::max(d, 1LL);
  while (d > 1 && (d - 1) * (d - 1) * arms >= horizon) --d;
  while (d * d * arms < horizon) ++d;
  return d;
}

PairConfig PairConfig::standard(int arms, long long horizon) {
  PairConfig c;
  c.arms = arms;
  c.horizon = horizon;
  c.eta = pair_learning_rate(arms, horizon);
  c.variance_constant = 8.0 * arms;
  c.fixed_period = mpmab::fixed_period(arms, horizon);
  c.loss_floor = 1.0 / (static_cast<double>(horizon) * static_cast<double>(horizon));
  c.validate();
  return c;
}

void PairConfig::validate() const {
  if (arms < 2) throw ConfigError("the two-player strategy needs K >= 2");
  if (horizon < 1) throw ConfigError("horizon must be positive");
  if (!(eta > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(variance_constant > 0.0)) throw ConfigError("variance constant must be positive");
  if (fixed_period < 1) throw ConfigError("fixed communication period must be positive");
  if (!(loss_floor >= 0.0)) throw ConfigError("loss floor must be nonnegative");
}

// -- Phase -------------------------------------------------------------------

Phase Phase::identity(int arms) {
  Phase p;
  p.label_to_slot.resize(arms);
  std::iota(p.label_to_slot.begin(), p.label_to_slot.end(), 0);
  p.slot_to_label = p.label_to_slot;
  return p;
}

Phase Phase::reorder(std::span<const Fixed> sums, long long tau, double eta, const Quantizer& quant) {
  const int k = static_cast<int>(sums.size());
  Phase p = identity(k);
  std::stable_sort(p.label_to_slot.begin(), p.label_to_slot.end(),
                   [&](int a, int b) { return sums[a] < sums[b]; });
  for (int label = 0; label < k; ++label) p.slot_to_label[p.label_to_slot[label]] = label;
  p.tau = tau;
  p.reference = sums[p.label_to_slot[1]];
  p.first_weight = std::exp(eta * signed_difference(p.reference, sums[p.label_to_slot[0]], quant));
  p.eps = 0.5 / p.first_weight;
  return p;
}

// -- Shared player knowledge -------------------------------------------------

PairKnowledge::PairKnowledge(const PairConfig& cfg, RngStream rng, std::unique_ptr<SharedStream> shared)
    : cfg_(cfg),
      quant_(cfg.horizon),
      rng_(rng),
      shared_(std::move(shared)),
      phase_(Phase::identity(cfg.arms)),
      committed_(cfg.arms, 0) {
  cfg_.validate();
}

std::vector<Fixed> PairKnowledge::local_sums(long long before) const {
  std::vector<Fixed> s = committed_;
  for (const auto& r : records_) {
    if (r.t < before) s[r.slot] += r.value;
  }
  return s;
}

std::vector<double> PairKnowledge::label_weights(std::span<const Fixed> sums) const {
  return phase_weights(phase_, sums, cfg_.eta, quant_);
}

PhaseParams PairKnowledge::params(std::span<const Fixed> sums) const {
  return phase_params(phase_.first_weight, 1.0, label_weights(sums));
}

double PairKnowledge::xi_of(std::span<const Fixed> sums, Arm arm) const {
  const int label = label_of(arm);
  const double k = cfg_.arms;
  if (label == 0) return 1.0 / (8.0 * k);
  const double w = std::exp(-cfg_.eta * signed_difference(sums[arm.slot()], phase_.reference, quant_));
  return w / (2.0 * k);
}

PairKnowledge::Merged PairKnowledge::merge(long long v, CommKind kind, Arm alice_arm, const AliceMessage& alice,
                                           const BobMessage& bob) {
  Merged m;
  m.before_last = committed_;
  m.before_last[alice_arm.slot()] += alice.earlier;
  for (int s = 0; s < cfg_.arms; ++s) m.before_last[s] += bob.earlier[s];
  m.now = m.before_last;
  m.now[alice_arm.slot()] += alice.last;
  if (bob.last_slot >= 0) m.now[bob.last_slot] += bob.last;
  committed_ = m.now;
  records_.clear();
  if (kind == CommKind::kFixed) phase_ = Phase::reorder(committed_, v, cfg_.eta, quant_);
  return m;
}

Fixed PairKnowledge::estimate(long long v, double loss, double xi) {
  double l = loss;
  if (cfg_.binary_losses) {
    RngStream r = rng_.at(static_cast<std::uint64_t>(v), kRoundingLane);
    l = r.bernoulli(loss) ? 1.0 : 0.0;
  }
  return quant_.encode((l + cfg_.loss_floor) / xi);
}

// -- Alice -------------------------------------------------------------------

AlicePlayer::AlicePlayer(const PairConfig& cfg, RngStream rng, std::unique_ptr<SharedStream> shared)
    : PairKnowledge(cfg, rng, std::move(shared)) {}

Arm AlicePlayer::start() {
  const auto pa = alice_marginal(label_weights(committed_), phase_.eps);
  RngStream r = rng_.at(1, kPickLane);
  action_ = arm_of_label(sample_index(pa, r.uniform()));
  return action_;
}

double AlicePlayer::switch_probability(long long v) const {
  const double xi = xi_of(local_sums(v - 1), action_);
  return std::min(1.0, cfg_.eta * cfg_.variance_constant + cfg_.eta / xi);
}

std::optional<CommKind> AlicePlayer::begin_round(long long v) {
  if (v % cfg_.fixed_period == 0) return CommKind::kFixed;
  RngStream r = rng_.at(static_cast<std::uint64_t>(v), kCoinLane);
  if (r.uniform() < switch_probability(v)) return CommKind::kRandom;
  return std::nullopt;
}

AliceMessage AlicePlayer::outgoing(long long v) const {
  AliceMessage m;
  for (const auto& r : records_) {
    if (r.slot != action_.slot()) throw InvariantViolation("Alice holds a record off her current arm");
    if (r.t < v - 1) {
      m.earlier += r.value;
    } else if (r.t == v - 1) {
      m.last += r.value;
    }
  }
  return m;
}

Arm AlicePlayer::resolve_sync(long long v, CommKind kind, const BobMessage& bob) {
  const AliceMessage mine = outgoing(v);
  const Merged m = merge(v, kind, action_, mine, bob);
  RngStream r = rng_.at(static_cast<std::uint64_t>(v), kPickLane);
  if (kind == CommKind::kFixed) {
    const auto pa = alice_marginal(label_weights(m.now), phase_.eps);
    action_ = arm_of_label(sample_index(pa, r.uniform()));
    return action_;
  }
  const auto w_prev = label_weights(m.before_last);
  const auto p = alice_marginal(w_prev, phase_.eps);
  const auto q = alice_marginal(label_weights(m.now), phase_.eps);
  const auto xi_prev = phase_params(phase_.first_weight, 1.0, w_prev).xi;
  std::vector<double> eps(xi_prev.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    eps[i] = std::min(1.0, cfg_.eta * cfg_.variance_constant + cfg_.eta / xi_prev[i]);
  }
  const auto target = filter_target(p, q, eps);
  action_ = arm_of_label(sample_index(target, r.uniform()));
  return action_;
}

double AlicePlayer::current_xi(long long v) const { return xi_of(local_sums(v), action_); }

void AlicePlayer::observe(long long v, double loss) {
  const double u = shared_->uniform(v);
  const double xi = current_xi(v);
  if (u < xi) record(v, action_, estimate(v, loss, xi));
}

// -- Bob ---------------------------------------------------------------------

BobPlayer::BobPlayer(const PairConfig& cfg, RngStream rng, std::unique_ptr<SharedStream> shared)
    : PairKnowledge(cfg, rng, std::move(shared)) {}

void BobPlayer::learn_start(Arm alice) { alice_action_ = alice; }

BobMessage BobPlayer::outgoing(long long v) const {
  BobMessage m;
  m.earlier.assign(cfg_.arms, 0);
  for (const auto& r : records_) {
    if (r.slot == alice_action_.slot()) throw InvariantViolation("Bob holds a record on Alice's arm");
    if (r.t < v - 1) {
      m.earlier[r.slot] += r.value;
    } else if (r.t == v - 1) {
      m.last_slot = r.slot;
      m.last = r.value;
    }
  }
  return m;
}

void BobPlayer::resolve_sync(long long v, CommKind kind, const AliceMessage& alice, Arm alice_next) {
  const BobMessage mine = outgoing(v);
  merge(v, kind, alice_action_, alice, mine);
  alice_action_ = alice_next;
}

Distribution BobPlayer::conditional(long long v) const {
  const auto w = label_weights(local_sums(v));
  const auto by_label = bob_conditional(w, phase_.eps, Arm::from_slot(label_of(alice_action_)));
  return labels_to_slots(phase_, by_label);
}

Arm BobPlayer::act(long long v) {
  const auto p = conditional(v);
  RngStream r = rng_.at(static_cast<std::uint64_t>(v), kPickLane);
  const int slot = sample_index(p, r.uniform());
  action_ = Arm::from_slot(slot);
  pb_ = p[slot];
  return action_;
}

void BobPlayer::observe(long long v, double loss) {
  const double u = shared_->uniform(v);
  const double xi = xi_of(local_sums(v), action_);
  const CoupledBits bits = sample_coupled_bits(0.0, xi, pb_, u, BitLayout::kComplementary);
  if (bits.b) record(v, action_, estimate(v, loss, xi));
}

void BobPlayer::rollback(long long v) {
  std::erase_if(records_, [v](const EstimateRecord& r) { return r.t >= v; });
}

// -- Team --------------------------------------------------------------------

std::unique_ptr<SharedStream> make_shared_stream(SharedMode mode, std::uint64_t seed, std::uint64_t prg_seed) {
  if (mode == SharedMode::kPrg) return std::make_unique<PrgStream>(prg_seed);
  RngStream r(seed, "shared");
  return std::make_unique<IdealSharedStream>(r());
}

std::uint64_t draw_prg_seed(std::uint64_t seed) {
  RngStream r = RngStream(seed, "alice").at(0, kSeedLane);
  return r();
}

CollisionInfoTeam::CollisionInfoTeam(const PairConfig& cfg, std::uint64_t seed, SharedMode mode)
    : cfg_(cfg),
      mode_(mode),
      prg_seed_(draw_prg_seed(seed)),
      alice_(cfg, RngStream(seed, "alice"), make_shared_stream(mode, seed, prg_seed_)),
      bob_(cfg, RngStream(seed, "bob"), make_shared_stream(mode, seed, prg_seed_)),
      sums_prev_(cfg.arms, 0),
      sums_now_(cfg.arms, 0) {}

long long CollisionInfoTeam::sync_bits() const {
  const long long w = alice_.quantizer().width();
  return 2 * w + (cfg_.arms - 1) * w + bits_for(cfg_.arms) + w + bits_for(cfg_.arms - 1);
}

long long CollisionInfoTeam::startup_bits() const {
  return bits_for(cfg_.arms - 1) + (mode_ == SharedMode::kPrg ? 64 : 0);
}

std::vector<Distribution> CollisionInfoTeam::declared_distributions(long long t) {
  const Quantizer& quant = alice_.quantizer();
  const int k = cfg_.arms;
  Phase phase = alice_.phase();
  Distribution alice_law;
  if (t == 1) {
    phase = Phase::identity(k);
    alice_law = labels_to_slots(phase, alice_marginal(phase_weights(phase, sums_now_, cfg_.eta, quant), phase.eps));
  } else if (t % cfg_.fixed_period == 0) {
    phase = Phase::reorder(sums_now_, t, cfg_.eta, quant);
    alice_law = labels_to_slots(phase, alice_marginal(phase_weights(phase, sums_now_, cfg_.eta, quant), phase.eps));
  } else {
    const auto w_prev = phase_weights(phase, sums_prev_, cfg_.eta, quant);
    const auto p = alice_marginal(w_prev, phase.eps);
    const auto q = alice_marginal(phase_weights(phase, sums_now_, cfg_.eta, quant), phase.eps);
    const auto xi_prev = phase_params(phase.first_weight, 1.0, w_prev).xi;
    std::vector<double> eps(k);
    for (int i = 0; i < k; ++i) eps[i] = std::min(1.0, cfg_.eta * cfg_.variance_constant + cfg_.eta / xi_prev[i]);
    const auto r = labels_to_slots(phase, filter_target(p, q, eps));
    const double stay = 1.0 - alice_.switch_probability(t);
    alice_law.assign(k, 0.0);
    for (int i = 0; i < k; ++i) alice_law[i] = (1.0 - stay) * r[i];
    alice_law[alice_.action().slot()] += stay;
  }
  const auto w = phase_weights(phase, sums_now_, cfg_.eta, quant);
  Distribution bob_law(k, 0.0);
  for (int slot = 0; slot < k; ++slot) {
    if (alice_law[slot] == 0.0) continue;
    const auto cond = labels_to_slots(phase, bob_conditional(w, phase.eps, Arm::from_slot(phase.slot_to_label[slot])));
    for (int b = 0; b < k; ++b) bob_law[b] += alice_law[slot] * cond[b];
  }
  return {alice_law, bob_law};
}

void CollisionInfoTeam::act(long long t, std::span<Arm> actions) {
  pending_.reset();
  if (t == 1) {
    bob_.learn_start(alice_.start());
    pending_ = CommKind::kStartup;
    stats_.bits += startup_bits();
  } else if (auto kind = alice_.begin_round(t)) {
    const AliceMessage am = alice_.outgoing(t);
    const BobMessage bm = bob_.outgoing(t);
    const Arm next = alice_.resolve_sync(t, *kind, bm);
    bob_.resolve_sync(t, *kind, am, next);
    pending_ = kind;
    ++(*kind == CommKind::kFixed ? stats_.fixed_syncs : stats_.random_syncs);
    stats_.bits += sync_bits();
  }
  actions[0] = alice_.action();
  actions[1] = bob_.act(t);
  for (PairMonitor* m : monitors_) m->on_round(*this, t, pending_);
}

void CollisionInfoTeam::observe(long long t, std::span<const Feedback> feedback) {
  alice_.observe(t, feedback[0].observed_loss);
  bob_.observe(t, feedback[1].observed_loss);
  sums_prev_ = sums_now_;
  for (const auto* player : {static_cast<const PairKnowledge*>(&alice_), static_cast<const PairKnowledge*>(&bob_)}) {
    const auto& recs = player->records();
    if (!recs.empty() && recs.back().t == t) sums_now_[recs.back().slot] += recs.back().value;
  }
}

void CollisionInfoTeam::annotate(long long t, std::span<CommTag> tags, std::vector<CommEvent>& events) {
  if (!pending_) return;
  tags[0] = tags[1] = CommTag::kSync;
  events.push_back({t, *pending_, *pending_ == CommKind::kStartup ? startup_bits() : sync_bits()});
}

// -- Monitors ----------------------------------------------------------------

void InvariantChecker::check(bool ok, long long v, const char* what) {
  if (ok) return;
  ++violations_;
  std::string msg = fmt::format("round {}: {}", v, what);
  if (!collect_) throw InvariantViolation(msg);
  if (messages_.size() < 100) messages_.push_back(std::move(msg));
}

void InvariantChecker::on_round(const CollisionInfoTeam& team, long long v, std::optional<CommKind> kind) {
  ++rounds_;
  const PairConfig& cfg = team.config();
  const Quantizer& quant = team.alice().quantizer();
  const Phase& phase = team.alice().phase();
  const int k = cfg.arms;
  const double kd = k;
  const double eta = cfg.eta;

  check(phase.label_to_slot == team.bob().phase().label_to_slot && phase.eps == team.bob().phase().eps, v,
        "players disagree on the phase");
  check(team.alice().action() != team.bob().action(), v, "collision");

  const auto& sums = team.full_sums();
  const auto w = phase_weights(phase, sums, eta, quant);
  const auto pp = phase_params(phase.first_weight, 1.0, w);
  const auto q = compute_q(w);
  const auto p = assign_p(q, phase.eps);
  const auto pa = p.alice_marginal();

  const double variance = variance_functional(q, p);
  max_variance_ = std::max(max_variance_, variance);
  check(variance <= 64.0 * kd + slack_, v, "variance functional exceeds 64K");

  const double w_max = *std::max_element(w.begin(), w.end());
  check(w[0] >= 0.5 * w_max - slack_, v, "dominant arm lost more than half its weight lead");
  const double ratio = *std::max_element(w.begin() + 1, w.end()) / w[0];
  check(phase.eps >= 0.25 * ratio - slack_ && phase.eps <= std::min(ratio, 0.5) + slack_, v,
        "eps outside its bracket");
  check(pa[0] >= 1.0 - 5.0 * kd * phase.eps - slack_, v, "p^A(1) below 1 - 5K eps");

  for (int a = 0; a < k; ++a) {
    check(pp.xi[a] >= pa[a] / (4.0 * kd * kd) - slack_, v, "Xi(a) below p^A(a) / (4K^2)");
    if (pa[a] <= 0.0) continue;
    const auto cond = p.conditional(Arm::from_slot(a));
    for (int b = 0; b < k; ++b) {
      if (b == a) continue;
      check(pp.xi[b] <= cond[b] / 2.0 + slack_, v, "Xi(b) above p^B(b|a) / 2");
      const double l = cond[b] / pp.xi[b];
      max_l_ = std::max(max_l_, l);
      check(l <= 8.0 * kd + slack_, v, "realized L exceeds 8K");
      if (a != 0 && b != 0) {
        check(cond[b] >= w[b] / kd - slack_ && cond[b] <= 4.0 * w[b] + slack_, v, "p^B(b|a) outside its bounds");
      }
    }
    if (a != 0) check(cond[0] >= 1.0 / (4.0 * kd) - slack_, v, "p^B(1|a) below 1/(4K)");
  }

  if (v >= 2 && kind != CommKind::kFixed) {
    const auto w_prev = phase_weights(phase, team.previous_full_sums(), eta, quant);
    const auto prev = alice_marginal(w_prev, phase.eps);
    const auto xi_prev = phase_params(phase.first_weight, 1.0, w_prev).xi;
    for (int a = 0; a < k; ++a) {
      check(pa[a] >= (1.0 - eta * cfg.variance_constant - eta / xi_prev[a]) * prev[a] - slack_, v,
            "multiplicative update bound fails");
    }
  }

  const Arm alice_arm = team.alice().action();
  const auto bob_full = labels_to_slots(
      phase, bob_conditional(w, phase.eps, Arm::from_slot(phase.slot_to_label[alice_arm.slot()])));
  check(bob_full == team.bob().conditional(v), v, "Bob's law depends on Alice's unsent losses");
  check(team.alice().current_xi(v) == team.alice().xi_of(sums, alice_arm), v,
        "Alice's Xi depends on Bob's unsent losses");
}

DiagnosticsWriter::DiagnosticsWriter(std::ostream& out) : out_(out) {
  out_ << "t,alice,bob,eps,xi_min,xi_max,variance,comm\n";
}

void DiagnosticsWriter::on_round(const CollisionInfoTeam& team, long long v, std::optional<CommKind> kind) {
  const Phase& phase = team.alice().phase();
  const auto w = phase_weights(phase, team.full_sums(), team.config().eta, team.alice().quantizer());
  const auto pp = phase_params(phase.first_weight, 1.0, w);
  const auto q = compute_q(w);
  const double variance = variance_functional(q, assign_p(q, phase.eps));
  const auto [lo, hi] = std::minmax_element(pp.xi.begin(), pp.xi.end());
  out_ << fmt::format("{},{},{},{:.10g},{:.10g},{:.10g},{:.10g},{}\n", v, team.alice().action().slot(),
                      team.bob().action().slot(), phase.eps, *lo, *hi, variance,
                      kind ? to_string(*kind) : std::string_view("none"));
}

}  // namespace mpmab
