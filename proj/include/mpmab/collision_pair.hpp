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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mpmab/env.hpp"
#include "mpmab/quantize.hpp"
#include "mpmab/random.hpp"
#include "mpmab/shared_stream.hpp"

namespace mpmab {

// ---------------------------------------------------------------------------
// Pair laws. Everything in this block works in "label" coordinates: arm 1 is
// the arm that had the largest weight at the last reordering, arm 2 the
// second largest. Vectors are indexed by label - 1.
// ---------------------------------------------------------------------------

class UnorderedPairDist {
 public:
  UnorderedPairDist(int arms, std::vector<double> table, double normalizer);

  int arms() const { return arms_; }
  // Sum over ordered pairs a != b of w(a) w(b).
  double normalizer() const { return normalizer_; }
  double operator()(Arm a, Arm b) const;
  double total() const;

 private:
  int arms_;
  std::vector<double> table_;
  double normalizer_;
};

class OrderedPairDist {
 public:
  OrderedPairDist(int arms, std::vector<double> table, double eps);

  int arms() const { return arms_; }
  double eps() const { return eps_; }
  double operator()(Arm a, Arm b) const;
  Distribution alice_marginal() const;
  // Law of b given a; throws ValidationError when P(a) = 0.
  Distribution conditional(Arm a) const;

 private:
  int arms_;
  std::vector<double> table_;
  double eps_;
};

UnorderedPairDist compute_q(std::span<const double> weights);
OrderedPairDist assign_p(const UnorderedPairDist& q, double eps);
Distribution conditional_pb(const OrderedPairDist& p, Arm a);

// O(K) closed forms of the two laws above.
Distribution alice_marginal(std::span<const double> weights, double eps);
Distribution bob_conditional(std::span<const double> weights, double eps, Arm a);

struct PhaseParams {
  double eps = 0.5;
  std::vector<double> xi;
};

// `w_tau` and `w_t` are in label order, so w_tau[0] >= w_tau[1] >= others.
PhaseParams phase_params(std::span<const double> w_tau, std::span<const double> w_t);
PhaseParams phase_params(double w_tau_first, double w_tau_second, std::span<const double> w_t);

// E over a ~ p^A of sum_{b != a} sum_{a', b'} Q({a',b}) P((a,b')) / P((a,b)).
double variance_functional(const UnorderedPairDist& q, const OrderedPairDist& p);

struct CoupledBits {
  bool a = false;
  bool b = false;
  friend bool operator==(const CoupledBits&, const CoupledBits&) = default;
};

// kAdjacent: a on [0, x), b on [x, x + y).
// kComplementary: a on [0, x), b on [1 - y, 1). Each bit then depends only
// on its own threshold, which is what lets the players decide separately.
enum class BitLayout : std::uint8_t { kAdjacent, kComplementary };

CoupledBits sample_coupled_bits(double xi_a, double xi_b, double pb, double u,
                                BitLayout layout = BitLayout::kAdjacent);

struct EstimatorRecord {
  std::vector<double> values;
  CoupledBits bits;
};

EstimatorRecord build_estimator(int arms, Arm alice, Arm bob, double loss_alice, double loss_bob,
                                CoupledBits bits, double xi_alice, double xi_bob);

// r(i) = (q(i) - (1 - eps_i) p(i)) / sum_j p(j) eps_j. Entries down to
// -1e-9 are clamped; anything lower throws InvariantViolation.
Distribution filter_target(std::span<const double> p, std::span<const double> q, std::span<const double> eps);

struct FilterOutcome {
  Arm action;
  bool switched = false;
};

FilterOutcome filter_resample(std::span<const double> p, std::span<const double> q, std::span<const double> eps,
                              Arm current, double u_switch, double u_pick);

// ---------------------------------------------------------------------------
// Strategy configuration and per-player state.
// ---------------------------------------------------------------------------

double pair_learning_rate(int arms, long long horizon);
long long fixed_period(int arms, long long horizon);

struct PairConfig {
  int arms = 3;
  long long horizon = 1;
  double eta = 0.0;
  double variance_constant = 0.0;
  long long fixed_period = 1;
  double loss_floor = 0.0;
  bool binary_losses = false;

  static PairConfig standard(int arms, long long horizon);
  void validate() const;
};

enum class SharedMode : std::uint8_t { kPrg, kIdeal };

// Quantities frozen at the last fixed synchronization.
struct Phase {
  long long tau = 1;
  std::vector<int> label_to_slot;
  std::vector<int> slot_to_label;
  Fixed reference = 0;        // summed estimate of label 2 at tau
  double first_weight = 1.0;  // w_tau(1) / w_tau(2)
  double eps = 0.5;

  static Phase identity(int arms);
  static Phase reorder(std::span<const Fixed> sums, long long tau, double eta, const Quantizer& quant);
};

struct EstimateRecord {
  long long t = 0;
  int slot = 0;
  Fixed value = 0;
};

struct AliceMessage {
  Fixed earlier = 0;  // her records before v - 1
  Fixed last = 0;     // her record at v - 1
};

struct BobMessage {
  std::vector<Fixed> earlier;  // per slot, slot of Alice's arm left at 0
  int last_slot = -1;
  Fixed last = 0;
};

// Weights and sampling parameters shared by both players. Each player sees
// the committed sums from the last synchronization plus its own records.
class PairKnowledge {
 public:
  const PairConfig& config() const { return cfg_; }
  const Quantizer& quantizer() const { return quant_; }
  const Phase& phase() const { return phase_; }
  const std::vector<Fixed>& committed() const { return committed_; }
  const std::vector<EstimateRecord>& records() const { return records_; }

  // Committed plus own records with round < before.
  std::vector<Fixed> local_sums(long long before) const;

  // Late binding of the shared stream, for players that learn its seed
  // over the channel.
  void attach_shared(std::unique_ptr<SharedStream> shared) { shared_ = std::move(shared); }

  // Helpers on arbitrary sums, under the current phase.
  std::vector<double> label_weights(std::span<const Fixed> sums) const;
  PhaseParams params(std::span<const Fixed> sums) const;
  double xi_of(std::span<const Fixed> sums, Arm arm) const;

 protected:
  PairKnowledge(const PairConfig& cfg, RngStream rng, std::unique_ptr<SharedStream> shared);

  struct Merged {
    std::vector<Fixed> before_last;
    std::vector<Fixed> now;
  };
  Merged merge(long long v, CommKind kind, Arm alice_arm, const AliceMessage& alice, const BobMessage& bob);
  Fixed estimate(long long v, double loss, double xi);
  void record(long long v, Arm arm, Fixed value) { records_.push_back({v, arm.slot(), value}); }

  int label_of(Arm a) const { return phase_.slot_to_label[a.slot()]; }
  Arm arm_of_label(int label) const { return Arm::from_slot(phase_.label_to_slot[label]); }

  PairConfig cfg_;
  Quantizer quant_;
  RngStream rng_;
  std::unique_ptr<SharedStream> shared_;
  Phase phase_;
  std::vector<Fixed> committed_;
  std::vector<EstimateRecord> records_;
};

class AlicePlayer : public PairKnowledge {
 public:
  AlicePlayer(const PairConfig& cfg, RngStream rng, std::unique_ptr<SharedStream> shared);

  Arm action() const { return action_; }
  Arm start();
  // Switching probability min(1, eta L + eta / Xi_{v-1}(A)) from her own view.
  double switch_probability(long long v) const;
  std::optional<CommKind> begin_round(long long v);
  AliceMessage outgoing(long long v) const;
  Arm resolve_sync(long long v, CommKind kind, const BobMessage& bob);
  void observe(long long v, double loss);
  double current_xi(long long v) const;

 private:
  Arm action_{1};
};

class BobPlayer : public PairKnowledge {
 public:
  BobPlayer(const PairConfig& cfg, RngStream rng, std::unique_ptr<SharedStream> shared);

  Arm alice_action() const { return alice_action_; }
  Arm action() const { return action_; }
  void learn_start(Arm alice);
  BobMessage outgoing(long long v) const;
  void resolve_sync(long long v, CommKind kind, const AliceMessage& alice, Arm alice_next);
  // p^B(. | Alice's arm) from his own view, indexed by slot.
  Distribution conditional(long long v) const;
  Arm act(long long v);
  void observe(long long v, double loss);
  // Forgets records from round v on; used when a speculative stretch of
  // rounds turns out to belong to a protocol session.
  void rollback(long long v);

 private:
  Arm alice_action_{1};
  Arm action_{2};
  double pb_ = 1.0;
};

// ---------------------------------------------------------------------------
// Two-player team under the communication oracle.
// ---------------------------------------------------------------------------

class CollisionInfoTeam;

class PairMonitor {
 public:
  virtual ~PairMonitor() = default;
  // Called once per round after both actions are fixed and before feedback.
  virtual void on_round(const CollisionInfoTeam& team, long long v, std::optional<CommKind> kind) = 0;
};

struct PairStats {
  long long fixed_syncs = 0;
  long long random_syncs = 0;
  long long bits = 0;
};

class CollisionInfoTeam final : public Team {
 public:
  CollisionInfoTeam(const PairConfig& cfg, std::uint64_t seed, SharedMode mode = SharedMode::kPrg);

  int players() const override { return 2; }
  int arms() const override { return cfg_.arms; }
  FeedbackModel model() const override { return FeedbackModel::kCommunicationOracle; }
  bool declares_distributions() const override { return true; }
  std::vector<Distribution> declared_distributions(long long t) override;
  void act(long long t, std::span<Arm> actions) override;
  void observe(long long t, std::span<const Feedback> feedback) override;
  void annotate(long long t, std::span<CommTag> tags, std::vector<CommEvent>& events) override;

  void add_monitor(PairMonitor* monitor) { monitors_.push_back(monitor); }

  const PairConfig& config() const { return cfg_; }
  const AlicePlayer& alice() const { return alice_; }
  const BobPlayer& bob() const { return bob_; }
  const PairStats& stats() const { return stats_; }
  std::uint64_t prg_seed() const { return prg_seed_; }
  SharedMode shared_mode() const { return mode_; }

  // Summed estimates of both players through the previous round (S_t) and
  // through the round before that (S_{t-1}).
  const std::vector<Fixed>& full_sums() const { return sums_now_; }
  const std::vector<Fixed>& previous_full_sums() const { return sums_prev_; }

  // Bits carried by one synchronization and by the startup announcement.
  long long sync_bits() const;
  long long startup_bits() const;

 private:
  PairConfig cfg_;
  SharedMode mode_;
  std::uint64_t prg_seed_;
  AlicePlayer alice_;
  BobPlayer bob_;
  PairStats stats_;
  std::vector<PairMonitor*> monitors_;
  std::optional<CommKind> pending_;
  std::vector<Fixed> sums_prev_;
  std::vector<Fixed> sums_now_;
};

std::unique_ptr<SharedStream> make_shared_stream(SharedMode mode, std::uint64_t seed, std::uint64_t prg_seed);
std::uint64_t draw_prg_seed(std::uint64_t seed);

// Runtime checks of the sampling and variance conditions, evaluated on the
// full (both players') view each round. Violations throw InvariantViolation
// unless `collect` is set, in which case they are counted.
class InvariantChecker final : public PairMonitor {
 public:
  explicit InvariantChecker(bool collect = false, double slack = 1e-9) : collect_(collect), slack_(slack) {}
  void on_round(const CollisionInfoTeam& team, long long v, std::optional<CommKind> kind) override;

  long long rounds_checked() const { return rounds_; }
  long long violations() const { return violations_; }
  const std::vector<std::string>& messages() const { return messages_; }
  double max_variance() const { return max_variance_; }
  double max_realized_l() const { return max_l_; }

 private:
  void check(bool ok, long long v, const char* what);

  bool collect_;
  double slack_;
  long long rounds_ = 0;
  long long violations_ = 0;
  std::vector<std::string> messages_;
  double max_variance_ = 0.0;
  double max_l_ = 0.0;
};

// One CSV row per round: t, A_t, B_t, eps_t, min and max Xi_t, V_t, comm.
class DiagnosticsWriter final : public PairMonitor {
 public:
  explicit DiagnosticsWriter(std::ostream& out);
  void on_round(const CollisionInfoTeam& team, long long v, std::optional<CommKind> kind) override;

 private:
  std::ostream& out_;
};

}  // namespace mpmab
