#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "otsafe/core.hpp"

namespace otsafe {

/// Dense (state, action) -> value table, zero-initialized.
class QTable {
 public:
  QTable() = default;
  QTable(int n_states, int n_actions, double init = 0.0)
      : n_states_(n_states), n_actions_(n_actions),
        values_(static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions), init) {
    require(n_states > 0 && n_actions > 0, Errc::InvalidArgument, "table dimensions must be positive");
  }

  int n_states() const noexcept { return n_states_; }
  int n_actions() const noexcept { return n_actions_; }

  double& operator()(int s, int a) { return values_[index(s, a)]; }
  double operator()(int s, int a) const { return values_[index(s, a)]; }

  std::span<const double> row(int s) const {
    return {values_.data() + index(s, 0), static_cast<std::size_t>(n_actions_)};
  }
  double max(int s) const {
    auto r = row(s);
    return *std::max_element(r.begin(), r.end());
  }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions_) + static_cast<std::size_t>(a);
  }

  int n_states_ = 0;
  int n_actions_ = 0;
  std::vector<double> values_;
};

/// Last SARSA target seen for every (state, action); unseen cells keep the
/// initialization value.
class TargetBuffer {
 public:
  TargetBuffer() = default;
  TargetBuffer(int n_states, int n_actions, double init = 0.0)
      : values_(n_states, n_actions, init),
        seen_(static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions), 0),
        init_(init) {}

  int n_states() const noexcept { return values_.n_states(); }
  int n_actions() const noexcept { return values_.n_actions(); }
  double init_value() const noexcept { return init_; }

  double value(int s, int a) const { return values_(s, a); }
  bool seen(int s, int a) const { return seen_[flat(s, a)] != 0; }
  std::span<const double> row(int s) const { return values_.row(s); }
  const QTable& table() const noexcept { return values_; }

  void store(int s, int a, double target) {
    values_(s, a) = target;
    seen_[flat(s, a)] = 1;
  }

  friend bool operator==(const TargetBuffer&, const TargetBuffer&) = default;

 private:
  std::size_t flat(int s, int a) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions()) + static_cast<std::size_t>(a);
  }

  QTable values_;
  std::vector<char> seen_;
  double init_ = 0.0;
};

/// Q-distribution and T-distribution of one state over its actions.
struct ActionDistPair {
  ProbVec q_dist;
  ProbVec t_dist;
};

/// Shift by `floor`, then L1-normalize; uniform when the shifted mass is
/// below 1e-12. Entries must be >= floor.
inline ProbVec normalize_from(std::span<const double> raw, double floor) {
  std::vector<double> out(raw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = raw[i] - floor;
    total += out[i];
  }
  if (total < 1e-12) return ProbVec::uniform(raw.size());
  for (double& x : out) x /= total;
  return ProbVec(std::move(out));
}

/// Shift by the minimum, then L1-normalize. Constant input (shifted mass
/// below 1e-12) maps to the uniform distribution.
inline ProbVec normalize_values(std::span<const double> raw) {
  require(!raw.empty(), Errc::InvalidArgument, "cannot normalize an empty vector");
  for (double x : raw) require(std::isfinite(x), Errc::NonFiniteInput, "value is not finite");

  return normalize_from(raw, *std::min_element(raw.begin(), raw.end()));
}

inline ProbVec q_distribution(const QTable& q, int s, int n_actions) {
  require(n_actions == q.n_actions(), Errc::DimensionMismatch, "action count does not match Q-table");
  return normalize_values(q.row(s));
}

inline ProbVec t_distribution(const TargetBuffer& buf, int s, int n_actions) {
  require(n_actions == buf.n_actions(), Errc::DimensionMismatch, "action count does not match target buffer");
  return normalize_values(buf.row(s));
}

/// How a state's Q-values and buffered targets become distributions.
///  - ShiftMin:      each vector shifted by its own minimum, then L1-normalized.
///  - JointShiftMin: both vectors shifted by their common minimum, then each
///                   L1-normalized; an action whose target fell below every
///                   current Q-value keeps a visible gap.
enum class Normalization { ShiftMin, JointShiftMin };

inline std::string to_string(Normalization n) { return n == Normalization::ShiftMin ? "shift_min" : "joint_shift_min"; }
inline Normalization parse_normalization(std::string_view s) {
  if (s == "shift_min") return Normalization::ShiftMin;
  if (s == "joint_shift_min") return Normalization::JointShiftMin;
  throw Error(Errc::InvalidConfig, "unknown normalization '" + std::string(s) + "'");
}

/// Q- and T-distributions of state s under the chosen normalization.
inline ActionDistPair action_distributions(const QTable& q, const TargetBuffer& buf, int s,
                                           Normalization norm = Normalization::ShiftMin) {
  require(q.n_actions() == buf.n_actions(), Errc::DimensionMismatch, "Q-table and target buffer differ");
  if (norm == Normalization::ShiftMin) return {q_distribution(q, s, q.n_actions()), t_distribution(buf, s, buf.n_actions())};
  const auto qr = q.row(s);
  const auto tr = buf.row(s);
  for (double x : qr) require(std::isfinite(x), Errc::NonFiniteInput, "Q-value is not finite");
  for (double x : tr) require(std::isfinite(x), Errc::NonFiniteInput, "target value is not finite");
  const double floor = std::min(*std::min_element(qr.begin(), qr.end()), *std::min_element(tr.begin(), tr.end()));
  return {normalize_from(qr, floor), normalize_from(tr, floor)};
}

/// Last-write-wins: only (s, a) changes.
inline void update_target(TargetBuffer& buf, int s, int a, double reward, double gamma, double q_next) {
  buf.store(s, a, reward + gamma * q_next);
}

/// CSV dump with header `state,action,value`.
inline void write_csv(std::ostream& os, const QTable& table) {
  os << "state,action,value\n";
  os.precision(17);
  for (int s = 0; s < table.n_states(); ++s)
    for (int a = 0; a < table.n_actions(); ++a) os << s << ',' << a << ',' << table(s, a) << '\n';
}

inline void write_csv(std::ostream& os, const TargetBuffer& buf) { write_csv(os, buf.table()); }

}  // namespace otsafe
