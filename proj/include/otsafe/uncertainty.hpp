#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "otsafe/action_dist.hpp"
#include "otsafe/ot.hpp"

namespace otsafe {

struct UncertaintyScores {
  std::vector<double> delta;  // per-action flow imbalance
  double total = 0.0;         // W(Q_s, T_t)
  std::vector<double> u;      // delta / total, or zeros under the guard
};

/// How uncertainty scores are computed. An empty cost means the 0-1 matrix
/// sized to the action count.
struct OtSettings {
  OtMode mode = OtMode::Oracle;
  SinkhornConfig sinkhorn;
  double guard = 1e-8;
  Normalization normalization = Normalization::ShiftMin;
  std::optional<CostMatrix> cost;

  CostMatrix cost_for(std::size_t n) const { return cost ? *cost : zero_one_cost(n); }
};

/// |outgoing off-diagonal mass - incoming off-diagonal mass| per support point.
inline std::vector<double> flow_imbalance(const TransportPlan& plan) {
  const Matrix& p = plan.entries;
  require(p.square(), Errc::DimensionMismatch, "flow imbalance needs a square plan");
  const std::size_t n = p.rows();
  std::vector<double> delta(n);
  for (std::size_t i = 0; i < n; ++i) {
    double out = 0.0, in = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      if (b == i) continue;
      out += p(i, b);
      in += p(b, i);
    }
    delta[i] = std::abs(out - in);
  }
  return delta;
}

inline UncertaintyScores uncertainty_scores(const ActionDistPair& pair, const CostMatrix& cost,
                                            const SinkhornConfig& cfg, double guard = 1e-8,
                                            OtMode mode = OtMode::Sinkhorn) {
  require(pair.q_dist.size() == pair.t_dist.size(), Errc::DimensionMismatch, "Q and T supports differ");
  require(guard > 0.0, Errc::InvalidArgument, "guard must be > 0");

  const TransportResult r = mode == OtMode::Oracle ? exact_ot(pair.q_dist, pair.t_dist, cost)
                                                   : sinkhorn(pair.q_dist, pair.t_dist, cost, cfg);
  UncertaintyScores out;
  out.delta = flow_imbalance(r.plan);
  out.total = r.cost;
  out.u.assign(out.delta.size(), 0.0);
  if (out.total > guard)
    for (std::size_t i = 0; i < out.u.size(); ++i) out.u[i] = out.delta[i] / out.total;
  return out;
}

inline UncertaintyScores uncertainty_scores(const ActionDistPair& pair, const OtSettings& ot) {
  return uncertainty_scores(pair, ot.cost_for(pair.q_dist.size()), ot.sinkhorn, ot.guard, ot.mode);
}

/// Scores for state s given the learner's Q-table and target buffer.
inline UncertaintyScores state_uncertainty(const QTable& q, const TargetBuffer& buf, int s, const OtSettings& ot) {
  return uncertainty_scores(action_distributions(q, buf, s, ot.normalization), ot);
}

}  // namespace otsafe
