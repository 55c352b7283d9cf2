#include "jsqdiff/checks.hpp"

#include <algorithm>
#include <cmath>

namespace jsqdiff {

ReflectionAuditor::ReflectionAuditor(const DiffusionParams& params)
    : beta_(params.beta), dt_(params.dt), sqrt_2dt_(std::sqrt(2.0 * params.dt)) {}

void ReflectionAuditor::on_step(const DiffusionState& prev, const DiffusionState& next,
                                double delta_l) {
  ++steps_;
  if (!(next.q1 <= 0.0) || !(next.q2 > 0.0) || next.local_time < prev.local_time) ++violations_;
  if (delta_l > 0.0 && next.q1 != 0.0) ++violations_;
  const double ds = (next.q1 + next.q2) - (prev.q1 + prev.q2);
  const double expected = sqrt_2dt_ * next.w_increment_last - beta_ * dt_ - prev.q1 * dt_;
  const double bound = std::max(1.0, prev.q2) * dt_ * dt_;
  worst_ratio_ = std::max(worst_ratio_, std::abs(ds - expected) / bound);
}

InvariantReport audit_reflection(const DiffusionParams& params, std::uint64_t steps,
                                 std::uint64_t stream) {
  params.validate();
  ReflectionAuditor auditor(params);
  PathObserver* obs[] = {&auditor};
  DiffusionPath path(params, stream);
  path.run(steps, obs);
  InvariantReport r;
  r.steps = auditor.steps();
  r.violations = auditor.violations();
  r.worst_identity_ratio = auditor.worst_identity_ratio();
  r.pass = r.steps == steps && r.violations == 0 && r.worst_identity_ratio <= 1.0;
  return r;
}

OracleReport check_bm_hit_oracle(double beta, const BmHitMcOptions& options) {
  const HitQuery query{0.0, 1.0, -1.0};
  OracleReport r;
  r.closed_form = hit_up_before_down(ScaleSpec::bm_drift(-beta), query);
  r.mc = mc_bm_hit_up_before_down(-beta, query, options);
  r.z_score = r.mc.std_err > 0.0 ? (r.mc.value - r.closed_form) / r.mc.std_err : INFINITY;
  r.pass = std::abs(r.z_score) <= 3.0;
  return r;
}

RegenInvariantReport audit_regeneration(const DiffusionParams& params, double B,
                                        std::size_t min_cycles, double max_horizon,
                                        std::uint64_t stream) {
  auto config = RegenConfig::for_params(params, B);
  config.max_cycles = min_cycles;
  DiffusionParams p = params;
  p.q1_init = 0.0;
  p.q2_init = 2.0 * B;
  CycleObserver observer(config);
  PathObserver* obs[] = {&observer};
  DiffusionPath path(p, stream);
  path.run(steps_for_horizon(max_horizon, p.dt), obs);
  const auto& d = observer.detector();
  RegenInvariantReport r;
  r.cycles = d.cycles().size();
  r.tolerance = config.tolerance_q1;
  r.max_abs_q1 = d.max_abs_q1_at_regen();
  r.violations = d.regen_tolerance_violations();
  r.pass = r.cycles >= min_cycles && r.violations == 0;
  return r;
}

}  // namespace jsqdiff
