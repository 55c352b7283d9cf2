#include "jsqdiff/hitting.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <string>

#include "jsqdiff/errors.hpp"
#include "jsqdiff/rng.hpp"

namespace jsqdiff {

void HitQuery::validate() const {
  if (!std::isfinite(start) || !std::isfinite(up_level) || !std::isfinite(down_level)) {
    throw ConfigError("hit query levels must be finite");
  }
  if (!(down_level < up_level)) throw ConfigError("down_level must be below up_level");
  if (start < down_level || start > up_level) {
    throw ConfigError("start must lie in [down_level, up_level]");
  }
}

double scale_value(const ScaleSpec& spec, double z) {
  if (!std::isfinite(z)) throw NumericError("scale function argument must be finite");
  if (z == 0.0) return 0.0;
  if (spec.kind == ScaleSpec::Kind::bm_drift) {
    const double mu = spec.drift_mu;
    if (std::abs(mu) < 1e-8) {
      // series of (1 - e^{-mu z}) / mu around mu = 0
      return z - mu * z * z / 2.0 + mu * mu * z * z * z / 6.0;
    }
    return -std::expm1(-mu * z) / mu;
  }

  const double c = spec.center;
  if (std::abs(z) < 1e-6) {
    // midpoint rule, relative error O(z^2)
    return z * std::exp(0.5 * (0.5 * z - c) * (0.5 * z - c));
  }
  auto integrand = [c](double w) { return std::exp(0.5 * (w - c) * (w - c)); };
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, z, 15, 1e-12, &error);
  if (!std::isfinite(value) || error > 1e-10 * std::abs(value)) {
    throw NumericError("OU scale quadrature did not converge at z=" + std::to_string(z));
  }
  return value;
}

double hit_up_before_down(const ScaleSpec& spec, const HitQuery& query) {
  query.validate();
  if (query.start >= query.up_level) return 1.0;
  if (query.start <= query.down_level) return 0.0;
  const double s_down = scale_value(spec, query.down_level);
  const double s_up = scale_value(spec, query.up_level);
  const double span = s_up - s_down;
  if (!(std::abs(span) > 0.0) || !std::isfinite(span)) {
    throw NumericError("degenerate scale function: s(up) == s(down)");
  }
  return (scale_value(spec, query.start) - s_down) / span;
}

ProbEstimate mc_bm_hit_up_before_down(double mu, const HitQuery& query,
                                      const BmHitMcOptions& options) {
  query.validate();
  if (!(options.dt > 0.0)) throw ConfigError("dt must be positive");
  if (options.paths == 0) throw ConfigError("paths must be positive");
  const double sigma2 = 2.0;
  const double sd = std::sqrt(sigma2 * options.dt);
  const double drift = mu * options.dt;
  const auto max_steps = steps_for_horizon(options.max_time, options.dt);

  std::size_t hits = 0;
  for (std::size_t p = 0; p < options.paths; ++p) {
    RandomStream rng(options.seed, p);
    double x = query.start;
    if (x >= query.up_level) {
      ++hits;
      continue;
    }
    if (x <= query.down_level) continue;
    for (std::uint64_t k = 0; k < max_steps; ++k) {
      const double next = x + drift + sd * rng.normal();
      if (next >= query.up_level) {
        ++hits;
        break;
      }
      if (next <= query.down_level) break;
      if (options.bridge_correction) {
        // Crossing probabilities of a Brownian bridge with variance sigma2*dt
        // between x and next; the drift does not change bridge law.
        const double var = sigma2 * options.dt;
        const double p_up = std::exp(-2.0 * (query.up_level - x) * (query.up_level - next) / var);
        const double p_down =
            std::exp(-2.0 * (x - query.down_level) * (next - query.down_level) / var);
        const double u = rng.uniform();
        if (u < p_up) {
          ++hits;
          break;
        }
        if (u < p_up + p_down) break;
      }
      x = next;
    }
  }
  return binomial_estimate(hits, options.paths);
}

ProbEstimate hit_fraction(std::span<const Cycle> cycles, const HitTarget& target) {
  if (cycles.empty()) throw InsufficientDataError("hit fraction needs at least one cycle");
  std::size_t hits = 0;
  for (const auto& c : cycles) {
    const bool hit = target.kind == HitTarget::Kind::q2_up ? c.max_q2 >= target.level
                                                           : c.min_q1 <= -target.level;
    if (hit) ++hits;
  }
  return binomial_estimate(hits, cycles.size());
}

std::vector<ProbEstimate> mc_hit_before_regen(const DiffusionParams& params,
                                              const RegenConfig& config,
                                              std::span<const HitTarget> targets,
                                              const HitMcOptions& options) {
  for (const auto& t : targets) {
    if (t.kind == HitTarget::Kind::q2_up && !(t.level >= 2.0 * config.B)) {
      throw ConfigError("q2_up target must be >= 2B");
    }
    if (t.kind == HitTarget::Kind::q1_down && !(t.level > 0.0)) {
      throw ConfigError("q1_down target must be > 0");
    }
  }
  if (options.replicas == 0 || options.cycles < options.replicas) {
    throw ConfigError("replicas must be in [1, cycles]");
  }
  std::vector<Cycle> all;
  for (std::size_t r = 0; r < options.replicas; ++r) {
    RegenConfig cfg = config;
    cfg.max_cycles = options.cycles / options.replicas +
                     (r < options.cycles % options.replicas ? 1 : 0);
    auto cycles = simulate_cycles(params, cfg, options.max_horizon, r);
    all.insert(all.end(), std::make_move_iterator(cycles.begin()),
               std::make_move_iterator(cycles.end()));
  }
  if (all.size() < 2) throw InsufficientDataError("fewer than 2 cycles completed");
  std::vector<ProbEstimate> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(hit_fraction(all, t));
  return out;
}

double q2_hit_lower_bound(double beta, double B, double y) {
  return -std::expm1(-beta * B) * std::exp(-beta * (y - 2.0 * B));
}

}  // namespace jsqdiff
