#include "microtrain/schedule.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace microtrain::schedule {

void Schedule::validate() const {
  switch (kind) {
    case Kind::Constant:
      // zero is allowed: a null-optimization run is a useful control
      if (!(lr >= 0.0))
        throw std::invalid_argument("schedule: lr must be >= 0");
      break;
    case Kind::CosineWarmRestarts:
      if (!(eta_min >= 0.0 && eta_min <= eta_max))
        throw std::invalid_argument(
            "schedule: need 0 <= eta_min <= eta_max, got eta_min=" +
            std::to_string(eta_min) + " eta_max=" + std::to_string(eta_max));
      if (t0 < 1) throw std::invalid_argument("schedule: T_0 must be >= 1");
      if (!(t_mult >= 1.0))
        throw std::invalid_argument("schedule: t_mult must be >= 1");
      break;
    case Kind::OneCycle:
      if (!(max_lr > 0.0))
        throw std::invalid_argument("schedule: max_lr must be > 0");
      if (total_steps < 2)
        throw std::invalid_argument("schedule: total_steps must be >= 2");
      if (!(pct_start > 0.0 && pct_start < 1.0))
        throw std::invalid_argument("schedule: pct_start must be in (0,1)");
      if (!(div_factor > 1.0 && final_div_factor > 1.0))
        throw std::invalid_argument("schedule: div factors must be > 1");
      break;
  }
}

Schedule make_constant(double lr) {
  Schedule s;
  s.kind = Kind::Constant;
  s.lr = lr;
  s.validate();
  return s;
}

Schedule make_cosine_restarts(double eta_min, double eta_max, long long t0,
                              double t_mult) {
  Schedule s;
  s.kind = Kind::CosineWarmRestarts;
  s.eta_min = eta_min;
  s.eta_max = eta_max;
  s.t0 = t0;
  s.t_mult = t_mult;
  s.validate();
  s.cycle_len = restart_cycle_length(s, 0);
  return s;
}

Schedule make_one_cycle(double max_lr, long long total_steps, double pct_start,
                        double div_factor, double final_div_factor) {
  Schedule s;
  s.kind = Kind::OneCycle;
  s.max_lr = max_lr;
  s.total_steps = total_steps;
  s.pct_start = pct_start;
  s.div_factor = div_factor;
  s.final_div_factor = final_div_factor;
  s.validate();
  return s;
}

long long restart_cycle_length(const Schedule& s, long long cycle_index) {
  const double len =
      static_cast<double>(s.t0) * std::pow(s.t_mult, static_cast<double>(cycle_index));
  const long long l = std::llround(len);
  return l < 1 ? 1 : l;
}

double lr_at(const Schedule& s) {
  switch (s.kind) {
    case Kind::Constant:
      return s.lr;
    case Kind::CosineWarmRestarts: {
      const long long len = s.cycle_len > 0 ? s.cycle_len : restart_cycle_length(s, 0);
      const double frac =
          static_cast<double>(s.t_cur) / static_cast<double>(len);
      return s.eta_min + 0.5 * (s.eta_max - s.eta_min) *
                             (1.0 + std::cos(std::numbers::pi * frac));
    }
    case Kind::OneCycle: {
      if (s.step >= s.total_steps)
        throw std::out_of_range(
            "schedule: one-cycle exhausted at step " + std::to_string(s.step) +
            " of " + std::to_string(s.total_steps));
      const long long warm =
          std::llround(s.pct_start * static_cast<double>(s.total_steps));
      const double initial = s.max_lr / s.div_factor;
      const double final_lr = s.max_lr / s.final_div_factor;
      if (s.step == warm) return s.max_lr;  // peak, exact
      if (s.step < warm && warm > 0) {
        const double frac =
            static_cast<double>(s.step) / static_cast<double>(warm);
        return initial + (s.max_lr - initial) * 0.5 *
                             (1.0 - std::cos(std::numbers::pi * frac));
      }
      const long long span = (s.total_steps - 1) - warm;
      if (span <= 0) return final_lr;
      const double frac =
          static_cast<double>(s.step - warm) / static_cast<double>(span);
      return final_lr + (s.max_lr - final_lr) * 0.5 *
                            (1.0 + std::cos(std::numbers::pi * frac));
    }
  }
  throw std::logic_error("schedule: unknown kind");
}

Schedule advance(Schedule s) {
  ++s.step;
  if (s.kind == Kind::CosineWarmRestarts) {
    if (s.cycle_len <= 0) s.cycle_len = restart_cycle_length(s, 0);
    ++s.t_cur;
    if (s.t_cur >= s.cycle_len) {
      s.t_cur = 0;
      ++s.cycle;
      s.cycle_len = restart_cycle_length(s, s.cycle);
    }
  }
  return s;
}

}  // namespace microtrain::schedule
