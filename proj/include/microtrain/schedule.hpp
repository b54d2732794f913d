#pragma once

#include <cstdint>

// Learning-rate schedules, stepped once per optimizer update.
//
// CosineWarmRestarts:
//   lr = eta_min + (eta_max - eta_min)/2 * (1 + cos(pi * t_cur / T_i))
//   with t_cur the step offset inside the current cycle and cycle lengths
//   T_i = round(T_0 * t_mult^i). At each boundary the rate snaps back to
//   eta_max.
//
// OneCycle:
//   cosine ramp from max_lr/div_factor up to max_lr over the first
//   round(pct_start * total_steps) steps, then cosine decay down to
//   max_lr/final_div_factor at step total_steps-1. Stepping past the end
//   throws.

namespace microtrain::schedule {

enum class Kind { Constant, CosineWarmRestarts, OneCycle };

struct Schedule {
  Kind kind = Kind::Constant;
  long long step = 0;

  // Constant
  double lr = 0.01;

  // CosineWarmRestarts
  double eta_min = 0.0;
  double eta_max = 0.01;
  long long t0 = 10;     // first cycle length, steps
  double t_mult = 1.0;   // cycle growth factor, >= 1

  // OneCycle
  double max_lr = 0.01;
  long long total_steps = 100;
  double pct_start = 0.3;
  double div_factor = 25.0;
  double final_div_factor = 1e4;

  // warm-restart bookkeeping maintained by advance()
  long long t_cur = 0;
  long long cycle = 0;
  long long cycle_len = 0;  // length of the current cycle; 0 = uninitialized

  void validate() const;  // throws std::invalid_argument
};

Schedule make_constant(double lr);
Schedule make_cosine_restarts(double eta_min, double eta_max, long long t0,
                              double t_mult);
Schedule make_one_cycle(double max_lr, long long total_steps, double pct_start,
                        double div_factor, double final_div_factor);

/// Length in steps of warm-restart cycle i.
long long restart_cycle_length(const Schedule& s, long long cycle_index);

/// Learning rate at the schedule's current step. Throws std::out_of_range
/// when a OneCycle schedule is stepped past total_steps-1.
double lr_at(const Schedule& s);

/// Value-semantics step: returns the state advanced by one step, updating
/// restart bookkeeping at cycle boundaries.
Schedule advance(Schedule s);

}  // namespace microtrain::schedule
