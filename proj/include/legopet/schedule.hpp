#pragma once

#include <vector>

namespace legopet::diffusion {

/// Variance schedule tables, 1-indexed through the accessors (t in [1, T]).
/// posterior_variance[t] is beta_t * (1 - abar_{t-1}) / (1 - abar_t) with
/// abar_0 := 1, so it is 0 at t = 1.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;
    std::vector<double> posterior_variance;

    double beta_at(int t) const { return beta[t - 1]; }
    double alpha_at(int t) const { return alpha[t - 1]; }
    double alpha_bar_at(int t) const { return alpha_bar[t - 1]; }
    double posterior_variance_at(int t) const { return posterior_variance[t - 1]; }
};

/// Linear beta ramp from beta_start to beta_end over T steps.
NoiseSchedule make_schedule(int T, double beta_start = 1e-4, double beta_end = 0.02);

}  // namespace legopet::diffusion
