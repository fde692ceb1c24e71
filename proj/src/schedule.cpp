#include "legopet/schedule.hpp"

#include "legopet/errors.hpp"

namespace legopet::diffusion {

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw ConfigError("make_schedule: T must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw ConfigError("make_schedule: need 0 < beta_start <= beta_end < 1");

    NoiseSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    s.posterior_variance.resize(T);
    double abar = 1.0;
    for (int i = 0; i < T; ++i) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
        s.beta[i] = beta_start + (beta_end - beta_start) * frac;
        s.alpha[i] = 1.0 - s.beta[i];
        const double abar_prev = abar;
        abar *= s.alpha[i];
        s.alpha_bar[i] = abar;
        s.posterior_variance[i] = s.beta[i] * (1.0 - abar_prev) / (1.0 - abar);
    }
    return s;
}

}  // namespace legopet::diffusion
