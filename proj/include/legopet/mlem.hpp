#pragma once

#include "legopet/projector.hpp"

namespace legopet::tomo {

struct MlemOptions {
    int n_iters = 60;
    int subsets = 4;  // 1 = plain MLEM
};

/// Multiplicative EM update x <- (x / A_k^T 1) .* A_k^T (y_k / A_k x) applied
/// per ordered subset of angles; nonnegative iterates from the all-ones init.
Array2D mlem_reconstruct(const Sinogram& sino, const SystemModel& model, const MlemOptions& opt);

/// Poisson log-likelihood sum_i [y_i log(Ax)_i - (Ax)_i] (log y! omitted).
double poisson_log_likelihood(const Sinogram& sino, const SystemModel& model, const Array2D& x);

}  // namespace legopet::tomo
