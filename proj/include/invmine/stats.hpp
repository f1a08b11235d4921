#pragma once

// Clopper-Pearson bounds for runs in which every trial succeeded.

namespace invmine {

/// Smallest n with (alpha/2)^(1/n) >= 1 - alpha. Throws
/// std::invalid_argument unless 0 < alpha < 1.
int cp_trials(double alpha);

/// Lower end of the two-sided confidence interval after n successes in n
/// trials: (alpha/2)^(1/n). Throws std::invalid_argument when n < 1.
double cp_lower_bound(int n, double alpha);

}  // namespace invmine
