#pragma once

#include <span>
#include <vector>

#include "classy/random.hpp"

namespace classy {

/// Median; the mean of the two middle values for even lengths.
/// Throws DataError on empty input.
double median(std::span<const double> values);

struct PermutationResult {
    double observed_stat = 0.0;  // median(b) - median(a)
    double p_value = 1.0;
    int rounds = 0;
    bool significant = false;
};

/// One-sided permutation test of median(b) > median(a). Each round relabels the
/// pooled scores keeping group sizes; p = (1 + #{stat >= observed}) / (1 + rounds).
/// Significant when the observed difference is positive and p < alpha.
PermutationResult permutation_test(std::span<const double> a, std::span<const double> b, int rounds, double alpha,
                                   Rng& rng);

} // namespace classy
