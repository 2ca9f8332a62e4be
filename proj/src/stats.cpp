#include "classy/stats.hpp"

#include <algorithm>

#include "classy/error.hpp"

namespace classy {

namespace {

// Median of a scratch range; reorders it.
double median_inplace(std::vector<double>::iterator first, std::vector<double>::iterator last)
{
    const auto n = last - first;
    auto mid = first + n / 2;
    std::nth_element(first, mid, last);
    if (n % 2 == 1)
        return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(first, mid);
    return 0.5 * (lower + upper);
}

// Differences this small are floating-point noise, not evidence.
constexpr double stat_tolerance = 1e-12;

} // namespace

double median(std::span<const double> values)
{
    if (values.empty())
        throw DataError(DataErrorKind::empty, "median of an empty sample");
    std::vector<double> scratch(values.begin(), values.end());
    return median_inplace(scratch.begin(), scratch.end());
}

PermutationResult permutation_test(std::span<const double> a, std::span<const double> b, int rounds, double alpha,
                                   Rng& rng)
{
    if (a.empty() || b.empty())
        throw DataError(DataErrorKind::empty, "permutation_test: both samples must be non-empty");
    if (rounds < 1)
        throw ConfigError("permutation_test: rounds must be at least 1");

    PermutationResult r;
    r.rounds = rounds;
    r.observed_stat = median(b) - median(a);

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto split = static_cast<std::ptrdiff_t>(a.size());
    std::vector<double> scratch(pooled.size());
    long extreme = 0;
    for (int round = 0; round < rounds; ++round) {
        std::shuffle(pooled.begin(), pooled.end(), rng);
        std::copy(pooled.begin(), pooled.end(), scratch.begin());
        const double ma = median_inplace(scratch.begin(), scratch.begin() + split);
        const double mb = median_inplace(scratch.begin() + split, scratch.end());
        if (mb - ma >= r.observed_stat - stat_tolerance)
            ++extreme;
    }
    r.p_value = static_cast<double>(1 + extreme) / static_cast<double>(1 + rounds);
    r.significant = r.observed_stat > stat_tolerance && r.p_value < alpha;
    return r;
}

} // namespace classy
