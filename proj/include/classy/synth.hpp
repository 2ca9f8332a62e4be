#pragma once

#include <cstdint>

#include "classy/data.hpp"

namespace classy {

struct BlobSpec {
    int n_samples = 1000;
    int n_features = 10;
    int n_classes = 3;
    // Distance between class centers in units of the (unit) within-class standard deviation.
    double separation = 4.0;
    // Probability that a sample's label is replaced by a different, uniformly chosen class.
    double label_noise = 0.0;
    std::uint64_t seed = 0;
};

/// Throws ConfigError on out-of-range parameters.
void validate(const BlobSpec& spec);

/// Isotropic Gaussian blobs with pairwise-equidistant centers (a randomly rotated
/// regular simplex) when n_features >= n_classes, random directions otherwise.
/// Classes are balanced before noise and every class keeps at least one sample.
Dataset make_blobs(const BlobSpec& spec);

} // namespace classy
