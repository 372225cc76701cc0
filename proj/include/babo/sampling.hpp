#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string_view>

namespace babo {

using Rng = std::mt19937_64;

/// Deterministic child seed; used to give every (method, repetition, purpose)
/// its own RNG stream so results do not depend on scheduling order.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

/// n points in [0,1]^d (rows); each column hits every stratum [k/n, (k+1)/n)
/// exactly once.
Eigen::MatrixXd latin_hypercube(int n, int d, std::uint64_t seed);

/// Randomized (Cranley-Patterson shifted) Halton points, n x d, d <= 64.
/// Column j of a d-dimensional set equals column j of any wider set built
/// with the same seed, which keeps nested batches coupled.
Eigen::MatrixXd shifted_halton(int n, int d, std::uint64_t seed);

/// Standard-normal quasi-random base samples: quantile of shifted_halton.
Eigen::MatrixXd normal_base_samples(int n, int d, std::uint64_t seed);

}  // namespace babo
