// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "siamct/evaluation.hpp"
#include "siamct/geometry.hpp"

namespace siamct::testing {

/// Overlap of integer boxes by counting the unit cells of `constraint` that
/// also lie in `target`.
double raster_overlap(const geometry::BoundingBox& target, const geometry::BoundingBox& constraint);

/// Quadratic reference implementations of the ranking metrics.
double brute_average_precision(std::span<const eval::PredictionRecord> records);
double brute_roc_auc(std::span<const eval::PredictionRecord> records);
/// Every candidate threshold scored by a full pass over the records.
eval::Calibration brute_calibrate(std::span<const eval::PredictionRecord> records, const eval::Objective& objective);

/// 2 * sum_{k <= min(b, c)} C(b + c, k) / 2^(b + c), capped at 1, by exact
/// products of ratios.
double binomial_two_sided(std::size_t b, std::size_t c);

/// `n` records with scores on a coarse grid (to force ties) and both labels.
std::vector<eval::PredictionRecord> random_records(std::size_t n, std::uint64_t seed, int grid = 20);

}  // namespace siamct::testing
