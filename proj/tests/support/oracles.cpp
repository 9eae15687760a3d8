// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

namespace siamct::testing {

double raster_overlap(const geometry::BoundingBox& target, const geometry::BoundingBox& constraint)
{
    long inside = 0;
    long total = 0;
    for (long x = std::lround(constraint.left); x < std::lround(constraint.right()); ++x) {
        for (long y = std::lround(constraint.top); y < std::lround(constraint.bottom()); ++y) {
            ++total;
            if (x >= std::lround(target.left) && x < std::lround(target.right()) && y >= std::lround(target.top) &&
                y < std::lround(target.bottom())) {
                ++inside;
            }
        }
    }
    return static_cast<double>(inside) / static_cast<double>(total);
}

double brute_average_precision(std::span<const eval::PredictionRecord> records)
{
    std::set<double, std::greater<>> thresholds;
    double positives = 0.0;
    for (const auto& r : records) {
        thresholds.insert(r.score);
        positives += r.label;
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (double t : thresholds) {
        double tp = 0.0, predicted = 0.0;
        for (const auto& r : records) {
            if (r.score >= t) {
                predicted += 1.0;
                tp += r.label;
            }
        }
        const double recall = tp / positives;
        ap += (recall - prev_recall) * (tp / predicted);
        prev_recall = recall;
    }
    return ap;
}

double brute_roc_auc(std::span<const eval::PredictionRecord> records)
{
    double wins = 0.0, pairs = 0.0;
    for (const auto& p : records) {
        if (p.label != 1) {
            continue;
        }
        for (const auto& n : records) {
            if (n.label != 0) {
                continue;
            }
            pairs += 1.0;
            if (p.score > n.score) {
                wins += 1.0;
            } else if (p.score == n.score) {
                wins += 0.5;
            }
        }
    }
    return wins / pairs;
}

eval::Calibration brute_calibrate(std::span<const eval::PredictionRecord> records, const eval::Objective& objective)
{
    std::set<double> scores;
    for (const auto& r : records) {
        scores.insert(r.score);
    }
    std::set<double> candidates{0.0, 1.0};
    for (auto it = scores.begin(); std::next(it) != scores.end(); ++it) {
        candidates.insert((*it + *std::next(it)) / 2.0);
    }
    eval::Calibration best{0.0, -std::numeric_limits<double>::infinity()};
    for (double t : candidates) {
        eval::Confusion c;
        for (const auto& r : records) {
            const bool yes = r.score >= t;
            if (yes && r.label == 1) {
                ++c.tp;
            } else if (yes) {
                ++c.fp;
            } else if (r.label == 1) {
                ++c.fn;
            } else {
                ++c.tn;
            }
        }
        const double v = objective(c);
        if (v > best.objective) {
            best = {t, v};
        }
    }
    return best;
}

double binomial_two_sided(std::size_t b, std::size_t c)
{
    const std::size_t n = b + c;
    double term = std::pow(0.5, static_cast<double>(n));  // C(n, 0) / 2^n
    double tail = 0.0;
    for (std::size_t k = 0; k <= std::min(b, c); ++k) {
        tail += term;
        term *= static_cast<double>(n - k) / static_cast<double>(k + 1);
    }
    return std::min(1.0, 2.0 * tail);
}

std::vector<eval::PredictionRecord> random_records(std::size_t n, std::uint64_t seed, int grid)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> cell(0, grid);
    std::bernoulli_distribution coin(0.4);
    std::vector<eval::PredictionRecord> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = out[i];
        r.sequence_id = fmt::format("s{}", i % 5);
        r.frame_index = static_cast<int>(i) + 1;
        r.label = coin(rng) ? 1 : 0;
        // Positives lean higher so the metrics are not all near chance.
        const int bump = r.label == 1 ? grid / 4 : 0;
        r.score = std::min(grid, cell(rng) + bump) / static_cast<double>(grid);
        r.model_id = "m";
    }
    out[0].label = 1;
    out[1].label = 0;
    return out;
}

}  // namespace siamct::testing
