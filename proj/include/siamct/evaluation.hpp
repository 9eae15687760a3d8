// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace siamct::eval {

inline constexpr double kDefaultThreshold = 0.5;
inline constexpr double kBeta = 0.5;
inline constexpr std::size_t kMinWordSupport = 20;

struct PredictionRecord {
    std::string sequence_id;
    int frame_index = 0;
    double score = 0.0;
    int label = 0;
    std::string sentence;
    std::string model_id;

    bool operator==(const PredictionRecord&) const = default;
};

void write_predictions(std::ostream& out, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions(std::istream& in);
void save_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
};

/// Predicted positive iff score >= threshold.
Confusion confusion_at(std::span<const PredictionRecord> records, double threshold);

/// (1 + b^2) P R / (b^2 P + R); 0 when undefined.
double f_beta(std::size_t tp, std::size_t fp, std::size_t fn, double beta = kBeta);
/// Matthews correlation; 0 when any marginal is empty.
double mcc(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

double f_beta(const Confusion& c, double beta = kBeta);
double mcc(const Confusion& c);

/// All-points average precision: sum over distinct score thresholds, in
/// decreasing order, of (R_k - R_{k-1}) P_k.
double average_precision(std::span<const PredictionRecord> records);

/// Mann-Whitney estimate P(s+ > s-) + P(s+ = s-) / 2.
double roc_auc(std::span<const PredictionRecord> records);

struct PrPoint {
    double threshold;
    double precision;
    double recall;
};
struct RocPoint {
    double threshold;
    double fpr;
    double tpr;
};

/// One point per distinct score, thresholds decreasing.
std::vector<PrPoint> pr_curve(std::span<const PredictionRecord> records);
/// Starts at (0, 0) with threshold +inf, one point per distinct score.
std::vector<RocPoint> roc_curve(std::span<const PredictionRecord> records);

using Objective = std::function<double(const Confusion&)>;
Objective f_beta_objective(double beta = kBeta);

struct Calibration {
    double threshold = kDefaultThreshold;
    double objective = 0.0;
};

/// Best threshold among {0, 1} and the midpoints between consecutive
/// distinct scores; ties go to the lowest threshold.
Calibration calibrate_threshold(std::span<const PredictionRecord> records, const Objective& objective = f_beta_objective());

/// Candidate thresholds swept by calibrate_threshold, ascending.
std::vector<double> candidate_thresholds(std::span<const PredictionRecord> records);

struct McNemarResult {
    std::size_t b = 0;  // A right, B wrong
    std::size_t c = 0;  // A wrong, B right
    double p_value = 1.0;
    bool exact = true;
};

/// Two-sided McNemar test on records aligned by (sequence id, frame index):
/// exact binomial when b + c < 25, continuity-corrected chi-square otherwise.
McNemarResult mcnemar(std::span<const PredictionRecord> a, std::span<const PredictionRecord> b, double threshold_a,
                      double threshold_b);
/// The p-value from the discordant counts alone.
McNemarResult mcnemar_counts(std::size_t b, std::size_t c);

struct WordRow {
    std::string word;
    std::size_t support = 0;
    std::size_t positives = 0;
    double ap = 0.0;
};

struct WordTable {
    std::vector<WordRow> rows;        // sorted by word
    std::vector<std::string> notes;   // words left out and why
};

/// AP over the records whose sentence contains each word, for words with at
/// least `min_support` records.
WordTable per_word_metrics(std::span<const PredictionRecord> records, std::size_t min_support = kMinWordSupport);

struct GroupInterval {
    std::string group;  // "all" or a word
    std::size_t sequences = 0;
    double mean_ap = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct SequenceTable {
    std::map<std::string, double> sequence_ap;
    std::vector<GroupInterval> groups;
    std::vector<std::string> notes;
};

/// Per-sequence AP, its mean over all sequences and over the sequences whose
/// sentence contains each word, with percentile bootstrap intervals from
/// `resamples` draws of sequences with replacement.
SequenceTable per_sequence_bootstrap(std::span<const PredictionRecord> records, std::size_t resamples, double alpha,
                                     std::uint64_t seed);

/// Percentile bootstrap of the mean of `values`; returns {low, high}.
std::pair<double, double> bootstrap_mean_interval(std::span<const double> values, std::size_t resamples, double alpha,
                                                  std::uint64_t seed);

/// Linear-interpolation quantile of sorted data, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

struct ModelReport {
    std::string model_id;
    std::size_t records = 0;
    std::size_t positives = 0;
    double ap = 0.0;
    double roc_auc = 0.0;
    bool has_validation = false;
    double val_threshold = kDefaultThreshold;
    double f05_val = 0.0;
    double mcc_val = 0.0;
    double optimal_threshold = kDefaultThreshold;
    double threshold_diff = 0.0;  // optimal - validation
    double f05_opt = 0.0;
    double mcc_opt = 0.0;
    double f05_default = 0.0;
    double mcc_default = 0.0;
    std::vector<PrPoint> pr;
    std::vector<RocPoint> roc;
};

struct Report {
    std::vector<ModelReport> models;  // input models by id, then the majority baseline
};

inline constexpr const char* kBaselineId = "majority_baseline";

/// One row per model plus a majority-class baseline (a constant score of 1
/// or 0 for the class that is the majority of the validation records, or of
/// the test records when there is no validation set).
Report build_report(const std::map<std::string, std::vector<PredictionRecord>>& test,
                    const std::map<std::string, std::vector<PredictionRecord>>& validation = {});

nlohmann::json to_json(const ModelReport& m, bool with_curves = true);
nlohmann::json to_json(const Report& r);

/// Columns: model, AP, ROC AUC, F0.5 and MCC at the validation threshold,
/// validation threshold, optimal threshold, threshold diff, F0.5 and MCC at
/// the optimal threshold, F0.5 and MCC at 0.5.
void write_table_csv(std::ostream& out, const Report& r);

/// `id` with every character outside [A-Za-z0-9._-] replaced by '_'.
std::string file_stem(const std::string& id);

/// report.json, table.csv, pr_<model>.csv and roc_<model>.csv in `dir`.
void write_report(const std::filesystem::path& dir, const Report& r);

}  // namespace siamct::eval
