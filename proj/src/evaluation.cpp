// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "siamct/csv.hpp"
#include "siamct/datasets.hpp"
#include "siamct/errors.hpp"
#include "siamct/geometry.hpp"
#include "siamct/text_encoding.hpp"

namespace siamct::eval {

using nlohmann::json;

void write_predictions(std::ostream& out, std::span<const PredictionRecord> records)
{
    for (const auto& r : records) {
        json j = {{"sequence_id", r.sequence_id}, {"frame_index", r.frame_index}, {"score", r.score},
                  {"label", r.label},             {"sentence", r.sentence},       {"model_id", r.model_id}};
        out << j.dump() << '\n';
    }
}

std::vector<PredictionRecord> read_predictions(std::istream& in)
{
    std::vector<PredictionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const json j = json::parse(line);
            PredictionRecord r;
            r.sequence_id = j.at("sequence_id").get<std::string>();
            r.frame_index = j.at("frame_index").get<int>();
            r.score = j.at("score").get<double>();
            r.label = j.at("label").get<int>();
            r.sentence = j.value("sentence", "");
            r.model_id = j.value("model_id", "");
            if (r.label != 0 && r.label != 1) {
                throw FormatError(fmt::format("label {} is not 0 or 1", r.label));
            }
            if (!std::isfinite(r.score)) {
                throw FormatError("score is not finite");
            }
            records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw FormatError(fmt::format("predictions line {}: {}", line_no, e.what()));
        } catch (const FormatError& e) {
            throw FormatError(fmt::format("predictions line {}: {}", line_no, e.what()));
        }
    }
    return records;
}

void save_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> records)
{
    std::ofstream out(path);
    if (!out) {
        throw FormatError(fmt::format("cannot write '{}'", path.string()));
    }
    write_predictions(out, records);
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError(fmt::format("cannot open '{}'", path.string()));
    }
    return read_predictions(in);
}

// ---------------------------------------------------------------------------

Confusion confusion_at(std::span<const PredictionRecord> records, double threshold)
{
    Confusion c;
    for (const auto& r : records) {
        const bool predicted = r.score >= threshold;
        if (predicted) {
            (r.label == 1 ? c.tp : c.fp)++;
        } else {
            (r.label == 1 ? c.fn : c.tn)++;
        }
    }
    return c;
}

double f_beta(std::size_t tp, std::size_t fp, std::size_t fn, double beta)
{
    const double b2 = beta * beta;
    const double num = (1.0 + b2) * static_cast<double>(tp);
    const double den = num + b2 * static_cast<double>(fn) + static_cast<double>(fp);
    return den == 0.0 ? 0.0 : num / den;
}

double mcc(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn)
{
    const double a = static_cast<double>(tp), b = static_cast<double>(fp);
    const double c = static_cast<double>(fn), d = static_cast<double>(tn);
    const double den = (a + b) * (a + c) * (d + b) * (d + c);
    if (den == 0.0) {
        return 0.0;
    }
    return (a * d - b * c) / std::sqrt(den);
}

double f_beta(const Confusion& c, double beta)
{
    return f_beta(c.tp, c.fp, c.fn, beta);
}

double mcc(const Confusion& c)
{
    return mcc(c.tp, c.fp, c.fn, c.tn);
}

namespace {

struct Counts {
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

Counts count_labels(std::span<const PredictionRecord> records)
{
    Counts c;
    for (const auto& r : records) {
        (r.label == 1 ? c.positives : c.negatives)++;
    }
    return c;
}

// Indices sorted by decreasing score.
std::vector<std::size_t> by_score_desc(std::span<const PredictionRecord> records)
{
    std::vector<std::size_t> idx(records.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return records[a].score > records[b].score; });
    return idx;
}

struct Step {
    double threshold;
    std::size_t tp;
    std::size_t fp;
};

// Cumulative counts after each distinct score, highest first.
std::vector<Step> cumulative_steps(std::span<const PredictionRecord> records)
{
    const auto idx = by_score_desc(records);
    std::vector<Step> steps;
    std::size_t tp = 0, fp = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& r = records[idx[k]];
        (r.label == 1 ? tp : fp)++;
        if (k + 1 == idx.size() || records[idx[k + 1]].score != r.score) {
            steps.push_back({r.score, tp, fp});
        }
    }
    return steps;
}

}  // namespace

double average_precision(std::span<const PredictionRecord> records)
{
    const Counts n = count_labels(records);
    if (n.positives == 0) {
        throw ValidationError("average precision needs at least one positive record");
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (const Step& s : cumulative_steps(records)) {
        const double recall = static_cast<double>(s.tp) / static_cast<double>(n.positives);
        const double precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

double roc_auc(std::span<const PredictionRecord> records)
{
    const Counts n = count_labels(records);
    if (n.positives == 0 || n.negatives == 0) {
        throw ValidationError("ROC AUC needs both positive and negative records");
    }
    auto idx = by_score_desc(records);
    std::reverse(idx.begin(), idx.end());
    // Mid-ranks over ascending scores.
    double positive_rank_sum = 0.0;
    std::size_t k = 0;
    while (k < idx.size()) {
        std::size_t j = k;
        while (j + 1 < idx.size() && records[idx[j + 1]].score == records[idx[k]].score) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(k + j) + 1.0;
        for (std::size_t m = k; m <= j; ++m) {
            if (records[idx[m]].label == 1) {
                positive_rank_sum += rank;
            }
        }
        k = j + 1;
    }
    const double p = static_cast<double>(n.positives);
    const double q = static_cast<double>(n.negatives);
    return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

std::vector<PrPoint> pr_curve(std::span<const PredictionRecord> records)
{
    const Counts n = count_labels(records);
    if (n.positives == 0) {
        throw ValidationError("a precision-recall curve needs at least one positive record");
    }
    std::vector<PrPoint> pts;
    for (const Step& s : cumulative_steps(records)) {
        pts.push_back({s.threshold, static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp),
                       static_cast<double>(s.tp) / static_cast<double>(n.positives)});
    }
    return pts;
}

std::vector<RocPoint> roc_curve(std::span<const PredictionRecord> records)
{
    const Counts n = count_labels(records);
    if (n.positives == 0 || n.negatives == 0) {
        throw ValidationError("a ROC curve needs both positive and negative records");
    }
    std::vector<RocPoint> pts{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
    for (const Step& s : cumulative_steps(records)) {
        pts.push_back({s.threshold, static_cast<double>(s.fp) / static_cast<double>(n.negatives),
                       static_cast<double>(s.tp) / static_cast<double>(n.positives)});
    }
    return pts;
}

Objective f_beta_objective(double beta)
{
    return [beta](const Confusion& c) { return f_beta(c, beta); };
}

std::vector<double> candidate_thresholds(std::span<const PredictionRecord> records)
{
    std::vector<double> scores;
    scores.reserve(records.size());
    for (const auto& r : records) {
        scores.push_back(r.score);
    }
    std::sort(scores.begin(), scores.end());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
    std::vector<double> out{0.0, 1.0};
    for (std::size_t i = 0; i + 1 < scores.size(); ++i) {
        out.push_back(0.5 * (scores[i] + scores[i + 1]));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Calibration calibrate_threshold(std::span<const PredictionRecord> records, const Objective& objective)
{
    if (records.empty()) {
        throw ValidationError("cannot calibrate a threshold on zero records");
    }
    const Counts n = count_labels(records);
    if (n.positives == 0 || n.negatives == 0) {
        throw ValidationError("threshold calibration needs both positive and negative records");
    }
    // Ascending scores; records at index >= cut are predicted positive.
    auto idx = by_score_desc(records);
    std::reverse(idx.begin(), idx.end());
    std::vector<std::size_t> positives_below(idx.size() + 1, 0);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        positives_below[k + 1] = positives_below[k] + (records[idx[k]].label == 1 ? 1 : 0);
    }
    Calibration best{0.0, -std::numeric_limits<double>::infinity()};
    std::size_t cut = 0;
    for (double thr : candidate_thresholds(records)) {
        while (cut < idx.size() && records[idx[cut]].score < thr) {
            ++cut;
        }
        Confusion c;
        c.fn = positives_below[cut];
        c.tn = cut - c.fn;
        c.tp = n.positives - c.fn;
        c.fp = n.negatives - c.tn;
        const double value = objective(c);
        if (value > best.objective) {
            best = {thr, value};
        }
    }
    return best;
}

// ---------------------------------------------------------------------------

McNemarResult mcnemar_counts(std::size_t b, std::size_t c)
{
    McNemarResult r;
    r.b = b;
    r.c = c;
    const std::size_t n = b + c;
    if (n == 0) {
        r.p_value = 1.0;
        r.exact = true;
        return r;
    }
    if (n < 25) {
        r.exact = true;
        const std::size_t k_max = std::min(b, c);
        const double log_half_n = static_cast<double>(n) * std::log(0.5);
        const double nn = static_cast<double>(n);
        double tail = 0.0;
        for (std::size_t k = 0; k <= k_max; ++k) {
            const double kk = static_cast<double>(k);
            tail += std::exp(std::lgamma(nn + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0) + log_half_n);
        }
        r.p_value = std::min(1.0, 2.0 * tail);
        return r;
    }
    r.exact = false;
    const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
    const double chi2 = diff * diff / static_cast<double>(n);
    r.p_value = std::erfc(std::sqrt(chi2 / 2.0));
    return r;
}

McNemarResult mcnemar(std::span<const PredictionRecord> a, std::span<const PredictionRecord> b, double threshold_a,
                      double threshold_b)
{
    if (a.size() != b.size()) {
        throw ValidationError(fmt::format("McNemar needs aligned records, got {} and {}", a.size(), b.size()));
    }
    auto key = [](const PredictionRecord& r) { return fmt::format("{}\x1f{}", r.sequence_id, r.frame_index); };
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (!index.emplace(key(b[i]), i).second) {
            throw ValidationError(fmt::format("duplicate record {}/{}", b[i].sequence_id, b[i].frame_index));
        }
    }
    std::size_t right_wrong = 0, wrong_right = 0;
    std::set<std::size_t> seen;
    for (const auto& ra : a) {
        auto it = index.find(key(ra));
        if (it == index.end()) {
            throw ValidationError(fmt::format("record {}/{} has no counterpart", ra.sequence_id, ra.frame_index));
        }
        if (!seen.insert(it->second).second) {
            throw ValidationError(fmt::format("duplicate record {}/{}", ra.sequence_id, ra.frame_index));
        }
        const auto& rb = b[it->second];
        if (ra.label != rb.label) {
            throw ValidationError(fmt::format("record {}/{} has conflicting labels", ra.sequence_id, ra.frame_index));
        }
        const bool a_right = (ra.score >= threshold_a) == (ra.label == 1);
        const bool b_right = (rb.score >= threshold_b) == (rb.label == 1);
        if (a_right && !b_right) {
            ++right_wrong;
        } else if (!a_right && b_right) {
            ++wrong_right;
        }
    }
    return mcnemar_counts(right_wrong, wrong_right);
}

// ---------------------------------------------------------------------------

WordTable per_word_metrics(std::span<const PredictionRecord> records, std::size_t min_support)
{
    std::map<std::string, std::vector<PredictionRecord>> by_word;
    for (const auto& r : records) {
        const auto tokens = geometry::normalize_tokens(r.sentence);
        const std::set<std::string> words(tokens.begin(), tokens.end());
        for (const auto& w : words) {
            by_word[w].push_back(r);
        }
    }
    WordTable t;
    for (const auto& [word, subset] : by_word) {
        const Counts n = count_labels(subset);
        if (subset.size() < min_support) {
            t.notes.push_back(fmt::format("{}: support {} below {}", word, subset.size(), min_support));
            continue;
        }
        if (n.positives == 0) {
            t.notes.push_back(fmt::format("{}: no positive records", word));
            continue;
        }
        t.rows.push_back({word, subset.size(), n.positives, average_precision(subset)});
    }
    return t;
}

double quantile_sorted(std::span<const double> sorted, double q)
{
    if (sorted.empty()) {
        throw ValidationError("quantile of an empty sample");
    }
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::pair<double, double> bootstrap_mean_interval(std::span<const double> values, std::size_t resamples, double alpha,
                                                  std::uint64_t seed)
{
    if (values.empty() || resamples == 0) {
        throw ValidationError("bootstrap needs values and at least one resample");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError(fmt::format("alpha {} is outside (0, 1)", alpha));
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    std::vector<double> means(resamples);
    for (double& m : means) {
        double sum = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            sum += values[pick(rng)];
        }
        m = sum / static_cast<double>(values.size());
    }
    std::sort(means.begin(), means.end());
    return {quantile_sorted(means, alpha / 2.0), quantile_sorted(means, 1.0 - alpha / 2.0)};
}

SequenceTable per_sequence_bootstrap(std::span<const PredictionRecord> records, std::size_t resamples, double alpha,
                                     std::uint64_t seed)
{
    std::map<std::string, std::vector<PredictionRecord>> by_sequence;
    for (const auto& r : records) {
        by_sequence[r.sequence_id].push_back(r);
    }
    SequenceTable t;
    std::map<std::string, std::vector<double>> groups;
    for (const auto& [id, subset] : by_sequence) {
        if (count_labels(subset).positives == 0) {
            t.notes.push_back(fmt::format("{}: no positive records, excluded", id));
            continue;
        }
        const double ap = average_precision(subset);
        t.sequence_ap.emplace(id, ap);
        groups["all"].push_back(ap);
        const auto tokens = geometry::normalize_tokens(subset.front().sentence);
        for (const auto& w : std::set<std::string>(tokens.begin(), tokens.end())) {
            groups[w].push_back(ap);
        }
    }
    auto emit = [&](const std::string& name, const std::vector<double>& aps) {
        if (aps.size() < 2) {
            t.notes.push_back(fmt::format("{}: {} sequence(s), no interval", name, aps.size()));
            return;
        }
        double mean = 0.0;
        for (double v : aps) {
            mean += v;
        }
        mean /= static_cast<double>(aps.size());
        const auto [lo, hi] = bootstrap_mean_interval(aps, resamples, alpha, datasets::mix_seed(seed, text::fnv1a(name)));
        t.groups.push_back({name, aps.size(), mean, lo, hi});
    };
    if (auto it = groups.find("all"); it != groups.end()) {
        emit("all", it->second);
    } else {
        throw ValidationError("no sequence has a positive record");
    }
    for (const auto& [name, aps] : groups) {
        if (name != "all") {
            emit(name, aps);
        }
    }
    return t;
}

// ---------------------------------------------------------------------------

namespace {

ModelReport evaluate_model(const std::string& id, const std::vector<PredictionRecord>& test,
                           const std::vector<PredictionRecord>* validation)
{
    ModelReport m;
    m.model_id = id;
    m.records = test.size();
    m.positives = count_labels(test).positives;
    m.ap = average_precision(test);
    m.roc_auc = roc_auc(test);
    if (validation != nullptr) {
        m.has_validation = true;
        m.val_threshold = calibrate_threshold(*validation).threshold;
    }
    const Confusion at_val = confusion_at(test, m.val_threshold);
    m.f05_val = f_beta(at_val);
    m.mcc_val = mcc(at_val);
    m.optimal_threshold = calibrate_threshold(test).threshold;
    m.threshold_diff = m.optimal_threshold - m.val_threshold;
    const Confusion at_opt = confusion_at(test, m.optimal_threshold);
    m.f05_opt = f_beta(at_opt);
    m.mcc_opt = mcc(at_opt);
    const Confusion at_default = confusion_at(test, kDefaultThreshold);
    m.f05_default = f_beta(at_default);
    m.mcc_default = mcc(at_default);
    m.pr = pr_curve(test);
    m.roc = roc_curve(test);
    return m;
}

std::vector<PredictionRecord> constant_scores(const std::vector<PredictionRecord>& records, double score)
{
    std::vector<PredictionRecord> out = records;
    for (auto& r : out) {
        r.score = score;
        r.model_id = kBaselineId;
    }
    return out;
}

json threshold_json(double v)
{
    return std::isfinite(v) ? json(v) : json("inf");
}

}  // namespace

Report build_report(const std::map<std::string, std::vector<PredictionRecord>>& test,
                    const std::map<std::string, std::vector<PredictionRecord>>& validation)
{
    if (test.empty()) {
        throw ValidationError("a report needs at least one model");
    }
    for (const auto& [id, recs] : validation) {
        if (!test.contains(id)) {
            throw ValidationError(fmt::format("validation predictions for unknown model '{}'", id));
        }
        if (recs.empty()) {
            throw ValidationError(fmt::format("model '{}' has no validation records", id));
        }
    }
    Report r;
    for (const auto& [id, recs] : test) {
        if (id == kBaselineId) {
            throw ValidationError(fmt::format("model id '{}' is reserved", id));
        }
        auto it = validation.find(id);
        r.models.push_back(evaluate_model(id, recs, it == validation.end() ? nullptr : &it->second));
    }

    const auto& first_test = test.begin()->second;
    const std::vector<PredictionRecord>* first_val =
        validation.empty() ? nullptr : &validation.begin()->second;
    const Counts majority = count_labels(first_val != nullptr ? *first_val : first_test);
    const double constant = majority.positives > majority.negatives ? 1.0 : 0.0;
    const auto baseline_test = constant_scores(first_test, constant);
    if (first_val != nullptr) {
        const auto baseline_val = constant_scores(*first_val, constant);
        r.models.push_back(evaluate_model(kBaselineId, baseline_test, &baseline_val));
    } else {
        r.models.push_back(evaluate_model(kBaselineId, baseline_test, nullptr));
    }
    return r;
}

json to_json(const ModelReport& m, bool with_curves)
{
    json j = {{"model", m.model_id},
              {"records", m.records},
              {"positives", m.positives},
              {"ap", m.ap},
              {"roc_auc", m.roc_auc},
              {"has_validation", m.has_validation},
              {"val_threshold", m.val_threshold},
              {"f05_val", m.f05_val},
              {"mcc_val", m.mcc_val},
              {"optimal_threshold", m.optimal_threshold},
              {"threshold_diff", m.threshold_diff},
              {"f05_opt", m.f05_opt},
              {"mcc_opt", m.mcc_opt},
              {"f05_default", m.f05_default},
              {"mcc_default", m.mcc_default}};
    if (with_curves) {
        json pr = json::array();
        for (const auto& p : m.pr) {
            pr.push_back({{"threshold", threshold_json(p.threshold)}, {"precision", p.precision}, {"recall", p.recall}});
        }
        json roc = json::array();
        for (const auto& p : m.roc) {
            roc.push_back({{"threshold", threshold_json(p.threshold)}, {"fpr", p.fpr}, {"tpr", p.tpr}});
        }
        j["pr_curve"] = std::move(pr);
        j["roc_curve"] = std::move(roc);
    }
    return j;
}

json to_json(const Report& r)
{
    json models = json::array();
    for (const auto& m : r.models) {
        models.push_back(to_json(m, false));
    }
    return {{"models", std::move(models)}};
}

void write_table_csv(std::ostream& out, const Report& r)
{
    out << "model,ap,roc_auc,f05_val,mcc_val,val_threshold,optimal_threshold,threshold_diff,f05_opt,mcc_opt,"
           "f05_default,mcc_default\n";
    for (const auto& m : r.models) {
        out << csv::escape(m.model_id);
        for (double v : {m.ap, m.roc_auc, m.f05_val, m.mcc_val, m.val_threshold, m.optimal_threshold,
                         m.threshold_diff, m.f05_opt, m.mcc_opt, m.f05_default, m.mcc_default}) {
            out << ',' << csv::number(v);
        }
        out << '\n';
    }
}

std::string file_stem(const std::string& id)
{
    std::string out = id;
    for (char& ch : out) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '.' ||
                        ch == '_' || ch == '-';
        if (!ok) {
            ch = '_';
        }
    }
    return out;
}

void write_report(const std::filesystem::path& dir, const Report& r)
{
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream out(dir / name);
        if (!out) {
            throw FormatError(fmt::format("cannot write '{}'", (dir / name).string()));
        }
        return out;
    };
    {
        auto out = open("report.json");
        out << to_json(r).dump(2) << '\n';
    }
    {
        auto out = open("table.csv");
        write_table_csv(out, r);
    }
    for (const auto& m : r.models) {
        auto pr = open(fmt::format("pr_{}.csv", file_stem(m.model_id)));
        pr << "threshold,precision,recall\n";
        for (const auto& p : m.pr) {
            pr << csv::number(p.threshold) << ',' << csv::number(p.precision) << ',' << csv::number(p.recall) << '\n';
        }
        auto roc = open(fmt::format("roc_{}.csv", file_stem(m.model_id)));
        roc << "threshold,fpr,tpr\n";
        for (const auto& p : m.roc) {
            roc << csv::number(p.threshold) << ',' << csv::number(p.fpr) << ',' << csv::number(p.tpr) << '\n';
        }
    }
}

}  // namespace siamct::eval
