// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "siamct/attention_export.hpp"
#include "siamct/clips.hpp"
#include "siamct/csv.hpp"
#include "siamct/datasets.hpp"
#include "siamct/errors.hpp"
#include "siamct/evaluation.hpp"
#include "siamct/images.hpp"
#include "siamct/synthetic.hpp"
#include "siamct/training.hpp"

namespace siamct::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw FormatError(fmt::format("cannot write '{}'", path.string()));
    }
    return out;
}

json manifest_summary(const datasets::SequenceManifest& m)
{
    return {{"sequences", m.sequences.size()},
            {"frames", m.frame_count()},
            {"positives", m.positive_count()},
            {"positive_rate", m.positive_rate()}};
}

/// Line plot of (x, y) points in the unit square.
void plot_curve(const fs::path& path, const std::vector<cv::Point2d>& points, const std::string& title)
{
    constexpr int kSize = 400, kMargin = 30;
    cv::Mat img(kSize, kSize, CV_8UC3, cv::Scalar(255, 255, 255));
    const int span = kSize - 2 * kMargin;
    cv::rectangle(img, {kMargin, kMargin}, {kMargin + span, kMargin + span}, cv::Scalar(0, 0, 0));
    std::vector<cv::Point> px;
    for (const auto& p : points) {
        px.emplace_back(kMargin + static_cast<int>(std::lround(std::clamp(p.x, 0.0, 1.0) * span)),
                        kMargin + span - static_cast<int>(std::lround(std::clamp(p.y, 0.0, 1.0) * span)));
    }
    if (px.size() > 1) {
        cv::polylines(img, px, false, cv::Scalar(200, 80, 20), 2, cv::LINE_AA);
    }
    cv::putText(img, title, {kMargin, kMargin - 10}, cv::FONT_HERSHEY_SIMPLEX, 0.5, cv::Scalar(0, 0, 0), 1,
                cv::LINE_AA);
    if (!cv::imwrite(path.string(), img)) {
        throw FormatError(fmt::format("cannot write '{}'", path.string()));
    }
}

void plot_report(const fs::path& dir, const eval::Report& r)
{
    for (const auto& m : r.models) {
        std::vector<cv::Point2d> pr, roc;
        for (const auto& p : m.pr) {
            pr.emplace_back(p.recall, p.precision);
        }
        for (const auto& p : m.roc) {
            roc.emplace_back(p.fpr, p.tpr);
        }
        plot_curve(dir / fmt::format("pr_{}.png", eval::file_stem(m.model_id)), pr,
                   fmt::format("PR {} (AP {:.3f})", m.model_id, m.ap));
        plot_curve(dir / fmt::format("roc_{}.png", eval::file_stem(m.model_id)), roc,
                   fmt::format("ROC {} (AUC {:.3f})", m.model_id, m.roc_auc));
    }
}

std::map<std::string, std::vector<eval::PredictionRecord>> by_model(
    const std::vector<eval::PredictionRecord>& records, const std::string& fallback_id)
{
    std::map<std::string, std::vector<eval::PredictionRecord>> out;
    for (auto r : records) {
        if (r.model_id.empty()) {
            r.model_id = fallback_id;
        }
        out[r.model_id].push_back(std::move(r));
    }
    return out;
}

void merge_into(std::map<std::string, std::vector<eval::PredictionRecord>>& into, const std::string& path)
{
    const auto records = eval::load_predictions(path);
    for (auto& [id, recs] : by_model(records, fs::path(path).stem().string())) {
        auto& dst = into[id];
        if (!dst.empty()) {
            throw ValidationError(fmt::format("model '{}' appears in more than one predictions file", id));
        }
        dst = std::move(recs);
    }
}

struct LoadedModel {
    training::Checkpoint checkpoint;
    EncoderBundle encoder;
};

LoadedModel load_model(const std::string& checkpoint, const std::string& frames_root, const std::string& features)
{
    LoadedModel m;
    m.checkpoint = training::load_checkpoint(checkpoint);
    auto settings = EncoderSettings::from_json(m.checkpoint.run_info.value("encoder", json::object()));
    settings.frames_root = frames_root;
    if (!features.empty()) {
        settings.features = features;
    }
    m.encoder = make_encoder(settings, *m.checkpoint.head);
    return m;
}

std::vector<eval::PredictionRecord> predict_manifest(const model::Head& head, const pipeline::SampleEncoder& encoder,
                                                     const datasets::SequenceManifest& manifest,
                                                     const std::string& model_id)
{
    std::vector<eval::PredictionRecord> out;
    std::size_t skipped = 0;
    for (const auto& s : pipeline::evaluation_samples(manifest)) {
        if (!s.search_box) {
            ++skipped;
            continue;
        }
        const auto encoded = encoder.encode(s);
        out.push_back({s.sequence_id, s.search_frame, training::predict(head, encoded), s.label, s.sentence, model_id});
    }
    if (skipped > 0) {
        fmt::print(stderr, "skipped {} frames without a target box\n", skipped);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

int build_dataset(const BuildDatasetOptions& o)
{
    datasets::SequenceManifest manifest;
    if (o.source == "cmot") {
        const fs::path root = o.mot_dir.empty() ? data_root("") / "MOT16" / "train" : fs::path(o.mot_dir);
        std::vector<std::string> ids = o.videos;
        if (ids.empty()) {
            for (const auto& entry : fs::directory_iterator(root)) {
                if (fs::exists(entry.path() / "gt" / "gt.txt")) {
                    ids.push_back(entry.path().filename().string());
                }
            }
        }
        std::sort(ids.begin(), ids.end());
        if (ids.empty()) {
            throw ValidationError(fmt::format("no MOT videos under '{}'", root.string()));
        }
        std::vector<datasets::MotVideo> videos;
        for (const auto& id : ids) {
            videos.push_back({id, datasets::load_mot_groundtruth(root / id / "gt" / "gt.txt")});
        }
        if (o.descriptions.empty()) {
            throw ValidationError("cmot needs --descriptions");
        }
        manifest = datasets::build_cmot(videos, datasets::load_descriptions(o.descriptions), o.threshold);
    } else if (o.source == "clasot") {
        if (o.annotations.empty()) {
            throw ValidationError("clasot needs --annotations");
        }
        const auto rows = datasets::load_clasot_annotations(o.annotations);
        const fs::path root = o.lasot_dir.empty() ? data_root("") : fs::path(o.lasot_dir);
        std::map<std::string, datasets::LasotSequenceInfo> info;
        for (const auto& row : rows) {
            if (info.contains(row.sequence_id)) {
                continue;
            }
            const fs::path gt = root / row.category / row.sequence_id / "groundtruth.txt";
            std::ifstream in(gt);
            if (!in) {
                throw FormatError(fmt::format("cannot open '{}'", gt.string()));
            }
            datasets::LasotSequenceInfo seq;
            seq.target_boxes = datasets::parse_lasot_groundtruth(in);
            seq.frame_count = static_cast<int>(seq.target_boxes.size());
            info.emplace(row.sequence_id, std::move(seq));
        }
        manifest = datasets::load_clasot(rows, info);
    } else if (o.source == "coco") {
        if (o.instances.empty()) {
            throw ValidationError("coco needs --instances");
        }
        std::set<std::string> classes(o.classes.begin(), o.classes.end());
        if (classes.empty()) {
            for (auto c : datasets::constraint_classes()) {
                classes.emplace(c);
            }
        }
        const auto images = datasets::load_coco_instances(o.instances);
        const auto samples = datasets::generate_coco_samples(images, classes, o.threshold, o.seed);
        manifest = datasets::manifest_from_samples(samples);
    } else if (o.source == "synthetic") {
        synthetic::SyntheticConfig sc;
        sc.videos = o.synthetic_videos;
        sc.frames = o.synthetic_frames;
        sc.threshold = o.threshold;
        sc.seed = o.seed;
        const auto data = synthetic::SyntheticDataset::generate(sc);
        manifest = data.manifest();
        const fs::path frames =
            o.frames_out.empty() ? fs::path(o.out).parent_path() / "frames" : fs::path(o.frames_out);
        std::set<std::string> written;
        for (const auto& seq : manifest.sequences) {
            if (!written.insert(seq.video_id).second) {
                continue;
            }
            for (int f = 1; f <= sc.frames; ++f) {
                const fs::path p = images::frame_path(frames, "synthetic", seq.video_id, seq.category, f);
                fs::create_directories(p.parent_path());
                if (!cv::imwrite(p.string(), data.render(seq.video_id, f))) {
                    throw FormatError(fmt::format("cannot write '{}'", p.string()));
                }
            }
        }
    } else {
        throw ValidationError(fmt::format("unknown source '{}'", o.source));
    }
    datasets::save_manifest(o.out, manifest);
    fmt::print("{}\n", manifest_summary(manifest).dump());
    return 0;
}

int train_command(const TrainOptions& o, bool pretrain)
{
    const auto kind = model::parse_head_kind(o.head);
    std::unique_ptr<model::Head> head;
    if (!o.init.empty()) {
        auto ck = training::load_checkpoint(o.init);
        if (ck.head->kind() != kind) {
            throw ValidationError(fmt::format("'{}' holds a {} head, not {}", o.init, model::to_string(ck.head->kind()),
                                              model::to_string(kind)));
        }
        head = std::move(ck.head);
    } else {
        auto config = head_config(kind, o.encoder.scale, o.head_config);
        config["seed"] = o.seed;
        head = model::make_head(kind, config);
    }
    auto config = training::TrainConfig::defaults(kind);
    config.seed = o.seed;
    config.lr_scale = o.lr_scale;
    if (o.batch_size != 0) {
        config.batch_size = o.batch_size;
    }
    if (!o.optimizer.empty()) {
        config.optimizer = training::parse_optimizer(o.optimizer);
    }
    config.run_info = {{"encoder", o.encoder.to_json()}};

    const auto manifest = datasets::load_manifest(o.manifest);
    const auto encoder = make_encoder(o.encoder, *head);
    training::Stage stage;
    stage.name = pretrain ? "pretrain_coco" : "finetune";
    stage.manifest = &manifest;
    stage.encoder = encoder.encoder.get();
    stage.epochs = o.epochs;
    stage.samples_per_epoch = o.samples_per_epoch;
    stage.frame_window = o.frame_window;
    const std::vector<training::Stage> stages{stage};
    const auto history = training::train(*head, config, stages, o.out);
    for (const auto& h : history) {
        std::vector<cv::Point2d> pts;
        double top = 0.0;
        for (const auto& e : h.epochs) {
            fmt::print("{} epoch {} loss {:.6f} lr {:.6g}\n", h.name, e.epoch, e.mean_loss, e.lr);
            top = std::max(top, e.mean_loss);
        }
        for (const auto& e : h.epochs) {
            const double x = h.epochs.size() > 1 ? static_cast<double>(e.epoch - 1) / (h.epochs.size() - 1) : 0.0;
            pts.emplace_back(x, top > 0.0 ? e.mean_loss / top : 0.0);
        }
        plot_curve(fs::path(o.out) / fmt::format("loss_{}.png", h.name), pts, fmt::format("loss {}", h.name));
    }
    return 0;
}

int evaluate(const EvaluateOptions& o)
{
    std::map<std::string, std::vector<eval::PredictionRecord>> test, val;
    if (!o.checkpoint.empty()) {
        if (o.manifest.empty()) {
            throw ValidationError("--checkpoint needs --manifest");
        }
        if (!o.predictions.empty() || !o.val.empty()) {
            throw ValidationError("give either --checkpoint or --predictions, not both");
        }
        auto m = load_model(o.checkpoint, o.frames_root, o.features);
        const std::string id = o.model_id.empty() ? model::to_string(m.checkpoint.head->kind()) : o.model_id;
        const auto records =
            predict_manifest(*m.checkpoint.head, *m.encoder.encoder, datasets::load_manifest(o.manifest), id);
        fs::create_directories(o.out);
        eval::save_predictions(fs::path(o.out) / "predictions.jsonl", records);
        test[id] = records;
        if (!o.val_manifest.empty()) {
            const auto v = predict_manifest(*m.checkpoint.head, *m.encoder.encoder,
                                            datasets::load_manifest(o.val_manifest), id);
            eval::save_predictions(fs::path(o.out) / "val_predictions.jsonl", v);
            val[id] = v;
        }
    } else {
        if (o.predictions.empty()) {
            throw ValidationError("evaluate needs --checkpoint or --predictions");
        }
        test = by_model(eval::load_predictions(o.predictions), o.model_id.empty() ? "model" : o.model_id);
        if (!o.val.empty()) {
            val = by_model(eval::load_predictions(o.val), o.model_id.empty() ? "model" : o.model_id);
        }
    }
    const auto r = eval::build_report(test, val);
    eval::write_report(o.out, r);
    plot_report(o.out, r);
    eval::write_table_csv(std::cout, r);
    return 0;
}

int calibrate(const CalibrateOptions& o)
{
    eval::Objective objective;
    if (o.objective == "f05") {
        objective = eval::f_beta_objective();
    } else if (o.objective == "mcc") {
        objective = [](const eval::Confusion& c) { return eval::mcc(c); };
    } else {
        throw ValidationError(fmt::format("unknown objective '{}' (f05 or mcc)", o.objective));
    }
    json out = json::object();
    for (const auto& [id, recs] : by_model(eval::load_predictions(o.predictions), "model")) {
        const auto c = eval::calibrate_threshold(recs, objective);
        out[id] = {{"threshold", c.threshold}, {"objective", o.objective}, {"value", c.objective}};
    }
    if (!o.out.empty()) {
        auto f = open_out(o.out);
        f << out.dump(2) << '\n';
    }
    fmt::print("{}\n", out.dump());
    return 0;
}

int report(const ReportOptions& o)
{
    std::map<std::string, std::vector<eval::PredictionRecord>> test, val;
    for (const auto& p : o.predictions) {
        merge_into(test, p);
    }
    for (const auto& p : o.val) {
        merge_into(val, p);
    }
    const fs::path dir = o.out;
    const auto r = eval::build_report(test, val);
    eval::write_report(dir, r);
    plot_report(dir, r);

    for (const auto& [id, recs] : test) {
        const std::string stem = eval::file_stem(id);
        const auto words = eval::per_word_metrics(recs, o.min_support);
        auto wf = open_out(dir / fmt::format("per_word_{}.csv", stem));
        wf << "word,support,positives,ap\n";
        for (const auto& row : words.rows) {
            wf << csv::escape(row.word) << ',' << row.support << ',' << row.positives << ',' << csv::number(row.ap)
               << '\n';
        }
        for (const auto& note : words.notes) {
            fmt::print(stderr, "{} per-word: {}\n", id, note);
        }
        const auto seqs = eval::per_sequence_bootstrap(recs, o.bootstrap, o.alpha, o.seed);
        auto sf = open_out(dir / fmt::format("per_sequence_{}.csv", stem));
        sf << "group,sequences,mean_ap,ci_low,ci_high\n";
        for (const auto& g : seqs.groups) {
            sf << csv::escape(g.group) << ',' << g.sequences << ',' << csv::number(g.mean_ap) << ','
               << csv::number(g.ci_low) << ',' << csv::number(g.ci_high) << '\n';
        }
    }

    std::map<std::string, double> thresholds;
    for (const auto& m : r.models) {
        thresholds[m.model_id] = m.val_threshold;
    }
    auto mf = open_out(dir / "mcnemar.csv");
    mf << "model_a,model_b,b,c,p_value,exact\n";
    for (auto a = test.begin(); a != test.end(); ++a) {
        for (auto b = std::next(a); b != test.end(); ++b) {
            const auto t = eval::mcnemar(a->second, b->second, thresholds.at(a->first), thresholds.at(b->first));
            mf << csv::escape(a->first) << ',' << csv::escape(b->first) << ',' << t.b << ',' << t.c << ','
               << csv::number(t.p_value) << ',' << (t.exact ? "exact" : "chi2") << '\n';
        }
    }
    eval::write_table_csv(std::cout, r);
    return 0;
}

int extract_clips(const ClipOptions& o)
{
    auto models = by_model(eval::load_predictions(o.predictions), "model");
    std::string id = o.model_id;
    if (id.empty()) {
        if (models.size() != 1) {
            throw ValidationError("predictions hold several models; pick one with --model-id");
        }
        id = models.begin()->first;
    }
    const auto it = models.find(id);
    if (it == models.end()) {
        throw ValidationError(fmt::format("no predictions for model '{}'", id));
    }
    double threshold = o.threshold;
    if (!o.calibration.empty()) {
        std::ifstream in(o.calibration);
        if (!in) {
            throw FormatError(fmt::format("cannot open '{}'", o.calibration));
        }
        const json c = json::parse(in);
        if (!c.contains(id)) {
            throw ValidationError(fmt::format("'{}' has no threshold for model '{}'", o.calibration, id));
        }
        threshold = c.at(id).at("threshold").get<double>();
    }
    const auto manifests = clips::extract_all(it->second, threshold, o.merge_gap);
    if (o.out.empty()) {
        clips::write_clips_jsonl(std::cout, manifests);
    } else {
        auto f = open_out(o.out);
        clips::write_clips_jsonl(f, manifests);
    }
    return 0;
}

int attention_maps(const AttentionOptions& o)
{
    auto m = load_model(o.checkpoint, o.frames_root, o.features);
    const auto& head = *m.checkpoint.head;
    const auto manifest = datasets::load_manifest(o.manifest);
    const auto samples = pipeline::evaluation_samples(manifest);
    const datasets::ConstraintSample* chosen = nullptr;
    for (const auto& s : samples) {
        if (!s.search_box) {
            continue;
        }
        if ((o.sequence.empty() || s.sequence_id == o.sequence) && (o.frame == 0 || s.search_frame == o.frame)) {
            chosen = &s;
            break;
        }
    }
    if (chosen == nullptr) {
        throw ValidationError(fmt::format("no annotated frame matches sequence '{}' frame {}", o.sequence, o.frame));
    }
    const auto encoded = m.encoder.encoder->encode(*chosen);
    const auto output = training::predict_full(head, encoded);

    attention::ExportOptions opts;
    const bool dfg = model::is_dfg(head.kind());
    if (o.maps == "auto") {
        opts.image_maps = !dfg;
        opts.word_weights = dfg;
    } else if (o.maps == "image") {
        opts.image_maps = true;
        opts.word_weights = false;
    } else if (o.maps == "words") {
        opts.image_maps = false;
        opts.word_weights = true;
    } else {
        throw ValidationError(fmt::format("unknown --maps '{}' (auto, image or words)", o.maps));
    }
    opts.words = geometry::normalize_tokens(chosen->sentence);
    const auto files = attention::export_attention(head.kind(), output, o.out, opts);
    auto f = open_out(fs::path(o.out) / "sample.json");
    f << json{{"sequence_id", chosen->sequence_id},
              {"frame_index", chosen->search_frame},
              {"sentence", chosen->sentence},
              {"label", chosen->label},
              {"score", output.score.value().data.at(0)}}
             .dump(2)
      << '\n';
    fmt::print("wrote {} files to {}\n", files.size() + 1, o.out);
    return 0;
}

}  // namespace siamct::cli
