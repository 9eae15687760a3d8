// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include <exception>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "commands.hpp"

namespace {

using namespace siamct::cli;

void add_encoder_flags(CLI::App* app, EncoderSettings& e)
{
    app->add_option("--scale", e.scale, "desk or full dimensions")->check(CLI::IsMember({"desk", "full"}));
    app->add_option("--backbone-seed", e.backbone_seed, "seed of the toy backbone");
    app->add_option("--words", e.words, "hash[:seed[:dim]] or a binary word2vec file");
    app->add_option("--sentence-length", e.sentence_length, "words kept per sentence");
    app->add_option("--frames-root", e.frames_root, "frame directory root (default $SIAMCT_DATA_ROOT)");
    app->add_option("--features", e.features, "precomputed feature store instead of the backbone");
}

void add_config_flag(CLI::App* app)
{
    app->add_option("--config", "flat key=value file; command-line flags take precedence");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Lingual constraint prediction for visual tracking"};
    app.require_subcommand(1);

    BuildDatasetOptions build;
    auto* b = app.add_subcommand("build-dataset", "build a sequence manifest");
    add_config_flag(b);
    b->add_option("--source", build.source, "cmot, clasot, coco or synthetic")
        ->required()
        ->check(CLI::IsMember({"cmot", "clasot", "coco", "synthetic"}));
    b->add_option("--out", build.out, "manifest path (JSON lines)")->required();
    b->add_option("--mot-dir", build.mot_dir, "MOT16 train directory");
    b->add_option("--descriptions", build.descriptions, "video_id,track_id,sentence CSV");
    b->add_option("--videos", build.videos, "MOT videos to include")->delimiter(',');
    b->add_option("--annotations", build.annotations, "c-LaSOT constraint CSV");
    b->add_option("--lasot-dir", build.lasot_dir, "LaSOT root with <category>/<video>/groundtruth.txt");
    b->add_option("--instances", build.instances, "COCO instances JSON");
    b->add_option("--classes", build.classes, "COCO constraint classes")->delimiter(',');
    b->add_option("--threshold", build.threshold, "overlap threshold");
    b->add_option("--synthetic-videos", build.synthetic_videos, "synthetic videos")->check(CLI::PositiveNumber);
    b->add_option("--synthetic-frames", build.synthetic_frames, "frames per synthetic video")
        ->check(CLI::PositiveNumber);
    b->add_option("--frames-out", build.frames_out, "where synthetic frames are written");
    b->add_option("--seed", build.seed, "random seed");

    TrainOptions pre_opts, train_opts;
    auto add_train = [&](const char* name, const char* help, TrainOptions& t, bool with_init) {
        auto* s = app.add_subcommand(name, help);
        add_config_flag(s);
        s->add_option("--head", t.head, "dfg, dfg_no_att, ca or ca_ppm")
            ->required()
            ->check(CLI::IsMember({"dfg", "dfg_no_att", "ca", "ca_ppm"}));
        s->add_option("--manifest", t.manifest, "training manifest")->required();
        s->add_option("--out", t.out, "output directory")->required();
        if (with_init) {
            s->add_option("--init", t.init, "checkpoint to start from");
        }
        s->add_option("--head-config", t.head_config, "head configuration JSON");
        s->add_option("--optimizer", t.optimizer, "sgd or adam (default per head)")
            ->check(CLI::IsMember({"sgd", "adam"}));
        s->add_option("--epochs", t.epochs, "epochs")->check(CLI::PositiveNumber);
        s->add_option("--samples-per-epoch", t.samples_per_epoch, "samples drawn per epoch")
            ->check(CLI::PositiveNumber);
        s->add_option("--frame-window", t.frame_window, "max reference/search frame distance");
        s->add_option("--batch-size", t.batch_size, "batch size (default per head)");
        s->add_option("--lr-scale", t.lr_scale, "multiplier on the schedule")->check(CLI::PositiveNumber);
        s->add_option("--seed", t.seed, "random seed");
        add_encoder_flags(s, t.encoder);
        return s;
    };
    auto* pre = add_train("pretrain", "pre-train a head (COCO stage)", pre_opts, false);
    auto* tr = add_train("train", "train or fine-tune a head", train_opts, true);

    EvaluateOptions ev;
    auto* e = app.add_subcommand("evaluate", "score a manifest and/or report metrics");
    add_config_flag(e);
    e->add_option("--checkpoint", ev.checkpoint, "model checkpoint");
    e->add_option("--manifest", ev.manifest, "test manifest");
    e->add_option("--val-manifest", ev.val_manifest, "validation manifest");
    e->add_option("--predictions", ev.predictions, "test predictions (JSON lines)");
    e->add_option("--val", ev.val, "validation predictions (JSON lines)");
    e->add_option("--model-id", ev.model_id, "model id for new predictions");
    e->add_option("--out", ev.out, "output directory")->required();
    e->add_option("--frames-root", ev.frames_root, "frame directory root");
    e->add_option("--features", ev.features, "precomputed feature store");

    CalibrateOptions cal;
    auto* c = app.add_subcommand("calibrate", "pick thresholds on validation predictions");
    add_config_flag(c);
    c->add_option("--predictions", cal.predictions, "validation predictions")->required();
    c->add_option("--objective", cal.objective, "f05 or mcc")->check(CLI::IsMember({"f05", "mcc"}));
    c->add_option("--out", cal.out, "thresholds JSON");

    ReportOptions rep;
    auto* r = app.add_subcommand("report", "full comparison of several models");
    add_config_flag(r);
    r->add_option("--predictions", rep.predictions, "test predictions, one or more files")->required();
    r->add_option("--val", rep.val, "validation predictions");
    r->add_option("--out", rep.out, "output directory")->required();
    r->add_option("--bootstrap", rep.bootstrap, "bootstrap resamples")->check(CLI::PositiveNumber);
    r->add_option("--alpha", rep.alpha, "interval level")->check(CLI::Range(0.0, 1.0));
    r->add_option("--min-support", rep.min_support, "minimum records per word");
    r->add_option("--seed", rep.seed, "random seed");

    ClipOptions clip;
    auto* x = app.add_subcommand("extract-clips", "frame intervals where the constraint holds");
    add_config_flag(x);
    x->add_option("--predictions", clip.predictions, "predictions")->required();
    x->add_option("--model-id", clip.model_id, "model to use");
    auto* thr = x->add_option("--threshold", clip.threshold, "score threshold");
    x->add_option("--calibration", clip.calibration, "thresholds JSON from calibrate")->excludes(thr);
    x->add_option("--merge-gap", clip.merge_gap, "merge clips separated by at most this many frames")
        ->check(CLI::NonNegativeNumber);
    x->add_option("--out", clip.out, "clips JSON lines (default stdout)");

    AttentionOptions att;
    auto* a = app.add_subcommand("attention-maps", "export attention for one sample");
    add_config_flag(a);
    a->add_option("--checkpoint", att.checkpoint, "model checkpoint")->required();
    a->add_option("--manifest", att.manifest, "manifest holding the sample")->required();
    a->add_option("--sequence", att.sequence, "sequence id (default first)");
    a->add_option("--frame", att.frame, "frame index (default first annotated)");
    a->add_option("--maps", att.maps, "auto, image or words")->check(CLI::IsMember({"auto", "image", "words"}));
    a->add_option("--out", att.out, "output directory")->required();
    a->add_option("--frames-root", att.frames_root, "frame directory root");
    a->add_option("--features", att.features, "precomputed feature store");

    std::vector<std::string> args(argv, argv + argc);
    try {
        args = expand_config(args);
    } catch (const std::exception& ex) {
        fmt::print(stderr, "error: {}\n", ex.what());
        return 2;
    }
    std::vector<const char*> cargs;
    for (const auto& s : args) {
        cargs.push_back(s.c_str());
    }
    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex);
        return code == 0 ? 0 : 2;
    }

    try {
        if (b->parsed()) {
            return build_dataset(build);
        }
        if (pre->parsed()) {
            return train_command(pre_opts, true);
        }
        if (tr->parsed()) {
            return train_command(train_opts, false);
        }
        if (e->parsed()) {
            return evaluate(ev);
        }
        if (c->parsed()) {
            return calibrate(cal);
        }
        if (r->parsed()) {
            return report(rep);
        }
        if (x->parsed()) {
            return extract_clips(clip);
        }
        if (a->parsed()) {
            return attention_maps(att);
        }
    } catch (const std::exception& ex) {
        fmt::print(stderr, "error: {}\n", ex.what());
        return 1;
    }
    return 2;
}
