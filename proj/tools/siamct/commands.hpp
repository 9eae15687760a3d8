// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "settings.hpp"

namespace siamct::cli {

struct BuildDatasetOptions {
    std::string source;
    std::string out;
    std::string mot_dir;
    std::string descriptions;
    std::vector<std::string> videos;
    std::string annotations;
    std::string lasot_dir;
    std::string instances;
    std::vector<std::string> classes;
    double threshold = 0.5;
    int synthetic_videos = 16;
    int synthetic_frames = 24;
    std::string frames_out;
    std::uint64_t seed = 0;
};

struct TrainOptions {
    std::string head;
    std::string manifest;
    std::string out;
    std::string init;
    std::string head_config;
    std::string optimizer;
    int epochs = 3;
    std::size_t samples_per_epoch = 2048;
    int frame_window = 100;
    std::size_t batch_size = 0;  // 0: the head's default
    double lr_scale = 1.0;
    std::uint64_t seed = 0;
    EncoderSettings encoder;
};

struct EvaluateOptions {
    std::string checkpoint;
    std::string manifest;
    std::string val_manifest;
    std::string predictions;
    std::string val;
    std::string model_id;
    std::string out;
    std::string frames_root;
    std::string features;
};

struct CalibrateOptions {
    std::string predictions;
    std::string objective = "f05";
    std::string out;
};

struct ReportOptions {
    std::vector<std::string> predictions;
    std::vector<std::string> val;
    std::string out;
    std::size_t bootstrap = 1000;
    double alpha = 0.05;
    std::size_t min_support = 20;
    std::uint64_t seed = 0;
};

struct ClipOptions {
    std::string predictions;
    std::string model_id;
    double threshold = 0.5;
    std::string calibration;
    int merge_gap = 0;
    std::string out;
};

struct AttentionOptions {
    std::string checkpoint;
    std::string manifest;
    std::string sequence;
    int frame = 0;
    std::string maps = "auto";  // auto, image, words
    std::string out;
    std::string frames_root;
    std::string features;
};

int build_dataset(const BuildDatasetOptions& o);
int train_command(const TrainOptions& o, bool pretrain);
int evaluate(const EvaluateOptions& o);
int calibrate(const CalibrateOptions& o);
int report(const ReportOptions& o);
int extract_clips(const ClipOptions& o);
int attention_maps(const AttentionOptions& o);

}  // namespace siamct::cli
