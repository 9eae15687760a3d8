// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "siamct/csv.hpp"

namespace siamct::datasets {

namespace {

using nlohmann::json;

json box_json(const std::optional<BoundingBox>& box)
{
    if (!box) {
        return nullptr;
    }
    return json::array({box->left, box->top, box->width, box->height});
}

std::optional<BoundingBox> box_from_json(const json& j)
{
    if (j.is_null()) {
        return std::nullopt;
    }
    if (!j.is_array() || j.size() != 4) {
        throw FormatError("box must be [left, top, width, height]");
    }
    BoundingBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    geometry::validate(b);
    return b;
}

int parse_int(const std::string& s, std::string_view what)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        return static_cast<int>(v);
    } catch (const std::exception&) {
        throw FormatError(fmt::format("{}: '{}' is not a number", what, s));
    }
}

double parse_double(const std::string& s, std::string_view what)
{
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw FormatError(fmt::format("{}: '{}' is not a number", what, s));
    }
}

std::ifstream open_or_throw(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError(fmt::format("cannot open '{}'", path.string()));
    }
    return in;
}

bool blank(const std::string& line)
{
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    // splitmix64 finalizer over the combined key
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------

std::size_t SequenceManifest::frame_count() const
{
    std::size_t n = 0;
    for (const auto& s : sequences) {
        n += s.frames.size();
    }
    return n;
}

std::size_t SequenceManifest::positive_count() const
{
    std::size_t n = 0;
    for (const auto& s : sequences) {
        for (const auto& f : s.frames) {
            n += static_cast<std::size_t>(f.label);
        }
    }
    return n;
}

double SequenceManifest::positive_rate() const
{
    const std::size_t n = frame_count();
    return n == 0 ? 0.0 : static_cast<double>(positive_count()) / static_cast<double>(n);
}

void write_manifest_jsonl(std::ostream& out, const SequenceManifest& manifest)
{
    for (const auto& s : manifest.sequences) {
        for (const auto& f : s.frames) {
            json j;
            j["sequence_id"] = s.sequence_id;
            j["source"] = s.source;
            j["video_id"] = s.video_id;
            j["category"] = s.category;
            j["target_id"] = s.target_id;
            j["constraint_id"] = s.constraint_id;
            j["sentence"] = s.sentence;
            j["augment"] = s.augment_search;
            j["frame_index"] = f.frame_index;
            j["target_box"] = box_json(f.target_box);
            j["constraint_box"] = box_json(f.constraint_box);
            j["label"] = f.label;
            out << j.dump() << '\n';
        }
    }
}

SequenceManifest read_manifest_jsonl(std::istream& in)
{
    SequenceManifest m;
    std::unordered_map<std::string, std::size_t> index;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) {
            continue;
        }
        try {
            const json j = json::parse(line);
            const std::string id = j.at("sequence_id").get<std::string>();
            auto [it, inserted] = index.emplace(id, m.sequences.size());
            if (inserted) {
                ConstraintSequence s;
                s.sequence_id = id;
                s.source = j.value("source", "");
                s.video_id = j.value("video_id", "");
                s.category = j.value("category", "");
                s.target_id = j.value("target_id", -1);
                s.constraint_id = j.value("constraint_id", -1);
                s.sentence = j.at("sentence").get<std::string>();
                s.augment_search = j.value("augment", false);
                m.sequences.push_back(std::move(s));
            }
            auto& seq = m.sequences[it->second];
            FrameLabel f;
            f.frame_index = j.at("frame_index").get<int>();
            f.target_box = box_from_json(j.value("target_box", json(nullptr)));
            f.constraint_box = box_from_json(j.value("constraint_box", json(nullptr)));
            f.label = j.at("label").get<int>();
            if (f.label != 0 && f.label != 1) {
                throw FormatError("label must be 0 or 1");
            }
            if (!seq.frames.empty() && seq.frames.back().frame_index >= f.frame_index) {
                throw FormatError("frames of a sequence must be strictly increasing");
            }
            seq.frames.push_back(f);
        } catch (const json::exception& e) {
            throw FormatError(fmt::format("manifest line {}: {}", line_no, e.what()));
        } catch (const std::invalid_argument& e) {
            throw FormatError(fmt::format("manifest line {}: {}", line_no, e.what()));
        } catch (const FormatError& e) {
            throw FormatError(fmt::format("manifest line {}: {}", line_no, e.what()));
        }
    }
    return m;
}

void save_manifest(const std::filesystem::path& path, const SequenceManifest& manifest)
{
    std::ofstream out(path);
    if (!out) {
        throw FormatError(fmt::format("cannot write '{}'", path.string()));
    }
    write_manifest_jsonl(out, manifest);
}

SequenceManifest load_manifest(const std::filesystem::path& path)
{
    auto in = open_or_throw(path);
    return read_manifest_jsonl(in);
}

// ---------------------------------------------------------------------------

std::vector<TrackFrame> parse_mot_groundtruth(std::istream& in, std::string_view source_name)
{
    std::vector<TrackFrame> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) {
            continue;
        }
        const auto f = csv::split_line(line);
        if (f.size() < 6) {
            throw FormatError(fmt::format("{}:{}: expected at least 6 columns", source_name, line_no));
        }
        const auto where = fmt::format("{}:{}", source_name, line_no);
        TrackFrame t;
        t.frame_index = parse_int(f[0], where);
        t.track_id = parse_int(f[1], where);
        t.box = {parse_double(f[2], where), parse_double(f[3], where), parse_double(f[4], where),
                 parse_double(f[5], where)};
        if (f.size() >= 9) {
            t.visibility = parse_double(f[8], where);
        }
        if (t.frame_index < 1) {
            throw FormatError(fmt::format("{}: frames are 1-based", where));
        }
        try {
            geometry::validate(t.box);
        } catch (const ValidationError& e) {
            throw FormatError(fmt::format("{}: {}", where, e.what()));
        }
        rows.push_back(t);
    }
    return rows;
}

std::vector<TrackFrame> load_mot_groundtruth(const std::filesystem::path& path)
{
    auto in = open_or_throw(path);
    return parse_mot_groundtruth(in, path.string());
}

DescriptionTable parse_descriptions(std::istream& in)
{
    DescriptionTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line) || (line_no == 1 && line.rfind("video_id", 0) == 0)) {
            continue;
        }
        const auto f = csv::split_line(line);
        if (f.size() != 3) {
            throw FormatError(fmt::format("descriptions line {}: expected 3 columns, got {}", line_no, f.size()));
        }
        const int id = parse_int(f[1], fmt::format("descriptions line {}", line_no));
        table[f[0]][id] = geometry::ObjectDescription::from_sentence(f[2]);
    }
    return table;
}

DescriptionTable load_descriptions(const std::filesystem::path& path)
{
    auto in = open_or_throw(path);
    return parse_descriptions(in);
}

MissingDescriptionError::MissingDescriptionError(std::vector<std::string> missing)
    : ValidationError(fmt::format("tracks without a description: {}", fmt::join(missing, ", "))),
      missing_(std::move(missing))
{
}

SequenceManifest build_cmot(std::span<const MotVideo> videos, const DescriptionTable& descriptions, double threshold)
{
    geometry::validate_threshold(threshold);

    std::vector<std::string> missing;
    for (const auto& video : videos) {
        const auto vit = descriptions.find(video.video_id);
        std::set<int> ids;
        for (const auto& row : video.tracks) {
            ids.insert(row.track_id);
        }
        for (int id : ids) {
            if (vit == descriptions.end() || !vit->second.contains(id)) {
                missing.push_back(fmt::format("{}:{}", video.video_id, id));
            }
        }
    }
    if (!missing.empty()) {
        throw MissingDescriptionError(std::move(missing));
    }

    SequenceManifest manifest;
    for (const auto& video : videos) {
        const auto& desc = descriptions.at(video.video_id);

        std::map<int, std::map<int, BoundingBox>> frames;  // frame -> track -> box
        std::set<int> track_ids;
        for (const auto& row : video.tracks) {
            if (!frames[row.frame_index].emplace(row.track_id, row.box).second) {
                throw ValidationError(fmt::format("{}: track {} appears twice in frame {}", video.video_id,
                                                  row.track_id, row.frame_index));
            }
            track_ids.insert(row.track_id);
        }

        // described_by[C] = tracks B whose description is a sub-multiset of C's.
        std::map<int, std::vector<int>> described_by;
        for (int c : track_ids) {
            for (int b : track_ids) {
                if (geometry::description_subset(desc.at(b), desc.at(c))) {
                    described_by[c].push_back(b);
                }
            }
        }

        std::map<std::pair<int, int>, std::set<int>> positive_frames;
        for (const auto& [frame, boxes] : frames) {
            for (const auto& [a, a_box] : boxes) {
                for (const auto& [c, c_box] : boxes) {
                    if (c == a || geometry::compute_overlap(a_box, c_box) < threshold) {
                        continue;
                    }
                    for (int b : described_by[c]) {
                        if (b != a) {
                            positive_frames[{a, b}].insert(frame);
                        }
                    }
                }
            }
        }

        for (const auto& [pair, positives] : positive_frames) {
            const auto [a, b] = pair;
            ConstraintSequence seq;
            seq.sequence_id = fmt::format("{}:{}:{}", video.video_id, a, b);
            seq.source = "cmot";
            seq.video_id = video.video_id;
            seq.target_id = a;
            seq.constraint_id = b;
            seq.sentence = desc.at(b).raw_sentence;
            for (const auto& [frame, boxes] : frames) {
                const auto ait = boxes.find(a);
                if (ait == boxes.end()) {
                    continue;
                }
                FrameLabel f;
                f.frame_index = frame;
                f.target_box = ait->second;
                if (const auto bit = boxes.find(b); bit != boxes.end()) {
                    f.constraint_box = bit->second;
                }
                f.label = positives.contains(frame) ? 1 : 0;
                seq.frames.push_back(f);
            }
            manifest.sequences.push_back(std::move(seq));
        }
    }
    return manifest;
}

// ---------------------------------------------------------------------------

std::vector<ConstraintTrackAnnotation> parse_clasot_annotations(std::istream& in)
{
    std::vector<ConstraintTrackAnnotation> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line) || (line_no == 1 && line.rfind("constraint_track", 0) == 0)) {
            continue;
        }
        const auto f = csv::split_line(line);
        if (f.size() != 6) {
            throw FormatError(fmt::format("c-LaSOT line {}: expected 6 columns, got {}", line_no, f.size()));
        }
        const auto where = fmt::format("c-LaSOT line {}", line_no);
        rows.push_back({f[0], f[1], f[2], parse_int(f[3], where), parse_int(f[4], where), f[5]});
    }
    return rows;
}

std::vector<ConstraintTrackAnnotation> load_clasot_annotations(const std::filesystem::path& path)
{
    auto in = open_or_throw(path);
    return parse_clasot_annotations(in);
}

std::vector<std::optional<BoundingBox>> parse_lasot_groundtruth(std::istream& in)
{
    std::vector<std::optional<BoundingBox>> boxes;
    std::string line;
    while (std::getline(in, line)) {
        if (blank(line)) {
            continue;
        }
        const auto f = csv::split_line(line);
        if (f.size() < 4) {
            throw FormatError(fmt::format("LaSOT groundtruth line {}: expected 4 columns", boxes.size() + 1));
        }
        BoundingBox b{parse_double(f[0], "x"), parse_double(f[1], "y"), parse_double(f[2], "w"),
                      parse_double(f[3], "h")};
        if (b.width > 0.0 && b.height > 0.0) {
            boxes.emplace_back(b);
        } else {
            boxes.emplace_back(std::nullopt);
        }
    }
    return boxes;
}

SequenceManifest load_clasot(std::span<const ConstraintTrackAnnotation> rows,
                             const std::map<std::string, LasotSequenceInfo>& sequences)
{
    std::map<std::string, std::vector<const ConstraintTrackAnnotation*>> tracks;
    std::vector<std::string> order;
    for (const auto& row : rows) {
        if (row.constraint_from > row.constraint_till) {
            throw ValidationError(fmt::format("constraint track {}: interval [{}, {}] is malformed",
                                              row.constraint_track, row.constraint_from, row.constraint_till));
        }
        auto& group = tracks[row.constraint_track];
        if (group.empty()) {
            order.push_back(row.constraint_track);
        } else if (group.front()->sequence_id != row.sequence_id) {
            throw ValidationError(fmt::format("constraint track {} spans sequences {} and {}", row.constraint_track,
                                              group.front()->sequence_id, row.sequence_id));
        }
        group.push_back(&row);
    }

    SequenceManifest manifest;
    for (const auto& id : order) {
        const auto& group = tracks.at(id);
        const auto& first = *group.front();
        const auto info = sequences.find(first.sequence_id);
        if (info == sequences.end()) {
            throw ValidationError(fmt::format("no frame count for sequence {}", first.sequence_id));
        }
        const int frame_count = info->second.frame_count;
        const auto& boxes = info->second.target_boxes;
        if (!boxes.empty() && boxes.size() != static_cast<std::size_t>(frame_count)) {
            throw ValidationError(fmt::format("sequence {}: {} boxes for {} frames", first.sequence_id, boxes.size(),
                                              frame_count));
        }
        std::vector<int> labels(static_cast<std::size_t>(frame_count), 0);
        for (const auto* row : group) {
            if (row->constraint_from < 1 || row->constraint_till > frame_count) {
                throw ValidationError(fmt::format("constraint track {}: interval [{}, {}] outside [1, {}]", id,
                                                  row->constraint_from, row->constraint_till, frame_count));
            }
            for (int f = row->constraint_from; f <= row->constraint_till; ++f) {
                labels[static_cast<std::size_t>(f - 1)] = 1;
            }
        }
        ConstraintSequence seq;
        seq.sequence_id = id;
        seq.source = "clasot";
        seq.video_id = first.sequence_id;
        seq.category = first.category;
        seq.sentence = first.sentence;
        for (int f = 1; f <= frame_count; ++f) {
            FrameLabel fl;
            fl.frame_index = f;
            if (!boxes.empty()) {
                fl.target_box = boxes[static_cast<std::size_t>(f - 1)];
            }
            fl.label = labels[static_cast<std::size_t>(f - 1)];
            seq.frames.push_back(fl);
        }
        manifest.sequences.push_back(std::move(seq));
    }
    return manifest;
}

const std::array<ClassCount, 6>& clasot_class_inventory()
{
    static const std::array<ClassCount, 6> inventory{{
        {"car", 14},
        {"person", 69},
        {"backpack", 2},
        {"cat", 3},
        {"hand", 10},
        {"bottle", 2},
    }};
    return inventory;
}

std::map<std::string, int> count_constraint_classes(std::span<const ConstraintTrackAnnotation> rows)
{
    std::map<std::string, std::set<std::string>> seen;
    for (const auto& row : rows) {
        const auto& known = constraint_classes();
        std::string cls;
        for (const auto& tok : geometry::normalize_tokens(row.sentence)) {
            if (std::find(known.begin(), known.end(), tok) != known.end()) {
                cls = tok;
                break;
            }
        }
        if (!cls.empty()) {
            seen[cls].insert(row.sequence_id);
        }
    }
    std::map<std::string, int> counts;
    for (const auto& [cls, seqs] : seen) {
        counts[cls] = static_cast<int>(seqs.size());
    }
    return counts;
}

// ---------------------------------------------------------------------------

std::vector<CocoImage> parse_coco_instances(const nlohmann::json& doc)
{
    std::map<int, std::string> categories;
    for (const auto& c : doc.at("categories")) {
        categories[c.at("id").get<int>()] = c.at("name").get<std::string>();
    }
    std::map<int, CocoImage> images;
    for (const auto& im : doc.at("images")) {
        CocoImage img;
        img.image_id = im.at("id").get<int>();
        img.file_name = im.value("file_name", "");
        images.emplace(img.image_id, std::move(img));
    }
    for (const auto& a : doc.at("annotations")) {
        if (a.value("iscrowd", 0) != 0) {
            continue;
        }
        const auto& bbox = a.at("bbox");
        BoundingBox box{bbox.at(0).get<double>(), bbox.at(1).get<double>(), bbox.at(2).get<double>(),
                        bbox.at(3).get<double>()};
        if (!(box.width > 0.0 && box.height > 0.0)) {
            continue;
        }
        const int image_id = a.at("image_id").get<int>();
        auto it = images.find(image_id);
        if (it == images.end()) {
            throw FormatError(fmt::format("annotation {} references unknown image {}", a.value("id", -1), image_id));
        }
        const auto cat = categories.find(a.at("category_id").get<int>());
        if (cat == categories.end()) {
            throw FormatError("annotation references an unknown category");
        }
        it->second.objects.push_back({a.at("id").get<int>(), box, cat->second});
    }
    std::vector<CocoImage> out;
    out.reserve(images.size());
    for (auto& [id, img] : images) {
        std::sort(img.objects.begin(), img.objects.end(),
                  [](const CocoObject& x, const CocoObject& y) { return x.annotation_id < y.annotation_id; });
        out.push_back(std::move(img));
    }
    return out;
}

std::vector<CocoImage> load_coco_instances(const std::filesystem::path& path)
{
    auto in = open_or_throw(path);
    return parse_coco_instances(nlohmann::json::parse(in));
}

const std::array<std::string_view, 6>& constraint_classes()
{
    static const std::array<std::string_view, 6> classes{"car", "person", "backpack", "cat", "hand", "bottle"};
    return classes;
}

const std::array<std::string_view, 6>& sentence_templates()
{
    static const std::array<std::string_view, 6> templates{
        "with a {object}",     "close to a {object}", "close by a {object}",
        "adjacent to a {object}", "besides a {object}",  "along a {object}",
    };
    return templates;
}

std::string apply_template(std::size_t template_index, std::string_view object)
{
    std::string s(sentence_templates().at(template_index));
    const std::string key = "{object}";
    s.replace(s.find(key), key.size(), object);
    return s;
}

std::vector<ConstraintSample> generate_coco_samples(std::span<const CocoImage> images,
                                                    const std::set<std::string>& allowed_classes, double threshold,
                                                    std::uint64_t seed)
{
    geometry::validate_threshold(threshold);
    for (const auto& cls : allowed_classes) {
        const auto& known = constraint_classes();
        if (std::find(known.begin(), known.end(), cls) == known.end()) {
            throw ValidationError(fmt::format("'{}' is not one of the six constraint classes", cls));
        }
    }

    std::vector<ConstraintSample> samples;
    for (const auto& img : images) {
        if (img.objects.size() < 2) {
            continue;
        }
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(img.image_id)));
        std::uniform_int_distribution<std::size_t> pick_target(0, img.objects.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_template(0, sentence_templates().size() - 1);
        const auto& target = img.objects[pick_target(rng)];

        auto base = [&](int k) {
            ConstraintSample s;
            s.sequence_id = fmt::format("coco:{}:{}:{}", img.image_id, target.annotation_id, k);
            s.source = "coco";
            s.video_id = img.file_name.empty() ? std::to_string(img.image_id) : img.file_name;
            s.reference_frame = 1;
            s.search_frame = 1;
            s.reference_box = target.box;
            s.search_box = target.box;
            s.target_id = target.annotation_id;
            return s;
        };

        std::set<std::string> in_vicinity;
        std::vector<ConstraintSample> positives;
        for (const auto& obj : img.objects) {
            if (obj.annotation_id == target.annotation_id || !allowed_classes.contains(obj.category)) {
                continue;
            }
            if (geometry::compute_overlap(target.box, obj.box) >= threshold) {
                auto s = base(static_cast<int>(positives.size()) * 2);
                s.category = obj.category;
                s.sentence = apply_template(pick_template(rng), obj.category);
                s.label = 1;
                s.constraint_id = obj.annotation_id;
                s.constraint_box = obj.box;
                in_vicinity.insert(obj.category);
                positives.push_back(std::move(s));
            }
        }
        std::vector<std::string> absent;
        for (const auto& cls : allowed_classes) {
            if (!in_vicinity.contains(cls)) {
                absent.push_back(cls);
            }
        }
        for (std::size_t k = 0; k < positives.size(); ++k) {
            samples.push_back(positives[k]);
            if (absent.empty()) {
                continue;
            }
            std::uniform_int_distribution<std::size_t> pick_class(0, absent.size() - 1);
            auto s = base(static_cast<int>(k) * 2 + 1);
            s.category = absent[pick_class(rng)];
            s.sentence = apply_template(pick_template(rng), s.category);
            s.label = 0;
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

SequenceManifest manifest_from_samples(std::span<const ConstraintSample> samples)
{
    SequenceManifest m;
    for (const auto& s : samples) {
        ConstraintSequence seq;
        seq.sequence_id = s.sequence_id;
        seq.source = s.source;
        seq.video_id = s.video_id;
        seq.category = s.category;
        seq.target_id = s.target_id;
        seq.constraint_id = s.constraint_id;
        seq.sentence = s.sentence;
        seq.augment_search = true;
        seq.frames.push_back({s.search_frame, s.search_box, s.constraint_box, s.label});
        m.sequences.push_back(std::move(seq));
    }
    return m;
}

namespace {

ConstraintSample draw_sample(const SequenceManifest& manifest, int frame_window, std::uint64_t seed, std::size_t i)
{
    std::mt19937_64 rng(mix_seed(seed, i));
    std::uniform_int_distribution<std::size_t> pick_seq(0, manifest.sequences.size() - 1);
    const auto& seq = manifest.sequences[pick_seq(rng)];
    std::uniform_int_distribution<std::size_t> pick_ref(0, seq.frames.size() - 1);
    const auto& ref = seq.frames[pick_ref(rng)];

    const auto lo = std::lower_bound(seq.frames.begin(), seq.frames.end(), ref.frame_index - frame_window,
                                     [](const FrameLabel& f, int v) { return f.frame_index < v; });
    const auto hi = std::upper_bound(seq.frames.begin(), seq.frames.end(), ref.frame_index + frame_window,
                                     [](int v, const FrameLabel& f) { return v < f.frame_index; });
    std::uniform_int_distribution<std::ptrdiff_t> pick_search(0, std::distance(lo, hi) - 1);
    const auto& search = *(lo + pick_search(rng));

    ConstraintSample s;
    s.sequence_id = seq.sequence_id;
    s.source = seq.source;
    s.video_id = seq.video_id;
    s.category = seq.category;
    s.reference_frame = ref.frame_index;
    s.reference_box = ref.target_box;
    s.search_frame = search.frame_index;
    s.search_box = search.target_box;
    s.sentence = seq.sentence;
    s.label = search.label;
    s.target_id = seq.target_id;
    s.constraint_id = seq.constraint_id;
    s.constraint_box = search.constraint_box;
    if (seq.augment_search) {
        s.augment_seed = mix_seed(seed ^ 0xA5A5A5A5A5A5A5A5ULL, i) | 1ULL;
    }
    return s;
}

void check_sampling_args(const SequenceManifest& manifest, std::size_t n, int frame_window)
{
    if (manifest.sequences.empty()) {
        throw ValidationError("cannot sample from an empty manifest");
    }
    for (const auto& s : manifest.sequences) {
        if (s.frames.empty()) {
            throw ValidationError(fmt::format("sequence {} has no frames", s.sequence_id));
        }
    }
    if (n == 0) {
        throw ValidationError("samples per epoch must be at least 1");
    }
    if (frame_window < 0) {
        throw ValidationError("frame window must be non-negative");
    }
}

}  // namespace

std::vector<ConstraintSample> sample_epoch(const SequenceManifest& manifest, std::size_t n, int frame_window,
                                           std::uint64_t seed)
{
    return sample_epoch_worker(manifest, n, frame_window, seed, 0, 1);
}

std::vector<ConstraintSample> sample_epoch_worker(const SequenceManifest& manifest, std::size_t n, int frame_window,
                                                  std::uint64_t seed, std::size_t worker, std::size_t workers)
{
    check_sampling_args(manifest, n, frame_window);
    if (workers == 0 || worker >= workers) {
        throw ValidationError("worker index out of range");
    }
    std::vector<ConstraintSample> out;
    out.reserve(n / workers + 1);
    for (std::size_t i = worker; i < n; i += workers) {
        out.push_back(draw_sample(manifest, frame_window, seed, i));
    }
    return out;
}

nlohmann::json to_json(const ConstraintSample& s)
{
    json j;
    j["sequence_id"] = s.sequence_id;
    j["source"] = s.source;
    j["video_id"] = s.video_id;
    j["category"] = s.category;
    j["reference_frame"] = s.reference_frame;
    j["reference_box"] = box_json(s.reference_box);
    j["search_frame"] = s.search_frame;
    j["search_box"] = box_json(s.search_box);
    j["sentence"] = s.sentence;
    j["label"] = s.label;
    j["target_id"] = s.target_id;
    j["constraint_id"] = s.constraint_id;
    j["constraint_box"] = box_json(s.constraint_box);
    j["augment_seed"] = s.augment_seed;
    return j;
}

ConstraintSample sample_from_json(const nlohmann::json& j)
{
    ConstraintSample s;
    s.sequence_id = j.at("sequence_id").get<std::string>();
    s.source = j.value("source", "");
    s.video_id = j.value("video_id", "");
    s.category = j.value("category", "");
    s.reference_frame = j.at("reference_frame").get<int>();
    s.reference_box = box_from_json(j.value("reference_box", json(nullptr)));
    s.search_frame = j.at("search_frame").get<int>();
    s.search_box = box_from_json(j.value("search_box", json(nullptr)));
    s.sentence = j.at("sentence").get<std::string>();
    s.label = j.at("label").get<int>();
    s.target_id = j.value("target_id", -1);
    s.constraint_id = j.value("constraint_id", -1);
    s.constraint_box = box_from_json(j.value("constraint_box", json(nullptr)));
    s.augment_seed = j.value("augment_seed", std::uint64_t{0});
    return s;
}

}  // namespace siamct::datasets
