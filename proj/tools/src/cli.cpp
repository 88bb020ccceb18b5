#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pedcloud/classifier.hpp"
#include "pedcloud/dataset.hpp"
#include "pedcloud/detection_eval.hpp"
#include "pedcloud/errors.hpp"
#include "pedcloud/model_io.hpp"
#include "pedcloud/npbb.hpp"
#include "pedcloud/projection.hpp"
#include "pedcloud/review_service.hpp"
#include "pedcloud/sampling.hpp"

namespace pedcloud::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    bool quiet = false;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Context {
    Globals g;
    std::ostream& out;
    std::ostream& err;

    void note(const std::string& msg) const {
        if (!g.quiet) err << msg << "\n";
    }
};

void emit(const Context& ctx, const std::optional<fs::path>& path, const std::string& text) {
    if (path) {
        write_file_atomic(*path, text);
    } else {
        ctx.out << text;
    }
}

void require_distinct(const fs::path& input, const fs::path& output) {
    if (fs::weakly_canonical(input) == fs::weakly_canonical(output)) {
        throw UsageError("output path " + output.string() + " would overwrite the input");
    }
}

std::string relative_to(const fs::path& file, const fs::path& base_dir) {
    return fs::relative(fs::absolute(file), fs::absolute(base_dir)).generic_string();
}

// Brings an arbitrary cluster to the classifier's input shape: FPS down to
// `n` points when larger, then unit-sphere normalization.
std::vector<Point3> prepare_cluster(const std::vector<Point3>& points, std::size_t n) {
    if (points.size() < n) {
        throw TooFewPoints("cluster has " + std::to_string(points.size()) + " points, network needs " +
                           std::to_string(n));
    }
    if (points.size() == n) return normalize(points);
    return normalize(gather(points, fps(points, n)));
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
    std::string pred;
    std::string gt;
    EvalOptions options;
    bool no_filter = false;
    std::optional<std::string> out;
};

json scores_json(std::size_t tp, std::size_t fp, std::size_t fn, const Scores& s) {
    return {{"tp", tp}, {"fp", fp}, {"fn", fn}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

void run_eval(const Context& ctx, EvalArgs a) {
    a.options.apply_filter = !a.no_filter;
    const auto preds = load_detections(a.pred);
    const auto gts = load_detections(a.gt);
    const auto report = evaluate_detections(preds, gts, a.options);
    json j = scores_json(report.tp, report.fp, report.fn, report.scores);
    json frames = json::array();
    for (const auto& f : report.frames) {
        json fj = scores_json(f.report.result.tp, f.report.result.fp, f.report.result.fn, f.report.scores);
        fj["frame_id"] = f.frame_id;
        frames.push_back(std::move(fj));
    }
    j["frames"] = std::move(frames);
    j["options"] = {{"class", a.options.label},
                    {"filter", a.options.apply_filter},
                    {"conf", a.options.conf_thresh},
                    {"nms", a.options.nms_iou},
                    {"iou", a.options.iou_thresh}};
    std::ostringstream msg;
    msg << "eval: " << report.frames.size() << " frames, tp=" << report.tp << " fp=" << report.fp
        << " fn=" << report.fn << " f1=" << report.scores.f1;
    ctx.note(msg.str());
    emit(ctx, a.out, j.dump(2) + "\n");
}

// --- npbb --------------------------------------------------------------------

struct NpbbArgs {
    std::string pbb;
    std::optional<std::string> out;
    std::optional<std::size_t> count;
    std::optional<double> pixel_fraction;
    std::optional<double> max_pairwise_iou;
    double max_pbb_iou = 0.1;
    int image_width = 1224;
    int image_height = 1024;
    std::string target_stats = "fit";
    std::size_t max_attempts = 1000;
};

void run_npbb(const Context& ctx, const NpbbArgs& a) {
    const auto pbb = load_detections(a.pbb);
    if (pbb.empty()) throw EmptyInput("no frames in " + a.pbb);

    std::vector<Box2D> all;
    std::map<std::string, std::vector<Box2D>> peds;
    for (const auto& [frame, boxes] : pbb) {
        auto& v = peds[frame];
        for (const auto& b : boxes) {
            if (!b.is_pedestrian()) continue;
            v.push_back(b);
            all.push_back(b);
        }
    }

    BoxStats target = kReferencePedestrianStats;
    if (a.target_stats == "fit") target = fit_box_stats(all);

    std::map<std::string, std::size_t> per_frame;
    if (a.count) {
        for (const auto& [frame, boxes] : peds) per_frame[frame] = *a.count;
    } else {
        // The total follows the pixel-fraction rule; frames take equal shares
        // with the remainder going to the first frames in id order.
        const std::size_t total = compute_npbb_count(all.size(), *a.pixel_fraction);
        const std::size_t base = total / peds.size();
        std::size_t extra = total % peds.size();
        for (const auto& [frame, boxes] : peds) {
            per_frame[frame] = base + (extra > 0 ? 1 : 0);
            if (extra > 0) --extra;
        }
    }

    DetectionMap result;
    std::vector<double> frame_means;
    std::size_t produced = 0;
    bool exhausted = false;
    for (const auto& [frame, boxes] : peds) {
        GenConfig cfg;
        cfg.target = target;
        cfg.count = per_frame[frame];
        cfg.max_pairwise_iou = a.max_pairwise_iou;
        cfg.max_pbb_iou = a.max_pbb_iou;
        cfg.rng_seed = frame_seed(ctx.g.seed, frame);
        cfg.max_attempts_per_box = a.max_attempts;
        std::vector<Box2D> generated;
        try {
            generated = generate_npbb_set(cfg, boxes, a.image_width, a.image_height);
        } catch (const GenerationExhausted& e) {
            ctx.err << "npbb: frame " << frame << ": " << e.what() << "\n";
            exhausted = true;
            generated = e.produced();
        }
        const auto rep = overlap_report(generated);
        if (rep.pairs > 0) frame_means.push_back(rep.mean_iou);
        produced += generated.size();
        result[frame] = std::move(generated);
    }

    double mean_overlap = 0.0;
    for (double m : frame_means) mean_overlap += m;
    if (!frame_means.empty()) mean_overlap /= static_cast<double>(frame_means.size());
    std::ostringstream msg;
    msg << "npbb: " << all.size() << " PBB in " << peds.size() << " frames -> " << produced
        << " NPBB; mean within-frame pairwise IOU " << mean_overlap;
    ctx.note(msg.str());

    emit(ctx, a.out, write_detections(result));
    if (exhausted) throw GenerationExhausted("overlap constraints could not be met in every frame", {});
}

// --- transfer ----------------------------------------------------------------

struct TransferArgs {
    std::string clouds;
    std::string pbb;
    std::optional<std::string> npbb;
    std::optional<std::string> calib;
    std::string out_dir;
    std::optional<std::string> manifest;
    std::size_t min_points = kMinClusterPoints;
    std::string source = "auto";
};

void run_transfer(const Context& ctx, const TransferArgs& a) {
    const auto source = parse_cluster_source(a.source);
    if (!source) throw UsageError("--source must be 'auto' or 'manual'");
    const CameraProjection camera = a.calib ? load_calibration(*a.calib) : CameraProjection{};
    const auto pbb = load_detections(a.pbb);
    const DetectionMap npbb = a.npbb ? load_detections(*a.npbb) : DetectionMap{};

    std::vector<fs::path> files;
    if (fs::is_directory(a.clouds)) {
        for (const auto& e : fs::directory_iterator(a.clouds)) {
            if (e.is_regular_file() && e.path().extension() == ".ply") files.push_back(e.path());
        }
    } else {
        files.emplace_back(a.clouds);
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw EmptyInput("no .ply files under " + a.clouds);

    const fs::path out_dir = a.out_dir;
    const fs::path manifest_path = a.manifest ? fs::path(*a.manifest) : out_dir / "manifest.json";
    fs::create_directories(out_dir / "clusters");
    if (manifest_path.has_parent_path()) fs::create_directories(manifest_path.parent_path());

    ClusterManifest manifest;
    std::vector<FrameBoxes> frames;
    for (const auto& file : files) {
        auto cloud = load_point_cloud(file);
        if (cloud.frame_id.empty()) cloud.frame_id = file.stem().string();
        FrameBoxes fb;
        if (auto it = pbb.find(cloud.frame_id); it != pbb.end()) {
            for (const auto& b : it->second) {
                if (b.is_pedestrian()) fb.pbb.push_back(b);
            }
        }
        if (auto it = npbb.find(cloud.frame_id); it != npbb.end()) fb.npbb = it->second;
        const auto clusters = transfer_labels(cloud, fb.pbb, fb.npbb, camera, a.min_points);

        std::size_t n_ped = 0;
        std::size_t n_non = 0;
        for (const auto& c : clusters) {
            const bool ped = c.label == ClusterLabel::pedestrian;
            ManifestEntry e;
            e.cluster_id = cloud.frame_id + (ped ? "_p" : "_n") + std::to_string(ped ? n_ped++ : n_non++);
            if (!cloud.scene_id.empty()) e.cluster_id = cloud.scene_id + "_" + e.cluster_id;
            const fs::path ply = out_dir / "clusters" / (e.cluster_id + ".ply");
            save_point_cloud({c.points, cloud.frame_id, cloud.scene_id}, ply);
            e.path = relative_to(ply, manifest_path.has_parent_path() ? manifest_path.parent_path() : ".");
            e.label = c.label;
            e.source_box = c.source_box;
            e.scene_id = cloud.scene_id.empty() ? cloud.frame_id : cloud.scene_id;
            e.frame_id = cloud.frame_id;
            e.source = *source;
            e.point_count = c.points.size();
            manifest.entries.push_back(std::move(e));
        }
        fb.cloud = std::move(cloud);
        frames.push_back(std::move(fb));
    }

    const auto cov = coverage_report(frames, camera, a.min_points);
    std::ostringstream msg;
    msg << "transfer: " << files.size() << " clouds, " << cov.total_points << " points (" << cov.labeled_points
        << " in boxes, " << cov.unlabeled_points << " outside, " << cov.behind_camera << " behind camera); "
        << cov.kept_clusters << " clusters kept, " << cov.discarded_clusters << " discarded at <= " << a.min_points
        << " points";
    ctx.note(msg.str());
    save_manifest(manifest, manifest_path);
    ctx.note("transfer: wrote " + manifest_path.string());
}

// --- preprocess --------------------------------------------------------------

struct PreprocessArgs {
    std::string manifest;
    std::string out_dir;
    std::string out_manifest;
    std::string method = "fps";
    std::size_t points = 1024;
    double voxel_size = 0.05;
};

void run_preprocess(const Context& ctx, const PreprocessArgs& a) {
    require_distinct(a.manifest, a.out_manifest);
    SampleSpec spec;
    if (a.method == "fps") {
        spec.method = SampleMethod::fps;
    } else if (a.method == "random") {
        spec.method = SampleMethod::random;
    } else if (a.method == "voxel") {
        spec.method = SampleMethod::voxel_grid;
    } else {
        throw UsageError("--method must be fps, random or voxel");
    }
    spec.target_count = a.points;
    spec.voxel_size = a.voxel_size;

    auto manifest = load_manifest(a.manifest);
    const fs::path out_dir = a.out_dir;
    const fs::path out_manifest = a.out_manifest;
    fs::create_directories(out_dir);
    if (out_manifest.has_parent_path()) fs::create_directories(out_manifest.parent_path());
    const fs::path base = out_manifest.has_parent_path() ? out_manifest.parent_path() : fs::path(".");

    for (auto& e : manifest.entries) {
        auto cloud = load_point_cloud(resolve_entry_path(a.manifest, e));
        SampleSpec s = spec;
        s.rng_seed = frame_seed(ctx.g.seed, e.cluster_id);
        cloud.points = preprocess_cluster(cloud.points, s);
        const fs::path ply = out_dir / (e.cluster_id + ".ply");
        require_distinct(resolve_entry_path(a.manifest, e), ply);
        save_point_cloud(cloud, ply);
        e.path = relative_to(ply, base);
        e.point_count = cloud.points.size();
    }
    save_manifest(manifest, out_manifest);
    ctx.note("preprocess: " + std::to_string(manifest.entries.size()) + " clusters -> " + out_manifest.string());
}

// --- split -------------------------------------------------------------------

struct SplitArgs {
    std::string manifest;
    std::string out;
    std::vector<std::string> test_scenes;
    double train_frac = 0.8;
    std::vector<std::string> stratify{"label", "source"};
};

void run_split(const Context& ctx, const SplitArgs& a) {
    require_distinct(a.manifest, a.out);
    SplitSpec spec;
    spec.test_scenes = a.test_scenes;
    spec.train_fraction = a.train_frac;
    spec.rng_seed = ctx.g.seed;
    spec.stratify_by.clear();
    for (const auto& f : a.stratify) {
        if (f == "label") {
            spec.stratify_by.push_back(StratifyField::label);
        } else if (f == "source") {
            spec.stratify_by.push_back(StratifyField::source);
        } else if (!f.empty() && f != "none") {
            throw UsageError("--stratify accepts label, source or none");
        }
    }
    const auto outcome = split_dataset(load_manifest(a.manifest), spec);
    for (const auto& w : outcome.warnings) ctx.err << "split: warning: " << w << "\n";
    // Cluster files stay where they are; only the index moves.
    auto manifest = outcome.manifest;
    const fs::path in_dir = fs::path(a.manifest).has_parent_path() ? fs::path(a.manifest).parent_path() : ".";
    const fs::path out_dir = fs::path(a.out).has_parent_path() ? fs::path(a.out).parent_path() : ".";
    fs::create_directories(out_dir);
    for (auto& e : manifest.entries) e.path = relative_to(in_dir / e.path, out_dir);
    save_manifest(manifest, a.out);

    const auto report = ratio_report(manifest);
    for (const auto& s : report.per_split) {
        std::ostringstream msg;
        msg << "split: " << to_string(s.split) << " pedestrian=" << s.positives << " non_pedestrian=" << s.negatives
            << " manual=" << s.manual << " ratio=" << s.ratio;
        ctx.note(msg.str());
    }
}

// --- binarize ----------------------------------------------------------------

struct BinarizeArgs {
    std::string listing;
    std::vector<std::string> positive;
    std::optional<std::string> out;
    std::string name_positive = "positive";
    std::string name_negative = "negative";
};

void run_binarize(const Context& ctx, const BinarizeArgs& a) {
    const auto listing = parse_listing(read_file(a.listing));
    ClassRegroup regroup{a.positive, a.name_positive, a.name_negative};
    BinarizeResult result;
    try {
        result = binarize_classes(listing, regroup);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    ctx.note("binarize: " + std::to_string(result.positive_count) + " " + a.name_positive + " / " +
             std::to_string(result.negative_count) + " " + a.name_negative);
    emit(ctx, a.out, write_binary_listing(result, regroup));
}

// --- train / predict ---------------------------------------------------------

struct TrainArgs {
    std::string manifest;
    std::string out;
    std::size_t batch_size = 32;
    std::size_t epochs = 20;
    double lr = 1e-3;
    std::string optimizer = "adam";
    bool augment = false;
    double rotation_deg = 360.0;
    bool msg = false;
    std::string preset = "ssg";
    std::optional<std::string> net;
    std::optional<std::string> log;
    std::vector<double> class_weights;
};

NetSpec spec_for(const TrainArgs& a) {
    if (a.net) return parse_net_spec(read_file(*a.net));
    if (a.msg || a.preset == "msg") return default_msg_spec();
    if (a.preset == "ssg") return default_ssg_spec();
    if (a.preset == "reduced") return reduced_ssg_spec();
    throw UsageError("--preset must be ssg, msg or reduced");
}

std::vector<Sample> load_split(const fs::path& manifest_path, const ClusterManifest& manifest, Split split,
                               std::size_t n_points) {
    std::vector<Sample> out;
    for (const auto& e : manifest.entries) {
        if (e.split != split || e.review == ReviewStatus::rejected) continue;
        const auto cloud = load_point_cloud(resolve_entry_path(manifest_path, e));
        out.push_back({prepare_cluster(cloud.points, n_points), static_cast<int>(e.label)});
    }
    return out;
}

void run_train(const Context& ctx, const TrainArgs& a) {
    const NetSpec spec = spec_for(a);
    TrainSpec ts;
    ts.batch_size = a.batch_size;
    ts.epochs = a.epochs;
    ts.learning_rate = a.lr;
    if (a.optimizer == "adam") {
        ts.optimizer = OptimizerKind::adam;
    } else if (a.optimizer == "sgd") {
        ts.optimizer = OptimizerKind::sgd_momentum;
    } else {
        throw UsageError("--optimizer must be adam or sgd");
    }
    if (a.augment) {
        AugmentSpec aug;
        aug.rotation_hi = a.rotation_deg * std::numbers::pi / 180.0;
        ts.augment = aug;
    }
    ts.rng_seed = ctx.g.seed;
    ts.threads = ctx.g.threads;
    ts.class_weights = a.class_weights;

    const auto manifest = load_manifest(a.manifest);
    const auto train_set = load_split(a.manifest, manifest, Split::train, spec.input_points);
    const auto val_set = load_split(a.manifest, manifest, Split::val, spec.input_points);
    if (train_set.empty()) throw EmptyDataset("no train clusters in " + a.manifest + "; run `pedcloud split` first");
    ctx.note("train: " + std::to_string(train_set.size()) + " train / " + std::to_string(val_set.size()) +
             " val clusters");

    const auto result = train(spec, train_set, val_set, ts, [&](const EpochLog& e) {
        std::ostringstream msg;
        msg << "epoch " << e.epoch << " train_loss=" << e.train_loss << " val_loss=" << e.val_loss
            << " val_f1=" << e.val.f1 << " val_acc=" << e.val.accuracy;
        ctx.note(msg.str());
    });
    save_params(spec, result.params, a.out);
    if (a.log) write_file_atomic(*a.log, write_metrics_log(result.log));
    ctx.note("train: best epoch " + std::to_string(result.best_epoch) + ", checkpoint " + a.out);
}

struct PredictArgs {
    std::string checkpoint;
    std::vector<std::string> inputs;
    std::optional<std::string> manifest;
    std::string split = "test";
    std::optional<std::string> out;
};

json metrics_json(const Metrics& m) {
    return {{"accuracy", m.accuracy},   {"avg_class_accuracy", m.avg_class_accuracy},
            {"precision", m.precision}, {"recall", m.recall},
            {"f1", m.f1},               {"confusion", m.confusion}};
}

void run_predict(const Context& ctx, const PredictArgs& a) {
    if (a.inputs.empty() == !a.manifest) throw UsageError("give either cluster PLY files or --manifest");
    const auto cp = load_params(a.checkpoint);
    std::mt19937_64 rng(ctx.g.seed);

    struct Item {
        std::string id;
        std::string path;
        std::vector<Point3> points;
        std::optional<int> truth;
    };
    std::vector<Item> items;
    if (a.manifest) {
        const auto split = parse_split(a.split);
        if (!split) throw UsageError("--split must be train, val, test or unassigned");
        const auto manifest = load_manifest(*a.manifest);
        for (const auto& e : manifest.entries) {
            if (e.split != *split || e.review == ReviewStatus::rejected) continue;
            const auto path = resolve_entry_path(*a.manifest, e);
            items.push_back({e.cluster_id, path.string(), load_point_cloud(path).points, static_cast<int>(e.label)});
        }
    } else {
        for (const auto& p : a.inputs) {
            items.push_back({fs::path(p).stem().string(), p, load_point_cloud(p).points, std::nullopt});
        }
    }

    json preds = json::array();
    std::vector<std::vector<std::size_t>> confusion(cp.spec.num_classes(),
                                                    std::vector<std::size_t>(cp.spec.num_classes(), 0));
    for (const auto& it : items) {
        const auto pts = prepare_cluster(it.points, cp.spec.input_points);
        const auto fr = forward(cp.spec, cp.params, pts, false, rng);
        const auto best = static_cast<std::size_t>(
            std::max_element(fr.probabilities.begin(), fr.probabilities.end()) - fr.probabilities.begin());
        const auto label = static_cast<ClusterLabel>(static_cast<int>(best));
        json p{{"cluster_id", it.id},
               {"path", it.path},
               {"label", best < 2 ? std::string(to_string(label)) : std::to_string(best)},
               {"class_index", best},
               {"probability", fr.probabilities[best]},
               {"probabilities", fr.probabilities}};
        if (it.truth) {
            p["truth"] = std::string(to_string(static_cast<ClusterLabel>(*it.truth)));
            ++confusion[static_cast<std::size_t>(*it.truth)][best];
        }
        preds.push_back(std::move(p));
    }
    json j{{"predictions", preds}};
    if (a.manifest && !items.empty()) j["metrics"] = metrics_json(metrics_from_confusion(confusion));
    ctx.note("predict: " + std::to_string(items.size()) + " clusters");
    emit(ctx, a.out, j.dump(2) + "\n");
}

// --- review ------------------------------------------------------------------

struct ReviewArgs {
    std::string manifest;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::string> static_dir;
};

void run_review(const Context& ctx, const ReviewArgs& a) {
    ReviewStore store(a.manifest);
    std::optional<fs::path> static_dir;
    if (a.static_dir) static_dir = *a.static_dir;
    ReviewServer server(store, static_dir);
    ctx.note("review: serving " + a.manifest + " on http://" + a.host + ":" + std::to_string(a.port));
    if (!server.listen(a.host, a.port)) {
        throw IoError("cannot listen on " + a.host + ":" + std::to_string(a.port));
    }
}

std::vector<std::string> split_commas(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const auto& r : raw) {
        std::stringstream ss(r);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) out.push_back(item);
        }
    }
    return out;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pedestrian LIDAR cluster toolkit", "pedcloud"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "RNG seed for every randomized step")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (training)")->capture_default_str()->check(
        CLI::PositiveNumber);
    app.add_flag("--quiet", g.quiet, "suppress progress messages");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "Score detections against ground truth (JSON report)");
    eval->add_option("--pred", ev.pred, "predicted boxes, JSON lines")->required();
    eval->add_option("--gt", ev.gt, "ground-truth boxes, JSON lines")->required();
    eval->add_option("--conf", ev.options.conf_thresh, "confidence threshold")->capture_default_str();
    eval->add_option("--nms", ev.options.nms_iou, "NMS IOU threshold")->capture_default_str();
    eval->add_option("--iou", ev.options.iou_thresh, "match when IOU is strictly above this")->capture_default_str();
    eval->add_option("--class", ev.options.label, "box class to evaluate")->capture_default_str();
    eval->add_flag("--no-filter", ev.no_filter, "skip confidence and NMS filtering of predictions");
    eval->add_option("--out", ev.out, "report path (default: stdout)");

    NpbbArgs nb;
    auto* npbb = app.add_subcommand("npbb", "Generate random non-pedestrian boxes per frame");
    npbb->add_option("--pbb", nb.pbb, "pedestrian boxes, JSON lines")->required();
    npbb->add_option("--out", nb.out, "output path (default: stdout)");
    auto* count_opt = npbb->add_option("--count", nb.count, "boxes per frame");
    auto* frac_opt = npbb->add_option("--pixel-fraction", nb.pixel_fraction,
                                      "pedestrian pixel share f; total = round(n_pbb (1 - f) / f)");
    count_opt->excludes(frac_opt);
    npbb->add_option("--max-pairwise-iou", nb.max_pairwise_iou, "cap on IOU between generated boxes")
        ->check(CLI::Range(0.0, 1.0));
    npbb->add_option("--max-pbb-iou", nb.max_pbb_iou, "cap on IOU with any pedestrian box")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    npbb->add_option("--image-width", nb.image_width)->capture_default_str()->check(CLI::PositiveNumber);
    npbb->add_option("--image-height", nb.image_height)->capture_default_str()->check(CLI::PositiveNumber);
    npbb->add_option("--target-stats", nb.target_stats, "fit (from the input boxes) or reference")
        ->capture_default_str()
        ->check(CLI::IsMember({"fit", "reference"}));
    npbb->add_option("--max-attempts", nb.max_attempts, "rejection attempts per box")->capture_default_str();

    TransferArgs tr;
    auto* transfer = app.add_subcommand("transfer", "Back-project 2D boxes onto clouds and write clusters");
    transfer->add_option("--clouds", tr.clouds, "PLY file or directory of PLY files")->required();
    transfer->add_option("--pbb", tr.pbb, "pedestrian boxes, JSON lines")->required();
    transfer->add_option("--npbb", tr.npbb, "non-pedestrian boxes, JSON lines");
    transfer->add_option("--calib", tr.calib, "camera calibration JSON (default: identity)");
    transfer->add_option("--out-dir", tr.out_dir, "directory for cluster PLY files")->required();
    transfer->add_option("--manifest", tr.manifest, "manifest path (default: <out-dir>/manifest.json)");
    transfer->add_option("--min-points", tr.min_points, "clusters with at most this many points are dropped")
        ->capture_default_str();
    transfer->add_option("--source", tr.source, "provenance recorded for the clusters: auto or manual")
        ->capture_default_str();

    PreprocessArgs pp;
    auto* preprocess = app.add_subcommand("preprocess", "Downsample and normalize every cluster of a manifest");
    preprocess->add_option("--manifest", pp.manifest)->required();
    preprocess->add_option("--out-dir", pp.out_dir, "directory for processed PLY files")->required();
    preprocess->add_option("--out-manifest", pp.out_manifest)->required();
    preprocess->add_option("--method", pp.method, "fps, random or voxel")->capture_default_str();
    preprocess->add_option("--points", pp.points, "target point count (fps, random)")->capture_default_str();
    preprocess->add_option("--voxel-size", pp.voxel_size, "voxel edge (voxel)")->capture_default_str();

    SplitArgs sp;
    std::vector<std::string> stratify_raw{"label,source"};
    auto* split = app.add_subcommand("split", "Assign train/val/test splits");
    split->add_option("--manifest", sp.manifest)->required();
    split->add_option("--out", sp.out, "output manifest")->required();
    split->add_option("--test-scene", sp.test_scenes, "scene held out for test (repeatable)");
    split->add_option("--train-frac", sp.train_frac)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    split->add_option("--stratify", stratify_raw, "comma-separated fields: label, source, or none")
        ->capture_default_str();

    BinarizeArgs bz;
    std::vector<std::string> positive_raw;
    auto* binarize = app.add_subcommand("binarize", "Regroup a multi-class listing into positive/negative");
    binarize->add_option("--listing", bz.listing, "one sample per line")->required();
    binarize->add_option("--positive", positive_raw, "comma-separated positive classes")->required();
    binarize->add_option("--out", bz.out, "output path (default: stdout)");
    binarize->add_option("--name-positive", bz.name_positive)->capture_default_str();
    binarize->add_option("--name-negative", bz.name_negative)->capture_default_str();

    TrainArgs ta;
    auto* trainc = app.add_subcommand("train", "Train the point-set classifier on a split manifest");
    trainc->add_option("--manifest", ta.manifest)->required();
    trainc->add_option("--out", ta.out, "checkpoint path")->required();
    trainc->add_option("--batch-size", ta.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
    trainc->add_option("--epochs", ta.epochs)->capture_default_str();
    trainc->add_option("--lr", ta.lr)->capture_default_str();
    trainc->add_option("--optimizer", ta.optimizer, "adam or sgd")->capture_default_str();
    trainc->add_flag("--augment", ta.augment, "random rotation and jitter on training clusters");
    trainc->add_option("--rotation-deg", ta.rotation_deg, "rotation range for --augment")->capture_default_str();
    trainc->add_flag("--msg", ta.msg, "multi-scale grouping network");
    trainc->add_option("--preset", ta.preset, "ssg, msg or reduced")->capture_default_str();
    trainc->add_option("--net", ta.net, "network spec JSON (overrides --preset)");
    trainc->add_option("--log", ta.log, "per-epoch metrics JSON");
    trainc->add_option("--class-weights", ta.class_weights, "loss weight per class")->delimiter(',');

    PredictArgs pr;
    auto* predict = app.add_subcommand("predict", "Classify clusters with a trained checkpoint (JSON output)");
    predict->add_option("--checkpoint", pr.checkpoint)->required();
    predict->add_option("inputs", pr.inputs, "cluster PLY files");
    predict->add_option("--manifest", pr.manifest, "classify a manifest split and report metrics");
    predict->add_option("--split", pr.split, "split used with --manifest")->capture_default_str();
    predict->add_option("--out", pr.out, "output path (default: stdout)");

    ReviewArgs rv;
    auto* review = app.add_subcommand("review", "Manual review of transferred clusters");
    review->require_subcommand(1);
    auto* serve = review->add_subcommand("serve", "Serve the review API and UI");
    serve->add_option("--manifest", rv.manifest)->required();
    serve->add_option("--host", rv.host)->capture_default_str();
    serve->add_option("--port", rv.port)->capture_default_str();
    serve->add_option("--static-dir", rv.static_dir, "browser UI assets");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    Context ctx{g, out, err};
    const auto* sub = app.get_subcommands().front();
    ctx.note("pedcloud " + sub->get_name() + ": seed=" + std::to_string(g.seed) +
             " threads=" + std::to_string(g.threads));
    try {
        if (sub == eval) {
            if (!(ev.options.conf_thresh >= 0.0 && ev.options.conf_thresh <= 1.0) ||
                !(ev.options.nms_iou >= 0.0 && ev.options.nms_iou <= 1.0)) {
                throw UsageError("--conf and --nms must lie in [0, 1]");
            }
            run_eval(ctx, ev);
        } else if (sub == npbb) {
            if (!nb.count && !nb.pixel_fraction) throw UsageError("npbb needs --count or --pixel-fraction");
            run_npbb(ctx, nb);
        } else if (sub == transfer) {
            run_transfer(ctx, tr);
        } else if (sub == preprocess) {
            run_preprocess(ctx, pp);
        } else if (sub == split) {
            sp.stratify = split_commas(stratify_raw);
            run_split(ctx, sp);
        } else if (sub == binarize) {
            bz.positive = split_commas(positive_raw);
            run_binarize(ctx, bz);
        } else if (sub == trainc) {
            run_train(ctx, ta);
        } else if (sub == predict) {
            run_predict(ctx, pr);
        } else if (sub == review) {
            run_review(ctx, rv);
        }
    } catch (const UsageError& e) {
        err << "pedcloud " << sub->get_name() << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "pedcloud " << sub->get_name() << ": error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "pedcloud " << sub->get_name() << ": error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace pedcloud::cli
