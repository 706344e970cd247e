#include "commands.hpp"

#include <kamsort/error.hpp>
#include <kamsort/io.hpp>
#include <kamsort/kernels.hpp>
#include <kamsort/metrics.hpp>
#include <kamsort/simulate.hpp>
#include <kamsort/tracker.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace kamsort::cli {

namespace fs = std::filesystem;

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits = 6) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void apply_simd(const std::string& name, std::ostream& err) {
    if (name == "auto") {
        kernels::set_backend(kernels::detected_backend());
        return;
    }
    const auto want = name == "avx2" ? kernels::Backend::Avx2 : kernels::Backend::Scalar;
    const auto got = kernels::set_backend(want);
    if (got != want) {
        err << "warning: " << kernels::backend_name(want) << " kernels unavailable, using "
            << kernels::backend_name(got) << "\n";
    }
}

// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. Exceptions are kept per
// index and rethrown by the caller in index order.
template <typename Fn>
std::vector<std::exception_ptr> parallel_for(std::size_t n, int jobs, Fn fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto workers = static_cast<std::size_t>(std::clamp<long>(jobs, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return errors;
}

struct TrackArgs {
    std::string dets;
    std::string embs;
    std::string out;
    std::string seq_dir;
    std::string out_dir;
    std::string mode = "kamsort";
    std::string simd = "auto";
    int jobs = 1;
    int precision = io::kDefaultPrecision;
    bool motion_only = false;
    TrackerConfig config;
};

void add_config_options(CLI::App* cmd, TrackArgs& a) {
    auto& c = a.config;
    cmd->add_option("--mode", a.mode, "sort | ocsort | kamsort | kamsort_no_kpp | kamsort_fixed_weights")
        ->capture_default_str();
    cmd->add_flag("--motion-only", a.motion_only, "ignore appearance even when embeddings are present");
    cmd->add_option("--theta-deg", c.theta_deg, "vector similarity angle in degrees")->capture_default_str();
    cmd->add_option("--alpha", c.kalman.alpha, "Kalman++ uncertainty revision strength")->capture_default_str();
    cmd->add_option("--c-min", c.kalman.c_min, "lower clamp of the revision factor")->capture_default_str();
    cmd->add_option("--c-max", c.kalman.c_max, "upper clamp of the revision factor")->capture_default_str();
    cmd->add_option("--lambda", c.lambda, "velocity consistency weight")->capture_default_str();
    cmd->add_option("--gamma", c.gamma, "appearance weight in kamsort_fixed_weights")->capture_default_str();
    cmd->add_option("--iou-threshold", c.iou_match_threshold, "minimum IoU of a first-stage match")
        ->capture_default_str();
    cmd->add_option("--second-iou-threshold", c.second_stage_iou_threshold, "minimum IoU of a second-stage match")
        ->capture_default_str();
    cmd->add_option("--max-age", c.max_age, "frames a lost track is kept")->capture_default_str();
    cmd->add_option("--min-hits", c.min_hits, "hits needed to confirm a track")->capture_default_str();
    cmd->add_option("--det-conf", c.det_conf_threshold, "detection confidence threshold")->capture_default_str();
    cmd->add_option("--ema-beta", c.embedding_ema_beta, "track embedding smoothing factor")->capture_default_str();
}

TrackerConfig finish_config(TrackArgs& a) {
    TrackerConfig c = a.config;
    c.mode = parse_mode(a.mode);
    c.force_motion_only = a.motion_only;
    c.validate();
    return c;
}

struct SequenceJob {
    std::string name;
    fs::path dets;
    fs::path embs;  // empty: none given
    fs::path out;
};

struct SequenceSummary {
    std::string warning;
    SequenceResult result;
    double millis = 0.0;
};

SequenceSummary track_sequence(const SequenceJob& job, const TrackerConfig& config, int precision) {
    SequenceSummary s;
    const auto start = std::chrono::steady_clock::now();
    auto dets = io::to_detections(io::read_mot(job.dets.string()));
    const bool wants_appearance = features(config.mode).appearance && !config.force_motion_only;
    if (!job.embs.empty() && fs::exists(job.embs)) {
        io::read_embeddings(job.embs.string(), dets);
    } else if (wants_appearance) {
        s.warning = job.embs.empty() ? "no embedding file; running motion-only"
                                     : "embedding file '" + job.embs.string() + "' not found; running motion-only";
    }
    s.result = run_sequence(dets, config);
    io::write_mot(io::from_track_rows(s.result.rows), job.out.string(), precision);
    s.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return s;
}

int cmd_track(TrackArgs& a, std::ostream& out, std::ostream& err) {
    const TrackerConfig config = finish_config(a);
    apply_simd(a.simd, err);

    std::vector<SequenceJob> jobs;
    if (!a.seq_dir.empty()) {
        if (a.out_dir.empty()) throw InputError("--seq-dir requires --out-dir");
        if (!fs::is_directory(a.seq_dir)) throw InputError("sequence directory '" + a.seq_dir + "' not found");
        for (const auto& entry : fs::directory_iterator(a.seq_dir)) {
            if (!entry.is_directory()) continue;
            const auto det = entry.path() / "det.txt";
            if (!fs::exists(det)) continue;
            jobs.push_back({entry.path().filename().string(), det, entry.path() / "emb.csv",
                            fs::path(a.out_dir) / (entry.path().filename().string() + ".txt")});
        }
        std::sort(jobs.begin(), jobs.end(), [](const auto& x, const auto& y) { return x.name < y.name; });
        if (jobs.empty()) throw InputError("no sequences with det.txt under '" + a.seq_dir + "'");
        fs::create_directories(a.out_dir);
    } else {
        if (a.dets.empty() || a.out.empty()) throw InputError("track needs --dets and --out (or --seq-dir)");
        if (!fs::exists(a.dets)) throw InputError("detection file '" + a.dets + "' not found");
        jobs.push_back({fs::path(a.dets).stem().string(), a.dets, a.embs, a.out});
    }

    std::vector<SequenceSummary> summaries(jobs.size());
    const auto errors = parallel_for(jobs.size(), a.jobs,
                                     [&](std::size_t i) { summaries[i] = track_sequence(jobs[i], config, a.precision); });
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        const auto& s = summaries[i];
        if (!s.warning.empty()) err << "warning: " << jobs[i].name << ": " << s.warning << "\n";
        out << jobs[i].name << ": tracks created " << s.result.tracks_created << ", frames " << s.result.frames
            << ", wall time " << fixed(s.millis, 1) << " ms\n";
    }
    return kOk;
}

std::string report_table(const metrics::EvalReport& r) {
    std::ostringstream os;
    os << "HOTA      DetA      AssA      MOTA      IDF1      TP      FP      FN      IDSW\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-9.4f %-9.4f %-9.4f %-9.4f %-9.4f %-7ld %-7ld %-7ld %ld\n", r.hota, r.deta,
                  r.assa, r.mota, r.idf1, r.tp, r.fp, r.fn, r.idsw);
    os << line;
    return os.str();
}

struct EvalArgs {
    std::vector<std::string> gt;
    std::vector<std::string> pred;
    std::string report;
    std::string text;
};

int cmd_eval(EvalArgs& a, std::ostream& out) {
    if (a.gt.size() != a.pred.size()) throw InputError("eval needs one --pred per --gt");
    std::vector<metrics::EvalReport> reports;
    for (std::size_t i = 0; i < a.gt.size(); ++i) {
        const auto gt = io::read_mot(a.gt[i]);
        const auto pred = io::read_mot(a.pred[i]);
        reports.push_back(metrics::evaluate(gt, pred));
    }
    const auto total = reports.size() == 1 ? reports.front() : metrics::combine(reports);
    if (!a.report.empty()) io::write_file(a.report, metrics::report_json(total));
    if (!a.text.empty()) io::write_file(a.text, metrics::report_text(total));
    out << report_table(total);
    return kOk;
}

metrics::FrameSize parse_frame_size(const std::string& text) {
    const auto x = text.find_first_of("xX");
    metrics::FrameSize fs{};
    if (x != std::string::npos) {
        const char* b = text.data();
        const auto r1 = std::from_chars(b, b + x, fs.width);
        const auto r2 = std::from_chars(b + x + 1, b + text.size(), fs.height);
        if (r1.ec == std::errc{} && r1.ptr == b + x && r2.ec == std::errc{} && r2.ptr == b + text.size() &&
            fs.width > 0 && fs.height > 0) {
            return fs;
        }
    }
    throw InputError("frame size must look like WIDTHxHEIGHT, got '" + text + "'");
}

struct StatsArgs {
    std::string gt;
    std::string embs;
    std::string frame_size;
    std::string out;
    int frames = 0;
};

int cmd_stats(StatsArgs& a, std::ostream& out) {
    const auto size = parse_frame_size(a.frame_size);
    const auto gt = io::read_mot(a.gt);
    std::vector<std::optional<Embedding>> embs;
    if (!a.embs.empty()) {
        auto dets = io::to_detections(gt);
        io::read_embeddings(a.embs, dets);
        embs.reserve(dets.size());
        for (auto& d : dets) embs.push_back(std::move(d.embedding));
    }
    const auto stats = metrics::dataset_stats(gt, embs, size, a.frames);
    const auto json = metrics::stats_json(stats);
    if (!a.out.empty()) io::write_file(a.out, json);
    out << json;
    return kOk;
}

struct SimulateArgs {
    std::string spec;
    std::string out_dir;
    int precision = io::kLossless;
};

int cmd_simulate(SimulateArgs& a, std::ostream& out) {
    const auto spec = sim::read_spec(a.spec);
    const auto sc = sim::generate(spec);
    sim::write_scenario(sc, spec, a.out_dir, a.precision);
    out << "wrote " << a.out_dir << ": " << spec.n_tracks << " tracks, " << spec.frames << " frames, "
        << sc.det_table.size() << " detections, embedding similarity " << fixed(sc.achieved_similarity, 4) << "\n";
    return kOk;
}

struct SweepArgs {
    std::string grid;
    std::string out_dir;
    std::string simd = "auto";
    int jobs = 1;
};

struct SweepCell {
    TrackerMode mode;
    double theta;
    double alpha;
};

void apply_overrides(const nlohmann::json& j, TrackerConfig& c) {
    c.lambda = j.value("lambda", c.lambda);
    c.gamma = j.value("gamma", c.gamma);
    c.iou_match_threshold = j.value("iou_threshold", c.iou_match_threshold);
    c.second_stage_iou_threshold = j.value("second_iou_threshold", c.second_stage_iou_threshold);
    c.max_age = j.value("max_age", c.max_age);
    c.min_hits = j.value("min_hits", c.min_hits);
    c.det_conf_threshold = j.value("det_conf", c.det_conf_threshold);
    c.embedding_ema_beta = j.value("ema_beta", c.embedding_ema_beta);
    c.kalman.c_min = j.value("c_min", c.kalman.c_min);
    c.kalman.c_max = j.value("c_max", c.kalman.c_max);
    c.force_motion_only = j.value("motion_only", c.force_motion_only);
}

int cmd_sweep(SweepArgs& a, std::ostream& out, std::ostream& err) {
    using nlohmann::json;
    apply_simd(a.simd, err);
    const fs::path grid_path(a.grid);
    const fs::path base = grid_path.parent_path();
    json grid;
    try {
        grid = json::parse(io::read_file(a.grid));
    } catch (const json::exception& e) {
        throw FormatError(a.grid, 0, std::string("invalid JSON: ") + e.what());
    }

    io::MotTable gt;
    std::vector<Detection> dets;
    std::vector<SweepCell> cells;
    TrackerConfig base_config;
    try {
        if (grid.contains("scenario")) {
            const auto& s = grid.at("scenario");
            const auto spec = s.is_string() ? sim::read_spec((base / s.get<std::string>()).string())
                                            : sim::parse_spec(s.dump(), a.grid);
            auto sc = sim::generate(spec);
            sim::write_scenario(sc, spec, (fs::path(a.out_dir) / "scene").string(), io::kLossless);
            gt = std::move(sc.gt);
            dets = std::move(sc.detections);
        } else if (grid.contains("sequence")) {
            const auto& s = grid.at("sequence");
            gt = io::read_mot((base / s.at("gt").get<std::string>()).string());
            dets = io::to_detections(io::read_mot((base / s.at("dets").get<std::string>()).string()));
            if (s.contains("embs")) io::read_embeddings((base / s.at("embs").get<std::string>()).string(), dets);
        } else {
            throw FormatError(a.grid, 0, "grid needs a 'scenario' or a 'sequence'");
        }
        std::vector<std::string> modes{"kamsort"};
        if (grid.contains("modes")) modes = grid.at("modes").get<std::vector<std::string>>();
        const auto thetas = grid.at("theta_deg").get<std::vector<double>>();
        const auto alphas = grid.at("alpha").get<std::vector<double>>();
        if (grid.contains("config")) apply_overrides(grid.at("config"), base_config);
        for (const auto& m : modes) {
            const auto mode = parse_mode(m);
            for (double t : thetas) {
                for (double al : alphas) cells.push_back({mode, t, al});
            }
        }
    } catch (const json::exception& e) {
        throw FormatError(a.grid, 0, std::string("sweep grid: ") + e.what());
    }

    std::vector<metrics::EvalReport> results(cells.size());
    const auto errors = parallel_for(cells.size(), a.jobs, [&](std::size_t i) {
        TrackerConfig c = base_config;
        c.mode = cells[i].mode;
        c.theta_deg = cells[i].theta;
        c.kalman.alpha = cells[i].alpha;
        c.validate();
        const auto res = run_sequence(dets, c);
        results[i] = metrics::evaluate(gt, io::from_track_rows(res.rows));
    });

    fs::create_directories(a.out_dir);
    std::string csv = "mode,theta,alpha,hota,mota,idf1,deta,assa\n";
    std::string failures;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        metrics::EvalReport r = results[i];
        if (errors[i]) {
            r.hota = r.mota = r.idf1 = r.deta = r.assa = nan;
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                failures += std::string(mode_name(cells[i].mode)) + "," + shortest(cells[i].theta) + "," +
                            shortest(cells[i].alpha) + ": " + e.what() + "\n";
            }
        }
        csv += std::string(mode_name(cells[i].mode)) + "," + shortest(cells[i].theta) + "," +
               shortest(cells[i].alpha) + "," + fixed(r.hota) + "," + fixed(r.mota) + "," + fixed(r.idf1) + "," +
               fixed(r.deta) + "," + fixed(r.assa) + "\n";
    }
    io::write_file((fs::path(a.out_dir) / "sweep.csv").string(), csv);
    if (!failures.empty()) {
        io::write_file((fs::path(a.out_dir) / "sweep_errors.txt").string(), failures);
        err << "warning: " << std::count(failures.begin(), failures.end(), '\n') << " sweep cells failed\n";
    }
    out << csv;
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-object tracking with adaptive motion and appearance association", "kamsort"};
    app.require_subcommand(1);

    TrackArgs track;
    auto* track_cmd = app.add_subcommand("track", "track detections into a MOT file");
    track_cmd->add_option("--dets", track.dets, "MOT detection file");
    track_cmd->add_option("--embs", track.embs, "embedding CSV (frame,det_index,values...)");
    track_cmd->add_option("--out", track.out, "output MOT track file");
    track_cmd->add_option("--seq-dir", track.seq_dir, "directory of sequences, each holding det.txt and emb.csv");
    track_cmd->add_option("--out-dir", track.out_dir, "output directory for --seq-dir");
    track_cmd->add_option("--jobs", track.jobs, "sequences tracked in parallel")->check(CLI::PositiveNumber);
    track_cmd->add_option("--precision", track.precision, "decimals in the output, -1 for lossless")
        ->capture_default_str();
    track_cmd->add_option("--simd", track.simd, "kernel backend")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}))
        ->capture_default_str();
    add_config_options(track_cmd, track);

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "score tracks against ground truth");
    eval_cmd->add_option("--gt", eval.gt, "ground-truth MOT file (repeatable)")->required();
    eval_cmd->add_option("--pred", eval.pred, "predicted MOT file (repeatable, one per --gt)")->required();
    eval_cmd->add_option("--report", eval.report, "JSON report path");
    eval_cmd->add_option("--text", eval.text, "plain-text report path");

    StatsArgs stats;
    auto* stats_cmd = app.add_subcommand("stats", "dataset statistics of a ground-truth file");
    stats_cmd->add_option("--gt", stats.gt, "ground-truth MOT file")->required()->check(CLI::ExistingFile);
    stats_cmd->add_option("--embs", stats.embs, "embeddings aligned with the ground-truth rows")
        ->check(CLI::ExistingFile);
    stats_cmd->add_option("--frame-size", stats.frame_size, "WIDTHxHEIGHT")->required();
    stats_cmd->add_option("--frames", stats.frames, "sequence length when longer than the last annotated frame");
    stats_cmd->add_option("--out", stats.out, "JSON output path");

    SimulateArgs simulate;
    auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic scene");
    sim_cmd->add_option("--spec", simulate.spec, "scenario JSON")->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("--out-dir", simulate.out_dir, "output directory")->required();
    sim_cmd->add_option("--precision", simulate.precision, "decimals in MOT files, -1 for lossless")
        ->capture_default_str();

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "track and score over a mode x theta x alpha grid");
    sweep_cmd->add_option("--grid", sweep.grid, "grid JSON")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--out-dir", sweep.out_dir, "output directory")->required();
    sweep_cmd->add_option("--jobs", sweep.jobs, "cells evaluated in parallel")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--simd", sweep.simd, "kernel backend")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kInputError;
    }

    try {
        if (app.got_subcommand(track_cmd)) return cmd_track(track, out, err);
        if (app.got_subcommand(eval_cmd)) return cmd_eval(eval, out);
        if (app.got_subcommand(stats_cmd)) return cmd_stats(stats, out);
        if (app.got_subcommand(sim_cmd)) return cmd_simulate(simulate, out);
        if (app.got_subcommand(sweep_cmd)) return cmd_sweep(sweep, out, err);
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kNumericalError;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kNumericalError;
    }
    return kInputError;
}

}  // namespace kamsort::cli
