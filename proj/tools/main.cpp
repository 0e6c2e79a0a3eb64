#include "dpair/alignment.hpp"
#include "dpair/filters.hpp"
#include "dpair/geometry.hpp"
#include "dpair/groundtruth.hpp"
#include "dpair/image_io.hpp"
#include "dpair/json_conv.hpp"
#include "dpair/metrics.hpp"
#include "dpair/parallel.hpp"
#include "dpair/sequence_io.hpp"
#include "dpair/simulator.hpp"
#include "dpair/stacking.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw dpair::WriteError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw dpair::WriteError("failed writing " + path.string());
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw dpair::LoadError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw dpair::LoadError("unparsable JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// ---- simulate ----

struct SimulateArgs {
    std::string scene_file, rig_file, out_dir;
    double duration_s = 10.0;
    std::uint64_t seed = 0;
};

void run_simulate(const SimulateArgs& args) {
    if (!fs::exists(args.scene_file)) throw dpair::LoadError("scene spec not found: " + args.scene_file);
    if (!fs::exists(args.rig_file)) throw dpair::LoadError("rig spec not found: " + args.rig_file);
    const dpair::SceneSpec scene = dpair::load_scene_spec(args.scene_file);
    const dpair::RigSpec rig = dpair::load_rig_spec(args.rig_file);

    const dpair::RecordedPair rec = dpair::record_pair(scene, rig, args.duration_s, args.seed);
    const fs::path out(args.out_dir);
    fs::create_directories(out);
    dpair::save_sequence(rec.lq, out / "lq");
    dpair::save_sequence(rec.hq, out / "hq");
    write_json_file(out / "truth.json", dpair::truth_to_json(rec.truth));
    std::cout << "wrote " << rec.lq.frames.size() << " LQ and " << rec.hq.frames.size()
              << " HQ frames to " << out.string() << "\n";
}

// ---- align ----

struct AlignArgs {
    std::string lq_dir, hq_dir, out_file = "alignment.json";
    double range_ms = 60.0, step_ms = 5.0, max_gap_ms = 15.0;
    std::string provider = "classic";
    std::string truth_file;
    int passes = 10;
    double huber_px = 3.0;
    int min_corr = 50;
    bool coarse_to_fine = false;
};

void run_align(const AlignArgs& args) {
    const dpair::Sequence lq = dpair::load_sequence(args.lq_dir);
    const dpair::Sequence hq = dpair::load_sequence(args.hq_dir);

    std::unique_ptr<dpair::CorrespondenceProvider> provider;
    if (args.provider == "classic") {
        provider = std::make_unique<dpair::ClassicCorrespondenceProvider>();
    } else if (args.provider == "oracle") {
        fs::path truth_path = args.truth_file;
        if (truth_path.empty()) truth_path = fs::path(args.lq_dir).parent_path() / "truth.json";
        if (!fs::exists(truth_path))
            throw dpair::LoadError("oracle provider needs a truth file, none at " + truth_path.string());
        const dpair::SimTruth truth = dpair::load_truth(truth_path);
        provider = std::make_unique<dpair::OracleCorrespondenceProvider>(truth, lq.intrinsics, hq.intrinsics);
    } else {
        throw dpair::InvalidInputError("unknown provider '" + args.provider + "' (expected classic or oracle)");
    }

    dpair::ShiftSearchOptions options;
    options.range_ms = args.range_ms;
    options.step_ms = args.step_ms;
    options.max_gap_ms = args.max_gap_ms;
    options.coarse_to_fine = args.coarse_to_fine;
    options.calibrate.outer_passes = args.passes;
    options.calibrate.huber_delta_px = args.huber_px;
    options.calibrate.min_correspondences = args.min_corr;

    const dpair::ShiftSearchResult result = dpair::find_time_shift(lq, hq, *provider, options);

    json candidates = json::array();
    for (const dpair::ShiftCandidate& c : result.candidates) {
        candidates.push_back({{"delta_ms", c.delta_ms},
                              {"eligible", c.eligible},
                              {"retained_pairs", c.retained_pairs},
                              {"correspondences", c.correspondences},
                              {"residual_px", c.residual_px},
                              {"passes", c.passes},
                              {"failure", c.failure}});
    }
    const json out = {{"delta_ms", result.alignment.shift.delta_ms},
                      {"transform", dpair::transform_to_json(result.alignment.hq_to_lq)},
                      {"residual_px", result.alignment.residual_px},
                      {"retained_pairs", result.alignment.mapping.pairs.size()},
                      {"range_ms", args.range_ms},
                      {"step_ms", args.step_ms},
                      {"max_gap_ms", args.max_gap_ms},
                      {"provider", args.provider},
                      {"candidates", candidates}};
    write_json_file(args.out_file, out);
    std::cout << "delta " << result.alignment.shift.delta_ms << " ms, residual "
              << result.alignment.residual_px << " px, " << result.alignment.mapping.pairs.size()
              << " retained pairs -> " << args.out_file << "\n";
}

// ---- pair ----

struct PairArgs {
    std::string lq_dir, hq_dir, alignment_file, out_dir;
    double max_gap_ms = 15.0;
};

void run_pair(const PairArgs& args) {
    const dpair::Sequence lq = dpair::load_sequence(args.lq_dir);
    const dpair::Sequence hq = dpair::load_sequence(args.hq_dir);
    const json aj = read_json_file(args.alignment_file);

    dpair::AlignmentResult alignment;
    try {
        alignment.shift.delta_ms = aj.at("delta_ms").get<double>();
        alignment.hq_to_lq = dpair::transform_from_json(aj.at("transform"));
        alignment.residual_px = aj.value("residual_px", 0.0);
    } catch (const json::exception& e) {
        throw dpair::LoadError(args.alignment_file + ": " + e.what());
    }
    alignment.mapping = dpair::match_frames(lq, hq, alignment.shift);

    const dpair::PairedDataset dataset = dpair::build_paired_dataset(lq, hq, alignment, args.max_gap_ms);
    dpair::save_paired_dataset(dataset, args.out_dir);
    std::cout << "wrote " << dataset.records.size() << " paired records to " << args.out_dir << "\n";
}

// ---- denoise ----

struct DenoiseArgs {
    std::string input_dir, out_dir;
    std::string filter = "rgf";
    double sigma_space = 2.0, sigma_range = 0.05;
    int radius = 0, iters = 4;
};

void run_denoise(const DenoiseArgs& args) {
    const dpair::FilterKind kind = dpair::filter_kind_from_string(args.filter);
    dpair::FilterParams params;
    params.sigma_space_px = args.sigma_space;
    params.sigma_range = args.sigma_range;
    params.radius = args.radius;
    params.iterations = args.iters;
    params.validate(kind == dpair::FilterKind::rgf);

    dpair::Sequence seq = dpair::load_sequence(args.input_dir);
    const auto denoiser = dpair::make_denoiser(kind, params);
    std::vector<dpair::DepthImage> filtered(seq.frames.size());
    dpair::parallel_for(0, static_cast<std::int64_t>(seq.frames.size()),
                        [&](std::int64_t i) { filtered[i] = denoiser->denoise(seq.frames[i]); });
    for (size_t i = 0; i < seq.frames.size(); ++i) seq.frames[i].depth = std::move(filtered[i]);
    dpair::save_sequence(seq, args.out_dir);
    std::cout << "denoised " << seq.frames.size() << " frames with " << args.filter << " -> "
              << args.out_dir << "\n";
}

// ---- tune ----

struct TuneArgs {
    std::string paired_dir, out_file = "params.json";
    std::string filter = "rgf";
    std::vector<double> sigma_space{1.0, 2.0, 3.0};
    std::vector<double> sigma_range;
    std::vector<int> radius{0};
    std::vector<int> iters{4};
};

void run_tune(const TuneArgs& args) {
    const dpair::FilterKind kind = dpair::filter_kind_from_string(args.filter);
    const dpair::PairedDataset dataset = dpair::load_paired_dataset(args.paired_dir);

    dpair::ParamGrid grid;
    grid.sigma_space = args.sigma_space;
    grid.sigma_range = args.sigma_range.empty()
                           ? (kind == dpair::FilterKind::jbf ? std::vector<double>{5.0, 15.0, 40.0}
                                                             : std::vector<double>{0.01, 0.02, 0.05})
                           : args.sigma_range;
    grid.radius = args.radius;
    grid.iterations = args.iters;

    const dpair::FilterParams best = dpair::tune_params(kind, dataset, grid);

    const auto denoiser = dpair::make_denoiser(kind, best);
    std::vector<dpair::DepthImage> preds(dataset.records.size());
    dpair::parallel_for(0, static_cast<std::int64_t>(dataset.records.size()),
                        [&](std::int64_t i) { preds[i] = denoiser->denoise(dataset.records[i].lq); });
    const dpair::DatasetEval ev = dpair::evaluate_dataset(dataset, preds);

    const json out = {{"filter", args.filter},
                      {"sigma_space", best.sigma_space_px},
                      {"sigma_range", best.sigma_range},
                      {"radius", best.radius},
                      {"iterations", best.iterations},
                      {"mean_mse_mm2", ev.mean_mse_mm2},
                      {"mean_rmse_mm", ev.mean_rmse_mm}};
    write_json_file(args.out_file, out);
    std::cout << "best " << args.filter << ": sigma_space " << best.sigma_space_px << ", sigma_range "
              << best.sigma_range << ", mse " << ev.mean_mse_mm2 << " mm^2 -> " << args.out_file << "\n";
}

// ---- eval ----

struct EvalArgs {
    std::string paired_dir, pred_dir;
    std::string out_csv = "metrics.csv", out_json = "summary.json";
    std::string heatmap_dir;
    std::string loss_mode = "mean";
};

void run_eval(const EvalArgs& args) {
    if (args.loss_mode != "mean" && args.loss_mode != "sum")
        throw dpair::InvalidInputError("loss mode must be mean or sum");
    const dpair::PairedDataset dataset = dpair::load_paired_dataset(args.paired_dir);

    std::vector<dpair::DepthImage> preds;
    if (!args.pred_dir.empty()) {
        const dpair::Sequence pred_seq = dpair::load_sequence(args.pred_dir);
        preds.reserve(dataset.records.size());
        for (const dpair::PairedRecord& r : dataset.records) {
            const auto it =
                std::find_if(pred_seq.frames.begin(), pred_seq.frames.end(),
                             [&](const dpair::Frame& f) { return f.timestamp_us == r.lq.timestamp_us; });
            if (it == pred_seq.frames.end())
                throw dpair::InvalidInputError("prediction sequence has no frame at timestamp " +
                                               std::to_string(r.lq.timestamp_us));
            preds.push_back(it->depth);
        }
    }

    const dpair::DatasetEval ev = dpair::evaluate_dataset(dataset, preds);

    std::ofstream csv(args.out_csv);
    if (!csv) throw dpair::WriteError("cannot open " + args.out_csv + " for writing");
    csv << "frame,lq_timestamp_us,pixels,empty_mask,l1_m,mse_mm2,rmse_mm\n";
    for (size_t i = 0; i < ev.frames.size(); ++i) {
        const dpair::FrameEval& f = ev.frames[i];
        double l1 = f.l1_m;
        if (args.loss_mode == "sum") l1 *= static_cast<double>(f.pixels);
        csv << i << "," << dataset.records[i].lq.timestamp_us << "," << f.pixels << ","
            << (f.empty_mask ? 1 : 0) << "," << fmt_double(l1) << "," << fmt_double(f.mse_mm2) << ","
            << fmt_double(f.rmse_mm) << "\n";
    }
    csv.close();

    const json summary = {{"frames", ev.frames.size()},
                          {"evaluated_frames", ev.evaluated_frames},
                          {"empty_frames", ev.empty_frames},
                          {"mean_l1_m", ev.mean_l1_m},
                          {"mean_mse_mm2", ev.mean_mse_mm2},
                          {"mean_rmse_mm", ev.mean_rmse_mm},
                          {"loss_mode", args.loss_mode}};
    write_json_file(args.out_json, summary);

    if (!args.heatmap_dir.empty()) {
        fs::create_directories(args.heatmap_dir);
        for (size_t i = 0; i < dataset.records.size(); ++i) {
            const dpair::PairedRecord& r = dataset.records[i];
            const dpair::DepthImage& pred = preds.empty() ? r.lq.depth : preds[i];
            std::vector<std::uint16_t> err(r.gt_depth.values.size(), 0);
            for (size_t p = 0; p < err.size(); ++p) {
                if (!(r.gt_depth.values[p] > 0.0f)) continue;
                if (r.lq.seg_mask && !r.lq.seg_mask->bits[p]) continue;
                const double mm =
                    std::abs(static_cast<double>(pred.values[p]) - r.gt_depth.values[p]) * 1000.0;
                err[p] = static_cast<std::uint16_t>(std::min(65535.0, std::round(mm)));
            }
            char name[16];
            std::snprintf(name, sizeof(name), "%06zu.png", i);
            dpair::write_gray16_png(fs::path(args.heatmap_dir) / name, err, r.gt_depth.width,
                                    r.gt_depth.height);
        }
    }
    std::cout << "mean mse " << ev.mean_mse_mm2 << " mm^2 (rmse " << ev.mean_rmse_mm << " mm) over "
              << ev.evaluated_frames << " frames -> " << args.out_csv << ", " << args.out_json << "\n";
}

// ---- folds ----

struct FoldsArgs {
    std::vector<std::string> ids;
    std::string scan_dir;
    double test_fraction = 0.25;
    std::uint64_t seed = 0;
    std::string out_file = "folds.json";
};

void run_folds(const FoldsArgs& args) {
    std::vector<std::string> ids = args.ids;
    if (!args.scan_dir.empty()) {
        if (!fs::is_directory(args.scan_dir))
            throw dpair::LoadError("scan directory not found: " + args.scan_dir);
        for (const auto& entry : fs::directory_iterator(args.scan_dir))
            if (entry.is_directory() && fs::exists(entry.path() / "manifest.json"))
                ids.push_back(entry.path().filename().string());
        std::sort(ids.begin(), ids.end());
    }
    if (ids.empty()) throw dpair::InvalidInputError("folds needs --ids or --scan");

    const dpair::FoldPlan plan = dpair::make_fold_plan(ids, args.test_fraction, args.seed);
    write_json_file(args.out_file, dpair::fold_plan_to_json(plan));
    std::cout << "P1=" << plan.p1.size() << " P2=" << plan.p2.size() << " P_test=" << plan.p_test.size()
              << " -> " << args.out_file << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dpair: align two unsynchronized RGB-D sequences, build paired ground truth, "
                 "and evaluate depth denoisers against it"};
    app.require_subcommand(1);

    int threads = 0;
    bool json_errors = false;
    app.add_option("--threads", threads, "worker threads (0 = hardware)")->capture_default_str();
    app.add_flag("--json-errors", json_errors, "emit errors as JSON lines on stderr");

    SimulateArgs sim;
    CLI::App* c_sim = app.add_subcommand("simulate", "render a synthetic two-sensor recording");
    c_sim->add_option("scene", sim.scene_file, "scene spec JSON")->required();
    c_sim->add_option("rig", sim.rig_file, "rig spec JSON")->required();
    c_sim->add_option("--duration", sim.duration_s, "seconds to record")->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
    c_sim->add_option("--out", sim.out_dir, "output directory")->required();

    AlignArgs al;
    CLI::App* c_align = app.add_subcommand("align", "recover the clock offset and extrinsic");
    c_align->add_option("lq_dir", al.lq_dir, "LQ sequence directory")->required();
    c_align->add_option("hq_dir", al.hq_dir, "HQ sequence directory")->required();
    c_align->add_option("--range-ms", al.range_ms)->capture_default_str();
    c_align->add_option("--step-ms", al.step_ms)->capture_default_str();
    c_align->add_option("--max-gap-ms", al.max_gap_ms)->capture_default_str();
    c_align->add_option("--provider", al.provider, "classic or oracle")->capture_default_str();
    c_align->add_option("--truth", al.truth_file, "truth.json for the oracle provider");
    c_align->add_option("--passes", al.passes)->capture_default_str();
    c_align->add_option("--huber-px", al.huber_px, "Huber delta in px (0 = off)")->capture_default_str();
    c_align->add_option("--min-corr", al.min_corr)->capture_default_str();
    c_align->add_flag("--coarse-to-fine", al.coarse_to_fine, "refine the winner at half step");
    c_align->add_option("--out", al.out_file)->capture_default_str();

    PairArgs pr;
    CLI::App* c_pair = app.add_subcommand("pair", "build the paired ground-truth dataset");
    c_pair->add_option("lq_dir", pr.lq_dir)->required();
    c_pair->add_option("hq_dir", pr.hq_dir)->required();
    c_pair->add_option("alignment", pr.alignment_file, "alignment.json from align")->required();
    c_pair->add_option("--max-gap-ms", pr.max_gap_ms)->capture_default_str();
    c_pair->add_option("--out", pr.out_dir)->required();

    DenoiseArgs dn;
    CLI::App* c_den = app.add_subcommand("denoise", "filter a sequence's depth");
    c_den->add_option("input", dn.input_dir, "sequence directory")->required();
    c_den->add_option("--filter", dn.filter, "bf, jbf or rgf")->capture_default_str();
    c_den->add_option("--sigma-space", dn.sigma_space)->capture_default_str();
    c_den->add_option("--sigma-range", dn.sigma_range)->capture_default_str();
    c_den->add_option("--radius", dn.radius, "0 = ceil(3 sigma)")->capture_default_str();
    c_den->add_option("--iters", dn.iters, "rgf iterations")->capture_default_str();
    c_den->add_option("--out", dn.out_dir)->required();

    TuneArgs tn;
    CLI::App* c_tune = app.add_subcommand("tune", "grid-search filter parameters against ground truth");
    c_tune->add_option("paired", tn.paired_dir, "paired dataset directory")->required();
    c_tune->add_option("--filter", tn.filter)->capture_default_str();
    c_tune->add_option("--sigma-space", tn.sigma_space, "candidate values")->delimiter(',');
    c_tune->add_option("--sigma-range", tn.sigma_range, "candidate values")->delimiter(',');
    c_tune->add_option("--radius", tn.radius, "candidate values")->delimiter(',');
    c_tune->add_option("--iters", tn.iters, "candidate values")->delimiter(',');
    c_tune->add_option("--out", tn.out_file)->capture_default_str();

    EvalArgs ev;
    CLI::App* c_eval = app.add_subcommand("eval", "score predictions against paired ground truth");
    c_eval->add_option("paired", ev.paired_dir, "paired dataset directory")->required();
    c_eval->add_option("--pred", ev.pred_dir, "prediction sequence (default: raw LQ depth)");
    c_eval->add_option("--out-csv", ev.out_csv)->capture_default_str();
    c_eval->add_option("--out-json", ev.out_json)->capture_default_str();
    c_eval->add_option("--heatmap", ev.heatmap_dir, "write per-frame error images here");
    c_eval->add_option("--loss-mode", ev.loss_mode, "mean or sum for the L1 column")->capture_default_str();

    FoldsArgs fo;
    CLI::App* c_folds = app.add_subcommand("folds", "make an out-of-fold split plan");
    c_folds->add_option("--ids", fo.ids, "sequence ids")->delimiter(',');
    c_folds->add_option("--scan", fo.scan_dir, "directory of sequence subdirectories");
    c_folds->add_option("--test-fraction", fo.test_fraction)->capture_default_str();
    c_folds->add_option("--seed", fo.seed)->capture_default_str();
    c_folds->add_option("--out", fo.out_file)->capture_default_str();

    auto with_threads = [&](auto fn) {
        return [&, fn] {
            dpair::set_thread_count(threads);
            fn();
        };
    };
    c_sim->callback(with_threads([&] { run_simulate(sim); }));
    c_align->callback(with_threads([&] { run_align(al); }));
    c_pair->callback(with_threads([&] { run_pair(pr); }));
    c_den->callback(with_threads([&] { run_denoise(dn); }));
    c_tune->callback(with_threads([&] { run_tune(tn); }));
    c_eval->callback(with_threads([&] { run_eval(ev); }));
    c_folds->callback(with_threads([&] { run_folds(fo); }));

    auto report = [&](const char* kind, const std::exception& e) {
        if (json_errors) {
            const json j = {{"error", kind}, {"message", e.what()}};
            std::cerr << j.dump() << "\n";
        } else {
            std::cerr << "error: " << e.what() << "\n";
        }
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const dpair::AlignmentInfeasibleError& e) {
        report("alignment-infeasible", e);
        return 3;
    } catch (const dpair::DivergenceError& e) {
        report("divergence", e);
        return 4;
    } catch (const dpair::InvalidInputError& e) {
        report("invalid-input", e);
        return 2;
    } catch (const std::exception& e) {
        report("internal", e);
        return 1;
    }
    return 0;
}
