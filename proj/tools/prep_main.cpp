// prep — PreP-OCR toolkit CLI. Subcommands cover the whole pipeline:
// synthesis, degradation, patch restoration, AMP, OCR adapters, alignment,
// error modeling, the reference corrector, and end-to-end runs.

#include "prep/ampmetric.hpp"
#include "prep/correct.hpp"
#include "prep/ocrnoise.hpp"
#include "prep/patchfuse.hpp"
#include "prep/pipeline.hpp"
#include "prep/png_io.hpp"
#include "prep/synthdoc.hpp"
#include "prep/textalign.hpp"
#include "prep/unicode.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace prep;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::string_view text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

std::vector<std::string> sorted_pngs(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png")
            names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

std::array<double, 4> parse_level_weights(const std::string& spec) {
    // "1:0.2,3:0.8" or "uniform"
    std::array<double, 4> w{0, 0, 0, 0};
    if (spec == "uniform") return {0.25, 0.25, 0.25, 0.25};
    size_t pos = 0;
    while (pos < spec.size()) {
        size_t comma = spec.find(',', pos);
        std::string item = spec.substr(pos, comma == std::string::npos ? comma : comma - pos);
        size_t colon = item.find(':');
        if (colon == std::string::npos) throw CLI::ValidationError("--levels", "expected L:W pairs");
        int level = std::stoi(item.substr(0, colon));
        if (level < 1 || level > 4) throw CLI::ValidationError("--levels", "level must be 1..4");
        w[size_t(level - 1)] = std::stod(item.substr(colon + 1));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return w;
}

noise::RateScale load_scale(const std::string& path) {
    json j = json::parse(read_file(path));
    noise::RateScale s;
    s.lambda = j.at("lambda").get<double>();
    s.target_cer = j.value("target_cer", 0.0);
    s.achieved_cer = j.value("achieved_cer", 0.0);
    s.saturated = j.value("saturated", false);
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PreP-OCR toolkit: synthetic degradation, patch restoration, OCR evaluation, "
                 "error modeling, and post-correction"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate paired clean/degraded page images");
    struct {
        std::string corpus, out, levels = "uniform", noise_config;
        std::vector<std::string> fonts;
        int count = 10;
        uint64_t seed = 0;
        double stitch_fraction = 0.10;
        int page_width = 768, page_height = 1024, margin = 48, chars_per_page = 1400;
        double font_size = 22.0;
        int workers = 1;
    } sy;
    synth->add_option("--corpus", sy.corpus, "plain-text corpus")->required();
    synth->add_option("--count", sy.count, "number of pairs")->required();
    synth->add_option("--out", sy.out, "output directory")->required();
    synth->add_option("--font", sy.fonts, "font file (repeatable)")->required();
    synth->add_option("--levels", sy.levels, "level weights, e.g. 3:1.0 (default uniform)");
    synth->add_option("--seed", sy.seed, "master seed");
    synth->add_option("--stitch-fraction", sy.stitch_fraction, "fraction of stitched composites");
    synth->add_option("--page-width", sy.page_width);
    synth->add_option("--page-height", sy.page_height);
    synth->add_option("--margin", sy.margin);
    synth->add_option("--font-size", sy.font_size, "pixels per em");
    synth->add_option("--chars-per-page", sy.chars_per_page);
    synth->add_option("--noise-config", sy.noise_config, "JSON level overrides");
    synth->add_option("--workers", sy.workers);

    // ---- degrade ----
    auto* degrade_cmd = app.add_subcommand("degrade", "apply the degradation suite to one image");
    struct {
        std::string in, out, noise_config;
        int level = 3;
        uint64_t seed = 0;
        bool print_meta = false;
    } dg;
    degrade_cmd->add_option("--in", dg.in)->required();
    degrade_cmd->add_option("--out", dg.out)->required();
    degrade_cmd->add_option("--level", dg.level, "noise level 1..4");
    degrade_cmd->add_option("--seed", dg.seed);
    degrade_cmd->add_option("--noise-config", dg.noise_config, "JSON level overrides");
    degrade_cmd->add_flag("--print-meta", dg.print_meta, "print applied operators as JSON");

    // ---- restore ----
    auto* restore_cmd = app.add_subcommand("restore", "patch-based restoration of one image");
    struct {
        std::string in, out, mode = "multi", direction = "tl-br", fusion = "median";
        std::string restorer = "identity", resize_width = "off";
        int trim = 64, workers = 1;
    } rs;
    restore_cmd->add_option("--in", rs.in)->required();
    restore_cmd->add_option("--out", rs.out)->required();
    restore_cmd->add_option("--mode", rs.mode)->check(CLI::IsMember({"single", "multi"}));
    restore_cmd->add_option("--direction", rs.direction, "single mode scan direction");
    restore_cmd->add_option("--fusion", rs.fusion)->check(CLI::IsMember({"median", "mean"}));
    restore_cmd->add_option("--trim", rs.trim)->check(CLI::IsMember({0, 32, 64}));
    restore_cmd->add_option("--restorer", rs.restorer, "identity|otsu|median3|exec:<template>");
    restore_cmd->add_option("--resize-width", rs.resize_width, "px or 'off'");
    restore_cmd->add_option("--workers", rs.workers);

    // ---- amp ----
    auto* amp_cmd = app.add_subcommand("amp", "Aggregated Masked PSNR over paired patch sets");
    struct {
        std::string gt_dir, pred_dir, region = "all", report, heatmap;
    } am;
    amp_cmd->add_option("--gt-dir", am.gt_dir)->required();
    amp_cmd->add_option("--pred-dir", am.pred_dir)->required();
    amp_cmd->add_option("--region", am.region)->check(CLI::IsMember({"full", "192", "128", "all"}));
    amp_cmd->add_option("--report", am.report, "JSON report path");
    amp_cmd->add_option("--heatmap", am.heatmap, "mean-map PNG (full region)");

    // ---- ocr ----
    auto* ocr_cmd = app.add_subcommand("ocr", "run an OCR engine adapter over images");
    struct {
        std::string images, engine, synth_manifest, out;
        double mock_lambda = 0.0;
        std::string mock_model;
        uint64_t seed = 0;
        int workers = 1;
    } oc;
    ocr_cmd->add_option("--images", oc.images, "directory of page PNGs");
    ocr_cmd->add_option("--engine", oc.engine, "mock | exec:<template with {image} {output}>")
        ->required();
    ocr_cmd->add_option("--synth-manifest", oc.synth_manifest,
                        "synth manifest (page source; required for mock)");
    ocr_cmd->add_option("--mock-model", oc.mock_model, "ErrorModel JSON for the mock engine");
    ocr_cmd->add_option("--mock-lambda", oc.mock_lambda);
    ocr_cmd->add_option("--seed", oc.seed);
    ocr_cmd->add_option("--out", oc.out, "output directory for texts")->required();
    ocr_cmd->add_option("--workers", oc.workers);

    // ---- align ----
    auto* align_cmd = app.add_subcommand("align", "align OCR output against ground truth");
    struct {
        std::string gt, hyp, report;
        int anchor_n = 4;
        double threshold = 0.25;
    } al;
    align_cmd->add_option("--gt", al.gt, "ground-truth text file")->required();
    align_cmd->add_option("--hyp", al.hyp, "hypothesis text file or directory of pages")
        ->required();
    align_cmd->add_option("--report", al.report, "JSONL page evaluations")->required();
    align_cmd->add_option("--anchor-n", al.anchor_n);
    align_cmd->add_option("--outlier-threshold", al.threshold);

    // ---- extract-errors ----
    auto* extract_cmd = app.add_subcommand("extract-errors", "build an ErrorModel from aligned pairs");
    struct {
        std::string pairs, out;
    } ex;
    extract_cmd->add_option("--pairs", ex.pairs, "JSONL records {\"gt\":.., \"hyp\":..}")
        ->required();
    extract_cmd->add_option("--out", ex.out, "ErrorModel JSON")->required();

    // ---- calibrate ----
    auto* calibrate_cmd = app.add_subcommand("calibrate", "find lambda for a target CER");
    struct {
        std::string model, sample, out;
        double target = 0.05;
        uint64_t seed = 0;
    } ca;
    calibrate_cmd->add_option("--model", ca.model)->required();
    calibrate_cmd->add_option("--target-cer", ca.target)->required();
    calibrate_cmd->add_option("--sample", ca.sample, "representative text")->required();
    calibrate_cmd->add_option("--seed", ca.seed);
    calibrate_cmd->add_option("--out", ca.out, "RateScale JSON");

    // ---- inject ----
    auto* inject_cmd = app.add_subcommand("inject", "inject calibrated errors into clean text");
    struct {
        std::string in, model, scale, out;
        double lambda = -1.0;
        uint64_t seed = 0;
    } in_;
    inject_cmd->add_option("--in", in_.in)->required();
    inject_cmd->add_option("--model", in_.model)->required();
    inject_cmd->add_option("--scale", in_.scale, "RateScale JSON from calibrate");
    inject_cmd->add_option("--lambda", in_.lambda, "explicit lambda (overrides --scale)");
    inject_cmd->add_option("--seed", in_.seed);
    inject_cmd->add_option("--out", in_.out)->required();

    // ---- make-pairs ----
    auto* pairs_cmd = app.add_subcommand("make-pairs", "synthesize post-correction training pairs");
    struct {
        std::string corpus, model, out;
        std::vector<double> rates;
        int max_len = 512;
        uint64_t seed = 0;
    } mp;
    pairs_cmd->add_option("--corpus", mp.corpus)->required();
    pairs_cmd->add_option("--model", mp.model)->required();
    pairs_cmd->add_option("--rates", mp.rates, "target CER grid")->required();
    pairs_cmd->add_option("--max-len", mp.max_len);
    pairs_cmd->add_option("--seed", mp.seed);
    pairs_cmd->add_option("--out", mp.out, "JSONL output")->required();

    // ---- lm-train ----
    auto* lmtrain_cmd = app.add_subcommand("lm-train", "train the character n-gram model");
    struct {
        std::string corpus, out;
        int order = 5;
        double k = 0.01;
    } lt;
    lmtrain_cmd->add_option("--corpus", lt.corpus)->required();
    lmtrain_cmd->add_option("--order", lt.order);
    lmtrain_cmd->add_option("--k", lt.k, "add-k smoothing constant");
    lmtrain_cmd->add_option("--out", lt.out)->required();

    // ---- correct ----
    auto* correct_cmd = app.add_subcommand("correct", "noisy-channel reference corrector");
    struct {
        std::string in, lm, channel, out;
        int beam = 16;
        double channel_weight = 1.0, lm_weight = 1.0;
    } co;
    correct_cmd->add_option("--in", co.in)->required();
    correct_cmd->add_option("--lm", co.lm)->required();
    correct_cmd->add_option("--channel", co.channel, "ErrorModel JSON")->required();
    correct_cmd->add_option("--out", co.out)->required();
    correct_cmd->add_option("--beam", co.beam);
    correct_cmd->add_option("--channel-weight", co.channel_weight);
    correct_cmd->add_option("--lm-weight", co.lm_weight);

    // ---- pipeline ----
    auto* pipeline_cmd = app.add_subcommand("pipeline", "run Raw/Pre/PreP end to end");
    struct {
        std::string config, synth_manifest, images, gt, out;
        int workers = 1;
    } pl;
    pipeline_cmd->add_option("--config", pl.config, "pipeline config JSON")->required();
    pipeline_cmd->add_option("--synth-manifest", pl.synth_manifest,
                             "pages from a synth dataset manifest");
    pipeline_cmd->add_option("--images", pl.images, "pages from a directory of PNGs");
    pipeline_cmd->add_option("--gt", pl.gt, "book-level ground-truth text (with --images)");
    pipeline_cmd->add_option("--out", pl.out)->required();
    pipeline_cmd->add_option("--workers", pl.workers);

    // ---- report ----
    auto* report_cmd = app.add_subcommand("report", "re-render reports from a saved manifest");
    struct {
        std::string manifest, out_json, out_text;
    } rp;
    report_cmd->add_option("--manifest", rp.manifest)->required();
    report_cmd->add_option("--out-json", rp.out_json);
    report_cmd->add_option("--out-text", rp.out_text);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            synth::DatasetOptions opt;
            opt.corpus_path = sy.corpus;
            opt.count = sy.count;
            opt.level_weights = parse_level_weights(sy.levels);
            opt.font_paths = sy.fonts;
            opt.master_seed = sy.seed;
            opt.out_dir = sy.out;
            opt.stitch_fraction = sy.stitch_fraction;
            opt.chars_per_page = sy.chars_per_page;
            opt.workers = sy.workers;
            opt.render.page_width = sy.page_width;
            opt.render.page_height = sy.page_height;
            opt.render.margin = sy.margin;
            opt.render.font_size = sy.font_size;
            if (!sy.noise_config.empty())
                opt.level_overrides = synth::load_level_configs(sy.noise_config);
            synth::DatasetSummary s = synth::generate_dataset(opt);
            std::cout << "pairs: " << s.pairs << "  stitched: " << s.stitched << "\nmanifest: "
                      << s.manifest_path << "\n";
        } else if (*degrade_cmd) {
            synth::DegradationConfig cfg;
            if (!dg.noise_config.empty())
                cfg = synth::load_level_configs(dg.noise_config)[size_t(dg.level - 1)];
            else
                cfg = synth::DegradationConfig::preset(dg.level);
            GrayImage img = read_png_gray(dg.in);
            synth::DegradeMeta meta;
            GrayImage out = synth::degrade(img, cfg, dg.seed, &meta);
            write_png_gray(dg.out, out);
            if (dg.print_meta) {
                json j{{"op_order", meta.op_order}, {"binarized", meta.binarized},
                       {"black_spots", meta.black_spots}, {"white_patches", meta.white_patches},
                       {"stains", meta.stains}, {"line_artifacts", meta.line_artifacts}};
                std::cout << j.dump(2) << "\n";
            }
        } else if (*restore_cmd) {
            GrayImage img = read_png_gray(rs.in);
            if (rs.resize_width != "off") img = resize_to_width(img, std::stoi(rs.resize_width));
            patch::RestoreMode mode;
            mode.multi = rs.mode == "multi";
            mode.direction = patch::direction_from_string(rs.direction);
            mode.fusion = rs.fusion == "mean" ? patch::FuseMethod::Mean : patch::FuseMethod::Median;
            patch::RestorerHandle restorer = patch::RestorerHandle::parse(rs.restorer);
            patch::RestoreReport rep;
            GrayImage out = patch::restore_image(img, restorer, mode, rs.trim, rs.workers,
                                                 restorer.deterministic ? nullptr : &rep);
            write_png_gray(rs.out, out);
            if (!restorer.deterministic && !rep.pass_checksums.empty()) {
                std::cout << "pass checksums:";
                for (uint64_t c : rep.pass_checksums) std::cout << " " << std::hex << c;
                std::cout << std::dec << "\n";
            }
        } else if (*amp_cmd) {
            std::vector<std::string> gt_names = sorted_pngs(am.gt_dir);
            std::optional<amp::PsnrAccumulator> acc;
            int used = 0;
            for (const std::string& name : gt_names) {
                fs::path pred_path = fs::path(am.pred_dir) / name;
                if (!fs::exists(pred_path)) continue;
                GrayImage gt = read_png_gray((fs::path(am.gt_dir) / name).string());
                GrayImage pred = read_png_gray(pred_path.string());
                if (!acc) acc.emplace(gt.width(), gt.height());
                acc->accumulate(gt, pred);
                ++used;
            }
            if (!used) throw std::runtime_error("amp: no paired images found");
            json rep{{"pairs", used}};
            auto add_region = [&](amp::Region r) {
                rep["amp"][amp::to_string(r)] = acc->finalize(r).amp;
            };
            if (am.region == "all") {
                add_region(amp::Region::Full);
                add_region(amp::Region::Central192);
                add_region(amp::Region::Central128);
            } else {
                add_region(amp::region_from_string(am.region));
            }
            std::cout << rep.dump(2) << "\n";
            if (!am.report.empty()) write_file(am.report, rep.dump(2) + "\n");
            if (!am.heatmap.empty())
                write_png_gray(am.heatmap, amp::heat_image(acc->finalize(amp::Region::Full)));
        } else if (*ocr_cmd) {
            std::vector<pipe::PageInput> pages;
            if (!oc.synth_manifest.empty()) {
                pages = pipe::pages_from_synth_manifest(oc.synth_manifest);
            } else if (!oc.images.empty()) {
                for (const std::string& name : sorted_pngs(oc.images)) {
                    pipe::PageInput p;
                    p.id = fs::path(name).stem().string();
                    p.image_path = (fs::path(oc.images) / name).string();
                    pages.push_back(std::move(p));
                }
            } else {
                throw std::runtime_error("ocr: need --images or --synth-manifest");
            }
            pipe::OcrEngineSpec engine;
            if (oc.engine == "mock") {
                noise::ErrorModel model;
                if (!oc.mock_model.empty()) model = noise::ErrorModel::load(oc.mock_model);
                engine = pipe::OcrEngineSpec::mock(std::move(model), oc.mock_lambda, oc.seed);
            } else if (oc.engine.rfind("exec:", 0) == 0) {
                engine = pipe::OcrEngineSpec::external(oc.engine.substr(5));
            } else {
                throw std::runtime_error("ocr: unknown engine " + oc.engine);
            }
            fs::create_directories(oc.out);
            auto results = pipe::run_ocr(pages, engine, oc.workers);
            int failures = 0;
            for (size_t i = 0; i < pages.size(); ++i) {
                if (results[i].ok)
                    write_file((fs::path(oc.out) / (pages[i].id + ".txt")).string(),
                               results[i].text);
                else
                    ++failures;
            }
            std::cout << "pages: " << pages.size() << "  failed: " << failures << "\n";
        } else if (*align_cmd) {
            std::string gt = read_file(al.gt);
            std::vector<std::pair<std::string, std::string>> hyps; // (page id, text)
            if (fs::is_directory(al.hyp)) {
                std::vector<std::string> names;
                for (const auto& e : fs::directory_iterator(al.hyp))
                    if (e.is_regular_file() && e.path().extension() == ".txt")
                        names.push_back(e.path().filename().string());
                std::sort(names.begin(), names.end());
                for (const std::string& n : names)
                    hyps.emplace_back(fs::path(n).stem().string(),
                                      read_file((fs::path(al.hyp) / n).string()));
            } else {
                hyps.emplace_back(fs::path(al.hyp).stem().string(), read_file(al.hyp));
            }
            align::AlignDocumentOptions opt;
            opt.anchor_n = al.anchor_n;
            std::ofstream rep(al.report, std::ios::binary);
            if (!rep) throw std::runtime_error("cannot write " + al.report);
            for (const auto& [id, hyp] : hyps) {
                align::DocumentAlignment doc = align::align_document(gt, hyp, opt);
                json row{{"page_id", id}, {"matched", doc.matched_any}};
                if (doc.matched_any) {
                    row["cer"] = doc.cer;
                    row["wer"] = doc.wer;
                    row["gt_length"] = doc.gt_chars;
                    row["outlier"] = doc.cer > al.threshold;
                }
                json spans = json::array();
                for (const align::HypSpan& s : doc.unmatched_hyp)
                    spans.push_back({{"begin", s.begin}, {"end", s.end}});
                row["unmatched_hyp"] = spans;
                rep << row.dump() << "\n";
            }
        } else if (*extract_cmd) {
            std::ifstream f(ex.pairs);
            if (!f) throw std::runtime_error("cannot open " + ex.pairs);
            std::vector<align::EditScript> scripts;
            std::string line;
            while (std::getline(f, line)) {
                if (line.empty()) continue;
                json rec = json::parse(line);
                scripts.push_back(
                    align::align_exact(align::normalize_text(rec.at("gt").get<std::string>()),
                                       align::normalize_text(rec.at("hyp").get<std::string>())));
            }
            noise::ErrorModel model = noise::extract_error_model(scripts);
            model.save(ex.out);
            std::cout << "sources: " << model.table.size() << "\n";
        } else if (*calibrate_cmd) {
            noise::ErrorModel model = noise::ErrorModel::load(ca.model);
            noise::RateScale scale =
                noise::calibrate_rate(model, ca.target, read_file(ca.sample), ca.seed);
            json j{{"lambda", scale.lambda},
                   {"target_cer", scale.target_cer},
                   {"achieved_cer", scale.achieved_cer},
                   {"saturated", scale.saturated}};
            std::cout << j.dump(2) << "\n";
            if (!ca.out.empty()) write_file(ca.out, j.dump(2) + "\n");
        } else if (*inject_cmd) {
            noise::ErrorModel model = noise::ErrorModel::load(in_.model);
            noise::RateScale scale;
            if (in_.lambda >= 0.0)
                scale.lambda = in_.lambda;
            else if (!in_.scale.empty())
                scale = load_scale(in_.scale);
            else
                throw std::runtime_error("inject: need --lambda or --scale");
            write_file(in_.out, noise::inject_errors(read_file(in_.in), model, scale, in_.seed));
        } else if (*pairs_cmd) {
            noise::ErrorModel model = noise::ErrorModel::load(mp.model);
            noise::TrainingPairsOptions opt;
            opt.rate_grid = mp.rates;
            opt.max_len = mp.max_len;
            opt.seed = mp.seed;
            opt.out_path = mp.out;
            noise::TrainingPairsSummary s =
                noise::make_training_pairs(read_file(mp.corpus), model, opt);
            std::cout << "pairs: " << s.pairs << "\nmanifest: " << s.out_path << "\n";
        } else if (*lmtrain_cmd) {
            lm::CharLM model = lm::CharLM::train(read_file(lt.corpus), lt.order, lt.k);
            model.save(lt.out);
            std::cout << "vocab: " << model.vocab_size() << "\n";
        } else if (*correct_cmd) {
            lm::CharLM model = lm::CharLM::load(co.lm);
            noise::ErrorModel channel = noise::ErrorModel::load(co.channel);
            lm::BeamConfig cfg;
            cfg.beam_width = co.beam;
            cfg.channel_weight = co.channel_weight;
            cfg.lm_weight = co.lm_weight;
            write_file(co.out, lm::correct_text(read_file(co.in), model, channel, cfg));
        } else if (*pipeline_cmd) {
            pipe::PipelineConfig cfg = pipe::load_config(pl.config);
            cfg.out_dir = pl.out;
            cfg.workers = pl.workers;
            std::vector<pipe::PageInput> pages;
            if (!pl.synth_manifest.empty()) {
                pages = pipe::pages_from_synth_manifest(pl.synth_manifest);
            } else if (!pl.images.empty()) {
                std::optional<std::string> gt;
                if (!pl.gt.empty()) gt = read_file(pl.gt);
                for (const std::string& name : sorted_pngs(pl.images)) {
                    pipe::PageInput p;
                    p.id = fs::path(name).stem().string();
                    p.image_path = (fs::path(pl.images) / name).string();
                    p.gt_text = gt;
                    pages.push_back(std::move(p));
                }
            } else {
                throw std::runtime_error("pipeline: need --synth-manifest or --images");
            }
            pipe::PipelineResult res = pipe::run_pipeline(pages, cfg);
            std::cout << read_file(res.report_text_path);
            std::cout << "manifest: " << res.manifest_path << "\n";
        } else if (*report_cmd) {
            json manifest = json::parse(read_file(rp.manifest));
            json rep = pipe::build_report(manifest);
            std::string text = pipe::render_report_text(rep);
            if (!rp.out_json.empty()) write_file(rp.out_json, rep.dump(2) + "\n");
            if (!rp.out_text.empty()) write_file(rp.out_text, text);
            std::cout << text;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
