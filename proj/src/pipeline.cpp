#include "prep/pipeline.hpp"

#include "prep/parallel.hpp"
#include "prep/png_io.hpp"
#include "prep/rng.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace prep::pipe {

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::string& path, std::string_view text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
    size_t pos;
    while ((pos = tmpl.find(key)) != std::string::npos) tmpl.replace(pos, key.size(), value);
    return tmpl;
}

OcrPageResult ocr_one(const OcrEngineSpec& engine, const PageInput& page, size_t index,
                      const std::string& image_path, const std::string& out_txt) {
    OcrPageResult res;
    if (engine.kind == OcrEngineSpec::Kind::Mock) {
        if (!page.gt_text) {
            res.error = "mock engine requires ground-truth text";
            return res;
        }
        noise::RateScale scale;
        scale.lambda = engine.mock_lambda;
        res.text = noise::inject_errors(*page.gt_text, engine.mock_model, scale,
                                        derive_seed(engine.mock_seed, index));
        res.ok = true;
        return res;
    }

    std::string cmd = engine.command_template;
    cmd = substitute(cmd, "{image}", image_path);
    cmd = substitute(cmd, "{output}", out_txt);
    int status = std::system(cmd.c_str());
    if (status != 0) {
        res.error = "engine exited with status " + std::to_string(status);
        return res;
    }
    std::ifstream f(out_txt, std::ios::binary);
    if (!f) {
        res.error = "engine produced no readable output file";
        return res;
    }
    res.text.assign((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    res.ok = true;
    return res;
}

json eval_to_json(const align::PageEval& ev) {
    json j;
    j["matched"] = ev.matched;
    if (ev.matched) {
        j["cer"] = ev.cer;
        j["wer"] = ev.wer;
        j["gt_length"] = ev.gt_length;
        j["outlier"] = ev.outlier;
    }
    return j;
}

} // namespace

std::vector<PageInput> pages_from_synth_manifest(const std::string& manifest_path) {
    std::ifstream f(manifest_path);
    if (!f) throw std::runtime_error("cannot open manifest " + manifest_path);
    fs::path base = fs::path(manifest_path).parent_path();
    std::vector<PageInput> pages;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json rec = json::parse(line);
        PageInput p;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%06d", rec.at("index").get<int>());
        p.id = buf;
        p.image_path = (base / rec.at("degraded").get<std::string>()).string();
        p.clean_image_path = (base / rec.at("clean").get<std::string>()).string();
        p.gt_text = rec.at("text").get<std::string>();
        pages.push_back(std::move(p));
    }
    return pages;
}

std::vector<OcrPageResult> run_ocr(const std::vector<PageInput>& pages,
                                   const OcrEngineSpec& engine, int workers) {
    std::vector<OcrPageResult> out(pages.size());
    fs::path tmp;
    if (engine.kind == OcrEngineSpec::Kind::ExternalCommand) {
        tmp = fs::temp_directory_path() / ("prep-ocr-" + std::to_string(::getpid()));
        fs::create_directories(tmp);
    }
    parallel_for(pages.size(), workers, [&](size_t i) {
        std::string out_txt =
            tmp.empty() ? std::string() : (tmp / (pages[i].id + ".txt")).string();
        out[i] = ocr_one(engine, pages[i], i, pages[i].image_path, out_txt);
    });
    if (!tmp.empty()) fs::remove_all(tmp);
    return out;
}

json config_to_json(const PipelineConfig& cfg) {
    json j;
    j["version"] = 1;
    json engine;
    if (cfg.engine.kind == OcrEngineSpec::Kind::Mock) {
        engine["kind"] = "mock";
        engine["lambda"] = cfg.engine.mock_lambda;
        engine["seed"] = cfg.engine.mock_seed;
        engine["model"] = json::parse(cfg.engine.mock_model.to_json());
    } else {
        engine["kind"] = "external";
        engine["command"] = cfg.engine.command_template;
    }
    j["engine"] = engine;

    json restorer;
    switch (cfg.restorer.kind) {
    case patch::RestorerHandle::Kind::Identity: restorer["kind"] = "identity"; break;
    case patch::RestorerHandle::Kind::OtsuBinarize: restorer["kind"] = "otsu"; break;
    case patch::RestorerHandle::Kind::MedianDenoise3x3: restorer["kind"] = "median3"; break;
    case patch::RestorerHandle::Kind::ExternalCommand:
        restorer["kind"] = "external";
        restorer["command"] = cfg.restorer.command_template;
        restorer["deterministic"] = cfg.restorer.deterministic;
        break;
    }
    j["restorer"] = restorer;

    j["mode"] = cfg.restore_mode.multi ? "multi" : "single";
    j["direction"] = patch::to_string(cfg.restore_mode.direction);
    j["fusion"] = cfg.restore_mode.fusion == patch::FuseMethod::Median ? "median" : "mean";
    j["trim"] = cfg.trim;
    j["resize_width"] = cfg.resize_width;
    j["correct"] = cfg.correct;
    if (cfg.correct) {
        j["lm"] = cfg.lm_path;
        j["channel"] = cfg.channel_path;
        j["beam"] = {{"width", cfg.beam.beam_width},
                     {"channel_weight", cfg.beam.channel_weight},
                     {"lm_weight", cfg.beam.lm_weight},
                     {"max_edits_per_window", cfg.beam.max_edits_per_window},
                     {"window", cfg.beam.window}};
    }
    j["outlier_threshold"] = cfg.outlier_threshold;
    j["anchor_n"] = cfg.align_options.anchor_n;
    j["seed"] = cfg.seed;
    return j;
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig cfg;
    if (j.value("version", 1) != 1)
        throw std::runtime_error("pipeline config: unsupported version");
    const json& engine = j.at("engine");
    std::string ekind = engine.at("kind").get<std::string>();
    if (ekind == "mock") {
        noise::ErrorModel model;
        if (engine.contains("model")) model = noise::ErrorModel::from_json(engine["model"].dump());
        cfg.engine = OcrEngineSpec::mock(std::move(model), engine.value("lambda", 0.0),
                                         engine.value("seed", uint64_t(0)));
    } else if (ekind == "external") {
        cfg.engine = OcrEngineSpec::external(engine.at("command").get<std::string>());
    } else {
        throw std::runtime_error("pipeline config: unknown engine kind " + ekind);
    }

    if (j.contains("restorer")) {
        const json& r = j["restorer"];
        std::string rkind = r.at("kind").get<std::string>();
        if (rkind == "external") {
            cfg.restorer = patch::RestorerHandle::external(r.at("command").get<std::string>(),
                                                           r.value("deterministic", true));
        } else if (rkind == "median3") {
            cfg.restorer = patch::RestorerHandle::median_denoise();
        } else {
            cfg.restorer = patch::RestorerHandle::parse(rkind);
        }
    }
    cfg.restore_mode.multi = j.value("mode", std::string("multi")) == "multi";
    cfg.restore_mode.direction =
        patch::direction_from_string(j.value("direction", std::string("tl-br")));
    cfg.restore_mode.fusion = j.value("fusion", std::string("median")) == "mean"
                                  ? patch::FuseMethod::Mean
                                  : patch::FuseMethod::Median;
    cfg.trim = j.value("trim", 64);
    cfg.resize_width = j.value("resize_width", 0);
    cfg.correct = j.value("correct", false);
    if (cfg.correct) {
        cfg.lm_path = j.at("lm").get<std::string>();
        cfg.channel_path = j.at("channel").get<std::string>();
        if (j.contains("beam")) {
            const json& b = j["beam"];
            cfg.beam.beam_width = b.value("width", 16);
            cfg.beam.channel_weight = b.value("channel_weight", 1.0);
            cfg.beam.lm_weight = b.value("lm_weight", 1.0);
            cfg.beam.max_edits_per_window = b.value("max_edits_per_window", 4);
            cfg.beam.window = b.value("window", 16);
        }
    }
    cfg.outlier_threshold = j.value("outlier_threshold", 0.25);
    cfg.align_options.anchor_n = j.value("anchor_n", 4);
    cfg.seed = j.value("seed", uint64_t(0));
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    return config_from_json(json::parse(read_text_file(path)));
}

PipelineResult run_pipeline(const std::vector<PageInput>& pages, const PipelineConfig& cfg) {
    if (cfg.out_dir.empty()) throw std::invalid_argument("run_pipeline: out_dir required");
    fs::create_directories(fs::path(cfg.out_dir) / "restored");
    fs::create_directories(fs::path(cfg.out_dir) / "ocr_raw");
    fs::create_directories(fs::path(cfg.out_dir) / "ocr_pre");
    if (cfg.correct) fs::create_directories(fs::path(cfg.out_dir) / "corrected");

    // Shared read-only models for the correction stage.
    std::optional<lm::CharLM> char_lm;
    std::optional<lm::Channel> channel;
    if (cfg.correct) {
        char_lm = lm::CharLM::load(cfg.lm_path);
        channel = lm::Channel::build(noise::ErrorModel::load(cfg.channel_path));
    }

    std::vector<json> rows(pages.size());

    parallel_for(pages.size(), cfg.workers, [&](size_t i) {
        const PageInput& page = pages[i];
        json stages = json::object();
        auto out_path = [&](const char* dir) {
            return (fs::path(cfg.out_dir) / dir / (page.id + ".txt")).string();
        };

        // Raw: OCR on the original image.
        OcrPageResult raw_ocr = ocr_one(cfg.engine, page, i, page.image_path, out_path("ocr_raw"));
        if (cfg.engine.kind == OcrEngineSpec::Kind::Mock && raw_ocr.ok)
            write_text_file(out_path("ocr_raw"), raw_ocr.text);
        json raw{{"ok", raw_ocr.ok}, {"text", "ocr_raw/" + page.id + ".txt"}};
        if (!raw_ocr.ok) raw["error"] = raw_ocr.error;

        // Pre: restore, then OCR the restored image.
        OcrPageResult pre_ocr;
        json pre{{"text", "ocr_pre/" + page.id + ".txt"}};
        try {
            GrayImage img = read_png_gray(page.image_path);
            if (cfg.resize_width > 0) img = resize_to_width(img, cfg.resize_width);
            patch::RestoreReport rr;
            GrayImage restored = patch::restore_image(
                img, cfg.restorer, cfg.restore_mode, cfg.trim, 1,
                cfg.restorer.deterministic ? nullptr : &rr);
            std::string restored_path =
                (fs::path(cfg.out_dir) / "restored" / (page.id + ".png")).string();
            write_png_gray(restored_path, restored);
            pre["restored"] = "restored/" + page.id + ".png";
            if (!cfg.restorer.deterministic && !rr.pass_checksums.empty())
                pre["pass_checksums"] = rr.pass_checksums;

            pre_ocr = ocr_one(cfg.engine, page, i, restored_path, out_path("ocr_pre"));
            if (cfg.engine.kind == OcrEngineSpec::Kind::Mock && pre_ocr.ok)
                write_text_file(out_path("ocr_pre"), pre_ocr.text);
        } catch (const std::exception& e) {
            pre_ocr.ok = false;
            pre_ocr.error = e.what();
        }
        pre["ok"] = pre_ocr.ok;
        if (!pre_ocr.ok) pre["error"] = pre_ocr.error;

        // PreP: reference corrector over the pre stage's text.
        OcrPageResult prep_res;
        json prep = json::object();
        if (cfg.correct) {
            if (pre_ocr.ok) {
                try {
                    prep_res.text = lm::correct_text(pre_ocr.text, *char_lm, *channel, cfg.beam);
                    prep_res.ok = true;
                    write_text_file(out_path("corrected"), prep_res.text);
                } catch (const std::exception& e) {
                    prep_res.error = e.what();
                }
            } else {
                prep_res.error = "pre stage failed";
            }
            prep["ok"] = prep_res.ok;
            prep["text"] = "corrected/" + page.id + ".txt";
            if (!prep_res.ok) prep["error"] = prep_res.error;
        }

        // Per-stage evaluation against the ground truth, when present.
        if (page.gt_text) {
            auto eval = [&](const OcrPageResult& r) {
                return eval_to_json(align::evaluate_page(page.id, *page.gt_text, r.text,
                                                         cfg.align_options,
                                                         cfg.outlier_threshold));
            };
            if (raw_ocr.ok) raw["eval"] = eval(raw_ocr);
            if (pre_ocr.ok) pre["eval"] = eval(pre_ocr);
            if (cfg.correct && prep_res.ok) prep["eval"] = eval(prep_res);
        }

        stages["raw"] = raw;
        stages["pre"] = pre;
        if (cfg.correct) stages["prep"] = prep;

        json row{{"id", page.id}, {"image", page.image_path}, {"has_gt", bool(page.gt_text)},
                 {"stages", stages}};
        if (page.clean_image_path) row["clean"] = *page.clean_image_path;
        rows[i] = std::move(row);
    });

    json manifest;
    manifest["version"] = 1;
    manifest["config"] = config_to_json(cfg);
    manifest["pages"] = rows;

    // AMP over synthetic pages with a clean reference. Accumulated
    // sequentially in page order so the report bytes never depend on the
    // worker count; resized runs are skipped (dimensions no longer match).
    if (cfg.resize_width == 0) {
        std::optional<amp::PsnrAccumulator> acc_identity, acc_restored;
        int amp_pages = 0, amp_skipped = 0;
        for (size_t i = 0; i < pages.size(); ++i) {
            if (!pages[i].clean_image_path) continue;
            if (!rows[i]["stages"]["pre"].contains("restored")) {
                ++amp_skipped;
                continue;
            }
            try {
                GrayImage clean = read_png_gray(*pages[i].clean_image_path);
                GrayImage degraded = read_png_gray(pages[i].image_path);
                GrayImage restored = read_png_gray(
                    (fs::path(cfg.out_dir) / "restored" / (pages[i].id + ".png")).string());
                if (!acc_identity) {
                    acc_identity.emplace(clean.width(), clean.height());
                    acc_restored.emplace(clean.width(), clean.height());
                }
                if (clean.width() != acc_identity->width() ||
                    clean.height() != acc_identity->height() || !clean.same_size(degraded) ||
                    !clean.same_size(restored)) {
                    ++amp_skipped;
                    continue;
                }
                acc_identity->accumulate(clean, degraded);
                acc_restored->accumulate(clean, restored);
                ++amp_pages;
            } catch (const std::exception&) {
                ++amp_skipped;
            }
        }
        if (amp_pages > 0) {
            json amp_block;
            amp_block["pages"] = amp_pages;
            amp_block["skipped"] = amp_skipped;
            for (amp::Region region :
                 {amp::Region::Full, amp::Region::Central192, amp::Region::Central128}) {
                std::string name = amp::to_string(region);
                try {
                    amp_block["identity"][name] = acc_identity->finalize(region).amp;
                    amp_block["restored"][name] = acc_restored->finalize(region).amp;
                } catch (const std::exception&) {
                    // Region had no masked pixels; leave it out.
                }
            }
            manifest["amp"] = amp_block;
        }
    }

    PipelineResult result;
    result.manifest_path = (fs::path(cfg.out_dir) / "manifest.json").string();
    write_text_file(result.manifest_path, manifest.dump(2) + "\n");

    json report = build_report(manifest);
    result.report_json_path = (fs::path(cfg.out_dir) / "report.json").string();
    write_text_file(result.report_json_path, report.dump(2) + "\n");
    result.report_text_path = (fs::path(cfg.out_dir) / "report.txt").string();
    write_text_file(result.report_text_path, render_report_text(report));
    return result;
}

json build_report(const json& manifest) {
    const json& config = manifest.at("config");
    double threshold = config.value("outlier_threshold", 0.25);

    json report;
    report["version"] = 1;
    report["outlier_threshold"] = threshold;
    report["pages"] = manifest.at("pages").size();
    bool mock = config.at("engine").at("kind").get<std::string>() == "mock";
    if (mock)
        report["note"] = "mock OCR engine ignores pixels; stage deltas reflect the text "
                         "channel only, not image quality (see AMP for image-level effects)";
    if (config.value("correct", false))
        report["corrector"] = "reference corrector (char n-gram LM + noisy channel); not a "
                              "trained sequence model";

    const char* stage_names[] = {"raw", "pre", "prep"};
    json stages = json::object();
    for (const char* stage : stage_names) {
        std::vector<align::PageEval> evals;
        size_t failed = 0, present = 0;
        for (const json& page : manifest.at("pages")) {
            const json& s = page.at("stages");
            if (!s.contains(stage)) continue;
            ++present;
            const json& row = s.at(stage);
            if (!row.value("ok", false)) {
                ++failed;
                continue;
            }
            if (!row.contains("eval")) continue;
            const json& e = row.at("eval");
            align::PageEval ev;
            ev.page_id = page.at("id").get<std::string>();
            ev.matched = e.value("matched", false);
            if (ev.matched) {
                ev.cer = e.at("cer").get<double>();
                ev.wer = e.at("wer").get<double>();
                ev.outlier = e.value("outlier", false);
            }
            evals.push_back(std::move(ev));
        }
        if (present == 0) continue;

        align::FilterResult filtered = align::filter_outliers(evals, threshold);
        json s;
        s["pages"] = present;
        s["failed"] = failed;
        s["evaluated"] = filtered.stats.pages_all;
        s["outliers"] = filtered.stats.pages_all - filtered.stats.pages_kept;
        if (filtered.stats.pages_all) {
            s["cer_mean"] = filtered.stats.mean_cer_all;
            s["wer_mean"] = filtered.stats.mean_wer_all;
        }
        if (filtered.stats.pages_kept) {
            s["cer_mean_kept"] = filtered.stats.mean_cer_kept;
            s["wer_mean_kept"] = filtered.stats.mean_wer_kept;
        }
        stages[stage] = s;
    }
    report["stages"] = stages;
    if (manifest.contains("amp")) report["amp"] = manifest["amp"];
    return report;
}

std::string render_report_text(const json& report) {
    std::ostringstream out;
    out << "PreP pipeline report\n";
    out << "pages: " << report.at("pages").get<size_t>() << "   outlier threshold: CER > "
        << report.at("outlier_threshold").get<double>() << "\n";
    if (report.contains("note")) out << "note: " << report["note"].get<std::string>() << "\n";
    if (report.contains("corrector"))
        out << "corrector: " << report["corrector"].get<std::string>() << "\n";
    out << "\n";

    char line[160];
    std::snprintf(line, sizeof(line), "%-6s %-18s %-18s %9s %9s\n", "stage", "CER% (kept)",
                  "WER% (kept)", "outliers", "failed");
    out << line;
    for (const char* stage : {"raw", "pre", "prep"}) {
        if (!report.at("stages").contains(stage)) continue;
        const json& s = report["stages"][stage];
        auto cell = [&](const char* mean, const char* kept) {
            char buf[64];
            if (!s.contains(mean)) return std::string("-");
            if (s.contains(kept))
                std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", s[mean].get<double>() * 100.0,
                              s[kept].get<double>() * 100.0);
            else
                std::snprintf(buf, sizeof(buf), "%.2f (-)", s[mean].get<double>() * 100.0);
            return std::string(buf);
        };
        std::snprintf(line, sizeof(line), "%-6s %-18s %-18s %9llu %9llu\n", stage,
                      cell("cer_mean", "cer_mean_kept").c_str(),
                      cell("wer_mean", "wer_mean_kept").c_str(),
                      (unsigned long long)s.value("outliers", size_t(0)),
                      (unsigned long long)s.value("failed", size_t(0)));
        out << line;
    }

    if (report.contains("amp")) {
        const json& amp = report["amp"];
        out << "\nAMP (dB) over " << amp.at("pages").get<int>() << " synthetic pages";
        if (amp.value("skipped", 0) > 0) out << " (" << amp["skipped"].get<int>() << " skipped)";
        out << "\n";
        std::snprintf(line, sizeof(line), "%-10s %12s %12s %12s\n", "input", "full",
                      "central-192", "central-128");
        out << line;
        for (const char* which : {"identity", "restored"}) {
            if (!amp.contains(which)) continue;
            auto val = [&](const char* region) {
                if (!amp[which].contains(region)) return std::string("-");
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.3f", amp[which][region].get<double>());
                return std::string(buf);
            };
            std::snprintf(line, sizeof(line), "%-10s %12s %12s %12s\n", which,
                          val("full").c_str(), val("central-192").c_str(),
                          val("central-128").c_str());
            out << line;
        }
    }
    return out.str();
}

} // namespace prep::pipe
