#pragma once
// End-to-end orchestration: OCR engine adapters, the Raw / Pre / PreP
// stage runner, run manifests, and the comparison report.

#include "prep/ampmetric.hpp"
#include "prep/correct.hpp"
#include "prep/ocrnoise.hpp"
#include "prep/patchfuse.hpp"
#include "prep/textalign.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace prep::pipe {

struct OcrEngineSpec {
    enum class Kind { ExternalCommand, Mock };
    Kind kind = Kind::Mock;

    // External: command template with {image} and {output} placeholders;
    // must exit 0 and leave a readable text file at {output}.
    std::string command_template;

    // Mock: ignores pixels, reads the page's GT and injects channel errors.
    // Exists to exercise stage plumbing hermetically; never a basis for
    // image-quality claims.
    noise::ErrorModel mock_model;
    double mock_lambda = 0.0;
    uint64_t mock_seed = 0;

    static OcrEngineSpec external(std::string tmpl) {
        OcrEngineSpec s;
        s.kind = Kind::ExternalCommand;
        s.command_template = std::move(tmpl);
        return s;
    }
    static OcrEngineSpec mock(noise::ErrorModel model, double lambda, uint64_t seed) {
        OcrEngineSpec s;
        s.kind = Kind::Mock;
        s.mock_model = std::move(model);
        s.mock_lambda = lambda;
        s.mock_seed = seed;
        return s;
    }
};

struct PageInput {
    std::string id;
    std::string image_path;                     // raw/degraded page image
    std::optional<std::string> gt_text;         // ground truth, if known
    std::optional<std::string> clean_image_path; // synthetic runs: clean reference
};

// Pages from a synthdoc manifest.jsonl (paths resolved against its directory).
std::vector<PageInput> pages_from_synth_manifest(const std::string& manifest_path);

struct OcrPageResult {
    bool ok = false;
    std::string text;
    std::string error;
};

// One text per page; failures are flagged per page, never fatal. The mock
// engine requires gt_text and is seeded per page index.
std::vector<OcrPageResult> run_ocr(const std::vector<PageInput>& pages,
                                   const OcrEngineSpec& engine, int workers = 1);

struct PipelineConfig {
    OcrEngineSpec engine;
    patch::RestorerHandle restorer;
    patch::RestoreMode restore_mode;
    int trim = 64;
    int resize_width = 0; // 0 = off; applied before restoration
    bool correct = false;
    std::string lm_path;      // required when correct
    std::string channel_path; // required when correct
    lm::BeamConfig beam;
    double outlier_threshold = 0.25;
    align::AlignDocumentOptions align_options;
    uint64_t seed = 0;
    std::string out_dir;
    int workers = 1; // execution detail; never serialized into the manifest
};

// Schema documented in docs/formats.md.
nlohmann::json config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::string& path);

struct PipelineResult {
    std::string manifest_path;
    std::string report_json_path;
    std::string report_text_path;
};

// Runs raw (OCR on originals), pre (restore then OCR), and prep (pre +
// correction) for every page, writes all stage artifacts plus
// manifest.json, then derives report.json / report.txt from the manifest.
PipelineResult run_pipeline(const std::vector<PageInput>& pages, const PipelineConfig& cfg);

// Reports are pure functions of manifests; re-running reproduces identical
// bytes.
nlohmann::json build_report(const nlohmann::json& manifest);
std::string render_report_text(const nlohmann::json& report);

} // namespace prep::pipe
