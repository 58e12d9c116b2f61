#pragma once
// Paired clean/degraded page synthesis: text rendering with typographic
// jitter, the four-level degradation operator suite, page stitching, and
// the dataset generator.

#include "prep/font.hpp"
#include "prep/image.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace prep::synth {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct IntRange {
    int lo = 0;
    int hi = 0;
};

struct RenderSpec {
    std::string text;
    std::string font_path;
    double font_size = 22.0; // pixels per em
    int page_width = 768;
    int page_height = 1024;
    int margin = 48;
    Range line_spacing_jitter{0.0, 0.12}; // extra fraction of nominal line height
    Range char_spacing_jitter{0.0, 0.06}; // extra fraction of the glyph advance
    Range indent_range{0.0, 32.0};        // px, first line of each paragraph
    Range char_offset_range{0.0, 0.6};    // px, per-char |dx| and |dy|
    Range char_rotation_range{0.0, 1.2};  // degrees, per-char magnitude
    Range page_tilt_range{-0.8, 0.8};     // degrees, whole page
    Range bend_amplitude_range{0.0, 2.5}; // px, sinusoidal baseline curvature
};

struct LineInfo {
    int index = 0;
    std::string text;
    double baseline_x0 = 0, baseline_y0 = 0; // post-transform baseline start
    double baseline_x1 = 0, baseline_y1 = 0; // post-transform baseline end
};

struct RenderResult {
    GrayImage image;
    std::string rendered_text; // the part of spec.text that fit on the page
    std::vector<LineInfo> lines;
    double tilt_degrees = 0.0;
    double bend_amplitude = 0.0;
};

// Renders spec.text onto a white page with all jitters drawn from the
// seeded generator. Throws if the font cannot be loaded or no glyph of the
// text is renderable.
RenderResult render_base(const RenderSpec& spec, uint64_t seed);
RenderResult render_base(const RenderSpec& spec, const TrueTypeFont& font, uint64_t seed);

// Parameter ranges for one noise level. Defaults mirror the four published
// presets; per-page counts are expressed as fractions of H*W.
struct DegradationConfig {
    int level = 0; // 1..4 for presets, 0 for custom
    Range noise_factor{0, 0};
    Range scale_factor{1, 1};
    Range gaussian_blur{0, 0};
    Range background_intensity{0, 0};
    Range stain_transparency{0, 0};
    IntRange max_stains{0, 0};
    Range contrast_factor{1, 1};
    Range black_spots_per_page{0, 0};   // fraction of H*W
    IntRange white_patch_size{0, 0};    // px per axis
    Range white_patches_per_page{0, 0}; // fraction of H*W
    IntRange line_artifacts{0, 0};
    IntRange dilation_iterations{0, 0};
    IntRange erosion_iterations{0, 0};
    double binarize_probability = 0.10;

    static DegradationConfig preset(int level); // level in 1..4
    static DegradationConfig identity();        // every operator a no-op
};

struct DegradeMeta {
    std::vector<std::string> op_order; // operator ids in application order
    bool binarized = false;
    double noise_amplitude = 0.0;
    double scale = 1.0;
    double blur_sigma = 0.0;
    double background = 0.0;
    double stain_alpha = 0.0;
    double contrast = 1.0;
    int stains = 0;
    int black_spots = 0;
    int white_patches = 0;
    int line_artifacts = 0;
    int dilation = 0;
    int erosion = 0;
};

// Applies the operator suite in a seeded-random order. Output dimensions
// always equal the input's.
GrayImage degrade(const GrayImage& img, const DegradationConfig& cfg, uint64_t seed,
                  DegradeMeta* meta = nullptr);

// Scales all pages to the minimum input width (aspect preserved) and
// concatenates them vertically. Requires at least two pages.
GrayImage stitch_pages(const std::vector<GrayImage>& pages);

struct DatasetOptions {
    std::string corpus_path;
    int count = 0;
    std::array<double, 4> level_weights{0.25, 0.25, 0.25, 0.25};
    std::vector<std::string> font_paths;
    uint64_t master_seed = 0;
    std::string out_dir;
    double stitch_fraction = 0.10;
    int chars_per_page = 1400;
    int workers = 1;
    RenderSpec render; // geometry + jitter template; text/font filled per pair
    std::optional<std::array<DegradationConfig, 4>> level_overrides;
};

struct DatasetSummary {
    int pairs = 0;
    int stitched = 0;
    std::string manifest_path;
};

// Emits count page pairs under out_dir (clean/NNNNNN.png, degraded/NNNNNN.png)
// plus a JSONL manifest. Per-pair seeds derive from the master seed, so any
// worker count produces identical bytes.
DatasetSummary generate_dataset(const DatasetOptions& opt);

// Level overrides from a JSON file mirroring the parameter table
// (see docs/formats.md). Unspecified levels/fields keep their presets.
std::array<DegradationConfig, 4> load_level_configs(const std::string& path);

} // namespace prep::synth
