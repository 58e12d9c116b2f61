#include "prep/synthdoc.hpp"

#include "prep/parallel.hpp"
#include "prep/png_io.hpp"
#include "prep/rng.hpp"
#include "prep/unicode.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace prep::synth {

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open corpus " + path);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// Word-boundary chunks of roughly target_chars scalars each.
std::vector<std::string> chunk_corpus(const std::u32string& corpus, int target_chars,
                                      size_t chunks_needed) {
    std::vector<std::string> chunks;
    size_t pos = 0;
    while (chunks.size() < chunks_needed && pos < corpus.size()) {
        size_t end = std::min(pos + size_t(target_chars), corpus.size());
        if (end < corpus.size()) {
            size_t brk = end;
            while (brk > pos && corpus[brk] != U' ' && corpus[brk] != U'\n') --brk;
            if (brk > pos) end = brk;
        }
        chunks.push_back(utf8_encode(std::u32string_view(corpus).substr(pos, end - pos)));
        pos = end;
        while (pos < corpus.size() && (corpus[pos] == U' ' || corpus[pos] == U'\n')) ++pos;
    }
    if (chunks.size() < chunks_needed)
        throw std::runtime_error("corpus exhausted: needs " + std::to_string(chunks_needed) +
                                 " pages of " + std::to_string(target_chars) + " chars");
    return chunks;
}

int draw_level(Rng& rng, const std::array<double, 4>& weights) {
    double total = 0;
    for (double w : weights) total += w;
    if (total <= 0) throw std::invalid_argument("generate_dataset: level weights sum to zero");
    double x = rng.next_double() * total;
    for (int i = 0; i < 4; ++i) {
        x -= weights[size_t(i)];
        if (x < 0) return i + 1;
    }
    return 4;
}

std::string pair_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d.png", index);
    return buf;
}

} // namespace

std::array<DegradationConfig, 4> load_level_configs(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open noise config " + path);
    json j = json::parse(f);

    std::array<DegradationConfig, 4> configs = {
        DegradationConfig::preset(1), DegradationConfig::preset(2),
        DegradationConfig::preset(3), DegradationConfig::preset(4)};

    auto range = [](const json& v) { return Range{v.at(0).get<double>(), v.at(1).get<double>()}; };
    auto irange = [](const json& v) { return IntRange{v.at(0).get<int>(), v.at(1).get<int>()}; };

    const json& levels = j.contains("levels") ? j["levels"] : j;
    for (auto& [key, body] : levels.items()) {
        int level = std::stoi(key);
        if (level < 1 || level > 4)
            throw std::runtime_error("noise config: level out of range: " + key);
        DegradationConfig& c = configs[size_t(level - 1)];
        if (body.contains("noise_factor")) c.noise_factor = range(body["noise_factor"]);
        if (body.contains("scale_factor")) c.scale_factor = range(body["scale_factor"]);
        if (body.contains("gaussian_blur")) c.gaussian_blur = range(body["gaussian_blur"]);
        if (body.contains("background_intensity"))
            c.background_intensity = range(body["background_intensity"]);
        if (body.contains("stain_transparency"))
            c.stain_transparency = range(body["stain_transparency"]);
        if (body.contains("max_stains")) c.max_stains = irange(body["max_stains"]);
        if (body.contains("contrast_factor")) c.contrast_factor = range(body["contrast_factor"]);
        if (body.contains("black_spots_per_page"))
            c.black_spots_per_page = range(body["black_spots_per_page"]);
        if (body.contains("white_patch_size"))
            c.white_patch_size = irange(body["white_patch_size"]);
        if (body.contains("white_patches_per_page"))
            c.white_patches_per_page = range(body["white_patches_per_page"]);
        if (body.contains("line_artifacts")) c.line_artifacts = irange(body["line_artifacts"]);
        if (body.contains("dilation_iterations"))
            c.dilation_iterations = irange(body["dilation_iterations"]);
        if (body.contains("erosion_iterations"))
            c.erosion_iterations = irange(body["erosion_iterations"]);
        if (body.contains("binarize_probability"))
            c.binarize_probability = body["binarize_probability"].get<double>();
    }
    return configs;
}

DatasetSummary generate_dataset(const DatasetOptions& opt) {
    if (opt.count < 1) throw std::invalid_argument("generate_dataset: count must be >= 1");
    if (opt.font_paths.empty()) throw std::invalid_argument("generate_dataset: no fonts given");

    std::u32string corpus = utf8_decode(read_text_file(opt.corpus_path));
    if (corpus.empty()) throw std::runtime_error("generate_dataset: empty corpus");

    // Load each distinct font once; read-only afterwards.
    std::map<std::string, TrueTypeFont> fonts;
    for (const auto& p : opt.font_paths)
        if (!fonts.count(p)) fonts.emplace(p, TrueTypeFont::load(p));

    fs::create_directories(fs::path(opt.out_dir) / "clean");
    fs::create_directories(fs::path(opt.out_dir) / "degraded");

    auto config_for = [&](int level) -> DegradationConfig {
        if (opt.level_overrides) return (*opt.level_overrides)[size_t(level - 1)];
        return DegradationConfig::preset(level);
    };

    // Stitch decisions come from each pair's own seed, so chunk positions
    // can be laid out up front and generation stays order-independent.
    std::vector<uint64_t> pair_seeds(size_t(opt.count));
    std::vector<bool> stitched(size_t(opt.count));
    std::vector<size_t> chunk_start(size_t(opt.count));
    size_t chunks_needed = 0;
    for (int i = 0; i < opt.count; ++i) {
        pair_seeds[size_t(i)] = derive_seed(opt.master_seed, uint64_t(i));
        Rng rng(pair_seeds[size_t(i)]);
        stitched[size_t(i)] = rng.bernoulli(opt.stitch_fraction);
        chunk_start[size_t(i)] = chunks_needed;
        chunks_needed += stitched[size_t(i)] ? 2 : 1;
    }
    std::vector<std::string> chunks = chunk_corpus(corpus, opt.chars_per_page, chunks_needed);

    std::vector<std::string> records(size_t(opt.count));
    parallel_for(size_t(opt.count), opt.workers, [&](size_t i) {
        Rng rng(pair_seeds[i]);
        rng.bernoulli(opt.stitch_fraction); // replay the stitch draw
        const int n_parts = stitched[i] ? 2 : 1;

        std::vector<GrayImage> cleans, degradeds;
        json parts = json::array();
        std::string text;
        for (int part = 0; part < n_parts; ++part) {
            int level = draw_level(rng, opt.level_weights);
            const std::string& font_path =
                opt.font_paths[size_t(rng.next_below(opt.font_paths.size()))];

            RenderSpec spec = opt.render;
            spec.text = chunks[chunk_start[i] + size_t(part)];
            spec.font_path = font_path;
            if (n_parts == 2) spec.page_height = std::max(2 * spec.margin + 8, spec.page_height / 2);

            uint64_t render_seed = derive_seed(pair_seeds[i], 1 + uint64_t(part) * 2);
            uint64_t degrade_seed = derive_seed(pair_seeds[i], 2 + uint64_t(part) * 2);
            RenderResult rr = render_base(spec, fonts.at(font_path), render_seed);
            DegradeMeta meta;
            GrayImage deg = degrade(rr.image, config_for(level), degrade_seed, &meta);

            cleans.push_back(std::move(rr.image));
            degradeds.push_back(std::move(deg));
            if (part) text += "\n";
            text += rr.rendered_text;
            parts.push_back({{"level", level},
                             {"font", font_path},
                             {"op_order", meta.op_order}});
        }

        GrayImage clean = n_parts == 1 ? std::move(cleans[0]) : stitch_pages(cleans);
        GrayImage degraded = n_parts == 1 ? std::move(degradeds[0]) : stitch_pages(degradeds);

        std::string name = pair_name(int(i));
        write_png_gray((fs::path(opt.out_dir) / "clean" / name).string(), clean);
        write_png_gray((fs::path(opt.out_dir) / "degraded" / name).string(), degraded);

        json rec{{"index", int(i)},
                 {"clean", "clean/" + name},
                 {"degraded", "degraded/" + name},
                 {"text", text},
                 {"seed", pair_seeds[i]},
                 {"stitched", bool(stitched[i])},
                 {"parts", parts}};
        records[i] = rec.dump();
    });

    DatasetSummary summary;
    summary.pairs = opt.count;
    for (bool s : stitched) summary.stitched += s ? 1 : 0;
    summary.manifest_path = (fs::path(opt.out_dir) / "manifest.jsonl").string();
    std::ofstream mf(summary.manifest_path, std::ios::binary);
    if (!mf) throw std::runtime_error("cannot write manifest " + summary.manifest_path);
    for (const auto& r : records) mf << r << "\n";
    return summary;
}

} // namespace prep::synth
