#include "prep/patchfuse.hpp"

#include "prep/filters.hpp"
#include "prep/parallel.hpp"
#include "prep/png_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unistd.h>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace prep::patch {

std::string to_string(ScanDirection d) {
    switch (d) {
    case ScanDirection::TopLeftToBottomRight: return "tl-br";
    case ScanDirection::TopRightToBottomLeft: return "tr-bl";
    case ScanDirection::BottomLeftToTopRight: return "bl-tr";
    case ScanDirection::BottomRightToTopLeft: return "br-tl";
    }
    return "?";
}

ScanDirection direction_from_string(const std::string& s) {
    if (s == "tl-br" || s == "tl") return ScanDirection::TopLeftToBottomRight;
    if (s == "tr-bl" || s == "tr") return ScanDirection::TopRightToBottomLeft;
    if (s == "bl-tr" || s == "bl") return ScanDirection::BottomLeftToTopRight;
    if (s == "br-tl" || s == "br") return ScanDirection::BottomRightToTopLeft;
    throw std::invalid_argument("unknown scan direction: " + s);
}

RestorerHandle RestorerHandle::parse(const std::string& s) {
    if (s == "identity") return identity();
    if (s == "otsu") return otsu_binarize();
    if (s == "median3") return median_denoise();
    if (s.rfind("exec:", 0) == 0) return external(s.substr(5));
    throw std::invalid_argument("unknown restorer: " + s);
}

PatchPlan plan_patches(int width, int height, ScanDirection direction, int trim) {
    if (width < 1 || height < 1)
        throw std::invalid_argument("plan_patches: dimensions must be >= 1");
    if (trim != 0 && trim != 32 && trim != 64)
        throw std::invalid_argument("plan_patches: trim must be one of 0, 32, 64");

    PatchPlan plan;
    plan.trim = trim;
    plan.stride = plan.patch_size - 2 * trim;
    plan.direction = direction;
    plan.image_width = width;
    plan.image_height = height;
    plan.cols = (width + plan.stride - 1) / plan.stride;
    plan.rows = (height + plan.stride - 1) / plan.stride;
    plan.padded_width = 2 * trim + plan.stride * plan.cols;
    plan.padded_height = 2 * trim + plan.stride * plan.rows;
    plan.leading_pad = trim;
    plan.trailing_pad_x = plan.padded_width - width - 2 * trim + trim;
    plan.trailing_pad_y = plan.padded_height - height - 2 * trim + trim;

    const int extra_x = plan.stride * plan.cols - width;
    const int extra_y = plan.stride * plan.rows - height;
    switch (direction) {
    case ScanDirection::TopLeftToBottomRight:
        plan.pad_top = trim;
        plan.pad_left = trim;
        plan.pad_bottom = trim + extra_y;
        plan.pad_right = trim + extra_x;
        break;
    case ScanDirection::TopRightToBottomLeft:
        plan.pad_top = trim;
        plan.pad_right = trim;
        plan.pad_bottom = trim + extra_y;
        plan.pad_left = trim + extra_x;
        break;
    case ScanDirection::BottomLeftToTopRight:
        plan.pad_bottom = trim;
        plan.pad_left = trim;
        plan.pad_top = trim + extra_y;
        plan.pad_right = trim + extra_x;
        break;
    case ScanDirection::BottomRightToTopLeft:
        plan.pad_bottom = trim;
        plan.pad_right = trim;
        plan.pad_top = trim + extra_y;
        plan.pad_left = trim + extra_x;
        break;
    }

    // Scan order: row-major from the origin corner.
    const bool rows_down = direction == ScanDirection::TopLeftToBottomRight ||
                           direction == ScanDirection::TopRightToBottomLeft;
    const bool cols_right = direction == ScanDirection::TopLeftToBottomRight ||
                            direction == ScanDirection::BottomLeftToTopRight;
    plan.patches.reserve(size_t(plan.rows) * plan.cols);
    for (int ri = 0; ri < plan.rows; ++ri) {
        int r = rows_down ? ri : plan.rows - 1 - ri;
        for (int ci = 0; ci < plan.cols; ++ci) {
            int c = cols_right ? ci : plan.cols - 1 - ci;
            plan.patches.push_back(
                Rect{c * plan.stride, r * plan.stride, plan.patch_size, plan.patch_size});
        }
    }
    return plan;
}

namespace {

GrayImage run_builtin(const RestorerHandle& r, const GrayImage& in) {
    switch (r.kind) {
    case RestorerHandle::Kind::Identity: return in;
    case RestorerHandle::Kind::OtsuBinarize: return otsu_binarize(in);
    case RestorerHandle::Kind::MedianDenoise3x3: return median3x3(in);
    default: throw std::logic_error("run_builtin: not a builtin restorer");
    }
}

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
    size_t pos;
    while ((pos = tmpl.find(key)) != std::string::npos) tmpl.replace(pos, key.size(), value);
    return tmpl;
}

std::vector<GrayImage> run_external_batch(const RestorerHandle& r,
                                          const std::vector<GrayImage>& patches) {
    static std::atomic<uint64_t> batch_counter{0};
    fs::path root = fs::temp_directory_path() /
                    ("prep-restorer-" + std::to_string(::getpid()) + "-" +
                     std::to_string(batch_counter.fetch_add(1)));
    fs::path in_dir = root / "in", out_dir = root / "out";
    fs::create_directories(in_dir);
    fs::create_directories(out_dir);

    json index;
    index["patch_size"] = patches.empty() ? 0 : patches[0].width();
    index["count"] = patches.size();
    json files = json::array();
    for (size_t k = 0; k < patches.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "%05zu.png", k);
        write_png_gray((in_dir / name).string(), patches[k]);
        files.push_back(name);
    }
    index["files"] = files;
    fs::path index_file = root / "index.json";
    std::ofstream(index_file) << index.dump(2) << "\n";

    std::string cmd = r.command_template;
    cmd = substitute(cmd, "{input_dir}", in_dir.string());
    cmd = substitute(cmd, "{output_dir}", out_dir.string());
    cmd = substitute(cmd, "{index_file}", index_file.string());
    int status = std::system(cmd.c_str());
    if (status != 0) {
        fs::remove_all(root);
        throw RestoreError("external restorer exited with status " + std::to_string(status) +
                               ": " + cmd,
                           -1);
    }

    std::vector<GrayImage> out;
    out.reserve(patches.size());
    for (size_t k = 0; k < patches.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "%05zu.png", k);
        fs::path p = out_dir / name;
        if (!fs::exists(p)) {
            fs::remove_all(root);
            throw RestoreError("external restorer produced no output for patch " +
                                   std::to_string(k),
                               int(k));
        }
        try {
            out.push_back(read_png_gray(p.string()));
        } catch (const std::exception& e) {
            fs::remove_all(root);
            throw RestoreError("external restorer output unreadable for patch " +
                                   std::to_string(k) + ": " + e.what(),
                               int(k));
        }
    }
    fs::remove_all(root);
    return out;
}

} // namespace

GrayImage restore_pass(const GrayImage& img, const PatchPlan& plan,
                       const RestorerHandle& restorer, int workers) {
    if (plan.image_width != img.width() || plan.image_height != img.height())
        throw std::invalid_argument("restore_pass: plan built for different dimensions");

    GrayImage padded = pad_replicate(img, plan.pad_top, plan.pad_left, plan.pad_bottom,
                                     plan.pad_right);

    const size_t n = plan.patches.size();
    std::vector<GrayImage> restored(n);
    if (restorer.kind == RestorerHandle::Kind::ExternalCommand) {
        std::vector<GrayImage> inputs;
        inputs.reserve(n);
        for (const Rect& r : plan.patches) inputs.push_back(crop(padded, r));
        restored = run_external_batch(restorer, inputs);
    } else {
        parallel_for(n, workers, [&](size_t k) {
            restored[k] = run_builtin(restorer, crop(padded, plan.patches[k]));
        });
    }

    GrayImage canvas(plan.padded_width, plan.padded_height);
    const int trim = plan.trim;
    const int keep = plan.stride;
    for (size_t k = 0; k < n; ++k) {
        const GrayImage& out = restored[k];
        if (out.width() != plan.patch_size || out.height() != plan.patch_size)
            throw RestoreError("restorer returned " + std::to_string(out.width()) + "x" +
                                   std::to_string(out.height()) + " for patch " +
                                   std::to_string(k) + " (want " +
                                   std::to_string(plan.patch_size) + ")",
                               int(k));
        const Rect& r = plan.patches[k];
        for (int y = 0; y < keep; ++y)
            std::memcpy(canvas.row(r.y0 + trim + y) + r.x0 + trim, out.row(trim + y) + trim,
                        size_t(keep));
    }

    return crop(canvas, Rect{plan.pad_left, plan.pad_top, img.width(), img.height()});
}

GrayImage fuse(const std::vector<GrayImage>& passes, FuseMethod method) {
    if (passes.size() != 4)
        throw std::invalid_argument("fuse: exactly four passes required");
    for (const auto& p : passes)
        if (!p.same_size(passes[0])) throw std::invalid_argument("fuse: dimension mismatch");

    GrayImage out(passes[0].width(), passes[0].height());
    const uint8_t* d0 = passes[0].data().data();
    const uint8_t* d1 = passes[1].data().data();
    const uint8_t* d2 = passes[2].data().data();
    const uint8_t* d3 = passes[3].data().data();
    auto& dst = out.data();

    if (method == FuseMethod::Mean) {
        for (size_t i = 0; i < dst.size(); ++i) {
            unsigned sum = unsigned(d0[i]) + d1[i] + d2[i] + d3[i];
            dst[i] = uint8_t((sum + 2) / 4);
        }
    } else {
        for (size_t i = 0; i < dst.size(); ++i) {
            uint8_t v[4] = {d0[i], d1[i], d2[i], d3[i]};
            if (v[0] > v[1]) std::swap(v[0], v[1]);
            if (v[2] > v[3]) std::swap(v[2], v[3]);
            // Middle two of four = max of the lows, min of the highs.
            unsigned m1 = std::max(v[0], v[2]);
            unsigned m2 = std::min(v[1], v[3]);
            dst[i] = uint8_t((m1 + m2 + 1) / 2);
        }
    }
    return out;
}

GrayImage restore_image(const GrayImage& img, const RestorerHandle& restorer,
                        const RestoreMode& mode, int trim, int workers,
                        RestoreReport* report) {
    if (!mode.multi) {
        PatchPlan plan = plan_patches(img.width(), img.height(), mode.direction, trim);
        return restore_pass(img, plan, restorer, workers);
    }
    std::vector<GrayImage> passes;
    passes.reserve(4);
    for (ScanDirection d : kAllDirections) {
        PatchPlan plan = plan_patches(img.width(), img.height(), d, trim);
        passes.push_back(restore_pass(img, plan, restorer, workers));
    }
    if (report) {
        report->pass_checksums.clear();
        for (const auto& p : passes) report->pass_checksums.push_back(image_checksum(p));
    }
    return fuse(passes, mode.fusion);
}

uint64_t image_checksum(const GrayImage& img) {
    uint64_t h = 1469598103934665603ULL;
    auto mix = [&](uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xFF;
            h *= 1099511628211ULL;
        }
    };
    mix(uint64_t(img.width()));
    mix(uint64_t(img.height()));
    for (uint8_t b : img.data()) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace prep::patch
