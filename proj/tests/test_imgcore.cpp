#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "prep/filters.hpp"
#include "prep/image.hpp"
#include "prep/png_io.hpp"
#include "prep/rng.hpp"

#include "oracles.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace prep;

TEST_CASE("otsu: half black / half white has plateau [0,254] and midpoint 127") {
    GrayImage img(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) img.at(x, y) = (y < 8) ? 0 : 255;
    CHECK(otsu_threshold(img) == 127);
    CHECK(otsu_threshold(img) == oracles::brute_force_otsu(img));
}

TEST_CASE("otsu: uniform image returns its own intensity, foreground empty") {
    GrayImage img(10, 10, 200);
    CHECK(otsu_threshold(img) == 200);
    GrayImage bin = otsu_binarize(img);
    for (uint8_t p : bin.data()) CHECK(p == 255); // nothing strictly below 200... itself
}

TEST_CASE("otsu: two-level 30%/70% image agrees with the exhaustive oracle") {
    // 30% at 50, 70% at 220. The oracle fixes the expected threshold.
    GrayImage img(10, 10);
    for (int i = 0; i < 100; ++i) img.data()[size_t(i)] = i < 30 ? 50 : 220;
    int expect = oracles::brute_force_otsu(img);
    CHECK(otsu_threshold(img) == expect);
    // Plateau [50, 219], midpoint rounded down.
    CHECK(expect == 134);
}

TEST_CASE("otsu: agrees with the exhaustive search on random small images") {
    Rng rng(1234);
    for (int iter = 0; iter < 200; ++iter) {
        int w = 1 + int(rng.next_below(24));
        int h = 1 + int(rng.next_below(24));
        GrayImage img = oracles::random_image(rng, w, h);
        // Mix in low-entropy images to hit plateaus.
        if (iter % 3 == 0)
            for (auto& p : img.data()) p = uint8_t((p / 64) * 64);
        CAPTURE(iter);
        CHECK(otsu_threshold(img) == oracles::brute_force_otsu(img));
    }
}

TEST_CASE("psnr basics") {
    GrayImage a(8, 8, 100);
    CHECK(std::isinf(psnr(a, a)));

    GrayImage black(8, 8, 0), white(8, 8, 255);
    CHECK(psnr(black, white) == doctest::Approx(0.0));

    GrayImage b = a;
    b.at(3, 3) = 101;
    double expect = 10.0 * std::log10(255.0 * 255.0 * 64.0);
    CHECK(psnr(a, b) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(psnr(a, b) == psnr(b, a));

    GrayImage c(4, 8, 0);
    CHECK_THROWS(psnr(a, c));
}

TEST_CASE("psnr: 256x256 single off-by-one pixel is ~96.29 dB") {
    GrayImage a(256, 256, 128), b(256, 256, 128);
    b.at(0, 0) = 129;
    double expect = 10.0 * std::log10(255.0 * 255.0 * 65536.0);
    CHECK(psnr(a, b) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(96.29).epsilon(1e-3));
}

TEST_CASE("pad_replicate") {
    GrayImage img(2, 1);
    img.at(0, 0) = 10;
    img.at(1, 0) = 200;

    SUBCASE("zero pads are the identity") { CHECK(pad_replicate(img, 0, 0, 0, 0) == img); }

    SUBCASE("1x1 replication") {
        GrayImage one(1, 1, 7);
        GrayImage out = pad_replicate(one, 1, 1, 1, 1);
        CHECK(out.width() == 3);
        CHECK(out.height() == 3);
        for (uint8_t p : out.data()) CHECK(p == 7);
    }

    SUBCASE("left pad replicates the edge pixel") {
        GrayImage out = pad_replicate(img, 0, 2, 0, 0);
        CHECK(out.width() == 4);
        CHECK(out.at(0, 0) == 10);
        CHECK(out.at(1, 0) == 10);
        CHECK(out.at(2, 0) == 10);
        CHECK(out.at(3, 0) == 200);
    }

    SUBCASE("pad then crop is the identity") {
        Rng rng(7);
        GrayImage r = oracles::random_image(rng, 13, 9);
        GrayImage padded = pad_replicate(r, 3, 5, 2, 1);
        CHECK(crop(padded, Rect{5, 3, 13, 9}) == r);
    }
}

TEST_CASE("resize_bilinear: identity at same size, sane shrink") {
    Rng rng(99);
    GrayImage img = oracles::random_image(rng, 20, 10);
    CHECK(resize_bilinear(img, 20, 10) == img);
    GrayImage half = resize_bilinear(img, 10, 5);
    CHECK(half.width() == 10);
    CHECK(half.height() == 5);
    GrayImage wide = resize_to_width(img, 40);
    CHECK(wide.width() == 40);
    CHECK(wide.height() == 20);
}

TEST_CASE("quantize: round half away from zero, clamped") {
    CHECK(quantize(0.5) == 1);
    CHECK(quantize(1.5) == 2);
    CHECK(quantize(2.4999) == 2);
    CHECK(quantize(-1.0) == 0);
    CHECK(quantize(255.5) == 255);
    CHECK(quantize(300.0) == 255);
}

TEST_CASE("png round trip, including non-gray inputs") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "prep_test_png";
    fs::create_directories(dir);

    Rng rng(5);
    GrayImage img = oracles::random_image(rng, 37, 23);
    std::string path = (dir / "roundtrip.png").string();
    write_png_gray(path, img);
    CHECK(read_png_gray(path) == img);

    CHECK_THROWS(read_png_gray((dir / "missing.png").string()));
    fs::remove_all(dir);
}

TEST_CASE("filters: morphology and median behave on a spot image") {
    GrayImage img(9, 9, 255);
    img.at(4, 4) = 0;

    GrayImage grown = erode3x3(img, 1); // min filter grows the dark spot
    int dark = 0;
    for (uint8_t p : grown.data()) dark += p == 0;
    CHECK(dark == 9);

    GrayImage thinned = dilate3x3(img, 1); // max filter removes it
    for (uint8_t p : thinned.data()) CHECK(p == 255);

    GrayImage denoised = median3x3(img); // isolated spot vanishes
    for (uint8_t p : denoised.data()) CHECK(p == 255);

    CHECK(dilate3x3(img, 0) == img);
    CHECK(gaussian_blur(img, 0.0) == img);
    GrayImage blurred = gaussian_blur(img, 1.0);
    CHECK(blurred.at(4, 4) > 0);
    CHECK(blurred.at(4, 4) < 255);
}
