#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "lamp/error.hpp"
#include "lamp/image.hpp"
#include "lamp/image_io.hpp"
#include "support/imagegen.hpp"
#include "support/oracles.hpp"

using namespace lamp;
namespace ts = lamp::testsupport;

TEST_CASE("png roundtrip preserves exact pixels") {
    const std::string dir = ts::temp_dir("image_io");
    Image img(2, 2);
    img.set(0, 0, 10, 20, 30);
    img.set(1, 0, 255, 0, 128);
    img.set(0, 1, 1, 2, 3);
    img.set(1, 1, 200, 100, 50);
    ts::save_png_rgb(dir + "/tiny.png", img);

    const Image back = load_image(dir + "/tiny.png");
    REQUIRE(back.width == 2);
    REQUIRE(back.height == 2);
    CHECK(back.pixels == img.pixels);
}

TEST_CASE("jpeg decode recovers a constant image") {
    const std::string dir = ts::temp_dir("image_io_jpeg");
    Image img(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) img.set(x, y, 120, 130, 140);
    ts::save_jpeg_rgb(dir + "/c.jpg", img, 95);

    const Image back = load_image(dir + "/c.jpg");
    REQUIRE(back.width == 16);
    REQUIRE(back.height == 16);
    for (size_t i = 0; i < back.pixels.size(); ++i) {
        CHECK(std::abs(int(back.pixels[i]) - int(img.pixels[i])) <= 3);
    }
}

TEST_CASE("load_image error codes") {
    const std::string dir = ts::temp_dir("image_io_err");

    try {
        load_image(dir + "/nope.png");
        FAIL("expected NotFound");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotFound);
    }

    std::ofstream(dir + "/fake.png") << "this is not a png";
    try {
        load_image(dir + "/fake.png");
        FAIL("expected CorruptData");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CorruptData);
    }

    std::ofstream(dir + "/fake.gif") << "GIF89a nothing";
    try {
        load_image(dir + "/fake.gif");
        FAIL("expected UnsupportedFormat");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedFormat);
    }
}

TEST_CASE("derive_planes gray pixel maps to neutral chroma") {
    Image img(1, 1);
    img.set(0, 0, 128, 128, 128);
    const PlaneSet ps = derive_planes(img);
    CHECK(ps.y.at(0, 0) == doctest::Approx(128.0).epsilon(1e-9));
    CHECK(ps.cb.at(0, 0) == 128.0);
    CHECK(ps.cr.at(0, 0) == 128.0);
}

TEST_CASE("derive_planes neutral chroma holds exactly wherever R==G==B") {
    std::mt19937_64 rng(11);
    Image img = ts::random_image(rng, 24, 17);
    for (int i = 0; i < 40; ++i) {
        const int x = static_cast<int>(rng() % 24);
        const int y = static_cast<int>(rng() % 17);
        const std::uint8_t v = static_cast<std::uint8_t>(rng() % 256);
        img.set(x, y, v, v, v);
    }
    const PlaneSet ps = derive_planes(img);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (img.at(x, y, 0) == img.at(x, y, 1) &&
                img.at(x, y, 1) == img.at(x, y, 2)) {
                CHECK(ps.cb.at(x, y) == 128.0);
                CHECK(ps.cr.at(x, y) == 128.0);
            }
        }
    }
}

TEST_CASE("derive_planes constant image has zero gradients") {
    Image img(9, 7);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 9; ++x) img.set(x, y, 77, 77, 77);
    const PlaneSet ps = derive_planes(img);
    for (double v : ps.gx.v) CHECK(v == 0.0);
    for (double v : ps.gy.v) CHECK(v == 0.0);
}

TEST_CASE("derive_planes ramp gradient with replicated borders") {
    Image img(8, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 8; ++x) {
            const std::uint8_t v = static_cast<std::uint8_t>(x);
            img.set(x, y, v, v, v);
        }
    const PlaneSet ps = derive_planes(img);
    for (int y = 0; y < 4; ++y) {
        CHECK(ps.gx.at(0, y) == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(ps.gx.at(7, y) == doctest::Approx(0.5).epsilon(1e-9));
        for (int x = 1; x < 7; ++x) {
            CHECK(ps.gx.at(x, y) == doctest::Approx(1.0).epsilon(1e-9));
        }
        for (int x = 0; x < 8; ++x) {
            CHECK(ps.gy.at(x, y) == doctest::Approx(0.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("integral sums match the naive oracle") {
    Plane ones(3, 3);
    for (double& v : ones.v) v = 1.0;
    const IntegralPlane ip1 = integral(ones);
    CHECK(rect_sum(ip1, {0, 0, 3, 3}) == 9.0);
    CHECK(rect_sum(ip1, {1, 1, 1, 1}) == 1.0);

    std::mt19937_64 rng(5);
    Plane p(16, 16);
    for (double& v : p.v) v = static_cast<double>(rng() % 100000) / 99999.0;
    const IntegralPlane ip = integral(p);

    const double full = rect_sum(ip, {0, 0, 16, 16});
    const double full_naive = oracle::naive_rect_sum(p, {0, 0, 16, 16});
    CHECK(full == doctest::Approx(full_naive).epsilon(1e-9));

    for (int i = 0; i < 50; ++i) {
        const int w = 1 + static_cast<int>(rng() % 16);
        const int h = 1 + static_cast<int>(rng() % 16);
        const int x = static_cast<int>(rng() % static_cast<std::uint64_t>(17 - w));
        const int y = static_cast<int>(rng() % static_cast<std::uint64_t>(17 - h));
        const Rect r{x, y, w, h};
        CHECK(rect_sum(ip, r) ==
              doctest::Approx(oracle::naive_rect_sum(p, r)).epsilon(1e-9));
    }

    CHECK_THROWS_AS(rect_sum(ip, {10, 10, 10, 10}), Error);
}

TEST_CASE("crop_resize is exact on constants and identity crops") {
    Image img(20, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) img.set(x, y, 40, 90, 160);
    const Image small = crop_resize(img, {3, 4, 10, 9}, 7);
    for (size_t i = 0; i < small.pixels.size(); i += 3) {
        CHECK(small.pixels[i] == 40);
        CHECK(small.pixels[i + 1] == 90);
        CHECK(small.pixels[i + 2] == 160);
    }

    std::mt19937_64 rng(3);
    const Image noisy = ts::random_image(rng, 12, 12);
    const Image same = crop_resize(noisy, {2, 3, 5, 5}, 5);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) {
            for (int c = 0; c < 3; ++c) {
                CHECK(same.at(x, y, c) == noisy.at(2 + x, 3 + y, c));
            }
        }
    }
}

TEST_CASE("crop_resize 2x2 checkerboard to 1x1 averages the four pixels") {
    Image img(2, 2);
    img.set(0, 0, 0, 0, 0);
    img.set(1, 0, 255, 255, 255);
    img.set(0, 1, 255, 255, 255);
    img.set(1, 1, 0, 0, 0);
    const Image one = crop_resize(img, {0, 0, 2, 2}, 1);
    CHECK(int(one.at(0, 0, 0)) == 128); // round(127.5)
}

TEST_CASE("crop_resize rejects out-of-bounds rects") {
    Image img(8, 8);
    CHECK_THROWS_AS(crop_resize(img, {4, 4, 8, 8}, 4), Error);
    CHECK_THROWS_AS(crop_resize(img, {-1, 0, 4, 4}, 4), Error);
}
