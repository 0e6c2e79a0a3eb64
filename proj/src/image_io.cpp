#include "dpair/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace dpair {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

// Reads the full image as raw big-endian rows of the expected layout.
std::vector<std::uint8_t> read_png(const std::filesystem::path& file, int expected_color_type,
                                   int expected_bit_depth, int channels, int& width, int& height) {
    FilePtr fp(std::fopen(file.c_str(), "rb"));
    if (!fp) throw LoadError("cannot open " + file.string());

    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) throw LoadError("libpng init failed for " + file.string());
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw LoadError("libpng init failed for " + file.string());
    if (setjmp(png_jmpbuf(r.png))) throw LoadError("failed to decode " + file.string());

    png_init_io(r.png, fp.get());
    png_read_info(r.png, r.info);

    width = static_cast<int>(png_get_image_width(r.png, r.info));
    height = static_cast<int>(png_get_image_height(r.png, r.info));
    const int bit_depth = png_get_bit_depth(r.png, r.info);
    const int color_type = png_get_color_type(r.png, r.info);
    if (color_type != expected_color_type || bit_depth != expected_bit_depth) {
        throw LoadError(file.string() + ": expected color type " + std::to_string(expected_color_type) +
                        " at " + std::to_string(expected_bit_depth) + " bit, got type " +
                        std::to_string(color_type) + " at " + std::to_string(bit_depth) + " bit");
    }

    const size_t row_bytes = static_cast<size_t>(width) * channels * (expected_bit_depth / 8);
    if (png_get_rowbytes(r.png, r.info) != row_bytes)
        throw LoadError(file.string() + ": unexpected row size");

    std::vector<std::uint8_t> data(row_bytes * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = data.data() + row_bytes * y;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    return data;
}

void write_png(const std::filesystem::path& file, const std::uint8_t* data, int width, int height,
               int color_type, int bit_depth, int channels) {
    FilePtr fp(std::fopen(file.c_str(), "wb"));
    if (!fp) throw WriteError("cannot open " + file.string() + " for writing");

    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) throw WriteError("libpng init failed for " + file.string());
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw WriteError("libpng init failed for " + file.string());
    if (setjmp(png_jmpbuf(w.png))) throw WriteError("failed to write " + file.string());

    png_init_io(w.png, fp.get());
    png_set_IHDR(w.png, w.info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);

    const size_t row_bytes = static_cast<size_t>(width) * channels * (bit_depth / 8);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(data + row_bytes * y);
    png_write_image(w.png, rows.data());
    png_write_end(w.png, nullptr);
}

}  // namespace

ColorImage read_color_png(const std::filesystem::path& file) {
    int w = 0, h = 0;
    auto data = read_png(file, PNG_COLOR_TYPE_RGB, 8, 3, w, h);
    ColorImage img(w, h);
    img.rgb = std::move(data);
    return img;
}

void write_color_png(const std::filesystem::path& file, const ColorImage& img) {
    write_png(file, img.rgb.data(), img.width, img.height, PNG_COLOR_TYPE_RGB, 8, 3);
}

DepthImage read_depth_png(const std::filesystem::path& file) {
    int w = 0, h = 0;
    auto data = read_png(file, PNG_COLOR_TYPE_GRAY, 16, 1, w, h);
    DepthImage img(w, h);
    for (size_t i = 0; i < img.values.size(); ++i) {
        const std::uint16_t mm = static_cast<std::uint16_t>((data[2 * i] << 8) | data[2 * i + 1]);
        img.values[i] = static_cast<float>(mm) / 1000.0f;
    }
    return img;
}

void write_depth_png(const std::filesystem::path& file, const DepthImage& img) {
    std::vector<std::uint8_t> data(img.values.size() * 2);
    for (size_t i = 0; i < img.values.size(); ++i) {
        long mm = std::lround(static_cast<double>(img.values[i]) * 1000.0);
        if (mm < 0) mm = 0;
        if (mm > 65535) mm = 65535;
        data[2 * i] = static_cast<std::uint8_t>(mm >> 8);
        data[2 * i + 1] = static_cast<std::uint8_t>(mm & 0xff);
    }
    write_png(file, data.data(), img.width, img.height, PNG_COLOR_TYPE_GRAY, 16, 1);
}

MaskImage read_mask_png(const std::filesystem::path& file) {
    int w = 0, h = 0;
    auto data = read_png(file, PNG_COLOR_TYPE_GRAY, 8, 1, w, h);
    MaskImage mask(w, h);
    for (size_t i = 0; i < mask.bits.size(); ++i) mask.bits[i] = data[i] != 0 ? 1 : 0;
    return mask;
}

void write_mask_png(const std::filesystem::path& file, const MaskImage& mask) {
    std::vector<std::uint8_t> data(mask.bits.size());
    for (size_t i = 0; i < data.size(); ++i) data[i] = mask.bits[i] ? 255 : 0;
    write_png(file, data.data(), mask.width, mask.height, PNG_COLOR_TYPE_GRAY, 8, 1);
}

void write_gray16_png(const std::filesystem::path& file, const std::vector<std::uint16_t>& values,
                      int width, int height) {
    if (values.size() != static_cast<size_t>(width) * height)
        throw InvalidInputError("gray16 buffer does not match dimensions");
    std::vector<std::uint8_t> data(values.size() * 2);
    for (size_t i = 0; i < values.size(); ++i) {
        data[2 * i] = static_cast<std::uint8_t>(values[i] >> 8);
        data[2 * i + 1] = static_cast<std::uint8_t>(values[i] & 0xff);
    }
    write_png(file, data.data(), width, height, PNG_COLOR_TYPE_GRAY, 16, 1);
}

}  // namespace dpair
