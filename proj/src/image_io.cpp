#include "hazeforge/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <csetjmp>

namespace hazeforge {

namespace {

struct FileCloser {
    std::FILE* f = nullptr;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

}  // namespace

Tensor load_image_png(const std::string& path) {
    FileCloser fc;
    fc.f = std::fopen(path.c_str(), "rb");
    if (!fc.f) throw io_error("cannot open image: " + path);

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, fc.f) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw format_error("not a PNG file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw io_error("libpng read init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw io_error("libpng info init failed");
    }
    std::vector<png_bytep> row_ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw format_error("corrupt or truncated PNG: " + path);
    }
    png_init_io(png, fc.f);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const std::size_t width = png_get_image_width(png, info);
    const std::size_t height = png_get_image_height(png, info);
    if (png_get_channels(png, info) != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw format_error("unsupported PNG channel layout: " + path);
    }

    std::vector<unsigned char> raw(height * width * 3);
    row_ptrs.resize(height);
    for (std::size_t y = 0; y < height; ++y) row_ptrs[y] = raw.data() + y * width * 3;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Tensor img = Tensor::zeros({3, height, width});
    const std::size_t plane = height * width;
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            for (std::size_t c = 0; c < 3; ++c)
                img[c * plane + y * width + x] =
                    static_cast<real>(raw[(y * width + x) * 3 + c]) / real(255);
    return img;
}

void save_image_png(const Tensor& img, const std::string& path) {
    if (img.rank() != 3 || img.extent(0) != 3)
        throw dim_error("save_image_png: expected [3,H,W], got " + shape_str(img.shape()));
    const std::size_t height = img.extent(1), width = img.extent(2);
    const std::size_t plane = height * width;

    std::vector<unsigned char> raw(height * width * 3);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            for (std::size_t c = 0; c < 3; ++c) {
                const real v = std::clamp(img[c * plane + y * width + x], real(0), real(1));
                raw[(y * width + x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(static_cast<double>(v) * 255.0));
            }

    FileCloser fc;
    fc.f = std::fopen(path.c_str(), "wb");
    if (!fc.f) throw io_error("cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw io_error("libpng write init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw io_error("libpng info init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw io_error("PNG write failed: " + path);
    }
    png_init_io(png, fc.f);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> row_ptrs(height);
    for (std::size_t y = 0; y < height; ++y) row_ptrs[y] = raw.data() + y * width * 3;
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor map_to_image(const Tensor& map01) {
    if (map01.rank() != 2)
        throw dim_error("map_to_image: expected [H,W], got " + shape_str(map01.shape()));
    Tensor img = Tensor::zeros({3, map01.extent(0), map01.extent(1)});
    const std::size_t plane = map01.numel();
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < plane; ++i) img[c * plane + i] = map01[i];
    return img;
}

Tensor bilinear_resize(const Tensor& src, std::size_t out_h, std::size_t out_w) {
    if (src.rank() != 2 && src.rank() != 3)
        throw dim_error("bilinear_resize: expected [H,W] or [C,H,W], got " + shape_str(src.shape()));
    if (out_h < 1 || out_w < 1) throw dim_error("bilinear_resize: empty target");
    const std::size_t C = src.rank() == 3 ? src.extent(0) : 1;
    const std::size_t H = src.extent(src.rank() - 2), W = src.extent(src.rank() - 1);

    Shape oshape = src.rank() == 3 ? Shape{C, out_h, out_w} : Shape{out_h, out_w};
    Tensor out = Tensor::zeros(oshape);
    const double sy = out_h > 1 ? static_cast<double>(H - 1) / (out_h - 1) : 0.0;
    const double sx = out_w > 1 ? static_cast<double>(W - 1) / (out_w - 1) : 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        const real* sp = src.data() + c * H * W;
        real* op = out.data() + c * out_h * out_w;
        for (std::size_t y = 0; y < out_h; ++y) {
            const double fy = y * sy;
            const std::size_t y0 = static_cast<std::size_t>(fy);
            const std::size_t y1 = std::min(y0 + 1, H - 1);
            const double wy = fy - y0;
            for (std::size_t x = 0; x < out_w; ++x) {
                const double fx = x * sx;
                const std::size_t x0 = static_cast<std::size_t>(fx);
                const std::size_t x1 = std::min(x0 + 1, W - 1);
                const double wx = fx - x0;
                const double v = (1 - wy) * ((1 - wx) * sp[y0 * W + x0] + wx * sp[y0 * W + x1]) +
                                 wy * ((1 - wx) * sp[y1 * W + x0] + wx * sp[y1 * W + x1]);
                op[y * out_w + x] = static_cast<real>(v);
            }
        }
    }
    return out;
}

Tensor contact_sheet(const std::vector<Tensor>& panels) {
    if (panels.empty()) throw dim_error("contact_sheet: no panels");
    const std::size_t H = panels[0].extent(1);
    const std::size_t sep = 2;
    std::size_t total_w = 0;
    for (const auto& p : panels) {
        if (p.rank() != 3 || p.extent(0) != 3 || p.extent(1) != H)
            throw dim_error("contact_sheet: panels must all be [3,H,W] with equal height");
        total_w += p.extent(2);
    }
    total_w += sep * (panels.size() - 1);
    Tensor sheet = Tensor::full({3, H, total_w}, real(1));
    std::size_t xoff = 0;
    for (const auto& p : panels) {
        const std::size_t W = p.extent(2);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x)
                    sheet[(c * H + y) * total_w + xoff + x] = p[(c * H + y) * W + x];
        xoff += W + sep;
    }
    return sheet;
}

}  // namespace hazeforge
