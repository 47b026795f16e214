#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gendl {

// H x W grayscale raster with values in [0, 1]. Row 0 is the top row.
struct image_grid {
    int height = 0;
    int width = 0;
    std::vector<float> values;  // row-major

    image_grid() = default;
    image_grid(int h, int w, float fill = 0.0f)
        : height(h), width(w), values(static_cast<size_t>(h) * w, fill) {}

    float& at(int y, int x) { return values[static_cast<size_t>(y) * width + x]; }
    float at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return values.size(); }
};

// Binary PGM (P5), maxval 255, byte = round(pixel * 255).
inline void write_pgm(const image_grid& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            float v = std::clamp(img.at(y, x), 0.0f, 1.0f);
            row[x] = static_cast<unsigned char>(std::lround(v * 255.0f));
        }
        out.write(reinterpret_cast<const char*>(row.data()), img.width);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace detail {
inline int pgm_read_int(std::istream& in) {
    // skips whitespace and '#' comments
    int c = in.get();
    while (c == '#' || std::isspace(c)) {
        if (c == '#') {
            while (c != '\n' && c != EOF) c = in.get();
        }
        c = in.get();
    }
    int value = 0;
    bool any = false;
    while (c >= '0' && c <= '9') {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw std::runtime_error("malformed PGM header");
    return value;
}
}  // namespace detail

inline image_grid read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') throw std::runtime_error("not a binary PGM (P5): " + path);
    int w = detail::pgm_read_int(in);
    int h = detail::pgm_read_int(in);
    int maxval = detail::pgm_read_int(in);
    if (maxval != 255) throw std::runtime_error("unsupported PGM maxval in " + path);
    image_grid img(h, w);
    std::vector<unsigned char> row(w);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), w);
        if (!in) throw std::runtime_error("truncated PGM: " + path);
        for (int x = 0; x < w; ++x) img.at(y, x) = static_cast<float>(row[x]) / 255.0f;
    }
    return img;
}

// Exact box-filter downsample: every destination pixel averages the source
// area it covers, with fractional edge overlap.
inline image_grid downsample_area(const image_grid& src, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("downsample_area: bad size");
    image_grid dst(out_h, out_w);
    const double sy = static_cast<double>(src.height) / out_h;
    const double sx = static_cast<double>(src.width) / out_w;
    for (int oy = 0; oy < out_h; ++oy) {
        const double y0 = oy * sy, y1 = (oy + 1) * sy;
        const int iy0 = static_cast<int>(std::floor(y0));
        const int iy1 = std::min(src.height, static_cast<int>(std::ceil(y1)));
        for (int ox = 0; ox < out_w; ++ox) {
            const double x0 = ox * sx, x1 = (ox + 1) * sx;
            const int ix0 = static_cast<int>(std::floor(x0));
            const int ix1 = std::min(src.width, static_cast<int>(std::ceil(x1)));
            double acc = 0.0;
            for (int iy = iy0; iy < iy1; ++iy) {
                const double wy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
                for (int ix = ix0; ix < ix1; ++ix) {
                    const double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
                    acc += wy * wx * src.at(iy, ix);
                }
            }
            dst.at(oy, ox) = static_cast<float>(acc / (sy * sx));
        }
    }
    return dst;
}

inline image_grid resize_bilinear(const image_grid& src, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("resize_bilinear: bad size");
    image_grid dst(out_h, out_w);
    const double sy = static_cast<double>(src.height) / out_h;
    const double sx = static_cast<double>(src.width) / out_w;
    for (int oy = 0; oy < out_h; ++oy) {
        const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double ty = fy - y0;
        for (int ox = 0; ox < out_w; ++ox) {
            const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double tx = fx - x0;
            const double top = (1 - tx) * src.at(y0, x0) + tx * src.at(y0, x1);
            const double bot = (1 - tx) * src.at(y1, x0) + tx * src.at(y1, x1);
            dst.at(oy, ox) = static_cast<float>((1 - ty) * top + ty * bot);
        }
    }
    return dst;
}

// Contact sheet: `cols` tiles per row, `pad` background pixels between tiles.
inline image_grid make_mosaic(const std::vector<image_grid>& tiles, int cols, int pad = 2) {
    if (tiles.empty()) return {};
    const int th = tiles[0].height, tw = tiles[0].width;
    const int rows = (static_cast<int>(tiles.size()) + cols - 1) / cols;
    image_grid sheet(rows * th + (rows + 1) * pad, cols * tw + (cols + 1) * pad, 0.0f);
    for (size_t k = 0; k < tiles.size(); ++k) {
        const int r = static_cast<int>(k) / cols, c = static_cast<int>(k) % cols;
        const int oy = pad + r * (th + pad), ox = pad + c * (tw + pad);
        for (int y = 0; y < th; ++y)
            for (int x = 0; x < tw; ++x) sheet.at(oy + y, ox + x) = tiles[k].at(y, x);
    }
    return sheet;
}

}  // namespace gendl
