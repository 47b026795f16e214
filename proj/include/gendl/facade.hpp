#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gendl/image.hpp"

namespace gendl {

// South-facade window layout: 18 columns x 8 rows of 0.5 m cells,
// row 0 at the top of the wall. true = open (window).
struct facade_pattern {
    static constexpr int rows = 8;
    static constexpr int cols = 18;
    static constexpr int cell_count = rows * cols;

    std::vector<std::uint8_t> open;  // row-major, rows*cols entries

    facade_pattern() : open(cell_count, 0) {}

    bool at(int r, int c) const { return open[r * cols + c] != 0; }
    void set(int r, int c, bool v) { open[r * cols + c] = v ? 1 : 0; }

    int open_count() const {
        int n = 0;
        for (auto v : open) n += v != 0;
        return n;
    }
};

inline double wwr(const facade_pattern& p) {
    return 100.0 * p.open_count() / facade_pattern::cell_count;
}

// 8 lines of 18 '0'/'1' characters, row 0 first.
inline std::string pattern_to_text(const facade_pattern& p) {
    std::string s;
    for (int r = 0; r < facade_pattern::rows; ++r) {
        for (int c = 0; c < facade_pattern::cols; ++c)
            s += p.at(r, c) ? '1' : '0';
        s += '\n';
    }
    return s;
}

inline facade_pattern pattern_from_text(const std::string& text) {
    facade_pattern p;
    int r = 0, c = 0;
    for (char ch : text) {
        if (ch == '\n' || ch == '\r') continue;
        if (ch != '0' && ch != '1')
            throw std::invalid_argument("pattern text: bad character");
        if (r >= facade_pattern::rows)
            throw std::invalid_argument("pattern text: too many cells");
        p.set(r, c, ch == '1');
        if (++c == facade_pattern::cols) {
            c = 0;
            ++r;
        }
    }
    if (r != facade_pattern::rows || c != 0)
        throw std::invalid_argument("pattern text: wrong cell count");
    return p;
}

// px pixels per cell; open cells render as 1.0. Default 4 px -> 72x32.
inline image_grid rasterize_pattern(const facade_pattern& p, int px = 4) {
    image_grid img(facade_pattern::rows * px, facade_pattern::cols * px, 0.0f);
    for (int r = 0; r < facade_pattern::rows; ++r)
        for (int c = 0; c < facade_pattern::cols; ++c)
            if (p.at(r, c))
                for (int i = 0; i < px; ++i)
                    for (int j = 0; j < px; ++j)
                        img.at(r * px + i, c * px + j) = 1.0f;
    return img;
}

}  // namespace gendl
