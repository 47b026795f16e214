#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gendl/facade.hpp"
#include "gendl/image.hpp"

namespace gendl {

struct binary_image {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;  // 0 or 1, row-major

    binary_image() = default;
    binary_image(int h, int w, bool fill = false)
        : height(h), width(w),
          values(static_cast<std::size_t>(h) * w, fill ? 1 : 0) {}

    bool at(int r, int c) const {
        return values[static_cast<std::size_t>(r) * width + c] != 0;
    }
    void set(int r, int c, bool v) {
        values[static_cast<std::size_t>(r) * width + c] = v ? 1 : 0;
    }
    int count() const {
        int n = 0;
        for (auto v : values) n += v != 0;
        return n;
    }
    bool operator==(const binary_image&) const = default;
};

struct structuring_element {
    int height = 0;
    int width = 0;
    int anchor_r = 0;
    int anchor_c = 0;
    std::vector<std::uint8_t> mask;

    bool at(int r, int c) const {
        return mask[static_cast<std::size_t>(r) * width + c] != 0;
    }

    static structuring_element cross3() {
        structuring_element se;
        se.height = se.width = 3;
        se.anchor_r = se.anchor_c = 1;
        se.mask = {0, 1, 0, 1, 1, 1, 0, 1, 0};
        return se;
    }

    static structuring_element square3() {
        structuring_element se;
        se.height = se.width = 3;
        se.anchor_r = se.anchor_c = 1;
        se.mask.assign(9, 1);
        return se;
    }

    structuring_element reflected() const {
        structuring_element se = *this;
        std::reverse(se.mask.begin(), se.mask.end());
        se.anchor_r = height - 1 - anchor_r;
        se.anchor_c = width - 1 - anchor_c;
        return se;
    }
};

// true iff pixel >= threshold.
inline binary_image binarize(const image_grid& img, float threshold = 0.5f) {
    if (threshold <= 0.0f || threshold >= 1.0f)
        throw std::invalid_argument("binarize: threshold outside (0,1)");
    binary_image out(img.height, img.width);
    for (std::size_t i = 0; i < img.values.size(); ++i)
        out.values[i] = img.values[i] >= threshold ? 1 : 0;
    return out;
}

inline image_grid to_image(const binary_image& b) {
    image_grid img(b.height, b.width, 0.0f);
    for (std::size_t i = 0; i < b.values.size(); ++i)
        img.values[i] = b.values[i] ? 1.0f : 0.0f;
    return img;
}

inline binary_image complement(const binary_image& b) {
    binary_image out = b;
    for (auto& v : out.values) v = v ? 0 : 1;
    return out;
}

inline binary_image pad(const binary_image& b, int margin, bool value = false) {
    binary_image out(b.height + 2 * margin, b.width + 2 * margin, value);
    for (int r = 0; r < b.height; ++r)
        for (int c = 0; c < b.width; ++c)
            out.set(r + margin, c + margin, b.at(r, c));
    return out;
}

inline binary_image crop(const binary_image& b, int margin) {
    binary_image out(b.height - 2 * margin, b.width - 2 * margin);
    for (int r = 0; r < out.height; ++r)
        for (int c = 0; c < out.width; ++c) out.set(r, c, b.at(r + margin, c + margin));
    return out;
}

// Minkowski erosion; pixels outside the image read as background, so
// foreground touching the border erodes away when the element pokes out.
inline binary_image erode(const binary_image& img, const structuring_element& se) {
    binary_image out(img.height, img.width);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            bool all = true;
            for (int i = 0; all && i < se.height; ++i)
                for (int j = 0; all && j < se.width; ++j) {
                    if (!se.at(i, j)) continue;
                    const int rr = r + i - se.anchor_r;
                    const int cc = c + j - se.anchor_c;
                    if (rr < 0 || rr >= img.height || cc < 0 || cc >= img.width ||
                        !img.at(rr, cc))
                        all = false;
                }
            out.set(r, c, all);
        }
    return out;
}

inline binary_image dilate(const binary_image& img, const structuring_element& se) {
    binary_image out(img.height, img.width);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            bool any = false;
            for (int i = 0; !any && i < se.height; ++i)
                for (int j = 0; !any && j < se.width; ++j) {
                    if (!se.at(i, j)) continue;
                    const int rr = r - (i - se.anchor_r);
                    const int cc = c - (j - se.anchor_c);
                    if (rr >= 0 && rr < img.height && cc >= 0 && cc < img.width &&
                        img.at(rr, cc))
                        any = true;
                }
            out.set(r, c, any);
        }
    return out;
}

inline binary_image open(const binary_image& img, const structuring_element& se) {
    return dilate(erode(img, se), se);
}

inline binary_image close(const binary_image& img, const structuring_element& se) {
    return erode(dilate(img, se), se);
}

namespace detail {

// Multi-source L1 distance map from all pixels where a and b disagree.
inline std::vector<int> changed_distance(const binary_image& a,
                                         const binary_image& b) {
    const int h = a.height, w = a.width;
    const int inf = std::numeric_limits<int>::max() / 2;
    std::vector<int> dist(static_cast<std::size_t>(h) * w, inf);
    std::vector<int> queue;
    for (int i = 0; i < h * w; ++i)
        if (a.values[static_cast<std::size_t>(i)] !=
            b.values[static_cast<std::size_t>(i)]) {
            dist[static_cast<std::size_t>(i)] = 0;
            queue.push_back(i);
        }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const int p = queue[head];
        const int r = p / w, c = p % w;
        const int d = dist[static_cast<std::size_t>(p)] + 1;
        const int nr[4] = {r - 1, r + 1, r, r};
        const int nc[4] = {c, c, c - 1, c + 1};
        for (int k = 0; k < 4; ++k) {
            if (nr[k] < 0 || nr[k] >= h || nc[k] < 0 || nc[k] >= w) continue;
            const int q = nr[k] * w + nc[k];
            if (dist[static_cast<std::size_t>(q)] > d) {
                dist[static_cast<std::size_t>(q)] = d;
                queue.push_back(q);
            }
        }
    }
    return dist;
}

}  // namespace detail

// Opening followed by closing; if that moves the white proportion by more
// than tolerance_pct percentage points, boundary pixels of the over-
// represented class are flipped back one at a time. Candidates are ranked by
// distance to the pixels the open/close pass changed, then by (row, column),
// so the repair happens next to the removed blobs and is fully deterministic.
inline binary_image ratio_preserving_clean(const binary_image& img,
                                           const structuring_element& se,
                                           double tolerance_pct = 2.0) {
    if (tolerance_pct < 0) throw std::invalid_argument("negative tolerance");
    binary_image out = close(open(img, se), se);
    const double total = static_cast<double>(img.height) * img.width;
    if (total == 0) return out;
    const double target_white = 100.0 * img.count() / total;
    const auto dist = detail::changed_distance(img, out);

    auto drift = [&] { return 100.0 * out.count() / total - target_white; };
    while (std::abs(drift()) > tolerance_pct) {
        const bool flip_white = drift() > 0;  // too much white -> flip white off
        long long best = -1;
        int best_dist = std::numeric_limits<int>::max();
        for (int r = 0; r < out.height; ++r)
            for (int c = 0; c < out.width; ++c) {
                if (out.at(r, c) != flip_white) continue;
                bool boundary = false;
                const int nr[4] = {r - 1, r + 1, r, r};
                const int nc[4] = {c, c, c - 1, c + 1};
                for (int k = 0; k < 4 && !boundary; ++k) {
                    const bool nb =
                        (nr[k] < 0 || nr[k] >= out.height || nc[k] < 0 ||
                         nc[k] >= out.width)
                            ? false
                            : out.at(nr[k], nc[k]);
                    if (nb != flip_white) boundary = true;
                }
                if (!boundary) continue;
                const int d = dist[static_cast<std::size_t>(r) * out.width + c];
                if (d < best_dist) {
                    best_dist = d;
                    best = static_cast<long long>(r) * out.width + c;
                }
            }
        if (best < 0) break;  // no boundary pixel left; restoration infeasible
        out.values[static_cast<std::size_t>(best)] = flip_white ? 0 : 1;
    }
    return out;
}

// Each grid cell opens iff the mean of its pixel block is >= 0.5.
inline facade_pattern snap_to_grid(const binary_image& img) {
    constexpr int rows = facade_pattern::rows, cols = facade_pattern::cols;
    if (img.height % rows != 0 || img.width % cols != 0)
        throw std::invalid_argument("snap_to_grid: image not divisible by grid");
    const int ph = img.height / rows, pw = img.width / cols;
    facade_pattern p;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            int on = 0;
            for (int i = 0; i < ph; ++i)
                for (int j = 0; j < pw; ++j) on += img.at(r * ph + i, c * pw + j);
            p.set(r, c, 2 * on >= ph * pw);
        }
    return p;
}

}  // namespace gendl
