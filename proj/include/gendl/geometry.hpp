#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gendl/image.hpp"

namespace gendl {

struct vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline vec2 operator+(vec2 a, vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline vec2 operator-(vec2 a, vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline vec2 operator*(double s, vec2 a) { return {s * a.x, s * a.y}; }
inline double dist(vec2 a, vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Closed polygon in image coordinates (x right, y down), implicit last->first
// edge. No simplicity guarantee by itself; see is_simple().
struct polygon {
    std::vector<vec2> vertices;

    double signed_area() const {
        double a = 0.0;
        const size_t n = vertices.size();
        for (size_t i = 0; i < n; ++i) {
            const vec2& p = vertices[i];
            const vec2& q = vertices[(i + 1) % n];
            a += p.x * q.y - q.x * p.y;
        }
        return 0.5 * a;
    }

    void bounds(double& x0, double& y0, double& x1, double& y1) const {
        x0 = y0 = 1e300;
        x1 = y1 = -1e300;
        for (const vec2& v : vertices) {
            x0 = std::min(x0, v.x);
            y0 = std::min(y0, v.y);
            x1 = std::max(x1, v.x);
            y1 = std::max(y1, v.y);
        }
    }
};

namespace detail {

// Proper or improper intersection of segments ab and cd, excluding shared
// endpoints of adjacent edges (the caller filters adjacency).
inline bool segments_intersect(vec2 a, vec2 b, vec2 c, vec2 d) {
    auto cross = [](vec2 o, vec2 p, vec2 q) {
        return (p.x - o.x) * (q.y - o.y) - (p.y - o.y) * (q.x - o.x);
    };
    const double d1 = cross(c, d, a);
    const double d2 = cross(c, d, b);
    const double d3 = cross(a, b, c);
    const double d4 = cross(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    auto on_segment = [](vec2 p, vec2 q, vec2 r) {
        return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) &&
               std::min(p.y, q.y) <= r.y && r.y <= std::max(p.y, q.y);
    };
    if (d1 == 0 && on_segment(c, d, a)) return true;
    if (d2 == 0 && on_segment(c, d, b)) return true;
    if (d3 == 0 && on_segment(a, b, c)) return true;
    if (d4 == 0 && on_segment(a, b, d)) return true;
    return false;
}

}  // namespace detail

// True when no two non-adjacent edges touch. Adjacent edges only share their
// common vertex, so collinear articulation points are allowed.
inline bool is_simple(const polygon& poly) {
    const size_t n = poly.vertices.size();
    if (n < 3) return false;
    for (size_t i = 0; i < n; ++i) {
        const vec2 a = poly.vertices[i];
        const vec2 b = poly.vertices[(i + 1) % n];
        if (a.x == b.x && a.y == b.y) return false;  // zero-length edge
        for (size_t j = i + 1; j < n; ++j) {
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            const vec2 c = poly.vertices[j];
            const vec2 d = poly.vertices[(j + 1) % n];
            if (detail::segments_intersect(a, b, c, d)) return false;
        }
    }
    return true;
}

// Even-odd test: counts edge crossings strictly to the right of the point.
// Shared convention with rasterize() below, so both agree on boundary ties.
inline bool point_in_polygon(const polygon& poly, double px, double py) {
    bool inside = false;
    const size_t n = poly.vertices.size();
    for (size_t i = 0; i < n; ++i) {
        const vec2& p = poly.vertices[i];
        const vec2& q = poly.vertices[(i + 1) % n];
        if ((p.y > py) != (q.y > py)) {
            const double xc = p.x + (py - p.y) * (q.x - p.x) / (q.y - p.y);
            if (xc > px) inside = !inside;
        }
    }
    return inside;
}

struct raster_result {
    image_grid image;
    bool degenerate = false;  // zero-area input -> all-background output
};

// Scanline even-odd fill over pixel centers (x + 0.5, y + 0.5). Foreground is
// 1.0, background 0.0, no antialiasing. Equivalent to point_in_polygon() at
// every pixel center.
inline raster_result rasterize(const polygon& poly, int height, int width) {
    raster_result res;
    res.image = image_grid(height, width, 0.0f);
    if (poly.vertices.size() < 3 || poly.signed_area() == 0.0) {
        res.degenerate = true;
        return res;
    }
    const size_t n = poly.vertices.size();
    std::vector<double> xs;
    for (int y = 0; y < height; ++y) {
        const double cy = y + 0.5;
        xs.clear();
        for (size_t i = 0; i < n; ++i) {
            const vec2& p = poly.vertices[i];
            const vec2& q = poly.vertices[(i + 1) % n];
            if ((p.y > cy) != (q.y > cy))
                xs.push_back(p.x + (cy - p.y) * (q.x - p.x) / (q.y - p.y));
        }
        std::sort(xs.begin(), xs.end());
        for (size_t k = 0; k + 1 < xs.size(); k += 2) {
            // pixel centers in [xs[k], xs[k+1])
            int first = static_cast<int>(std::ceil(xs[k] - 0.5));
            int last = static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1;
            first = std::max(first, 0);
            last = std::min(last, width - 1);
            for (int x = first; x <= last; ++x) res.image.at(y, x) = 1.0f;
        }
    }
    return res;
}

inline raster_result rasterize(const polygon& poly, int size) {
    return rasterize(poly, size, size);
}

}  // namespace gendl
