#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "gendl/dataset.hpp"
#include "gendl/geometry.hpp"
#include "gendl/rng.hpp"

namespace gendl {

// Label encoding is alphabetical over the class names and must stay stable:
// datasets, checkpoints, and reports all store these integers.
enum class shape_class : int {
    i_beam = 0,
    l_shape = 1,
    rectangle = 2,
    square = 3,
    t_shape = 4,
    z_shape = 5,
};

inline constexpr int k_num_shape_classes = 6;
inline constexpr int k_shape_image_size = 100;

inline const char* shape_class_name(shape_class c) {
    switch (c) {
        case shape_class::i_beam: return "I";
        case shape_class::l_shape: return "L";
        case shape_class::rectangle: return "Rectangle";
        case shape_class::square: return "Square";
        case shape_class::t_shape: return "T";
        case shape_class::z_shape: return "Z";
    }
    throw std::invalid_argument("bad shape_class");
}

struct jitter_spec {
    double corner_radius = 4.0;
    double edge_nudge = 3.0;
    double scale_min = 0.5;
    double scale_max = 1.0;
};

namespace detail {

// Template vertices are either corners (jittered inside a disk) or mid-edge
// articulation points (nudged along the edge normal only).
struct template_vertex {
    vec2 pos;
    bool mid = false;
    vec2 axis{0.0, 0.0};  // unit displacement direction for mid points
};

// Canonical vertex lists in a 100x100 frame (x right, y down), all with at
// least a 5 px margin at default jitter. Aspect (bbox w/h) and fill
// (area/bbox) separate the classes:
//   I 0.24/1.00  L 0.56/0.69  Rectangle 2.00/1.00
//   Square 1.00/1.00  T 1.00/0.56  Z 1.61/0.62
inline std::vector<template_vertex> template_vertices(shape_class c) {
    switch (c) {
        case shape_class::i_beam:
            return {{{40, 8}},
                    {{60, 8}},
                    {{60, 50}, true, {1, 0}},
                    {{60, 92}},
                    {{40, 92}},
                    {{40, 50}, true, {-1, 0}}};
        case shape_class::l_shape:
            return {{{30, 14}}, {{52, 14}}, {{52, 64}},
                    {{70, 64}}, {{70, 86}}, {{30, 86}}};
        case shape_class::rectangle:
            return {{{10, 30}}, {{90, 30}}, {{90, 70}}, {{10, 70}}};
        case shape_class::square:
            return {{{20, 20}}, {{80, 20}}, {{80, 80}}, {{20, 80}}};
        case shape_class::t_shape:
            return {{{14, 14}}, {{86, 14}}, {{86, 38}}, {{62, 38}},
                    {{62, 86}}, {{38, 86}}, {{38, 38}}, {{14, 38}}};
        case shape_class::z_shape:
            return {{{5, 22}},  {{67, 22}}, {{67, 56}}, {{95, 56}},
                    {{95, 78}}, {{33, 78}}, {{33, 44}}, {{5, 44}}};
    }
    throw std::invalid_argument("bad shape_class");
}

}  // namespace detail

inline polygon canonical_template(shape_class c) {
    polygon p;
    for (const auto& v : detail::template_vertices(c)) p.vertices.push_back(v.pos);
    return p;
}

struct sampled_shape {
    polygon poly;
    double scale = 1.0;
};

// Jitters every template vertex, then scales the polygon about the frame
// center. Self-intersecting draws are rejected and re-sampled from a
// sub-seed; each retry re-draws everything including the scale.
inline sampled_shape sample_polygon_ex(shape_class c, const jitter_spec& jitter,
                                       std::uint64_t seed) {
    const auto tpl = detail::template_vertices(c);
    const vec2 center{k_shape_image_size / 2.0, k_shape_image_size / 2.0};
    for (int attempt = 0; attempt < 100; ++attempt) {
        rng r(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
        const double s = r.range(jitter.scale_min, jitter.scale_max);
        sampled_shape out;
        out.scale = s;
        for (const auto& v : tpl) {
            vec2 p = v.pos;
            if (v.mid) {
                const double d = r.range(-jitter.edge_nudge, jitter.edge_nudge);
                p = p + d * v.axis;
            } else {
                double dx = 0.0, dy = 0.0;
                r.in_disk(jitter.corner_radius, dx, dy);
                p.x += dx;
                p.y += dy;
            }
            out.poly.vertices.push_back(center + s * (p - center));
        }
        if (is_simple(out.poly)) return out;
    }
    throw std::runtime_error(std::string("sample_polygon: no simple polygon for ") +
                             shape_class_name(c) + " after 100 attempts");
}

inline polygon sample_polygon(shape_class c, const jitter_spec& jitter,
                              std::uint64_t seed) {
    return sample_polygon_ex(c, jitter, seed).poly;
}

// 6 * n_per_class samples with interleaved labels (sample i has label i % 6)
// and per-sample seeds derived from the master seed.
inline labeled_dataset synth_dataset(int n_per_class, const jitter_spec& jitter,
                                     std::uint64_t seed,
                                     int size = k_shape_image_size) {
    if (n_per_class < 0) throw std::invalid_argument("n_per_class < 0");
    labeled_dataset ds;
    const int total = n_per_class * k_num_shape_classes;
    for (int i = 0; i < total; ++i) {
        const auto cls = static_cast<shape_class>(i % k_num_shape_classes);
        const std::uint64_t si = derive_seed(seed, static_cast<std::uint64_t>(i));
        ds.add(rasterize(sample_polygon(cls, jitter, si), size).image,
               static_cast<int>(cls), si);
    }
    return ds;
}

struct freehand_spec {
    jitter_spec jitter{7.0, 5.0, 0.55, 0.95};
    int subdivisions = 8;         // extra points inserted per edge
    double wobble_min = 0.5;      // sine amplitude range, px
    double wobble_max = 2.0;
};

// Hand-drawn look-alike: heavier jitter plus a low-frequency sine ripple
// along each edge. Zero amplitude only adds collinear points, so the raster
// equals the plain jittered polygon.
inline polygon freehand_polygon(shape_class c, const freehand_spec& spec,
                                std::uint64_t seed) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        const polygon base = sample_polygon(
            c, spec.jitter, derive_seed(seed, 2 * static_cast<std::uint64_t>(attempt)));
        rng w(derive_seed(seed, 2 * static_cast<std::uint64_t>(attempt) + 1));
        polygon out;
        const std::size_t n = base.vertices.size();
        for (std::size_t i = 0; i < n; ++i) {
            const vec2 p = base.vertices[i];
            const vec2 q = base.vertices[(i + 1) % n];
            const double len = dist(p, q);
            const vec2 normal = len > 0 ? (1.0 / len) * vec2{q.y - p.y, p.x - q.x}
                                        : vec2{0.0, 0.0};
            const double amp = w.range(spec.wobble_min, spec.wobble_max);
            const double phase = w.range(0.0, 2.0 * std::numbers::pi);
            out.vertices.push_back(p);
            for (int k = 1; k < spec.subdivisions; ++k) {
                const double t = static_cast<double>(k) / spec.subdivisions;
                const double d = amp * std::sin(2.0 * std::numbers::pi * t + phase);
                out.vertices.push_back(p + t * (q - p) + d * normal);
            }
        }
        if (is_simple(out)) return out;
    }
    throw std::runtime_error(std::string("freehand_polygon: no simple polygon for ") +
                             shape_class_name(c) + " after 100 attempts");
}

inline labeled_dataset freehand_dataset(int n, const freehand_spec& spec,
                                        std::uint64_t seed,
                                        int size = k_shape_image_size) {
    if (n < 1) throw std::invalid_argument("freehand_dataset: n < 1");
    labeled_dataset ds;
    for (int i = 0; i < n; ++i) {
        const auto cls = static_cast<shape_class>(i % k_num_shape_classes);
        const std::uint64_t si = derive_seed(seed, static_cast<std::uint64_t>(i));
        ds.add(rasterize(freehand_polygon(cls, spec, si), size).image,
               static_cast<int>(cls), si);
    }
    return ds;
}

inline labeled_dataset freehand_dataset(int n, std::uint64_t seed) {
    return freehand_dataset(n, freehand_spec{}, seed);
}

// Foreground statistics used for the class separability check and for facade
// post-processing diagnostics.
struct shape_stats {
    int area = 0;           // foreground pixel count
    int bbox_w = 0, bbox_h = 0;
    double aspect = 0.0;    // bbox_w / bbox_h
    double fill = 0.0;      // area / (bbox_w * bbox_h)
};

inline shape_stats measure_shape(const image_grid& img, float threshold = 0.5f) {
    shape_stats s;
    int r0 = img.height, r1 = -1, c0 = img.width, c1 = -1;
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            if (img.at(r, c) > threshold) {
                ++s.area;
                r0 = std::min(r0, r);
                r1 = std::max(r1, r);
                c0 = std::min(c0, c);
                c1 = std::max(c1, c);
            }
    if (s.area == 0) return s;
    s.bbox_w = c1 - c0 + 1;
    s.bbox_h = r1 - r0 + 1;
    s.aspect = static_cast<double>(s.bbox_w) / s.bbox_h;
    s.fill = static_cast<double>(s.area) / (s.bbox_w * s.bbox_h);
    return s;
}

// Aspect/fill envelopes measured over 1000 default-jitter samples per class
// (observed: I aspect 0.19-0.33 fill 0.69-0.98, L 0.47-0.69 / 0.53-0.75,
// Rectangle 1.64-2.33 / 0.83-1.00, Square 0.87-1.15 / 0.86-1.00,
// T 0.86-1.16 / 0.45-0.61, Z 1.39-1.88 / 0.51-0.65) and widened by a safety
// margin. Every class pair is disjoint in at least one of the two
// dimensions: aspect separates everything except Square/T (fill) and the
// Rectangle/Z overlap zone (fill).
struct class_envelope {
    double aspect_min, aspect_max;
    double fill_min, fill_max;
};

inline class_envelope default_jitter_envelope(shape_class c) {
    switch (c) {
        case shape_class::i_beam:    return {0.14, 0.39, 0.60, 1.00};
        case shape_class::l_shape:   return {0.43, 0.74, 0.45, 0.80};
        case shape_class::rectangle: return {1.45, 2.50, 0.78, 1.00};
        case shape_class::square:    return {0.81, 1.23, 0.80, 1.00};
        case shape_class::t_shape:   return {0.81, 1.23, 0.40, 0.66};
        case shape_class::z_shape:   return {1.30, 2.00, 0.44, 0.71};
    }
    throw std::invalid_argument("bad shape_class");
}

}  // namespace gendl
