#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gendl/acgan.hpp"
#include "gendl/daylight.hpp"
#include "gendl/morphology.hpp"

namespace gendl {

// One row of the facade evaluation table: the label's reference WWR/sDA
// ranges measured over the synthesized corpus, the mean WWR and surrogate
// sDA of post-processed generated samples, and the labels those two numbers
// predict.
struct table1_row {
    char label = 'A';
    double psg_wwr_min = 0.0, psg_wwr_max = 0.0;
    double psg_sda_min = 0.0, psg_sda_max = 0.0;
    double gen_wwr_pct = 0.0;
    double gen_sda_pct = 0.0;
    char label_from_wwr = 'A';
    char label_from_sda = 'A';
};

struct table1_report {
    std::vector<table1_row> rows;  // exactly one per label A..E

    std::string csv() const {
        std::string out =
            "label,psg_wwr_min,psg_wwr_max,psg_sda_min,psg_sda_max,"
            "gen_wwr_pct,gen_sda_pct,label_from_wwr,label_from_sda\n";
        char line[256];
        for (const auto& r : rows) {
            std::snprintf(line, sizeof(line),
                          "%c,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%c,%c\n", r.label,
                          r.psg_wwr_min, r.psg_wwr_max, r.psg_sda_min,
                          r.psg_sda_max, r.gen_wwr_pct, r.gen_sda_pct,
                          r.label_from_wwr, r.label_from_sda);
            out += line;
        }
        return out;
    }
};

struct label_range {
    double wwr_min = std::numeric_limits<double>::infinity();
    double wwr_max = -std::numeric_limits<double>::infinity();
    double sda_min = std::numeric_limits<double>::infinity();
    double sda_max = -std::numeric_limits<double>::infinity();
    int count = 0;
};

// Per-label WWR/sDA envelopes over the synthesized corpus; every label must
// be populated or the reference columns would be meaningless.
inline std::vector<label_range> psg_label_ranges(const facade_dataset& ds) {
    std::vector<label_range> ranges(5);
    for (const auto& s : ds.samples) {
        auto& r = ranges[static_cast<std::size_t>(label_index(s.label))];
        r.wwr_min = std::min(r.wwr_min, s.wwr_pct);
        r.wwr_max = std::max(r.wwr_max, s.wwr_pct);
        r.sda_min = std::min(r.sda_min, s.sda_pct);
        r.sda_max = std::max(r.sda_max, s.sda_pct);
        ++r.count;
    }
    for (int k = 0; k < 5; ++k)
        if (ranges[static_cast<std::size_t>(k)].count == 0)
            throw std::runtime_error(
                std::string("psg_label_ranges: no samples with label ") +
                static_cast<char>('A' + k));
    return ranges;
}

// Label whose measured WWR range covers the value; overlaps resolve to the
// nearest range center, misses to the nearest range edge, ties to the
// earlier label.
inline char label_from_wwr(double wwr_pct,
                           const std::vector<label_range>& ranges) {
    if (ranges.size() != 5)
        throw std::invalid_argument("label_from_wwr: need 5 label ranges");
    int best = -1;
    double best_key = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 5; ++k) {
        const auto& r = ranges[static_cast<std::size_t>(k)];
        const bool inside = wwr_pct >= r.wwr_min && wwr_pct <= r.wwr_max;
        if (!inside) continue;
        const double key = std::abs(wwr_pct - 0.5 * (r.wwr_min + r.wwr_max));
        if (key < best_key) {
            best_key = key;
            best = k;
        }
    }
    if (best < 0) {
        for (int k = 0; k < 5; ++k) {
            const auto& r = ranges[static_cast<std::size_t>(k)];
            const double key = wwr_pct < r.wwr_min ? r.wwr_min - wwr_pct
                                                   : wwr_pct - r.wwr_max;
            if (key < best_key) {
                best_key = key;
                best = k;
            }
        }
    }
    return static_cast<char>('A' + best);
}

// A generator whose batch-norm running statistics still sit at their
// initialization has never completed a training step.
inline bool generator_is_trained(conditional_generator& gen) {
    bool saw_bn = false;
    for (auto& l : gen.net().layers) {
        auto* bn = dynamic_cast<batch_norm<float>*>(l.get());
        if (!bn) continue;
        saw_bn = true;
        const auto st = bn->state();  // gamma, beta, running mean, running var
        for (float v : st[2]->v)
            if (v != 0.0f) return true;
        for (float v : st[3]->v)
            if (v != 1.0f) return true;
    }
    return !saw_bn;
}

// Generates n samples per label, post-processes each back onto the cell grid
// (threshold, morphological cleanup, block snap) and evaluates the mean WWR
// and surrogate sDA against the corpus reference ranges.
inline table1_report make_table1_report(conditional_generator& gen,
                                        const facade_dataset& psg,
                                        const sda_engine& engine,
                                        int n_per_label = 16,
                                        std::uint64_t seed = 42) {
    if (n_per_label < 1)
        throw std::invalid_argument("make_table1_report: n_per_label must be >= 1");
    if (gen.class_count() != 5)
        throw std::invalid_argument(
            "make_table1_report: generator has " +
            std::to_string(gen.class_count()) + " classes, expected 5");
    if (!generator_is_trained(gen))
        throw std::invalid_argument("make_table1_report: untrained generator");

    const auto ranges = psg_label_ranges(psg);
    const auto se = structuring_element::cross3();
    table1_report rep;
    for (int k = 0; k < 5; ++k) {
        auto imgs = generate(gen, k, n_per_label,
                             derive_seed(seed, 0x7AB1E00ULL +
                                                   static_cast<std::uint64_t>(k)));
        double wwr_acc = 0.0, sda_acc = 0.0;
        for (const auto& img : imgs) {
            const auto pattern =
                snap_to_grid(ratio_preserving_clean(binarize(img), se, 2.0));
            wwr_acc += wwr(pattern);
            sda_acc += engine.compute(pattern).sda_pct;
        }
        table1_row row;
        row.label = static_cast<char>('A' + k);
        const auto& r = ranges[static_cast<std::size_t>(k)];
        row.psg_wwr_min = r.wwr_min;
        row.psg_wwr_max = r.wwr_max;
        row.psg_sda_min = r.sda_min;
        row.psg_sda_max = r.sda_max;
        row.gen_wwr_pct = wwr_acc / n_per_label;
        row.gen_sda_pct = sda_acc / n_per_label;
        row.label_from_wwr = label_from_wwr(row.gen_wwr_pct, ranges);
        row.label_from_sda = label_of(row.gen_sda_pct);
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace gendl
