#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gendl/image.hpp"
#include "gendl/rng.hpp"

namespace gendl {

// Parallel arrays of images, integer labels, and the per-sample seeds that
// produced them. Filenames are assigned on save and preserved on load.
struct labeled_dataset {
    std::vector<image_grid> images;
    std::vector<int> labels;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> filenames;

    std::size_t size() const { return images.size(); }

    void add(image_grid img, int label, std::uint64_t seed,
             std::string filename = {}) {
        images.push_back(std::move(img));
        labels.push_back(label);
        seeds.push_back(seed);
        filenames.push_back(std::move(filename));
    }

    bool consistent() const {
        return labels.size() == images.size() &&
               seeds.size() == images.size() &&
               filenames.size() == images.size();
    }
};

inline std::string default_sample_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "shape_%06zu.pgm", index);
    return buf;
}

inline std::string manifest_csv(const labeled_dataset& ds) {
    std::string out = "filename,label,seed\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::string& name =
            ds.filenames[i].empty() ? default_sample_name(i) : ds.filenames[i];
        out += name;
        out += ',';
        out += std::to_string(ds.labels[i]);
        out += ',';
        out += std::to_string(ds.seeds[i]);
        out += '\n';
    }
    return out;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

// Writes one PGM per sample plus manifest.csv; fills in default filenames for
// samples that lack one.
inline void save_dataset(const std::filesystem::path& dir, labeled_dataset& ds) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.filenames[i].empty()) ds.filenames[i] = default_sample_name(i);
        write_pgm(ds.images[i], (dir / ds.filenames[i]).string());
    }
    write_text_file(dir / "manifest.csv", manifest_csv(ds));
}

inline labeled_dataset load_dataset(const std::filesystem::path& dir) {
    labeled_dataset ds;
    std::istringstream in(read_text_file(dir / "manifest.csv"));
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line)[0] != "filename")
        throw std::runtime_error("bad manifest header in " + dir.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 3)
            throw std::runtime_error("bad manifest row: " + line);
        ds.add(read_pgm((dir / f[0]).string()), std::stoi(f[1]),
               std::stoull(f[2]), f[0]);
    }
    return ds;
}

// Deterministic stratified split: samples of each class are shuffled with a
// seed derived per class, then the first train_parts of every
// (train_parts + val_parts) block go to training.
struct split_indices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

inline split_indices stratified_split(const std::vector<int>& labels,
                                      int num_classes, int train_parts,
                                      int val_parts, std::uint64_t seed) {
    split_indices out;
    for (int c = 0; c < num_classes; ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) idx.push_back(i);
        rng r(derive_seed(seed, 0x53504C4954ULL + static_cast<std::uint64_t>(c)));
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[r.below(i)]);
        const std::size_t period =
            static_cast<std::size_t>(train_parts + val_parts);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (k % period < static_cast<std::size_t>(train_parts))
                out.train.push_back(idx[k]);
            else
                out.val.push_back(idx[k]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    return out;
}

}  // namespace gendl
