#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "gendl/dataset.hpp"
#include "gendl/facade.hpp"
#include "gendl/rng.hpp"

namespace gendl {

// Axis convention: x east along the facade, y north into the room, z up.
// The glazed south facade lies in the plane y = 0.
struct room_model {
    double width = 10.0;   // facade length, m (x)
    double depth = 10.0;   // room depth, m (y)
    double height = 4.0;   // wall height, m (z)
    double cell = 0.5;     // facade cell edge, m
    double margin = 0.5;   // horizontal facade margin, m
    double sensor_height = 0.75;
    double sensor_spacing = 0.6;
    int sensors_per_axis = 16;

    // Cell centers: columns run east with a 0.5 m side margin; rows span the
    // full 0-4 m wall height (the margin is horizontal only), row 0 at top.
    double cell_x(int c) const { return margin + cell * (c + 0.5); }
    double cell_z(int r) const { return height - cell * (r + 0.5); }

    double sensor_x(int ix) const { return 0.5 + sensor_spacing * ix; }
    double sensor_y(int iy) const { return 0.5 + sensor_spacing * iy; }
};

struct sun_position {
    double altitude_deg = 0.0;
    double azimuth_deg = 0.0;  // clockwise from north
};

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

// Declination/hour-angle solar geometry for local solar time.
inline sun_position sun_at(double latitude_deg, int day_of_year,
                           double solar_hour) {
    if (day_of_year < 1 || day_of_year > 365)
        throw std::invalid_argument("sun_at: day outside [1,365]");
    if (solar_hour < 0.0 || solar_hour >= 24.0)
        throw std::invalid_argument("sun_at: hour outside [0,24)");
    const double decl =
        deg2rad(23.45 * std::sin(deg2rad(360.0 * (284 + day_of_year) / 365.0)));
    const double hour_angle = deg2rad(15.0 * (solar_hour - 12.0));
    const double lat = deg2rad(latitude_deg);
    const double sin_alt = std::sin(lat) * std::sin(decl) +
                           std::cos(lat) * std::cos(decl) * std::cos(hour_angle);
    const double alt = std::asin(std::clamp(sin_alt, -1.0, 1.0));
    sun_position sp;
    sp.altitude_deg = rad2deg(alt);
    const double cos_alt = std::cos(alt);
    if (cos_alt < 1e-12) {
        sp.azimuth_deg = 180.0;  // zenith: azimuth is arbitrary
        return sp;
    }
    const double cos_az =
        std::clamp((std::sin(decl) * std::cos(lat) -
                    std::cos(decl) * std::sin(lat) * std::cos(hour_angle)) /
                       cos_alt,
                   -1.0, 1.0);
    double az = rad2deg(std::acos(cos_az));
    if (hour_angle > 0.0) az = 360.0 - az;  // afternoon: west of north
    sp.azimuth_deg = az == 360.0 ? 0.0 : az;
    return sp;
}

struct sky_step {
    int month = 1;
    int day_of_year = 15;
    double hour = 12.0;
    double dni_lux = 80000.0;   // direct normal illuminance
    double edv_lux = 25000.0;   // diffuse vertical facade illuminance
};

struct sky_schedule {
    double latitude_deg = 29.76;
    std::vector<sky_step> steps;
};

// One representative day (the 15th) per month, hours 08:00-18:00 inclusive:
// 12 x 11 = 132 timesteps under fixed clear-sky constants. The diffuse
// constant is calibrated so the nested pattern sequences span all five
// performance labels (all-open tops out near sDA 98).
inline sky_schedule default_schedule(double dni = 80000.0, double edv = 25000.0) {
    static constexpr int day15[12] = {15,  46,  74,  105, 135, 166,
                                      196, 227, 258, 288, 319, 349};
    sky_schedule s;
    for (int m = 1; m <= 12; ++m)
        for (int h = 8; h <= 18; ++h)
            s.steps.push_back({m, day15[m - 1], static_cast<double>(h), dni, edv});
    return s;
}

inline std::string schedule_csv(const sky_schedule& s) {
    std::string out = "month,hour,altitude_deg,azimuth_deg,dni_lux,edv_lux\n";
    char buf[160];
    for (const auto& st : s.steps) {
        const auto sp = sun_at(s.latitude_deg, st.day_of_year, st.hour);
        std::snprintf(buf, sizeof(buf), "%d,%.1f,%.4f,%.4f,%.1f,%.1f\n", st.month,
                      st.hour, sp.altitude_deg, sp.azimuth_deg, st.dni_lux,
                      st.edv_lux);
        out += buf;
    }
    return out;
}

// Direct + sky-diffuse illuminance at one sensor. The diffuse term treats
// every open cell as a uniform diffuse emitter of luminance E_dv/pi over its
// 0.25 m^2 area; the direct term requires the sun above the horizon, within
// 90 degrees of due south, and visible through an open cell.
inline double sensor_illuminance(const room_model& room,
                                 const facade_pattern& pattern, double sx,
                                 double sy, double sz, const sun_position& sun,
                                 double dni, double edv) {
    double e_diffuse = 0.0;
    const double area = room.cell * room.cell;
    for (int r = 0; r < facade_pattern::rows; ++r)
        for (int c = 0; c < facade_pattern::cols; ++c) {
            if (!pattern.at(r, c)) continue;
            const double dx = sx - room.cell_x(c);
            const double dy = sy;  // cell sits on the y=0 plane
            const double dz = sz - room.cell_z(r);
            const double r2 = dx * dx + dy * dy + dz * dz;
            const double dist = std::sqrt(r2);
            const double cos_cell = dy / dist;          // facade normal (0,1,0)
            const double cos_sensor = -dz / dist;       // sensor normal (0,0,1)
            if (cos_cell <= 0.0 || cos_sensor <= 0.0) continue;
            e_diffuse += (edv / std::numbers::pi) * area * cos_cell * cos_sensor / r2;
        }

    double e_direct = 0.0;
    if (sun.altitude_deg > 0.0 && std::abs(sun.azimuth_deg - 180.0) < 90.0) {
        const double alt = deg2rad(sun.altitude_deg);
        const double az = deg2rad(sun.azimuth_deg);
        const double dx = std::cos(alt) * std::sin(az);
        const double dy = std::cos(alt) * std::cos(az);
        const double dz = std::sin(alt);
        if (dy < 0.0) {  // ray from sensor toward the sun heads to y=0
            const double t = -sy / dy;
            const double hit_x = sx + t * dx;
            const double hit_z = sz + t * dz;
            const int c = static_cast<int>(std::floor((hit_x - room.margin) / room.cell));
            const int r = static_cast<int>(std::floor((room.height - hit_z) / room.cell));
            if (c >= 0 && c < facade_pattern::cols && r >= 0 &&
                r < facade_pattern::rows && pattern.at(r, c))
                e_direct = dni * std::sin(alt);
        }
    }
    return e_diffuse + e_direct;
}

struct sda_result {
    std::vector<double> da;  // per sensor, fraction of timesteps >= 300 lux
    double sda_pct = 0.0;
    char label = 'A';
};

inline char label_of(double sda_pct) {
    if (sda_pct < 0.0 || sda_pct > 100.0)
        throw std::invalid_argument("label_of: sDA outside [0,100]");
    if (sda_pct < 20.0) return 'A';
    if (sda_pct < 40.0) return 'B';
    if (sda_pct < 60.0) return 'C';
    if (sda_pct < 80.0) return 'D';
    return 'E';
}

inline int label_index(char label) {
    if (label < 'A' || label > 'E') throw std::invalid_argument("bad label");
    return label - 'A';
}

// Precomputes the per-(sensor, cell) diffuse coefficients and the per-step
// direct-view cell of each sensor, so scoring one pattern is a table walk.
// Summation runs in ascending cell order, which together with float
// rounding monotonicity makes sDA non-decreasing along nested patterns.
class sda_engine {
  public:
    sda_engine(const room_model& room, const sky_schedule& schedule)
        : room_(room), schedule_(schedule) {
        const int ns = room.sensors_per_axis * room.sensors_per_axis;
        const int nc = facade_pattern::cell_count;
        diffuse_coeff_.assign(static_cast<std::size_t>(ns) * nc, 0.0);
        for (int s = 0; s < ns; ++s) {
            const double sx = room.sensor_x(s % room.sensors_per_axis);
            const double sy = room.sensor_y(s / room.sensors_per_axis);
            const double sz = room.sensor_height;
            for (int r = 0; r < facade_pattern::rows; ++r)
                for (int c = 0; c < facade_pattern::cols; ++c) {
                    const double dx = sx - room.cell_x(c);
                    const double dy = sy;
                    const double dz = sz - room.cell_z(r);
                    const double r2 = dx * dx + dy * dy + dz * dz;
                    const double dist = std::sqrt(r2);
                    const double cos_cell = dy / dist;
                    const double cos_sensor = -dz / dist;
                    if (cos_cell <= 0.0 || cos_sensor <= 0.0) continue;
                    diffuse_coeff_[static_cast<std::size_t>(s) * nc +
                                   r * facade_pattern::cols + c] =
                        (1.0 / std::numbers::pi) * room.cell * room.cell *
                        cos_cell * cos_sensor / r2;
                }
        }

        direct_cell_.assign(schedule.steps.size() * static_cast<std::size_t>(ns), -1);
        direct_lux_.assign(schedule.steps.size(), 0.0);
        for (std::size_t t = 0; t < schedule.steps.size(); ++t) {
            const auto& st = schedule.steps[t];
            const auto sun = sun_at(schedule.latitude_deg, st.day_of_year, st.hour);
            if (!(sun.altitude_deg > 0.0 &&
                  std::abs(sun.azimuth_deg - 180.0) < 90.0))
                continue;
            const double alt = deg2rad(sun.altitude_deg);
            const double az = deg2rad(sun.azimuth_deg);
            const double dx = std::cos(alt) * std::sin(az);
            const double dy = std::cos(alt) * std::cos(az);
            const double dz = std::sin(alt);
            if (dy >= 0.0) continue;
            direct_lux_[t] = st.dni_lux * std::sin(alt);
            for (int s = 0; s < ns; ++s) {
                const double sx = room.sensor_x(s % room.sensors_per_axis);
                const double sy = room.sensor_y(s / room.sensors_per_axis);
                const double sz = room.sensor_height;
                const double tt = -sy / dy;
                const double hit_x = sx + tt * dx;
                const double hit_z = sz + tt * dz;
                const int c = static_cast<int>(
                    std::floor((hit_x - room.margin) / room.cell));
                const int r = static_cast<int>(
                    std::floor((room.height - hit_z) / room.cell));
                if (c >= 0 && c < facade_pattern::cols && r >= 0 &&
                    r < facade_pattern::rows)
                    direct_cell_[t * ns + s] = r * facade_pattern::cols + c;
            }
        }
    }

    const room_model& room() const { return room_; }
    const sky_schedule& schedule() const { return schedule_; }

    sda_result compute(const facade_pattern& pattern) const {
        if (schedule_.steps.empty())
            throw std::invalid_argument("compute_sda: empty schedule");
        const int ns = room_.sensors_per_axis * room_.sensors_per_axis;
        const int nc = facade_pattern::cell_count;
        sda_result res;
        res.da.assign(static_cast<std::size_t>(ns), 0.0);
        int sensors_ok = 0;
        for (int s = 0; s < ns; ++s) {
            double diffuse_base = 0.0;
            for (int cell = 0; cell < nc; ++cell)
                if (pattern.open[cell])
                    diffuse_base +=
                        diffuse_coeff_[static_cast<std::size_t>(s) * nc + cell];
            int hits = 0;
            for (std::size_t t = 0; t < schedule_.steps.size(); ++t) {
                double e = diffuse_base * schedule_.steps[t].edv_lux;
                const int dc = direct_cell_[t * ns + s];
                if (dc >= 0 && pattern.open[dc]) e += direct_lux_[t];
                if (e >= 300.0) ++hits;
            }
            res.da[s] = static_cast<double>(hits) / schedule_.steps.size();
            if (res.da[s] >= 0.5) ++sensors_ok;
        }
        res.sda_pct = 100.0 * sensors_ok / ns;
        res.label = label_of(res.sda_pct);
        return res;
    }

  private:
    room_model room_;
    sky_schedule schedule_;
    std::vector<double> diffuse_coeff_;
    std::vector<int> direct_cell_;
    std::vector<double> direct_lux_;
};

inline sda_result compute_sda(const room_model& room,
                              const facade_pattern& pattern,
                              const sky_schedule& schedule) {
    return sda_engine(room, schedule).compute(pattern);
}

// Seeded permutation of the 144 cells; pattern k opens its first k+1 cells,
// so the 143 patterns are nested.
inline std::vector<facade_pattern> run_sequence(std::uint64_t seed) {
    std::vector<int> perm(facade_pattern::cell_count);
    for (int i = 0; i < facade_pattern::cell_count; ++i) perm[i] = i;
    rng r(derive_seed(seed, 0xFACADEULL));
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[r.below(i)]);
    std::vector<facade_pattern> out(143);
    facade_pattern acc;
    for (int k = 0; k < 143; ++k) {
        acc.open[perm[k]] = 1;
        out[k] = acc;
    }
    return out;
}

// One scored entry of the facade training corpus.
struct facade_sample {
    std::uint64_t seed = 0;
    int run = 0;  // index within the seed's nested sequence
    facade_pattern pattern;
    double wwr_pct = 0.0;
    double sda_pct = 0.0;
    char label = 'A';
};

struct facade_dataset {
    std::vector<facade_sample> samples;

    std::size_t size() const { return samples.size(); }

    static std::string sample_name(std::uint64_t seed, int run) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "facade_%llu_%03d.pgm",
                      static_cast<unsigned long long>(seed), run);
        return buf;
    }

    std::string manifest_csv() const {
        std::string out = "seed,run,wwr_pct,sda_pct,label,filename\n";
        char line[160];
        for (const auto& s : samples) {
            std::snprintf(line, sizeof(line), "%llu,%d,%.6f,%.6f,%c,%s\n",
                          static_cast<unsigned long long>(s.seed), s.run,
                          s.wwr_pct, s.sda_pct, s.label,
                          sample_name(s.seed, s.run).c_str());
            out += line;
        }
        return out;
    }

    // GAN-ready view: 4 px/cell rasters with labels A..E mapped to 0..4.
    labeled_dataset to_labeled(int px_per_cell = 4) const {
        labeled_dataset out;
        for (const auto& s : samples)
            out.add(rasterize_pattern(s.pattern, px_per_cell),
                    label_index(s.label), s.seed, sample_name(s.seed, s.run));
        return out;
    }
};

// Scores every pattern of every seed's nested sequence against the schedule.
// The default four seeds yield 4 x 143 = 572 samples.
inline facade_dataset synth_facade_dataset(
    const std::vector<std::uint64_t>& seeds, const room_model& room,
    const sky_schedule& schedule) {
    if (seeds.empty())
        throw std::invalid_argument("synth_facade_dataset: need at least one seed");
    const sda_engine engine(room, schedule);
    facade_dataset out;
    out.samples.reserve(seeds.size() * 143);
    for (const auto seed : seeds) {
        const auto patterns = run_sequence(seed);
        for (std::size_t k = 0; k < patterns.size(); ++k) {
            facade_sample s;
            s.seed = seed;
            s.run = static_cast<int>(k);
            s.pattern = patterns[k];
            s.wwr_pct = wwr(patterns[k]);
            const auto r = engine.compute(patterns[k]);
            s.sda_pct = r.sda_pct;
            s.label = r.label;
            out.samples.push_back(std::move(s));
        }
    }
    return out;
}

inline facade_dataset synth_facade_dataset() {
    return synth_facade_dataset({0, 1, 2, 3}, room_model{}, default_schedule());
}

inline void save_facade_dataset(const facade_dataset& ds,
                                const std::filesystem::path& dir,
                                int px_per_cell = 4) {
    std::filesystem::create_directories(dir);
    for (const auto& s : ds.samples)
        write_pgm(rasterize_pattern(s.pattern, px_per_cell),
                  (dir / facade_dataset::sample_name(s.seed, s.run)).string());
    write_text_file(dir / "manifest.csv", ds.manifest_csv());
}

// Inverse of save_facade_dataset: scores come from the manifest, patterns
// from the block rasters (one sample per block, so any integer pixel scale
// round-trips exactly).
inline facade_dataset load_facade_dataset(const std::filesystem::path& dir) {
    facade_dataset ds;
    std::istringstream in(read_text_file(dir / "manifest.csv"));
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line)[0] != "seed")
        throw std::runtime_error("bad facade manifest header in " + dir.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 6 || f[4].size() != 1)
            throw std::runtime_error("bad facade manifest row: " + line);
        facade_sample s;
        s.seed = std::stoull(f[0]);
        s.run = std::stoi(f[1]);
        s.wwr_pct = std::stod(f[2]);
        s.sda_pct = std::stod(f[3]);
        s.label = f[4][0];
        (void)label_index(s.label);  // rejects labels outside A..E
        const image_grid img = read_pgm((dir / f[5]).string());
        if (img.height % facade_pattern::rows != 0 ||
            img.width % facade_pattern::cols != 0 ||
            img.height / facade_pattern::rows != img.width / facade_pattern::cols ||
            img.height < facade_pattern::rows)
            throw std::runtime_error("facade raster has bad geometry: " + f[5]);
        const int px = img.height / facade_pattern::rows;
        for (int r = 0; r < facade_pattern::rows; ++r)
            for (int c = 0; c < facade_pattern::cols; ++c)
                s.pattern.set(r, c, img.at(r * px, c * px) >= 0.5f);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace gendl
