#include "digit/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "digit/common.hpp"
#include "digit/serialize.hpp"

namespace digit {

void GeneratorSpec::validate() const {
    if (class_count < 2) throw std::invalid_argument("GeneratorSpec: at least 2 classes required");
    if (class_count > 8) throw std::invalid_argument("GeneratorSpec: at most 8 shape kinds defined");
    if (side < 16) throw std::invalid_argument("GeneratorSpec: image side must be >= 16");
    if (channels < 1) throw std::invalid_argument("GeneratorSpec: channels must be >= 1");
    if (noise_sigma < 0.0) throw std::invalid_argument("GeneratorSpec: noise_sigma must be >= 0");
    if (!(fg_min <= fg_max) || !(bg_min <= bg_max) || !(scale_min <= scale_max))
        throw std::invalid_argument("GeneratorSpec: invalid range (min > max)");
    if (scale_min <= 0.0 || scale_max > 1.0)
        throw std::invalid_argument("GeneratorSpec: scale range must lie in (0, 1]");
    if (jitter_frac < 0.0 || jitter_frac > 0.4)
        throw std::invalid_argument("GeneratorSpec: jitter_frac must lie in [0, 0.4]");
}

namespace {

// Shape kinds, in label order: solid rectangle, rectangle frame, disk, ring,
// cross, horizontal stripes, vertical stripes, checkerboard. Classes are
// chosen to have distinct local texture so patch-level encoders can tell
// them apart.
struct ShapeParams {
    double cx, cy;        // center in pixels
    double ax, ay;        // half extents in pixels
    double angle;         // rotation, radians
    double period, phase; // stripes / checker
    double fg, bg;
};

bool inside(int kind, double u, double v, const ShapeParams& p) {
    switch (kind) {
        case 0:  // solid rectangle
            return std::abs(u) <= p.ax && std::abs(v) <= p.ay;
        case 1: {  // frame
            const bool outer = std::abs(u) <= p.ax && std::abs(v) <= p.ay;
            const bool inner = std::abs(u) <= p.ax * 0.55 && std::abs(v) <= p.ay * 0.55;
            return outer && !inner;
        }
        case 2: {  // disk
            const double r = (u / p.ax) * (u / p.ax) + (v / p.ay) * (v / p.ay);
            return r <= 1.0;
        }
        case 3: {  // ring
            const double r = (u / p.ax) * (u / p.ax) + (v / p.ay) * (v / p.ay);
            return r <= 1.0 && r >= 0.45;
        }
        case 4: {  // cross
            const bool inbox = std::abs(u) <= p.ax && std::abs(v) <= p.ay;
            const double bar = 0.3;
            return inbox && (std::abs(u) <= bar * p.ax || std::abs(v) <= bar * p.ay);
        }
        default:
            return false;
    }
}

ImageGrid render(int kind, const ShapeParams& p, int side, int channels, double sigma, Rng& rng) {
    ImageGrid img(side, side, channels);
    const double ca = std::cos(p.angle), sa = std::sin(p.angle);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            double val = p.bg;
            if (kind <= 4) {
                const double dx = x - p.cx, dy = y - p.cy;
                const double u = ca * dx + sa * dy;
                const double v = -sa * dx + ca * dy;
                if (inside(kind, u, v, p)) val = p.fg;
            } else if (kind == 5) {  // horizontal stripes
                if (std::fmod(y + p.phase, p.period) < 0.5 * p.period) val = p.fg;
            } else if (kind == 6) {  // vertical stripes
                if (std::fmod(x + p.phase, p.period) < 0.5 * p.period) val = p.fg;
            } else {  // checkerboard
                const int bx = static_cast<int>((x + p.phase) / p.period);
                const int by = static_cast<int>((y + p.phase) / p.period);
                if ((bx + by) % 2 == 0) val = p.fg;
            }
            for (int c = 0; c < channels; ++c) {
                const double noisy = val + sigma * rng.normal();
                img.at(y, x, c) = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
            }
        }
    }
    return img;
}

}  // namespace

ToyDataset generate_toy_dataset(const GeneratorSpec& spec, int n, uint64_t seed) {
    spec.validate();
    if (n < 1) throw std::invalid_argument("generate_toy_dataset: n must be >= 1");

    ToyDataset ds;
    ds.class_count = spec.class_count;
    ds.spec = spec;
    ds.seed = seed;
    ds.images.reserve(n);
    ds.labels.reserve(n);

    Rng root(seed);
    const double half = spec.side / 2.0;
    for (int i = 0; i < n; ++i) {
        const int label = i % spec.class_count;  // round-robin keeps balance within ±1
        Rng r = root.split(static_cast<uint64_t>(i));
        ShapeParams p{};
        const double jitter = spec.jitter_frac * spec.side;
        p.cx = half + r.uniform(-jitter, jitter);
        p.cy = half + r.uniform(-jitter, jitter);
        p.ax = half * r.uniform(spec.scale_min, spec.scale_max);
        p.ay = half * r.uniform(spec.scale_min, spec.scale_max);
        p.angle = r.uniform(-0.35, 0.35);
        p.period = r.uniform(4.0, 8.0);
        p.phase = r.uniform(0.0, p.period);
        p.fg = r.uniform(spec.fg_min, spec.fg_max);
        p.bg = r.uniform(spec.bg_min, spec.bg_max);
        ds.images.push_back(render(label, p, spec.side, spec.channels, spec.noise_sigma, r));
        ds.labels.push_back(label);
    }
    return ds;
}

std::vector<int> subsample_fraction(int n, double fraction, uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw std::invalid_argument("subsample_fraction: fraction must lie in (0, 1]");
    const int k = static_cast<int>(std::ceil(fraction * n));
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    // partial Fisher-Yates: first k slots are a uniform sample without replacement
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

// ---------------------------------------------------------------------------
// tensor files
// ---------------------------------------------------------------------------

namespace {

constexpr uint64_t kMaxElements = 1ull << 31;

void check_payload_size(const std::string& path, uint64_t expected_floats) {
    const uint64_t header = 4 + 4 * 5;
    const uint64_t expected_bytes = header + expected_floats * 4;
    const uint64_t actual = std::filesystem::file_size(path);
    if (actual < expected_bytes)
        throw IoError("truncated file " + path + ": expected " + std::to_string(expected_bytes) +
                      " bytes, found " + std::to_string(actual));
}

uint64_t checked_element_count(const std::string& path, uint64_t n, uint64_t h, uint64_t w,
                               uint64_t d) {
    // guard each partial product so the total cannot wrap
    if (h != 0 && w > kMaxElements / std::max<uint64_t>(1, h)) goto overflow;
    if (n != 0 && d != 0) {
        const uint64_t hw = h * w;
        if (hw != 0 && d > kMaxElements / hw) goto overflow;
        const uint64_t hwd = hw * d;
        if (hwd != 0 && n > kMaxElements / hwd) goto overflow;
        return n * hwd;
    }
    return 0;
overflow:
    throw IoError("dimension overflow in " + path + ": n*h*w*d exceeds addressable size");
}

}  // namespace

void write_feature_file(const std::string& path, const std::vector<FeatureGrid>& grids) {
    if (grids.empty()) throw std::invalid_argument("write_feature_file: empty grid list");
    const int h = grids[0].h, w = grids[0].w, d = grids[0].d;
    for (const auto& g : grids)
        if (g.h != h || g.w != w || g.d != d)
            throw std::invalid_argument("write_feature_file: inconsistent grid dimensions");
    BinWriter bw(path);
    bw.magic("DGTF");
    bw.u32(1);
    bw.u32(static_cast<uint32_t>(grids.size()));
    bw.u32(static_cast<uint32_t>(h));
    bw.u32(static_cast<uint32_t>(w));
    bw.u32(static_cast<uint32_t>(d));
    for (const auto& g : grids) bw.f32_array(g.values.data(), g.values.size());
    bw.close();
}

std::vector<FeatureGrid> load_feature_file(const std::string& path) {
    BinReader br(path);
    br.expect_magic("DGTF");
    const uint32_t version = br.u32();
    if (version != 1) throw IoError("unsupported feature file version in " + path);
    const uint32_t n = br.u32(), h = br.u32(), w = br.u32(), d = br.u32();
    const uint64_t total = checked_element_count(path, n, h, w, d);
    check_payload_size(path, total);
    std::vector<FeatureGrid> grids;
    grids.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        FeatureGrid g(static_cast<int>(h), static_cast<int>(w), static_cast<int>(d));
        g.values = br.f32_array(g.values.size());
        grids.push_back(std::move(g));
    }
    return grids;
}

void write_image_file(const std::string& path, const std::vector<ImageGrid>& images) {
    if (images.empty()) throw std::invalid_argument("write_image_file: empty image list");
    const int h = images[0].height, w = images[0].width, c = images[0].channels;
    for (const auto& im : images)
        if (im.height != h || im.width != w || im.channels != c)
            throw std::invalid_argument("write_image_file: inconsistent image dimensions");
    BinWriter bw(path);
    bw.magic("DGIM");
    bw.u32(1);
    bw.u32(static_cast<uint32_t>(images.size()));
    bw.u32(static_cast<uint32_t>(h));
    bw.u32(static_cast<uint32_t>(w));
    bw.u32(static_cast<uint32_t>(c));
    for (const auto& im : images) bw.f32_array(im.values.data(), im.values.size());
    bw.close();
}

std::vector<ImageGrid> load_image_file(const std::string& path) {
    BinReader br(path);
    br.expect_magic("DGIM");
    const uint32_t version = br.u32();
    if (version != 1) throw IoError("unsupported image file version in " + path);
    const uint32_t n = br.u32(), h = br.u32(), w = br.u32(), c = br.u32();
    const uint64_t total = checked_element_count(path, n, h, w, c);
    check_payload_size(path, total);
    std::vector<ImageGrid> images;
    images.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        ImageGrid im(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
        im.values = br.f32_array(im.values.size());
        images.push_back(std::move(im));
    }
    return images;
}

void write_label_file(const std::string& path, const std::vector<int>& labels, int class_count) {
    BinWriter bw(path);
    bw.magic("DGLB");
    bw.u32(1);
    bw.u32(static_cast<uint32_t>(labels.size()));
    bw.u32(static_cast<uint32_t>(class_count));
    for (int l : labels) bw.u32(static_cast<uint32_t>(l));
    bw.close();
}

std::pair<std::vector<int>, int> load_label_file(const std::string& path) {
    BinReader br(path);
    br.expect_magic("DGLB");
    if (br.u32() != 1) throw IoError("unsupported label file version in " + path);
    const uint32_t n = br.u32();
    const int class_count = static_cast<int>(br.u32());
    std::vector<int> labels(n);
    for (uint32_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(br.u32());
        if (labels[i] < 0 || labels[i] >= class_count)
            throw IoError("label out of range in " + path);
    }
    return {labels, class_count};
}

}  // namespace digit
