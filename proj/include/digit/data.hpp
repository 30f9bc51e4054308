#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "digit/rng.hpp"

namespace digit {

/// Grayscale-or-multichannel image, values in [0,1], channel innermost.
struct ImageGrid {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<float> values;

    ImageGrid() = default;
    ImageGrid(int h, int w, int c)
        : height(h), width(w), channels(c),
          values(static_cast<size_t>(h) * w * c, 0.0f) {}

    float& at(int y, int x, int c = 0) {
        return values[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c = 0) const {
        return values[(static_cast<size_t>(y) * width + x) * channels + c];
    }
};

/// Per-image grid of continuous patch features (h × w cells, d values each).
struct FeatureGrid {
    int h = 0;
    int w = 0;
    int d = 0;
    std::vector<float> values;

    FeatureGrid() = default;
    FeatureGrid(int h_, int w_, int d_)
        : h(h_), w(w_), d(d_), values(static_cast<size_t>(h_) * w_ * d_, 0.0f) {}

    float* cell(int y, int x) { return values.data() + (static_cast<size_t>(y) * w + x) * d; }
    const float* cell(int y, int x) const {
        return values.data() + (static_cast<size_t>(y) * w + x) * d;
    }
    int cells() const { return h * w; }
};

/// Procedural corpus description. Class identity is the shape kind; position,
/// scale, rotation, stripe phase and intensity are nuisance factors.
struct GeneratorSpec {
    int side = 32;
    int channels = 1;
    int class_count = 8;
    double noise_sigma = 0.08;
    double fg_min = 0.55, fg_max = 0.95;     // foreground intensity range
    double bg_min = 0.05, bg_max = 0.25;     // background intensity range
    double scale_min = 0.5, scale_max = 0.85;  // shape half-extent as fraction of side/2
    double jitter_frac = 0.22;               // center offset as fraction of side

    void validate() const;
};

struct ToyDataset {
    std::vector<ImageGrid> images;
    std::vector<int> labels;
    int class_count = 0;
    GeneratorSpec spec;
    uint64_t seed = 0;
};

/// n images with labels assigned round-robin (class-balanced within ±1),
/// bit-identical for a fixed (spec, seed).
ToyDataset generate_toy_dataset(const GeneratorSpec& spec, int n, uint64_t seed);

/// ⌈fraction·n⌉ distinct indices drawn uniformly, deterministic under seed.
std::vector<int> subsample_fraction(int n, double fraction, uint64_t seed);

// Binary tensor files, little-endian:
//   magic, u32 version=1, u32 n, u32 h, u32 w, u32 d, then n·h·w·d f32
//   (n outer, d innermost). Magic "DGTF" for features, "DGIM" for images
//   with d = channels.
void write_feature_file(const std::string& path, const std::vector<FeatureGrid>& grids);
std::vector<FeatureGrid> load_feature_file(const std::string& path);

void write_image_file(const std::string& path, const std::vector<ImageGrid>& images);
std::vector<ImageGrid> load_image_file(const std::string& path);

// Labels as "DGLB": u32 version, u32 n, u32 class_count, n × u32.
void write_label_file(const std::string& path, const std::vector<int>& labels, int class_count);
std::pair<std::vector<int>, int> load_label_file(const std::string& path);

}  // namespace digit
