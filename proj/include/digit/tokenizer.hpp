#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "digit/data.hpp"
#include "digit/matrix.hpp"

namespace digit {

/// K centroids over the feature space; token id = nearest-centroid index.
struct Codebook {
    int k = 0;
    int d = 0;
    std::vector<float> centroids;  // k × d row-major
    uint64_t seed = 0;
    int iterations = 0;
    double inertia = 0.0;
    double subset_fraction = 1.0;

    const float* centroid(int i) const { return centroids.data() + static_cast<size_t>(i) * d; }
};

struct TokenGrid {
    int h = 0;
    int w = 0;
    std::vector<int> tokens;  // row-major, ids in [0, K)

    TokenGrid() = default;
    TokenGrid(int h_, int w_) : h(h_), w(w_), tokens(static_cast<size_t>(h_) * w_, 0) {}
    int& at(int y, int x) { return tokens[static_cast<size_t>(y) * w + x]; }
    int at(int y, int x) const { return tokens[static_cast<size_t>(y) * w + x]; }
};

/// Raster-order flattening, optionally with a leading condition id that is
/// stored as class_offset + class_id.
struct TokenSequence {
    std::vector<int> ids;
    bool has_condition = false;

    int length() const { return static_cast<int>(ids.size()); }
};

/// Lloyd iterations with k-means++ seeding. Distances and centroid updates
/// run in 64-bit even though features are 32-bit, so ties and accumulation
/// order are reproducible. Empty clusters are reseeded to the sample
/// farthest from its assigned centroid.
Codebook kmeans_fit(const MatrixF& samples, int k, int max_iters, double tol, uint64_t seed);

/// Inertia of a sample set under a codebook (sum of squared distances to the
/// nearest centroid).
double kmeans_inertia(const MatrixF& samples, const Codebook& cb);

/// Nearest-centroid assignment per cell; ties break toward the lowest index.
TokenGrid quantize(const FeatureGrid& grid, const Codebook& cb);

/// Centroid lookup per cell; quantize(embed_tokens(t)) == t.
FeatureGrid embed_tokens(const TokenGrid& grid, const Codebook& cb);

TokenSequence flatten_raster(const TokenGrid& grid, std::optional<int> condition = std::nullopt,
                             int class_offset = 0);
TokenGrid unflatten(const TokenSequence& seq, int h, int w);

// Codebook file "DGCB": u32 version, u32 K, u32 D, u64 seed, f64 inertia,
// K·D f32 centroids, length-prefixed UTF-8 metadata.
void save_codebook(const std::string& path, const Codebook& cb);
Codebook load_codebook(const std::string& path);

// Token file "DGTK": u32 n, u32 h, u32 w, then n·h·w u32 ids.
void save_token_grids(const std::string& path, const std::vector<TokenGrid>& grids);
std::vector<TokenGrid> load_token_grids(const std::string& path);

}  // namespace digit
