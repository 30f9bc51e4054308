#include "digit/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "digit/common.hpp"
#include "digit/serialize.hpp"

namespace digit {

namespace {

double sq_dist(const float* a, const float* b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += diff * diff;
    }
    return s;
}

int nearest_centroid(const float* x, const std::vector<double>& centroids, int k, int d,
                     double* dist_out = nullptr) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
        const double* ct = centroids.data() + static_cast<size_t>(c) * d;
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
            const double diff = static_cast<double>(x[i]) - ct[i];
            s += diff * diff;
        }
        if (s < best_d) {  // strict: ties keep the lowest index
            best_d = s;
            best = c;
        }
    }
    if (dist_out) *dist_out = best_d;
    return best;
}

}  // namespace

Codebook kmeans_fit(const MatrixF& samples, int k, int max_iters, double tol, uint64_t seed) {
    const int n = samples.rows, d = samples.cols;
    if (k < 1) throw std::invalid_argument("kmeans_fit: K must be >= 1");
    if (n < k) throw std::invalid_argument("kmeans_fit: sample size " + std::to_string(n) +
                                           " is smaller than K=" + std::to_string(k));
    for (float v : samples.v)
        if (!std::isfinite(v)) throw std::invalid_argument("kmeans_fit: non-finite feature value");

    Rng rng(seed);
    std::vector<double> centroids(static_cast<size_t>(k) * d);

    // k-means++ seeding
    {
        const int first = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
        for (int i = 0; i < d; ++i) centroids[i] = samples.at(first, i);
        std::vector<double> min_d(n);
        for (int s = 0; s < n; ++s) min_d[s] = sq_dist(samples.row(s), samples.row(first), d);
        for (int c = 1; c < k; ++c) {
            double total = 0.0;
            for (double v : min_d) total += v;
            if (!(total > 0.0))
                throw std::invalid_argument("kmeans_fit: fewer distinct samples than K");
            const int pick = static_cast<int>(rng.weighted(min_d));
            double* ct = centroids.data() + static_cast<size_t>(c) * d;
            for (int i = 0; i < d; ++i) ct[i] = samples.at(pick, i);
            for (int s = 0; s < n; ++s) {
                double dist = 0.0;
                for (int i = 0; i < d; ++i) {
                    const double diff = static_cast<double>(samples.at(s, i)) - ct[i];
                    dist += diff * diff;
                }
                min_d[s] = std::min(min_d[s], dist);
            }
        }
    }

    std::vector<int> assign(n, 0);
    std::vector<double> dists(n, 0.0);
    double prev_inertia = std::numeric_limits<double>::infinity();
    double inertia = 0.0;
    int iters = 0;

    for (int it = 0; it < max_iters; ++it) {
        iters = it + 1;
        parallel_for(n, [&](int64_t s) {
            assign[s] = nearest_centroid(samples.row(static_cast<int>(s)), centroids, k, d,
                                         &dists[s]);
        });
        inertia = 0.0;
        for (int s = 0; s < n; ++s) inertia += dists[s];  // fixed-order reduction
        if (inertia > prev_inertia + 1e-9)
            throw std::logic_error("kmeans_fit: inertia increased between iterations");
        prev_inertia = inertia;

        // means, accumulated in sample order
        std::vector<double> sums(static_cast<size_t>(k) * d, 0.0);
        std::vector<int> counts(k, 0);
        for (int s = 0; s < n; ++s) {
            double* dst = sums.data() + static_cast<size_t>(assign[s]) * d;
            const float* src = samples.row(s);
            for (int i = 0; i < d; ++i) dst[i] += src[i];
            ++counts[assign[s]];
        }
        double max_shift = 0.0;
        for (int c = 0; c < k; ++c) {
            double* ct = centroids.data() + static_cast<size_t>(c) * d;
            if (counts[c] == 0) {
                // reseed to the sample farthest from its assigned centroid
                int far = 0;
                for (int s = 1; s < n; ++s)
                    if (dists[s] > dists[far]) far = s;
                for (int i = 0; i < d; ++i) ct[i] = samples.at(far, i);
                dists[far] = 0.0;
                max_shift = std::numeric_limits<double>::infinity();
                continue;
            }
            double shift = 0.0;
            for (int i = 0; i < d; ++i) {
                const double nv = sums[static_cast<size_t>(c) * d + i] / counts[c];
                const double diff = nv - ct[i];
                shift += diff * diff;
                ct[i] = nv;
            }
            max_shift = std::max(max_shift, std::sqrt(shift));
        }
        if (max_shift < tol) break;
    }

    Codebook cb;
    cb.k = k;
    cb.d = d;
    cb.seed = seed;
    cb.iterations = iters;
    cb.centroids.resize(centroids.size());
    for (size_t i = 0; i < centroids.size(); ++i) cb.centroids[i] = static_cast<float>(centroids[i]);
    cb.inertia = kmeans_inertia(samples, cb);  // inertia of the rounded table actually stored
    return cb;
}

double kmeans_inertia(const MatrixF& samples, const Codebook& cb) {
    double total = 0.0;
    for (int s = 0; s < samples.rows; ++s) {
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < cb.k; ++c)
            best = std::min(best, sq_dist(samples.row(s), cb.centroid(c), cb.d));
        total += best;
    }
    return total;
}

TokenGrid quantize(const FeatureGrid& grid, const Codebook& cb) {
    if (grid.d != cb.d)
        throw std::invalid_argument("quantize: feature dim " + std::to_string(grid.d) +
                                    " does not match codebook dim " + std::to_string(cb.d));
    TokenGrid out(grid.h, grid.w);
    parallel_for(grid.cells(), [&](int64_t cell) {
        const float* x = grid.values.data() + cell * grid.d;
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < cb.k; ++c) {
            const double s = sq_dist(x, cb.centroid(c), cb.d);
            if (s < best_d) {
                best_d = s;
                best = c;
            }
        }
        out.tokens[cell] = best;
    });
    return out;
}

FeatureGrid embed_tokens(const TokenGrid& grid, const Codebook& cb) {
    FeatureGrid out(grid.h, grid.w, cb.d);
    for (int cell = 0; cell < grid.h * grid.w; ++cell) {
        const int id = grid.tokens[cell];
        if (id < 0 || id >= cb.k)
            throw std::invalid_argument("embed_tokens: token id " + std::to_string(id) +
                                        " out of range for K=" + std::to_string(cb.k));
        const float* ct = cb.centroid(id);
        std::copy(ct, ct + cb.d, out.values.begin() + static_cast<size_t>(cell) * cb.d);
    }
    return out;
}

TokenSequence flatten_raster(const TokenGrid& grid, std::optional<int> condition,
                             int class_offset) {
    TokenSequence seq;
    seq.has_condition = condition.has_value();
    seq.ids.reserve(grid.tokens.size() + (condition ? 1 : 0));
    if (condition) {
        if (*condition < 0) throw std::invalid_argument("flatten_raster: negative condition id");
        seq.ids.push_back(class_offset + *condition);
    }
    seq.ids.insert(seq.ids.end(), grid.tokens.begin(), grid.tokens.end());
    return seq;
}

TokenGrid unflatten(const TokenSequence& seq, int h, int w) {
    const int expected = h * w + (seq.has_condition ? 1 : 0);
    if (seq.length() != expected)
        throw std::invalid_argument("unflatten: sequence length " + std::to_string(seq.length()) +
                                    " does not match expected " + std::to_string(expected));
    TokenGrid grid(h, w);
    const int off = seq.has_condition ? 1 : 0;
    std::copy(seq.ids.begin() + off, seq.ids.end(), grid.tokens.begin());
    return grid;
}

void save_codebook(const std::string& path, const Codebook& cb) {
    BinWriter bw(path);
    bw.magic("DGCB");
    bw.u32(1);
    bw.u32(static_cast<uint32_t>(cb.k));
    bw.u32(static_cast<uint32_t>(cb.d));
    bw.u64(cb.seed);
    bw.f64(cb.inertia);
    bw.f32_array(cb.centroids.data(), cb.centroids.size());
    bw.text("iterations=" + std::to_string(cb.iterations) +
            ";subset_fraction=" + std::to_string(cb.subset_fraction));
    bw.close();
}

Codebook load_codebook(const std::string& path) {
    BinReader br(path);
    br.expect_magic("DGCB");
    if (br.u32() != 1) throw IoError("unsupported codebook version in " + path);
    Codebook cb;
    cb.k = static_cast<int>(br.u32());
    cb.d = static_cast<int>(br.u32());
    cb.seed = br.u64();
    cb.inertia = br.f64();
    cb.centroids = br.f32_array(static_cast<size_t>(cb.k) * cb.d);
    const std::string meta = br.text();
    const auto it_pos = meta.find("iterations=");
    if (it_pos != std::string::npos) cb.iterations = std::atoi(meta.c_str() + it_pos + 11);
    const auto sf_pos = meta.find("subset_fraction=");
    if (sf_pos != std::string::npos) cb.subset_fraction = std::atof(meta.c_str() + sf_pos + 16);
    return cb;
}

void save_token_grids(const std::string& path, const std::vector<TokenGrid>& grids) {
    if (grids.empty()) throw std::invalid_argument("save_token_grids: empty grid list");
    const int h = grids[0].h, w = grids[0].w;
    for (const auto& g : grids)
        if (g.h != h || g.w != w)
            throw std::invalid_argument("save_token_grids: inconsistent grid dimensions");
    BinWriter bw(path);
    bw.magic("DGTK");
    bw.u32(static_cast<uint32_t>(grids.size()));
    bw.u32(static_cast<uint32_t>(h));
    bw.u32(static_cast<uint32_t>(w));
    for (const auto& g : grids)
        for (int t : g.tokens) bw.u32(static_cast<uint32_t>(t));
    bw.close();
}

std::vector<TokenGrid> load_token_grids(const std::string& path) {
    BinReader br(path);
    br.expect_magic("DGTK");
    const uint32_t n = br.u32(), h = br.u32(), w = br.u32();
    if (static_cast<uint64_t>(n) * h * w > (1ull << 31))
        throw IoError("dimension overflow in " + path);
    std::vector<TokenGrid> grids;
    grids.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        TokenGrid g(static_cast<int>(h), static_cast<int>(w));
        for (auto& t : g.tokens) t = static_cast<int>(br.u32());
        grids.push_back(std::move(g));
    }
    return grids;
}

}  // namespace digit
