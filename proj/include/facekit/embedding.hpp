#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "facekit/feature_store.hpp"
#include "facekit/types.hpp"

namespace facekit {

// Affine map from the concatenated feature space to a low-dimensional
// embedding, optionally L2-normalized onto the unit sphere. Weights are kept
// in f64 for training; the file format stores f32.
struct EmbeddingModel {
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    std::vector<double> weights;  // row-major, output_dim x input_dim
    std::vector<double> bias;     // output_dim
    bool normalize = true;

    void validate() const {
        if (input_dim == 0 || output_dim == 0) throw Error("EmbeddingModel: zero dimension");
        if (weights.size() != input_dim * output_dim || bias.size() != output_dim)
            throw Error("EmbeddingModel: weight/bias shape mismatch");
        for (double w : weights)
            if (!std::isfinite(w)) throw Error("EmbeddingModel: non-finite weight");
        for (double b : bias)
            if (!std::isfinite(b)) throw Error("EmbeddingModel: non-finite bias");
    }
};

inline constexpr char kModelMagic[4] = {'D', 'E', 'F', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

inline void save_model(const std::filesystem::path& path, const EmbeddingModel& m) {
    m.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    os.write(kModelMagic, 4);
    io::write_u32(os, kModelVersion);
    io::write_u32(os, static_cast<std::uint32_t>(m.input_dim));
    io::write_u32(os, static_cast<std::uint32_t>(m.output_dim));
    io::write_u8(os, m.normalize ? 1 : 0);
    std::vector<float> buf(m.weights.begin(), m.weights.end());
    io::write_f32(os, buf.data(), buf.size());
    buf.assign(m.bias.begin(), m.bias.end());
    io::write_f32(os, buf.data(), buf.size());
    if (!os) throw Error("write failed for '" + path.string() + "'");
}

inline EmbeddingModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open model file '" + path.string() + "'");
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0)
        throw Error("bad magic in model file '" + path.string() + "'");
    const std::uint32_t version = io::read_u32(is, path.string());
    if (version != kModelVersion)
        throw Error("unsupported model version " + std::to_string(version) + " in '" + path.string() + "'");
    EmbeddingModel m;
    m.input_dim = io::read_u32(is, path.string());
    m.output_dim = io::read_u32(is, path.string());
    m.normalize = io::read_u8(is, path.string()) != 0;
    std::vector<float> buf(m.input_dim * m.output_dim);
    io::read_f32(is, buf.data(), buf.size(), path.string());
    m.weights.assign(buf.begin(), buf.end());
    buf.resize(m.output_dim);
    io::read_f32(is, buf.data(), buf.size(), path.string());
    m.bias.assign(buf.begin(), buf.end());
    m.validate();
    return m;
}

// y = W x + b, then y / |y| when normalize is set.
inline std::vector<double> embed(const EmbeddingModel& m, std::span<const double> x) {
    if (x.size() != m.input_dim)
        throw Error("embed: input dim " + std::to_string(x.size()) + " != model input_dim " +
                    std::to_string(m.input_dim));
    std::vector<double> y(m.output_dim);
    for (std::size_t r = 0; r < m.output_dim; ++r) {
        const double* w = m.weights.data() + r * m.input_dim;
        double acc = m.bias[r];
        for (std::size_t j = 0; j < m.input_dim; ++j) acc += w[j] * x[j];
        y[r] = acc;
    }
    if (m.normalize) {
        double n2 = 0;
        for (double v : y) n2 += v * v;
        if (n2 == 0.0) throw Error("embed: zero vector cannot be normalized");
        const double inv = 1.0 / std::sqrt(n2);
        for (double& v : y) v *= inv;
    }
    return y;
}

inline std::vector<double> embed(const EmbeddingModel& m, const FeatureVector& x) {
    std::vector<double> xd(x.values.begin(), x.values.end());
    return embed(m, xd);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Inner product of unit embeddings, clamped to [-1, 1]. Only defined for
// normalizing models; squared L2 distance is recoverable as 2 - 2s.
inline double similarity(const EmbeddingModel& m, const FeatureVector& x, const FeatureVector& y) {
    if (!m.normalize) throw Error("similarity requires a normalizing model");
    const auto ex = embed(m, x);
    const auto ey = embed(m, y);
    return std::clamp(dot(ex, ey), -1.0, 1.0);
}

// max(0, |a-p|^2 - |a-n|^2 + margin)
inline double triplet_loss(std::span<const double> e_a, std::span<const double> e_p,
                           std::span<const double> e_n, double margin) {
    const double v = squared_distance(e_a, e_p) - squared_distance(e_a, e_n) + margin;
    return v > 0 ? v : 0;
}

struct TripletGrad {
    std::vector<double> d_anchor, d_positive, d_negative;
};

// Subgradient of triplet_loss w.r.t. the three embeddings. The active branch
// is taken at exact hinge equality.
inline TripletGrad triplet_grad(std::span<const double> e_a, std::span<const double> e_p,
                                std::span<const double> e_n, double margin) {
    const std::size_t d = e_a.size();
    TripletGrad g{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    const double v = squared_distance(e_a, e_p) - squared_distance(e_a, e_n) + margin;
    if (v < 0) return g;
    for (std::size_t i = 0; i < d; ++i) {
        g.d_anchor[i] = 2.0 * (e_n[i] - e_p[i]);
        g.d_positive[i] = -2.0 * (e_a[i] - e_p[i]);
        g.d_negative[i] = 2.0 * (e_a[i] - e_n[i]);
    }
    return g;
}

// Record positions in a Dataset: same identity for anchor/positive,
// a different identity for the negative.
struct Triplet {
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
};

enum class Sampling { Uniform, SemiHard };

struct TrainConfig {
    std::size_t output_dim = 128;
    double margin = 0.2;
    double learning_rate = 0.05;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    std::size_t triplets_per_epoch = 1024;
    Sampling sampling = Sampling::Uniform;
    std::uint64_t seed = 1;
    double init_scale = 0.1;

    void validate() const {
        if (output_dim == 0) throw Error("TrainConfig: output_dim must be positive");
        if (margin <= 0) throw Error("TrainConfig: margin must be positive");
        if (learning_rate <= 0) throw Error("TrainConfig: learning_rate must be positive");
        if (batch_size == 0 || triplets_per_epoch == 0)
            throw Error("TrainConfig: batch_size and triplets_per_epoch must be positive");
        if (init_scale <= 0) throw Error("TrainConfig: init_scale must be positive");
    }
};

// Concatenated features of every record, row-major n x D, promoted to f64.
struct ConcatMatrix {
    std::size_t n = 0, dim = 0;
    std::vector<double> data;

    std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
};

inline ConcatMatrix build_concat_matrix(const Dataset& ds, const std::vector<std::uint32_t>& patch_ids) {
    ConcatMatrix m;
    m.n = ds.size();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const FeatureVector fv = concat_patches(ds.records[i], patch_ids);
        if (i == 0) {
            m.dim = fv.dim();
            m.data.reserve(m.n * m.dim);
        }
        m.data.insert(m.data.end(), fv.values.begin(), fv.values.end());
    }
    return m;
}

namespace detail {

struct TripletPool {
    std::vector<const std::vector<std::size_t>*> identities;       // all
    std::vector<const std::vector<std::size_t>*> multi_face;       // >= 2 faces

    explicit TripletPool(const Dataset& ds) {
        for (const auto& [id, faces] : ds.identity_index) {
            identities.push_back(&faces);
            if (faces.size() >= 2) multi_face.push_back(&faces);
        }
        if (identities.size() < 2) throw Error("sample_triplets: need at least two identities");
        if (multi_face.empty()) throw Error("sample_triplets: no identity has two faces");
    }
};

inline std::vector<Triplet> sample_triplets_impl(const Dataset& ds, const ConcatMatrix& feats, Sampling strategy,
                                                 std::size_t count, Rng& rng, const EmbeddingModel* model,
                                                 double margin) {
    TripletPool pool(ds);
    if (strategy == Sampling::SemiHard && model == nullptr)
        throw Error("sample_triplets: semi_hard sampling requires a model");

    // Precompute embeddings once for semi-hard negative search.
    std::vector<std::vector<double>> emb;
    if (strategy == Sampling::SemiHard) {
        emb.resize(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) emb[i] = embed(*model, feats.row(i));
    }

    std::vector<Triplet> out;
    out.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        const auto& anchor_faces = *pool.multi_face[rng() % pool.multi_face.size()];
        std::size_t a = rng() % anchor_faces.size();
        std::size_t p = rng() % (anchor_faces.size() - 1);
        if (p >= a) ++p;
        Triplet trip;
        trip.anchor = anchor_faces[a];
        trip.positive = anchor_faces[p];
        const std::string& anchor_identity = ds.records[trip.anchor].identity_id;

        if (strategy == Sampling::Uniform) {
            const std::vector<std::size_t>* neg_faces = nullptr;
            do {
                neg_faces = pool.identities[rng() % pool.identities.size()];
            } while (ds.records[(*neg_faces)[0]].identity_id == anchor_identity);
            trip.negative = (*neg_faces)[rng() % neg_faces->size()];
        } else {
            // Semi-hard: a negative with d(a,n)^2 in [d(a,p)^2, d(a,p)^2 + margin),
            // else the hardest (closest) negative overall. Ties go to the
            // lowest record index.
            const double d_ap = squared_distance(emb[trip.anchor], emb[trip.positive]);
            std::size_t best_semi = ds.size(), best_hard = ds.size();
            double best_semi_d = 0, best_hard_d = 0;
            for (std::size_t i = 0; i < ds.size(); ++i) {
                if (ds.records[i].identity_id == anchor_identity) continue;
                const double d_an = squared_distance(emb[trip.anchor], emb[i]);
                if (d_an >= d_ap && d_an < d_ap + margin && (best_semi == ds.size() || d_an < best_semi_d)) {
                    best_semi = i;
                    best_semi_d = d_an;
                }
                if (best_hard == ds.size() || d_an < best_hard_d) {
                    best_hard = i;
                    best_hard_d = d_an;
                }
            }
            trip.negative = best_semi != ds.size() ? best_semi : best_hard;
        }
        out.push_back(trip);
    }
    return out;
}

}  // namespace detail

inline std::vector<Triplet> sample_triplets(const Dataset& ds, const std::vector<std::uint32_t>& patch_ids,
                                            Sampling strategy, std::size_t count, std::uint64_t seed,
                                            const EmbeddingModel* model = nullptr, double margin = 0.2) {
    const ConcatMatrix feats = build_concat_matrix(ds, patch_ids);
    Rng rng(seed);
    return detail::sample_triplets_impl(ds, feats, strategy, count, rng, model, margin);
}

inline double mean_triplet_loss(const EmbeddingModel& m, const ConcatMatrix& feats,
                                const std::vector<Triplet>& triplets, double margin) {
    if (triplets.empty()) return 0;
    double total = 0;
    for (const Triplet& t : triplets) {
        const auto ea = embed(m, feats.row(t.anchor));
        const auto ep = embed(m, feats.row(t.positive));
        const auto en = embed(m, feats.row(t.negative));
        total += triplet_loss(ea, ep, en, margin);
    }
    return total / static_cast<double>(triplets.size());
}

// Minibatch SGD on the mean triplet loss. The map is initialized from the
// seed with uniform entries in [-init_scale, init_scale] and zero bias;
// every forward pass re-normalizes onto the unit sphere.
inline EmbeddingModel train(const Dataset& ds, const std::vector<std::uint32_t>& patch_ids,
                            const TrainConfig& cfg) {
    cfg.validate();
    const ConcatMatrix feats = build_concat_matrix(ds, patch_ids);
    const std::size_t D = feats.dim, d = cfg.output_dim;

    EmbeddingModel m;
    m.input_dim = D;
    m.output_dim = d;
    m.normalize = true;
    m.weights.resize(d * D);
    m.bias.assign(d, 0.0);
    Rng init_rng(mix_seed(cfg.seed, 0));
    std::uniform_real_distribution<double> uni(-cfg.init_scale, cfg.init_scale);
    for (double& w : m.weights) w = uni(init_rng);

    const std::size_t steps_per_epoch = cfg.triplets_per_epoch / cfg.batch_size;
    std::vector<double> grad_w(d * D), grad_b(d);
    std::vector<double> y(d), gy(d);

    // Forward to raw y, normalize into e, and backprop grad g (w.r.t. e)
    // through the normalization into weight/bias accumulators.
    auto backprop = [&](std::size_t row, std::span<const double> eref, std::span<const double> g) {
        std::span<const double> x = feats.row(row);
        double n2 = 0;
        for (std::size_t r = 0; r < d; ++r) {
            const double* w = m.weights.data() + r * D;
            double acc = m.bias[r];
            for (std::size_t j = 0; j < D; ++j) acc += w[j] * x[j];
            y[r] = acc;
            n2 += acc * acc;
        }
        const double inv_norm = 1.0 / std::sqrt(n2);
        double eg = 0;
        for (std::size_t r = 0; r < d; ++r) eg += eref[r] * g[r];
        for (std::size_t r = 0; r < d; ++r) gy[r] = (g[r] - eref[r] * eg) * inv_norm;
        for (std::size_t r = 0; r < d; ++r) {
            double* gw = grad_w.data() + r * D;
            const double gr = gy[r];
            for (std::size_t j = 0; j < D; ++j) gw[j] += gr * x[j];
            grad_b[r] += gr;
        }
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng epoch_rng(mix_seed(cfg.seed, 1 + epoch));
        const std::vector<Triplet> triplets = detail::sample_triplets_impl(
            ds, feats, cfg.sampling, cfg.triplets_per_epoch, epoch_rng,
            cfg.sampling == Sampling::SemiHard ? &m : nullptr, cfg.margin);
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            std::fill(grad_w.begin(), grad_w.end(), 0.0);
            std::fill(grad_b.begin(), grad_b.end(), 0.0);
            double batch_loss = 0;
            for (std::size_t b = 0; b < cfg.batch_size; ++b) {
                const Triplet& t = triplets[step * cfg.batch_size + b];
                const auto ea = embed(m, feats.row(t.anchor));
                const auto ep = embed(m, feats.row(t.positive));
                const auto en = embed(m, feats.row(t.negative));
                const double loss = triplet_loss(ea, ep, en, cfg.margin);
                batch_loss += loss;
                if (loss <= 0) continue;
                const TripletGrad g = triplet_grad(ea, ep, en, cfg.margin);
                backprop(t.anchor, ea, g.d_anchor);
                backprop(t.positive, ep, g.d_positive);
                backprop(t.negative, en, g.d_negative);
            }
            if (!std::isfinite(batch_loss))
                throw Error("train: diverged (non-finite loss) at epoch " + std::to_string(epoch) + " step " +
                            std::to_string(step));
            const double scale = cfg.learning_rate / static_cast<double>(cfg.batch_size);
            for (std::size_t i = 0; i < grad_w.size(); ++i) m.weights[i] -= scale * grad_w[i];
            for (std::size_t r = 0; r < d; ++r) m.bias[r] -= scale * grad_b[r];
        }
    }
    m.validate();
    return m;
}

}  // namespace facekit
