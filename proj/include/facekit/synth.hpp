#pragma once

#include <cstdio>
#include <random>

#include "facekit/types.hpp"

namespace facekit {

// Identity-structured multi-patch generator. Per identity, each patch gets an
// independent standard-normal centroid. Per face, one within-identity noise
// draw is shared across patches; an additional noise draw is independent per
// patch, so concatenating more patches averages the per-patch component away.
struct SynthConfig {
    std::size_t n_identities = 10;
    std::size_t faces_per_identity = 5;
    std::size_t n_patches = 1;
    std::size_t patch_dim = 16;
    double within_noise_sigma = 0.2;
    double patch_noise_sigma = 0.2;
    std::uint64_t seed = 1;

    void validate() const {
        if (n_identities == 0 || faces_per_identity == 0 || n_patches == 0 || patch_dim == 0)
            throw Error("SynthConfig: all counts must be >= 1");
        if (within_noise_sigma < 0 || patch_noise_sigma < 0)
            throw Error("SynthConfig: sigmas must be nonnegative");
    }
};

namespace detail {
inline std::string zero_pad(std::size_t v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", width, v);
    return buf;
}
}  // namespace detail

inline Dataset generate(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    Dataset ds;
    ds.records.reserve(cfg.n_identities * cfg.faces_per_identity);
    std::vector<std::vector<double>> centroids(cfg.n_patches);
    std::vector<double> within(cfg.patch_dim);
    for (std::size_t i = 0; i < cfg.n_identities; ++i) {
        const std::string identity = "id" + detail::zero_pad(i, 5);
        for (std::size_t p = 0; p < cfg.n_patches; ++p) {
            centroids[p].resize(cfg.patch_dim);
            for (double& c : centroids[p]) c = unit(rng);
        }
        for (std::size_t f = 0; f < cfg.faces_per_identity; ++f) {
            FaceRecord rec;
            rec.identity_id = identity;
            rec.face_id = identity + "_f" + detail::zero_pad(f, 4);
            for (double& w : within) w = cfg.within_noise_sigma * unit(rng);
            rec.patches.reserve(cfg.n_patches);
            for (std::size_t p = 0; p < cfg.n_patches; ++p) {
                FeatureVector fv;
                fv.values.resize(cfg.patch_dim);
                for (std::size_t j = 0; j < cfg.patch_dim; ++j)
                    fv.values[j] = static_cast<float>(centroids[p][j] + within[j] + cfg.patch_noise_sigma * unit(rng));
                rec.patches.emplace_back(static_cast<std::uint32_t>(p), std::move(fv));
            }
            ds.records.push_back(std::move(rec));
        }
    }
    ds.build_index();
    return ds;
}

}  // namespace facekit
