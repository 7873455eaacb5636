#include "doctest.h"

#include "test_util.hpp"

using namespace facekit;

TEST_CASE("zero noise collapses each identity to a point") {
    SynthConfig cfg;
    cfg.n_identities = 4;
    cfg.faces_per_identity = 3;
    cfg.n_patches = 2;
    cfg.patch_dim = 6;
    cfg.within_noise_sigma = 0;
    cfg.patch_noise_sigma = 0;
    const Dataset ds = generate(cfg);
    for (const auto& [identity, faces] : ds.identity_index) {
        const FaceRecord& first = ds.records[faces[0]];
        for (std::size_t f : faces)
            for (std::size_t p = 0; p < first.patches.size(); ++p)
                CHECK(ds.records[f].patches[p].second.values == first.patches[p].second.values);
    }
}

TEST_CASE("record and schema counts follow the config") {
    SynthConfig cfg;
    cfg.n_identities = 10;
    cfg.faces_per_identity = 3;
    cfg.n_patches = 2;
    cfg.patch_dim = 8;
    const Dataset ds = generate(cfg);
    CHECK(ds.size() == 30);
    CHECK(ds.identity_index.size() == 10);
    CHECK(ds.patch_schema() == std::vector<std::uint32_t>{0, 1});
    for (const auto& r : ds.records)
        for (const auto& [pid, fv] : r.patches) CHECK(fv.dim() == 8);
}

TEST_CASE("small noise keeps nearest-centroid classification perfect") {
    SynthConfig cfg;
    cfg.n_identities = 10;
    cfg.faces_per_identity = 3;
    cfg.n_patches = 2;
    cfg.patch_dim = 8;
    cfg.within_noise_sigma = 0.05;
    cfg.patch_noise_sigma = 0.05;
    cfg.seed = 3;
    const Dataset ds = generate(cfg);

    // Brute-force oracle: per-identity centroid of concatenated features,
    // then nearest centroid per face.
    const auto patch_ids = ds.patch_schema();
    std::vector<std::string> identities;
    std::vector<std::vector<double>> centroids;
    for (const auto& [identity, faces] : ds.identity_index) {
        std::vector<double> c(16, 0.0);
        for (std::size_t f : faces) {
            const FeatureVector fv = concat_patches(ds.records[f], patch_ids);
            for (std::size_t i = 0; i < c.size(); ++i) c[i] += fv.values[i];
        }
        for (double& v : c) v /= static_cast<double>(faces.size());
        identities.push_back(identity);
        centroids.push_back(std::move(c));
    }
    for (const auto& rec : ds.records) {
        const FeatureVector fv = concat_patches(rec, patch_ids);
        double best = 1e300;
        std::size_t arg = 0;
        for (std::size_t k = 0; k < centroids.size(); ++k) {
            double d = 0;
            for (std::size_t i = 0; i < centroids[k].size(); ++i) {
                const double diff = fv.values[i] - centroids[k][i];
                d += diff * diff;
            }
            if (d < best) {
                best = d;
                arg = k;
            }
        }
        CHECK(identities[arg] == rec.identity_id);
    }
}

TEST_CASE("same seed is bit-identical, different seed differs") {
    SynthConfig cfg;
    cfg.n_identities = 5;
    cfg.faces_per_identity = 4;
    cfg.n_patches = 3;
    cfg.patch_dim = 8;
    const Dataset a = generate(cfg);
    const Dataset b = generate(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t p = 0; p < a.records[i].patches.size(); ++p)
            CHECK(a.records[i].patches[p].second.values == b.records[i].patches[p].second.values);

    cfg.seed = cfg.seed + 1;
    const Dataset c = generate(cfg);
    CHECK(a.records[0].patches[0].second.values != c.records[0].patches[0].second.values);
}

TEST_CASE("within-identity distances sit below cross-identity distances") {
    SynthConfig cfg;
    cfg.n_identities = 30;
    cfg.faces_per_identity = 4;
    cfg.n_patches = 2;
    cfg.patch_dim = 16;
    cfg.within_noise_sigma = 0.2;
    cfg.patch_noise_sigma = 0.2;
    cfg.seed = 5;
    const Dataset ds = generate(cfg);
    const auto patch_ids = ds.patch_schema();
    const ConcatMatrix feats = build_concat_matrix(ds, patch_ids);

    Rng rng(99);
    double same_total = 0, diff_total = 0;
    const std::size_t n_samples = 1500;
    for (std::size_t s = 0; s < n_samples; ++s) {
        std::size_t a = rng() % ds.size(), b = rng() % ds.size();
        while (b == a || ds.records[a].identity_id != ds.records[b].identity_id) {
            a = rng() % ds.size();
            b = rng() % ds.size();
        }
        same_total += squared_distance(feats.row(a), feats.row(b));
        std::size_t c = rng() % ds.size(), d = rng() % ds.size();
        while (ds.records[c].identity_id == ds.records[d].identity_id) {
            c = rng() % ds.size();
            d = rng() % ds.size();
        }
        diff_total += squared_distance(feats.row(c), feats.row(d));
    }
    // Expected same-pair distance ~ 2*(0.2^2+0.2^2)*32 ~= 5.1; cross-pair adds
    // ~ 2*32 from the centroids. Require a wide margin.
    CHECK(same_total / n_samples * 2.0 < diff_total / n_samples);
}

TEST_CASE("config validation") {
    SynthConfig cfg;
    cfg.n_identities = 0;
    CHECK_THROWS_AS(generate(cfg), Error);
    cfg.n_identities = 2;
    cfg.within_noise_sigma = -1;
    CHECK_THROWS_AS(generate(cfg), Error);
}
