#include "doctest.h"

#include <sstream>

#include "test_util.hpp"

using namespace facekit;

namespace {

// Tiny, fast configuration for structural checks; trend assertions live in
// the acceptance suite with realistic sizes.
SynthConfig tiny_base() {
    SynthConfig cfg;
    cfg.n_identities = 12;
    cfg.faces_per_identity = 5;
    cfg.n_patches = 2;
    cfg.patch_dim = 8;
    cfg.within_noise_sigma = 0.3;
    cfg.patch_noise_sigma = 0.3;
    cfg.seed = 9;
    return cfg;
}

PipelineConfig tiny_pipeline() {
    PipelineConfig pc;
    pc.train.output_dim = 8;
    pc.train.epochs = 2;
    pc.train.triplets_per_epoch = 256;
    pc.eval_identities = 10;
    pc.eval_faces_per_identity = 3;
    pc.n_pairs = 60;
    pc.k_folds = 5;
    return pc;
}

}  // namespace

TEST_CASE("sweep CSV round-trips losslessly") {
    SweepResult r;
    r.rows.push_back({"25x20", 25, 500, 4, 0.0123456789012345, 7});
    r.rows.push_back({"2patch", 100, 2000, 2, 0.0, 3});
    std::istringstream is(sweep_to_csv(r));
    const SweepResult back = sweep_from_csv(is);
    REQUIRE(back.rows.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back.rows[i].label == r.rows[i].label);
        CHECK(back.rows[i].n_identities == r.rows[i].n_identities);
        CHECK(back.rows[i].n_faces == r.rows[i].n_faces);
        CHECK(back.rows[i].n_patches == r.rows[i].n_patches);
        CHECK(back.rows[i].error_rate == r.rows[i].error_rate);
        CHECK(back.rows[i].seed == r.rows[i].seed);
    }
}

TEST_CASE("repeated sweep cells are identical") {
    const SynthConfig base = tiny_base();
    const PipelineConfig pc = tiny_pipeline();

    SUBCASE("data sweep") {
        const SweepResult r = data_sweep(base, {{12, 5}, {12, 5}}, pc);
        REQUIRE(r.rows.size() == 2);
        CHECK(r.rows[0].error_rate == r.rows[1].error_rate);
    }
    SUBCASE("patch sweep") {
        const SweepResult r = patch_sweep(base, {2, 2}, pc);
        REQUIRE(r.rows.size() == 2);
        CHECK(r.rows[0].error_rate == r.rows[1].error_rate);
    }
}

TEST_CASE("sweep rows are re-derivable from the single-cell pipeline") {
    const SynthConfig base = tiny_base();
    const PipelineConfig pc = tiny_pipeline();

    const SweepResult data = data_sweep(base, {{8, 5}, {12, 5}}, pc);
    SynthConfig cell = base;
    cell.n_identities = 8;
    CHECK(data.rows[0].error_rate == pipeline_cell_error(cell, first_patches(2), pc));

    const SweepResult patch = patch_sweep(base, {1}, pc);
    CHECK(patch.rows[0].error_rate == pipeline_cell_error(base, first_patches(1), pc));
}

TEST_CASE("sweep validation") {
    const SynthConfig base = tiny_base();
    const PipelineConfig pc = tiny_pipeline();
    CHECK_THROWS_AS(data_sweep(base, {}, pc), Error);
    CHECK_THROWS_AS(data_sweep(base, {{12, 5}, {8, 5}}, pc), Error);
    CHECK_THROWS_AS(patch_sweep(base, {3}, pc), Error);
    CHECK_THROWS_AS(patch_sweep(base, {0}, pc), Error);
}
