#include "doctest.h"

#include "test_util.hpp"

using namespace facekit;

namespace {

ScoreSet make_scoreset(const std::vector<std::vector<double>>& columns, const std::vector<bool>& labels) {
    ScoreSet set;
    set.n_models = columns.size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        set.pairs.push_back({"a" + std::to_string(i), "b" + std::to_string(i), labels[i]});
        for (const auto& col : columns) set.scores.push_back(col[i]);
    }
    return set;
}

// Correlated-noise score columns: a shared signal per pair plus per-model
// noise, so no single model dominates by construction.
ScoreSet random_scoreset(Rng& rng, std::size_t n_pairs, std::size_t n_models, double sigma = 0.35) {
    std::normal_distribution<double> noise(0, sigma);
    std::vector<bool> labels(n_pairs);
    std::vector<std::vector<double>> cols(n_models, std::vector<double>(n_pairs));
    for (std::size_t i = 0; i < n_pairs; ++i) {
        labels[i] = rng() % 2 == 0;
        const double base = labels[i] ? 0.45 : -0.45;
        for (std::size_t m = 0; m < n_models; ++m) cols[m][i] = base + noise(rng);
    }
    return make_scoreset(cols, labels);
}

std::vector<std::size_t> all_indices(const ScoreSet& set) {
    std::vector<std::size_t> idx(set.pairs.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

std::size_t count_errors(const ScoreSet& set, const std::vector<double>& weights, double threshold) {
    const auto fused = fuse_weighted(set, weights);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < fused.size(); ++i)
        if ((fused[i] >= threshold) != set.pairs[i].same) ++errors;
    return errors;
}

}  // namespace

TEST_CASE("fuse_average") {
    const ScoreSet one = make_scoreset({{0.2, 0.5}}, {true, false});
    CHECK(fuse_average(one) == std::vector<double>{0.2, 0.5});

    const ScoreSet twin = make_scoreset({{0.2, 0.5}, {0.2, 0.5}}, {true, false});
    CHECK(fuse_average(twin) == std::vector<double>{0.2, 0.5});

    const ScoreSet cross = make_scoreset({{1, 0}, {0, 1}}, {true, false});
    CHECK(fuse_average(cross) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("fuse_weighted") {
    const ScoreSet set = make_scoreset({{4, 0}, {0, 4}}, {true, false});
    CHECK(fuse_weighted(set, {0.25, 0.75}) == std::vector<double>{1, 3});
    CHECK(fuse_weighted(set, {0.0, 1.0}) == set.column(1));
    CHECK_THROWS_AS(fuse_weighted(set, {1.0}), Error);

    Rng rng(30);
    const ScoreSet big = random_scoreset(rng, 50, 4);
    CHECK(fuse_weighted(big, {0.25, 0.25, 0.25, 0.25}) == fuse_average(big));
}

TEST_CASE("grid_search_ensemble") {
    SUBCASE("one model reduces to the 1-D threshold sweep") {
        Rng rng(31);
        const ScoreSet set = random_scoreset(rng, 100, 1);
        const EnsembleModel m = grid_search_ensemble(set, all_indices(set), {0.25});
        CHECK(m.weights == std::vector<double>{1.0});
        CHECK(m.threshold == testutil::oracle_best_threshold(set.column(0), set.labels()).first);
    }
    SUBCASE("a perfect model among noise reaches zero training error") {
        Rng rng(32);
        std::vector<bool> labels(80);
        std::vector<double> good(80), junk(80);
        std::uniform_real_distribution<double> uni(-1, 1);
        for (std::size_t i = 0; i < 80; ++i) {
            labels[i] = rng() % 2 == 0;
            good[i] = labels[i] ? 0.5 + 0.1 * uni(rng) : -0.5 + 0.1 * uni(rng);
            junk[i] = uni(rng);
        }
        const ScoreSet set = make_scoreset({junk, good}, labels);
        const EnsembleModel m = grid_search_ensemble(set, all_indices(set), {0.25});
        CHECK(count_errors(set, m.weights, m.threshold) == 0);
    }
    SUBCASE("matches the exhaustive enumeration oracle at spacing 0.25") {
        Rng rng(33);
        const ScoreSet set = random_scoreset(rng, 200, 3);
        const auto train = all_indices(set);
        const EnsembleModel m = grid_search_ensemble(set, train, {0.25});

        // Independent oracle: nested loops over the 0.25 simplex grid, for
        // every weight vector sweep every fused value as a threshold.
        std::size_t best_err = set.pairs.size() + 1;
        for (int a = 0; a <= 4; ++a) {
            for (int b = 0; a + b <= 4; ++b) {
                const int c = 4 - a - b;
                const std::vector<double> w = {a / 4.0, b / 4.0, c / 4.0};
                const auto fused = fuse_weighted(set, w);
                for (double t : fused) {
                    std::size_t err = 0;
                    for (std::size_t i = 0; i < fused.size(); ++i)
                        if ((fused[i] >= t) != set.pairs[i].same) ++err;
                    best_err = std::min(best_err, err);
                }
            }
        }
        CHECK(count_errors(set, m.weights, m.threshold) == best_err);
    }
    SUBCASE("never worse than the best single model") {
        Rng rng(34);
        for (int trial = 0; trial < 5; ++trial) {
            const ScoreSet set = random_scoreset(rng, 150, 3);
            const auto train = all_indices(set);
            const EnsembleModel m = grid_search_ensemble(set, train, {0.25});
            const std::size_t ens_err = count_errors(set, m.weights, m.threshold);
            for (std::size_t j = 0; j < 3; ++j) {
                const double acc = testutil::oracle_best_threshold(set.column(j), set.labels()).second;
                const auto single_err =
                    static_cast<std::size_t>(std::llround((1.0 - acc) * double(set.pairs.size())));
                CHECK(ens_err <= single_err);
            }
        }
    }
    SUBCASE("deterministic and invariant to a common positive scale") {
        Rng rng(35);
        ScoreSet set = random_scoreset(rng, 120, 3);
        const auto train = all_indices(set);
        const EnsembleModel m1 = grid_search_ensemble(set, train, {0.25});
        const EnsembleModel m2 = grid_search_ensemble(set, train, {0.25});
        CHECK(m1.weights == m2.weights);
        CHECK(m1.threshold == m2.threshold);

        ScoreSet scaled = set;
        for (double& s : scaled.scores) s *= 4.0;
        const EnsembleModel m3 = grid_search_ensemble(scaled, train, {0.25});
        CHECK(m3.weights == m1.weights);
    }
    SUBCASE("single-class training data is an error") {
        ScoreSet set = make_scoreset({{0.1, 0.2}}, {true, true});
        CHECK_THROWS_AS(grid_search_ensemble(set, all_indices(set), {0.5}), Error);
    }
    SUBCASE("weight_step must divide 1") {
        Rng rng(36);
        const ScoreSet set = random_scoreset(rng, 20, 2);
        CHECK_THROWS_AS(grid_search_ensemble(set, all_indices(set), {0.3}), Error);
    }
}

TEST_CASE("refine_ensemble tracks the exhaustive search closely") {
    Rng rng(37);
    for (int trial = 0; trial < 5; ++trial) {
        const ScoreSet set = random_scoreset(rng, 120, 3);
        const auto train = all_indices(set);
        const EnsembleModel full = grid_search_ensemble(set, train, {0.25});
        const EnsembleModel heur = refine_ensemble(set, train, {0.25});
        const std::size_t full_err = count_errors(set, full.weights, full.threshold);
        const std::size_t heur_err = count_errors(set, heur.weights, heur.threshold);
        CHECK(heur_err <= full_err + 3);  // heuristic slack on 120 pairs
        heur.validate();
    }
}

TEST_CASE("tenfold_ensemble") {
    SUBCASE("perfect single model gives mean accuracy 1") {
        Rng rng(38);
        std::vector<bool> labels(100);
        std::vector<double> col(100);
        for (std::size_t i = 0; i < 100; ++i) {
            labels[i] = rng() % 2 == 0;
            col[i] = labels[i] ? 0.8 : -0.8;
        }
        const ScoreSet set = make_scoreset({col}, labels);
        const FoldSplit folds = make_folds(set.pairs, 10, 1, true);
        CHECK(tenfold_ensemble(set, folds, {0.25}).mean_accuracy == 1.0);
    }
    SUBCASE("mean equals the arithmetic mean of fold accuracies") {
        Rng rng(39);
        const ScoreSet set = random_scoreset(rng, 150, 2);
        const FoldSplit folds = make_folds(set.pairs, 5, 2, true);
        const TenfoldEnsembleResult res = tenfold_ensemble(set, folds, {0.25});
        double mean = 0;
        for (double a : res.fold_accuracy) mean += a;
        CHECK(res.mean_accuracy == mean / 5.0);
        CHECK(res.fold_models.size() == 5);
        for (const auto& m : res.fold_models) m.validate();
    }
}
