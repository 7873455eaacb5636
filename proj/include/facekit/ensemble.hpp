#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "facekit/evalproto.hpp"

namespace facekit {

// Nonnegative per-model weights on the probability simplex plus an accept
// threshold on the fused score.
struct EnsembleModel {
    std::vector<double> weights;
    double threshold = 0;

    void validate() const {
        double sum = 0;
        for (double w : weights) {
            if (w < 0) throw Error("EnsembleModel: negative weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw Error("EnsembleModel: weights must sum to 1");
    }
};

struct GridConfig {
    double weight_step = 0.05;

    std::size_t steps() const {
        const double inv = 1.0 / weight_step;
        const auto m = static_cast<std::size_t>(std::llround(inv));
        if (weight_step <= 0 || weight_step > 1 || std::abs(inv - static_cast<double>(m)) > 1e-9)
            throw Error("GridConfig: 1/weight_step must be a positive integer");
        return m;
    }

    // Number of grid points on the simplex: C(m + n - 1, n - 1).
    static double grid_size(std::size_t m, std::size_t n_models) {
        double v = 1;
        for (std::size_t i = 1; i < n_models; ++i) v *= static_cast<double>(m + i) / static_cast<double>(i);
        return v;
    }
};

inline std::vector<double> fuse_average(const ScoreSet& set) {
    if (set.n_models == 0) throw Error("fuse_average: no model columns");
    std::vector<double> out(set.pairs.size());
    for (std::size_t i = 0; i < set.pairs.size(); ++i) {
        double s = 0;
        for (std::size_t m = 0; m < set.n_models; ++m) s += set.at(i, m);
        out[i] = s / static_cast<double>(set.n_models);
    }
    return out;
}

inline std::vector<double> fuse_weighted(const ScoreSet& set, const std::vector<double>& weights) {
    if (weights.size() != set.n_models) throw Error("fuse_weighted: weight count != model count");
    std::vector<double> out(set.pairs.size());
    for (std::size_t i = 0; i < set.pairs.size(); ++i) {
        double s = 0;
        for (std::size_t m = 0; m < set.n_models; ++m) s += weights[m] * set.at(i, m);
        out[i] = s;
    }
    return out;
}

namespace detail {

// Visits every composition of m into n parts in lexicographically ascending
// order of the resulting weight vector.
template <typename F>
void enumerate_simplex(std::size_t n, std::size_t m, F&& visit) {
    std::vector<std::size_t> counts(n);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
        if (pos + 1 == n) {
            counts[pos] = left;
            visit(static_cast<const std::vector<std::size_t>&>(counts));
            return;
        }
        for (std::size_t c = 0; c <= left; ++c) {
            counts[pos] = c;
            rec(pos + 1, left - c);
        }
    };
    rec(0, m);
}

// Best threshold over the fused training scores, minimizing classification
// error; ties to the smallest threshold. Returns {threshold, n_errors}.
inline std::pair<double, std::size_t> sweep_threshold(const std::vector<double>& fused,
                                                      const std::vector<bool>& labels) {
    const auto [t, acc] = best_threshold(fused, labels);
    const auto n = static_cast<double>(fused.size());
    return {t, static_cast<std::size_t>(std::llround((1.0 - acc) * n))};
}

}  // namespace detail

// Exhaustive grid search over the weight simplex at the configured spacing,
// sweeping all observed fused training scores as thresholds. Ties break to
// the lexicographically smallest weight vector, then the smallest threshold.
inline EnsembleModel grid_search_ensemble(const ScoreSet& set, const std::vector<std::size_t>& train_indices,
                                          const GridConfig& grid) {
    if (set.n_models == 0) throw Error("grid_search_ensemble: no model columns");
    if (train_indices.empty()) throw Error("grid_search_ensemble: empty training set");
    const std::size_t m = grid.steps();

    std::vector<bool> labels(train_indices.size());
    for (std::size_t i = 0; i < train_indices.size(); ++i) labels[i] = set.pairs[train_indices[i]].same;

    EnsembleModel best;
    std::size_t best_errors = train_indices.size() + 1;
    std::vector<double> fused(train_indices.size());
    detail::enumerate_simplex(set.n_models, m, [&](const std::vector<std::size_t>& counts) {
        std::vector<double> w(set.n_models);
        for (std::size_t j = 0; j < set.n_models; ++j)
            w[j] = static_cast<double>(counts[j]) / static_cast<double>(m);
        for (std::size_t i = 0; i < train_indices.size(); ++i) {
            double s = 0;
            for (std::size_t j = 0; j < set.n_models; ++j) s += w[j] * set.at(train_indices[i], j);
            fused[i] = s;
        }
        const auto [t, errors] = detail::sweep_threshold(fused, labels);
        if (errors < best_errors) {  // lex-ascending enumeration keeps the first tie
            best_errors = errors;
            best.weights = std::move(w);
            best.threshold = t;
        }
    });
    best.validate();
    return best;
}

// Coordinate-wise refinement for model counts where the full simplex grid is
// infeasible: start uniform, re-optimize one weight at a time over its grid
// values (renormalizing), stop when a sweep yields no improvement.
inline EnsembleModel refine_ensemble(const ScoreSet& set, const std::vector<std::size_t>& train_indices,
                                     const GridConfig& grid, std::size_t max_sweeps = 50) {
    if (set.n_models == 0) throw Error("refine_ensemble: no model columns");
    if (train_indices.empty()) throw Error("refine_ensemble: empty training set");
    const std::size_t m = grid.steps();

    std::vector<bool> labels(train_indices.size());
    for (std::size_t i = 0; i < train_indices.size(); ++i) labels[i] = set.pairs[train_indices[i]].same;

    // Unnormalized grid counts, normalized for evaluation.
    std::vector<std::size_t> counts(set.n_models, 1);
    std::vector<double> fused(train_indices.size());
    auto evaluate = [&](const std::vector<std::size_t>& c) -> std::pair<double, std::size_t> {
        std::size_t total = 0;
        for (std::size_t v : c) total += v;
        if (total == 0) return {0.0, train_indices.size() + 1};
        for (std::size_t i = 0; i < train_indices.size(); ++i) {
            double s = 0;
            for (std::size_t j = 0; j < set.n_models; ++j)
                s += static_cast<double>(c[j]) * set.at(train_indices[i], j);
            fused[i] = s / static_cast<double>(total);
        }
        return detail::sweep_threshold(fused, labels);
    };

    auto [best_t, best_errors] = evaluate(counts);
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        bool improved = false;
        for (std::size_t j = 0; j < set.n_models; ++j) {
            std::size_t best_c = counts[j];
            for (std::size_t c = 0; c <= m; ++c) {
                if (c == counts[j]) continue;
                std::vector<std::size_t> trial = counts;
                trial[j] = c;
                const auto [t, errors] = evaluate(trial);
                if (errors < best_errors) {
                    best_errors = errors;
                    best_t = t;
                    best_c = c;
                    improved = true;
                }
            }
            counts[j] = best_c;
        }
        if (!improved) break;
    }

    std::size_t total = 0;
    for (std::size_t v : counts) total += v;
    EnsembleModel model;
    model.weights.resize(set.n_models);
    for (std::size_t j = 0; j < set.n_models; ++j)
        model.weights[j] = static_cast<double>(counts[j]) / static_cast<double>(total);
    model.threshold = best_t;
    // Snap the weight sum exactly; integer counts over a common total already
    // sum to 1 up to rounding.
    double sum = 0;
    for (double w : model.weights) sum += w;
    for (double& w : model.weights) w /= sum;
    model.validate();
    return model;
}

struct TenfoldEnsembleResult {
    double mean_accuracy = 0;
    std::vector<double> fold_accuracy;
    std::vector<EnsembleModel> fold_models;
};

// Fit an ensemble on the complement of each fold, test on the fold.
inline TenfoldEnsembleResult tenfold_ensemble(const ScoreSet& set, const FoldSplit& folds, const GridConfig& grid,
                                              bool exhaustive = true) {
    if (folds.total() != set.pairs.size()) throw Error("tenfold_ensemble: folds do not partition the pairs");
    TenfoldEnsembleResult res;
    for (std::size_t f = 0; f < folds.k(); ++f) {
        std::vector<std::size_t> train;
        for (std::size_t g = 0; g < folds.k(); ++g)
            if (g != f) train.insert(train.end(), folds.folds[g].begin(), folds.folds[g].end());
        const EnsembleModel model =
            exhaustive ? grid_search_ensemble(set, train, grid) : refine_ensemble(set, train, grid);
        const std::vector<double> fused = fuse_weighted(set, model.weights);
        std::size_t correct = 0;
        for (std::size_t idx : folds.folds[f])
            if ((fused[idx] >= model.threshold) == set.pairs[idx].same) ++correct;
        res.fold_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(folds.folds[f].size()));
        res.fold_models.push_back(model);
    }
    double sum = 0;
    for (double a : res.fold_accuracy) sum += a;
    res.mean_accuracy = sum / static_cast<double>(res.fold_accuracy.size());
    return res;
}

}  // namespace facekit
