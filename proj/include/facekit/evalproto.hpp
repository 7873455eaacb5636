#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

#include "facekit/embedding.hpp"
#include "facekit/types.hpp"

namespace facekit {

// Per-pair similarity scores, one column per embedding model.
struct ScoreSet {
    std::vector<LabeledPair> pairs;
    std::size_t n_models = 0;
    std::vector<double> scores;  // row-major, n_pairs x n_models

    double at(std::size_t pair, std::size_t model) const { return scores[pair * n_models + model]; }
    std::vector<double> column(std::size_t model) const {
        std::vector<double> col(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) col[i] = at(i, model);
        return col;
    }
    std::vector<bool> labels() const {
        std::vector<bool> l(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) l[i] = pairs[i].same;
        return l;
    }
};

namespace detail {

// Deterministic parallel-for: fixed contiguous partition per thread, results
// written by index, so the outcome is independent of thread count.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const unsigned t = std::min<unsigned>(threads, static_cast<unsigned>(n));
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (unsigned w = 0; w < t; ++w) {
        const std::size_t lo = n * w / t, hi = n * (w + 1) / t;
        pool.emplace_back([&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

// scores[i][m] = similarity of pair i under model m. Embeddings of referenced
// faces are computed once per model.
inline ScoreSet score_pairs(const std::vector<EmbeddingModel>& models, const Dataset& ds,
                            const std::vector<LabeledPair>& pairs, const std::vector<std::uint32_t>& patch_ids,
                            unsigned threads = 1) {
    if (models.empty()) throw Error("score_pairs: no models");
    ScoreSet set;
    set.pairs = pairs;
    set.n_models = models.size();
    set.scores.assign(pairs.size() * models.size(), 0.0);

    const ConcatMatrix feats = build_concat_matrix(ds, patch_ids);
    std::vector<std::pair<std::size_t, std::size_t>> resolved(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
        resolved[i] = {ds.resolve(pairs[i].face_a), ds.resolve(pairs[i].face_b)};

    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const EmbeddingModel& m = models[mi];
        if (!m.normalize) throw Error("score_pairs: model " + std::to_string(mi) + " is not normalizing");
        std::vector<std::vector<double>> emb(ds.size());
        detail::parallel_for(ds.size(), threads, [&](std::size_t i) { emb[i] = embed(m, feats.row(i)); });
        detail::parallel_for(pairs.size(), threads, [&](std::size_t i) {
            set.scores[i * set.n_models + mi] =
                std::clamp(dot(emb[resolved[i].first], emb[resolved[i].second]), -1.0, 1.0);
        });
    }
    return set;
}

// Cosine of the raw concatenated features; the no-embedding baseline.
inline std::vector<double> raw_cosine_scores(const Dataset& ds, const std::vector<LabeledPair>& pairs,
                                             const std::vector<std::uint32_t>& patch_ids) {
    const ConcatMatrix feats = build_concat_matrix(ds, patch_ids);
    std::vector<double> out(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto a = feats.row(ds.resolve(pairs[i].face_a));
        const auto b = feats.row(ds.resolve(pairs[i].face_b));
        const double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
        if (na == 0 || nb == 0) throw Error("raw_cosine_scores: zero feature vector");
        out[i] = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
    }
    return out;
}

struct RocPoint {
    double threshold = 0, far = 0, tar = 0;
};

// Operating points at every distinct score value plus a +inf sentinel,
// sorted by descending threshold. Decision rule: accept iff score >= t.
struct RocCurve {
    std::vector<RocPoint> points;
};

inline RocCurve roc_curve(const std::vector<double>& scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw Error("roc_curve: size mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (bool l : labels) (l ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) throw Error("roc_curve: need at least one positive and one negative");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t pos_seen = 0, neg_seen = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double t = scores[order[i]];
        while (i < order.size() && scores[order[i]] == t) {
            (labels[order[i]] ? pos_seen : neg_seen)++;
            ++i;
        }
        curve.points.push_back({t, static_cast<double>(neg_seen) / static_cast<double>(n_neg),
                                static_cast<double>(pos_seen) / static_cast<double>(n_pos)});
    }
    return curve;
}

// Trapezoidal area under the (FAR, TAR) step curve; equals the Mann-Whitney
// statistic with ties counted half.
inline double auc(const RocCurve& curve) {
    double area = 0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const RocPoint& a = curve.points[i - 1];
        const RocPoint& b = curve.points[i];
        area += (b.far - a.far) * 0.5 * (a.tar + b.tar);
    }
    return area;
}

// Most permissive observed threshold still meeting FAR <= far_target, with
// its TAR. No interpolation; falls back to the +inf sentinel (tar 0) when no
// observed score qualifies.
inline std::pair<double, double> tar_at_far(const std::vector<double>& scores, const std::vector<bool>& labels,
                                            double far_target) {
    const RocCurve curve = roc_curve(scores, labels);
    double tar = 0.0, threshold = std::numeric_limits<double>::infinity();
    for (const RocPoint& p : curve.points) {
        if (p.far <= far_target) {
            tar = p.tar;
            threshold = p.threshold;
        } else {
            break;
        }
    }
    return {tar, threshold};
}

struct TenfoldResult {
    double mean_accuracy = 0;
    std::vector<double> fold_accuracy;
    std::vector<double> fold_threshold;
};

namespace detail {

// Best-accuracy threshold over the observed candidate scores; ties go to the
// smallest threshold.
inline std::pair<double, double> best_threshold(const std::vector<double>& scores, const std::vector<bool>& labels) {
    std::size_t n_pos = 0, n_neg = 0;
    for (bool l : labels) (l ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) throw Error("threshold fit: training data has a single class");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Walking candidates in ascending order: at threshold t, accepted set is
    // everything with score >= t.
    double best_t = 0, best_acc = -1;
    std::size_t pos_below = 0, neg_below = 0;
    const double n = static_cast<double>(scores.size());
    for (std::size_t i = 0; i < order.size();) {
        const double t = scores[order[i]];
        const double acc = (static_cast<double>(n_pos - pos_below) + static_cast<double>(neg_below)) / n;
        if (acc > best_acc) {
            best_acc = acc;
            best_t = t;
        }
        while (i < order.size() && scores[order[i]] == t) {
            (labels[order[i]] ? pos_below : neg_below)++;
            ++i;
        }
    }
    return {best_t, best_acc};
}

inline double accuracy_at(const std::vector<double>& scores, const std::vector<bool>& labels, double t) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if ((scores[i] >= t) == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

}  // namespace detail

// Per fold: calibrate the accept threshold on the other folds, test on the
// fold; report per-fold accuracies/thresholds and their mean.
inline TenfoldResult pairwise_accuracy_tenfold(const std::vector<double>& score_per_pair,
                                               const std::vector<LabeledPair>& pairs, const FoldSplit& folds) {
    if (score_per_pair.size() != pairs.size()) throw Error("pairwise_accuracy_tenfold: score/pair size mismatch");
    if (folds.total() != pairs.size()) throw Error("pairwise_accuracy_tenfold: folds do not partition the pairs");
    TenfoldResult res;
    for (std::size_t f = 0; f < folds.k(); ++f) {
        std::vector<double> train_s, test_s;
        std::vector<bool> train_l, test_l;
        for (std::size_t g = 0; g < folds.k(); ++g) {
            for (std::size_t idx : folds.folds[g]) {
                if (g == f) {
                    test_s.push_back(score_per_pair[idx]);
                    test_l.push_back(pairs[idx].same);
                } else {
                    train_s.push_back(score_per_pair[idx]);
                    train_l.push_back(pairs[idx].same);
                }
            }
        }
        const auto [t, train_acc] = detail::best_threshold(train_s, train_l);
        (void)train_acc;
        res.fold_threshold.push_back(t);
        res.fold_accuracy.push_back(detail::accuracy_at(test_s, test_l, t));
    }
    double sum = 0;
    for (double a : res.fold_accuracy) sum += a;
    res.mean_accuracy = sum / static_cast<double>(res.fold_accuracy.size());
    return res;
}

// Gallery/probe partition for closed- and open-set identification. Vectors
// are unit embeddings; similarity is their inner product.
struct IdentificationSetup {
    std::vector<std::pair<std::string, std::vector<double>>> gallery;
    std::vector<std::pair<std::string, std::vector<double>>> mated_probes;
    std::vector<std::vector<double>> nonmated_probes;
};

// Fraction of mated probes whose top gallery match (ties to the lowest
// gallery position) carries the probe's identity.
inline double rank1_identification(const IdentificationSetup& setup) {
    if (setup.gallery.empty()) throw Error("rank1_identification: empty gallery");
    if (setup.mated_probes.empty()) throw Error("rank1_identification: no mated probes");
    std::size_t correct = 0;
    for (const auto& [identity, probe] : setup.mated_probes) {
        std::size_t best = 0;
        double best_s = dot(setup.gallery[0].second, probe);
        for (std::size_t g = 1; g < setup.gallery.size(); ++g) {
            const double s = dot(setup.gallery[g].second, probe);
            if (s > best_s) {
                best_s = s;
                best = g;
            }
        }
        if (setup.gallery[best].first == identity) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(setup.mated_probes.size());
}

// Open-set detection-and-identification. Each nonmated probe's top-1 gallery
// similarity is its alarm score; the threshold is the most permissive
// observed alarm score with false-alarm fraction <= far_target. A mated
// probe counts when its identity ranks within `rank` and its gallery match
// scores >= threshold.
inline std::pair<double, double> dir_at_far(const IdentificationSetup& setup, double far_target, std::size_t rank) {
    if (setup.gallery.empty()) throw Error("dir_at_far: empty gallery");
    if (setup.mated_probes.empty()) throw Error("dir_at_far: no mated probes");
    if (setup.nonmated_probes.empty()) throw Error("dir_at_far: no nonmated probes");
    if (rank == 0 || rank > setup.gallery.size()) throw Error("dir_at_far: rank out of range");

    std::vector<double> alarms;
    alarms.reserve(setup.nonmated_probes.size());
    for (const auto& probe : setup.nonmated_probes) {
        double best = dot(setup.gallery[0].second, probe);
        for (std::size_t g = 1; g < setup.gallery.size(); ++g) best = std::max(best, dot(setup.gallery[g].second, probe));
        alarms.push_back(best);
    }
    std::vector<double> cand = alarms;
    std::sort(cand.begin(), cand.end());
    // One candidate just above the largest alarm makes FAR = 0 reachable.
    cand.push_back(std::nextafter(cand.back(), std::numeric_limits<double>::infinity()));
    const double n_nm = static_cast<double>(alarms.size());
    double threshold = std::numeric_limits<double>::infinity();
    for (double t : cand) {
        std::size_t fired = 0;
        for (double a : alarms)
            if (a >= t) ++fired;
        if (static_cast<double>(fired) / n_nm <= far_target) {
            threshold = t;
            break;
        }
    }

    std::size_t detected = 0;
    std::vector<std::pair<double, std::size_t>> ranked(setup.gallery.size());
    for (const auto& [identity, probe] : setup.mated_probes) {
        for (std::size_t g = 0; g < setup.gallery.size(); ++g)
            ranked[g] = {dot(setup.gallery[g].second, probe), g};
        // Descending score, ties to the lowest gallery position.
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t r = 0; r < rank; ++r) {
            if (setup.gallery[ranked[r].second].first == identity) {
                if (ranked[r].first >= threshold) ++detected;
                break;
            }
        }
    }
    return {static_cast<double>(detected) / static_cast<double>(setup.mated_probes.size()), threshold};
}

enum class ErrorKind { FalseAccept, FalseReject };

struct Failure {
    LabeledPair pair;
    std::size_t pair_index = 0;
    double score = 0;
    ErrorKind kind = ErrorKind::FalseAccept;
};

// Misclassified pairs under (score >= threshold -> same), sorted by distance
// from the threshold, most confident mistakes first.
inline std::vector<Failure> failure_report(const std::vector<double>& score_per_pair,
                                           const std::vector<LabeledPair>& pairs, double threshold) {
    if (score_per_pair.size() != pairs.size()) throw Error("failure_report: size mismatch");
    std::vector<Failure> out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const bool accept = score_per_pair[i] >= threshold;
        if (accept == pairs[i].same) continue;
        out.push_back({pairs[i], i, score_per_pair[i], accept ? ErrorKind::FalseAccept : ErrorKind::FalseReject});
    }
    std::sort(out.begin(), out.end(), [&](const Failure& a, const Failure& b) {
        const double da = std::abs(a.score - threshold), db = std::abs(b.score - threshold);
        if (da != db) return da > db;
        return a.pair_index < b.pair_index;
    });
    return out;
}

}  // namespace facekit
