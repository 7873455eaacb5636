#pragma once

#include <sstream>

#include "facekit/ensemble.hpp"
#include "facekit/evalproto.hpp"
#include "facekit/synth.hpp"

namespace facekit {

// One pipeline cell: generate training data, train an embedding, score a
// held-out pair set from freshly drawn identities, and take the ten-fold
// pairwise error. Evaluation identities come from a separate generator seed,
// so their centroids are disjoint from training.
struct PipelineConfig {
    TrainConfig train;
    std::size_t eval_identities = 50;
    std::size_t eval_faces_per_identity = 4;
    std::size_t n_pairs = 300;  // split evenly same/different
    std::size_t k_folds = 10;
    std::uint64_t eval_seed_offset = 7777;
};

struct SweepRow {
    std::string label;
    std::size_t n_identities = 0;
    std::size_t n_faces = 0;
    std::size_t n_patches = 0;
    double error_rate = 0;
    std::uint64_t seed = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

namespace detail {

struct CellEval {
    Dataset eval_ds;
    std::vector<LabeledPair> pairs;
    FoldSplit folds;
    std::vector<std::uint32_t> patch_ids;
};

inline CellEval make_cell_eval(const SynthConfig& cfg, const std::vector<std::uint32_t>& patch_ids,
                               const PipelineConfig& pc) {
    SynthConfig eval_cfg = cfg;
    eval_cfg.n_identities = pc.eval_identities;
    eval_cfg.faces_per_identity = pc.eval_faces_per_identity;
    eval_cfg.seed = mix_seed(cfg.seed, pc.eval_seed_offset);
    CellEval ce;
    ce.eval_ds = generate(eval_cfg);
    ce.pairs = sample_pairs(ce.eval_ds, pc.n_pairs / 2, pc.n_pairs - pc.n_pairs / 2, mix_seed(eval_cfg.seed, 1));
    ce.folds = make_folds(ce.pairs, pc.k_folds, mix_seed(eval_cfg.seed, 2), /*stratified=*/true);
    ce.patch_ids = patch_ids;
    return ce;
}

}  // namespace detail

// Ten-fold pairwise error of a trained embedding on held-out identities.
inline double pipeline_cell_error(const SynthConfig& cfg, const std::vector<std::uint32_t>& patch_ids,
                                  const PipelineConfig& pc) {
    const Dataset train_ds = generate(cfg);
    TrainConfig tc = pc.train;
    tc.seed = mix_seed(cfg.seed, 31);
    const EmbeddingModel model = train(train_ds, patch_ids, tc);
    const detail::CellEval ce = detail::make_cell_eval(cfg, patch_ids, pc);
    const ScoreSet scores = score_pairs({model}, ce.eval_ds, ce.pairs, ce.patch_ids);
    const TenfoldResult res = pairwise_accuracy_tenfold(scores.column(0), ce.pairs, ce.folds);
    return 1.0 - res.mean_accuracy;
}

// Same protocol on raw concatenated-feature cosine, the no-training baseline.
inline double baseline_cell_error(const SynthConfig& cfg, const std::vector<std::uint32_t>& patch_ids,
                                  const PipelineConfig& pc) {
    const detail::CellEval ce = detail::make_cell_eval(cfg, patch_ids, pc);
    const std::vector<double> scores = raw_cosine_scores(ce.eval_ds, ce.pairs, ce.patch_ids);
    const TenfoldResult res = pairwise_accuracy_tenfold(scores, ce.pairs, ce.folds);
    return 1.0 - res.mean_accuracy;
}

inline std::vector<std::uint32_t> first_patches(std::size_t count) {
    std::vector<std::uint32_t> ids(count);
    std::iota(ids.begin(), ids.end(), 0u);
    return ids;
}

// Error rate as the amount of training data grows (identities x faces per
// identity), all patches in play.
inline SweepResult data_sweep(const SynthConfig& base,
                              const std::vector<std::pair<std::size_t, std::size_t>>& sizes,
                              const PipelineConfig& pc) {
    if (sizes.empty()) throw Error("data_sweep: no sizes requested");
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i].first * sizes[i].second < sizes[i - 1].first * sizes[i - 1].second)
            throw Error("data_sweep: sizes must be nondecreasing in total faces");
    const std::vector<std::uint32_t> patch_ids = first_patches(base.n_patches);
    SweepResult result;
    for (const auto& [ids, faces] : sizes) {
        SynthConfig cfg = base;
        cfg.n_identities = ids;
        cfg.faces_per_identity = faces;
        SweepRow row;
        row.label = std::to_string(ids) + "x" + std::to_string(faces);
        row.n_identities = ids;
        row.n_faces = ids * faces;
        row.n_patches = base.n_patches;
        row.seed = cfg.seed;
        row.error_rate = pipeline_cell_error(cfg, patch_ids, pc);
        result.rows.push_back(std::move(row));
    }
    return result;
}

// Error rate as more patches are concatenated; the metric stage is retrained
// per patch count.
inline SweepResult patch_sweep(const SynthConfig& base, const std::vector<std::size_t>& patch_counts,
                               const PipelineConfig& pc) {
    if (patch_counts.empty()) throw Error("patch_sweep: no patch counts requested");
    SweepResult result;
    for (std::size_t count : patch_counts) {
        if (count == 0 || count > base.n_patches)
            throw Error("patch_sweep: patch count " + std::to_string(count) + " out of range");
        SweepRow row;
        row.label = std::to_string(count) + "patch";
        row.n_identities = base.n_identities;
        row.n_faces = base.n_identities * base.faces_per_identity;
        row.n_patches = count;
        row.seed = base.seed;
        row.error_rate = pipeline_cell_error(base, first_patches(count), pc);
        result.rows.push_back(std::move(row));
    }
    return result;
}

inline std::string sweep_to_csv(const SweepResult& result) {
    std::ostringstream os;
    os << "label,n_identities,n_faces,n_patches,error_rate,seed\n";
    os.precision(17);
    for (const SweepRow& r : result.rows)
        os << r.label << ',' << r.n_identities << ',' << r.n_faces << ',' << r.n_patches << ',' << r.error_rate
           << ',' << r.seed << '\n';
    return os.str();
}

inline SweepResult sweep_from_csv(std::istream& is) {
    SweepResult result;
    std::string line;
    if (!std::getline(is, line) || line != "label,n_identities,n_faces,n_patches,error_rate,seed")
        throw Error("sweep CSV: bad header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        SweepRow r;
        std::string field;
        std::getline(ss, r.label, ',');
        std::getline(ss, field, ',');
        r.n_identities = std::stoull(field);
        std::getline(ss, field, ',');
        r.n_faces = std::stoull(field);
        std::getline(ss, field, ',');
        r.n_patches = std::stoull(field);
        std::getline(ss, field, ',');
        r.error_rate = std::stod(field);
        std::getline(ss, field, ',');
        r.seed = std::stoull(field);
        result.rows.push_back(std::move(r));
    }
    return result;
}

}  // namespace facekit
