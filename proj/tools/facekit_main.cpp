// facekit command-line toolkit: synthetic data generation, triplet-loss
// embedding training, pair scoring, verification/identification evaluation,
// score-level ensembling, and the data/patch sweeps.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "facekit/facekit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw facekit::Error("cannot open '" + path.string() + "' for writing");
    os << text;
}

void write_json_file(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<std::uint32_t> parse_patch_ids(const std::string& csv, const facekit::Dataset& ds) {
    if (csv.empty()) return ds.patch_schema();
    std::vector<std::uint32_t> ids;
    std::istringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) ids.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
    if (ids.empty()) throw facekit::Error("empty patch id list");
    return ids;
}

json train_config_json(const facekit::TrainConfig& tc) {
    return {{"output_dim", tc.output_dim},
            {"margin", tc.margin},
            {"learning_rate", tc.learning_rate},
            {"epochs", tc.epochs},
            {"batch_size", tc.batch_size},
            {"triplets_per_epoch", tc.triplets_per_epoch},
            {"sampling", tc.sampling == facekit::Sampling::SemiHard ? "semi_hard" : "uniform"},
            {"seed", tc.seed},
            {"init_scale", tc.init_scale}};
}

void add_train_options(CLI::App* cmd, facekit::TrainConfig& tc, std::string& sampling) {
    cmd->add_option("--output-dim", tc.output_dim, "Embedding dimension");
    cmd->add_option("--margin", tc.margin, "Triplet hinge margin");
    cmd->add_option("--lr", tc.learning_rate, "SGD learning rate");
    cmd->add_option("--epochs", tc.epochs, "Training epochs");
    cmd->add_option("--batch", tc.batch_size, "Minibatch size");
    cmd->add_option("--triplets", tc.triplets_per_epoch, "Triplets sampled per epoch");
    cmd->add_option("--sampling", sampling, "Triplet sampling: uniform|semi_hard");
    cmd->add_option("--init-scale", tc.init_scale, "Uniform init range for weights");
}

facekit::Sampling parse_sampling(const std::string& s) {
    if (s == "uniform") return facekit::Sampling::Uniform;
    if (s == "semi_hard") return facekit::Sampling::SemiHard;
    throw facekit::Error("unknown sampling strategy '" + s + "'");
}

// scores.csv: face_a,face_b,label,score_0,...  (written by `score`, read by
// `ensemble`).
void write_scores_csv(const fs::path& path, const facekit::ScoreSet& set) {
    std::ostringstream os;
    os << "face_a,face_b,label";
    for (std::size_t m = 0; m < set.n_models; ++m) os << ",score_" << m;
    os << '\n';
    os.precision(17);
    for (std::size_t i = 0; i < set.pairs.size(); ++i) {
        os << set.pairs[i].face_a << ',' << set.pairs[i].face_b << ',' << (set.pairs[i].same ? 1 : 0);
        for (std::size_t m = 0; m < set.n_models; ++m) os << ',' << set.at(i, m);
        os << '\n';
    }
    write_text(path, os.str());
}

facekit::ScoreSet read_scores_csv(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw facekit::Error("cannot open scores file '" + path.string() + "'");
    std::string line;
    if (!std::getline(is, line) || line.rfind("face_a,face_b,label", 0) != 0)
        throw facekit::Error("scores file '" + path.string() + "': bad header");
    std::size_t n_models = 0;
    for (std::size_t pos = 0; (pos = line.find(",score_", pos)) != std::string::npos; ++pos) ++n_models;
    if (n_models == 0) throw facekit::Error("scores file '" + path.string() + "': no score columns");
    facekit::ScoreSet set;
    set.n_models = n_models;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        facekit::LabeledPair p;
        std::string field;
        std::getline(ss, p.face_a, ',');
        std::getline(ss, p.face_b, ',');
        std::getline(ss, field, ',');
        p.same = field == "1";
        set.pairs.push_back(p);
        for (std::size_t m = 0; m < n_models; ++m) {
            if (!std::getline(ss, field, ',')) throw facekit::Error("scores file: short row");
            set.scores.push_back(std::stod(field));
        }
    }
    return set;
}

std::string roc_to_csv(const facekit::RocCurve& curve) {
    std::ostringstream os;
    os << "threshold,far,tar\n";
    os.precision(17);
    for (const auto& p : curve.points) os << p.threshold << ',' << p.far << ',' << p.tar << '\n';
    return os.str();
}

// Deterministic gallery/probe split: the first ceil(fraction * n) identities
// (sorted by id) become nonmated probes; for the rest, the first face is
// enrolled and the remaining faces are mated probes.
facekit::IdentificationSetup build_identification(const facekit::Dataset& ds, const facekit::EmbeddingModel& model,
                                                  const std::vector<std::uint32_t>& patch_ids,
                                                  double openset_fraction) {
    const facekit::ConcatMatrix feats = facekit::build_concat_matrix(ds, patch_ids);
    facekit::IdentificationSetup setup;
    const std::size_t n_ids = ds.identity_index.size();
    const auto n_open = static_cast<std::size_t>(std::ceil(openset_fraction * static_cast<double>(n_ids)));
    std::size_t idx = 0;
    for (const auto& [identity, faces] : ds.identity_index) {
        if (idx < n_open) {
            for (std::size_t f : faces) setup.nonmated_probes.push_back(facekit::embed(model, feats.row(f)));
        } else {
            setup.gallery.emplace_back(identity, facekit::embed(model, feats.row(faces[0])));
            for (std::size_t i = 1; i < faces.size(); ++i)
                setup.mated_probes.emplace_back(identity, facekit::embed(model, feats.row(faces[i])));
        }
        ++idx;
    }
    return setup;
}

int run_synth(const GlobalOpts& g, const facekit::SynthConfig& cfg, std::size_t n_pairs) {
    facekit::Dataset ds = facekit::generate(cfg);
    fs::create_directories(g.out_dir);
    facekit::save_dataset(ds, g.out_dir);
    if (n_pairs > 0) {
        const auto pairs = facekit::sample_pairs(ds, n_pairs / 2, n_pairs - n_pairs / 2, facekit::mix_seed(cfg.seed, 91));
        facekit::write_pairs(fs::path(g.out_dir) / "pairs.txt", pairs);
    }
    json report = {{"command", "synth"},
                   {"seed", cfg.seed},
                   {"config",
                    {{"n_identities", cfg.n_identities},
                     {"faces_per_identity", cfg.faces_per_identity},
                     {"n_patches", cfg.n_patches},
                     {"patch_dim", cfg.patch_dim},
                     {"within_noise_sigma", cfg.within_noise_sigma},
                     {"patch_noise_sigma", cfg.patch_noise_sigma},
                     {"n_pairs", n_pairs}}},
                   {"n_records", ds.size()}};
    write_json_file(fs::path(g.out_dir) / "synth_report.json", report);
    return 0;
}

int run_train(const GlobalOpts& g, const std::string& manifest, const std::string& patch_csv,
              facekit::TrainConfig tc, const std::string& model_name) {
    const facekit::Dataset ds = facekit::load_dataset(manifest);
    const auto patch_ids = parse_patch_ids(patch_csv, ds);
    tc.seed = g.seed;
    const facekit::EmbeddingModel model = facekit::train(ds, patch_ids, tc);
    fs::create_directories(g.out_dir);
    facekit::save_model(fs::path(g.out_dir) / model_name, model);

    const facekit::ConcatMatrix feats = facekit::build_concat_matrix(ds, patch_ids);
    const auto probe = facekit::sample_triplets(ds, patch_ids, facekit::Sampling::Uniform, 256,
                                                facekit::mix_seed(tc.seed, 999));
    json report = {{"command", "train"},
                   {"seed", g.seed},
                   {"manifest", manifest},
                   {"patch_ids", patch_ids},
                   {"config", train_config_json(tc)},
                   {"model_file", model_name},
                   {"input_dim", model.input_dim},
                   {"probe_triplet_loss", facekit::mean_triplet_loss(model, feats, probe, tc.margin)}};
    write_json_file(fs::path(g.out_dir) / "train_report.json", report);
    return 0;
}

int run_score(const GlobalOpts& g, const std::string& manifest, const std::string& pairs_path,
              const std::vector<std::string>& model_paths, const std::string& patch_csv) {
    const facekit::Dataset ds = facekit::load_dataset(manifest);
    const auto pairs = facekit::read_pairs(pairs_path);
    const auto patch_ids = parse_patch_ids(patch_csv, ds);
    std::vector<facekit::EmbeddingModel> models;
    for (const auto& p : model_paths) models.push_back(facekit::load_model(p));
    const facekit::ScoreSet set = facekit::score_pairs(models, ds, pairs, patch_ids, g.threads);
    fs::create_directories(g.out_dir);
    write_scores_csv(fs::path(g.out_dir) / "scores.csv", set);
    json report = {{"command", "score"}, {"seed", g.seed},         {"manifest", manifest},
                   {"pairs", pairs_path}, {"models", model_paths}, {"n_pairs", pairs.size()}};
    write_json_file(fs::path(g.out_dir) / "score_report.json", report);
    return 0;
}

int run_eval(const GlobalOpts& g, const std::string& manifest, const std::string& pairs_path,
             const std::vector<std::string>& model_paths, const std::string& patch_csv, std::size_t k_folds,
             double openset_fraction, bool failures) {
    const facekit::Dataset ds = facekit::load_dataset(manifest);
    const auto pairs = facekit::read_pairs(pairs_path);
    const auto patch_ids = parse_patch_ids(patch_csv, ds);
    std::vector<facekit::EmbeddingModel> models;
    for (const auto& p : model_paths) models.push_back(facekit::load_model(p));

    const facekit::ScoreSet set = facekit::score_pairs(models, ds, pairs, patch_ids, g.threads);
    const std::vector<double> fused = facekit::fuse_average(set);
    const std::vector<bool> labels = set.labels();

    const facekit::FoldSplit folds = facekit::make_folds(pairs, k_folds, g.seed, /*stratified=*/true);
    const facekit::TenfoldResult tenfold = facekit::pairwise_accuracy_tenfold(fused, pairs, folds);
    const facekit::RocCurve curve = facekit::roc_curve(fused, labels);
    const auto [tar, tar_threshold] = facekit::tar_at_far(fused, labels, 0.001);

    // Identification tasks use the first model's embedding space; with
    // several models the per-probe similarities are averaged.
    facekit::IdentificationSetup setup = build_identification(ds, models[0], patch_ids, openset_fraction);
    if (models.size() > 1) {
        // Average similarity across models == similarity of averaged setups is
        // not generally true, so build one setup per model and average scores
        // by concatenating scaled embeddings (inner products add).
        const double scale = 1.0 / std::sqrt(static_cast<double>(models.size()));
        facekit::IdentificationSetup combined;
        for (std::size_t mi = 0; mi < models.size(); ++mi) {
            facekit::IdentificationSetup s = build_identification(ds, models[mi], patch_ids, openset_fraction);
            if (mi == 0) {
                combined = s;
                for (auto& [id, v] : combined.gallery)
                    for (double& x : v) x *= scale;
                for (auto& [id, v] : combined.mated_probes)
                    for (double& x : v) x *= scale;
                for (auto& v : combined.nonmated_probes)
                    for (double& x : v) x *= scale;
            } else {
                auto append_scaled = [&](std::vector<double>& dst, const std::vector<double>& src) {
                    for (double x : src) dst.push_back(x * scale);
                };
                for (std::size_t i = 0; i < s.gallery.size(); ++i)
                    append_scaled(combined.gallery[i].second, s.gallery[i].second);
                for (std::size_t i = 0; i < s.mated_probes.size(); ++i)
                    append_scaled(combined.mated_probes[i].second, s.mated_probes[i].second);
                for (std::size_t i = 0; i < s.nonmated_probes.size(); ++i)
                    append_scaled(combined.nonmated_probes[i], s.nonmated_probes[i]);
            }
        }
        setup = std::move(combined);
    }
    const double rank1 = facekit::rank1_identification(setup);
    const auto [dir1, dir1_t] = facekit::dir_at_far(setup, 0.01, 1);
    const auto [open1, open1_t] = facekit::dir_at_far(setup, 0.001, 1);

    fs::create_directories(g.out_dir);
    json metrics = {{"pairwise_accuracy", tenfold.mean_accuracy},
                    {"rank1", rank1},
                    {"dir_at_far_0.01_rank1", dir1},
                    {"tar_at_far_0.001", tar},
                    {"openset_rank1_far_0.001", open1}};
    json report = {{"command", "eval"},
                   {"seed", g.seed},
                   {"manifest", manifest},
                   {"pairs", pairs_path},
                   {"models", model_paths},
                   {"patch_ids", patch_ids},
                   {"config",
                    {{"k_folds", k_folds}, {"openset_fraction", openset_fraction}, {"threads", g.threads}}},
                   {"metrics", metrics},
                   {"fold_accuracy", tenfold.fold_accuracy},
                   {"fold_threshold", tenfold.fold_threshold},
                   {"thresholds",
                    {{"tar_at_far_0.001", tar_threshold},
                     {"dir_at_far_0.01_rank1", dir1_t},
                     {"openset_rank1_far_0.001", open1_t}}}};
    write_json_file(fs::path(g.out_dir) / "eval_report.json", report);
    write_text(fs::path(g.out_dir) / "roc.csv", roc_to_csv(curve));

    if (failures) {
        // Fig. 3 analogue: misclassified pairs under the mean calibrated
        // threshold, farthest from the threshold first.
        double mean_t = 0;
        for (double t : tenfold.fold_threshold) mean_t += t;
        mean_t /= static_cast<double>(tenfold.fold_threshold.size());
        const auto fails = facekit::failure_report(fused, pairs, mean_t);
        std::ostringstream os;
        os << "face_a,face_b,label,score,error_kind\n";
        os.precision(17);
        for (const auto& f : fails)
            os << f.pair.face_a << ',' << f.pair.face_b << ',' << (f.pair.same ? 1 : 0) << ',' << f.score << ','
               << (f.kind == facekit::ErrorKind::FalseAccept ? "false_accept" : "false_reject") << '\n';
        write_text(fs::path(g.out_dir) / "failures.csv", os.str());
    }
    return 0;
}

int run_ensemble(const GlobalOpts& g, const std::string& scores_path, std::size_t k_folds, double weight_step,
                 bool force_refine) {
    const facekit::ScoreSet set = read_scores_csv(scores_path);
    const facekit::FoldSplit folds = facekit::make_folds(set.pairs, k_folds, g.seed, /*stratified=*/true);
    facekit::GridConfig grid{weight_step};
    const double grid_points = facekit::GridConfig::grid_size(grid.steps(), set.n_models);
    const bool exhaustive = !force_refine && grid_points <= 2e6;
    if (!exhaustive)
        std::cerr << "note: simplex grid has ~" << grid_points
                  << " points; using coordinate-wise refinement instead of full enumeration\n";

    const facekit::TenfoldEnsembleResult res = facekit::tenfold_ensemble(set, folds, grid, exhaustive);
    std::vector<std::size_t> all(set.pairs.size());
    std::iota(all.begin(), all.end(), 0);
    const facekit::EnsembleModel final_model = exhaustive ? facekit::grid_search_ensemble(set, all, grid)
                                                          : facekit::refine_ensemble(set, all, grid);

    fs::create_directories(g.out_dir);
    write_json_file(fs::path(g.out_dir) / "ensemble.json",
                    json{{"weights", final_model.weights}, {"threshold", final_model.threshold}});
    json fold_models = json::array();
    for (std::size_t f = 0; f < res.fold_models.size(); ++f)
        fold_models.push_back({{"weights", res.fold_models[f].weights},
                               {"threshold", res.fold_models[f].threshold},
                               {"test_accuracy", res.fold_accuracy[f]}});
    json report = {{"command", "ensemble"},
                   {"seed", g.seed},
                   {"scores", scores_path},
                   {"config",
                    {{"k_folds", k_folds}, {"weight_step", weight_step}, {"exhaustive", exhaustive}}},
                   {"mean_accuracy", res.mean_accuracy},
                   {"fold_models", fold_models}};
    write_json_file(fs::path(g.out_dir) / "ensemble_report.json", report);
    return 0;
}

int run_sweep(const GlobalOpts& g, const std::string& kind, facekit::SynthConfig base, const std::string& sizes_csv,
              const std::string& counts_csv, facekit::PipelineConfig pc) {
    base.seed = g.seed;
    facekit::SweepResult result;
    if (kind == "data") {
        std::vector<std::pair<std::size_t, std::size_t>> sizes;
        std::istringstream ss(sizes_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const auto x = tok.find('x');
            if (x == std::string::npos) throw facekit::Error("bad size '" + tok + "', expected IDSxFACES");
            sizes.emplace_back(std::stoull(tok.substr(0, x)), std::stoull(tok.substr(x + 1)));
        }
        result = facekit::data_sweep(base, sizes, pc);
    } else if (kind == "patch") {
        std::vector<std::size_t> counts;
        std::istringstream ss(counts_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) counts.push_back(std::stoull(tok));
        result = facekit::patch_sweep(base, counts, pc);
    } else {
        throw facekit::Error("unknown sweep kind '" + kind + "' (expected data|patch)");
    }
    fs::create_directories(g.out_dir);
    write_text(fs::path(g.out_dir) / "sweep.csv", facekit::sweep_to_csv(result));
    json rows = json::array();
    for (const auto& r : result.rows)
        rows.push_back({{"label", r.label},
                        {"n_identities", r.n_identities},
                        {"n_faces", r.n_faces},
                        {"n_patches", r.n_patches},
                        {"error_rate", r.error_rate},
                        {"seed", r.seed}});
    json report = {{"command", "sweep"},
                   {"seed", g.seed},
                   {"kind", kind},
                   {"config",
                    {{"n_patches", base.n_patches},
                     {"patch_dim", base.patch_dim},
                     {"n_identities", base.n_identities},
                     {"faces_per_identity", base.faces_per_identity},
                     {"within_noise_sigma", base.within_noise_sigma},
                     {"patch_noise_sigma", base.patch_noise_sigma},
                     {"sizes", sizes_csv},
                     {"patch_counts", counts_csv},
                     {"eval_identities", pc.eval_identities},
                     {"eval_faces_per_identity", pc.eval_faces_per_identity},
                     {"n_pairs", pc.n_pairs},
                     {"k_folds", pc.k_folds},
                     {"train", train_config_json(pc.train)}}},
                   {"rows", rows}};
    write_json_file(fs::path(g.out_dir) / "sweep_report.json", report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-patch feature embedding and face verification toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI/TOML config file");

    GlobalOpts g;
    app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads for scoring")->capture_default_str();

    // synth
    facekit::SynthConfig synth_cfg;
    std::size_t synth_pairs = 0;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-patch dataset");
    synth->add_option("--identities", synth_cfg.n_identities, "Number of identities")->capture_default_str();
    synth->add_option("--faces", synth_cfg.faces_per_identity, "Faces per identity")->capture_default_str();
    synth->add_option("--patches", synth_cfg.n_patches, "Patches per face")->capture_default_str();
    synth->add_option("--dim", synth_cfg.patch_dim, "Per-patch feature dimension")->capture_default_str();
    synth->add_option("--within-sigma", synth_cfg.within_noise_sigma, "Within-identity noise sigma")
        ->capture_default_str();
    synth->add_option("--patch-sigma", synth_cfg.patch_noise_sigma, "Per-patch noise sigma")->capture_default_str();
    synth->add_option("--pairs", synth_pairs, "Also emit this many labeled pairs")->capture_default_str();

    // train
    std::string train_manifest, train_patches, train_sampling = "uniform", train_model_name = "model.defm";
    facekit::TrainConfig train_cfg;
    auto* train = app.add_subcommand("train", "Train a triplet-loss embedding model");
    train->add_option("--manifest", train_manifest, "Dataset manifest")->required();
    train->add_option("--patch-ids", train_patches, "Comma-separated patch ids (default: all)");
    train->add_option("--model-name", train_model_name, "Model file name")->capture_default_str();
    add_train_options(train, train_cfg, train_sampling);

    // score
    std::string score_manifest, score_pairs_path, score_patches;
    std::vector<std::string> score_models;
    auto* score = app.add_subcommand("score", "Score labeled pairs with one or more models");
    score->add_option("--manifest", score_manifest, "Dataset manifest")->required();
    score->add_option("--pairs", score_pairs_path, "Pairs file")->required();
    score->add_option("--model", score_models, "Model file (repeatable)")->required();
    score->add_option("--patch-ids", score_patches, "Comma-separated patch ids (default: all)");

    // eval
    std::string eval_manifest, eval_pairs_path, eval_patches;
    std::vector<std::string> eval_models;
    std::size_t eval_folds = 10;
    double eval_openset_fraction = 0.2;
    bool eval_failures = false;
    auto* eval = app.add_subcommand("eval", "Run the five verification/identification tasks");
    eval->add_option("--manifest", eval_manifest, "Dataset manifest")->required();
    eval->add_option("--pairs", eval_pairs_path, "Pairs file")->required();
    eval->add_option("--model", eval_models, "Model file (repeatable; scores are averaged)")->required();
    eval->add_option("--patch-ids", eval_patches, "Comma-separated patch ids (default: all)");
    eval->add_option("--folds", eval_folds, "Folds for pairwise accuracy")->capture_default_str();
    eval->add_option("--openset-fraction", eval_openset_fraction, "Fraction of identities held out of the gallery")
        ->capture_default_str();
    eval->add_flag("--failures", eval_failures, "Also write the misclassified-pair report");

    // ensemble
    std::string ens_scores;
    std::size_t ens_folds = 10;
    double ens_step = 0.05;
    bool ens_refine = false;
    auto* ensemble = app.add_subcommand("ensemble", "Grid-search a linear score ensemble, ten-fold");
    ensemble->add_option("--scores", ens_scores, "scores.csv from the score subcommand")->required();
    ensemble->add_option("--folds", ens_folds, "Number of folds")->capture_default_str();
    ensemble->add_option("--weight-step", ens_step, "Simplex grid spacing")->capture_default_str();
    ensemble->add_flag("--refine", ens_refine, "Force coordinate-wise refinement");

    // sweep
    std::string sweep_kind, sweep_sizes = "25x20,50x20,100x20", sweep_counts = "1,2,4";
    facekit::SynthConfig sweep_base;
    sweep_base.n_patches = 4;
    sweep_base.patch_dim = 64;
    sweep_base.within_noise_sigma = 0.4;
    sweep_base.patch_noise_sigma = 0.4;
    sweep_base.n_identities = 100;
    sweep_base.faces_per_identity = 20;
    facekit::PipelineConfig sweep_pc;
    sweep_pc.train.output_dim = 32;
    std::string sweep_sampling = "uniform";
    auto* sweep = app.add_subcommand("sweep", "Reproduce the data-size / patch-count error trends");
    sweep->add_option("--kind", sweep_kind, "data|patch")->required();
    sweep->add_option("--sizes", sweep_sizes, "data sweep: IDSxFACES list")->capture_default_str();
    sweep->add_option("--patch-counts", sweep_counts, "patch sweep: patch counts")->capture_default_str();
    sweep->add_option("--identities", sweep_base.n_identities, "Base identities")->capture_default_str();
    sweep->add_option("--faces", sweep_base.faces_per_identity, "Base faces per identity")->capture_default_str();
    sweep->add_option("--patches", sweep_base.n_patches, "Patches per face")->capture_default_str();
    sweep->add_option("--dim", sweep_base.patch_dim, "Per-patch feature dimension")->capture_default_str();
    sweep->add_option("--within-sigma", sweep_base.within_noise_sigma, "Within-identity noise sigma")
        ->capture_default_str();
    sweep->add_option("--patch-sigma", sweep_base.patch_noise_sigma, "Per-patch noise sigma")->capture_default_str();
    sweep->add_option("--eval-identities", sweep_pc.eval_identities, "Held-out identities")->capture_default_str();
    sweep->add_option("--eval-faces", sweep_pc.eval_faces_per_identity, "Faces per held-out identity")
        ->capture_default_str();
    sweep->add_option("--n-pairs", sweep_pc.n_pairs, "Evaluation pairs")->capture_default_str();
    sweep->add_option("--folds", sweep_pc.k_folds, "Evaluation folds")->capture_default_str();
    add_train_options(sweep, sweep_pc.train, sweep_sampling);

    try {
        app.parse(argc, argv);
        if (synth->parsed()) {
            synth_cfg.seed = g.seed;
            return run_synth(g, synth_cfg, synth_pairs);
        }
        if (train->parsed()) {
            train_cfg.sampling = parse_sampling(train_sampling);
            return run_train(g, train_manifest, train_patches, train_cfg, train_model_name);
        }
        if (score->parsed()) return run_score(g, score_manifest, score_pairs_path, score_models, score_patches);
        if (eval->parsed())
            return run_eval(g, eval_manifest, eval_pairs_path, eval_models, eval_patches, eval_folds,
                            eval_openset_fraction, eval_failures);
        if (ensemble->parsed()) return run_ensemble(g, ens_scores, ens_folds, ens_step, ens_refine);
        if (sweep->parsed()) {
            sweep_pc.train.sampling = parse_sampling(sweep_sampling);
            return run_sweep(g, sweep_kind, sweep_base, sweep_sizes, sweep_counts, sweep_pc);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
