#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "facekit/types.hpp"

namespace facekit {

// Binary feature file: magic "DEFV", u32 version, u32 patch_count,
// then per patch: u32 patch_id, u32 dim, dim x f32.
inline constexpr char kFeatureMagic[4] = {'D', 'E', 'F', 'V'};
inline constexpr std::uint32_t kFeatureVersion = 1;

inline void write_feature_file(const std::filesystem::path& path, const FaceRecord& record) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    os.write(kFeatureMagic, 4);
    io::write_u32(os, kFeatureVersion);
    io::write_u32(os, static_cast<std::uint32_t>(record.patches.size()));
    for (const auto& [pid, fv] : record.patches) {
        io::write_u32(os, pid);
        io::write_u32(os, static_cast<std::uint32_t>(fv.dim()));
        io::write_f32(os, fv.values.data(), fv.dim());
    }
    if (!os) throw Error("write failed for '" + path.string() + "'");
}

// Reads patches into `record` (face_id/identity_id come from the manifest).
inline void read_feature_file(const std::filesystem::path& path, FaceRecord& record) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open feature file '" + path.string() + "'");
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kFeatureMagic, 4) != 0)
        throw Error("bad magic in feature file '" + path.string() + "'");
    const std::uint32_t version = io::read_u32(is, path.string());
    if (version != kFeatureVersion)
        throw Error("unsupported feature file version " + std::to_string(version) + " in '" + path.string() + "'");
    const std::uint32_t n_patches = io::read_u32(is, path.string());
    if (n_patches == 0) throw Error("feature file '" + path.string() + "' has zero patches");
    record.patches.clear();
    record.patches.reserve(n_patches);
    for (std::uint32_t p = 0; p < n_patches; ++p) {
        const std::uint32_t pid = io::read_u32(is, path.string());
        const std::uint32_t dim = io::read_u32(is, path.string());
        if (dim == 0) throw Error("feature file '" + path.string() + "' patch " + std::to_string(pid) + ": zero dim");
        FeatureVector fv;
        fv.values.resize(dim);
        io::read_f32(is, fv.values.data(), dim, path.string());
        record.patches.emplace_back(pid, std::move(fv));
    }
}

// Manifest: one record per line, `face_id,identity_id,path_to_feature_file`.
// Relative feature paths are resolved against the manifest's directory.
inline Dataset load_dataset(const std::filesystem::path& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw Error("cannot open manifest '" + manifest_path.string() + "'");
    const std::filesystem::path base = manifest_path.parent_path();
    Dataset ds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string face_id, identity_id, rel;
        if (!std::getline(ss, face_id, ',') || !std::getline(ss, identity_id, ',') || !std::getline(ss, rel))
            throw Error("manifest '" + manifest_path.string() + "' line " + std::to_string(lineno) +
                        ": expected face_id,identity_id,path");
        FaceRecord rec;
        rec.face_id = face_id;
        rec.identity_id = identity_id;
        std::filesystem::path fpath(rel);
        if (fpath.is_relative()) fpath = base / fpath;
        read_feature_file(fpath, rec);
        ds.records.push_back(std::move(rec));
    }
    ds.build_index();
    if (ds.records.empty()) throw Error("manifest '" + manifest_path.string() + "' lists no records");
    return ds;
}

// Writes features/<face_id>.fv plus a manifest; returns the manifest path.
inline std::filesystem::path save_dataset(const Dataset& ds, const std::filesystem::path& out_dir,
                                          const std::string& manifest_name = "manifest.txt") {
    std::filesystem::create_directories(out_dir / "features");
    std::ostringstream manifest;
    for (const FaceRecord& rec : ds.records) {
        if (rec.face_id.find_first_of(",/\\") != std::string::npos)
            throw Error("face_id '" + rec.face_id + "' not usable as a filename");
        if (rec.identity_id.find(',') != std::string::npos)
            throw Error("identity_id '" + rec.identity_id + "' contains a comma");
        const std::string rel = "features/" + rec.face_id + ".fv";
        write_feature_file(out_dir / rel, rec);
        manifest << rec.face_id << ',' << rec.identity_id << ',' << rel << '\n';
    }
    const std::filesystem::path mpath = out_dir / manifest_name;
    std::ofstream os(mpath);
    if (!os) throw Error("cannot open '" + mpath.string() + "' for writing");
    os << manifest.str();
    return mpath;
}

// Pairs file: one per line, `face_id_a face_id_b {0|1}`.
inline std::vector<LabeledPair> read_pairs(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open pairs file '" + path.string() + "'");
    std::vector<LabeledPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        LabeledPair p;
        int label = -1;
        if (!(ss >> p.face_a >> p.face_b >> label) || (label != 0 && label != 1))
            throw Error("pairs file '" + path.string() + "' line " + std::to_string(lineno) + ": bad format");
        if (p.face_a == p.face_b)
            throw Error("pairs file '" + path.string() + "' line " + std::to_string(lineno) + ": identical face_ids");
        p.same = label == 1;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

inline void write_pairs(const std::filesystem::path& path, const std::vector<LabeledPair>& pairs) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    for (const LabeledPair& p : pairs) os << p.face_a << ' ' << p.face_b << ' ' << (p.same ? 1 : 0) << '\n';
}

// Concatenates the selected patches, in the given order, into one vector.
inline FeatureVector concat_patches(const FaceRecord& record, const std::vector<std::uint32_t>& patch_ids) {
    FeatureVector out;
    std::size_t total = 0;
    for (std::uint32_t pid : patch_ids) {
        const FeatureVector* fv = record.find_patch(pid);
        if (!fv) throw Error("face '" + record.face_id + "': unknown patch_id " + std::to_string(pid));
        total += fv->dim();
    }
    out.values.reserve(total);
    for (std::uint32_t pid : patch_ids) {
        const FeatureVector& fv = *record.find_patch(pid);
        out.values.insert(out.values.end(), fv.values.begin(), fv.values.end());
    }
    return out;
}

// Seeded fold assignment. Unstratified: shuffle all indices, slice
// contiguously. Stratified: shuffle same/different groups independently and
// deal each group cyclically, the second group starting where the first
// group's extras ended so fold sizes still differ by at most one.
inline FoldSplit make_folds(const std::vector<LabeledPair>& pairs, std::size_t k, std::uint64_t seed,
                            bool stratified) {
    if (k == 0) throw Error("make_folds: k must be positive");
    if (k > pairs.size()) throw Error("make_folds: k exceeds number of pairs");
    FoldSplit split;
    split.folds.assign(k, {});
    Rng rng(seed);
    if (!stratified) {
        std::vector<std::size_t> idx(pairs.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t base = pairs.size() / k;
        const std::size_t extra = pairs.size() % k;
        std::size_t pos = 0;
        for (std::size_t f = 0; f < k; ++f) {
            const std::size_t len = base + (f < extra ? 1 : 0);
            split.folds[f].assign(idx.begin() + pos, idx.begin() + pos + len);
            pos += len;
        }
    } else {
        std::vector<std::size_t> same, diff;
        for (std::size_t i = 0; i < pairs.size(); ++i) (pairs[i].same ? same : diff).push_back(i);
        std::shuffle(same.begin(), same.end(), rng);
        std::shuffle(diff.begin(), diff.end(), rng);
        for (std::size_t i = 0; i < same.size(); ++i) split.folds[i % k].push_back(same[i]);
        const std::size_t offset = same.size() % k;
        for (std::size_t i = 0; i < diff.size(); ++i) split.folds[(offset + i) % k].push_back(diff[i]);
    }
    return split;
}

// Samples a labeled pair set from a dataset: n_same same-identity pairs
// (identities with >= 2 faces) and n_diff cross-identity pairs.
inline std::vector<LabeledPair> sample_pairs(const Dataset& ds, std::size_t n_same, std::size_t n_diff,
                                             std::uint64_t seed) {
    std::vector<const std::vector<std::size_t>*> multi;
    std::vector<const std::vector<std::size_t>*> all;
    for (const auto& [id, faces] : ds.identity_index) {
        all.push_back(&faces);
        if (faces.size() >= 2) multi.push_back(&faces);
    }
    if (n_same > 0 && multi.empty()) throw Error("sample_pairs: no identity has two faces");
    if (n_diff > 0 && all.size() < 2) throw Error("sample_pairs: need at least two identities");
    Rng rng(seed);
    std::vector<LabeledPair> pairs;
    pairs.reserve(n_same + n_diff);
    for (std::size_t i = 0; i < n_same; ++i) {
        const auto& faces = *multi[rng() % multi.size()];
        std::size_t a = rng() % faces.size();
        std::size_t b = rng() % (faces.size() - 1);
        if (b >= a) ++b;
        pairs.push_back({ds.records[faces[a]].face_id, ds.records[faces[b]].face_id, true});
    }
    for (std::size_t i = 0; i < n_diff; ++i) {
        std::size_t ia = rng() % all.size();
        std::size_t ib = rng() % (all.size() - 1);
        if (ib >= ia) ++ib;
        const auto& fa = *all[ia];
        const auto& fb = *all[ib];
        pairs.push_back({ds.records[fa[rng() % fa.size()]].face_id, ds.records[fb[rng() % fb.size()]].face_id, false});
    }
    return pairs;
}

}  // namespace facekit
