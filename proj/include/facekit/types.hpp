#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "facekit/common.hpp"

namespace facekit {

// Dense per-patch feature vector. Stored as f32, computed on in f64.
struct FeatureVector {
    std::vector<float> values;

    std::size_t dim() const { return values.size(); }
};

// One face: identity label plus ordered per-patch features. patch order is
// the dataset's patch schema and must match across records.
struct FaceRecord {
    std::string face_id;
    std::string identity_id;
    std::vector<std::pair<std::uint32_t, FeatureVector>> patches;

    const FeatureVector* find_patch(std::uint32_t patch_id) const {
        for (const auto& [pid, fv] : patches)
            if (pid == patch_id) return &fv;
        return nullptr;
    }
};

struct Dataset {
    std::vector<FaceRecord> records;
    std::map<std::string, std::vector<std::size_t>> identity_index;
    std::unordered_map<std::string, std::size_t> face_index;

    std::size_t size() const { return records.size(); }

    // Ordered patch schema of the dataset (taken from the first record).
    std::vector<std::uint32_t> patch_schema() const {
        std::vector<std::uint32_t> ids;
        if (!records.empty())
            for (const auto& [pid, fv] : records.front().patches) ids.push_back(pid);
        return ids;
    }

    std::size_t resolve(const std::string& face_id) const {
        auto it = face_index.find(face_id);
        if (it == face_index.end()) throw Error("unknown face_id '" + face_id + "'");
        return it->second;
    }

    // Rebuilds both indices from `records` and checks dataset invariants:
    // unique face_ids, uniform patch schema and dims, finite values.
    void build_index() {
        identity_index.clear();
        face_index.clear();
        for (std::size_t i = 0; i < records.size(); ++i) {
            const FaceRecord& r = records[i];
            if (r.face_id.empty()) throw Error("record " + std::to_string(i) + ": empty face_id");
            if (!face_index.emplace(r.face_id, i).second)
                throw Error("duplicate face_id '" + r.face_id + "'");
            identity_index[r.identity_id].push_back(i);
            if (r.patches.empty())
                throw Error("face '" + r.face_id + "': no patches");
            for (const auto& [pid, fv] : r.patches) {
                if (fv.dim() == 0)
                    throw Error("face '" + r.face_id + "' patch " + std::to_string(pid) + ": empty vector");
                if (!all_finite(fv.values))
                    throw Error("face '" + r.face_id + "' patch " + std::to_string(pid) + ": non-finite value");
            }
            if (i > 0) {
                const FaceRecord& first = records.front();
                if (r.patches.size() != first.patches.size())
                    throw Error("face '" + r.face_id + "': patch count differs from '" + first.face_id + "'");
                for (std::size_t p = 0; p < r.patches.size(); ++p) {
                    if (r.patches[p].first != first.patches[p].first)
                        throw Error("face '" + r.face_id + "': patch schema differs from '" + first.face_id + "'");
                    if (r.patches[p].second.dim() != first.patches[p].second.dim())
                        throw Error("face '" + r.face_id + "' patch " + std::to_string(r.patches[p].first) +
                                    ": dim mismatch with '" + first.face_id + "'");
                }
            }
        }
    }
};

// Verification pair, labeled same-identity or not.
struct LabeledPair {
    std::string face_a;
    std::string face_b;
    bool same = false;
};

// Disjoint partition of pair indices into k folds.
struct FoldSplit {
    std::vector<std::vector<std::size_t>> folds;

    std::size_t k() const { return folds.size(); }
    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& f : folds) n += f.size();
        return n;
    }
};

}  // namespace facekit
