#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "egsql/errors.hpp"
#include "egsql/table.hpp"
#include "egsql/text.hpp"

namespace egsql {

using FeatureVec = std::vector<std::string>;
using WeightMap = std::map<std::string, double>;  // ordered: deterministic dumps

inline double dot(const WeightMap& w, const FeatureVec& feats) {
    double s = 0;
    for (const auto& f : feats) {
        auto it = w.find(f);
        if (it != w.end()) s += it->second;
    }
    return s;
}

inline void add_scaled(WeightMap& w, const FeatureVec& feats, double scale) {
    for (const auto& f : feats) w[f] += scale;
}

inline std::vector<double> softmax(const std::vector<double>& scores) {
    double mx = scores.front();
    for (double s : scores) mx = std::max(mx, s);
    std::vector<double> out(scores.size());
    double z = 0;
    for (size_t i = 0; i < scores.size(); i++) z += out[i] = std::exp(scores[i] - mx);
    for (double& p : out) p /= z;
    return out;
}

// Folded unigrams/bigrams/... plus a bias feature.
inline FeatureVec question_ngrams(const std::vector<std::string>& question, int order) {
    FeatureVec out = {"bias"};
    std::vector<std::string> folded;
    folded.reserve(question.size());
    for (const auto& t : question) folded.push_back(fold(t));
    for (int n = 1; n <= order; n++) {
        for (size_t i = 0; i + n <= folded.size(); i++) {
            std::string f = "q" + std::to_string(n) + ":";
            for (int j = 0; j < n; j++) {
                if (j) f += "_";
                f += folded[i + j];
            }
            out.push_back(std::move(f));
        }
    }
    return out;
}

// Count of question tokens occurring in the column name (both folded).
inline int overlap_count(const std::vector<std::string>& question, const std::string& column_name) {
    std::vector<std::string> name_toks = split_ws(fold(column_name));
    int n = 0;
    for (const auto& t : question) {
        std::string f = fold(t);
        for (const auto& nt : name_toks)
            if (f == nt) {
                n++;
                break;
            }
    }
    return n;
}

// One multiclass training instance: per-class feature vectors plus the label.
struct ClassExample {
    std::vector<FeatureVec> class_feats;
    int gold = 0;
};

inline double multiclass_logloss(const WeightMap& w, const std::vector<ClassExample>& data) {
    double total = 0;
    for (const auto& ex : data) {
        std::vector<double> scores;
        scores.reserve(ex.class_feats.size());
        for (const auto& f : ex.class_feats) scores.push_back(dot(w, f));
        total += -std::log(std::max(softmax(scores)[ex.gold], 1e-300));
    }
    return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

// Plain SGD from the current weights, fixed visiting order. Returns the final
// average log loss so callers can assert it decreased.
inline double train_multiclass(WeightMap& w, const std::vector<ClassExample>& data, int epochs, double lr) {
    if (data.empty()) throw EmptyTrainingError("no training instances");
    for (int e = 0; e < epochs; e++) {
        for (const auto& ex : data) {
            std::vector<double> scores;
            scores.reserve(ex.class_feats.size());
            for (const auto& f : ex.class_feats) scores.push_back(dot(w, f));
            std::vector<double> p = softmax(scores);
            for (size_t c = 0; c < ex.class_feats.size(); c++) {
                double grad = p[c] - (static_cast<int>(c) == ex.gold ? 1.0 : 0.0);
                if (grad != 0) add_scaled(w, ex.class_feats[c], -lr * grad);
            }
        }
    }
    return multiclass_logloss(w, data);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct BinaryExample {
    FeatureVec feats;
    bool label = false;
};

inline double binary_logloss(const WeightMap& w, const std::vector<BinaryExample>& data) {
    double total = 0;
    for (const auto& ex : data) {
        double p = sigmoid(dot(w, ex.feats));
        total += -std::log(std::max(ex.label ? p : 1 - p, 1e-300));
    }
    return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

inline double train_binary(WeightMap& w, const std::vector<BinaryExample>& data, int epochs, double lr) {
    for (int e = 0; e < epochs; e++) {
        for (const auto& ex : data) {
            double grad = sigmoid(dot(w, ex.feats)) - (ex.label ? 1.0 : 0.0);
            if (grad != 0) add_scaled(w, ex.feats, -lr * grad);
        }
    }
    return binary_logloss(w, data);
}

// Weight maps round-trip through model files.
inline nlohmann::ordered_json weights_to_json(const WeightMap& w) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : w) j[k] = v;
    return j;
}

inline WeightMap weights_from_json(const nlohmann::json& j, int line_no = 0) {
    if (!j.is_object()) throw FormatError("weights must be a JSON object", line_no);
    WeightMap w;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_number()) throw FormatError("weight '" + k + "' must be a number", line_no);
        w[k] = v.get<double>();
    }
    return w;
}

}  // namespace egsql
