#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "egsql/ast.hpp"
#include "egsql/decoder.hpp"
#include "egsql/errors.hpp"
#include "egsql/features.hpp"
#include "egsql/sql.hpp"
#include "egsql/table.hpp"

namespace egsql {

struct TrainHyper {
    int epochs = 30;
    double lr = 0.1;
    int ngram_order = 2;
};

// First contiguous folded match of the literal's tokens in the question.
inline std::optional<PickValueSpan> find_value_span(const std::vector<std::string>& question,
                                                    const std::string& value) {
    std::vector<std::string> want = split_ws(fold(value));
    if (want.empty()) return std::nullopt;
    int n = static_cast<int>(question.size()), m = static_cast<int>(want.size());
    for (int s = 0; s + m <= n; s++) {
        bool ok = true;
        for (int j = 0; j < m; j++)
            if (fold(question[s + j]) != want[j]) {
                ok = false;
                break;
            }
        if (ok) return PickValueSpan{s, s + m};
    }
    return std::nullopt;
}

// Comparator-sequence patterns ranked by training frequency (count, then key).
inline std::vector<Sketch> extract_templates(const std::vector<Example>& train) {
    if (train.empty()) throw EmptyTrainingError("cannot extract templates from an empty set");
    std::map<std::string, std::pair<int, Sketch>> counts;
    for (const auto& ex : train) {
        if (!ex.gold) continue;
        Sketch s = sketch_of(*ex.gold);
        auto [it, fresh] = counts.try_emplace(sketch_key(s), 0, s);
        it->second.first++;
    }
    if (counts.empty()) throw EmptyTrainingError("no gold queries in the training set");
    std::vector<std::pair<std::string, std::pair<int, Sketch>>> items(counts.begin(), counts.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second.first != b.second.first) return a.second.first > b.second.first;
        return a.first < b.first;
    });
    std::vector<Sketch> inventory;
    inventory.reserve(items.size());
    for (auto& it : items) inventory.push_back(std::move(it.second.second));
    return inventory;
}

// Log-linear stand-in for the template-based neural model: a template
// classifier, an aggregate head and a BIO-style slot tagger share one weight
// map under distinct feature prefixes. Columns are scored by name overlap at
// decode time and need no training.
struct TemplateScorerModel {
    std::vector<Sketch> inventory;
    WeightMap weights;
    int ngram_order = 2;
    double template_loss = 0;
    double agg_loss = 0;
    double tagger_loss = 0;
};

namespace detail {

inline FeatureVec prefixed(const std::string& prefix, const FeatureVec& feats) {
    FeatureVec out;
    out.reserve(feats.size());
    for (const auto& f : feats) out.push_back(prefix + f);
    return out;
}

inline FeatureVec tag_features(const std::vector<std::string>& question, int i) {
    int n = static_cast<int>(question.size());
    FeatureVec f = {"tag|bias", "tag|tok:" + fold(question[i])};
    f.push_back("tag|prev:" + (i > 0 ? fold(question[i - 1]) : std::string("^")));
    f.push_back("tag|next:" + (i + 1 < n ? fold(question[i + 1]) : std::string("$")));
    f.push_back(std::string("tag|num:") + (parse_real(question[i]) ? "1" : "0"));
    return f;
}

// Gold slot labels: tokens covered by the first folded match of any condition value.
inline std::vector<bool> gold_slot_labels(const Example& ex) {
    std::vector<bool> in_slot(ex.question.size(), false);
    if (!ex.gold) return in_slot;
    for (const auto& c : ex.gold->conds)
        if (auto span = find_value_span(ex.question, c.value))
            for (int i = span->start; i < span->end; i++) in_slot[i] = true;
    return in_slot;
}

}  // namespace detail

inline TemplateScorerModel train_template_scorer(const std::vector<Example>& train, const TrainHyper& hyper = {}) {
    TemplateScorerModel model;
    model.ngram_order = hyper.ngram_order;
    model.inventory = extract_templates(train);

    std::map<std::string, int> index_of;
    for (size_t i = 0; i < model.inventory.size(); i++) index_of[sketch_key(model.inventory[i])] = static_cast<int>(i);

    std::vector<ClassExample> tpl_data, agg_data;
    std::vector<BinaryExample> tag_data;
    bool any_arity = false, any_positive = false;
    for (const auto& ex : train) {
        if (!ex.gold) continue;
        FeatureVec q = question_ngrams(ex.question, hyper.ngram_order);

        ClassExample tpl;
        for (const auto& s : model.inventory) tpl.class_feats.push_back(detail::prefixed("tpl|" + sketch_key(s) + "|", q));
        tpl.gold = index_of.at(sketch_key(sketch_of(*ex.gold)));
        tpl_data.push_back(std::move(tpl));

        ClassExample agg;
        for (int c = 0; c <= 5; c++) agg.class_feats.push_back(detail::prefixed("agg|" + std::to_string(c) + "|", q));
        agg.gold = static_cast<int>(ex.gold->agg);
        agg_data.push_back(std::move(agg));

        std::vector<bool> labels = detail::gold_slot_labels(ex);
        if (!ex.gold->conds.empty()) any_arity = true;
        for (size_t i = 0; i < ex.question.size(); i++) {
            tag_data.push_back({detail::tag_features(ex.question, i), labels[i]});
            if (labels[i]) any_positive = true;
        }
    }
    if (tpl_data.empty()) throw EmptyTrainingError("no gold queries in the training set");
    if (any_arity && !any_positive)
        throw DegenerateFeaturesError("no condition value occurs in its question; slot tagger has no positives");

    model.template_loss = train_multiclass(model.weights, tpl_data, hyper.epochs, hyper.lr);
    model.agg_loss = train_multiclass(model.weights, agg_data, hyper.epochs, hyper.lr);
    model.tagger_loss = train_binary(model.weights, tag_data, hyper.epochs, hyper.lr);
    return model;
}

namespace detail {

struct SpanAssignment {
    std::vector<PickValueSpan> spans;
    double logprob = 0;
};

inline std::string encode_spans(const std::vector<PickValueSpan>& spans) {
    std::string s;
    for (const auto& sp : spans) s += std::to_string(sp.start) + "-" + std::to_string(sp.end) + ";";
    return s;
}

// Top-k ways to place `arity` disjoint left-to-right spans, scored by the
// tagger's token in/out log likelihood.
inline std::vector<SpanAssignment> top_assignments(const std::vector<double>& in_prob, int arity, int span_cap,
                                                   int k) {
    int n = static_cast<int>(in_prob.size());
    double base = 0;
    std::vector<double> gain(n);
    for (int i = 0; i < n; i++) {
        double p = std::clamp(in_prob[i], 1e-6, 1.0 - 1e-6);
        base += std::log(1 - p);
        gain[i] = std::log(p) - std::log(1 - p);
    }
    std::vector<SpanAssignment> out;
    std::vector<PickValueSpan> cur;
    std::function<void(int, int, double)> rec = [&](int from, int left, double score) {
        if (left == 0) {
            out.push_back({cur, base + score});
            return;
        }
        for (int s = from; s < n; s++)
            for (int e = s + 1; e <= n && e - s <= span_cap; e++) {
                double g = 0;
                for (int i = s; i < e; i++) g += gain[i];
                cur.push_back({s, e});
                rec(e, left - 1, score + g);
                cur.pop_back();
            }
    };
    rec(0, arity, 0);
    std::sort(out.begin(), out.end(), [](const SpanAssignment& a, const SpanAssignment& b) {
        if (a.logprob != b.logprob) return a.logprob > b.logprob;
        return encode_spans(a.spans) < encode_spans(b.spans);
    });
    if (static_cast<int>(out.size()) > k) out.resize(k);
    return out;
}

// Overlap-scored column distribution (log probabilities, softmax over counts).
inline std::vector<double> column_logprobs(const std::vector<std::string>& question, const Table& table) {
    std::vector<double> scores;
    scores.reserve(table.columns.size());
    for (const auto& col : table.columns) scores.push_back(static_cast<double>(overlap_count(question, col.name)));
    std::vector<double> p = softmax(scores);
    for (double& v : p) v = std::log(v);
    return p;
}

}  // namespace detail

// Top-k complete queries by joint log probability: template x span assignment
// x aggregate x selection column, with condition columns picked greedily per
// span. The caller reranks these by execution.
inline std::vector<std::pair<Query, double>> template_candidates(const TemplateScorerModel& model,
                                                                 const Example& ex, const Table& table, int k,
                                                                 int span_cap = 8) {
    if (k <= 0 || model.inventory.empty()) throw NoViableCandidateError("no templates available");
    FeatureVec q = question_ngrams(ex.question, model.ngram_order);

    std::vector<double> tpl_scores;
    for (const auto& s : model.inventory)
        tpl_scores.push_back(dot(model.weights, detail::prefixed("tpl|" + sketch_key(s) + "|", q)));
    std::vector<double> tpl_p = softmax(tpl_scores);

    std::vector<double> agg_scores;
    for (int c = 0; c <= 5; c++)
        agg_scores.push_back(dot(model.weights, detail::prefixed("agg|" + std::to_string(c) + "|", q)));
    std::vector<double> agg_p = softmax(agg_scores);

    std::vector<double> sel_lp = detail::column_logprobs(ex.question, table);

    std::vector<double> in_prob;
    for (size_t i = 0; i < ex.question.size(); i++)
        in_prob.push_back(sigmoid(dot(model.weights, detail::tag_features(ex.question, static_cast<int>(i)))));

    // Rank templates, keep the k best for expansion.
    std::vector<int> tpl_order(model.inventory.size());
    for (size_t i = 0; i < tpl_order.size(); i++) tpl_order[i] = static_cast<int>(i);
    std::sort(tpl_order.begin(), tpl_order.end(), [&](int a, int b) {
        if (tpl_p[a] != tpl_p[b]) return tpl_p[a] > tpl_p[b];
        return sketch_key(model.inventory[a]) < sketch_key(model.inventory[b]);
    });
    if (static_cast<int>(tpl_order.size()) > k) tpl_order.resize(k);

    std::vector<std::pair<Query, double>> candidates;
    for (int ti : tpl_order) {
        const Sketch& ops = model.inventory[ti];
        auto assignments = detail::top_assignments(in_prob, static_cast<int>(ops.size()), span_cap, k);
        for (const auto& asg : assignments) {
            // Greedy condition columns: best overlap between span-window tokens
            // and the column name, question-wide overlap as tie support.
            double cond_lp = 0;
            std::vector<Condition> conds;
            for (size_t j = 0; j < ops.size(); j++) {
                const PickValueSpan& sp = asg.spans[j];
                std::vector<double> scores;
                for (const auto& col : table.columns) {
                    int lo = std::max(0, sp.start - 2), hi = std::min<int>(ex.question.size(), sp.end + 2);
                    std::vector<std::string> window(ex.question.begin() + lo, ex.question.begin() + hi);
                    scores.push_back(2.0 * overlap_count(window, col.name) +
                                     overlap_count(ex.question, col.name));
                }
                std::vector<double> p = softmax(scores);
                int best = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
                cond_lp += std::log(p[best]);
                std::vector<std::string> toks(ex.question.begin() + sp.start, ex.question.begin() + sp.end);
                conds.push_back({best, ops[j], join(toks, " ")});
            }
            for (int agg = 0; agg <= 5; agg++) {
                for (int sel = 0; sel < table.ncols(); sel++) {
                    Query query{static_cast<AggregateFn>(agg), sel, conds};
                    double lp = std::log(tpl_p[ti]) + asg.logprob + std::log(agg_p[agg]) + sel_lp[sel] + cond_lp;
                    candidates.emplace_back(std::move(query), lp);
                }
            }
        }
    }
    if (candidates.empty()) throw NoViableCandidateError("no span assignment fits any template");
    std::stable_sort(candidates.begin(), candidates.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return to_text(a.first, table) < to_text(b.first, table);
    });
    if (static_cast<int>(candidates.size()) > k) candidates.resize(k);
    return candidates;
}

inline nlohmann::ordered_json template_model_to_json(const TemplateScorerModel& m) {
    nlohmann::ordered_json j;
    j["kind"] = "template";
    j["ngram_order"] = m.ngram_order;
    auto inv = nlohmann::ordered_json::array();
    for (const auto& s : m.inventory) {
        auto ops = nlohmann::ordered_json::array();
        for (auto op : s) ops.push_back(static_cast<int>(op));
        inv.push_back(std::move(ops));
    }
    j["inventory"] = inv;
    j["weights"] = weights_to_json(m.weights);
    return j;
}

inline TemplateScorerModel template_model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("kind", "") != "template")
        throw FormatError("not a template scorer model file");
    TemplateScorerModel m;
    m.ngram_order = j.value("ngram_order", 2);
    if (!j.contains("inventory") || !j["inventory"].is_array() || j["inventory"].empty())
        throw FormatError("template model needs a non-empty inventory");
    for (const auto& js : j["inventory"]) {
        Sketch s;
        for (const auto& code : js) s.push_back(comparator_from_code(code.get<int>()));
        m.inventory.push_back(std::move(s));
    }
    m.weights = weights_from_json(j.value("weights", nlohmann::json::object()));
    return m;
}

}  // namespace egsql
