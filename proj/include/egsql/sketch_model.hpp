#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "egsql/actions.hpp"
#include "egsql/errors.hpp"
#include "egsql/features.hpp"
#include "egsql/scorer.hpp"
#include "egsql/table.hpp"
#include "egsql/template_model.hpp"

namespace egsql {

class FineScorer;

// Coarse-to-fine stand-in: a sketch classifier picks a comparator sequence,
// then a fine log-linear scorer fills aggregate, columns and value spans with
// the comparators fixed by the sketch.
struct SketchScorerModel {
    std::vector<Sketch> inventory;
    WeightMap weights;
    int ngram_order = 2;
    GrammarLimits limits;
    double sketch_loss = 0;
    double fine_loss = 0;

    std::vector<std::pair<Sketch, double>> sketch_rank(const Example& ex, const Table& table) const;
    FineScorer fine_scorer(const Sketch& sketch) const;
};

namespace detail {

inline FeatureVec agg_class_features(const std::vector<std::string>& question, int code, int ngram_order) {
    return prefixed("agg|" + std::to_string(code) + "|", question_ngrams(question, ngram_order));
}

// Role is "sel" or "cond". Row contents never enter: name, type and
// question/name token overlap only.
inline FeatureVec column_class_features(const std::vector<std::string>& question, const Table& table, int col,
                                        const std::string& role) {
    const ColumnSchema& c = table.columns.at(col);
    int ov = std::min(overlap_count(question, c.name), 3);
    return {"col|" + role + "|name:" + fold(c.name), "col|" + role + "|ov:" + std::to_string(ov),
            "col|" + role + "|type:" + to_string(c.type)};
}

inline FeatureVec span_class_features(const std::vector<std::string>& question, const PickValueSpan& sp) {
    int n = static_cast<int>(question.size());
    FeatureVec f = {"span|len:" + std::to_string(sp.end - sp.start), "span|first:" + fold(question[sp.start])};
    f.push_back("span|prev:" + (sp.start > 0 ? fold(question[sp.start - 1]) : std::string("^")));
    f.push_back("span|next:" + (sp.end < n ? fold(question[sp.end]) : std::string("$")));
    f.push_back(std::string("span|num:") + (parse_real(question[sp.start]) ? "1" : "0"));
    return f;
}

}  // namespace detail

inline SketchScorerModel train_sketch_scorer(const std::vector<Example>& train, const TableCatalog& catalog,
                                             const TrainHyper& hyper = {}) {
    SketchScorerModel model;
    model.ngram_order = hyper.ngram_order;
    model.inventory = extract_templates(train);  // same pattern space as templates

    std::map<std::string, int> index_of;
    for (size_t i = 0; i < model.inventory.size(); i++) index_of[sketch_key(model.inventory[i])] = static_cast<int>(i);

    std::vector<ClassExample> sketch_data, fine_data;
    for (const auto& ex : train) {
        if (!ex.gold) continue;
        const Table& table = catalog.at(ex.table_id);
        FeatureVec q = question_ngrams(ex.question, hyper.ngram_order);

        ClassExample sk;
        for (const auto& s : model.inventory)
            sk.class_feats.push_back(detail::prefixed("sk|" + sketch_key(s) + "|", q));
        sk.gold = index_of.at(sketch_key(sketch_of(*ex.gold)));
        sketch_data.push_back(std::move(sk));

        ClassExample agg;
        for (int c = 0; c <= 5; c++)
            agg.class_feats.push_back(detail::agg_class_features(ex.question, c, hyper.ngram_order));
        agg.gold = static_cast<int>(ex.gold->agg);
        fine_data.push_back(std::move(agg));

        ClassExample sel;
        for (int c = 0; c < table.ncols(); c++)
            sel.class_feats.push_back(detail::column_class_features(ex.question, table, c, "sel"));
        sel.gold = ex.gold->sel;
        fine_data.push_back(std::move(sel));

        for (const auto& cond : ex.gold->conds) {
            ClassExample cc;
            for (int c = 0; c < table.ncols(); c++)
                cc.class_feats.push_back(detail::column_class_features(ex.question, table, c, "cond"));
            cc.gold = cond.column;
            fine_data.push_back(std::move(cc));

            auto gold_span = find_value_span(ex.question, cond.value);
            if (!gold_span) continue;  // value not in the question; span step unteachable
            GrammarCursor at_val{GrammarPos::CondVal, 0};
            std::vector<Action> spans =
                legal_actions(at_val, table.ncols(), static_cast<int>(ex.question.size()), model.limits);
            ClassExample sp;
            sp.gold = -1;
            for (size_t i = 0; i < spans.size(); i++) {
                const auto& span = std::get<PickValueSpan>(spans[i]);
                if (span == *gold_span) sp.gold = static_cast<int>(i);
                sp.class_feats.push_back(detail::span_class_features(ex.question, span));
            }
            if (sp.gold >= 0) fine_data.push_back(std::move(sp));
        }
    }
    if (sketch_data.empty()) throw EmptyTrainingError("no gold queries in the training set");

    model.sketch_loss = train_multiclass(model.weights, sketch_data, hyper.epochs, hyper.lr);
    model.fine_loss = train_multiclass(model.weights, fine_data, hyper.epochs, hyper.lr);
    return model;
}

// Fine-stage scorer with comparators fixed by one sketch. Satisfies the
// decoder's scorer contract.
class FineScorer {
  public:
    FineScorer(const SketchScorerModel* model, Sketch sketch) : model_(model), sketch_(std::move(sketch)) {}

    struct State {
        const Example* ex = nullptr;
        const Table* table = nullptr;
        GrammarCursor cur;
    };

    State init(const Example& ex, const Table& table) const { return {&ex, &table, GrammarCursor{}}; }

    std::vector<ScoredAction> step(const State& st) const {
        const std::vector<std::string>& q = st.ex->question;
        const Table& table = *st.table;
        switch (st.cur.pos) {
            case GrammarPos::Agg: {
                std::vector<double> scores;
                for (int c = 0; c <= 5; c++)
                    scores.push_back(dot(model_->weights, detail::agg_class_features(q, c, model_->ngram_order)));
                return scored(scores, [](int i) { return Action{PickAgg{static_cast<AggregateFn>(i)}}; });
            }
            case GrammarPos::Sel: {
                std::vector<double> scores;
                for (int c = 0; c < table.ncols(); c++)
                    scores.push_back(dot(model_->weights, detail::column_class_features(q, table, c, "sel")));
                return scored(scores, [](int i) { return Action{PickColumn{i}}; });
            }
            case GrammarPos::CondOrEnd: {
                // The sketch decides between continuing and ending.
                if (st.cur.conds_done >= static_cast<int>(sketch_.size()))
                    return {{Action{EndConditions{}}, 1.0}};
                std::vector<double> scores;
                for (int c = 0; c < table.ncols(); c++)
                    scores.push_back(dot(model_->weights, detail::column_class_features(q, table, c, "cond")));
                return scored(scores, [](int i) { return Action{PickColumn{i}}; });
            }
            case GrammarPos::CondOp:
                return {{Action{PickOp{sketch_.at(st.cur.conds_done)}}, 1.0}};
            case GrammarPos::CondVal: {
                GrammarCursor at_val{GrammarPos::CondVal, 0};
                std::vector<Action> spans =
                    legal_actions(at_val, table.ncols(), static_cast<int>(q.size()), model_->limits);
                std::vector<double> scores;
                for (const auto& a : spans)
                    scores.push_back(
                        dot(model_->weights, detail::span_class_features(q, std::get<PickValueSpan>(a))));
                std::vector<double> p = softmax(scores);
                std::vector<ScoredAction> out;
                for (size_t i = 0; i < spans.size(); i++) out.push_back({spans[i], p[i]});
                return out;
            }
            case GrammarPos::Done:
                break;
        }
        return {};
    }

    State advance(const State& st, const Action& a) const {
        State next = st;
        next.cur = st.cur.advanced(a);
        return next;
    }

  private:
    template <typename MakeAction>
    std::vector<ScoredAction> scored(const std::vector<double>& scores, MakeAction make) const {
        std::vector<double> p = softmax(scores);
        std::vector<ScoredAction> out;
        out.reserve(p.size());
        for (size_t i = 0; i < p.size(); i++) out.push_back({make(static_cast<int>(i)), p[i]});
        return out;
    }

    const SketchScorerModel* model_;
    Sketch sketch_;
};

inline std::vector<std::pair<Sketch, double>> SketchScorerModel::sketch_rank(const Example& ex,
                                                                             const Table&) const {
    FeatureVec q = question_ngrams(ex.question, ngram_order);
    std::vector<double> scores;
    scores.reserve(inventory.size());
    for (const auto& s : inventory) scores.push_back(dot(weights, detail::prefixed("sk|" + sketch_key(s) + "|", q)));
    std::vector<double> p = softmax(scores);
    std::vector<std::pair<Sketch, double>> out;
    for (size_t i = 0; i < inventory.size(); i++) out.emplace_back(inventory[i], std::log(p[i]));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return sketch_key(a.first) < sketch_key(b.first);
    });
    return out;
}

inline FineScorer SketchScorerModel::fine_scorer(const Sketch& sketch) const { return FineScorer(this, sketch); }

inline nlohmann::ordered_json sketch_model_to_json(const SketchScorerModel& m) {
    nlohmann::ordered_json j;
    j["kind"] = "sketch";
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

inline SketchScorerModel sketch_model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("kind", "") != "sketch") throw FormatError("not a sketch scorer model file");
    SketchScorerModel m;
    m.ngram_order = j.value("ngram_order", 2);
    if (!j.contains("inventory") || !j["inventory"].is_array() || j["inventory"].empty())
        throw FormatError("sketch model needs a non-empty inventory");
    for (const auto& js : j["inventory"]) {
        Sketch s;
        for (const auto& code : js) s.push_back(comparator_from_code(code.get<int>()));
        m.inventory.push_back(std::move(s));
    }
    m.weights = weights_from_json(j.value("weights", nlohmann::json::object()));
    return m;
}

}  // namespace egsql
