#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "egsql/actions.hpp"
#include "egsql/oracle_scorer.hpp"
#include "egsql/table.hpp"

namespace egsql {

// Fault shapes injected into otherwise-gold logit scripts.
//   Shallow:        one mis-scored step, fault mass 0.6 vs gold 0.4
//   CondColumnFlood: three type-broken condition columns outrank the gold column
//   CondSpanFlood:  eight empty-result value spans outrank the gold span
//   AggFlood:       SUM/AVG over text columns flood the head of the beam
enum class FaultProfile { Clean, Shallow, CondColumnFlood, CondSpanFlood, AggFlood };

inline const char* to_string(FaultProfile p) {
    switch (p) {
        case FaultProfile::Clean: return "clean";
        case FaultProfile::Shallow: return "shallow";
        case FaultProfile::CondColumnFlood: return "cond_column_flood";
        case FaultProfile::CondSpanFlood: return "cond_span_flood";
        case FaultProfile::AggFlood: return "agg_flood";
    }
    return "?";
}

struct SynthMix {
    double clean = 0.40;
    double shallow = 0.24;
    double col_flood = 0.12;
    double span_flood = 0.12;
    double agg_flood = 0.12;
};

struct SynthConfig {
    int n = 500;
    uint64_t seed = 1;
    SynthMix mix;
    int ntables = 0;  // 0 derives roughly one table per 25 examples
};

struct SynthCorpus {
    TableCatalog catalog;
    std::vector<Example> examples;
    LogitScript script;
    std::map<std::string, int> profile_counts;
    std::map<std::string, std::string> profile_of;  // example id -> profile
};

namespace detail {

inline ScriptStep delta_step(const char* pos, const Action& a) {
    return ScriptStep{pos, {{encode_action(a), 1.0}}};
}

inline ScriptStep dist_step(const char* pos, std::vector<std::pair<std::string, double>> actions) {
    return ScriptStep{pos, std::move(actions)};
}

inline std::string pad4(int v) {
    std::string s = std::to_string(v);
    return std::string(4 - std::min<size_t>(4, s.size()), '0') + s;
}

// Six columns: four text, two real. Cell words are globally unique.
inline Table make_synth_table(int index, int nrows) {
    Table t;
    t.id = "tab" + pad4(index);
    t.columns = {{"team", ColumnType::Text},   {"opponent", ColumnType::Text}, {"venue", ColumnType::Text},
                 {"notes", ColumnType::Text},  {"points", ColumnType::Real},   {"rank", ColumnType::Real}};
    for (int r = 0; r < nrows; r++) {
        std::vector<Value> row;
        for (int c = 0; c < 4; c++)
            row.emplace_back("w" + std::to_string(index) + "c" + std::to_string(c) + "r" + std::to_string(r));
        row.emplace_back(static_cast<double>(10 + 3 * r));
        row.emplace_back(static_cast<double>(5 + 2 * r));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline int find_token(const std::vector<std::string>& question, const std::string& tok) {
    for (size_t i = 0; i < question.size(); i++)
        if (question[i] == tok) return static_cast<int>(i);
    return -1;
}

// std::shuffle is implementation-defined; this Fisher-Yates is not.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (size_t i = v.size(); i > 1; i--) std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace detail

// Seeded synthetic corpus: every example carries a gold query that executes
// cleanly plus a logit script that is gold-following except for the injected
// fault. Tables, examples and scripts are reproducible from the seed alone.
inline SynthCorpus make_fault_corpus(const SynthConfig& cfg) {
    using detail::delta_step;
    using detail::dist_step;

    std::mt19937_64 rng(cfg.seed);
    SynthCorpus out;

    const int ntables = cfg.ntables > 0 ? cfg.ntables : std::max(1, cfg.n / 25);
    const int nrows = 8;
    for (int t = 0; t < ntables; t++) {
        Table table = detail::make_synth_table(t, nrows);
        out.catalog.tables.emplace(table.id, std::move(table));
    }

    // Deterministic profile slots: exact proportions, seeded order.
    std::vector<FaultProfile> slots;
    auto fill = [&](FaultProfile p, double share) {
        int count = static_cast<int>(share * cfg.n + 0.5);
        for (int i = 0; i < count && static_cast<int>(slots.size()) < cfg.n; i++) slots.push_back(p);
    };
    fill(FaultProfile::Shallow, cfg.mix.shallow);
    fill(FaultProfile::CondColumnFlood, cfg.mix.col_flood);
    fill(FaultProfile::CondSpanFlood, cfg.mix.span_flood);
    fill(FaultProfile::AggFlood, cfg.mix.agg_flood);
    while (static_cast<int>(slots.size()) < cfg.n) slots.push_back(FaultProfile::Clean);
    detail::deterministic_shuffle(slots, rng);

    const std::vector<std::string> fillers = {"show", "me",  "the",    "list",  "of",    "games",
                                              "for",  "who", "played", "which", "total", "season"};
    auto filler = [&]() { return fillers[rng() % fillers.size()]; };
    auto decoy = [&]() { return "zz" + std::to_string(rng() % 100); };

    for (int i = 0; i < cfg.n; i++) {
        FaultProfile profile = slots[i];
        const int tindex = i % ntables;
        const Table& table = out.catalog.at("tab" + detail::pad4(tindex));
        auto cell_word = [&](int col, int row) { return std::get<std::string>(table.rows[row].at(col)); };

        Example ex;
        ex.id = "ex" + detail::pad4(i);
        ex.table_id = table.id;
        ScriptEntry entry;
        Query gold;

        switch (profile) {
            case FaultProfile::Clean: {
                int witness = static_cast<int>(rng() % nrows);
                int nconds = static_cast<int>(rng() % 3);
                gold.sel = static_cast<int>(rng() % table.ncols());
                bool sel_real = table.columns[gold.sel].type == ColumnType::Real;
                const std::vector<AggregateFn> text_aggs = {AggregateFn::None, AggregateFn::Count, AggregateFn::Max,
                                                            AggregateFn::Min};
                const std::vector<AggregateFn> real_aggs = {AggregateFn::None, AggregateFn::Count, AggregateFn::Max,
                                                            AggregateFn::Min, AggregateFn::Sum, AggregateFn::Avg};
                const auto& aggs = sel_real ? real_aggs : text_aggs;
                gold.agg = aggs[rng() % aggs.size()];

                std::vector<int> cond_cols = {0, 1, 2, 3};
                detail::deterministic_shuffle(cond_cols, rng);
                ex.question = {filler(), filler()};
                for (int c = 0; c < nconds; c++) {
                    std::string value = cell_word(cond_cols[c], witness);
                    gold.conds.push_back({cond_cols[c], Comparator::Eq, value});
                    ex.question.push_back(value);
                    ex.question.push_back(filler());
                }

                entry.steps.push_back(delta_step("agg", PickAgg{gold.agg}));
                entry.steps.push_back(delta_step("sel", PickColumn{gold.sel}));
                for (const auto& c : gold.conds) {
                    int pos = detail::find_token(ex.question, c.value);
                    entry.steps.push_back(delta_step("cond", PickColumn{c.column}));
                    entry.steps.push_back(delta_step("op", PickOp{c.op}));
                    entry.steps.push_back(delta_step("val", PickValueSpan{pos, pos + 1}));
                }
                entry.steps.push_back(delta_step("cond", EndConditions{}));
                break;
            }

            case FaultProfile::Shallow: {
                int witness = static_cast<int>(rng() % nrows);
                int variant = static_cast<int>(rng() % 3);
                if (variant == 0) {
                    // Aggregate fault: SUM over a text column vs gold plain select.
                    gold = {AggregateFn::None, static_cast<int>(rng() % 4), {}};
                    ex.question = {filler(), filler(), filler()};
                    entry.steps.push_back(dist_step("agg", {{"agg:4", 0.6}, {"agg:0", 0.4}}));
                    entry.steps.push_back(delta_step("sel", PickColumn{gold.sel}));
                    entry.steps.push_back(delta_step("cond", EndConditions{}));
                } else if (variant == 1) {
                    // Comparator fault: order comparison on a text column.
                    int col = static_cast<int>(rng() % 4);
                    std::string value = cell_word(col, witness);
                    gold = {AggregateFn::None, 0, {{col, Comparator::Eq, value}}};
                    ex.question = {filler(), value, filler()};
                    entry.steps.push_back(delta_step("agg", PickAgg{gold.agg}));
                    entry.steps.push_back(delta_step("sel", PickColumn{0}));
                    entry.steps.push_back(delta_step("cond", PickColumn{col}));
                    entry.steps.push_back(dist_step("op", {{"op:1", 0.6}, {"op:0", 0.4}}));
                    entry.steps.push_back(delta_step("val", PickValueSpan{1, 2}));
                    entry.steps.push_back(delta_step("cond", EndConditions{}));
                } else {
                    // Span fault: a decoy token that matches no cell.
                    int col = static_cast<int>(rng() % 4);
                    std::string value = cell_word(col, witness);
                    gold = {AggregateFn::None, 0, {{col, Comparator::Eq, value}}};
                    ex.question = {filler(), value, decoy(), filler()};
                    entry.steps.push_back(delta_step("agg", PickAgg{gold.agg}));
                    entry.steps.push_back(delta_step("sel", PickColumn{0}));
                    entry.steps.push_back(delta_step("cond", PickColumn{col}));
                    entry.steps.push_back(delta_step("op", PickOp{Comparator::Eq}));
                    entry.steps.push_back(dist_step("val", {{"val:2-3", 0.6}, {"val:1-2", 0.4}}));
                    entry.steps.push_back(delta_step("cond", EndConditions{}));
                }
                break;
            }

            case FaultProfile::CondColumnFlood: {
                // Gold condition on the real column sits at rank 4 behind three
                // text columns that die on the Gt typecheck: beam width 5
                // recovers it, width 3 truncates it away.
                gold = {AggregateFn::None, 0, {{4, Comparator::Gt, "24"}}};
                ex.question = {filler(), "24", filler(), filler()};
                entry.steps.push_back(delta_step("agg", PickAgg{gold.agg}));
                entry.steps.push_back(delta_step("sel", PickColumn{0}));
                entry.steps.push_back(dist_step(
                    "cond", {{"col:1", 0.26}, {"col:2", 0.26}, {"col:3", 0.26}, {"col:4", 0.22}}));
                entry.steps.push_back(delta_step("op", PickOp{Comparator::Gt}));
                entry.steps.push_back(delta_step("val", PickValueSpan{1, 2}));
                entry.steps.push_back(delta_step("cond", EndConditions{}));
                break;
            }

            case FaultProfile::CondSpanFlood: {
                // Eight empty-output spans outscore the gold span (rank 9), so
                // only the condition-stage check at width 5 keeps gold alive.
                int witness = static_cast<int>(rng() % nrows);
                std::string value = cell_word(1, witness);
                gold = {AggregateFn::None, 0, {{1, Comparator::Eq, value}}};
                int gold_pos = static_cast<int>(rng() % 4);
                ex.question = {decoy(), decoy(), decoy(), decoy()};
                ex.question[gold_pos] = value;

                std::vector<std::string> fault_spans;
                for (int s = 0; s < 4; s++)
                    for (int e = s + 1; e <= 4; e++)
                        if (!(s == gold_pos && e == gold_pos + 1))
                            fault_spans.push_back("val:" + std::to_string(s) + "-" + std::to_string(e));
                detail::deterministic_shuffle(fault_spans, rng);
                fault_spans.resize(8);

                std::vector<std::pair<std::string, double>> val_dist;
                for (const auto& enc : fault_spans) val_dist.emplace_back(enc, 0.115);
                val_dist.emplace_back("val:" + std::to_string(gold_pos) + "-" + std::to_string(gold_pos + 1), 0.08);

                entry.steps.push_back(delta_step("agg", PickAgg{gold.agg}));
                entry.steps.push_back(delta_step("sel", PickColumn{0}));
                entry.steps.push_back(delta_step("cond", PickColumn{1}));
                entry.steps.push_back(delta_step("op", PickOp{Comparator::Eq}));
                entry.steps.push_back(dist_step("val", std::move(val_dist)));
                entry.steps.push_back(delta_step("cond", EndConditions{}));
                break;
            }

            case FaultProfile::AggFlood: {
                // Eight SUM/AVG-over-text expansions outrank the gold head
                // (rank 9); only the selection-head check clears them out.
                gold = {AggregateFn::None, 0, {}};
                ex.question = {filler(), filler(), filler()};
                entry.steps.push_back(dist_step("agg", {{"agg:4", 0.45}, {"agg:5", 0.45}, {"agg:0", 0.1}}));
                entry.steps.push_back(dist_step(
                    "sel", {{"col:0", 0.3}, {"col:1", 0.24}, {"col:2", 0.23}, {"col:3", 0.23}}));
                entry.steps.push_back(delta_step("cond", EndConditions{}));
                break;
            }
        }

        ex.gold = gold;
        out.profile_counts[to_string(profile)]++;
        out.profile_of[ex.id] = to_string(profile);
        out.script.by_example.emplace(ex.id, std::move(entry));
        out.examples.push_back(std::move(ex));
    }
    return out;
}

}  // namespace egsql
