#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "egsql/actions.hpp"
#include "egsql/executor.hpp"
#include "egsql/scorer.hpp"
#include "egsql/sql.hpp"
#include "egsql/table.hpp"

namespace egsql {

// Execution checkpoints: after the aggregate+selection head, after every
// completed condition, and on the finished program.
enum class Stage { AfterSelHead, AfterEachCondition, Final };

struct StageSet {
    bool selhead = true;
    bool cond = true;
    bool final = true;

    static StageSet all() { return {true, true, true}; }
    static StageSet none() { return {false, false, false}; }

    bool has(Stage s) const {
        switch (s) {
            case Stage::AfterSelHead: return selhead;
            case Stage::AfterEachCondition: return cond;
            case Stage::Final: return final;
        }
        return false;
    }
    bool any() const { return selhead || cond || final; }
    bool operator==(const StageSet&) const = default;
};

enum class Fallback { BestErroneous, Abstain };

struct PrunedCounts {
    int parse = 0;
    int type = 0;
    int empty = 0;

    void add(ErrorKind k) {
        if (k == ErrorKind::ParseError) parse++;
        else if (k == ErrorKind::TypeError) type++;
        else empty++;
    }
    void add(const PrunedCounts& o) {
        parse += o.parse;
        type += o.type;
        empty += o.empty;
    }
    int total() const { return parse + type + empty; }
    bool operator==(const PrunedCounts&) const = default;
};

struct EgConfig {
    int beam_width = 5;
    StageSet stages = StageSet::all();
    Fallback fallback = Fallback::BestErroneous;
    ExecConfig exec;
    int expansion_factor = 2;  // beam expands to beam_width * this before pruning
    GrammarLimits limits;
    bool sketch_backtracking = true;
    bool collect_trace = false;
};

// Per-step record of what the beam expanded, pruned and kept.
struct StepTrace {
    int step = 0;
    std::string position;
    std::vector<std::string> expanded;  // encodings after width-k' truncation
    std::vector<std::string> pruned;    // encoding + failure kind
    std::vector<std::string> beam;      // continuing entries kept
};

struct DecodeResult {
    std::optional<Query> program;
    double logprob = 0;
    PrunedCounts pruned;
    bool used_fallback = false;
    int backtrack_count = 0;
    std::vector<StepTrace> trace;
};

namespace detail {

struct FinishedCandidate {
    Query query;
    double logprob;
    std::string enc;
};

inline bool candidate_before(const FinishedCandidate& a, const FinishedCandidate& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return a.enc < b.enc;
}

}  // namespace detail

// Beam search over the typed action grammar with execution-guided pruning.
// Completed hypotheses leave the beam for an unbounded finished pool; the
// width caps continuing candidates only. Ties break on the lexicographically
// smallest canonical action encoding of the full path.
template <ScorerContract S>
DecodeResult eg_beam_decode(const S& scorer, const Example& ex, const Table& table, const EgConfig& cfg) {
    struct Entry {
        typename S::State state;
        GrammarCursor cur;
        Draft draft;
        double logprob = 0;
        std::string enc;
    };
    struct Expansion {
        Entry entry;
        Action action;
        GrammarPos pos_before = GrammarPos::Agg;
    };

    const int ncols = table.ncols();
    const int qlen = static_cast<int>(ex.question.size());
    const size_t kprime = static_cast<size_t>(cfg.beam_width) * static_cast<size_t>(std::max(1, cfg.expansion_factor));

    DecodeResult result;
    std::vector<detail::FinishedCandidate> finished;
    std::vector<detail::FinishedCandidate> erroneous;

    std::vector<Entry> live;
    live.push_back(Entry{scorer.init(ex, table), GrammarCursor{}, Draft{}, 0.0, ""});

    for (int step = 0; !live.empty(); step++) {
        std::vector<Expansion> expansions;
        for (const Entry& e : live) {
            std::vector<ScoredAction> dist = scorer.step(e.state);
            try {
                validate_distribution(dist, e.cur, ncols, qlen, cfg.limits);
            } catch (const ScorerViolation& v) {
                throw ScorerViolation("step " + std::to_string(step) + ": " + v.what());
            }
            for (const ScoredAction& sa : dist) {
                if (sa.prob <= 0) continue;  // zero-mass children are unreachable
                Expansion x;
                x.pos_before = e.cur.pos;
                x.action = sa.action;
                x.entry.state = scorer.advance(e.state, sa.action);
                x.entry.cur = e.cur.advanced(sa.action);
                x.entry.draft = e.draft;
                x.entry.draft.apply(sa.action, e.cur, ex.question);
                x.entry.logprob = e.logprob + std::log(sa.prob);
                x.entry.enc = e.enc.empty() ? encode_action(sa.action) : e.enc + ";" + encode_action(sa.action);
                expansions.push_back(std::move(x));
            }
        }

        std::sort(expansions.begin(), expansions.end(), [](const Expansion& a, const Expansion& b) {
            if (a.entry.logprob != b.entry.logprob) return a.entry.logprob > b.entry.logprob;
            return a.entry.enc < b.entry.enc;
        });
        if (expansions.size() > kprime) expansions.resize(kprime);  // no refill past this cut

        StepTrace tr;
        if (cfg.collect_trace) {
            tr.step = step;
            tr.position = position_tag(live.front().cur.pos);
            for (const auto& x : expansions) tr.expanded.push_back(x.entry.enc);
        }

        std::vector<Entry> next_live;
        for (Expansion& x : expansions) {
            std::optional<Stage> event;
            if (x.pos_before == GrammarPos::Sel && std::holds_alternative<PickColumn>(x.action))
                event = Stage::AfterSelHead;
            else if (std::holds_alternative<PickValueSpan>(x.action))
                event = Stage::AfterEachCondition;
            else if (std::holds_alternative<EndConditions>(x.action))
                event = Stage::Final;

            std::optional<Failure> failure;
            if (event && cfg.stages.has(*event)) {
                PartialProgram partial =
                    *event == Stage::AfterSelHead
                        ? PartialProgram::sel_head(x.entry.draft.agg, x.entry.draft.sel)
                        : PartialProgram::with_conds(x.entry.draft.agg, x.entry.draft.sel, x.entry.draft.conds);
                failure = check_partial(partial, table, cfg.exec);
            }

            if (failure) {
                result.pruned.add(failure->kind);
                if (cfg.collect_trace)
                    tr.pruned.push_back(x.entry.enc + " [" + to_string(failure->kind) + "]");
                if (*event == Stage::Final)
                    erroneous.push_back({x.entry.draft.to_query(), x.entry.logprob, x.entry.enc});
                continue;
            }

            if (x.entry.cur.done()) {
                finished.push_back({x.entry.draft.to_query(), x.entry.logprob, x.entry.enc});
            } else if (next_live.size() < static_cast<size_t>(cfg.beam_width)) {
                next_live.push_back(std::move(x.entry));
            }
        }
        if (cfg.collect_trace) {
            for (const auto& e : next_live) tr.beam.push_back(e.enc);
            result.trace.push_back(std::move(tr));
        }
        live = std::move(next_live);
    }

    if (!finished.empty()) {
        auto best = std::min_element(finished.begin(), finished.end(), detail::candidate_before);
        result.program = best->query;
        result.logprob = best->logprob;
        return result;
    }

    if (cfg.fallback == Fallback::Abstain) return result;

    if (!erroneous.empty()) {
        auto best = std::min_element(erroneous.begin(), erroneous.end(), detail::candidate_before);
        result.program = best->query;
        result.logprob = best->logprob;
        result.used_fallback = true;
        return result;
    }

    // Every candidate died mid-derivation, so no complete erroneous program
    // exists yet; rerun unguided to recover the most probable completion.
    if (cfg.stages.any()) {
        EgConfig unguided = cfg;
        unguided.stages = StageSet::none();
        unguided.collect_trace = false;
        DecodeResult retry = eg_beam_decode(scorer, ex, table, unguided);
        if (retry.program) {
            result.program = retry.program;
            result.logprob = retry.logprob;
            result.used_fallback = true;
        }
    }
    return result;
}

// Whole-program reranking for scorers that emit complete joint candidates:
// keep the most probable candidate that executes cleanly. Without a Final
// stage this degrades to plain argmax.
inline DecodeResult rerank_joint_candidates(std::vector<std::pair<Query, double>> candidates, const Table& table,
                                            const EgConfig& cfg) {
    DecodeResult result;
    if (candidates.empty()) return result;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](const auto& a, const auto& b) {
                         if (a.second != b.second) return a.second > b.second;
                         return to_text(a.first, table) < to_text(b.first, table);
                     });
    if (!cfg.stages.final) {
        result.program = candidates.front().first;
        result.logprob = candidates.front().second;
        return result;
    }
    for (const auto& [q, lp] : candidates) {
        ExecOutcome out = execute(q, table, cfg.exec);
        if (is_ok(out)) {
            result.program = q;
            result.logprob = lp;
            return result;
        }
        result.pruned.add(std::get<Failure>(out).kind);
    }
    if (cfg.fallback == Fallback::BestErroneous) {
        result.program = candidates.front().first;
        result.logprob = candidates.front().second;
        result.used_fallback = true;
    }
    return result;
}

// Coarse-to-fine decoding: try sketches in ranked order; when the guided fine
// decode of a sketch yields no clean completion, backtrack to the next sketch.
// M provides sketch_rank(example, table) and fine_scorer(sketch).
template <typename M>
DecodeResult decode_with_sketch_backtracking(const M& model, const Example& ex, const Table& table,
                                             const EgConfig& cfg) {
    DecodeResult result;
    auto ranked = model.sketch_rank(ex, table);
    if (ranked.empty()) return result;

    std::vector<std::pair<Query, double>> erroneous;
    size_t tried = 0;
    for (const auto& [sketch, sketch_lp] : ranked) {
        if (static_cast<int>(sketch.size()) > cfg.limits.max_conds) continue;
        tried++;
        EgConfig sub_cfg = cfg;
        sub_cfg.fallback = Fallback::BestErroneous;  // harvest candidates for the outer fallback
        sub_cfg.collect_trace = false;
        auto scorer = model.fine_scorer(sketch);
        DecodeResult sub = eg_beam_decode(scorer, ex, table, sub_cfg);
        result.pruned.add(sub.pruned);
        if (sub.program && !sub.used_fallback) {
            result.program = sub.program;
            result.logprob = sketch_lp + sub.logprob;
            result.backtrack_count = static_cast<int>(tried) - 1;
            return result;
        }
        if (sub.program) erroneous.emplace_back(*sub.program, sketch_lp + sub.logprob);
        if (!cfg.sketch_backtracking) break;
    }

    result.backtrack_count = static_cast<int>(tried);
    if (cfg.fallback == Fallback::BestErroneous && !erroneous.empty()) {
        auto best = std::min_element(erroneous.begin(), erroneous.end(), [&](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return to_text(a.first, table) < to_text(b.first, table);
        });
        result.program = best->first;
        result.logprob = best->second;
        result.used_fallback = true;
    }
    return result;
}

}  // namespace egsql
