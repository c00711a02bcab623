#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "egsql/actions.hpp"
#include "egsql/errors.hpp"
#include "egsql/executor.hpp"
#include "egsql/scorer.hpp"
#include "egsql/sql.hpp"
#include "egsql/table.hpp"

namespace egsql {

// One scripted distribution: applies at a fixed step index when the decoder is
// at the matching grammar position. Unscripted (index, position) pairs fall
// back to uniform over the legal actions.
struct ScriptStep {
    std::string position;
    std::vector<std::pair<std::string, double>> actions;  // encoding -> probability
};

struct ScriptEntry {
    std::vector<ScriptStep> steps;
};

struct LogitScript {
    std::map<std::string, ScriptEntry> by_example;
};

namespace detail {

inline void validate_script_step(const ScriptStep& s, int line_no) {
    static const std::set<std::string> tags = {"agg", "sel", "cond", "op", "val"};
    if (!tags.count(s.position)) throw DistributionError("unknown position tag '" + s.position + "'");
    double sum = 0;
    std::set<std::string> seen;
    for (const auto& [enc, p] : s.actions) {
        if (!decode_action(enc)) throw DistributionError("unknown action encoding '" + enc + "'");
        if (!std::isfinite(p) || p < 0)
            throw DistributionError("bad probability for '" + enc + "' at line " + std::to_string(line_no));
        if (!seen.insert(enc).second) throw DistributionError("duplicate action '" + enc + "'");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw DistributionError("probabilities for position '" + s.position + "' sum to " + std::to_string(sum));
}

}  // namespace detail

inline LogitScript load_logit_script(const std::filesystem::path& path) {
    LogitScript script;
    detail::for_each_line(path, [&](const std::string& line, int line_no) {
        nlohmann::json j = detail::parse_json_line(line, line_no);
        if (!j.contains("example_id") || !j["example_id"].is_string())
            throw FormatError("script record needs a string \"example_id\"", line_no);
        std::string id = j["example_id"].get<std::string>();
        if (script.by_example.count(id)) throw FormatError("duplicate script for example " + id, line_no);
        ScriptEntry entry;
        for (const auto& js : j.value("steps", nlohmann::json::array())) {
            if (!js.is_object() || !js.contains("position") || !js.contains("actions"))
                throw FormatError("script step needs \"position\" and \"actions\"", line_no);
            ScriptStep step;
            step.position = js["position"].get<std::string>();
            for (const auto& ja : js["actions"]) {
                if (!ja.is_array() || ja.size() != 2 || !ja[0].is_string() || !ja[1].is_number())
                    throw FormatError("script action must be an [encoding, probability] pair", line_no);
                step.actions.emplace_back(ja[0].get<std::string>(), ja[1].get<double>());
            }
            detail::validate_script_step(step, line_no);
            entry.steps.push_back(std::move(step));
        }
        script.by_example.emplace(std::move(id), std::move(entry));
    });
    return script;
}

inline void save_logit_script(const LogitScript& script, const std::filesystem::path& path) {
    std::ofstream out = detail::open_output(path);
    for (const auto& [id, entry] : script.by_example) {
        nlohmann::ordered_json j;
        j["example_id"] = id;
        auto steps = nlohmann::ordered_json::array();
        for (const auto& s : entry.steps) {
            nlohmann::ordered_json js;
            js["position"] = s.position;
            auto actions = nlohmann::ordered_json::array();
            for (const auto& [enc, p] : s.actions) actions.push_back(nlohmann::ordered_json::array({enc, p}));
            js["actions"] = actions;
            steps.push_back(std::move(js));
        }
        j["steps"] = steps;
        out << j.dump() << "\n";
    }
}

// Replays scripted distributions; the reproducible stand-in for a neural model.
class OracleLogitScorer {
  public:
    OracleLogitScorer(LogitScript script, GrammarLimits limits = {})
        : script_(std::move(script)), limits_(limits) {}

    struct State {
        const ScriptEntry* entry = nullptr;  // owned by the scorer
        GrammarCursor cur;
        int step = 0;
        int ncols = 0;
        int qlen = 0;
    };

    State init(const Example& ex, const Table& table) const {
        State st;
        auto it = script_.by_example.find(ex.id);
        if (it != script_.by_example.end()) st.entry = &it->second;
        st.ncols = table.ncols();
        st.qlen = static_cast<int>(ex.question.size());
        return st;
    }

    std::vector<ScoredAction> step(const State& st) const {
        const ScriptStep* scripted = scripted_step(st);
        if (!scripted) return uniform_over(legal_actions(st.cur, st.ncols, st.qlen, limits_));
        std::vector<ScoredAction> out;
        out.reserve(scripted->actions.size());
        for (const auto& [enc, p] : scripted->actions) out.push_back({*decode_action(enc), p});
        return out;
    }

    State advance(const State& st, const Action& a) const {
        State next = st;
        next.cur = st.cur.advanced(a);
        next.step = st.step + 1;
        return next;
    }

    const GrammarLimits& limits() const { return limits_; }
    const LogitScript& script() const { return script_; }

    // Probability of one action at one state, with the uniform fallback.
    double action_prob(const State& st, const Action& a) const {
        const ScriptStep* scripted = scripted_step(st);
        if (!scripted) {
            auto legal = legal_actions(st.cur, st.ncols, st.qlen, limits_);
            return legal.empty() ? 0.0 : 1.0 / static_cast<double>(legal.size());
        }
        std::string enc = encode_action(a);
        for (const auto& [e, p] : scripted->actions)
            if (e == enc) return p;
        return 0.0;
    }

  private:
    const ScriptStep* scripted_step(const State& st) const {
        if (!st.entry || st.step >= static_cast<int>(st.entry->steps.size())) return nullptr;
        const ScriptStep& s = st.entry->steps[st.step];
        if (s.position != position_tag(st.cur.pos)) return nullptr;
        return &s;
    }

    LogitScript script_;
    GrammarLimits limits_;
};

struct OracleResult {
    std::optional<Query> program;
    double logprob = 0;
    std::string encoding;  // canonical action encoding of the best realization
};

namespace detail {

// Scores one concrete action sequence under the script; nullopt when any step
// has zero probability (the sequence is unreachable).
inline std::optional<double> sequence_logprob(const OracleLogitScorer& scorer, const Example& ex,
                                              const Table& table, const std::vector<Action>& actions) {
    OracleLogitScorer::State st = scorer.init(ex, table);
    double lp = 0;
    for (const auto& a : actions) {
        double p = scorer.action_prob(st, a);
        if (p <= 0) return std::nullopt;
        lp += std::log(p);
        st = scorer.advance(st, a);
    }
    return lp;
}

inline std::string encode_sequence(const std::vector<Action>& actions) {
    std::string out;
    for (size_t i = 0; i < actions.size(); i++) {
        if (i) out += ";";
        out += encode_action(actions[i]);
    }
    return out;
}

}  // namespace detail

// Exhaustive reference: enumerate every program over the question's span
// literals, keep the error-free ones, score each by its best-scoring action
// realization, and return the argmax. Ties break on the lexicographically
// smallest full action encoding, mirroring the beam decoder.
inline OracleResult oracle_argmax(const OracleLogitScorer& scorer, const Example& ex, const Table& table,
                                  const ExecConfig& exec = {}) {
    const GrammarLimits& lim = scorer.limits();
    std::vector<std::string> pool = span_literal_pool(ex.question, lim.span_cap);

    // literal -> all spans realizing it, in (start, end) order
    std::map<std::string, std::vector<PickValueSpan>> spans_of;
    int n = static_cast<int>(ex.question.size());
    for (int s = 0; s < n; s++)
        for (int e = s + 1; e <= n && e - s <= lim.span_cap; e++) {
            std::vector<std::string> toks(ex.question.begin() + s, ex.question.begin() + e);
            spans_of[join(toks, " ")].push_back({s, e});
        }

    OracleResult best;
    bool found = false;

    enumerate_programs(table, pool, lim.max_conds, [&](const Query& q) {
        if (!is_ok(execute(q, table, exec))) return true;

        // All realizations: per condition, any span producing its literal.
        std::vector<Action> actions = {Action{PickAgg{q.agg}}, Action{PickColumn{q.sel}}};
        std::optional<double> best_lp;
        std::string best_enc;
        std::function<void(size_t)> walk = [&](size_t ci) {
            if (ci == q.conds.size()) {
                std::vector<Action> full = actions;
                full.emplace_back(EndConditions{});
                auto lp = detail::sequence_logprob(scorer, ex, table, full);
                if (!lp) return;
                // Identical sequences produce identical doubles on both the
                // beam and oracle sides, so ties compare exactly.
                std::string enc = detail::encode_sequence(full);
                if (!best_lp || *lp > *best_lp || (*lp == *best_lp && enc < best_enc)) {
                    best_lp = lp;
                    best_enc = enc;
                }
                return;
            }
            const Condition& c = q.conds[ci];
            for (const auto& span : spans_of.at(c.value)) {
                actions.emplace_back(PickColumn{c.column});
                actions.emplace_back(PickOp{c.op});
                actions.emplace_back(span);
                walk(ci + 1);
                actions.resize(actions.size() - 3);
            }
        };
        walk(0);
        if (!best_lp) return true;  // unreachable under the script

        if (!found || *best_lp > best.logprob || (*best_lp == best.logprob && best_enc < best.encoding)) {
            best.program = q;
            best.logprob = *best_lp;
            best.encoding = best_enc;
            found = true;
        }
        return true;
    });

    if (!found) best.program.reset();
    return best;
}

}  // namespace egsql
