#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "egsql/ast.hpp"
#include "egsql/errors.hpp"
#include "egsql/text.hpp"

namespace egsql {

// Typed decoder actions. Value spans address question tokens, end exclusive.
struct PickAgg {
    AggregateFn fn;
    bool operator==(const PickAgg&) const = default;
};
struct PickColumn {
    int column;
    bool operator==(const PickColumn&) const = default;
};
struct PickOp {
    Comparator op;
    bool operator==(const PickOp&) const = default;
};
struct PickValueSpan {
    int start;
    int end;
    bool operator==(const PickValueSpan&) const = default;
};
struct EndConditions {
    bool operator==(const EndConditions&) const = default;
};

using Action = std::variant<PickAgg, PickColumn, PickOp, PickValueSpan, EndConditions>;

// Stable text encoding, also the key format of logit scripts.
inline std::string encode_action(const Action& a) {
    if (const auto* p = std::get_if<PickAgg>(&a)) return "agg:" + std::to_string(static_cast<int>(p->fn));
    if (const auto* p = std::get_if<PickColumn>(&a)) return "col:" + std::to_string(p->column);
    if (const auto* p = std::get_if<PickOp>(&a)) return "op:" + std::to_string(static_cast<int>(p->op));
    if (const auto* p = std::get_if<PickValueSpan>(&a))
        return "val:" + std::to_string(p->start) + "-" + std::to_string(p->end);
    return "end";
}

inline std::optional<Action> decode_action(std::string_view s) {
    auto int_after = [&](size_t off, size_t len) -> std::optional<int> {
        auto v = parse_real(s.substr(off, len));
        if (!v || *v != static_cast<int>(*v) || *v < 0) return std::nullopt;
        return static_cast<int>(*v);
    };
    if (s == "end") return Action{EndConditions{}};
    if (s.rfind("agg:", 0) == 0) {
        auto v = int_after(4, s.size() - 4);
        if (!v || *v > 5) return std::nullopt;
        return Action{PickAgg{static_cast<AggregateFn>(*v)}};
    }
    if (s.rfind("col:", 0) == 0) {
        auto v = int_after(4, s.size() - 4);
        if (!v) return std::nullopt;
        return Action{PickColumn{*v}};
    }
    if (s.rfind("op:", 0) == 0) {
        auto v = int_after(3, s.size() - 3);
        if (!v || *v > 2) return std::nullopt;
        return Action{PickOp{static_cast<Comparator>(*v)}};
    }
    if (s.rfind("val:", 0) == 0) {
        size_t dash = s.find('-', 4);
        if (dash == std::string_view::npos) return std::nullopt;
        auto a = int_after(4, dash - 4);
        auto b = int_after(dash + 1, s.size() - dash - 1);
        if (!a || !b || *b <= *a) return std::nullopt;
        return Action{PickValueSpan{*a, *b}};
    }
    return std::nullopt;
}

enum class GrammarPos { Agg, Sel, CondOrEnd, CondOp, CondVal, Done };

// Script position tags; live beam entries at the same step share one tag.
inline const char* position_tag(GrammarPos p) {
    switch (p) {
        case GrammarPos::Agg: return "agg";
        case GrammarPos::Sel: return "sel";
        case GrammarPos::CondOrEnd: return "cond";
        case GrammarPos::CondOp: return "op";
        case GrammarPos::CondVal: return "val";
        case GrammarPos::Done: return "done";
    }
    return "?";
}

struct GrammarLimits {
    int max_conds = 4;
    int span_cap = 8;
};

struct GrammarCursor {
    GrammarPos pos = GrammarPos::Agg;
    int conds_done = 0;

    bool done() const { return pos == GrammarPos::Done; }

    GrammarCursor advanced(const Action& a) const {
        GrammarCursor next = *this;
        switch (pos) {
            case GrammarPos::Agg:
                if (!std::holds_alternative<PickAgg>(a)) break;
                next.pos = GrammarPos::Sel;
                return next;
            case GrammarPos::Sel:
                if (!std::holds_alternative<PickColumn>(a)) break;
                next.pos = GrammarPos::CondOrEnd;
                return next;
            case GrammarPos::CondOrEnd:
                if (std::holds_alternative<PickColumn>(a)) {
                    next.pos = GrammarPos::CondOp;
                    return next;
                }
                if (std::holds_alternative<EndConditions>(a)) {
                    next.pos = GrammarPos::Done;
                    return next;
                }
                break;
            case GrammarPos::CondOp:
                if (!std::holds_alternative<PickOp>(a)) break;
                next.pos = GrammarPos::CondVal;
                return next;
            case GrammarPos::CondVal:
                if (!std::holds_alternative<PickValueSpan>(a)) break;
                next.pos = GrammarPos::CondOrEnd;
                next.conds_done++;
                return next;
            case GrammarPos::Done:
                break;
        }
        throw ScorerViolation("action " + encode_action(a) + " illegal at position " + position_tag(pos));
    }
};

inline bool action_legal(const GrammarCursor& cur, const Action& a, int ncols, int qlen,
                         const GrammarLimits& lim) {
    switch (cur.pos) {
        case GrammarPos::Agg:
            return std::holds_alternative<PickAgg>(a);
        case GrammarPos::Sel:
            if (const auto* p = std::get_if<PickColumn>(&a)) return p->column >= 0 && p->column < ncols;
            return false;
        case GrammarPos::CondOrEnd:
            if (std::holds_alternative<EndConditions>(a)) return true;
            if (const auto* p = std::get_if<PickColumn>(&a))
                return cur.conds_done < lim.max_conds && p->column >= 0 && p->column < ncols;
            return false;
        case GrammarPos::CondOp:
            return std::holds_alternative<PickOp>(a);
        case GrammarPos::CondVal:
            if (const auto* p = std::get_if<PickValueSpan>(&a))
                return p->start >= 0 && p->end <= qlen && p->end > p->start && p->end - p->start <= lim.span_cap;
            return false;
        case GrammarPos::Done:
            return false;
    }
    return false;
}

// Deterministic order: codes ascending, columns ascending, End after columns,
// spans by (start, end).
inline std::vector<Action> legal_actions(const GrammarCursor& cur, int ncols, int qlen,
                                         const GrammarLimits& lim) {
    std::vector<Action> out;
    switch (cur.pos) {
        case GrammarPos::Agg:
            for (int i = 0; i <= 5; i++) out.emplace_back(PickAgg{static_cast<AggregateFn>(i)});
            break;
        case GrammarPos::Sel:
            for (int c = 0; c < ncols; c++) out.emplace_back(PickColumn{c});
            break;
        case GrammarPos::CondOrEnd:
            if (cur.conds_done < lim.max_conds)
                for (int c = 0; c < ncols; c++) out.emplace_back(PickColumn{c});
            out.emplace_back(EndConditions{});
            break;
        case GrammarPos::CondOp:
            for (int i = 0; i <= 2; i++) out.emplace_back(PickOp{static_cast<Comparator>(i)});
            break;
        case GrammarPos::CondVal:
            for (int s = 0; s < qlen; s++)
                for (int e = s + 1; e <= qlen && e - s <= lim.span_cap; e++) out.emplace_back(PickValueSpan{s, e});
            break;
        case GrammarPos::Done:
            break;
    }
    return out;
}

// Query under construction, folded up from the action sequence.
struct Draft {
    AggregateFn agg = AggregateFn::None;
    int sel = 0;
    std::vector<Condition> conds;
    std::optional<int> pending_col;

    void apply(const Action& a, const GrammarCursor& pos_before, const std::vector<std::string>& question) {
        if (const auto* p = std::get_if<PickAgg>(&a)) {
            agg = p->fn;
        } else if (const auto* p = std::get_if<PickColumn>(&a)) {
            if (pos_before.pos == GrammarPos::Sel)
                sel = p->column;
            else
                pending_col = p->column;
        } else if (const auto* p = std::get_if<PickOp>(&a)) {
            conds.push_back({pending_col.value(), p->op, ""});
            pending_col.reset();
        } else if (const auto* p = std::get_if<PickValueSpan>(&a)) {
            std::vector<std::string> toks(question.begin() + p->start, question.begin() + p->end);
            conds.back().value = join(toks, " ");
        }
    }

    Query to_query() const { return Query{agg, sel, conds}; }
};

// Distinct span texts in first-occurrence order; the literal pool a decoder
// over this question can actually produce.
inline std::vector<std::string> span_literal_pool(const std::vector<std::string>& question, int span_cap) {
    std::vector<std::string> pool;
    int n = static_cast<int>(question.size());
    for (int s = 0; s < n; s++)
        for (int e = s + 1; e <= n && e - s <= span_cap; e++) {
            std::vector<std::string> toks(question.begin() + s, question.begin() + e);
            std::string lit = join(toks, " ");
            if (std::find(pool.begin(), pool.end(), lit) == pool.end()) pool.push_back(lit);
        }
    return pool;
}

}  // namespace egsql
