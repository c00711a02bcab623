#pragma once

#include <string>
#include <vector>

#include "egsql/errors.hpp"

namespace egsql {

// Aggregate codes follow the WikiSQL convention 0..5.
enum class AggregateFn { None = 0, Max = 1, Min = 2, Count = 3, Sum = 4, Avg = 5 };

// Comparator codes 0..2.
enum class Comparator { Eq = 0, Gt = 1, Lt = 2 };

inline const char* agg_keyword(AggregateFn fn) {
    switch (fn) {
        case AggregateFn::None: return "";
        case AggregateFn::Max: return "MAX";
        case AggregateFn::Min: return "MIN";
        case AggregateFn::Count: return "COUNT";
        case AggregateFn::Sum: return "SUM";
        case AggregateFn::Avg: return "AVG";
    }
    return "";
}

inline const char* comparator_symbol(Comparator op) {
    switch (op) {
        case Comparator::Eq: return "=";
        case Comparator::Gt: return ">";
        case Comparator::Lt: return "<";
    }
    return "?";
}

inline AggregateFn aggregate_from_code(int code, int line = 0) {
    if (code < 0 || code > 5) throw FormatError("aggregate code out of range: " + std::to_string(code), line);
    return static_cast<AggregateFn>(code);
}

inline Comparator comparator_from_code(int code, int line = 0) {
    if (code < 0 || code > 2) throw FormatError("comparator code out of range: " + std::to_string(code), line);
    return static_cast<Comparator>(code);
}

struct Condition {
    int column = 0;
    Comparator op = Comparator::Eq;
    std::string value;  // raw literal; folded or parsed only at execution time

    bool operator==(const Condition&) const = default;
};

// One complete query in the single-table dialect.
struct Query {
    AggregateFn agg = AggregateFn::None;
    int sel = 0;
    std::vector<Condition> conds;

    bool operator==(const Query&) const = default;
};

// A comparator sequence; the coarse "shape" of a query's WHERE clause.
using Sketch = std::vector<Comparator>;

inline std::string sketch_key(const Sketch& s) {
    std::string out;
    for (size_t i = 0; i < s.size(); i++) {
        if (i) out += ".";
        out += std::to_string(static_cast<int>(s[i]));
    }
    return out;
}

inline Sketch sketch_of(const Query& q) {
    Sketch s;
    s.reserve(q.conds.size());
    for (const auto& c : q.conds) s.push_back(c.op);
    return s;
}

// Prefix of a derivation, as seen at execution checkpoints. SelHead means the
// WHERE clause has not started; WithConds carries the complete conditions so far.
struct PartialProgram {
    enum class Stage { SelHead, WithConds };
    Stage stage = Stage::SelHead;
    AggregateFn agg = AggregateFn::None;
    int sel = 0;
    std::vector<Condition> conds;  // meaningful only for WithConds

    static PartialProgram sel_head(AggregateFn agg, int sel) {
        return {Stage::SelHead, agg, sel, {}};
    }
    static PartialProgram with_conds(AggregateFn agg, int sel, std::vector<Condition> conds) {
        return {Stage::WithConds, agg, sel, std::move(conds)};
    }
};

}  // namespace egsql
