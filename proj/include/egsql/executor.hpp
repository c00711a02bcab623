#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "egsql/ast.hpp"
#include "egsql/sql.hpp"
#include "egsql/table.hpp"
#include "egsql/text.hpp"

namespace egsql {

// Execution failure taxonomy. ParseError only arises when executing from text.
enum class ErrorKind { ParseError, TypeError, EmptyOutput };

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::ParseError: return "parse";
        case ErrorKind::TypeError: return "type";
        case ErrorKind::EmptyOutput: return "empty";
    }
    return "?";
}

struct Failure {
    ErrorKind kind;
    std::string detail;
};

// Multiset of output values; a bare SELECT yields one cell per matched row.
struct ResultSet {
    std::vector<Value> values;
};

using ExecOutcome = std::variant<ResultSet, Failure>;

inline bool is_ok(const ExecOutcome& o) { return std::holds_alternative<ResultSet>(o); }

struct ExecConfig {
    bool empty_output_check = true;
    // When true, COUNT over zero matched rows also counts as empty output.
    bool count_empty_is_empty = true;
};

inline std::optional<Failure> typecheck_aggregate(AggregateFn fn, const Table& table, int sel) {
    const ColumnSchema& col = table.columns.at(sel);
    if ((fn == AggregateFn::Sum || fn == AggregateFn::Avg) && col.type == ColumnType::Text)
        return Failure{ErrorKind::TypeError,
                       std::string(agg_keyword(fn)) + " over text column '" + col.name + "'"};
    return std::nullopt;
}

inline std::optional<Failure> typecheck_condition(const Condition& c, const Table& table) {
    const ColumnSchema& col = table.columns.at(c.column);
    if (col.type == ColumnType::Text) {
        if (c.op != Comparator::Eq)
            return Failure{ErrorKind::TypeError, std::string("order comparison '") + comparator_symbol(c.op) +
                                                     "' on text column '" + col.name + "'"};
        return std::nullopt;
    }
    if (!parse_real(c.value))
        return Failure{ErrorKind::TypeError,
                       "literal '" + c.value + "' is not numeric for real column '" + col.name + "'"};
    return std::nullopt;
}

namespace detail {

inline bool row_matches(const std::vector<Value>& row, const Condition& c, ColumnType type) {
    const Value& cell = row.at(c.column);
    if (type == ColumnType::Text) {
        return fold(std::get<std::string>(cell)) == fold(c.value);
    }
    double lhs = std::get<double>(cell);
    double rhs = *parse_real(c.value);  // typechecked by the caller
    switch (c.op) {
        case Comparator::Eq: return lhs == rhs;
        case Comparator::Gt: return lhs > rhs;
        case Comparator::Lt: return lhs < rhs;
    }
    return false;
}

}  // namespace detail

// Typechecks conditions left to right (first failure wins), then filters rows.
inline std::variant<std::vector<int>, Failure> filter_rows(const Table& table,
                                                           const std::vector<Condition>& conds) {
    for (const auto& c : conds)
        if (auto f = typecheck_condition(c, table)) return *f;
    std::vector<int> rows;
    for (int r = 0; r < table.nrows(); r++) {
        bool ok = true;
        for (const auto& c : conds)
            if (!detail::row_matches(table.rows[r], c, table.columns[c.column].type)) {
                ok = false;
                break;
            }
        if (ok) rows.push_back(r);
    }
    return rows;
}

// Full execution. Failure precedence: aggregate typecheck, condition typechecks
// in clause order, then the empty-output check, then aggregation.
inline ExecOutcome execute(const Query& q, const Table& table, const ExecConfig& cfg = {}) {
    if (auto f = typecheck_aggregate(q.agg, table, q.sel)) return *f;
    auto filtered = filter_rows(table, q.conds);
    if (std::holds_alternative<Failure>(filtered)) return std::get<Failure>(filtered);
    const std::vector<int>& rows = std::get<std::vector<int>>(filtered);

    if (rows.empty() && cfg.empty_output_check) {
        bool exempt = q.agg == AggregateFn::Count && !cfg.count_empty_is_empty;
        if (!exempt) return Failure{ErrorKind::EmptyOutput, "no rows matched the conditions"};
    }

    const ColumnSchema& col = table.columns.at(q.sel);
    ResultSet out;
    switch (q.agg) {
        case AggregateFn::None:
            for (int r : rows) out.values.push_back(table.rows[r].at(q.sel));
            break;
        case AggregateFn::Count:
            out.values.emplace_back(static_cast<double>(rows.size()));
            break;
        case AggregateFn::Max:
        case AggregateFn::Min: {
            if (rows.empty()) break;  // reachable only with checks off
            bool want_max = q.agg == AggregateFn::Max;
            if (col.type == ColumnType::Real) {
                double best = std::get<double>(table.rows[rows[0]].at(q.sel));
                for (int r : rows) {
                    double v = std::get<double>(table.rows[r].at(q.sel));
                    if (want_max ? v > best : v < best) best = v;
                }
                out.values.emplace_back(best);
            } else {
                // Folded lexicographic order; first-encountered cell wins ties.
                std::string best = std::get<std::string>(table.rows[rows[0]].at(q.sel));
                std::string best_key = fold(best);
                for (int r : rows) {
                    const std::string& v = std::get<std::string>(table.rows[r].at(q.sel));
                    std::string key = fold(v);
                    if (want_max ? key > best_key : key < best_key) {
                        best = v;
                        best_key = key;
                    }
                }
                out.values.emplace_back(best);
            }
            break;
        }
        case AggregateFn::Sum:
        case AggregateFn::Avg: {
            double sum = 0;
            for (int r : rows) sum += std::get<double>(table.rows[r].at(q.sel));
            if (q.agg == AggregateFn::Avg && !rows.empty()) sum /= static_cast<double>(rows.size());
            out.values.emplace_back(sum);
            break;
        }
    }
    return out;
}

// Checkpoint check on a partial derivation. Deliberately independent of
// count_empty_is_empty: a prefix with no matching rows is pruned even when a
// later COUNT would have been allowed to see zero rows.
inline std::optional<Failure> check_partial(const PartialProgram& p, const Table& table,
                                            const ExecConfig& cfg = {}) {
    if (auto f = typecheck_aggregate(p.agg, table, p.sel)) return f;
    if (p.stage == PartialProgram::Stage::SelHead) return std::nullopt;
    auto filtered = filter_rows(table, p.conds);
    if (std::holds_alternative<Failure>(filtered)) return std::get<Failure>(filtered);
    if (cfg.empty_output_check && std::get<std::vector<int>>(filtered).empty())
        return Failure{ErrorKind::EmptyOutput, "no rows match the conditions so far"};
    return std::nullopt;
}

// Multiset comparison: numbers within tolerance, strings after folding.
inline bool results_equal(const ResultSet& a, const ResultSet& b, double tol = 1e-9) {
    std::vector<double> na, nb;
    std::vector<std::string> sa, sb;
    for (const auto& v : a.values)
        std::holds_alternative<double>(v) ? na.push_back(std::get<double>(v)) : sa.push_back(fold(std::get<std::string>(v)));
    for (const auto& v : b.values)
        std::holds_alternative<double>(v) ? nb.push_back(std::get<double>(v)) : sb.push_back(fold(std::get<std::string>(v)));
    if (na.size() != nb.size() || sa.size() != sb.size()) return false;
    std::sort(na.begin(), na.end());
    std::sort(nb.begin(), nb.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    for (size_t i = 0; i < na.size(); i++)
        if (std::abs(na[i] - nb[i]) > tol * std::max({1.0, std::abs(na[i]), std::abs(nb[i])})) return false;
    return sa == sb;
}

// Parses then executes; parse failures surface as ErrorKind::ParseError.
inline ExecOutcome execute_text(std::string_view sql, const Table& table, const ExecConfig& cfg = {}) {
    Query q;
    try {
        q = parse(sql, table);
    } catch (const SqlParseError& e) {
        return Failure{ErrorKind::ParseError, e.what()};
    }
    return execute(q, table, cfg);
}

}  // namespace egsql
