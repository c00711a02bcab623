#pragma once

#include <functional>
#include <string>
#include <vector>

#include "egsql/ast.hpp"
#include "egsql/table.hpp"
#include "egsql/text.hpp"

namespace egsql {

namespace detail {

inline bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline bool is_reserved_word(const std::string& folded) {
    return folded == "select" || folded == "where" || folded == "and" || folded == "max" || folded == "min" ||
           folded == "count" || folded == "sum" || folded == "avg";
}

inline std::string emit_column(const std::string& name) {
    bool plain = !name.empty() && !is_reserved_word(fold(name));
    for (char c : name)
        if (!is_word_char(c)) plain = false;
    if (plain) return name;
    std::string out = "[";
    for (char c : name) {
        out += c;
        if (c == ']') out += ']';  // ]] escapes a literal ]
    }
    out += "]";
    return out;
}

inline std::string emit_literal(const std::string& v) {
    std::string out = "'";
    for (char c : v) {
        out += c;
        if (c == '\'') out += '\'';
    }
    out += "'";
    return out;
}

struct SqlToken {
    enum class Kind { Word, Bracketed, Quoted, Symbol };
    Kind kind;
    std::string text;
    size_t pos;
};

inline std::vector<SqlToken> tokenize_sql(std::string_view s) {
    std::vector<SqlToken> toks;
    size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            i++;
        } else if (c == '=' || c == '>' || c == '<') {
            toks.push_back({SqlToken::Kind::Symbol, std::string(1, c), i});
            i++;
        } else if (c == '\'') {
            size_t start = i++;
            std::string text;
            for (;;) {
                if (i >= s.size()) throw SqlParseError("unterminated quoted literal", start);
                if (s[i] == '\'') {
                    if (i + 1 < s.size() && s[i + 1] == '\'') {
                        text += '\'';
                        i += 2;
                    } else {
                        i++;
                        break;
                    }
                } else {
                    text += s[i++];
                }
            }
            toks.push_back({SqlToken::Kind::Quoted, std::move(text), start});
        } else if (c == '[') {
            size_t start = i++;
            std::string text;
            for (;;) {
                if (i >= s.size()) throw SqlParseError("unterminated bracketed column name", start);
                if (s[i] == ']') {
                    if (i + 1 < s.size() && s[i + 1] == ']') {
                        text += ']';
                        i += 2;
                    } else {
                        i++;
                        break;
                    }
                } else {
                    text += s[i++];
                }
            }
            toks.push_back({SqlToken::Kind::Bracketed, std::move(text), start});
        } else if (is_word_char(c)) {
            size_t start = i;
            while (i < s.size() && is_word_char(s[i])) i++;
            toks.push_back({SqlToken::Kind::Word, std::string(s.substr(start, i - start)), start});
        } else {
            throw SqlParseError(std::string("unexpected character '") + c + "'", i);
        }
    }
    return toks;
}

}  // namespace detail

// Canonical text form. Aggregate keyword omitted for None; column names are
// bracketed when they contain non-word characters or collide with a keyword.
inline std::string to_text(const Query& q, const Table& table) {
    std::string out = "SELECT ";
    if (q.agg != AggregateFn::None) {
        out += agg_keyword(q.agg);
        out += " ";
    }
    out += detail::emit_column(table.columns.at(q.sel).name);
    if (!q.conds.empty()) {
        out += " WHERE ";
        for (size_t i = 0; i < q.conds.size(); i++) {
            if (i) out += " AND ";
            const Condition& c = q.conds[i];
            out += detail::emit_column(table.columns.at(c.column).name);
            out += " ";
            out += comparator_symbol(c.op);
            out += " ";
            out += detail::emit_literal(c.value);
        }
    }
    return out;
}

// Parses the canonical dialect back into a Query against a concrete table.
// Throws SqlParseError with a byte offset on any malformed input.
inline Query parse(std::string_view text, const Table& table) {
    using detail::SqlToken;
    std::vector<SqlToken> toks = detail::tokenize_sql(text);
    size_t i = 0;

    auto peek = [&]() -> const SqlToken* { return i < toks.size() ? &toks[i] : nullptr; };
    auto at_word = [&](const char* w) {
        const SqlToken* t = peek();
        return t && t->kind == SqlToken::Kind::Word && fold(t->text) == w;
    };
    auto take_column = [&](const char* what) -> int {
        const SqlToken* t = peek();
        if (!t || (t->kind != SqlToken::Kind::Word && t->kind != SqlToken::Kind::Bracketed))
            throw SqlParseError(std::string("expected ") + what, t ? t->pos : text.size());
        int idx = table.column_index(t->text);
        if (idx < 0) throw SqlParseError("unknown column or keyword '" + t->text + "'", t->pos);
        i++;
        return idx;
    };

    if (!at_word("select")) throw SqlParseError("expected SELECT", peek() ? peek()->pos : 0);
    i++;

    Query q;
    const SqlToken* t = peek();
    if (!t) throw SqlParseError("expected a column after SELECT", text.size());
    if (t->kind == SqlToken::Kind::Word) {
        std::string f = fold(t->text);
        bool is_agg = f == "max" || f == "min" || f == "count" || f == "sum" || f == "avg";
        // An aggregate keyword only counts as one when a column can still follow;
        // otherwise it names a column (which must then exist in the table).
        bool column_follows = i + 1 < toks.size() &&
                              !(toks[i + 1].kind == SqlToken::Kind::Word && fold(toks[i + 1].text) == "where");
        if (is_agg && column_follows) {
            if (f == "max") q.agg = AggregateFn::Max;
            else if (f == "min") q.agg = AggregateFn::Min;
            else if (f == "count") q.agg = AggregateFn::Count;
            else if (f == "sum") q.agg = AggregateFn::Sum;
            else q.agg = AggregateFn::Avg;
            i++;
        }
    }
    q.sel = take_column("a column after SELECT");

    if (at_word("where")) {
        i++;
        for (;;) {
            Condition c;
            c.column = take_column("a condition column");
            const SqlToken* op = peek();
            if (!op || op->kind != SqlToken::Kind::Symbol)
                throw SqlParseError("expected a comparator (=, > or <)", op ? op->pos : text.size());
            c.op = op->text == "=" ? Comparator::Eq : op->text == ">" ? Comparator::Gt : Comparator::Lt;
            i++;
            const SqlToken* lit = peek();
            if (!lit || lit->kind != SqlToken::Kind::Quoted)
                throw SqlParseError("expected a quoted literal", lit ? lit->pos : text.size());
            c.value = lit->text;
            i++;
            q.conds.push_back(std::move(c));
            if (at_word("and")) {
                i++;
                continue;
            }
            break;
        }
    }
    if (peek()) throw SqlParseError("unexpected trailing input '" + peek()->text + "'", peek()->pos);
    return q;
}

namespace detail {

// Condition values match when they agree numerically (Real column) or after folding.
inline bool cond_value_equal(const std::string& a, const std::string& b, ColumnType type) {
    if (type == ColumnType::Real) {
        auto va = parse_real(a), vb = parse_real(b);
        if (va && vb) return *va == *vb;
    }
    return fold(a) == fold(b);
}

inline bool cond_equal(const Condition& a, const Condition& b, const Table& table) {
    return a.column == b.column && a.op == b.op &&
           cond_value_equal(a.value, b.value, table.columns.at(a.column).type);
}

}  // namespace detail

// Structural equality up to condition order and value normalization.
inline bool canonical_equal(const Query& a, const Query& b, const Table& table) {
    if (a.agg != b.agg || a.sel != b.sel || a.conds.size() != b.conds.size()) return false;
    std::vector<bool> used(b.conds.size(), false);
    for (const auto& ca : a.conds) {
        bool matched = false;
        for (size_t j = 0; j < b.conds.size(); j++) {
            if (used[j]) continue;
            if (detail::cond_equal(ca, b.conds[j], table)) {
                used[j] = true;
                matched = true;
                break;
            }
        }
        if (!matched) return false;
    }
    return true;
}

// Number of programs over ncols columns, pool_size literals, up to max_conds
// ordered conditions (duplicates allowed): 6*C * sum_j (3*C*P)^j.
inline double program_count(int ncols, int pool_size, int max_conds) {
    double per_cond = 3.0 * ncols * pool_size;
    double total_seqs = 0, p = 1;
    for (int j = 0; j <= max_conds; j++) {
        total_seqs += p;
        p *= per_cond;
    }
    return 6.0 * ncols * total_seqs;
}

// Visits every program in a deterministic order: aggregate code, then selection
// column, then condition sequences in prefix order (a program precedes its
// extensions), conditions ordered by (column, op, literal pool index). The
// callback may return false to stop early.
inline void enumerate_programs(const Table& table, const std::vector<std::string>& literal_pool, int max_conds,
                               const std::function<bool(const Query&)>& fn) {
    const int C = table.ncols();
    const int P = static_cast<int>(literal_pool.size());
    std::vector<Condition> conds;

    // Recursive lambda over condition positions.
    std::function<bool(Query&, int)> emit_conds = [&](Query& q, int remaining) -> bool {
        if (!fn(q)) return false;
        if (remaining == 0) return true;
        for (int col = 0; col < C; col++) {
            for (int op = 0; op < 3; op++) {
                for (int lit = 0; lit < P; lit++) {
                    q.conds.push_back({col, static_cast<Comparator>(op), literal_pool[lit]});
                    bool keep = emit_conds(q, remaining - 1);
                    q.conds.pop_back();
                    if (!keep) return false;
                }
            }
        }
        return true;
    };

    for (int agg = 0; agg <= 5; agg++) {
        for (int sel = 0; sel < C; sel++) {
            Query q;
            q.agg = static_cast<AggregateFn>(agg);
            q.sel = sel;
            if (!emit_conds(q, max_conds)) return;
        }
    }
}

}  // namespace egsql
