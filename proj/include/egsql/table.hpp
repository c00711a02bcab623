#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "egsql/ast.hpp"
#include "egsql/errors.hpp"
#include "egsql/text.hpp"

namespace egsql {

enum class ColumnType { Text, Real };

inline const char* to_string(ColumnType t) { return t == ColumnType::Text ? "text" : "real"; }

inline std::optional<ColumnType> column_type_from(std::string_view s) {
    std::string f = fold(s);
    if (f == "text") return ColumnType::Text;
    if (f == "real") return ColumnType::Real;
    return std::nullopt;
}

struct ColumnSchema {
    std::string name;
    ColumnType type = ColumnType::Text;
};

// Real cells are stored parsed; Text cells keep their original casing.
using Value = std::variant<double, std::string>;

struct Table {
    std::string id;
    std::vector<ColumnSchema> columns;
    std::vector<std::vector<Value>> rows;

    int ncols() const { return static_cast<int>(columns.size()); }
    int nrows() const { return static_cast<int>(rows.size()); }

    // Case-insensitive, trimmed name lookup. -1 when absent.
    int column_index(std::string_view name) const {
        std::string f = fold(name);
        for (size_t i = 0; i < columns.size(); i++)
            if (fold(columns[i].name) == f) return static_cast<int>(i);
        return -1;
    }
};

struct TableCatalog {
    std::map<std::string, Table> tables;  // ordered for deterministic iteration

    size_t size() const { return tables.size(); }

    const Table& at(const std::string& id) const {
        auto it = tables.find(id);
        if (it == tables.end()) throw UnknownTableError("unknown table id: " + id);
        return it->second;
    }

    bool contains(const std::string& id) const { return tables.count(id) > 0; }
};

struct Example {
    std::string id;  // from the record's "id" key, else the 0-based line ordinal
    std::vector<std::string> question;
    std::string table_id;
    std::optional<Query> gold;  // absent for inference-only records
};

namespace detail {

inline nlohmann::json parse_json_line(const std::string& line, int line_no) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw FormatError("invalid JSON", line_no);
    if (!j.is_object()) throw FormatError("record is not a JSON object", line_no);
    return j;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

// Calls fn(line, line_no) for every non-blank line.
template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in = open_input(path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (trim(line).empty()) continue;
        fn(line, line_no);
    }
}

}  // namespace detail

inline Table table_from_json(const nlohmann::json& j, int line_no = 0) {
    if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty())
        throw FormatError("table record needs a non-empty string \"id\"", line_no);
    if (!j.contains("header") || !j["header"].is_array() || j["header"].empty())
        throw FormatError("table record needs a non-empty \"header\" array", line_no);
    if (!j.contains("types") || !j["types"].is_array())
        throw FormatError("table record needs a \"types\" array", line_no);

    Table t;
    t.id = j["id"].get<std::string>();
    const auto& header = j["header"];
    const auto& types = j["types"];
    if (header.size() != types.size())
        throw FormatError("table " + t.id + ": header and types lengths differ", line_no);

    for (size_t c = 0; c < header.size(); c++) {
        if (!header[c].is_string() || trim(header[c].get<std::string>()).empty())
            throw FormatError("table " + t.id + ": column " + std::to_string(c) + " name must be a non-empty string",
                              line_no);
        if (!types[c].is_string())
            throw FormatError("table " + t.id + ": column " + std::to_string(c) + " type must be a string", line_no);
        auto ct = column_type_from(types[c].get<std::string>());
        if (!ct)
            throw FormatError("table " + t.id + ": column " + std::to_string(c) + " has unknown type '" +
                                  types[c].get<std::string>() + "'",
                              line_no);
        t.columns.push_back({header[c].get<std::string>(), *ct});
    }
    for (size_t a = 0; a < t.columns.size(); a++)
        for (size_t b = a + 1; b < t.columns.size(); b++)
            if (fold(t.columns[a].name) == fold(t.columns[b].name))
                throw FormatError("table " + t.id + ": duplicate column name '" + t.columns[b].name + "'", line_no);

    const auto rows = j.value("rows", nlohmann::json::array());
    if (!rows.is_array()) throw FormatError("table " + t.id + ": \"rows\" must be an array", line_no);
    for (size_t r = 0; r < rows.size(); r++) {
        const auto& row = rows[r];
        if (!row.is_array() || row.size() != t.columns.size())
            throw FormatError("table " + t.id + ": row " + std::to_string(r) + " arity mismatch", line_no);
        std::vector<Value> cells;
        for (size_t c = 0; c < row.size(); c++) {
            const auto& cell = row[c];
            const ColumnSchema& col = t.columns[c];
            if (col.type == ColumnType::Real) {
                std::optional<double> v;
                if (cell.is_number())
                    v = cell.get<double>();
                else if (cell.is_string())
                    v = parse_real(cell.get<std::string>());
                if (!v)
                    throw FormatError("table " + t.id + ": row " + std::to_string(r) + ", column '" + col.name +
                                          "': cell is not a finite real number",
                                      line_no);
                cells.emplace_back(*v);
            } else {
                if (!cell.is_string())
                    throw FormatError("table " + t.id + ": row " + std::to_string(r) + ", column '" + col.name +
                                          "': text cell must be a string",
                                      line_no);
                cells.emplace_back(cell.get<std::string>());
            }
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

inline nlohmann::ordered_json table_to_json(const Table& t) {
    nlohmann::ordered_json j;
    j["id"] = t.id;
    auto header = nlohmann::ordered_json::array();
    auto types = nlohmann::ordered_json::array();
    for (const auto& c : t.columns) {
        header.push_back(c.name);
        types.push_back(to_string(c.type));
    }
    j["header"] = header;
    j["types"] = types;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        auto jr = nlohmann::ordered_json::array();
        for (const auto& cell : row) {
            if (std::holds_alternative<double>(cell))
                jr.push_back(std::get<double>(cell));
            else
                jr.push_back(std::get<std::string>(cell));
        }
        rows.push_back(std::move(jr));
    }
    j["rows"] = rows;
    return j;
}

inline TableCatalog load_tables(const std::filesystem::path& path) {
    TableCatalog cat;
    detail::for_each_line(path, [&](const std::string& line, int line_no) {
        Table t = table_from_json(detail::parse_json_line(line, line_no), line_no);
        if (cat.contains(t.id)) throw FormatError("duplicate table id: " + t.id, line_no);
        cat.tables.emplace(t.id, std::move(t));
    });
    return cat;
}

inline void save_tables(const TableCatalog& cat, const std::filesystem::path& path) {
    std::ofstream out = detail::open_output(path);
    for (const auto& [id, t] : cat.tables) out << table_to_json(t).dump() << "\n";
}

inline Query query_from_json(const nlohmann::json& j, const Table& table, int line_no = 0) {
    if (!j.is_object() || !j.contains("agg") || !j.contains("sel") || !j.contains("conds"))
        throw FormatError("sql object needs \"agg\", \"sel\" and \"conds\"", line_no);
    if (!j["agg"].is_number_integer() || !j["sel"].is_number_integer() || !j["conds"].is_array())
        throw FormatError("sql object has wrong field types", line_no);

    Query q;
    q.agg = aggregate_from_code(j["agg"].get<int>(), line_no);
    q.sel = j["sel"].get<int>();
    if (q.sel < 0 || q.sel >= table.ncols())
        throw InvalidGoldError("gold sel column " + std::to_string(q.sel) + " out of range for table " + table.id);
    for (const auto& jc : j["conds"]) {
        if (!jc.is_array() || jc.size() != 3 || !jc[0].is_number_integer() || !jc[1].is_number_integer())
            throw FormatError("condition must be a [column, op, value] triple", line_no);
        Condition c;
        c.column = jc[0].get<int>();
        if (c.column < 0 || c.column >= table.ncols())
            throw InvalidGoldError("gold condition column " + std::to_string(c.column) + " out of range for table " +
                                   table.id);
        c.op = comparator_from_code(jc[1].get<int>(), line_no);
        if (jc[2].is_string())
            c.value = jc[2].get<std::string>();
        else if (jc[2].is_number())
            c.value = jc[2].dump();
        else
            throw FormatError("condition value must be a string or number", line_no);
        q.conds.push_back(std::move(c));
    }
    return q;
}

inline nlohmann::ordered_json query_to_json(const Query& q) {
    nlohmann::ordered_json j;
    j["agg"] = static_cast<int>(q.agg);
    j["sel"] = q.sel;
    auto conds = nlohmann::ordered_json::array();
    for (const auto& c : q.conds)
        conds.push_back(nlohmann::ordered_json::array({c.column, static_cast<int>(c.op), c.value}));
    j["conds"] = conds;
    return j;
}

inline std::vector<Example> load_examples(const std::filesystem::path& path, const TableCatalog& catalog) {
    std::vector<Example> out;
    detail::for_each_line(path, [&](const std::string& line, int line_no) {
        nlohmann::json j = detail::parse_json_line(line, line_no);
        Example ex;
        ex.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                        : std::to_string(out.size());
        if (!j.contains("question") || !j["question"].is_array() || j["question"].empty())
            throw FormatError("example needs a non-empty \"question\" token array", line_no);
        for (const auto& tok : j["question"]) {
            if (!tok.is_string() || tok.get<std::string>().empty())
                throw FormatError("question tokens must be non-empty strings", line_no);
            ex.question.push_back(tok.get<std::string>());
        }
        if (!j.contains("table_id") || !j["table_id"].is_string())
            throw FormatError("example needs a string \"table_id\"", line_no);
        ex.table_id = j["table_id"].get<std::string>();
        const Table& table = catalog.at(ex.table_id);  // UnknownTableError when absent
        if (j.contains("sql") && !j["sql"].is_null()) ex.gold = query_from_json(j["sql"], table, line_no);
        out.push_back(std::move(ex));
    });
    return out;
}

inline void save_examples(const std::vector<Example>& examples, const std::filesystem::path& path) {
    std::ofstream out = detail::open_output(path);
    for (const auto& ex : examples) {
        nlohmann::ordered_json j;
        j["id"] = ex.id;
        j["question"] = ex.question;
        j["table_id"] = ex.table_id;
        if (ex.gold)
            j["sql"] = query_to_json(*ex.gold);
        else
            j["sql"] = nullptr;
        out << j.dump() << "\n";
    }
}

}  // namespace egsql
