#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

#include "egsql/egsql.hpp"

namespace testutil {

// Two text columns, three rows; the running match-results example.
inline egsql::Table match_table() {
    using egsql::Value;
    egsql::Table t;
    t.id = "t1";
    t.columns = {{"opponent", egsql::ColumnType::Text}, {"result", egsql::ColumnType::Text}};
    t.rows = {{Value{std::string("Haugar")}, Value{std::string("1:2")}},
              {Value{std::string("Start")}, Value{std::string("2:0")}},
              {Value{std::string("Brann")}, Value{std::string("0:3")}}};
    return t;
}

// Mixed-type table for executor tests.
inline egsql::Table score_table() {
    using egsql::Value;
    egsql::Table t;
    t.id = "t2";
    t.columns = {{"player", egsql::ColumnType::Text}, {"points", egsql::ColumnType::Real}};
    t.rows = {{Value{std::string("Ann")}, Value{4.0}},
              {Value{std::string("bob")}, Value{2.0}},
              {Value{std::string("Cid")}, Value{7.0}},
              {Value{std::string("ann")}, Value{4.0}}};
    return t;
}

inline std::filesystem::path fresh_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("egsql_test_" + tag + "_" + std::to_string(counter++) + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::filesystem::path write_file(const std::filesystem::path& dir, const std::string& name,
                                        const std::string& content) {
    auto path = dir / name;
    std::ofstream out(path);
    out << content;
    return path;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testutil
