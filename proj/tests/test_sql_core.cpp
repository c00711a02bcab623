#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace egsql;

namespace {

Table quirky_table() {
    using V = Value;
    Table t;
    t.id = "q";
    t.columns = {{"home team", ColumnType::Text},
                 {"count", ColumnType::Text},
                 {"score]s", ColumnType::Real},
                 {"plain", ColumnType::Text}};
    t.rows = {{V{std::string("O'Brien")}, V{std::string("x")}, V{2.0}, V{std::string("p")}}};
    return t;
}

}  // namespace

TEST_CASE("canonical text form") {
    Table t = testutil::match_table();
    SECTION("bare select") {
        REQUIRE(to_text(Query{AggregateFn::None, 0, {}}, t) == "SELECT opponent");
    }
    SECTION("aggregate and one condition") {
        Query q{AggregateFn::Count, 0, {{0, Comparator::Eq, "Haugar"}}};
        REQUIRE(to_text(q, t) == "SELECT COUNT opponent WHERE opponent = 'Haugar'");
    }
    SECTION("two conditions join with AND") {
        Query q{AggregateFn::Max, 1, {{0, Comparator::Eq, "Start"}, {1, Comparator::Gt, "1:0"}}};
        REQUIRE(to_text(q, t) == "SELECT MAX result WHERE opponent = 'Start' AND result > '1:0'");
    }
}

TEST_CASE("column and literal quoting") {
    Table t = quirky_table();
    SECTION("space in a column name brackets it") {
        REQUIRE(to_text(Query{AggregateFn::None, 0, {}}, t) == "SELECT [home team]");
    }
    SECTION("keyword collision brackets the name") {
        REQUIRE(to_text(Query{AggregateFn::None, 1, {}}, t) == "SELECT [count]");
    }
    SECTION("bracket in a name is doubled") {
        REQUIRE(to_text(Query{AggregateFn::None, 2, {}}, t) == "SELECT [score]]s]");
    }
    SECTION("quote in a literal is doubled") {
        Query q{AggregateFn::None, 3, {{0, Comparator::Eq, "O'Brien"}}};
        REQUIRE(to_text(q, t) == "SELECT plain WHERE [home team] = 'O''Brien'");
    }
}

TEST_CASE("parse understands the canonical dialect") {
    Table t = testutil::match_table();
    SECTION("aggregate, column, conditions") {
        Query q = parse("SELECT COUNT opponent WHERE opponent = 'Haugar'", t);
        REQUIRE(q.agg == AggregateFn::Count);
        REQUIRE(q.sel == 0);
        REQUIRE(q.conds.size() == 1);
        REQUIRE(q.conds[0].value == "Haugar");
        REQUIRE(q.conds[0].op == Comparator::Eq);
    }
    SECTION("case-insensitive keywords and column lookup") {
        Query q = parse("select min RESULT where Opponent = 'start'", t);
        REQUIRE(q.agg == AggregateFn::Min);
        REQUIRE(q.sel == 1);
        REQUIRE(q.conds[0].value == "start");
    }
    SECTION("aggregate keyword as the last token is a column") {
        Table t2 = quirky_table();
        Query q = parse("SELECT count", t2);
        REQUIRE(q.agg == AggregateFn::None);
        REQUIRE(q.sel == 1);
    }
}

TEST_CASE("parse failures carry positions") {
    Table t = testutil::match_table();
    REQUIRE_THROWS_AS(parse("", t), SqlParseError);
    REQUIRE_THROWS_AS(parse("SELECT FROM WHERE", t), SqlParseError);
    REQUIRE_THROWS_AS(parse("SELECT opponent WHERE opponent =", t), SqlParseError);
    REQUIRE_THROWS_AS(parse("SELECT opponent WHERE opponent = 'Haugar", t), SqlParseError);
    REQUIRE_THROWS_AS(parse("SELECT nosuch", t), SqlParseError);
    REQUIRE_THROWS_AS(parse("SELECT opponent trailing", t), SqlParseError);
    REQUIRE_THROWS_AS(parse("SELECT opponent WHERE opponent ? 'x'", t), SqlParseError);
    REQUIRE_THROWS_AS(parse("SELECT opponent WHERE opponent = Haugar", t), SqlParseError);
    try {
        parse("SELECT opponent WHERE nosuch = 'x'", t);
        FAIL("expected SqlParseError");
    } catch (const SqlParseError& e) {
        REQUIRE(e.position == 22);
    }
}

TEST_CASE("every enumerated program round-trips through text") {
    Table t = quirky_table();
    std::vector<std::string> pool = {"O'Brien", "2", "odd ]name'"};
    int count = 0;
    enumerate_programs(t, pool, 1, [&](const Query& q) {
        Query back = parse(to_text(q, t), t);
        REQUIRE(canonical_equal(q, back, t));
        count++;
        return true;
    });
    REQUIRE(count == static_cast<int>(program_count(4, 3, 1)));
}

TEST_CASE("canonical equality normalizes order and number forms") {
    Table t = testutil::score_table();  // player text, points real
    Query a{AggregateFn::None, 0, {{0, Comparator::Eq, "Ann"}, {1, Comparator::Gt, "2"}}};
    Query b{AggregateFn::None, 0, {{1, Comparator::Gt, "2.0"}, {0, Comparator::Eq, "ann"}}};
    REQUIRE(canonical_equal(a, b, t));

    SECTION("agg, sel and arity must match") {
        REQUIRE_FALSE(canonical_equal(a, Query{AggregateFn::Count, 0, a.conds}, t));
        REQUIRE_FALSE(canonical_equal(a, Query{AggregateFn::None, 1, a.conds}, t));
        REQUIRE_FALSE(canonical_equal(a, Query{AggregateFn::None, 0, {a.conds[0]}}, t));
    }
    SECTION("text values do not normalize numerically") {
        Query x{AggregateFn::None, 0, {{0, Comparator::Eq, "2"}}};
        Query y{AggregateFn::None, 0, {{0, Comparator::Eq, "2.0"}}};
        REQUIRE_FALSE(canonical_equal(x, y, t));
    }
    SECTION("duplicate conditions count as a multiset") {
        Condition c1{0, Comparator::Eq, "Ann"}, c2{0, Comparator::Eq, "bob"};
        Query x{AggregateFn::None, 0, {c1, c1, c2}};
        Query y{AggregateFn::None, 0, {c1, c2, c2}};
        REQUIRE_FALSE(canonical_equal(x, y, t));
        Query z{AggregateFn::None, 0, {c2, c1, c1}};
        REQUIRE(canonical_equal(x, z, t));
    }
}

TEST_CASE("program counts match the closed form") {
    // 6 aggregates x C columns x sum over condition sequences.
    REQUIRE(program_count(1, 0, 0) == 6.0);
    REQUIRE(program_count(1, 0, 4) == 6.0);  // no literals, no conditions possible
    REQUIRE(program_count(2, 1, 1) == 84.0);
    REQUIRE(program_count(2, 2, 2) == 1884.0);

    Table t;
    t.id = "c";
    t.columns = {{"a", ColumnType::Text}, {"b", ColumnType::Text}};
    int n = 0;
    enumerate_programs(t, {"x", "y"}, 2, [&](const Query&) {
        n++;
        return true;
    });
    REQUIRE(n == 1884);
}

TEST_CASE("enumeration order is deterministic and bounded") {
    Table t = testutil::match_table();
    std::vector<std::string> first_three;
    enumerate_programs(t, {"v"}, 1, [&](const Query& q) {
        first_three.push_back(to_text(q, t));
        return first_three.size() < 3;
    });
    REQUIRE(first_three == std::vector<std::string>{"SELECT opponent", "SELECT opponent WHERE opponent = 'v'",
                                                    "SELECT opponent WHERE opponent > 'v'"});
}
