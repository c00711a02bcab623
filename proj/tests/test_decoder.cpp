#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>

#include "helpers.hpp"

using namespace egsql;
using Catch::Matchers::WithinAbs;

namespace {

Example fig_example() {
    Example ex;
    ex.id = "e1";
    ex.question = {"how", "many", "against", "haugar", "uefa", "1:2"};
    ex.table_id = "t1";
    return ex;
}

ScriptStep step(std::string pos, std::vector<std::pair<std::string, double>> acts) {
    return ScriptStep{std::move(pos), std::move(acts)};
}

// COUNT is near-certain, the condition column slightly favours the right one,
// and the value distribution offers one good span and two fatal ones.
LogitScript fig_script() {
    LogitScript s;
    s.by_example["e1"] = ScriptEntry{{
        step("agg", {{"agg:3", 1.0}}),
        step("sel", {{"col:0", 1.0}}),
        step("cond", {{"col:0", 0.8}, {"col:1", 0.2}}),
        step("op", {{"op:0", 0.6}, {"op:1", 0.4}}),
        step("val", {{"val:3-4", 0.6}, {"val:4-5", 0.3}, {"val:5-6", 0.1}}),
        step("cond", {{"end", 1.0}}),
    }};
    return s;
}

LogitScript delta_script(std::vector<ScriptStep> steps) {
    LogitScript s;
    s.by_example["e1"] = ScriptEntry{std::move(steps)};
    return s;
}

EgConfig tight_config() {
    EgConfig cfg;
    cfg.beam_width = 3;
    cfg.expansion_factor = 1;
    return cfg;
}

}  // namespace

TEST_CASE("guided beam prunes failing candidates and keeps the survivor") {
    Table t = testutil::match_table();
    Example ex = fig_example();
    OracleLogitScorer scorer(fig_script());
    EgConfig cfg = tight_config();
    cfg.collect_trace = true;

    DecodeResult r = eg_beam_decode(scorer, ex, t, cfg);
    REQUIRE(r.program.has_value());
    REQUIRE(to_text(*r.program, t) == "SELECT COUNT opponent WHERE opponent = 'haugar'");
    REQUIRE(r.pruned == PrunedCounts{0, 1, 1});
    REQUIRE_FALSE(r.used_fallback);
    REQUIRE_THAT(r.logprob, WithinAbs(std::log(0.288), 1e-12));

    REQUIRE(r.trace.size() == 6);
    std::vector<std::string> positions;
    for (const auto& tr : r.trace) positions.push_back(tr.position);
    REQUIRE(positions == std::vector<std::string>{"agg", "sel", "cond", "op", "val", "cond"});

    const StepTrace& val_step = r.trace[4];
    REQUIRE(val_step.expanded.size() == 3);  // truncated to k' = 3
    REQUIRE(val_step.pruned.size() == 2);
    REQUIRE(val_step.beam.size() == 1);
    std::string pruned_all = val_step.pruned[0] + " " + val_step.pruned[1];
    REQUIRE(pruned_all.find("[type]") != std::string::npos);
    REQUIRE(pruned_all.find("[empty]") != std::string::npos);

    // The completion leaves the beam at the last step.
    REQUIRE(r.trace[5].expanded.size() == 1);
    REQUIRE(r.trace[5].beam.empty());
}

TEST_CASE("expansion factor widens the pool that reaches the checkpoints") {
    Table t = testutil::match_table();
    Example ex = fig_example();
    OracleLogitScorer scorer(fig_script());

    EgConfig cfg = tight_config();
    cfg.expansion_factor = 2;  // k' = 6 admits three more doomed candidates
    DecodeResult r = eg_beam_decode(scorer, ex, t, cfg);
    REQUIRE(to_text(*r.program, t) == "SELECT COUNT opponent WHERE opponent = 'haugar'");
    REQUIRE(r.pruned == PrunedCounts{0, 2, 3});
    REQUIRE_THAT(r.logprob, WithinAbs(std::log(0.288), 1e-12));
}

TEST_CASE("equal scores break ties on the smaller action encoding") {
    Table t = testutil::match_table();
    Example ex = fig_example();
    LogitScript s = delta_script({
        step("agg", {{"agg:0", 1.0}}),
        step("sel", {{"col:1", 0.5}, {"col:0", 0.5}}),
        step("cond", {{"end", 1.0}}),
    });
    OracleLogitScorer scorer(s);
    EgConfig cfg;
    cfg.beam_width = 2;  // both columns finish; the pool tie-breaks
    DecodeResult r = eg_beam_decode(scorer, ex, t, cfg);
    REQUIRE(r.program->sel == 0);
    REQUIRE_THAT(r.logprob, WithinAbs(std::log(0.5), 1e-12));
}

TEST_CASE("zero-probability actions are never expanded") {
    Table t = testutil::match_table();
    Example ex = fig_example();
    LogitScript s = delta_script({
        step("agg", {{"agg:0", 1.0}}),
        step("sel", {{"col:0", 1.0}, {"col:1", 0.0}}),
        step("cond", {{"end", 1.0}}),
    });
    OracleLogitScorer scorer(s);
    EgConfig cfg;
    cfg.collect_trace = true;
    DecodeResult r = eg_beam_decode(scorer, ex, t, cfg);
    REQUIRE(r.trace[1].expanded.size() == 1);
    REQUIRE(r.program->sel == 0);
}

namespace {

// Deliberately broken scorer: leaks probability mass at the aggregate step.
struct LeakyScorer {
    struct State {
        GrammarCursor cur;
    };
    State init(const Example&, const Table&) const { return {}; }
    std::vector<ScoredAction> step(const State& st) const {
        if (st.cur.pos == GrammarPos::Agg) return {{Action{PickAgg{AggregateFn::None}}, 0.5}};
        return uniform_over(legal_actions(st.cur, 2, 1, GrammarLimits{}));
    }
    State advance(const State& st, const Action& a) const { return {st.cur.advanced(a)}; }
};

}  // namespace

TEST_CASE("contract violations name the offending step") {
    static_assert(ScorerContract<LeakyScorer>);
    Table t = testutil::match_table();
    Example ex = fig_example();
    ex.question = {"x"};
    try {
        eg_beam_decode(LeakyScorer{}, ex, t, EgConfig{});
        FAIL("expected ScorerViolation");
    } catch (const ScorerViolation& v) {
        REQUIRE(std::string(v.what()).find("step 0") != std::string::npos);
        REQUIRE(std::string(v.what()).find("mass") != std::string::npos);
    }
}

TEST_CASE("a dead beam falls back to an unguided rerun") {
    Table t = testutil::match_table();
    Example ex = fig_example();
    ex.question = {"zzz"};
    LogitScript s = delta_script({
        step("agg", {{"agg:0", 1.0}}),
        step("sel", {{"col:0", 1.0}}),
        step("cond", {{"col:0", 1.0}}),
        step("op", {{"op:0", 1.0}}),
        step("val", {{"val:0-1", 1.0}}),
        step("cond", {{"end", 1.0}}),
    });
    OracleLogitScorer scorer(s);

    SECTION("best-erroneous reruns without execution guidance") {
        DecodeResult r = eg_beam_decode(scorer, ex, t, EgConfig{});
        REQUIRE(r.program.has_value());
        REQUIRE(to_text(*r.program, t) == "SELECT opponent WHERE opponent = 'zzz'");
        REQUIRE(r.used_fallback);
        REQUIRE(r.pruned == PrunedCounts{0, 0, 1});
        REQUIRE_THAT(r.logprob, WithinAbs(0.0, 1e-12));
    }
    SECTION("abstain returns nothing") {
        EgConfig cfg;
        cfg.fallback = Fallback::Abstain;
        DecodeResult r = eg_beam_decode(scorer, ex, t, cfg);
        REQUIRE_FALSE(r.program.has_value());
        REQUIRE_FALSE(r.used_fallback);
    }
    SECTION("final-only staging collects complete erroneous candidates instead") {
        EgConfig cfg;
        cfg.stages = StageSet{false, false, true};
        DecodeResult r = eg_beam_decode(scorer, ex, t, cfg);
        REQUIRE(to_text(*r.program, t) == "SELECT opponent WHERE opponent = 'zzz'");
        REQUIRE(r.used_fallback);
        REQUIRE(r.pruned == PrunedCounts{0, 0, 1});
    }
}

TEST_CASE("guidance can override the unguided argmax") {
    Table t = testutil::match_table();
    Example ex = fig_example();
    LogitScript s = fig_script();
    // Flip the comparator preference so the most likely completion type-fails.
    s.by_example["e1"].steps[3] = step("op", {{"op:1", 0.6}, {"op:0", 0.4}});
    OracleLogitScorer scorer(s);

    EgConfig guided = tight_config();
    DecodeResult g = eg_beam_decode(scorer, ex, t, guided);
    REQUIRE(to_text(*g.program, t) == "SELECT COUNT opponent WHERE opponent = 'haugar'");
    REQUIRE(is_ok(execute(*g.program, t)));

    EgConfig unguided = tight_config();
    unguided.stages = StageSet::none();
    DecodeResult u = eg_beam_decode(scorer, ex, t, unguided);
    REQUIRE(to_text(*u.program, t) == "SELECT COUNT opponent WHERE opponent > 'haugar'");
    REQUIRE_FALSE(is_ok(execute(*u.program, t)));
    REQUIRE(u.pruned.total() == 0);
    REQUIRE(u.logprob > g.logprob);
}

TEST_CASE("joint candidate reranking") {
    Table t = testutil::match_table();
    Query bad_type{AggregateFn::Sum, 0, {}};
    Query bad_empty{AggregateFn::None, 0, {{0, Comparator::Eq, "UEFA"}}};
    Query clean{AggregateFn::None, 0, {}};

    SECTION("keeps the most probable clean candidate") {
        DecodeResult r = rerank_joint_candidates({{bad_type, -0.1}, {bad_empty, -0.2}, {clean, -0.3}}, t, EgConfig{});
        REQUIRE(*r.program == clean);
        REQUIRE(r.logprob == -0.3);
        REQUIRE(r.pruned == PrunedCounts{0, 1, 1});
        REQUIRE_FALSE(r.used_fallback);
    }
    SECTION("without the final stage it is plain argmax") {
        EgConfig cfg;
        cfg.stages.final = false;
        DecodeResult r = rerank_joint_candidates({{bad_type, -0.1}, {clean, -0.3}}, t, cfg);
        REQUIRE(*r.program == bad_type);
        REQUIRE(r.pruned.total() == 0);
    }
    SECTION("all failing candidates fall back to the top one") {
        DecodeResult r = rerank_joint_candidates({{bad_empty, -0.2}, {bad_type, -0.1}}, t, EgConfig{});
        REQUIRE(*r.program == bad_type);
        REQUIRE(r.used_fallback);
    }
    SECTION("abstain yields nothing when all candidates fail") {
        EgConfig cfg;
        cfg.fallback = Fallback::Abstain;
        DecodeResult r = rerank_joint_candidates({{bad_type, -0.1}}, t, cfg);
        REQUIRE_FALSE(r.program.has_value());
        REQUIRE(r.pruned == PrunedCounts{0, 1, 0});
    }
    SECTION("score ties order by canonical text") {
        Query sel1{AggregateFn::None, 1, {}};
        DecodeResult r = rerank_joint_candidates({{sel1, -0.5}, {clean, -0.5}}, t, EgConfig{});
        REQUIRE(*r.program == clean);  // "SELECT opponent" < "SELECT result"
    }
    SECTION("no candidates, no program") {
        REQUIRE_FALSE(rerank_joint_candidates({}, t, EgConfig{}).program.has_value());
    }
}

namespace {

// Fine scorers for the scripted sketch model below, keyed by sketch.
struct ScriptedSketchModel {
    std::vector<std::pair<Sketch, double>> ranked;
    std::map<std::string, LogitScript> scripts;
    GrammarLimits grammar;

    std::vector<std::pair<Sketch, double>> sketch_rank(const Example&, const Table&) const { return ranked; }
    OracleLogitScorer fine_scorer(const Sketch& sk) const {
        return OracleLogitScorer(scripts.at(sketch_key(sk)), grammar);
    }
};

ScriptedSketchModel backtracking_model() {
    ScriptedSketchModel m;
    Sketch gt{Comparator::Gt}, none{};
    m.ranked = {{gt, std::log(0.5)}, {none, std::log(0.3)}};
    // The Gt sketch forces an order comparison on a text column: doomed.
    m.scripts[sketch_key(gt)] = delta_script({
        step("agg", {{"agg:0", 1.0}}),
        step("sel", {{"col:0", 1.0}}),
        step("cond", {{"col:0", 1.0}}),
        step("op", {{"op:1", 1.0}}),
        step("val", {{"val:3-4", 1.0}}),
        step("cond", {{"end", 1.0}}),
    });
    m.scripts[sketch_key(none)] = delta_script({
        step("agg", {{"agg:3", 1.0}}),
        step("sel", {{"col:0", 1.0}}),
        step("cond", {{"end", 1.0}}),
    });
    return m;
}

}  // namespace

TEST_CASE("sketch backtracking abandons doomed sketches") {
    Table t = testutil::match_table();
    Example ex = fig_example();
    ScriptedSketchModel m = backtracking_model();

    SECTION("falls through to the first sketch that decodes cleanly") {
        DecodeResult r = decode_with_sketch_backtracking(m, ex, t, EgConfig{});
        REQUIRE(to_text(*r.program, t) == "SELECT COUNT opponent");
        REQUIRE(r.backtrack_count == 1);
        REQUIRE_FALSE(r.used_fallback);
        REQUIRE_THAT(r.logprob, WithinAbs(std::log(0.3), 1e-12));
        REQUIRE(r.pruned.type == 1);  // from the abandoned Gt sketch
    }
    SECTION("disabled backtracking surfaces the erroneous first sketch") {
        EgConfig cfg;
        cfg.sketch_backtracking = false;
        DecodeResult r = decode_with_sketch_backtracking(m, ex, t, cfg);
        REQUIRE(to_text(*r.program, t) == "SELECT opponent WHERE opponent > 'haugar'");
        REQUIRE(r.used_fallback);
        REQUIRE(r.backtrack_count == 1);
        REQUIRE_THAT(r.logprob, WithinAbs(std::log(0.5), 1e-12));
    }
    SECTION("disabled backtracking with abstain returns nothing") {
        EgConfig cfg;
        cfg.sketch_backtracking = false;
        cfg.fallback = Fallback::Abstain;
        DecodeResult r = decode_with_sketch_backtracking(m, ex, t, cfg);
        REQUIRE_FALSE(r.program.has_value());
        REQUIRE(r.backtrack_count == 1);
    }
    SECTION("sketches beyond the condition limit are skipped without counting") {
        ScriptedSketchModel wide = backtracking_model();
        Sketch five(5, Comparator::Eq);
        wide.ranked.insert(wide.ranked.begin(), {five, std::log(0.9)});
        DecodeResult r = decode_with_sketch_backtracking(wide, ex, t, EgConfig{});
        REQUIRE(to_text(*r.program, t) == "SELECT COUNT opponent");
        REQUIRE(r.backtrack_count == 1);  // only the Gt sketch was abandoned
    }
}

TEST_CASE("abstaining decodes never return a failing program") {
    SynthConfig sc;
    sc.n = 40;
    sc.seed = 3;
    SynthCorpus corpus = make_fault_corpus(sc);
    OracleLogitScorer scorer(corpus.script);

    EgConfig guided;
    guided.fallback = Fallback::Abstain;
    EgConfig off = guided;
    off.stages = StageSet::none();

    int answered = 0, unguided_failures = 0;
    for (const Example& ex : corpus.examples) {
        const Table& t = corpus.catalog.at(ex.table_id);
        DecodeResult r = eg_beam_decode(scorer, ex, t, guided);
        if (r.program) {
            REQUIRE(is_ok(execute(*r.program, t)));
            answered++;
        }
        DecodeResult u = eg_beam_decode(scorer, ex, t, off);
        if (u.program && !is_ok(execute(*u.program, t))) unguided_failures++;
    }
    REQUIRE(answered == 40);  // the synthetic scripts always admit a clean program
    REQUIRE(unguided_failures > 0);
}

// ---------------------------------------------------------------------------
// With an exhaustive width the guided beam must agree with the enumeration
// oracle program-for-program.

namespace {

LogitScript random_full_script(const Example& ex, const Table& t, const GrammarLimits& lim, std::mt19937& rng) {
    auto dist_for = [&](const GrammarCursor& cur) {
        std::vector<Action> legal = legal_actions(cur, t.ncols(), static_cast<int>(ex.question.size()), lim);
        std::uniform_real_distribution<double> weight(0.1, 1.0);
        std::vector<std::pair<std::string, double>> acts;
        double sum = 0;
        for (const auto& a : legal) {
            double w = weight(rng);
            acts.emplace_back(encode_action(a), w);
            sum += w;
        }
        for (auto& [enc, p] : acts) p /= sum;
        return acts;
    };
    // Positions by step for max_conds = 1: agg sel cond op val cond.
    std::vector<GrammarCursor> walk = {{GrammarPos::Agg, 0},    {GrammarPos::Sel, 0}, {GrammarPos::CondOrEnd, 0},
                                       {GrammarPos::CondOp, 0}, {GrammarPos::CondVal, 0},
                                       {GrammarPos::CondOrEnd, 1}};
    std::vector<ScriptStep> steps;
    for (const GrammarCursor& at : walk) steps.push_back(ScriptStep{position_tag(at.pos), dist_for(at)});
    LogitScript s;
    s.by_example[ex.id] = ScriptEntry{std::move(steps)};
    return s;
}

}  // namespace

TEST_CASE("exhaustive beam matches the enumeration oracle") {
    std::mt19937 rng(424242);
    static const std::vector<std::string> words = {"ann", "bob", "3", "x"};

    for (int c = 0; c < 6; c++) {
        Table t;
        t.id = "t";
        t.columns = {{"c0", ColumnType::Text}, {"c1", ColumnType::Real}};
        for (int r = 0; r < 3; r++)
            t.rows.push_back({Value{words[rng() % words.size()]}, Value{static_cast<double>(1 + rng() % 3)}});

        Example ex;
        ex.id = "e" + std::to_string(c);
        ex.table_id = "t";
        for (int i = 0; i < 3; i++) ex.question.push_back(words[rng() % words.size()]);

        GrammarLimits lim;
        lim.max_conds = 1;
        OracleLogitScorer scorer(random_full_script(ex, t, lim, rng), lim);

        EgConfig cfg;
        cfg.beam_width = 1000;
        cfg.expansion_factor = 2;
        cfg.fallback = Fallback::Abstain;
        cfg.limits = lim;

        DecodeResult beam = eg_beam_decode(scorer, ex, t, cfg);
        OracleResult want = oracle_argmax(scorer, ex, t, cfg.exec);

        INFO("case " << c << " question " << join(ex.question, " "));
        REQUIRE(beam.program.has_value() == want.program.has_value());
        if (want.program) {
            REQUIRE(canonical_equal(*beam.program, *want.program, t));
            REQUIRE_THAT(beam.logprob, WithinAbs(want.logprob, 1e-9));
        }
    }
}
