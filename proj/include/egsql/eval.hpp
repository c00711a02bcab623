#pragma once

#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "egsql/decoder.hpp"
#include "egsql/executor.hpp"
#include "egsql/sql.hpp"
#include "egsql/table.hpp"

namespace egsql {

enum class Outcome { Correct, Wrong, ExecError, Abstain };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Correct: return "correct";
        case Outcome::Wrong: return "wrong";
        case Outcome::ExecError: return "exec_error";
        case Outcome::Abstain: return "abstain";
    }
    return "?";
}

struct ExampleReport {
    std::string id;
    std::string gold_text;
    std::string predicted_text;  // empty on abstain
    Outcome outcome = Outcome::Abstain;
    bool syn_correct = false;
    bool gold_exec_ok = true;
    double logprob = 0;
    bool used_fallback = false;
    int backtrack_count = 0;
    PrunedCounts pruned;
};

// Aggregate metrics over one decoding configuration. Every rate uses the full
// example count as denominator; the four outcome rates sum to one.
struct Report {
    int n = 0;
    double acc_syn = 0;
    double acc_ex = 0;
    double exec_error_rate = 0;
    double abstain_rate = 0;
    double wrong_rate = 0;
    int gold_exec_failures = 0;
    int fallback_count = 0;
    int backtrack_total = 0;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::vector<ExampleReport> examples;
};

using DecodeFn = std::function<DecodeResult(const Example&, const Table&)>;

// Decodes every example and scores against gold. Synthesis accuracy is
// canonical equality; execution accuracy compares result multisets.
inline Report evaluate(const DecodeFn& decode, const std::vector<Example>& examples, const TableCatalog& catalog,
                       const ExecConfig& exec = {}, nlohmann::ordered_json config_echo = {}) {
    Report rep;
    rep.config = std::move(config_echo);
    int correct = 0, syn = 0, exec_err = 0, abstain = 0, wrong = 0;

    for (const auto& ex : examples) {
        if (!ex.gold) throw InvalidGoldError("example " + ex.id + " has no gold query to evaluate against");
        const Table& table = catalog.at(ex.table_id);

        ExampleReport er;
        er.id = ex.id;
        er.gold_text = to_text(*ex.gold, table);
        ExecOutcome gold_out = execute(*ex.gold, table, exec);
        er.gold_exec_ok = is_ok(gold_out);
        if (!er.gold_exec_ok) rep.gold_exec_failures++;

        DecodeResult res = decode(ex, table);
        er.logprob = res.logprob;
        er.used_fallback = res.used_fallback;
        er.backtrack_count = res.backtrack_count;
        er.pruned = res.pruned;
        if (res.used_fallback) rep.fallback_count++;
        rep.backtrack_total += res.backtrack_count;

        if (!res.program) {
            er.outcome = Outcome::Abstain;
            abstain++;
        } else {
            er.predicted_text = to_text(*res.program, table);
            er.syn_correct = canonical_equal(*res.program, *ex.gold, table);
            if (er.syn_correct) syn++;
            ExecOutcome pred_out = execute(*res.program, table, exec);
            if (!is_ok(pred_out)) {
                er.outcome = Outcome::ExecError;
                exec_err++;
            } else if (er.gold_exec_ok &&
                       results_equal(std::get<ResultSet>(pred_out), std::get<ResultSet>(gold_out))) {
                er.outcome = Outcome::Correct;
                correct++;
            } else {
                er.outcome = Outcome::Wrong;
                wrong++;
            }
        }
        rep.examples.push_back(std::move(er));
    }

    rep.n = static_cast<int>(examples.size());
    double n = std::max(1, rep.n);
    rep.acc_syn = syn / n;
    rep.acc_ex = correct / n;
    rep.exec_error_rate = exec_err / n;
    rep.abstain_rate = abstain / n;
    rep.wrong_rate = wrong / n;
    return rep;
}

inline nlohmann::ordered_json report_to_json(const Report& rep) {
    nlohmann::ordered_json j;
    j["config"] = rep.config;
    nlohmann::ordered_json m;
    m["n"] = rep.n;
    m["acc_syn"] = rep.acc_syn;
    m["acc_ex"] = rep.acc_ex;
    m["exec_error_rate"] = rep.exec_error_rate;
    m["abstain_rate"] = rep.abstain_rate;
    m["wrong_rate"] = rep.wrong_rate;
    m["gold_exec_failures"] = rep.gold_exec_failures;
    m["fallback_count"] = rep.fallback_count;
    m["backtrack_total"] = rep.backtrack_total;
    j["metrics"] = m;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& er : rep.examples) {
        nlohmann::ordered_json je;
        je["id"] = er.id;
        je["gold"] = er.gold_text;
        if (er.predicted_text.empty())
            je["predicted"] = nullptr;
        else
            je["predicted"] = er.predicted_text;
        je["outcome"] = to_string(er.outcome);
        je["syn_correct"] = er.syn_correct;
        je["gold_exec_ok"] = er.gold_exec_ok;
        je["logprob"] = er.logprob;
        je["used_fallback"] = er.used_fallback;
        je["backtrack_count"] = er.backtrack_count;
        nlohmann::ordered_json jp;
        jp["parse"] = er.pruned.parse;
        jp["type"] = er.pruned.type;
        jp["empty"] = er.pruned.empty;
        je["pruned"] = jp;
        arr.push_back(std::move(je));
    }
    j["examples"] = arr;
    return j;
}

// The five decoding variants compared in ablations, derived from one base
// configuration. The decode callback owns scorer specifics.
inline std::vector<std::pair<std::string, EgConfig>> ablation_configs(const EgConfig& base) {
    std::vector<std::pair<std::string, EgConfig>> out;
    out.emplace_back("Full EG", base);

    EgConfig no_agg = base;
    no_agg.stages.selhead = false;
    out.emplace_back("No Aggregation execution", no_agg);

    EgConfig no_cond = base;
    no_cond.stages.cond = false;
    out.emplace_back("No Condition execution", no_cond);

    EgConfig no_backtrack = base;
    no_backtrack.sketch_backtracking = false;
    out.emplace_back("No Sketch backtracking", no_backtrack);

    EgConfig off = base;
    off.stages = StageSet::none();
    off.sketch_backtracking = false;
    out.emplace_back("No EG", off);
    return out;
}

inline std::vector<std::pair<std::string, Report>> run_ablations(
    const std::function<DecodeResult(const Example&, const Table&, const EgConfig&)>& decode,
    const std::vector<Example>& examples, const TableCatalog& catalog, const EgConfig& base,
    nlohmann::ordered_json base_echo = {}) {
    std::vector<std::pair<std::string, Report>> out;
    for (const auto& [label, cfg] : ablation_configs(base)) {
        nlohmann::ordered_json echo = base_echo;
        echo["ablation"] = label;
        echo["stages"] = nlohmann::ordered_json::array();
        if (cfg.stages.selhead) echo["stages"].push_back("selhead");
        if (cfg.stages.cond) echo["stages"].push_back("cond");
        if (cfg.stages.final) echo["stages"].push_back("final");
        echo["sketch_backtracking"] = cfg.sketch_backtracking;
        Report rep = evaluate([&, c = cfg](const Example& ex, const Table& t) { return decode(ex, t, c); },
                              examples, catalog, cfg.exec, echo);
        out.emplace_back(label, std::move(rep));
    }
    return out;
}

// Fixed-width text table, one row per labeled report.
inline std::string summary_table(const std::vector<std::pair<std::string, Report>>& rows) {
    std::ostringstream os;
    os << std::left << std::setw(28) << "config" << std::right << std::setw(7) << "n" << std::setw(10) << "acc_syn"
       << std::setw(10) << "acc_ex" << std::setw(10) << "exec_err" << std::setw(10) << "abstain" << "\n";
    os << std::string(75, '-') << "\n";
    os << std::fixed << std::setprecision(4);
    for (const auto& [label, rep] : rows) {
        os << std::left << std::setw(28) << label << std::right << std::setw(7) << rep.n << std::setw(10)
           << rep.acc_syn << std::setw(10) << rep.acc_ex << std::setw(10) << rep.exec_error_rate << std::setw(10)
           << rep.abstain_rate << "\n";
    }
    return os.str();
}

}  // namespace egsql
