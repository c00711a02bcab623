// Command-line front end: validate / decode / eval / ablate / train / oracle / synth.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "egsql/egsql.hpp"

namespace {

using namespace egsql;

struct CommonOpts {
    std::string tables;
    std::string examples;
    std::string model;
    std::string out;
    std::string scorer = "oracle";
    int beam_width = 5;
    std::string eg = "on";
    std::string stages = "selhead,cond,final";
    std::string fallback = "best-erroneous";
    std::string empty_output_check = "on";
    std::string count_empty_is_empty = "on";
    int expansion_factor = 2;
    int max_conds = 4;
    int span_cap = 8;
    unsigned long long seed = 0;
};

StageSet parse_stages(const std::string& csv) {
    StageSet s = StageSet::none();
    std::string text = fold(csv);
    size_t start = 0;
    while (start <= text.size()) {
        size_t comma = text.find(',', start);
        size_t len = comma == std::string::npos ? std::string::npos : comma - start;
        std::string item(trim(std::string_view(text).substr(start, len)));
        if (!item.empty()) {
            if (item == "selhead") s.selhead = true;
            else if (item == "cond") s.cond = true;
            else if (item == "final") s.final = true;
            else throw CLI::ValidationError("--eg-stages", "unknown stage '" + item + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return s;
}

bool parse_switch(const std::string& v, const char* flag) {
    std::string f = fold(v);
    if (f == "on" || f == "true" || f == "1") return true;
    if (f == "off" || f == "false" || f == "0") return false;
    throw CLI::ValidationError(flag, "expected on or off, got '" + v + "'");
}

EgConfig make_config(const CommonOpts& o) {
    EgConfig cfg;
    cfg.beam_width = o.beam_width;
    cfg.stages = parse_switch(o.eg, "--eg") ? parse_stages(o.stages) : StageSet::none();
    cfg.fallback = fold(o.fallback) == "abstain" ? Fallback::Abstain : Fallback::BestErroneous;
    if (fold(o.fallback) != "abstain" && fold(o.fallback) != "best-erroneous")
        throw CLI::ValidationError("--fallback", "expected best-erroneous or abstain");
    cfg.exec.empty_output_check = parse_switch(o.empty_output_check, "--empty-output-check");
    cfg.exec.count_empty_is_empty = parse_switch(o.count_empty_is_empty, "--count-empty-is-empty");
    cfg.expansion_factor = o.expansion_factor;
    cfg.limits.max_conds = o.max_conds;
    cfg.limits.span_cap = o.span_cap;
    cfg.sketch_backtracking = true;
    return cfg;
}

nlohmann::ordered_json config_echo(const std::string& command, const CommonOpts& o, const EgConfig& cfg) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["tables"] = o.tables;
    j["examples"] = o.examples;
    j["scorer"] = o.scorer;
    j["model"] = o.model;
    j["beam_width"] = cfg.beam_width;
    j["eg"] = cfg.stages.any();
    auto stages = nlohmann::ordered_json::array();
    if (cfg.stages.selhead) stages.push_back("selhead");
    if (cfg.stages.cond) stages.push_back("cond");
    if (cfg.stages.final) stages.push_back("final");
    j["stages"] = stages;
    j["fallback"] = cfg.fallback == Fallback::Abstain ? "abstain" : "best-erroneous";
    j["empty_output_check"] = cfg.exec.empty_output_check;
    j["count_empty_is_empty"] = cfg.exec.count_empty_is_empty;
    j["expansion_factor"] = cfg.expansion_factor;
    j["max_conds"] = cfg.limits.max_conds;
    j["span_cap"] = cfg.limits.span_cap;
    j["seed"] = o.seed;
    return j;
}

// Everything a decoding command needs, with the scorer bound.
struct Runtime {
    TableCatalog catalog;
    std::vector<Example> examples;
    EgConfig cfg;
    std::function<DecodeResult(const Example&, const Table&, const EgConfig&)> decode;
    // Owners for whatever the decode closure points at.
    std::shared_ptr<void> scorer_holder;
};

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw FormatError("invalid JSON in " + path);
    return j;
}

Runtime make_runtime(const CommonOpts& o) {
    Runtime rt;
    rt.catalog = load_tables(o.tables);
    rt.examples = load_examples(o.examples, rt.catalog);
    rt.cfg = make_config(o);

    std::string kind = fold(o.scorer);
    if (kind == "oracle") {
        if (o.model.empty()) throw IoError("--scorer oracle needs --model pointing at a logit script");
        auto scorer = std::make_shared<OracleLogitScorer>(load_logit_script(o.model), rt.cfg.limits);
        rt.scorer_holder = scorer;
        rt.decode = [scorer](const Example& ex, const Table& t, const EgConfig& cfg) {
            return eg_beam_decode(*scorer, ex, t, cfg);
        };
    } else if (kind == "template") {
        if (o.model.empty()) throw IoError("--scorer template needs --model");
        auto model = std::make_shared<TemplateScorerModel>(template_model_from_json(load_json_file(o.model)));
        rt.scorer_holder = model;
        rt.decode = [model](const Example& ex, const Table& t, const EgConfig& cfg) {
            auto candidates = template_candidates(*model, ex, t, cfg.beam_width, cfg.limits.span_cap);
            return rerank_joint_candidates(std::move(candidates), t, cfg);
        };
    } else if (kind == "sketch") {
        if (o.model.empty()) throw IoError("--scorer sketch needs --model");
        auto model = std::make_shared<SketchScorerModel>(sketch_model_from_json(load_json_file(o.model)));
        rt.scorer_holder = model;
        rt.decode = [model](const Example& ex, const Table& t, const EgConfig& cfg) {
            return decode_with_sketch_backtracking(*model, ex, t, cfg);
        };
    } else {
        throw CLI::ValidationError("--scorer", "expected oracle, template or sketch");
    }
    return rt;
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw IoError("cannot write " + path);
    return file;
}

void add_common(CLI::App* cmd, CommonOpts& o, bool with_decode_flags) {
    cmd->add_option("--tables", o.tables, "tables JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--examples", o.examples, "examples JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--model", o.model, "scorer model JSON, or logit script JSONL for --scorer oracle")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output path (stdout when omitted)");
    if (!with_decode_flags) return;
    cmd->add_option("--scorer", o.scorer, "oracle | template | sketch");
    cmd->add_option("--beam-width", o.beam_width, "beam width k")->check(CLI::PositiveNumber);
    cmd->add_option("--eg", o.eg, "execution guidance on | off");
    cmd->add_option("--eg-stages", o.stages, "comma list of selhead,cond,final");
    cmd->add_option("--fallback", o.fallback, "best-erroneous | abstain");
    cmd->add_option("--empty-output-check", o.empty_output_check, "on | off");
    cmd->add_option("--count-empty-is-empty", o.count_empty_is_empty, "on | off");
    cmd->add_option("--expansion-factor", o.expansion_factor, "expand k*this before pruning")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-conds", o.max_conds, "maximum WHERE conditions")->check(CLI::PositiveNumber);
    cmd->add_option("--span-cap", o.span_cap, "maximum value span length")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "seed echoed into reports");
}

void cmd_validate(const CommonOpts& o) {
    TableCatalog catalog = load_tables(o.tables);
    std::cout << "tables: " << catalog.size() << "\n";
    if (!o.examples.empty()) {
        std::vector<Example> examples = load_examples(o.examples, catalog);
        int with_gold = 0;
        for (const auto& ex : examples)
            if (ex.gold) with_gold++;
        std::cout << "examples: " << examples.size() << " (" << with_gold << " with gold)\n";
    }
    if (!o.model.empty()) {
        if (fold(o.scorer) == "oracle") {
            LogitScript script = load_logit_script(o.model);
            std::cout << "scripts: " << script.by_example.size() << "\n";
        } else if (fold(o.scorer) == "template") {
            TemplateScorerModel m = template_model_from_json(load_json_file(o.model));
            std::cout << "template model: " << m.inventory.size() << " templates, " << m.weights.size()
                      << " weights\n";
        } else {
            SketchScorerModel m = sketch_model_from_json(load_json_file(o.model));
            std::cout << "sketch model: " << m.inventory.size() << " sketches, " << m.weights.size() << " weights\n";
        }
    }
    std::cout << "ok\n";
}

void cmd_decode(const CommonOpts& o) {
    Runtime rt = make_runtime(o);
    std::ofstream file;
    std::ostream& out = open_out(file, o.out);
    int abstained = 0, fallbacks = 0;
    for (const auto& ex : rt.examples) {
        const Table& table = rt.catalog.at(ex.table_id);
        DecodeResult res = rt.decode(ex, table, rt.cfg);
        if (res.used_fallback) fallbacks++;
        if (res.program) {
            out << to_text(*res.program, table) << "\n";
        } else {
            out << "ABSTAIN\n";
            abstained++;
        }
    }
    if (!o.out.empty()) {
        nlohmann::ordered_json manifest;
        manifest["config"] = config_echo("decode", o, rt.cfg);
        manifest["examples"] = rt.examples.size();
        manifest["abstained"] = abstained;
        manifest["fallbacks"] = fallbacks;
        std::ofstream mf(o.out + ".manifest.json");
        if (!mf) throw IoError("cannot write " + o.out + ".manifest.json");
        mf << manifest.dump(2) << "\n";
    }
}

void cmd_eval(const CommonOpts& o) {
    Runtime rt = make_runtime(o);
    Report rep = evaluate([&](const Example& ex, const Table& t) { return rt.decode(ex, t, rt.cfg); }, rt.examples,
                          rt.catalog, rt.cfg.exec, config_echo("eval", o, rt.cfg));
    if (o.out.empty()) {
        std::cout << report_to_json(rep).dump(2) << "\n";
    } else {
        std::ofstream file;
        open_out(file, o.out) << report_to_json(rep).dump(2) << "\n";
        std::cout << summary_table({{"eval", rep}});
    }
}

void cmd_ablate(const CommonOpts& o) {
    Runtime rt = make_runtime(o);
    auto rows = run_ablations(rt.decode, rt.examples, rt.catalog, rt.cfg, config_echo("ablate", o, rt.cfg));
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [label, rep] : rows) {
        nlohmann::ordered_json j;
        j["label"] = label;
        j["report"] = report_to_json(rep);
        arr.push_back(std::move(j));
    }
    if (o.out.empty()) {
        std::cout << arr.dump(2) << "\n";
    } else {
        std::ofstream file;
        open_out(file, o.out) << arr.dump(2) << "\n";
        std::cout << summary_table(rows);
    }
}

void cmd_train(const CommonOpts& o, const TrainHyper& hyper) {
    TableCatalog catalog = load_tables(o.tables);
    std::vector<Example> examples = load_examples(o.examples, catalog);
    std::ofstream file;
    std::string kind = fold(o.scorer);
    if (kind == "template") {
        TemplateScorerModel m = train_template_scorer(examples, hyper);
        open_out(file, o.out) << template_model_to_json(m).dump(2) << "\n";
        std::cerr << "templates: " << m.inventory.size() << "  losses: template=" << m.template_loss
                  << " agg=" << m.agg_loss << " tagger=" << m.tagger_loss << "\n";
    } else if (kind == "sketch") {
        SketchScorerModel m = train_sketch_scorer(examples, catalog, hyper);
        open_out(file, o.out) << sketch_model_to_json(m).dump(2) << "\n";
        std::cerr << "sketches: " << m.inventory.size() << "  losses: sketch=" << m.sketch_loss
                  << " fine=" << m.fine_loss << "\n";
    } else {
        throw CLI::ValidationError("--scorer", "training supports template or sketch");
    }
}

void cmd_oracle(const CommonOpts& o) {
    TableCatalog catalog = load_tables(o.tables);
    std::vector<Example> examples = load_examples(o.examples, catalog);
    if (o.model.empty()) throw IoError("oracle needs --model pointing at a logit script");
    EgConfig cfg = make_config(o);
    OracleLogitScorer scorer(load_logit_script(o.model), cfg.limits);
    std::ofstream file;
    std::ostream& out = open_out(file, o.out);
    for (const auto& ex : examples) {
        const Table& table = catalog.at(ex.table_id);
        OracleResult res = oracle_argmax(scorer, ex, table, cfg.exec);
        if (res.program)
            out << to_text(*res.program, table) << "\n";
        else
            out << "ABSTAIN\n";
    }
}

void cmd_synth(int n, unsigned long long seed, const std::string& out_dir, const SynthMix& mix) {
    SynthConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    cfg.mix = mix;
    SynthCorpus corpus = make_fault_corpus(cfg);
    std::filesystem::create_directories(out_dir);
    save_tables(corpus.catalog, out_dir + "/tables.jsonl");
    save_examples(corpus.examples, out_dir + "/examples.jsonl");
    save_logit_script(corpus.script, out_dir + "/logits.jsonl");
    for (const auto& [profile, count] : corpus.profile_counts) std::cout << profile << ": " << count << "\n";
    std::cout << "wrote " << corpus.examples.size() << " examples over " << corpus.catalog.size() << " tables to "
              << out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"execution-guided decoding for single-table text-to-SQL"};
    app.require_subcommand(1);

    CommonOpts vo;
    CLI::App* validate = app.add_subcommand("validate", "load and check input files");
    validate->add_option("--tables", vo.tables, "tables JSONL")->required()->check(CLI::ExistingFile);
    validate->add_option("--examples", vo.examples, "examples JSONL")->check(CLI::ExistingFile);
    validate->add_option("--model", vo.model, "model JSON or logit script JSONL")->check(CLI::ExistingFile);
    validate->add_option("--scorer", vo.scorer, "how to interpret --model");
    validate->callback([&] { cmd_validate(vo); });

    CommonOpts dopts;
    CLI::App* decode = app.add_subcommand("decode", "decode examples to SQL text");
    add_common(decode, dopts, true);
    decode->callback([&] { cmd_decode(dopts); });

    CommonOpts eopts;
    CLI::App* eval_cmd = app.add_subcommand("eval", "decode and score against gold");
    add_common(eval_cmd, eopts, true);
    eval_cmd->callback([&] { cmd_eval(eopts); });

    CommonOpts aopts;
    CLI::App* ablate = app.add_subcommand("ablate", "run the five stage-ablation configs");
    add_common(ablate, aopts, true);
    ablate->callback([&] { cmd_ablate(aopts); });

    CommonOpts topts;
    TrainHyper hyper;
    CLI::App* train = app.add_subcommand("train", "fit a template or sketch scorer");
    train->add_option("--tables", topts.tables, "tables JSONL")->required()->check(CLI::ExistingFile);
    train->add_option("--examples", topts.examples, "training examples JSONL")->required()->check(CLI::ExistingFile);
    train->add_option("--scorer", topts.scorer, "template | sketch")->required();
    train->add_option("--out", topts.out, "model output path");
    train->add_option("--epochs", hyper.epochs)->check(CLI::PositiveNumber);
    train->add_option("--learning-rate", hyper.lr)->check(CLI::PositiveNumber);
    train->add_option("--ngram-order", hyper.ngram_order)->check(CLI::PositiveNumber);
    train->callback([&] { cmd_train(topts, hyper); });

    CommonOpts oopts;
    CLI::App* oracle = app.add_subcommand("oracle", "exhaustive argmax for decoder cross-checks");
    add_common(oracle, oopts, true);
    oracle->callback([&] { cmd_oracle(oopts); });

    int synth_n = 500;
    unsigned long long synth_seed = 1;
    std::string synth_dir = "synth";
    SynthMix mix;
    CLI::App* synth = app.add_subcommand("synth", "generate a fault-injected corpus");
    synth->add_option("--n", synth_n)->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed);
    synth->add_option("--out-dir", synth_dir);
    synth->add_option("--mix-clean", mix.clean);
    synth->add_option("--mix-shallow", mix.shallow);
    synth->add_option("--mix-col-flood", mix.col_flood);
    synth->add_option("--mix-span-flood", mix.span_flood);
    synth->add_option("--mix-agg-flood", mix.agg_flood);
    synth->callback([&] { cmd_synth(synth_n, synth_seed, synth_dir, mix); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const egsql::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 1;
    } catch (const egsql::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const egsql::DistributionError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const egsql::SqlParseError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const egsql::UnknownTableError& e) {
        std::cerr << "reference error: " << e.what() << "\n";
        return 3;
    } catch (const egsql::InvalidGoldError& e) {
        std::cerr << "reference error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
