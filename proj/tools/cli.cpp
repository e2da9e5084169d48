// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <eth2vec/corpus.hpp>
#include <eth2vec/detection.hpp>
#include <eth2vec/evaluation.hpp>
#include <eth2vec/model_io.hpp>
#include <eth2vec/synthetic.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

namespace eth2vec::cli
{
namespace
{
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

/// Bad flags or inputs that are the caller's fault.
class UsageError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct Options
{
    std::vector<std::string> inputs;
    std::string corpus;
    std::string labels;
    std::string model;
    std::string model_out;
    std::vector<std::string> queries;
    std::string out;
    std::string csv;
    double threshold = default_clone_threshold;
    size_t top_k = default_top_k;
    bool json = false;
    bool include_scaffold = false;
    bool no_refit = false;
    uint32_t folds = 10;
    unsigned threads = 1;
    Hyperparams hyper;
    /// Unset: infer/detect use the value stored in the model.
    std::optional<uint32_t> infer_epochs;
    size_t templates = 20;
    size_t variants = 3;
    size_t edits = 2;
};

double ms_since(Clock::time_point start)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string fixed(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

// --- config ---------------------------------------------------------------

const std::set<std::string, std::less<>> boolean_keys{"json", "include-scaffold", "no-refit"};

bool given(std::span<const std::string> args, std::string_view key)
{
    const std::string flag = "--" + std::string{key};
    for (const auto& a : args)
    {
        if (a == flag || a.starts_with(flag + "="))
            return true;
        if (key == "negatives" && a == "-k")
            return true;
    }
    return false;
}

/// Expands "key=value" lines into flags inserted after the subcommand, so
/// anything given on the command line wins.
std::vector<std::string> apply_config(std::vector<std::string> args)
{
    std::vector<std::string> injected;
    for (size_t i = 0; i < args.size(); ++i)
    {
        std::string path;
        if (args[i] == "--config" && i + 1 < args.size())
        {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
        }
        else if (args[i].starts_with("--config="))
        {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
        }
        else
            continue;
        --i;

        std::ifstream in{path};
        if (!in)
            throw UsageError{"cannot read config file " + path};
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            const auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            line = trim(line);
            if (line.empty() || line[0] == '#')
                continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw UsageError{path + ":" + std::to_string(lineno) + ": expected key=value"};
            const auto key = trim(line.substr(0, eq));
            const auto value = trim(line.substr(eq + 1));
            if (key.empty() || given(args, key))
                continue;
            if (boolean_keys.contains(key))
            {
                if (value == "true" || value == "1")
                    injected.push_back("--" + key);
                else if (value != "false" && value != "0")
                    throw UsageError{path + ":" + std::to_string(lineno) + ": " + key +
                                     " expects true or false"};
            }
            else
            {
                injected.push_back("--" + key);
                injected.push_back(value);
            }
        }
    }
    if (!injected.empty() && !args.empty())
        args.insert(args.begin() + 1, injected.begin(), injected.end());
    return args;
}

// --- shared helpers -------------------------------------------------------

Corpus load_training_corpus(const Options& o, std::ostream& err)
{
    if (o.corpus.empty())
        throw UsageError{"--corpus is required"};
    auto corpus = load_corpus({o.corpus});
    if (!corpus.issues.empty())
    {
        for (const auto& issue : corpus.issues)
            err << "error: " << issue.path.string() << ": " << issue.message << "\n";
        throw UsageError{std::to_string(corpus.issues.size()) + " corpus file(s) rejected"};
    }
    size_t functions = 0;
    for (const auto& f : corpus.files)
        for (const auto& c : f.contracts)
            functions += c.functions.size();
    if (functions == 0)
        throw UsageError{"corpus " + o.corpus + " contains no functions"};
    return corpus;
}

void warn_unmatched_labels(const LabelStore& labels, const std::vector<ContractFile>& files,
    std::ostream& err)
{
    std::set<ContractKey> known;
    for (const auto& f : files)
        for (const auto& c : f.contracts)
            known.emplace(f.name, c.name);
    size_t missing = 0;
    for (const auto& [key, tags] : labels.entries())
        missing += !known.contains(key);
    if (missing != 0)
        err << "warning: " << missing << " labelled contract(s) not found in the corpus\n";
}

json epsilon_json(const VulnerabilityReport& report)
{
    json eps = json::object();
    for (const auto t : all_tags)
        eps[std::string{tag_name(t)}] = report.score(t);
    return eps;
}

// --- commands -------------------------------------------------------------

int cmd_extract(const Options& o, std::ostream& out, std::ostream& err)
{
    std::vector<fs::path> roots(o.inputs.begin(), o.inputs.end());
    if (!o.corpus.empty())
        roots.emplace_back(o.corpus);
    if (roots.empty())
        throw UsageError{"no input files given"};

    const auto corpus = load_corpus(roots);
    for (const auto& issue : corpus.issues)
        err << "error: skipped " << issue.path.string() << ": " << issue.message << "\n";
    if (corpus.files.empty() && corpus.issues.empty())
        err << "warning: no .hex files found\n";

    if (!o.out.empty())
        fs::create_directories(o.out);
    for (const auto& file : corpus.files)
    {
        const auto text = serialize(file);
        if (o.out.empty())
            out << text;
        else
        {
            const auto path = fs::path{o.out} / (file.name + ".json");
            write_text_file(path, text);
            out << path.string() << "\n";
        }
    }
    return corpus.issues.empty() ? exit_ok : exit_invalid_input;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err)
{
    if (o.model_out.empty())
        throw UsageError{"--model-out is required"};
    const auto corpus = load_training_corpus(o, err);
    if (!o.labels.empty())
        warn_unmatched_labels(load_labels(o.labels), corpus.files, err);
    if (o.hyper.epochs == 0)
        err << "warning: --epochs 0 leaves every function vector at zero\n";
    if (o.threads > 1)
        err << "note: " << o.threads
            << " threads train asynchronously; the model varies between runs\n";

    TrainOptions opts;
    opts.threads = o.threads;
    opts.refit = !o.no_refit;
    opts.on_epoch = [&](uint32_t epoch, double loss) {
        out << "epoch " << epoch + 1 << "/" << o.hyper.epochs << " loss " << fixed(loss, 6)
            << "\n";
    };
    const auto started = Clock::now();
    const auto result = train(corpus.files, o.hyper, opts);
    save_model(result.model, o.model_out);
    out << "trained " << result.model.functions.size() << " functions, vocabulary "
        << result.model.vocab.size() << ", " << fixed(ms_since(started) / 1000.0, 2) << " s -> "
        << o.model_out << "\n";
    return exit_ok;
}

int cmd_infer(const Options& o, std::ostream& out, std::ostream& err)
{
    if (o.model.empty())
        throw UsageError{"--model is required"};
    if (o.queries.empty())
        throw UsageError{"at least one --query is required"};
    auto model = load_model(o.model);
    if (o.infer_epochs)
        model.hyper.infer_epochs = *o.infer_epochs;

    int status = exit_ok;
    for (const auto& q : o.queries)
    {
        const auto file = load_contract_file(q);
        size_t n = 0;
        for (const auto& c : file.contracts)
        {
            for (const auto& f : c.functions)
            {
                const auto v = infer(f, model);
                const FunctionId id{file.name, c.name, f.name};
                if (o.json)
                    out << json{{"id", id.str()}, {"vector", v}}.dump() << "\n";
                else
                {
                    out << id.str();
                    for (const auto x : v)
                        out << " " << x;
                    out << "\n";
                }
                ++n;
            }
        }
        if (n == 0)
        {
            err << "error: " << q << ": no functions extracted\n";
            status = exit_empty_analysis;
        }
    }
    return status;
}

int cmd_detect(const Options& o, std::ostream& out, std::ostream& err)
{
    if (o.model.empty())
        throw UsageError{"--model is required"};
    if (o.labels.empty())
        throw UsageError{"--labels is required"};
    if (o.queries.empty())
        throw UsageError{"at least one --query is required"};

    auto model = load_model(o.model);
    if (o.infer_epochs)
        model.hyper.infer_epochs = *o.infer_epochs;
    const auto labels = load_labels(o.labels);
    const auto index = VectorIndex::from_model(model);
    const CloneSearch search{o.threshold, o.top_k, false};

    int status = exit_ok;
    for (const auto& q : o.queries)
    {
        auto t = Clock::now();
        ContractFile file;
        try
        {
            file = load_contract_file(q);
        }
        catch (const HexError& e)
        {
            err << "error: " << q << ": " << e.what() << "\n";
            status = std::max(status, int{exit_invalid_input});
            continue;
        }
        const double extract_ms = ms_since(t);

        struct FunctionResult
        {
            const Contract* contract;
            const FunctionUnit* function;
            std::vector<CloneMatch> matches;
        };
        t = Clock::now();
        std::vector<FunctionResult> results;
        for (const auto& c : file.contracts)
        {
            for (const auto& f : c.functions)
            {
                const auto seq = encode(f, model.vocab, model.normalization);
                const FunctionId id{file.name, c.name, f.name};
                std::vector<CloneMatch> matches;
                if (!seq.empty())
                    matches = find_clones(id, infer(seq, model), index, search, &labels);
                results.push_back({&c, &f, std::move(matches)});
            }
        }
        const double detect_ms = ms_since(t);

        if (results.empty())
        {
            err << "error: " << q << ": no functions extracted\n";
            status = std::max(status, int{exit_empty_analysis});
            continue;
        }

        t = Clock::now();
        json functions = json::array();
        json contracts = json::array();
        std::string text;
        for (const auto& c : file.contracts)
        {
            std::vector<CloneMatch> all;
            for (const auto& r : results)
            {
                if (r.contract != &c)
                    continue;
                const auto report =
                    propagate_labels(r.matches, labels, o.threshold, o.include_scaffold);
                json clones = json::array();
                for (const auto& m : r.matches)
                    clones.push_back({{"id", m.match.str()}, {"similarity", m.similarity}});
                functions.push_back({{"name", r.function->name}, {"contract", c.name},
                    {"clones", std::move(clones)}, {"epsilon", epsilon_json(report)}});
                all.insert(all.end(), r.matches.begin(), r.matches.end());

                if (!o.json)
                {
                    text += "  " + c.name + "/" + r.function->name + ": " +
                            std::to_string(r.matches.size()) + " clone(s)\n";
                    for (const auto& m : r.matches)
                        text += "    " + fixed(m.similarity) + "  " + m.match.str() + "\n";
                }
            }
            const auto report = propagate_labels(all, labels, o.threshold, o.include_scaffold);
            json predicted = json::array();
            for (const auto tag : report.predictions())
                predicted.push_back(tag_name(tag));
            contracts.push_back({{"name", c.name}, {"epsilon", epsilon_json(report)},
                {"predicted", predicted}});

            if (!o.json)
            {
                text += "  contract " + c.name + " predicted:";
                if (report.predictions().empty())
                    text += " none";
                for (const auto tag : report.predictions())
                    text += " " + std::string{tag_name(tag)} + " (" + fixed(report.score(tag)) + ")";
                text += "\n";
            }
        }
        const double summarize_ms = ms_since(t);

        if (o.json)
        {
            json report{{"query", q}, {"file", file.name}, {"md5", file.md5},
                {"functions", std::move(functions)}, {"contracts", std::move(contracts)},
                {"timing_ms",
                    {{"extract", extract_ms}, {"detect", detect_ms}, {"summarize", summarize_ms}}}};
            out << report.dump() << "\n";
        }
        else
        {
            out << "query " << q << " (md5 " << file.md5 << ")\n"
                << text << "  timing ms: extract " << fixed(extract_ms, 2) << ", detect "
                << fixed(detect_ms, 2) << ", summarize " << fixed(summarize_ms, 2) << "\n";
        }
    }
    return status;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err)
{
    if (o.labels.empty())
        throw UsageError{"--labels is required"};
    const auto corpus = load_training_corpus(o, err);
    const auto labels = load_labels(o.labels);
    warn_unmatched_labels(labels, corpus.files, err);

    size_t contracts = 0;
    for (const auto& f : corpus.files)
        contracts += f.contracts.size();
    if (o.folds < 2)
        throw UsageError{"--folds must be at least 2 (a single fold leaves nothing to train on)"};
    if (o.folds > contracts)
        throw UsageError{"--folds " + std::to_string(o.folds) + " exceeds the " +
                         std::to_string(contracts) + " contracts in the corpus"};

    EvalOptions opts;
    opts.folds = o.folds;
    opts.seed = o.hyper.seed;
    opts.hyper = o.hyper;
    opts.search = {o.threshold, o.top_k, false};
    opts.include_scaffold = o.include_scaffold;
    opts.refit = !o.no_refit;
    opts.threads = o.threads;
    const auto result = evaluate(corpus.files, labels, opts);

    out << format_metrics_table(result);
    out << "inference: " << fixed(result.infer_ms_per_contract, 2) << " ms per contract ("
        << result.contracts << " contracts, " << result.folds.size() << " folds)\n";
    if (!o.csv.empty())
        write_text_file(o.csv, format_metrics_csv(result));
    return exit_ok;
}

int cmd_synth(const Options& o, std::ostream& out, std::ostream&)
{
    if (o.out.empty())
        throw UsageError{"--out is required"};
    const auto corpus =
        synthetic::vulnerable_corpus(o.templates, o.variants, o.hyper.seed, o.edits);
    synthetic::write_corpus(corpus, o.out);
    out << "wrote " << corpus.files.size() << " contracts and labels.csv to " << o.out << "\n";
    return exit_ok;
}

// --- flag wiring ----------------------------------------------------------

void add_hyperparams(CLI::App& app, Options& o, bool training)
{
    app.add_option("--infer-epochs", o.infer_epochs, "Inference epochs")
        ->check(CLI::PositiveNumber);
    if (!training)
        return;
    app.add_option("--dim", o.hyper.dim, "Token vector dimension d")->check(CLI::PositiveNumber);
    app.add_option("-k,--negatives", o.hyper.negatives, "Negative samples per token")
        ->check(CLI::PositiveNumber);
    app.add_option("--alpha", o.hyper.alpha, "Initial learning rate")->check(CLI::PositiveNumber);
    app.add_option("--epochs", o.hyper.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
    app.add_option("--min-count", o.hyper.min_count, "Minimum token count")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", o.hyper.seed, "Random seed");
    app.add_flag("--no-refit", o.no_refit, "Keep trained function vectors instead of re-inferring them");
}

void add_search(CLI::App& app, Options& o)
{
    app.add_option("--threshold", o.threshold, "Clone and prediction threshold")
        ->check(CLI::PositiveNumber);
    app.add_option("--top-k", o.top_k, "Clones kept per function (0 = all)");
    app.add_flag("--include-scaffold", o.include_scaffold,
        "Let dispatch/orphan functions propagate labels");
}
}  // namespace

int run(std::span<const std::string> raw, std::ostream& out, std::ostream& err)
{
    Options o;
    CLI::App app{"eth2vec: EVM bytecode embeddings for clone and vulnerability detection",
        "eth2vec"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");
    // Consumed by apply_config; declared so it shows up in --help.
    std::string config_path;
    app.add_option("--config", config_path, "key=value file; flags on the command line win");

    auto* extract = app.add_subcommand("extract", "Disassemble .hex files into schema JSON");
    extract->add_option("inputs", o.inputs, ".hex files or directories");
    extract->add_option("--corpus", o.corpus, "Directory of .hex files");
    extract->add_option("--out", o.out, "Output directory (default: standard output)");

    auto* train_cmd = app.add_subcommand("train", "Train a model on a corpus");
    train_cmd->add_option("--corpus", o.corpus, "Directory of .hex files")->required();
    train_cmd->add_option("--labels", o.labels, "Labels CSV (checked against the corpus)");
    train_cmd->add_option("--model-out", o.model_out, "Model file to write")->required();
    train_cmd->add_option("--threads", o.threads, "1 = deterministic; more = asynchronous SGD")
        ->check(CLI::PositiveNumber);
    add_hyperparams(*train_cmd, o, true);

    auto* infer_cmd = app.add_subcommand("infer", "Print function vectors of query contracts");
    infer_cmd->add_option("--model", o.model, "Model file")->required();
    infer_cmd->add_option("--query", o.queries, "Query .hex file (repeatable)")->required();
    infer_cmd->add_flag("--json", o.json, "JSON lines output");
    add_hyperparams(*infer_cmd, o, false);

    auto* detect = app.add_subcommand("detect", "Find clones and propagate vulnerability labels");
    detect->add_option("--model", o.model, "Model file")->required();
    detect->add_option("--labels", o.labels, "Labels CSV of the training corpus")->required();
    detect->add_option("--query", o.queries, "Query .hex file (repeatable)")->required();
    detect->add_flag("--json", o.json, "One JSON report per query");
    add_search(*detect, o);
    add_hyperparams(*detect, o, false);

    auto* eval = app.add_subcommand("eval", "Cross-validated detection metrics");
    eval->add_option("--corpus", o.corpus, "Directory of .hex files")->required();
    eval->add_option("--labels", o.labels, "Labels CSV")->required();
    eval->add_option("--folds", o.folds, "Number of folds");
    eval->add_option("--csv", o.csv, "Write metrics CSV here");
    eval->add_option("--threads", o.threads, "Folds evaluated concurrently")
        ->check(CLI::PositiveNumber);
    add_search(*eval, o);
    add_hyperparams(*eval, o, true);

    auto* synth = app.add_subcommand("synth", "Write the synthetic labelled corpus");
    synth->add_option("--out", o.out, "Output directory")->required();
    synth->add_option("--templates", o.templates, "Vulnerable templates")
        ->check(CLI::PositiveNumber);
    synth->add_option("--variants", o.variants, "Rewrites per template")
        ->check(CLI::PositiveNumber);
    synth->add_option("--edits", o.edits, "Edits per rewrite");
    synth->add_option("--seed", o.hyper.seed, "Random seed");

    try
    {
        auto args = apply_config({raw.begin(), raw.end()});
        std::vector<const char*> argv{"eth2vec"};
        for (const auto& a : args)
            argv.push_back(a.c_str());
        try
        {
            app.parse(static_cast<int>(argv.size()), argv.data());
        }
        catch (const CLI::ParseError& e)
        {
            return app.exit(e, out, err) == 0 ? exit_ok : exit_invalid_input;
        }
        if (o.infer_epochs)
            o.hyper.infer_epochs = *o.infer_epochs;

        if (extract->parsed())
            return cmd_extract(o, out, err);
        if (train_cmd->parsed())
            return cmd_train(o, out, err);
        if (infer_cmd->parsed())
            return cmd_infer(o, out, err);
        if (detect->parsed())
            return cmd_detect(o, out, err);
        if (eval->parsed())
            return cmd_eval(o, out, err);
        return cmd_synth(o, out, err);
    }
    catch (const UsageError& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_invalid_input;
    }
    catch (const TrainingError& e)
    {
        err << "error: training failed: " << e.what() << "\n";
        return exit_internal;
    }
    catch (const Error& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_invalid_input;
    }
    catch (const std::exception& e)
    {
        err << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
}
}  // namespace eth2vec::cli
