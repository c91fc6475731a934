// Command-line front end. Exit codes: 0 success, 1 usage, 2 data error,
// 3 verification failure.
//
// Every subcommand accepts --config FILE, an INI file. Keys outside any
// section apply to every subcommand that has an option of that name; keys in
// a [subcommand] section apply to that subcommand only and win over the
// unsectioned ones. Flags given on the command line win over both.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "uconf/conformal.hpp"
#include "uconf/evaluation.hpp"
#include "uconf/io.hpp"
#include "uconf/kernels.hpp"
#include "uconf/losses.hpp"
#include "uconf/pipeline.hpp"
#include "uconf/synth.hpp"

namespace {

using namespace uconf;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Miscoverage must lie strictly inside (0, 1); CLI::Range is closed.
const CLI::Validator kOpenUnit(
    [](std::string& text) -> std::string {
        double v = 0.0;
        try {
            v = std::stod(text);
        } catch (const std::exception&) {
            return "'" + text + "' is not a number";
        }
        return v > 0.0 && v < 1.0 ? std::string() : "alpha must lie in (0, 1), got " + text;
    },
    "in (0,1)");

struct VerificationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string normalize_key(std::string key) {
    for (char& c : key) {
        if (c == '_') c = '-';
    }
    return key;
}

// Fills options of `sub` that were not given on the command line from the
// config file.
void apply_config(CLI::App* sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open config '" + path + "'");
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_config(in);
    } catch (const CLI::ParseError& e) {
        throw Error(ErrorKind::ParseError, "config '" + path + "': " + e.what());
    }
    std::map<std::string, std::vector<std::string>> values;
    for (const auto& item : items) {  // unsectioned first
        if (item.parents.empty() || (item.parents.size() == 1 && item.parents[0] == "default")) {
            values[normalize_key(item.name)] = item.inputs;
        }
    }
    for (const auto& item : items) {
        if (item.parents.size() == 1 && item.parents[0] == sub->get_name()) {
            values[normalize_key(item.name)] = item.inputs;
        }
    }
    for (const auto& [key, inputs] : values) {
        if (key == "config") continue;
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr || opt->count() > 0) continue;
        opt->add_result(inputs);
        opt->run_callback();
    }
}

template <typename T>
void need(const std::optional<T>& value, const std::string& flag) {
    if (!value) throw UsageError("missing required option " + flag + " (give it on the command line or in --config)");
}

void need(const std::string& value, const std::string& flag) {
    if (value.empty()) throw UsageError("missing required option " + flag + " (give it on the command line or in --config)");
}

struct CostOptions {
    std::string kind;
    std::string costs;
    std::string hierarchy;
    std::string categories;
    std::optional<double> bound;

    void attach(CLI::App* sub) {
        sub->add_option("--cost", kind, "Cost model: separable, max_distance or coverage")
            ->check(CLI::IsMember({"separable", "max_distance", "coverage"}));
        sub->add_option("--costs", costs, "Per-label cost CSV (label_id,cost)");
        sub->add_option("--hierarchy", hierarchy, "Hierarchy file (edges, blank line, label mapping)");
        sub->add_option("--categories", categories, "Category CSV (category_name,label_id)");
        sub->add_option("--bound", bound, "Loss upper bound M (defaults to the natural bound)");
    }

    bool given() const { return !kind.empty() || !costs.empty() || !hierarchy.empty() || !categories.empty(); }

    std::shared_ptr<const CostModel> build(int num_labels) const {
        std::string k = kind;
        if (k.empty()) {
            if (!costs.empty()) k = "separable";
            else if (!categories.empty()) k = "coverage";
            else if (!hierarchy.empty()) k = "max_distance";
            else throw UsageError("a cost model is required: pass --costs, --hierarchy or --categories");
        }
        if (k == "separable") {
            need(costs, "--costs");
            return std::make_shared<const CostModel>(CostModel::separable(load_costs(costs, num_labels), bound));
        }
        if (k == "max_distance") {
            need(hierarchy, "--hierarchy");
            auto h = std::make_shared<const Hierarchy>(load_hierarchy(hierarchy));
            check_k(h->num_labels(), num_labels);
            return std::make_shared<const CostModel>(CostModel::max_distance(h, bound));
        }
        if (!categories.empty()) {
            auto list = load_categories(categories, num_labels);
            return std::make_shared<const CostModel>(CostModel::coverage(list.members, num_labels, bound));
        }
        need(hierarchy, "--hierarchy or --categories");
        auto h = std::make_shared<const Hierarchy>(load_hierarchy(hierarchy));
        check_k(h->num_labels(), num_labels);
        return std::make_shared<const CostModel>(CostModel::coverage(h, bound));
    }

    std::shared_ptr<const CostModel> build_if_given(int num_labels) const {
        return given() ? build(num_labels) : nullptr;
    }

    static void check_k(int hierarchy_k, int data_k) {
        if (hierarchy_k != data_k) {
            throw Error(ErrorKind::DimensionMismatch, "hierarchy has " + std::to_string(hierarchy_k) +
                                                          " labels, scores have " + std::to_string(data_k));
        }
    }
};

ScoreMethod make_method(const std::string& name, double lambda, double alpha,
                        const std::shared_ptr<const CostModel>& cost) {
    const MethodKind kind = parse_method_kind(name);
    if (kind != MethodKind::Base && !cost) {
        throw UsageError("method '" + name + "' needs a cost model (--costs, --hierarchy or --categories)");
    }
    switch (kind) {
        case MethodKind::Base: return ScoreMethod::base();
        case MethodKind::Penalized: return ScoreMethod::penalized(cost, lambda);
        case MethodKind::Ratio: return ScoreMethod::ratio(cost);
        case MethodKind::GreedyOrder: return ScoreMethod::greedy_order(cost, alpha);
    }
    return ScoreMethod::base();
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        std::cout.flush();
    } else {
        write_file_atomic(path, content);
    }
}

std::string join_set(const LabelSet& set) {
    std::string out;
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(set[i]);
    }
    return out;
}

SplitSpec split_from(double validation, double test, double calibration, std::uint64_t seed) {
    SplitSpec spec;
    spec.validation = validation;
    spec.test = test;
    spec.calibration = calibration;
    spec.seed = seed;
    spec.validate();
    return spec;
}

int print_checks(const std::vector<SuiteCheck>& checks) {
    int failures = 0;
    for (const auto& c : checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        failures += c.passed ? 0 : 1;
    }
    return failures;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conformal prediction sets that minimize a user-specified set cost"};
    app.require_subcommand(1);

    // calibrate
    struct {
        std::string config, scores, out, method = "base";
        double lambda = 1.0, alpha = 0.1;
        CostOptions cost;
    } cal;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit a threshold on a calibration score file");
    calibrate_cmd->add_option("--config", cal.config, "INI config file");
    calibrate_cmd->add_option("--scores", cal.scores, "Calibration score CSV");
    calibrate_cmd->add_option("--out", cal.out, "Predictor output file");
    calibrate_cmd->add_option("--method", cal.method, "base, penalized, ratio or greedy")
        ->check(CLI::IsMember({"base", "penalized", "ratio", "greedy"}));
    calibrate_cmd->add_option("--lambda", cal.lambda, "Penalty weight for the penalized method");
    calibrate_cmd->add_option("--alpha", cal.alpha, "Miscoverage level")->check(kOpenUnit);
    cal.cost.attach(calibrate_cmd);

    // predict
    struct {
        std::string config, predictor, scores, out;
        CostOptions cost;
    } pred;
    auto* predict_cmd = app.add_subcommand("predict", "Emit prediction sets: id,set,loss");
    predict_cmd->add_option("--config", pred.config, "INI config file");
    predict_cmd->add_option("--predictor", pred.predictor, "Predictor file from calibrate or tune");
    predict_cmd->add_option("--scores", pred.scores, "Score CSV");
    predict_cmd->add_option("--out", pred.out, "Output CSV (stdout when omitted)");
    pred.cost.attach(predict_cmd);

    // tune
    struct {
        std::string config, scores, validation, test, calibration, out, dump;
        std::vector<double> grid = default_lambda_grid();
        double alpha = 0.1;
        double f_val = 0.25, f_test = 0.25, f_cal = 0.5;
        std::uint64_t seed = 0;
        CostOptions cost;
    } tune;
    auto* tune_cmd = app.add_subcommand("tune", "Pick lambda for the penalized method and calibrate it");
    tune_cmd->add_option("--config", tune.config, "INI config file");
    tune_cmd->add_option("--scores", tune.scores, "Score CSV to split into three folds");
    tune_cmd->add_option("--validation", tune.validation, "Validation fold CSV (instead of --scores)");
    tune_cmd->add_option("--test", tune.test, "Tuning test fold CSV");
    tune_cmd->add_option("--calibration", tune.calibration, "Calibration fold CSV");
    tune_cmd->add_option("--grid", tune.grid, "Lambda grid");
    tune_cmd->add_option("--alpha", tune.alpha, "Miscoverage level")->check(kOpenUnit);
    tune_cmd->add_option("--validation-fraction", tune.f_val, "Split fraction");
    tune_cmd->add_option("--test-fraction", tune.f_test, "Split fraction");
    tune_cmd->add_option("--calibration-fraction", tune.f_cal, "Split fraction");
    tune_cmd->add_option("--seed", tune.seed, "Split seed");
    tune_cmd->add_option("--out", tune.out, "Predictor output file");
    tune_cmd->add_option("--dump", tune.dump, "Tuning result JSON (stdout when omitted)");
    tune.cost.attach(tune_cmd);

    // evaluate
    struct {
        std::string config, predictor, scores, json, table;
        std::uint64_t seed = 0;
        CostOptions cost;
    } eval;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Coverage, loss and set-size report on a test file");
    evaluate_cmd->add_option("--config", eval.config, "INI config file");
    evaluate_cmd->add_option("--predictor", eval.predictor, "Predictor file");
    evaluate_cmd->add_option("--scores", eval.scores, "Test score CSV");
    evaluate_cmd->add_option("--json", eval.json, "Report JSON output");
    evaluate_cmd->add_option("--table", eval.table, "Report table output (stdout when neither is given)");
    evaluate_cmd->add_option("--seed", eval.seed, "Run seed recorded in the report");
    eval.cost.attach(evaluate_cmd);

    // bench
    struct {
        std::string config, scores, table, runs_out, baseline = "base";
        std::vector<std::string> methods;
        std::vector<double> grid = default_lambda_grid();
        double alpha = 0.1;
        double f_val = 0.25, f_test = 0.25, f_cal = 0.5;
        int runs = 10;
        std::uint64_t seed = 0;
        CostOptions cost;
    } bench;
    auto* bench_cmd = app.add_subcommand("bench", "Multi-run comparison of all methods");
    bench_cmd->add_option("--config", bench.config, "INI config file");
    bench_cmd->add_option("--scores", bench.scores, "Score CSV");
    bench_cmd->add_option("--methods", bench.methods, "Subset of base, penalized, ratio, greedy");
    bench_cmd->add_option("--grid", bench.grid, "Lambda grid for penalized");
    bench_cmd->add_option("--alpha", bench.alpha, "Miscoverage level")->check(kOpenUnit);
    bench_cmd->add_option("--validation-fraction", bench.f_val, "Split fraction");
    bench_cmd->add_option("--test-fraction", bench.f_test, "Split fraction");
    bench_cmd->add_option("--calibration-fraction", bench.f_cal, "Split fraction");
    bench_cmd->add_option("--runs", bench.runs, "Number of random splits");
    bench_cmd->add_option("--seed", bench.seed, "Base seed");
    bench_cmd->add_option("--table", bench.table, "Comparison table output (stdout when omitted)");
    bench_cmd->add_option("--runs-out", bench.runs_out, "Per-run CSV output");
    bench_cmd->add_option("--baseline", bench.baseline, "Method the reductions are relative to");
    bench.cost.attach(bench_cmd);

    // synth
    struct {
        std::string config, task = "separable", out, costs_out, hierarchy_out;
        int labels = 20, contexts = 1000;
        double spread = 4.0, temperature = 0.5;
        std::optional<std::uint64_t> task_seed;
        std::uint64_t cost_seed = 7, stream = 0;
        std::size_t n = 10000;
    } syn;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic score CSV");
    synth_cmd->add_option("--config", syn.config, "INI config file");
    synth_cmd->add_option("--task", syn.task, "separable, hierarchical or random")
        ->check(CLI::IsMember({"separable", "hierarchical", "random"}));
    synth_cmd->add_option("--labels", syn.labels, "K for the random task");
    synth_cmd->add_option("--contexts", syn.contexts, "Number of contexts for the random task");
    synth_cmd->add_option("--spread", syn.spread, "Logit scale for the random task");
    synth_cmd->add_option("--temperature", syn.temperature, "Classifier noise temperature");
    synth_cmd->add_option("--task-seed", syn.task_seed, "Seed of the task itself");
    synth_cmd->add_option("--cost-seed", syn.cost_seed, "Seed of the written penalty table");
    synth_cmd->add_option("--stream", syn.stream, "Sample stream");
    synth_cmd->add_option("-n,--n", syn.n, "Number of instances");
    synth_cmd->add_option("--out", syn.out, "Score CSV output (stdout when omitted)");
    synth_cmd->add_option("--costs-out", syn.costs_out, "Write a quarter-step penalty table");
    synth_cmd->add_option("--hierarchy-out", syn.hierarchy_out, "Write the task hierarchy (hierarchical task)");

    // verify
    struct {
        std::string config;
        int trials = 200, tasks = 50;
        double temperature = 0.5;
        std::uint64_t seed = 0;
    } ver;
    auto* verify_cmd = app.add_subcommand("verify", "Coverage and optimality self-checks");
    verify_cmd->add_option("--config", ver.config, "INI config file");
    verify_cmd->add_option("--trials", ver.trials, "Coverage trials per method");
    verify_cmd->add_option("--tasks", ver.tasks, "Random oracle tasks");
    verify_cmd->add_option("--temperature", ver.temperature, "Noise temperature of the coverage task");
    verify_cmd->add_option("--seed", ver.seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const std::vector<std::pair<CLI::App*, const std::string*>> configs = {
            {calibrate_cmd, &cal.config}, {predict_cmd, &pred.config}, {tune_cmd, &tune.config},
            {evaluate_cmd, &eval.config}, {bench_cmd, &bench.config}, {synth_cmd, &syn.config},
            {verify_cmd, &ver.config}};
        for (const auto& [cmd, path] : configs) {
            if (cmd->parsed() && !path->empty()) apply_config(cmd, *path);
        }

        if (calibrate_cmd->parsed()) {
            need(cal.scores, "--scores");
            need(cal.out, "--out");
            const ScoreMatrix data = load_scores(cal.scores);
            const auto cost = cal.cost.build_if_given(data.num_labels());
            const ScoreMethod method = make_method(cal.method, cal.lambda, cal.alpha, cost);
            const CalibratedPredictor predictor = calibrate(method, data, cal.alpha);
            write_file_atomic(cal.out, predictor_to_text(predictor, cost.get()));
            std::cout << method.name() << " threshold=" << format_double(predictor.threshold)
                      << " n=" << predictor.calibration_size << '\n';
        } else if (predict_cmd->parsed()) {
            need(pred.predictor, "--predictor");
            need(pred.scores, "--scores");
            const ScoreMatrix data = load_scores(pred.scores);
            const auto cost = pred.cost.build(data.num_labels());
            const CalibratedPredictor predictor = predictor_from_text(read_file(pred.predictor), cost);
            const auto sets = parallel::prediction_sets(predictor, data);
            std::string out = "id,set,loss\n";
            for (std::size_t i = 0; i < data.size(); ++i) {
                out += data.id(i) + ',' + join_set(sets[i]) + ',' + format_double(cost->set_loss(sets[i])) + '\n';
            }
            emit(pred.out, out);
        } else if (tune_cmd->parsed()) {
            const bool explicit_folds = !tune.validation.empty() || !tune.test.empty() || !tune.calibration.empty();
            if (explicit_folds == !tune.scores.empty()) {
                throw UsageError("give either --scores or all of --validation, --test and --calibration");
            }
            need(tune.out, "--out");
            std::optional<Folds> folds;
            if (explicit_folds) {
                need(tune.validation, "--validation");
                need(tune.test, "--test");
                need(tune.calibration, "--calibration");
                folds.emplace(Folds{load_scores(tune.validation), load_scores(tune.test),
                                    load_scores(tune.calibration)});
            } else {
                folds.emplace(split(load_scores(tune.scores),
                                    split_from(tune.f_val, tune.f_test, tune.f_cal, tune.seed)));
            }
            const auto cost = tune.cost.build(folds->calibration.num_labels());
            const TuningResult result = tune_lambda(tune.grid, folds->validation, folds->test,
                                                    folds->calibration, tune.alpha, cost);
            nlohmann::ordered_json dump;
            dump["grid"] = result.grid;
            dump["per_lambda_loss"] = result.per_lambda_loss;
            nlohmann::ordered_json thresholds = nlohmann::ordered_json::array();
            for (double t : result.per_lambda_threshold) thresholds.push_back(format_double(t));
            dump["per_lambda_threshold"] = thresholds;
            dump["chosen_lambda"] = result.chosen_lambda;
            dump["final_threshold"] = format_double(result.final_predictor.threshold);
            dump["calibration_size"] = result.final_predictor.calibration_size;
            write_file_atomic(tune.out, predictor_to_text(result.final_predictor));
            emit(tune.dump, dump.dump(2) + '\n');
        } else if (evaluate_cmd->parsed()) {
            need(eval.predictor, "--predictor");
            need(eval.scores, "--scores");
            const ScoreMatrix data = load_scores(eval.scores);
            const auto cost = eval.cost.build(data.num_labels());
            const CalibratedPredictor predictor = predictor_from_text(read_file(eval.predictor), cost);
            const EvaluationReport report = evaluate(predictor, data, *cost, eval.seed);
            if (!eval.json.empty()) emit(eval.json, report_to_json(report));
            if (!eval.table.empty() || eval.json.empty()) emit(eval.table, report_to_table(report));
        } else if (bench_cmd->parsed()) {
            need(bench.scores, "--scores");
            const ScoreMatrix data = load_scores(bench.scores);
            const auto cost = bench.cost.build(data.num_labels());
            BenchConfig config;
            config.methods.clear();
            if (bench.methods.empty()) {
                config.methods = default_methods(*cost);
            } else {
                for (const auto& m : bench.methods) config.methods.push_back(parse_method_kind(m));
            }
            config.alpha = bench.alpha;
            config.grid = bench.grid;
            config.split = split_from(bench.f_val, bench.f_test, bench.f_cal, 0);
            config.runs = bench.runs;
            config.seed = bench.seed;
            const BenchResult result = run_benchmark(data, cost, config);
            emit(bench.table, comparison_to_table(compare_methods(result.reports, bench.baseline)));
            if (!bench.runs_out.empty()) {
                std::string out = "run,method,coverage,mean_loss,mean_set_size,threshold,lambda\n";
                const std::size_t m = config.methods.size();
                for (std::size_t i = 0; i < result.reports.size(); ++i) {
                    const auto& r = result.reports[i];
                    const std::size_t run = i / m;
                    const bool tuned = config.methods[i % m] == MethodKind::Penalized;
                    out += std::to_string(run) + ',' + r.method_name + ',' + format_double(r.coverage) + ',' +
                           format_double(r.mean_loss) + ',' + format_double(r.mean_set_size) + ',' +
                           format_double(r.threshold) + ',' +
                           (tuned ? format_double(result.chosen_lambdas[run]) : std::string()) + '\n';
                }
                write_file_atomic(bench.runs_out, out);
            }
        } else if (synth_cmd->parsed()) {
            SyntheticTask task;
            if (syn.task == "separable") {
                task = make_separable_task(syn.temperature, syn.task_seed.value_or(1));
            } else if (syn.task == "hierarchical") {
                task = make_hierarchical_task(syn.temperature, syn.task_seed.value_or(2));
            } else {
                task = make_random_task(syn.labels, syn.contexts, syn.spread, syn.temperature,
                                        syn.task_seed.value_or(1));
            }
            const ScoreMatrix data = generate(task, syn.n, syn.stream);
            if (!syn.costs_out.empty()) {
                write_file_atomic(syn.costs_out, costs_to_csv(quarter_penalties(task.num_labels, syn.cost_seed)));
            }
            if (!syn.hierarchy_out.empty()) {
                if (!task.hierarchy) throw UsageError("--hierarchy-out needs --task hierarchical");
                write_file_atomic(syn.hierarchy_out, hierarchy_to_text(*task.hierarchy));
            }
            emit(syn.out, scores_to_csv(data));
        } else if (verify_cmd->parsed()) {
            int failures = print_checks(coverage_suite(ver.trials, ver.temperature, ver.seed));
            failures += print_checks(oracle_suite(ver.tasks, ver.seed));
            if (failures > 0) throw VerificationFailure(std::to_string(failures) + " check(s) failed");
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\nRun with --help for the list of options.\n";
        return 1;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const VerificationFailure& e) {
        std::cerr << "verification failed: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
