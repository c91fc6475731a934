#include "uconf/pipeline.hpp"

#include "parallel_for.hpp"

namespace uconf {

std::vector<MethodKind> default_methods(const CostModel& cost) {
    if (cost.kind() == CostKind::Separable) {
        return {MethodKind::Base, MethodKind::Penalized, MethodKind::Ratio, MethodKind::GreedyOrder};
    }
    return {MethodKind::Base, MethodKind::Penalized, MethodKind::GreedyOrder};
}

BenchResult run_benchmark(const ScoreMatrix& data, std::shared_ptr<const CostModel> cost,
                          const BenchConfig& config) {
    if (!cost) throw Error(ErrorKind::InvalidArgument, "benchmark needs a cost model");
    if (config.runs < 1) throw Error(ErrorKind::InvalidArgument, "benchmark needs runs >= 1");
    if (config.methods.empty()) throw Error(ErrorKind::InvalidArgument, "no methods selected");
    if (cost->num_labels() != data.num_labels()) {
        throw Error(ErrorKind::DimensionMismatch, "cost model has K=" + std::to_string(cost->num_labels()) +
                                                      ", data has K=" + std::to_string(data.num_labels()));
    }
    check_alpha(config.alpha);
    config.split.validate();
    bool tuned = false;
    for (MethodKind kind : config.methods) {
        if (kind == MethodKind::Ratio && cost->kind() != CostKind::Separable) {
            throw Error(ErrorKind::InvalidArgument, "the ratio method needs a separable cost model");
        }
        tuned = tuned || kind == MethodKind::Penalized;
    }

    const std::size_t m = config.methods.size();
    const auto runs = static_cast<std::size_t>(config.runs);
    BenchResult result;
    result.reports.resize(runs * m);
    if (tuned) result.chosen_lambdas.resize(runs);

    detail::parallel_for(runs, [&](std::size_t r) {
        const std::uint64_t run_seed = mix_seed(config.seed, r);
        SplitSpec spec = config.split;
        spec.seed = run_seed;
        const Folds folds = split(data, spec);
        for (std::size_t j = 0; j < m; ++j) {
            CalibratedPredictor predictor;
            std::string name;
            switch (config.methods[j]) {
                case MethodKind::Base:
                    predictor = calibrate(ScoreMethod::base(), folds.calibration, config.alpha);
                    break;
                case MethodKind::Penalized: {
                    const auto tuning = tune_lambda(config.grid, folds.validation, folds.test,
                                                    folds.calibration, config.alpha, cost);
                    result.chosen_lambdas[r] = tuning.chosen_lambda;
                    predictor = tuning.final_predictor;
                    name = kTunedPenalizedName;
                    break;
                }
                case MethodKind::Ratio:
                    predictor = calibrate(ScoreMethod::ratio(cost), folds.calibration, config.alpha);
                    break;
                case MethodKind::GreedyOrder:
                    predictor = calibrate(ScoreMethod::greedy_order(cost, config.alpha), folds.calibration,
                                          config.alpha);
                    break;
            }
            auto report = evaluate(predictor, folds.test, *cost, run_seed);
            if (!name.empty()) report.method_name = name;
            result.reports[r * m + j] = std::move(report);
        }
    });
    return result;
}

}  // namespace uconf
