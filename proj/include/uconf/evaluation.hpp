#pragma once
// Evaluation of calibrated predictors: marginal coverage, coverage by set
// size, set loss, and the adaptivity curve (true-label probability by size).

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "uconf/conformal.hpp"
#include "uconf/core.hpp"
#include "uconf/losses.hpp"

namespace uconf {

/// Inclusive set-size range; `hi` = max int means open-ended.
struct SizeBucket {
    int lo = 1;
    int hi = 1;
    std::string name() const;
};

/// {1}, {2-4}, {5-9}, {10-49}, {50-99}, {100+}.
std::vector<SizeBucket> default_size_buckets();

struct BucketRow {
    std::string bucket;
    std::size_t count = 0;
    std::size_t covered = 0;
    /// covered / count; empty when count is zero.
    std::optional<double> coverage() const;
};

struct AdaptivityRow {
    int set_size = 0;
    std::size_t count = 0;
    double mean_true_prob = 0.0;
    double std_true_prob = 0.0;  // population standard deviation
};

struct EvaluationReport {
    std::string method_name;
    double alpha = 0.1;
    std::size_t n_test = 0;
    std::size_t n_covered = 0;
    double coverage = 0.0;
    double mean_loss = 0.0;
    double mean_set_size = 0.0;
    double threshold = 0.0;
    std::vector<BucketRow> bucket_rows;
    std::vector<AdaptivityRow> adaptivity;
    std::uint64_t run_seed = 0;
    std::uint64_t cost_digest = 0;
};

/// Empty prediction sets are tallied in an extra "0" bucket that is emitted
/// only when it is nonempty.
EvaluationReport evaluate(const CalibratedPredictor& predictor, const ScoreMatrix& test,
                          const CostModel& cost, std::uint64_t run_seed = 0,
                          const std::vector<SizeBucket>& buckets = default_size_buckets());

/// Bucket counts sum to n_test and bucket coverage recombines to the scalar coverage.
bool report_is_consistent(const EvaluationReport& report);

double median_of_means(std::vector<double> per_run_means);

/// Sample standard deviation (n - 1); zero for a single value.
double sample_std(const std::vector<double>& values);

/// Spearman rank correlation with average ranks for ties; 0 when either side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Spearman correlation between set size and mean true-label probability.
double adaptivity_correlation(const EvaluationReport& report);

struct ComparisonRow {
    std::string method;
    std::size_t runs = 0;
    double median_loss = 0.0;
    double std_loss = 0.0;
    double median_coverage = 0.0;
    double median_set_size = 0.0;
    double reduction = 0.0;  // 1 - median / baseline median
};

/// Groups reports by method name (in first-appearance order) and aggregates
/// the per-run mean losses with median-of-means.
std::vector<ComparisonRow> compare_methods(const std::vector<EvaluationReport>& reports,
                                           const std::string& baseline_name);

// Serialization.
std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const std::string& text);
std::string report_to_table(const EvaluationReport& report);
std::string comparison_to_table(const std::vector<ComparisonRow>& rows);

}  // namespace uconf
