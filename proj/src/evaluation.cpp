#include "uconf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "uconf/kernels.hpp"

namespace uconf {

namespace {

constexpr int kOpenEnded = std::numeric_limits<int>::max();

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string SizeBucket::name() const {
    if (hi == kOpenEnded) return std::to_string(lo) + "+";
    if (lo == hi) return std::to_string(lo);
    return std::to_string(lo) + " to " + std::to_string(hi);
}

std::vector<SizeBucket> default_size_buckets() {
    return {{1, 1}, {2, 4}, {5, 9}, {10, 49}, {50, 99}, {100, kOpenEnded}};
}

std::optional<double> BucketRow::coverage() const {
    if (count == 0) return std::nullopt;
    return static_cast<double>(covered) / static_cast<double>(count);
}

EvaluationReport evaluate(const CalibratedPredictor& predictor, const ScoreMatrix& test,
                          const CostModel& cost, std::uint64_t run_seed,
                          const std::vector<SizeBucket>& buckets) {
    if (test.empty()) throw Error(ErrorKind::EmptyTest, "test fold is empty");
    if (buckets.empty()) throw Error(ErrorKind::InvalidArgument, "no size buckets");
    const auto outcomes = parallel::outcomes(predictor, test, &cost);

    EvaluationReport report;
    report.method_name = predictor.method.name();
    report.alpha = predictor.alpha;
    report.n_test = test.size();
    report.threshold = predictor.threshold;
    report.run_seed = run_seed;
    report.cost_digest = cost.digest();

    BucketRow empty_row{"0"};
    std::vector<BucketRow> rows;
    for (const auto& b : buckets) rows.push_back(BucketRow{b.name()});
    std::map<int, std::vector<double>> by_size;

    double loss_total = 0.0;
    double size_total = 0.0;
    for (const auto& o : outcomes) {
        loss_total += o.loss;
        size_total += o.set_size;
        report.n_covered += o.covered ? 1 : 0;
        by_size[o.set_size].push_back(o.true_prob);

        BucketRow* row = nullptr;
        if (o.set_size == 0) row = &empty_row;
        for (std::size_t b = 0; b < buckets.size() && !row; ++b) {
            if (o.set_size >= buckets[b].lo && o.set_size <= buckets[b].hi) row = &rows[b];
        }
        if (!row) {
            throw Error(ErrorKind::InvalidArgument,
                        "set size " + std::to_string(o.set_size) + " falls outside every bucket");
        }
        ++row->count;
        row->covered += o.covered ? 1 : 0;
    }
    const auto n = static_cast<double>(outcomes.size());
    report.coverage = static_cast<double>(report.n_covered) / n;
    report.mean_loss = loss_total / n;
    report.mean_set_size = size_total / n;
    if (empty_row.count > 0) report.bucket_rows.push_back(empty_row);
    report.bucket_rows.insert(report.bucket_rows.end(), rows.begin(), rows.end());

    for (const auto& [size, probs] : by_size) {
        AdaptivityRow row;
        row.set_size = size;
        row.count = probs.size();
        const double mean = std::accumulate(probs.begin(), probs.end(), 0.0) / static_cast<double>(probs.size());
        double sq = 0.0;
        for (double p : probs) sq += (p - mean) * (p - mean);
        row.mean_true_prob = mean;
        row.std_true_prob = std::sqrt(sq / static_cast<double>(probs.size()));
        report.adaptivity.push_back(row);
    }
    return report;
}

bool report_is_consistent(const EvaluationReport& report) {
    std::size_t count = 0;
    std::size_t covered = 0;
    for (const auto& row : report.bucket_rows) {
        count += row.count;
        covered += row.covered;
    }
    if (count != report.n_test || covered != report.n_covered || report.n_test == 0) return false;
    return static_cast<double>(covered) / static_cast<double>(count) == report.coverage;
}

double median_of_means(std::vector<double> per_run_means) {
    if (per_run_means.empty()) throw Error(ErrorKind::EmptyInput, "median of an empty list");
    std::sort(per_run_means.begin(), per_run_means.end());
    const std::size_t n = per_run_means.size();
    if (n % 2 == 1) return per_run_means[n / 2];
    return 0.5 * (per_run_means[n / 2 - 1] + per_run_means[n / 2]);
}

double sample_std(const std::vector<double>& values) {
    if (values.size() < 2) return 0.0;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    return std::sqrt(sq / static_cast<double>(values.size() - 1));
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "spearman inputs differ in length");
    if (x.size() < 2) return 0.0;
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double adaptivity_correlation(const EvaluationReport& report) {
    std::vector<double> sizes, probs;
    for (const auto& row : report.adaptivity) {
        sizes.push_back(row.set_size);
        probs.push_back(row.mean_true_prob);
    }
    return spearman(sizes, probs);
}

std::vector<ComparisonRow> compare_methods(const std::vector<EvaluationReport>& reports,
                                           const std::string& baseline_name) {
    if (reports.empty()) throw Error(ErrorKind::EmptyInput, "no reports to compare");
    for (const auto& r : reports) {
        if (r.alpha != reports.front().alpha || r.cost_digest != reports.front().cost_digest) {
            throw Error(ErrorKind::IncompatibleReports,
                        "report '" + r.method_name + "' differs in alpha or cost model");
        }
    }
    std::vector<std::string> order;
    std::map<std::string, std::vector<const EvaluationReport*>> groups;
    for (const auto& r : reports) {
        auto& g = groups[r.method_name];
        if (g.empty()) order.push_back(r.method_name);
        g.push_back(&r);
    }
    if (!groups.count(baseline_name)) {
        throw Error(ErrorKind::MissingBaseline, "baseline '" + baseline_name + "' not among reports");
    }

    std::vector<ComparisonRow> rows;
    for (const auto& name : order) {
        std::vector<double> losses, coverages, sizes;
        for (const auto* r : groups[name]) {
            losses.push_back(r->mean_loss);
            coverages.push_back(r->coverage);
            sizes.push_back(r->mean_set_size);
        }
        ComparisonRow row;
        row.method = name;
        row.runs = losses.size();
        row.median_loss = median_of_means(losses);
        row.std_loss = sample_std(losses);
        row.median_coverage = median_of_means(coverages);
        row.median_set_size = median_of_means(sizes);
        rows.push_back(row);
    }
    const auto base = std::find_if(rows.begin(), rows.end(),
                                   [&](const ComparisonRow& r) { return r.method == baseline_name; });
    for (auto& row : rows) {
        row.reduction = base->median_loss > 0.0 ? 1.0 - row.median_loss / base->median_loss : 0.0;
    }
    return rows;
}

std::string report_to_json(const EvaluationReport& report) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["format"] = "uconf-report/1";
    j["method"] = report.method_name;
    j["alpha"] = report.alpha;
    j["n_test"] = report.n_test;
    j["n_covered"] = report.n_covered;
    j["coverage"] = report.coverage;
    j["mean_loss"] = report.mean_loss;
    j["mean_set_size"] = report.mean_set_size;
    j["threshold"] = std::isfinite(report.threshold) ? ordered_json(report.threshold) : ordered_json("inf");
    j["run_seed"] = report.run_seed;
    j["cost_digest"] = report.cost_digest;
    j["buckets"] = ordered_json::array();
    for (const auto& row : report.bucket_rows) {
        ordered_json b;
        b["size"] = row.bucket;
        b["count"] = row.count;
        b["covered"] = row.covered;
        auto cov = row.coverage();
        b["coverage"] = cov ? ordered_json(*cov) : ordered_json(nullptr);
        j["buckets"].push_back(b);
    }
    j["adaptivity"] = ordered_json::array();
    for (const auto& row : report.adaptivity) {
        ordered_json a;
        a["set_size"] = row.set_size;
        a["count"] = row.count;
        a["mean_true_prob"] = row.mean_true_prob;
        a["std_true_prob"] = row.std_true_prob;
        j["adaptivity"].push_back(a);
    }
    return j.dump(2) + "\n";
}

EvaluationReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("report JSON: ") + e.what());
    }
    try {
        EvaluationReport r;
        r.method_name = j.at("method").get<std::string>();
        r.alpha = j.at("alpha").get<double>();
        r.n_test = j.at("n_test").get<std::size_t>();
        r.n_covered = j.at("n_covered").get<std::size_t>();
        r.coverage = j.at("coverage").get<double>();
        r.mean_loss = j.at("mean_loss").get<double>();
        r.mean_set_size = j.at("mean_set_size").get<double>();
        const auto& t = j.at("threshold");
        r.threshold = t.is_string() ? std::numeric_limits<double>::infinity() : t.get<double>();
        r.run_seed = j.at("run_seed").get<std::uint64_t>();
        r.cost_digest = j.at("cost_digest").get<std::uint64_t>();
        for (const auto& b : j.at("buckets")) {
            r.bucket_rows.push_back(
                BucketRow{b.at("size").get<std::string>(), b.at("count").get<std::size_t>(),
                          b.at("covered").get<std::size_t>()});
        }
        for (const auto& a : j.at("adaptivity")) {
            r.adaptivity.push_back(AdaptivityRow{a.at("set_size").get<int>(), a.at("count").get<std::size_t>(),
                                                 a.at("mean_true_prob").get<double>(),
                                                 a.at("std_true_prob").get<double>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("report JSON: ") + e.what());
    }
}

std::string report_to_table(const EvaluationReport& report) {
    std::ostringstream os;
    os << "method         " << report.method_name << "\n";
    os << "alpha          " << fixed(report.alpha, 3) << "\n";
    os << "n_test         " << report.n_test << "\n";
    os << "coverage       " << fixed(report.coverage) << "\n";
    os << "mean_loss      " << fixed(report.mean_loss) << "\n";
    os << "mean_set_size  " << fixed(report.mean_set_size) << "\n";
    os << "threshold      " << (std::isfinite(report.threshold) ? fixed(report.threshold, 6) : "inf") << "\n";
    os << "\n";
    os << pad_right("size", 10) << pad_left("count", 8) << pad_left("coverage", 10) << "\n";
    for (const auto& row : report.bucket_rows) {
        auto cov = row.coverage();
        os << pad_right(row.bucket, 10) << pad_left(std::to_string(row.count), 8)
           << pad_left(cov ? fixed(*cov, 2) : "–", cov ? 10 : 12) << "\n";
    }
    os << "\n";
    os << pad_right("set_size", 10) << pad_left("count", 8) << pad_left("mean_p_true", 13)
       << pad_left("std_p_true", 12) << "\n";
    for (const auto& row : report.adaptivity) {
        os << pad_right(std::to_string(row.set_size), 10) << pad_left(std::to_string(row.count), 8)
           << pad_left(fixed(row.mean_true_prob), 13) << pad_left(fixed(row.std_true_prob), 12) << "\n";
    }
    return os.str();
}

std::string comparison_to_table(const std::vector<ComparisonRow>& rows) {
    std::size_t width = 6;
    for (const auto& r : rows) width = std::max(width, r.method.size());
    std::ostringstream os;
    os << pad_right("method", width + 2) << pad_left("runs", 5) << pad_left("median_loss", 13)
       << pad_left("std_loss", 10) << pad_left("coverage", 10) << pad_left("set_size", 10)
       << pad_left("reduction", 11) << "\n";
    for (const auto& r : rows) {
        os << pad_right(r.method, width + 2) << pad_left(std::to_string(r.runs), 5)
           << pad_left(fixed(r.median_loss), 13) << pad_left(fixed(r.std_loss), 10)
           << pad_left(fixed(r.median_coverage), 10) << pad_left(fixed(r.median_set_size, 2), 10)
           << pad_left(fixed(r.reduction, 3), 11) << "\n";
    }
    return os.str();
}

}  // namespace uconf
