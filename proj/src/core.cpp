#include "uconf/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace uconf {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::InvalidAlpha: return "InvalidAlpha";
        case ErrorKind::InvalidProbability: return "InvalidProbability";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::DuplicateId: return "DuplicateId";
        case ErrorKind::EmptyFold: return "EmptyFold";
        case ErrorKind::UnknownLabel: return "UnknownLabel";
        case ErrorKind::DuplicateLabel: return "DuplicateLabel";
        case ErrorKind::ZeroPenalty: return "ZeroPenalty";
        case ErrorKind::NonPositiveCost: return "NonPositiveCost";
        case ErrorKind::MissingBound: return "MissingBound";
        case ErrorKind::EmptyCalibration: return "EmptyCalibration";
        case ErrorKind::EmptyTest: return "EmptyTest";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::MissingBaseline: return "MissingBaseline";
        case ErrorKind::IncompatibleReports: return "IncompatibleReports";
        case ErrorKind::InvalidTask: return "InvalidTask";
        case ErrorKind::TooLarge: return "TooLarge";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorKind::CycleDetected: return "CycleDetected";
        case ErrorKind::OrphanLabel: return "OrphanLabel";
        case ErrorKind::InvalidHierarchy: return "InvalidHierarchy";
        case ErrorKind::DigestMismatch: return "DigestMismatch";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

LabelSpace::LabelSpace(int size, std::vector<std::string> names)
    : size_(size), names_(std::move(names)) {
    if (size_ < 2) {
        throw Error(ErrorKind::InvalidArgument, "label space needs at least 2 labels, got " +
                                                    std::to_string(size_));
    }
    if (!names_.empty()) {
        if (static_cast<int>(names_.size()) != size_) {
            throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(size_) +
                                                          " label names, got " +
                                                          std::to_string(names_.size()));
        }
        std::unordered_set<std::string> seen(names_.begin(), names_.end());
        if (seen.size() != names_.size()) {
            throw Error(ErrorKind::InvalidArgument, "label names must be distinct");
        }
    }
}

void LabelSpace::check(Label y) const {
    if (y < 0 || y >= size_) {
        throw Error(ErrorKind::UnknownLabel,
                    "label " + std::to_string(y) + " outside [0," + std::to_string(size_) + ")");
    }
}

std::vector<double> normalize_probabilities(std::span<const double> raw) {
    double sum = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = raw[i];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0 + kProbSumRejection) {
            throw Error(ErrorKind::InvalidProbability,
                        "entry " + std::to_string(i) + " = " + std::to_string(v) +
                            " is not a probability");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > kProbSumRejection) {
        throw Error(ErrorKind::InvalidProbability,
                    "probabilities sum to " + std::to_string(sum) + ", expected 1");
    }
    std::vector<double> out(raw.begin(), raw.end());
    // Rows already normalized up to summation rounding stay bit-identical.
    const double slack = static_cast<double>(std::max<std::size_t>(raw.size(), 8)) *
                         std::numeric_limits<double>::epsilon();
    if (std::abs(sum - 1.0) <= slack) {
        return out;
    }
    for (double& v : out) v /= sum;
    return out;
}

ProbVector::ProbVector(std::span<const double> raw) : probs_(normalize_probabilities(raw)) {
    if (probs_.size() < 2) {
        throw Error(ErrorKind::DimensionMismatch, "probability vector needs at least 2 entries");
    }
}

ProbVector::ProbVector(std::initializer_list<double> raw)
    : ProbVector(std::span<const double>(raw.begin(), raw.size())) {}

ScoreMatrix::ScoreMatrix(LabelSpace space, std::vector<std::string> ids,
                         std::vector<Label> labels, std::vector<double> flat_probs,
                         bool normalize)
    : space_(std::move(space)),
      ids_(std::move(ids)),
      labels_(std::move(labels)),
      probs_(std::move(flat_probs)) {
    const auto k = static_cast<std::size_t>(space_.size());
    if (ids_.size() != labels_.size() || probs_.size() != labels_.size() * k) {
        throw Error(ErrorKind::DimensionMismatch,
                    "score matrix with " + std::to_string(labels_.size()) + " labels, " +
                        std::to_string(ids_.size()) + " ids and " +
                        std::to_string(probs_.size()) + " probabilities for K=" +
                        std::to_string(k));
    }
    std::unordered_set<std::string> seen;
    seen.reserve(ids_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] < 0 || labels_[i] >= space_.size()) {
            throw Error(ErrorKind::LabelOutOfRange, "instance '" + ids_[i] + "' has label " +
                                                        std::to_string(labels_[i]));
        }
        if (!seen.insert(ids_[i]).second) {
            throw Error(ErrorKind::DuplicateId, "instance id '" + ids_[i] + "' repeated");
        }
        if (normalize) {
            auto row = std::span<double>(probs_).subspan(i * k, k);
            auto fixed = normalize_probabilities(row);
            std::copy(fixed.begin(), fixed.end(), row.begin());
        }
    }
}

std::span<const double> ScoreMatrix::row(std::size_t i) const {
    const auto k = static_cast<std::size_t>(space_.size());
    return std::span<const double>(probs_).subspan(i * k, k);
}

ScoreMatrix ScoreMatrix::subset(std::span<const std::size_t> rows) const {
    const auto k = static_cast<std::size_t>(space_.size());
    std::vector<std::string> ids;
    std::vector<Label> labels;
    std::vector<double> probs;
    ids.reserve(rows.size());
    labels.reserve(rows.size());
    probs.reserve(rows.size() * k);
    for (std::size_t r : rows) {
        ids.push_back(ids_.at(r));
        labels.push_back(labels_[r]);
        auto src = row(r);
        probs.insert(probs.end(), src.begin(), src.end());
    }
    return ScoreMatrix(space_, std::move(ids), std::move(labels), std::move(probs), false);
}

void SplitSpec::validate() const {
    for (double f : {validation, test, calibration}) {
        if (!(f >= 0.0) || f > 1.0) {
            throw Error(ErrorKind::InvalidArgument, "split fractions must lie in [0,1]");
        }
    }
    if (std::abs(validation + test + calibration - 1.0) > 1e-9) {
        throw Error(ErrorKind::InvalidArgument, "split fractions must sum to 1");
    }
}

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    // Rejection on the top of the range keeps the draw exactly uniform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Folds split(const ScoreMatrix& matrix, const SplitSpec& spec) {
    spec.validate();
    const std::size_t n = matrix.size();
    if (n < 3) {
        throw Error(ErrorKind::EmptyFold, "need at least 3 instances to split, got " +
                                              std::to_string(n));
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(spec.seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(perm[i], perm[bounded_draw(rng, i + 1)]);
    }

    const auto n_val = static_cast<std::size_t>(std::floor(spec.validation * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::floor(spec.test * static_cast<double>(n)));
    const std::size_t n_cal = n - n_val - n_test;

    auto check = [](double fraction, std::size_t size, const char* name) {
        if (fraction > 0.0 && size == 0) {
            throw Error(ErrorKind::EmptyFold, std::string(name) + " fold is empty");
        }
    };
    check(spec.validation, n_val, "validation");
    check(spec.test, n_test, "test");
    check(spec.calibration, n_cal, "calibration");

    std::span<const std::size_t> all(perm);
    return Folds{matrix.subset(all.subspan(0, n_val)), matrix.subset(all.subspan(n_val, n_test)),
                 matrix.subset(all.subspan(n_val + n_test))};
}

std::vector<Label> sort_descending(std::span<const double> probs) {
    std::vector<Label> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Label a, Label b) {
        const double pa = probs[static_cast<std::size_t>(a)];
        const double pb = probs[static_cast<std::size_t>(b)];
        if (pa != pb) return pa > pb;
        return a < b;
    });
    return order;
}

}  // namespace uconf
