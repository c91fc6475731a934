#pragma once
// Domain types shared by every module: labels, probability rows, score
// matrices, dataset splits and the library-wide error type.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uconf {

enum class ErrorKind {
    InvalidArgument,
    InvalidAlpha,
    InvalidProbability,
    DimensionMismatch,
    DuplicateId,
    EmptyFold,
    UnknownLabel,
    DuplicateLabel,
    ZeroPenalty,
    NonPositiveCost,
    MissingBound,
    EmptyCalibration,
    EmptyTest,
    EmptyInput,
    MissingBaseline,
    IncompatibleReports,
    InvalidTask,
    TooLarge,
    ParseError,
    LabelOutOfRange,
    CycleDetected,
    OrphanLabel,
    InvalidHierarchy,
    DigestMismatch,
    IoError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

using Label = int;
using LabelSet = std::vector<Label>;  // kept sorted ascending where produced by the library

class LabelSpace {
public:
    explicit LabelSpace(int size, std::vector<std::string> names = {});

    int size() const noexcept { return size_; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    bool has_names() const noexcept { return !names_.empty(); }
    void check(Label y) const;

private:
    int size_;
    std::vector<std::string> names_;
};

/// Tolerances applied to raw probability rows on ingest.
inline constexpr double kProbSumTolerance = 1e-4;
inline constexpr double kProbSumRejection = 1e-2;

/// Validates a raw row and rescales it to sum to one. Rows whose sum is off by
/// more than kProbSumRejection are rejected. Already-normalized rows (sum within
/// a few ulps of one) are returned untouched, which makes the operation
/// idempotent.
std::vector<double> normalize_probabilities(std::span<const double> raw);

class ProbVector {
public:
    ProbVector() = default;
    explicit ProbVector(std::span<const double> raw);
    ProbVector(std::initializer_list<double> raw);

    int size() const noexcept { return static_cast<int>(probs_.size()); }
    double operator[](Label y) const { return probs_[static_cast<std::size_t>(y)]; }
    std::span<const double> view() const noexcept { return probs_; }
    operator std::span<const double>() const noexcept { return probs_; }

private:
    std::vector<double> probs_;
};

/// Probability rows of n instances with their true labels, stored row-major.
class ScoreMatrix {
public:
    ScoreMatrix(LabelSpace space, std::vector<std::string> ids, std::vector<Label> labels,
                std::vector<double> flat_probs, bool normalize = true);

    const LabelSpace& label_space() const noexcept { return space_; }
    int num_labels() const noexcept { return space_.size(); }
    std::size_t size() const noexcept { return labels_.size(); }
    bool empty() const noexcept { return labels_.empty(); }

    const std::string& id(std::size_t i) const { return ids_[i]; }
    Label label(std::size_t i) const { return labels_[i]; }
    std::span<const double> row(std::size_t i) const;

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::vector<Label>& labels() const noexcept { return labels_; }
    const std::vector<double>& flat() const noexcept { return probs_; }

    ScoreMatrix subset(std::span<const std::size_t> rows) const;

private:
    LabelSpace space_;
    std::vector<std::string> ids_;
    std::vector<Label> labels_;
    std::vector<double> probs_;
};

struct SplitSpec {
    double validation = 0.25;
    double test = 0.25;
    double calibration = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Folds {
    ScoreMatrix validation;
    ScoreMatrix test;
    ScoreMatrix calibration;
};

/// Fold sizes are floor(f * n) for validation and test; the remainder goes to
/// calibration. A fold with a positive fraction must not come out empty.
Folds split(const ScoreMatrix& matrix, const SplitSpec& spec);

/// Label permutation by descending probability, ties by ascending label id.
std::vector<Label> sort_descending(std::span<const double> probs);

/// Uniform integer in [0, bound) drawn from a 64-bit Mersenne stream by
/// rejection; portable across standard library implementations.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound);

/// splitmix64 step, used to derive independent per-run seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace uconf
