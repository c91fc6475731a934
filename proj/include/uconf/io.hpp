#pragma once
// File formats: score matrices, hierarchies, penalty tables, category lists
// and serialized predictors. Every loader has a string-based twin so tests
// can skip the filesystem. Fields are plain comma-separated values without
// quoting, so ids and names must not contain commas.

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "uconf/conformal.hpp"
#include "uconf/core.hpp"
#include "uconf/hierarchy.hpp"
#include "uconf/losses.hpp"

namespace uconf {

/// Header `id,label,p_0,...,p_{K-1}`, one instance per row. LF or CRLF.
ScoreMatrix parse_scores(std::string_view text, const std::string& source = "<input>");
ScoreMatrix load_scores(const std::filesystem::path& path);
std::string scores_to_csv(const ScoreMatrix& matrix);

/// `child,parent` edges, a blank line, then `label_id,leaf_name` rows. Either
/// section may start with a header line naming its columns.
Hierarchy parse_hierarchy(std::string_view text, const std::string& source = "<input>");
Hierarchy load_hierarchy(const std::filesystem::path& path);
/// Inverse of parse_hierarchy; edges are listed in node order.
std::string hierarchy_to_text(const Hierarchy& hierarchy);

/// `label_id,cost` rows (optional header); every label in [0, K) exactly once.
std::vector<double> parse_costs(std::string_view text, int num_labels,
                                const std::string& source = "<input>");
std::vector<double> load_costs(const std::filesystem::path& path, int num_labels);
std::string costs_to_csv(const std::vector<double>& costs);

struct CategoryList {
    std::vector<std::string> names;
    std::vector<LabelSet> members;  // aligned with names, sorted ascending
};

/// `category_name,label_id` rows (optional header); categories may overlap.
CategoryList parse_categories(std::string_view text, int num_labels,
                              const std::string& source = "<input>");
CategoryList load_categories(const std::filesystem::path& path, int num_labels);

/// Versioned key=value record. Doubles are written in shortest round-trip form.
/// The stored digest is that of `recorded_cost` if given, else of the method's
/// own cost model; Base predictors without either record "none".
std::string predictor_to_text(const CalibratedPredictor& predictor,
                              const CostModel* recorded_cost = nullptr);

/// `cost` must be supplied for every method except Base and must match the
/// recorded digest. For Base a recorded digest is checked only when a cost is given.
CalibratedPredictor predictor_from_text(std::string_view text,
                                        std::shared_ptr<const CostModel> cost);

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal form that parses back to the same double; "inf"/"-inf"/"nan" otherwise.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace uconf
