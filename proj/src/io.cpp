#include "uconf/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <system_error>
#include <unordered_map>
#include <unistd.h>

namespace uconf {

namespace {

constexpr std::string_view kPredictorMagic = "uconf-predictor v1";

struct Line {
    std::size_t number;  // 1-based
    std::string_view text;
};

std::vector<Line> split_lines(std::string_view text) {
    std::vector<Line> lines;
    std::size_t number = 1;
    std::size_t start = 0;
    if (text.starts_with("\xEF\xBB\xBF")) start = 3;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back({number++, line});
        start = end + 1;
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

[[noreturn]] void parse_fail(const std::string& source, std::size_t row, std::size_t column,
                             const std::string& message) {
    throw Error(ErrorKind::ParseError, source + ": row " + std::to_string(row) + ", column " +
                                           std::to_string(column) + ": " + message);
}

long long parse_integer(std::string_view text, const std::string& source, std::size_t row,
                        std::size_t column) {
    text = trim(text);
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        parse_fail(source, row, column, "expected an integer, got '" + std::string(text) + "'");
    }
    return value;
}

double parse_number(std::string_view text, const std::string& source, std::size_t row,
                    std::size_t column) {
    try {
        return parse_double(trim(text));
    } catch (const Error&) {
        parse_fail(source, row, column, "expected a number, got '" + std::string(trim(text)) + "'");
    }
}

bool looks_like_integer(std::string_view text) {
    text = trim(text);
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    if (ec != std::errc()) throw Error(ErrorKind::InvalidArgument, "cannot format double");
    return std::string(buffer, ptr);
}

double parse_double(std::string_view text) {
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double value = 0.0;
    const char* begin = text.data();
    if (!text.empty() && text.front() == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw Error(ErrorKind::ParseError, "not a number: '" + std::string(text) + "'");
    }
    return value;
}

ScoreMatrix parse_scores(std::string_view text, const std::string& source) {
    const auto lines = split_lines(text);
    std::size_t first = 0;
    while (first < lines.size() && is_blank(lines[first].text)) ++first;
    if (first == lines.size()) throw Error(ErrorKind::ParseError, source + ": empty score file");

    const auto header = split_fields(lines[first].text);
    const std::size_t header_row = lines[first].number;
    if (header.size() < 4 || trim(header[0]) != "id" || trim(header[1]) != "label") {
        parse_fail(source, header_row, 1, "header must be id,label,p_0,...,p_{K-1} with K >= 2");
    }
    const int k = static_cast<int>(header.size()) - 2;
    for (int y = 0; y < k; ++y) {
        if (trim(header[static_cast<std::size_t>(y) + 2]) != "p_" + std::to_string(y)) {
            parse_fail(source, header_row, static_cast<std::size_t>(y) + 3,
                       "expected column p_" + std::to_string(y));
        }
    }

    std::vector<std::string> ids;
    std::vector<Label> labels;
    std::vector<double> probs;
    std::vector<double> row(static_cast<std::size_t>(k));
    for (std::size_t li = first + 1; li < lines.size(); ++li) {
        const auto& line = lines[li];
        if (is_blank(line.text)) continue;
        const auto fields = split_fields(line.text);
        if (fields.size() != header.size()) {
            throw Error(ErrorKind::DimensionMismatch,
                        source + ": row " + std::to_string(line.number) + " has " +
                            std::to_string(fields.size()) + " columns, header has " +
                            std::to_string(header.size()));
        }
        const std::string id(trim(fields[0]));
        if (id.empty()) parse_fail(source, line.number, 1, "empty id");
        const long long label = parse_integer(fields[1], source, line.number, 2);
        if (label < 0 || label >= k) {
            throw Error(ErrorKind::LabelOutOfRange, source + ": row " + std::to_string(line.number) +
                                                       ": label " + std::to_string(label) +
                                                       " outside [0, " + std::to_string(k) + ")");
        }
        for (int y = 0; y < k; ++y) {
            row[static_cast<std::size_t>(y)] =
                parse_number(fields[static_cast<std::size_t>(y) + 2], source, line.number,
                             static_cast<std::size_t>(y) + 3);
        }
        std::vector<double> fixed;
        try {
            fixed = normalize_probabilities(row);
        } catch (const Error& e) {
            throw Error(e.kind(), source + ": row " + std::to_string(line.number) + ": " + e.what());
        }
        ids.push_back(id);
        labels.push_back(static_cast<Label>(label));
        probs.insert(probs.end(), fixed.begin(), fixed.end());
    }
    return ScoreMatrix(LabelSpace(k), std::move(ids), std::move(labels), std::move(probs));
}

ScoreMatrix load_scores(const std::filesystem::path& path) {
    return parse_scores(read_file(path), path.string());
}

std::string scores_to_csv(const ScoreMatrix& matrix) {
    std::string out = "id,label";
    for (int y = 0; y < matrix.num_labels(); ++y) out += ",p_" + std::to_string(y);
    out += '\n';
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        out += matrix.id(i);
        out += ',';
        out += std::to_string(matrix.label(i));
        for (double p : matrix.row(i)) {
            out += ',';
            out += format_double(p);
        }
        out += '\n';
    }
    return out;
}

Hierarchy parse_hierarchy(std::string_view text, const std::string& source) {
    const auto lines = split_lines(text);
    std::vector<Hierarchy::Edge> edges;
    std::map<long long, std::string> leaf_by_label;
    int section = 0;  // 0 edges, 1 label mapping
    bool section_started = false;
    for (const auto& line : lines) {
        if (is_blank(line.text)) {
            if (section == 0 && section_started) {
                section = 1;
                section_started = false;
            }
            continue;
        }
        const auto fields = split_fields(line.text);
        if (fields.size() != 2) parse_fail(source, line.number, 1, "expected two columns");
        const auto a = trim(fields[0]);
        const auto b = trim(fields[1]);
        const bool first_of_section = !section_started;
        section_started = true;
        if (section == 0) {
            if (first_of_section && a == "child" && b == "parent") continue;
            if (a.empty() || b.empty()) parse_fail(source, line.number, a.empty() ? 1 : 2, "empty node name");
            edges.push_back({std::string(a), std::string(b)});
        } else {
            if (first_of_section && !looks_like_integer(a)) continue;  // header
            const long long label = parse_integer(a, source, line.number, 1);
            if (b.empty()) parse_fail(source, line.number, 2, "empty leaf name");
            if (label < 0) {
                throw Error(ErrorKind::LabelOutOfRange,
                            source + ": row " + std::to_string(line.number) + ": negative label id");
            }
            if (!leaf_by_label.emplace(label, std::string(b)).second) {
                throw Error(ErrorKind::DuplicateLabel, source + ": row " + std::to_string(line.number) +
                                                           ": label " + std::to_string(label) +
                                                           " mapped twice");
            }
        }
    }
    if (section == 0) {
        throw Error(ErrorKind::ParseError,
                    source + ": missing label mapping section (separate it from the edges with a blank line)");
    }
    std::vector<std::string> leaf_of_label;
    for (const auto& [label, leaf] : leaf_by_label) {
        if (label != static_cast<long long>(leaf_of_label.size())) {
            throw Error(ErrorKind::UnknownLabel,
                        source + ": label ids must cover 0..K-1; missing " + std::to_string(leaf_of_label.size()));
        }
        leaf_of_label.push_back(leaf);
    }
    return Hierarchy::from_edges(edges, leaf_of_label);
}

Hierarchy load_hierarchy(const std::filesystem::path& path) {
    return parse_hierarchy(read_file(path), path.string());
}

std::string hierarchy_to_text(const Hierarchy& hierarchy) {
    std::string out = "child,parent\n";
    for (int node = 0; node < hierarchy.num_nodes(); ++node) {
        if (node == hierarchy.root()) continue;
        out += hierarchy.node_name(node) + ',' + hierarchy.node_name(hierarchy.parent(node)) + '\n';
    }
    out += "\nlabel_id,leaf_name\n";
    for (Label y = 0; y < hierarchy.num_labels(); ++y) {
        out += std::to_string(y) + ',' + hierarchy.node_name(hierarchy.leaf_of(y)) + '\n';
    }
    return out;
}

std::string costs_to_csv(const std::vector<double>& costs) {
    std::string out = "label_id,cost\n";
    for (std::size_t y = 0; y < costs.size(); ++y) out += std::to_string(y) + ',' + format_double(costs[y]) + '\n';
    return out;
}

std::vector<double> parse_costs(std::string_view text, int num_labels, const std::string& source) {
    if (num_labels < 1) throw Error(ErrorKind::InvalidArgument, "cost table needs K >= 1");
    const auto lines = split_lines(text);
    std::vector<double> costs(static_cast<std::size_t>(num_labels), 0.0);
    std::vector<char> seen(static_cast<std::size_t>(num_labels), 0);
    bool first = true;
    for (const auto& line : lines) {
        if (is_blank(line.text)) continue;
        const auto fields = split_fields(line.text);
        if (fields.size() != 2) parse_fail(source, line.number, 1, "expected label_id,cost");
        if (first && !looks_like_integer(fields[0])) {
            first = false;
            continue;
        }
        first = false;
        const long long label = parse_integer(fields[0], source, line.number, 1);
        if (label < 0 || label >= num_labels) {
            throw Error(ErrorKind::UnknownLabel, source + ": row " + std::to_string(line.number) +
                                                     ": label " + std::to_string(label) +
                                                     " outside [0, " + std::to_string(num_labels) + ")");
        }
        const double cost = parse_number(fields[1], source, line.number, 2);
        if (!(cost > 0.0) || !std::isfinite(cost)) {
            throw Error(ErrorKind::NonPositiveCost, source + ": row " + std::to_string(line.number) +
                                                        ": cost of label " + std::to_string(label) +
                                                        " must be positive and finite");
        }
        auto& flag = seen[static_cast<std::size_t>(label)];
        if (flag) {
            throw Error(ErrorKind::DuplicateLabel, source + ": row " + std::to_string(line.number) +
                                                       ": label " + std::to_string(label) + " listed twice");
        }
        flag = 1;
        costs[static_cast<std::size_t>(label)] = cost;
    }
    std::string missing;
    for (int y = 0; y < num_labels; ++y) {
        if (!seen[static_cast<std::size_t>(y)]) {
            if (!missing.empty()) missing += ", ";
            missing += std::to_string(y);
        }
    }
    if (!missing.empty()) {
        throw Error(ErrorKind::UnknownLabel, source + ": no cost for label ids " + missing);
    }
    return costs;
}

std::vector<double> load_costs(const std::filesystem::path& path, int num_labels) {
    return parse_costs(read_file(path), num_labels, path.string());
}

CategoryList parse_categories(std::string_view text, int num_labels, const std::string& source) {
    const auto lines = split_lines(text);
    CategoryList out;
    std::unordered_map<std::string, std::size_t> index;
    bool first = true;
    for (const auto& line : lines) {
        if (is_blank(line.text)) continue;
        const auto fields = split_fields(line.text);
        if (fields.size() != 2) parse_fail(source, line.number, 1, "expected category_name,label_id");
        if (first && !looks_like_integer(fields[1])) {
            first = false;
            continue;
        }
        first = false;
        const std::string name(trim(fields[0]));
        if (name.empty()) parse_fail(source, line.number, 1, "empty category name");
        const long long label = parse_integer(fields[1], source, line.number, 2);
        if (label < 0 || label >= num_labels) {
            throw Error(ErrorKind::UnknownLabel, source + ": row " + std::to_string(line.number) +
                                                     ": label " + std::to_string(label) +
                                                     " outside [0, " + std::to_string(num_labels) + ")");
        }
        auto [it, inserted] = index.emplace(name, out.names.size());
        if (inserted) {
            out.names.push_back(name);
            out.members.emplace_back();
        }
        out.members[it->second].push_back(static_cast<Label>(label));
    }
    if (out.names.empty()) throw Error(ErrorKind::EmptyInput, source + ": no categories");
    for (auto& m : out.members) {
        std::sort(m.begin(), m.end());
        m.erase(std::unique(m.begin(), m.end()), m.end());
    }
    return out;
}

CategoryList load_categories(const std::filesystem::path& path, int num_labels) {
    return parse_categories(read_file(path), num_labels, path.string());
}

std::string predictor_to_text(const CalibratedPredictor& predictor, const CostModel* recorded_cost) {
    const ScoreMethod& m = predictor.method;
    const CostModel* cost = recorded_cost ? recorded_cost : m.cost().get();
    std::string out(kPredictorMagic);
    out += '\n';
    out += "method=" + std::string(to_string(m.kind())) + '\n';
    out += "lambda=" + format_double(m.lambda()) + '\n';
    out += "method_alpha=" + format_double(m.alpha()) + '\n';
    out += "alpha=" + format_double(predictor.alpha) + '\n';
    out += "n=" + std::to_string(predictor.calibration_size) + '\n';
    out += "threshold=" + format_double(predictor.threshold) + '\n';
    out += std::string("negated=") + (predictor.negated() ? "1" : "0") + '\n';
    if (cost) {
        char hex[17];
        const auto [ptr, ec] = std::to_chars(hex, hex + 16, cost->digest(), 16);
        (void)ec;
        out += "cost_digest=" + std::string(hex, ptr) + '\n';
    } else {
        out += "cost_digest=none\n";
    }
    return out;
}

CalibratedPredictor predictor_from_text(std::string_view text, std::shared_ptr<const CostModel> cost) {
    const std::string source = "predictor";
    const auto lines = split_lines(text);
    std::size_t li = 0;
    while (li < lines.size() && is_blank(lines[li].text)) ++li;
    if (li == lines.size() || trim(lines[li].text) != kPredictorMagic) {
        throw Error(ErrorKind::ParseError, "predictor: missing '" + std::string(kPredictorMagic) + "' header");
    }
    std::map<std::string, std::pair<std::string, std::size_t>> kv;
    for (++li; li < lines.size(); ++li) {
        if (is_blank(lines[li].text)) continue;
        const auto eq = lines[li].text.find('=');
        if (eq == std::string_view::npos) parse_fail(source, lines[li].number, 1, "expected key=value");
        kv[std::string(trim(lines[li].text.substr(0, eq)))] = {
            std::string(trim(lines[li].text.substr(eq + 1))), lines[li].number};
    }
    auto get = [&](const std::string& key) -> const std::pair<std::string, std::size_t>& {
        auto it = kv.find(key);
        if (it == kv.end()) throw Error(ErrorKind::ParseError, "predictor: missing key '" + key + "'");
        return it->second;
    };
    auto number = [&](const std::string& key) {
        const auto& [value, row] = get(key);
        return parse_number(value, source, row, 1);
    };

    MethodKind kind;
    try {
        kind = parse_method_kind(get("method").first);
    } catch (const Error& e) {
        throw Error(ErrorKind::ParseError, std::string("predictor: ") + e.what());
    }
    const double lambda = number("lambda");
    const double method_alpha = number("method_alpha");
    const double alpha = number("alpha");
    const auto& [n_text, n_row] = get("n");
    const long long n = parse_integer(n_text, source, n_row, 1);
    if (n < 1) parse_fail(source, n_row, 1, "calibration size must be positive");
    const double threshold = number("threshold");
    const std::string& digest_text = get("cost_digest").first;

    if (kind != MethodKind::Base && !cost) {
        throw Error(ErrorKind::InvalidArgument,
                    std::string("predictor uses method '") + to_string(kind) + "' and needs its cost model");
    }
    if (cost && digest_text != "none") {
        std::uint64_t recorded = 0;
        const auto [ptr, ec] =
            std::from_chars(digest_text.data(), digest_text.data() + digest_text.size(), recorded, 16);
        if (ec != std::errc() || ptr != digest_text.data() + digest_text.size()) {
            throw Error(ErrorKind::ParseError, "predictor: bad cost_digest '" + digest_text + "'");
        }
        if (recorded != cost->digest()) {
            throw Error(ErrorKind::DigestMismatch,
                        "predictor was calibrated against a different cost model (" + cost->describe() + ")");
        }
    } else if (kind != MethodKind::Base && digest_text == "none") {
        throw Error(ErrorKind::ParseError, "predictor: method needs a cost digest");
    }

    CalibratedPredictor out;
    switch (kind) {
        case MethodKind::Base: out.method = ScoreMethod::base(); break;
        case MethodKind::Penalized: out.method = ScoreMethod::penalized(cost, lambda); break;
        case MethodKind::Ratio: out.method = ScoreMethod::ratio(cost); break;
        case MethodKind::GreedyOrder: out.method = ScoreMethod::greedy_order(cost, method_alpha); break;
    }
    check_alpha(alpha);
    out.alpha = alpha;
    out.threshold = threshold;
    out.calibration_size = static_cast<std::size_t>(n);
    const auto& negated = get("negated").first;
    if ((negated == "1") != out.negated()) {
        throw Error(ErrorKind::ParseError, "predictor: negated flag inconsistent with method");
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw Error(ErrorKind::IoError, "failed reading '" + path.string() + "'");
    return std::move(buffer).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoError, "cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw Error(ErrorKind::IoError, "failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw Error(ErrorKind::IoError, "cannot move output into '" + path.string() + "': " + ec.message());
    }
}

}  // namespace uconf
