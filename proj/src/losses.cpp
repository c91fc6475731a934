#include "uconf/losses.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

namespace uconf {

const char* to_string(CostKind kind) {
    switch (kind) {
        case CostKind::Separable: return "separable";
        case CostKind::MaxDistance: return "max-distance";
        case CostKind::Coverage: return "coverage";
    }
    return "unknown";
}

void CostModel::set_bound(double natural, std::optional<double> requested) {
    if (!requested) {
        bound_ = natural;
        return;
    }
    if (!std::isfinite(*requested) || *requested < natural) {
        throw Error(ErrorKind::InvalidArgument,
                    "loss bound may only be raised above the natural bound " + std::to_string(natural));
    }
    bound_ = *requested;
}

CostModel CostModel::separable(std::vector<double> penalties, std::optional<double> bound) {
    if (penalties.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "separable model needs at least 2 penalties");
    }
    double total = 0.0;
    for (std::size_t y = 0; y < penalties.size(); ++y) {
        if (!(penalties[y] > 0.0) || !std::isfinite(penalties[y])) {
            throw Error(ErrorKind::NonPositiveCost,
                        "penalty of label " + std::to_string(y) + " must be positive and finite");
        }
        total += penalties[y];
    }
    CostModel m;
    m.kind_ = CostKind::Separable;
    m.num_labels_ = static_cast<int>(penalties.size());
    m.penalties_ = std::move(penalties);
    m.set_bound(total, bound);
    return m;
}

CostModel CostModel::max_distance(std::shared_ptr<const Hierarchy> hierarchy,
                                  std::optional<double> bound) {
    if (!hierarchy) throw Error(ErrorKind::InvalidArgument, "max-distance model needs a hierarchy");
    CostModel m;
    m.kind_ = CostKind::MaxDistance;
    m.num_labels_ = hierarchy->num_labels();
    m.set_bound(static_cast<double>(hierarchy->diameter()), bound);
    m.hierarchy_ = std::move(hierarchy);
    return m;
}

CostModel CostModel::coverage(std::shared_ptr<const Hierarchy> hierarchy,
                              std::optional<double> bound) {
    if (!hierarchy) throw Error(ErrorKind::InvalidArgument, "coverage model needs a hierarchy");
    CostModel m = coverage(hierarchy->categories(), hierarchy->num_labels(), bound);
    m.hierarchy_ = std::move(hierarchy);
    return m;
}

CostModel CostModel::coverage(std::vector<LabelSet> categories, int num_labels,
                              std::optional<double> bound) {
    if (num_labels < 2) throw Error(ErrorKind::InvalidArgument, "coverage model needs K >= 2");
    if (categories.empty()) throw Error(ErrorKind::InvalidArgument, "coverage model needs categories");
    CostModel m;
    m.kind_ = CostKind::Coverage;
    m.num_labels_ = num_labels;
    m.label_categories_.resize(static_cast<std::size_t>(num_labels));
    for (auto& cat : categories) {
        std::sort(cat.begin(), cat.end());
        cat.erase(std::unique(cat.begin(), cat.end()), cat.end());
        if (cat.empty()) throw Error(ErrorKind::InvalidArgument, "empty category");
        for (Label y : cat) {
            m.check_label(y);
            m.label_categories_[static_cast<std::size_t>(y)].push_back(
                static_cast<int>(&cat - categories.data()));
        }
    }
    m.categories_ = std::move(categories);
    m.set_bound(static_cast<double>(m.categories_.size()), bound);
    return m;
}

void CostModel::check_label(Label y) const {
    if (y < 0 || y >= num_labels_) {
        throw Error(ErrorKind::UnknownLabel, "label " + std::to_string(y) + " outside [0," +
                                                 std::to_string(num_labels_) + ")");
    }
}

const std::vector<int>& CostModel::categories_of(Label y) const {
    check_label(y);
    return label_categories_.at(static_cast<std::size_t>(y));
}

double CostModel::penalty(Label y) const {
    check_label(y);
    if (kind_ != CostKind::Separable) {
        throw Error(ErrorKind::InvalidArgument, "penalty() needs a separable cost model");
    }
    return penalties_[static_cast<std::size_t>(y)];
}

double CostModel::set_loss(std::span<const Label> set) const {
    LabelSet s(set.begin(), set.end());
    for (Label y : s) check_label(y);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());

    switch (kind_) {
        case CostKind::Separable: {
            double total = 0.0;
            for (Label y : s) total += penalties_[static_cast<std::size_t>(y)];
            return total;
        }
        case CostKind::MaxDistance: {
            int best = 0;
            for (std::size_t i = 0; i < s.size(); ++i) {
                for (std::size_t j = i + 1; j < s.size(); ++j) {
                    best = std::max(best, hierarchy_->tree_distance(s[i], s[j]));
                }
            }
            return best;
        }
        case CostKind::Coverage: {
            std::vector<char> hit(categories_.size(), 0);
            int count = 0;
            for (Label y : s) {
                for (int c : label_categories_[static_cast<std::size_t>(y)]) {
                    if (!hit[static_cast<std::size_t>(c)]) {
                        hit[static_cast<std::size_t>(c)] = 1;
                        ++count;
                    }
                }
            }
            return count;
        }
    }
    return 0.0;
}

std::vector<double> CostModel::marginal_gains(std::span<const Label> order) const {
    LossAccumulator acc(*this);
    std::vector<double> gains;
    gains.reserve(order.size());
    for (Label y : order) {
        check_label(y);
        if (acc.contains(y)) {
            throw Error(ErrorKind::DuplicateLabel, "label " + std::to_string(y) + " repeated in order");
        }
        gains.push_back(acc.gain(y));
        acc.add(y);
    }
    return gains;
}

namespace {

void append_double(std::string& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t CostModel::digest() const {
    std::string canon = to_string(kind_);
    canon += ';' + std::to_string(num_labels_) + ";bound=";
    append_double(canon, bound_);
    switch (kind_) {
        case CostKind::Separable:
            for (double p : penalties_) {
                canon += ',';
                append_double(canon, p);
            }
            break;
        case CostKind::MaxDistance:
            for (int d : hierarchy_->distance_table()) canon += ',' + std::to_string(d);
            break;
        case CostKind::Coverage: {
            auto cats = categories_;
            std::sort(cats.begin(), cats.end());
            for (const auto& cat : cats) {
                canon += '|';
                for (Label y : cat) canon += std::to_string(y) + ',';
            }
            break;
        }
    }
    return fnv1a(canon);
}

std::string CostModel::describe() const {
    std::ostringstream os;
    os << to_string(kind_) << " K=" << num_labels_ << " bound=" << bound_;
    if (kind_ == CostKind::Coverage) os << " categories=" << categories_.size();
    return os.str();
}

LossAccumulator::LossAccumulator(const CostModel& model)
    : model_(&model), member_(static_cast<std::size_t>(model.num_labels()), 0) {
    if (model.kind() == CostKind::Coverage) category_hit_.assign(model.categories().size(), 0);
    if (model.kind() == CostKind::MaxDistance) {
        max_dist_.assign(static_cast<std::size_t>(model.num_labels()), 0);
    }
}

double LossAccumulator::gain(Label y) const {
    switch (model_->kind()) {
        case CostKind::Separable:
            return model_->penalties()[static_cast<std::size_t>(y)];
        case CostKind::MaxDistance: {
            if (members_.empty()) return 0.0;
            const double reach = max_dist_[static_cast<std::size_t>(y)];
            return reach > loss_ ? reach - loss_ : 0.0;
        }
        case CostKind::Coverage: {
            int fresh = 0;
            for (int c : model_->categories_of(y)) fresh += category_hit_[static_cast<std::size_t>(c)] ? 0 : 1;
            return fresh;
        }
    }
    return 0.0;
}

void LossAccumulator::add(Label y) {
    model_->check_label(y);
    if (contains(y)) {
        throw Error(ErrorKind::DuplicateLabel, "label " + std::to_string(y) + " already in set");
    }
    loss_ += gain(y);
    member_[static_cast<std::size_t>(y)] = 1;
    members_.push_back(y);
    if (model_->kind() == CostKind::Coverage) {
        for (int c : model_->categories_of(y)) category_hit_[static_cast<std::size_t>(c)] = 1;
    } else if (model_->kind() == CostKind::MaxDistance) {
        const auto& table = model_->hierarchy()->distance_table();
        const int k = model_->num_labels();
        for (int other = 0; other < k; ++other) {
            auto& slot = max_dist_[static_cast<std::size_t>(other)];
            slot = std::max(slot, table[static_cast<std::size_t>(y * k + other)]);
        }
    }
}

bool is_separable_witness(const CostModel& model, std::uint64_t seed) {
    if (model.kind() == CostKind::Separable) return true;
    if (model.kind() == CostKind::Coverage) {
        // L(C) = 1 while the singleton losses over C add up to |C|.
        for (const auto& cat : model.categories()) {
            if (cat.size() >= 2) return false;
        }
    }
    const int k = model.num_labels();
    std::vector<double> single(static_cast<std::size_t>(k));
    for (Label y = 0; y < k; ++y) single[static_cast<std::size_t>(y)] = model.set_loss(std::span(&y, 1));

    auto order_independent = [&](std::uint64_t mask) {
        LabelSet set;
        for (Label y = 0; y < k; ++y) {
            if (mask >> y & 1U) set.push_back(y);
        }
        const double base = model.set_loss(set);
        for (Label y = 0; y < k; ++y) {
            if (mask >> y & 1U) continue;
            set.push_back(y);
            const double with = model.set_loss(set);
            set.pop_back();
            if (with - base != single[static_cast<std::size_t>(y)]) return false;
        }
        return true;
    };

    if (k <= 8) {
        for (std::uint64_t mask = 0; mask < (1ULL << k); ++mask) {
            if (!order_independent(mask)) return false;
        }
        return true;
    }
    // Sampled check on random sets, using the first 64 labels for the mask.
    std::mt19937_64 rng(seed);
    const int width = std::min(k, 64);
    for (int trial = 0; trial < 512; ++trial) {
        std::uint64_t mask = rng();
        if (width < 64) mask &= (1ULL << width) - 1;
        if (!order_independent(mask)) return false;
    }
    return true;
}

}  // namespace uconf
