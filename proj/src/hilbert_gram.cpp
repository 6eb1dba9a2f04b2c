#include "episcan/hilbert_gram.hpp"

#include "episcan/errors.hpp"
#include "episcan/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace episcan {

ObservationField::ObservationField(LatticeShape shape, Index p)
    : shape_(std::move(shape)), p_(p), data_(shape_.points() * p, 0.0) {
    if (p_ == 0) {
        throw ConfigError("observation dimension p must be positive");
    }
}

ObservationField::ObservationField(LatticeShape shape, Index p, std::vector<double> data)
    : shape_(std::move(shape)), p_(p), data_(std::move(data)) {
    if (p_ == 0) {
        throw ConfigError("observation dimension p must be positive");
    }
    if (data_.size() != shape_.points() * p_) {
        throw ConfigError("field data has " + std::to_string(data_.size()) + " values, expected " +
                          std::to_string(shape_.points() * p_));
    }
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw DataError("field contains a non-finite value");
        }
    }
}

bool ObservationField::is_constant() const {
    for (Index i = 1; i < points(); ++i) {
        if (!std::equal(data_.begin(), data_.begin() + p_, data_.begin() + i * p_)) {
            return false;
        }
    }
    return true;
}

void WeightSpec::validate() const {
    if (coords.empty()) {
        throw ConfigError("weight needs at least one coordinate");
    }
    for (const auto& c : coords) {
        if (const auto* g = std::get_if<GaussianWeight>(&c)) {
            if (!(g->scale > 0.0) || !std::isfinite(g->location) || !std::isfinite(g->scale)) {
                throw ConfigError("gaussian weight needs finite location and positive scale");
            }
        } else if (const auto* u = std::get_if<UniformWeight>(&c)) {
            if (!(u->a < u->b) || !std::isfinite(u->a) || !std::isfinite(u->b)) {
                throw ConfigError("uniform weight needs finite a < b");
            }
        }
    }
}

std::string to_string(const CoordinateWeight& w) {
    std::ostringstream os;
    os.precision(17);
    if (const auto* g = std::get_if<GaussianWeight>(&w)) {
        os << "gaussian:" << g->location << ':' << g->scale;
    } else {
        const auto& u = std::get<UniformWeight>(w);
        os << "uniform:" << u.a << ':' << u.b;
    }
    return os.str();
}

std::string WeightSpec::to_string() const {
    std::string out;
    for (Index l = 0; l < coords.size(); ++l) {
        out += (l ? "," : "") + episcan::to_string(coords[l]);
    }
    return out;
}

CoordinateWeight parse_coordinate_weight(const std::string& text) {
    const auto first = text.find(':');
    const auto second = first == std::string::npos ? std::string::npos : text.find(':', first + 1);
    if (second == std::string::npos || text.find(':', second + 1) != std::string::npos) {
        throw ConfigError("weight must look like gaussian:LOC:SCALE or uniform:A:B, got '" + text + "'");
    }
    const std::string kind = text.substr(0, first);
    double x = 0.0;
    double y = 0.0;
    try {
        std::size_t used = 0;
        const std::string xs = text.substr(first + 1, second - first - 1);
        const std::string ys = text.substr(second + 1);
        x = std::stod(xs, &used);
        if (used != xs.size()) {
            throw std::invalid_argument(xs);
        }
        y = std::stod(ys, &used);
        if (used != ys.size()) {
            throw std::invalid_argument(ys);
        }
    } catch (const std::exception&) {
        throw ConfigError("weight parameters are not numbers in '" + text + "'");
    }
    CoordinateWeight w;
    if (kind == "gaussian") {
        w = GaussianWeight{x, y};
    } else if (kind == "uniform") {
        w = UniformWeight{x, y};
    } else {
        throw ConfigError("unknown weight family '" + kind + "'");
    }
    WeightSpec{{w}}.validate();
    return w;
}

namespace {

double coordinate_survival(const CoordinateWeight& w, double t) {
    if (const auto* g = std::get_if<GaussianWeight>(&w)) {
        return 0.5 * std::erfc((t - g->location) / (g->scale * std::sqrt(2.0)));
    }
    const auto& u = std::get<UniformWeight>(w);
    return std::clamp((u.b - t) / (u.b - u.a), 0.0, 1.0);
}

}  // namespace

double weight_survival(const WeightSpec& w, std::span<const double> t) {
    if (t.size() != w.p()) {
        throw ConfigError("weight has " + std::to_string(w.p()) + " coordinates, point has " +
                          std::to_string(t.size()));
    }
    double s = 1.0;
    for (Index l = 0; l < t.size(); ++l) {
        s *= coordinate_survival(w.coords[l], t[l]);
    }
    return s;
}

void GramMatrix::refresh_sums() {
    const Index n = size();
    row_sums.assign(n, 0.0);
    total_sum = 0.0;
    for (Index i = 0; i < n; ++i) {
        double s = 0.0;
        const double* row = entries.data() + i * n;
        for (Index j = 0; j < n; ++j) {
            s += row[j];
        }
        row_sums[i] = s;
        total_sum += s;
    }
}

namespace {

/// Fills the upper triangle with pair(i, j), mirrors it, then computes sums.
template <class PairFn>
GramMatrix symmetric_gram(const LatticeShape& shape, unsigned threads, PairFn pair) {
    GramMatrix g;
    g.shape = shape;
    const Index n = shape.points();
    g.entries.assign(n * n, 0.0);
    parallel_for(n, threads, [&](std::size_t i, unsigned) {
        double* row = g.entries.data() + i * n;
        for (Index j = i; j < n; ++j) {
            row[j] = pair(i, j);
        }
    });
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < i; ++j) {
            g.entries[i * n + j] = g.entries[j * n + i];
        }
    }
    g.refresh_sums();
    return g;
}

}  // namespace

GramMatrix gram_indicator_cvm(const ObservationField& field, const WeightSpec& w, unsigned threads) {
    w.validate();
    const Index p = field.p();
    if (w.p() != p) {
        throw ConfigError("weight has " + std::to_string(w.p()) + " coordinates but observations have p=" +
                          std::to_string(p));
    }
    if (p == 1) {
        // Survival is non-increasing, so S(max(x, y)) = min(S(x), S(y)).
        std::vector<double> surv(field.points());
        for (Index i = 0; i < field.points(); ++i) {
            surv[i] = coordinate_survival(w.coords[0], field.at(i)[0]);
        }
        return symmetric_gram(field.shape(), threads,
                              [&](Index i, Index j) { return std::min(surv[i], surv[j]); });
    }
    return symmetric_gram(field.shape(), threads, [&](Index i, Index j) {
        const auto xi = field.at(i);
        const auto xj = field.at(j);
        double s = 1.0;
        for (Index l = 0; l < p; ++l) {
            s *= coordinate_survival(w.coords[l], std::max(xi[l], xj[l]));
        }
        return s;
    });
}

GramMatrix gram_euclidean(const ObservationField& field, unsigned threads) {
    const Index p = field.p();
    return symmetric_gram(field.shape(), threads, [&](Index i, Index j) {
        const auto xi = field.at(i);
        const auto xj = field.at(j);
        double s = 0.0;
        for (Index l = 0; l < p; ++l) {
            s += xi[l] * xj[l];
        }
        return s;
    });
}

MeanAssignment MeanAssignment::global(const LatticeShape& shape) {
    MeanAssignment m;
    m.kind_ = Kind::Global;
    m.shape_ = shape;
    m.change_ = Block{IndexVec(shape.dim(), 0), shape.dims()};
    m.group_.assign(shape.points(), 0);
    m.group_sizes_ = {shape.points()};
    return m;
}

MeanAssignment MeanAssignment::two_group(const LatticeShape& shape, const Block& change) {
    validate_block(shape, change);
    MeanAssignment m;
    m.kind_ = Kind::TwoGroup;
    m.shape_ = shape;
    m.change_ = change;
    m.group_.assign(shape.points(), 1);
    m.group_sizes_ = {0, 0};
    for (Index i = 0; i < shape.points(); ++i) {
        const Index g = change.contains(shape.unflat(i)) ? 0 : 1;
        m.group_[i] = g;
        ++m.group_sizes_[g];
    }
    if (m.group_sizes_[0] == 0 || m.group_sizes_[1] == 0) {
        throw ConfigError("two-group centering needs a change block that is neither empty nor the whole lattice, got " +
                          change.to_string());
    }
    return m;
}

GramMatrix center_gram(const GramMatrix& g, const MeanAssignment& m) {
    if (!(m.shape() == g.shape)) {
        throw ConfigError("mean assignment and Gram matrix live on different lattices");
    }
    const Index n = g.size();
    const Index k = m.groups();
    for (Index c = 0; c < k; ++c) {
        if (m.group_size(c) == 0) {
            throw ConfigError("centering group " + std::to_string(c) + " is empty");
        }
    }
    // avg[i * k + c] = mean of G_il over l in group c.
    std::vector<double> avg(n * k, 0.0);
    const auto labels = m.labels();
    for (Index i = 0; i < n; ++i) {
        const double* row = g.entries.data() + i * n;
        double* a = avg.data() + i * k;
        for (Index j = 0; j < n; ++j) {
            a[labels[j]] += row[j];
        }
        for (Index c = 0; c < k; ++c) {
            a[c] /= static_cast<double>(m.group_size(c));
        }
    }
    // block_avg[c * k + e] = mean of G_lm over l in c, m in e.
    std::vector<double> block_avg(k * k, 0.0);
    for (Index i = 0; i < n; ++i) {
        for (Index e = 0; e < k; ++e) {
            block_avg[labels[i] * k + e] += avg[i * k + e];
        }
    }
    for (Index c = 0; c < k; ++c) {
        for (Index e = 0; e < k; ++e) {
            block_avg[c * k + e] /= static_cast<double>(m.group_size(c));
        }
    }

    GramMatrix out;
    out.shape = g.shape;
    out.entries.resize(n * n);
    for (Index i = 0; i < n; ++i) {
        const Index gi = labels[i];
        const double* row = g.entries.data() + i * n;
        double* dst = out.entries.data() + i * n;
        for (Index j = 0; j < n; ++j) {
            const Index gj = labels[j];
            dst[j] = row[j] - avg[i * k + gj] - avg[j * k + gi] + block_avg[gi * k + gj];
        }
    }
    // Symmetrize exactly: the two averages above are not computed in the same order.
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < i; ++j) {
            const double v = 0.5 * (out.entries[i * n + j] + out.entries[j * n + i]);
            out.entries[i * n + j] = v;
            out.entries[j * n + i] = v;
        }
    }
    out.refresh_sums();
    return out;
}

ObservationField center_field(const ObservationField& field, const MeanAssignment& m) {
    if (!(m.shape() == field.shape())) {
        throw ConfigError("mean assignment and field live on different lattices");
    }
    const Index p = field.p();
    const Index k = m.groups();
    std::vector<double> means(k * p, 0.0);
    for (Index i = 0; i < field.points(); ++i) {
        const auto x = field.at(i);
        double* mu = means.data() + m.group_of(i) * p;
        for (Index l = 0; l < p; ++l) {
            mu[l] += x[l];
        }
    }
    for (Index c = 0; c < k; ++c) {
        for (Index l = 0; l < p; ++l) {
            means[c * p + l] /= static_cast<double>(m.group_size(c));
        }
    }
    ObservationField out = field;
    for (Index i = 0; i < field.points(); ++i) {
        auto x = out.at(i);
        const double* mu = means.data() + m.group_of(i) * p;
        for (Index l = 0; l < p; ++l) {
            x[l] -= mu[l];
        }
    }
    return out;
}

}  // namespace episcan
