#include "episcan/scan.hpp"

#include "episcan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace episcan {

double apply_convention(double max_squared, StatisticConvention c) {
    return c == StatisticConvention::Norm ? std::sqrt(max_squared) : max_squared;
}

namespace {

bool lex_less(const IndexVec& alo, const IndexVec& ahi, const IndexVec& blo, const IndexVec& bhi) {
    if (alo != blo) {
        return std::lexicographical_compare(alo.begin(), alo.end(), blo.begin(), blo.end());
    }
    return std::lexicographical_compare(ahi.begin(), ahi.end(), bhi.begin(), bhi.end());
}

/// Running (max, argmax) with the lexicographic tie-break.
// Objectives within `tol` of each other count as tied, so blocks that are tied
// in exact arithmetic (a block and its complement, say) resolve to the
// lexicographically smallest one whatever the rounding.
struct Incumbent {
    double value = -std::numeric_limits<double>::infinity();
    double tol = 0.0;
    IndexVec lo;
    IndexVec hi;
    std::uint64_t count = 0;

    void offer(double q, const IndexVec& clo, const IndexVec& chi) {
        ++count;
        if (q > value + tol) {
            value = q;
            lo = clo;
            hi = chi;
        } else if (q >= value - tol) {
            if (lex_less(clo, chi, lo, hi)) {
                lo = clo;
                hi = chi;
            }
            value = std::max(value, q);
        }
    }
};

// Rounding in the prefix sums scales with N times the sum of squared norms.
double tie_tolerance(Index points, double trace) { return 1e-12 * static_cast<double>(points) * trace; }

ScanResult finish(const Incumbent& best, Index points, StatisticConvention convention, bool tiled) {
    if (best.count == 0) {
        throw ConfigError("no block satisfies the configured volume bounds");
    }
    ScanResult r;
    r.max_squared = std::max(0.0, best.value / static_cast<double>(points));
    r.statistic = apply_convention(r.max_squared, convention);
    r.argmax = Block{best.lo, best.hi};
    r.blocks_evaluated = best.count;
    r.convention = convention;
    r.tiled = tiled;
    return r;
}

std::vector<Index> suffix_extents(const LatticeShape& shape) {
    const Index d = shape.dim();
    std::vector<Index> ext(d + 1, 1);
    for (Index l = d; l-- > 0;) {
        ext[l] = ext[l + 1] * (shape.extent(l) + 1);
    }
    return ext;
}

}  // namespace

struct GramScanner::Best : Incumbent {};

GramScanner::GramScanner(LatticeShape shape, ScanOptions options)
    : shape_(std::move(shape)), options_(options) {
    const Index d = shape_.dim();
    level_extent_ = suffix_extents(shape_);
    pair_levels_.resize(d);
    row_levels_.resize(d);
    for (Index l = 1; l < d; ++l) {
        pair_levels_[l].resize(level_extent_[l] * level_extent_[l]);
        row_levels_[l].resize(level_extent_[l]);
    }
    lo_.assign(d, 0);
    hi_.assign(d, 0);
    if (PairPrefixTensor::required_bytes(shape_) > options_.memory_cap_bytes) {
        if (!options_.allow_tiled) {
            throw CapacityError("pair prefix tensor needs " +
                                std::to_string(PairPrefixTensor::required_bytes(shape_)) +
                                " bytes, over the configured cap, and the tiled path is disabled");
        }
        tiled_ = true;
    }
}

ScanResult GramScanner::scan(std::span<const double> gram, std::span<const double> scale,
                             StatisticConvention convention) {
    const Index n = shape_.points();
    if (gram.size() != n * n) {
        throw ConfigError("Gram matrix size does not match the lattice");
    }
    if (!scale.empty() && scale.size() != n) {
        throw ConfigError("scale vector must have one entry per lattice point");
    }

    row_sums_.assign(n, 0.0);
    total_ = 0.0;
    double trace = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double* row = gram.data() + i * n;
        double s = 0.0;
        if (scale.empty()) {
            for (Index j = 0; j < n; ++j) {
                s += row[j];
            }
        } else {
            for (Index j = 0; j < n; ++j) {
                s += row[j] * scale[j];
            }
            s *= scale[i];
        }
        row_sums_[i] = s;
        total_ += s;
        trace += std::abs(row[i]) * (scale.empty() ? 1.0 : scale[i] * scale[i]);
    }
    row_prefix_ = PrefixTensor::build(shape_, row_sums_, 1, options_.summation);

    Best best;
    best.tol = tie_tolerance(n, trace);
    if (tiled_) {
        scan_tiled(gram, scale, best);
    } else {
        pair_.assign(shape_, gram, scale, options_.memory_cap_bytes, options_.summation);
        scan_prefix(best);
    }
    return finish(best, n, convention, tiled_);
}

void GramScanner::scan_prefix(Best& best) { reduce_level(0, 1, best); }

void GramScanner::reduce_level(Index level, Index volume, Best& best) {
    const Index d = shape_.dim();
    const double* t = level == 0 ? pair_.values().data() : pair_levels_[level].data();
    const double* r = level == 0 ? row_prefix_.values().data() : row_levels_[level].data();
    const Index e = level_extent_[level];
    const Index ep = level_extent_[level + 1];
    const Index n = shape_.extent(level);
    const double points = static_cast<double>(shape_.points());
    const auto& bounds = options_.bounds;

    for (Index k = 0; k < n; ++k) {
        lo_[level] = k;
        for (Index m = k + 1; m <= n; ++m) {
            const Index vol = volume * (m - k);
            if (bounds && vol > bounds->max) {
                break;
            }
            hi_[level] = m;
            if (level + 1 == d) {
                if (bounds && !bounds->admits(vol)) {
                    continue;
                }
                const double f = t[m * e + m] - t[k * e + m] - t[m * e + k] + t[k * e + k];
                const double rb = r[m] - r[k];
                const double lambda = static_cast<double>(vol) / points;
                best.offer(f - 2.0 * lambda * rb + lambda * lambda * total_, lo_, hi_);
                continue;
            }
            double* next = pair_levels_[level + 1].data();
            double* next_row = row_levels_[level + 1].data();
            for (Index i = 0; i < ep; ++i) {
                const double* tm = t + (m * ep + i) * e;
                const double* tk = t + (k * ep + i) * e;
                double* dst = next + i * ep;
                const Index cm = m * ep;
                const Index ck = k * ep;
                for (Index j = 0; j < ep; ++j) {
                    dst[j] = tm[cm + j] - tk[cm + j] - tm[ck + j] + tk[ck + j];
                }
                next_row[i] = r[m * ep + i] - r[k * ep + i];
            }
            reduce_level(level + 1, vol, best);
        }
    }
}

void GramScanner::scan_tiled(std::span<const double> gram, std::span<const double> scale, Best& best) {
    // One d-dimensional prefix tensor per (scaled) Gram row; a block's pair sum is
    // then the sum over its points of a 2^d-corner lookup.
    const Index n = shape_.points();
    const Index p = shape_.padded_points();
    const Index d = shape_.dim();
    std::vector<double> rows(n * p);
    std::vector<double> scratch(n);
    for (Index i = 0; i < n; ++i) {
        const double* row = gram.data() + i * n;
        for (Index j = 0; j < n; ++j) {
            scratch[j] = scale.empty() ? row[j] : row[j] * scale[i] * scale[j];
        }
        const PrefixTensor rp = PrefixTensor::build(shape_, scratch, 1, options_.summation);
        std::copy(rp.values().begin(), rp.values().end(), rows.begin() + static_cast<std::ptrdiff_t>(i * p));
    }

    const Index corners = Index{1} << d;
    std::vector<Index> off(corners);
    std::vector<double> sign(corners);
    IndexVec corner(d);
    IndexVec point(d);
    const double points = static_cast<double>(n);
    BlockEnumerator it(shape_, options_.bounds);
    Block b;
    while (it.next(b)) {
        for (Index mask = 0; mask < corners; ++mask) {
            Index ones = 0;
            for (Index l = 0; l < d; ++l) {
                const bool up = (mask >> l) & 1U;
                corner[l] = up ? b.hi[l] : b.lo[l];
                ones += up;
            }
            off[mask] = shape_.padded_flat(corner);
            sign[mask] = ((d - ones) % 2 == 0) ? 1.0 : -1.0;
        }
        double f = 0.0;
        for (Index l = 0; l < d; ++l) {
            point[l] = b.lo[l] + 1;
        }
        for (;;) {
            const double* rp = rows.data() + shape_.flat(point) * p;
            for (Index c = 0; c < corners; ++c) {
                f += sign[c] * rp[off[c]];
            }
            Index l = d;
            while (l-- > 0) {
                if (++point[l] <= b.hi[l]) {
                    break;
                }
                point[l] = b.lo[l] + 1;
            }
            if (l == static_cast<Index>(-1)) {
                break;
            }
        }
        const double rb = box_sum(row_prefix_, b);
        const double lambda = static_cast<double>(b.volume()) / points;
        best.offer(f - 2.0 * lambda * rb + lambda * lambda * total_, b.lo, b.hi);
    }
}

ScanResult scan_gram(const GramMatrix& g, const ScanOptions& options, StatisticConvention convention) {
    // Q(B) is unchanged by global centering, which removes the cancellation in the raw sums.
    const GramMatrix c = center_gram(g, MeanAssignment::global(g.shape));
    GramScanner scanner(g.shape, options);
    return scanner.scan(c.entries, {}, convention);
}

namespace {

/// Vector-prefix scan state; level tensors carry `p` channels per cell.
class VectorScan {
public:
    VectorScan(const LatticeShape& shape, Index p, const ScanOptions& options)
        : shape_(shape), p_(p), options_(options), ext_(suffix_extents(shape)) {
        const Index d = shape.dim();
        levels_.resize(d);
        for (Index l = 1; l < d; ++l) {
            levels_[l].resize(ext_[l] * p);
        }
        lo_.assign(d, 0);
        hi_.assign(d, 0);
    }

    Incumbent run(const PrefixTensor& prefix, std::span<const double> totals, double tol) {
        base_ = prefix.values().data();
        totals_ = totals;
        Incumbent best;
        best.tol = tol;
        reduce(0, 1, best);
        return best;
    }

private:
    void reduce(Index level, Index volume, Incumbent& best) {
        const Index d = shape_.dim();
        const double* t = level == 0 ? base_ : levels_[level].data();
        const Index ep = ext_[level + 1];
        const Index n = shape_.extent(level);
        const double points = static_cast<double>(shape_.points());
        const auto& bounds = options_.bounds;
        for (Index k = 0; k < n; ++k) {
            lo_[level] = k;
            for (Index m = k + 1; m <= n; ++m) {
                const Index vol = volume * (m - k);
                if (bounds && vol > bounds->max) {
                    break;
                }
                hi_[level] = m;
                if (level + 1 == d) {
                    if (bounds && !bounds->admits(vol)) {
                        continue;
                    }
                    const double lambda = static_cast<double>(vol) / points;
                    double q = 0.0;
                    for (Index c = 0; c < p_; ++c) {
                        const double diff = t[m * p_ + c] - t[k * p_ + c] - lambda * totals_[c];
                        q += diff * diff;
                    }
                    best.offer(q, lo_, hi_);
                    continue;
                }
                double* next = levels_[level + 1].data();
                const double* tm = t + m * ep * p_;
                const double* tk = t + k * ep * p_;
                for (Index i = 0; i < ep * p_; ++i) {
                    next[i] = tm[i] - tk[i];
                }
                reduce(level + 1, vol, best);
            }
        }
    }

    const LatticeShape& shape_;
    Index p_;
    const ScanOptions& options_;
    std::vector<Index> ext_;
    std::vector<std::vector<double>> levels_;
    IndexVec lo_;
    IndexVec hi_;
    const double* base_ = nullptr;
    std::span<const double> totals_;
};

}  // namespace

ScanResult scan_vector_field(const ObservationField& field, std::span<const double> scale,
                             const ScanOptions& options, StatisticConvention convention) {
    const Index n = field.points();
    const Index p = field.p();
    if (!scale.empty() && scale.size() != n) {
        throw ConfigError("scale vector must have one entry per lattice point");
    }
    std::vector<double> z(field.data().begin(), field.data().end());
    if (!scale.empty()) {
        for (Index i = 0; i < n; ++i) {
            for (Index c = 0; c < p; ++c) {
                z[i * p + c] *= scale[i];
            }
        }
    }
    std::vector<double> totals(p, 0.0);
    double trace = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index c = 0; c < p; ++c) {
            totals[c] += z[i * p + c];
            trace += z[i * p + c] * z[i * p + c];
        }
    }
    const PrefixTensor prefix = PrefixTensor::build(field.shape(), z, p, options.summation);
    VectorScan scan(field.shape(), p, options);
    const Incumbent best = scan.run(prefix, totals, tie_tolerance(n, trace));
    return finish(best, n, convention, false);
}

ScanResult scan_mean_change(const ObservationField& field, const ScanOptions& options) {
    // The objective is translation invariant; centering first keeps prefix sums small.
    const ObservationField centered = center_field(field, MeanAssignment::global(field.shape()));
    return scan_vector_field(centered, {}, options, StatisticConvention::Norm);
}

double block_objective(const GramMatrix& g, const Block& b) {
    validate_block(g.shape, b);
    const Index n = g.size();
    std::vector<Index> inside;
    for (Index i = 0; i < n; ++i) {
        if (b.contains(g.shape.unflat(i))) {
            inside.push_back(i);
        }
    }
    double pbb = 0.0;
    double pba = 0.0;
    for (Index i : inside) {
        for (Index j : inside) {
            pbb += g(i, j);
        }
        pba += g.row_sums[i];
    }
    const double lambda = static_cast<double>(inside.size()) / static_cast<double>(n);
    return (pbb - 2.0 * lambda * pba + lambda * lambda * g.total_sum) / static_cast<double>(n);
}

Block estimate_change_set(const ScanResult& r) { return r.argmax; }

std::vector<double> lrv_estimate(const ObservationField& field, const LagWeight& weight, const Block& b,
                                 const MeanAssignment& m) {
    const LatticeShape& shape = field.shape();
    validate_block(shape, b);
    if (b.volume() < 2) {
        throw ConfigError("long-run variance needs a block with at least two points");
    }
    const ObservationField c = center_field(field, m);
    const Index d = shape.dim();
    const Index p = field.p();
    std::vector<double> acc(p * p, 0.0);

    std::vector<std::int64_t> lag(d);
    std::vector<std::int64_t> side(d);
    for (Index l = 0; l < d; ++l) {
        side[l] = static_cast<std::int64_t>(b.hi[l] - b.lo[l]);
        lag[l] = -(side[l] - 1);
    }
    IndexVec a(d);
    IndexVec a_lo(d);
    IndexVec a_hi(d);
    IndexVec partner(d);
    for (;;) {
        const double w = weight(lag);
        if (w != 0.0) {
            for (Index l = 0; l < d; ++l) {
                a_lo[l] = b.lo[l] + 1 + static_cast<Index>(std::max<std::int64_t>(0, -lag[l]));
                a_hi[l] = b.hi[l] - static_cast<Index>(std::max<std::int64_t>(0, lag[l]));
                a[l] = a_lo[l];
            }
            for (;;) {
                for (Index l = 0; l < d; ++l) {
                    partner[l] = static_cast<Index>(static_cast<std::int64_t>(a[l]) + lag[l]);
                }
                const auto xa = c.at(shape.flat(a));
                const auto xb = c.at(shape.flat(partner));
                for (Index r = 0; r < p; ++r) {
                    for (Index s = 0; s < p; ++s) {
                        acc[r * p + s] += w * xa[r] * xb[s];
                    }
                }
                Index l = d;
                while (l-- > 0) {
                    if (++a[l] <= a_hi[l]) {
                        break;
                    }
                    a[l] = a_lo[l];
                }
                if (l == static_cast<Index>(-1)) {
                    break;
                }
            }
        }
        Index l = d;
        while (l-- > 0) {
            if (++lag[l] <= side[l] - 1) {
                break;
            }
            lag[l] = -(side[l] - 1);
        }
        if (l == static_cast<Index>(-1)) {
            break;
        }
    }
    const double norm = static_cast<double>(shape.points());
    std::vector<double> out(p * p);
    for (Index r = 0; r < p; ++r) {
        for (Index s = 0; s < p; ++s) {
            out[r * p + s] = 0.5 * (acc[r * p + s] + acc[s * p + r]) / norm;
        }
    }
    return out;
}

std::vector<double> lrv_estimate(const ObservationField& field, const KernelSpec& kernel, const Block& b,
                                 const MeanAssignment& m) {
    kernel.validate();
    return lrv_estimate(
        field, [&kernel](std::span<const std::int64_t> h) { return kernel_value(kernel, h); }, b, m);
}

}  // namespace episcan
