#include "episcan/lattice.hpp"

#include "episcan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace episcan {

namespace {

Index checked_product(std::span<const Index> factors, Index offset) {
    Index total = 1;
    for (Index f : factors) {
        const Index g = f + offset;
        if (g != 0 && total > std::numeric_limits<Index>::max() / g) {
            throw ConfigError("lattice point count overflows the index range");
        }
        total *= g;
    }
    return total;
}

}  // namespace

LatticeShape::LatticeShape(IndexVec dims) : dims_(std::move(dims)) {
    if (dims_.empty()) {
        throw ConfigError("lattice needs at least one axis");
    }
    for (Index l = 0; l < dims_.size(); ++l) {
        if (dims_[l] == 0) {
            throw ConfigError("lattice extent on axis " + std::to_string(l) + " must be positive");
        }
    }
    points_ = checked_product(dims_, 0);
    padded_points_ = checked_product(dims_, 1);
}

Index LatticeShape::min_extent() const {
    return dims_.empty() ? 0 : *std::min_element(dims_.begin(), dims_.end());
}

Index LatticeShape::flat(std::span<const Index> idx) const {
    Index off = 0;
    for (Index l = 0; l < dims_.size(); ++l) {
        if (idx[l] < 1 || idx[l] > dims_[l]) {
            throw IndexError("lattice index " + std::to_string(idx[l]) + " out of range on axis " +
                             std::to_string(l));
        }
        off = off * dims_[l] + (idx[l] - 1);
    }
    return off;
}

IndexVec LatticeShape::unflat(Index offset) const {
    IndexVec idx(dims_.size());
    for (Index l = dims_.size(); l-- > 0;) {
        idx[l] = offset % dims_[l] + 1;
        offset /= dims_[l];
    }
    return idx;
}

Index LatticeShape::padded_flat(std::span<const Index> corner) const {
    Index off = 0;
    for (Index l = 0; l < dims_.size(); ++l) {
        off = off * (dims_[l] + 1) + corner[l];
    }
    return off;
}

Index Block::volume() const {
    Index v = 1;
    for (Index l = 0; l < lo.size(); ++l) {
        v *= hi[l] - lo[l];
    }
    return v;
}

bool Block::contains(std::span<const Index> point) const {
    for (Index l = 0; l < lo.size(); ++l) {
        if (point[l] <= lo[l] || point[l] > hi[l]) {
            return false;
        }
    }
    return true;
}

std::string Block::to_string() const {
    std::ostringstream os;
    auto put = [&os](const IndexVec& v) {
        os << '(';
        for (Index l = 0; l < v.size(); ++l) {
            os << (l ? "," : "") << v[l];
        }
        os << ')';
    };
    os << '(';
    put(lo);
    os << ',';
    put(hi);
    os << ']';
    return os.str();
}

bool lex_less(const Block& a, const Block& b) {
    if (a.lo != b.lo) {
        return std::lexicographical_compare(a.lo.begin(), a.lo.end(), b.lo.begin(), b.lo.end());
    }
    return std::lexicographical_compare(a.hi.begin(), a.hi.end(), b.hi.begin(), b.hi.end());
}

void validate_block(const LatticeShape& shape, const Block& b) {
    if (b.lo.size() != shape.dim() || b.hi.size() != shape.dim()) {
        throw IndexError("block dimension " + std::to_string(b.lo.size()) +
                         " does not match lattice dimension " + std::to_string(shape.dim()));
    }
    for (Index l = 0; l < shape.dim(); ++l) {
        if (!(b.lo[l] < b.hi[l] && b.hi[l] <= shape.extent(l))) {
            throw IndexError("block " + b.to_string() + " out of range on axis " + std::to_string(l) +
                             " (lo=" + std::to_string(b.lo[l]) + ", hi=" + std::to_string(b.hi[l]) +
                             ", n=" + std::to_string(shape.extent(l)) + ")");
        }
    }
}

VolumeBounds VolumeBounds::from_fractions(double eps1, double eps2, Index points) {
    if (!(eps1 >= 0.0 && eps2 >= 0.0 && eps1 + eps2 < 1.0)) {
        throw ConfigError("size bounds require eps1, eps2 >= 0 and eps1 + eps2 < 1");
    }
    const double n = static_cast<double>(points);
    VolumeBounds b;
    b.min = std::max<Index>(1, static_cast<Index>(std::ceil(eps1 * n - 1e-9)));
    b.max = static_cast<Index>(std::floor((1.0 - eps2) * n + 1e-9));
    if (b.min > b.max) {
        throw ConfigError("size bounds admit no block volume");
    }
    return b;
}

BlockEnumerator::BlockEnumerator(LatticeShape shape, std::optional<VolumeBounds> bounds)
    : shape_(std::move(shape)), bounds_(bounds) {}

bool BlockEnumerator::advance_raw() {
    const Index d = shape_.dim();
    if (!started_) {
        started_ = true;
        current_.lo.assign(d, 0);
        current_.hi.assign(d, 1);
        return true;
    }
    // Odometer over hi in (lo, n], then over lo in [0, n).
    for (Index l = d; l-- > 0;) {
        if (current_.hi[l] < shape_.extent(l)) {
            ++current_.hi[l];
            return true;
        }
        current_.hi[l] = current_.lo[l] + 1;
    }
    for (Index l = d; l-- > 0;) {
        if (current_.lo[l] + 1 < shape_.extent(l)) {
            ++current_.lo[l];
            for (Index r = 0; r < d; ++r) {
                current_.hi[r] = current_.lo[r] + 1;
            }
            return true;
        }
        current_.lo[l] = 0;
    }
    return false;
}

bool BlockEnumerator::next(Block& out) {
    while (!done_) {
        if (!advance_raw()) {
            done_ = true;
            break;
        }
        if (!bounds_ || bounds_->admits(current_.volume())) {
            out = current_;
            return true;
        }
    }
    return false;
}

std::vector<Block> enumerate_blocks(const LatticeShape& shape, std::optional<VolumeBounds> bounds) {
    std::vector<Block> blocks;
    BlockEnumerator it(shape, bounds);
    Block b;
    while (it.next(b)) {
        blocks.push_back(b);
    }
    return blocks;
}

std::uint64_t block_count(const LatticeShape& shape) {
    std::uint64_t c = 1;
    for (Index n : shape.dims()) {
        c *= static_cast<std::uint64_t>(n) * (n + 1) / 2;
    }
    return c;
}

namespace detail {

void cumulative_sum_axes(std::span<double> data, std::span<const Index> extents, Summation mode,
                         Index inner) {
    const Index rank = extents.size();
    for (Index axis = 0; axis < rank; ++axis) {
        Index stride = inner;
        for (Index b = axis + 1; b < rank; ++b) {
            stride *= extents[b];
        }
        Index outer = 1;
        for (Index b = 0; b < axis; ++b) {
            outer *= extents[b];
        }
        const Index ext = extents[axis];
        if (ext < 2) {
            continue;
        }
        for (Index o = 0; o < outer; ++o) {
            double* base = data.data() + o * ext * stride;
            if (mode == Summation::Plain) {
                for (Index t = 1; t < ext; ++t) {
                    double* cur = base + t * stride;
                    const double* prev = cur - stride;
                    for (Index s = 0; s < stride; ++s) {
                        cur[s] += prev[s];
                    }
                }
                continue;
            }
            // Neumaier running sum along each line.
            for (Index s = 0; s < stride; ++s) {
                double sum = base[s];
                double comp = 0.0;
                for (Index t = 1; t < ext; ++t) {
                    const double x = base[t * stride + s];
                    const double next = sum + x;
                    comp += (std::abs(sum) >= std::abs(x)) ? (sum - next) + x : (x - next) + sum;
                    sum = next;
                    base[t * stride + s] = sum + comp;
                }
            }
        }
    }
}

}  // namespace detail

namespace {

/// Padded-grid offset of each lattice point, indexed by flat lattice offset.
std::vector<Index> padded_offsets(const LatticeShape& shape) {
    std::vector<Index> out(shape.points());
    IndexVec corner(shape.dim(), 1);
    for (Index i = 0; i < shape.points(); ++i) {
        out[i] = shape.padded_flat(corner);
        for (Index l = shape.dim(); l-- > 0;) {
            if (++corner[l] <= shape.extent(l)) {
                break;
            }
            corner[l] = 1;
        }
    }
    return out;
}

IndexVec padded_extents(const LatticeShape& shape) {
    IndexVec ext(shape.dims());
    for (Index& e : ext) {
        ++e;
    }
    return ext;
}

double corner_sign(Index d, Index ones) { return ((d - ones) % 2 == 0) ? 1.0 : -1.0; }

}  // namespace

PrefixTensor PrefixTensor::build(const LatticeShape& shape, std::span<const double> field, Index channels,
                                 Summation mode) {
    if (channels == 0 || field.size() != shape.points() * channels) {
        throw ConfigError("field size does not match lattice shape and channel count");
    }
    PrefixTensor t;
    t.shape_ = shape;
    t.channels_ = channels;
    t.values_.assign(shape.padded_points() * channels, 0.0);
    const auto offsets = padded_offsets(shape);
    for (Index i = 0; i < shape.points(); ++i) {
        std::copy_n(field.data() + i * channels, channels, t.values_.data() + offsets[i] * channels);
    }
    detail::cumulative_sum_axes(t.values_, padded_extents(shape), mode, channels);
    return t;
}

double PrefixTensor::at(std::span<const Index> corner, Index channel) const {
    return values_[shape_.padded_flat(corner) * channels_ + channel];
}

void box_sum(const PrefixTensor& t, const Block& b, std::span<double> out) {
    const LatticeShape& shape = t.shape();
    validate_block(shape, b);
    const Index d = shape.dim();
    const Index ch = t.channels();
    std::fill(out.begin(), out.end(), 0.0);
    IndexVec corner(d);
    for (Index mask = 0; mask < (Index{1} << d); ++mask) {
        Index ones = 0;
        for (Index l = 0; l < d; ++l) {
            const bool up = (mask >> l) & 1U;
            corner[l] = up ? b.hi[l] : b.lo[l];
            ones += up;
        }
        const double sign = corner_sign(d, ones);
        const double* v = t.values().data() + shape.padded_flat(corner) * ch;
        for (Index c = 0; c < ch; ++c) {
            out[c] += sign * v[c];
        }
    }
}

double box_sum(const PrefixTensor& t, const Block& b, Index channel) {
    if (channel >= t.channels()) {
        throw IndexError("channel " + std::to_string(channel) + " out of range");
    }
    std::vector<double> out(t.channels());
    box_sum(t, b, out);
    return out[channel];
}

std::uint64_t PairPrefixTensor::required_bytes(const LatticeShape& shape) {
    const auto p = static_cast<std::uint64_t>(shape.padded_points());
    if (p > std::numeric_limits<std::uint32_t>::max()) {
        return std::numeric_limits<std::uint64_t>::max();
    }
    const std::uint64_t entries = p * p;
    if (entries > std::numeric_limits<std::uint64_t>::max() / sizeof(double)) {
        return std::numeric_limits<std::uint64_t>::max();
    }
    return entries * sizeof(double);
}

PairPrefixTensor PairPrefixTensor::build(const LatticeShape& shape, std::span<const double> matrix,
                                         std::uint64_t memory_cap_bytes, Summation mode) {
    PairPrefixTensor t;
    t.assign(shape, matrix, {}, memory_cap_bytes, mode);
    return t;
}

void PairPrefixTensor::assign(const LatticeShape& shape, std::span<const double> matrix,
                              std::span<const double> scale, std::uint64_t memory_cap_bytes, Summation mode) {
    const Index n = shape.points();
    if (matrix.size() != n * n) {
        throw ConfigError("pair matrix must be N x N for the lattice");
    }
    if (!scale.empty() && scale.size() != n) {
        throw ConfigError("scale vector must have one entry per lattice point");
    }
    const std::uint64_t bytes = required_bytes(shape);
    if (bytes > memory_cap_bytes) {
        throw CapacityError("pair prefix tensor needs " + std::to_string(bytes) + " bytes, over the cap of " +
                            std::to_string(memory_cap_bytes) + "; use the tiled scan path");
    }
    if (shape_ != shape) {
        shape_ = shape;
    }
    const Index p = shape.padded_points();
    values_.assign(p * p, 0.0);
    const auto offsets = padded_offsets(shape);
    const IndexVec ext = padded_extents(shape);

    // Fill and prefix each row slab while it is cache resident, then sweep the
    // row-group axes across slabs.
    for (Index i = 0; i < n; ++i) {
        double* slab = values_.data() + offsets[i] * p;
        const double* row = matrix.data() + i * n;
        if (scale.empty()) {
            for (Index j = 0; j < n; ++j) {
                slab[offsets[j]] = row[j];
            }
        } else {
            const double si = scale[i];
            for (Index j = 0; j < n; ++j) {
                slab[offsets[j]] = row[j] * si * scale[j];
            }
        }
        detail::cumulative_sum_axes(std::span<double>(slab, p), ext, mode);
    }
    detail::cumulative_sum_axes(values_, ext, mode, p);
}

double PairPrefixTensor::at(std::span<const Index> row_corner, std::span<const Index> col_corner) const {
    const Index p = shape_.padded_points();
    return values_[shape_.padded_flat(row_corner) * p + shape_.padded_flat(col_corner)];
}

double pair_box_sum(const PairPrefixTensor& t, const Block& b) {
    const LatticeShape& shape = t.shape();
    validate_block(shape, b);
    const Index d = shape.dim();
    const Index p = shape.padded_points();
    const Index corners = Index{1} << d;
    std::vector<Index> off(corners);
    std::vector<double> sign(corners);
    IndexVec corner(d);
    for (Index mask = 0; mask < corners; ++mask) {
        Index ones = 0;
        for (Index l = 0; l < d; ++l) {
            const bool up = (mask >> l) & 1U;
            corner[l] = up ? b.hi[l] : b.lo[l];
            ones += up;
        }
        off[mask] = shape.padded_flat(corner);
        sign[mask] = corner_sign(d, ones);
    }
    double total = 0.0;
    for (Index r = 0; r < corners; ++r) {
        double row = 0.0;
        const double* base = t.values().data() + off[r] * p;
        for (Index c = 0; c < corners; ++c) {
            row += sign[c] * base[off[c]];
        }
        total += sign[r] * row;
    }
    return total;
}

}  // namespace episcan
