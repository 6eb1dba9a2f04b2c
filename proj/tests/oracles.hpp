#pragma once

// Brute-force reference implementations. Deliberately naive: every quantity is
// recomputed from its definition with explicit loops and long double sums.

#include "episcan/hilbert_gram.hpp"
#include "episcan/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

using episcan::Block;
using episcan::Index;
using episcan::IndexVec;
using episcan::LatticeShape;

/// All blocks, generated by nested odometers and sorted lexicographically on (lo, hi).
inline std::vector<Block> all_blocks(const LatticeShape& shape) {
    const Index d = shape.dim();
    std::vector<Block> out;
    IndexVec lo(d, 0);
    for (;;) {
        IndexVec hi(d);
        for (Index l = 0; l < d; ++l) {
            hi[l] = lo[l] + 1;
        }
        for (;;) {
            out.push_back({lo, hi});
            Index l = d;
            while (l-- > 0) {
                if (++hi[l] <= shape.extent(l)) {
                    break;
                }
                hi[l] = lo[l] + 1;
            }
            if (l == static_cast<Index>(-1)) {
                break;
            }
        }
        Index l = d;
        while (l-- > 0) {
            if (++lo[l] < shape.extent(l)) {
                break;
            }
            lo[l] = 0;
        }
        if (l == static_cast<Index>(-1)) {
            break;
        }
    }
    std::sort(out.begin(), out.end(), [](const Block& a, const Block& b) {
        return a.lo != b.lo ? a.lo < b.lo : a.hi < b.hi;
    });
    return out;
}

inline std::vector<Index> members(const LatticeShape& shape, const Block& b) {
    std::vector<Index> out;
    for (Index i = 0; i < shape.points(); ++i) {
        if (b.contains(shape.unflat(i))) {
            out.push_back(i);
        }
    }
    return out;
}

/// sum_{i,j in b} M_ij by double loop.
inline long double pair_sum(const LatticeShape& shape, const std::vector<double>& m, const Block& b) {
    const auto in = members(shape, b);
    long double s = 0;
    for (Index i : in) {
        for (Index j : in) {
            s += m[i * shape.points() + j];
        }
    }
    return s;
}

struct ScanAnswer {
    double max_squared = 0.0;
    Block argmax;
};

/// Lexicographically first block among those within `tol` of the largest objective.
inline ScanAnswer pick(const std::vector<Block>& blocks, const std::vector<long double>& q, Index points,
                       long double tol) {
    long double best = q.front();
    for (long double v : q) {
        best = std::max(best, v);
    }
    for (Index k = 0; k < blocks.size(); ++k) {
        if (q[k] >= best - tol) {
            return {static_cast<double>(std::max<long double>(best, 0) / points), blocks[k]};
        }
    }
    return {};
}

/// Q(B) = sum_{i,j in B} G_ij - 2 lambda sum_{i in B, j} G_ij + lambda^2 sum G, over all blocks.
inline ScanAnswer scan_gram(const LatticeShape& shape, const std::vector<double>& g,
                            std::optional<episcan::VolumeBounds> bounds = std::nullopt) {
    const Index n = shape.points();
    long double total = 0;
    long double trace = 0;
    for (Index i = 0; i < n; ++i) {
        trace += std::abs(g[i * n + i]);
        for (Index j = 0; j < n; ++j) {
            total += g[i * n + j];
        }
    }
    std::vector<Block> blocks;
    std::vector<long double> q;
    for (const Block& b : all_blocks(shape)) {
        if (bounds && !bounds->admits(b.volume())) {
            continue;
        }
        const auto in = members(shape, b);
        long double pbb = 0;
        long double pba = 0;
        for (Index i : in) {
            for (Index j : in) {
                pbb += g[i * n + j];
            }
            for (Index j = 0; j < n; ++j) {
                pba += g[i * n + j];
            }
        }
        const long double lambda = static_cast<long double>(in.size()) / n;
        blocks.push_back(b);
        q.push_back(pbb - 2 * lambda * pba + lambda * lambda * total);
    }
    return pick(blocks, q, n, 1e-12L * n * trace);
}

/// ||sum_B X_j - lambda sum_all X_j||^2 from the raw vectors, over all blocks.
inline ScanAnswer scan_vectors(const episcan::ObservationField& f) {
    const LatticeShape& shape = f.shape();
    const Index n = shape.points();
    const Index p = f.p();
    std::vector<long double> total(p, 0);
    long double mean_sq = 0;
    for (Index i = 0; i < n; ++i) {
        for (Index c = 0; c < p; ++c) {
            total[c] += f.at(i)[c];
        }
    }
    // The scanned Gram is that of the centered vectors; its trace sets the tie window.
    for (Index i = 0; i < n; ++i) {
        for (Index c = 0; c < p; ++c) {
            const long double y = f.at(i)[c] - total[c] / n;
            mean_sq += y * y;
        }
    }
    std::vector<Block> blocks = all_blocks(shape);
    std::vector<long double> q;
    for (const Block& b : blocks) {
        const auto in = members(shape, b);
        const long double lambda = static_cast<long double>(in.size()) / n;
        long double s = 0;
        for (Index c = 0; c < p; ++c) {
            long double sb = 0;
            for (Index i : in) {
                sb += f.at(i)[c];
            }
            const long double diff = sb - lambda * total[c];
            s += diff * diff;
        }
        q.push_back(s);
    }
    return pick(blocks, q, n, 1e-12L * n * mean_sq);
}

/// CvM objective for scalar data straight from the integral
///   int (sum_B 1{X_j < t} - lambda sum_all 1{X_j < t})^2 w(t) dt,
/// which is piecewise constant in t between order statistics.
inline ScanAnswer scan_cvm_scalar(const episcan::ObservationField& f, const std::function<double(double)>& survival) {
    const LatticeShape& shape = f.shape();
    const Index n = shape.points();
    std::vector<double> xs(f.data().begin(), f.data().end());
    std::vector<double> cuts = xs;
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    // Interval k is (cuts[k], cuts[k+1]] with mass S(cuts[k]) - S(cuts[k+1]); the last one is unbounded.
    std::vector<long double> mass(cuts.size());
    for (Index k = 0; k < cuts.size(); ++k) {
        const double upper = k + 1 < cuts.size() ? survival(cuts[k + 1]) : 0.0;
        mass[k] = static_cast<long double>(survival(cuts[k])) - upper;
    }
    long double trace = 0;
    for (double x : xs) {
        trace += survival(x);
    }
    std::vector<Block> blocks = all_blocks(shape);
    std::vector<long double> q;
    for (const Block& b : blocks) {
        const auto in = members(shape, b);
        const long double lambda = static_cast<long double>(in.size()) / n;
        long double s = 0;
        for (Index k = 0; k < cuts.size(); ++k) {
            long double cb = 0;
            long double ca = 0;
            for (Index i : in) {
                cb += xs[i] <= cuts[k] ? 1 : 0;
            }
            for (Index i = 0; i < n; ++i) {
                ca += xs[i] <= cuts[k] ? 1 : 0;
            }
            const long double diff = cb - lambda * ca;
            s += diff * diff * mass[k];
        }
        q.push_back(s);
    }
    return pick(blocks, q, n, 1e-12L * n * trace);
}

/// Adaptive Simpson quadrature of f on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13,
                        int depth = 60) {
    const std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int left) -> double {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid);
        const double rm = 0.5 * (mid + hi);
        const double flm = f(lm);
        const double frm = f(rm);
        const double left_area = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right_area = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        const double diff = left_area + right_area - whole;
        if (left <= 0 || std::abs(diff) <= 15.0 * tol) {
            return left_area + right_area + diff / 15.0;
        }
        return rec(lo, mid, flo, flm, fmid, left_area, left - 1) + rec(mid, hi, fmid, frm, fhi, right_area, left - 1);
    };
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), depth);
}

inline double gaussian_density(double t, double mu, double sigma) {
    const double z = (t - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * 3.14159265358979323846));
}

inline episcan::ObservationField random_field(const LatticeShape& shape, Index p, std::mt19937_64& rng,
                                              double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    episcan::ObservationField f(shape, p);
    for (double& v : f.data()) {
        v = normal(rng);
    }
    return f;
}

/// <Y_i - mu(i), Y_j - mu(j)> with group means expanded by explicit averaging of G.
inline std::vector<double> centered_gram(const episcan::GramMatrix& g, const std::vector<Index>& group) {
    const Index n = g.size();
    std::vector<double> out(n * n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            long double a = 0;
            long double b = 0;
            long double c = 0;
            Index na = 0;
            Index nb = 0;
            for (Index k = 0; k < n; ++k) {
                if (group[k] == group[j]) {
                    a += g(i, k);
                    ++na;
                }
                if (group[k] == group[i]) {
                    b += g(k, j);
                    ++nb;
                }
            }
            for (Index k = 0; k < n; ++k) {
                for (Index l = 0; l < n; ++l) {
                    if (group[k] == group[i] && group[l] == group[j]) {
                        c += g(k, l);
                    }
                }
            }
            out[i * n + j] = static_cast<double>(g(i, j) - a / na - b / nb + c / (static_cast<long double>(na) * nb));
        }
    }
    return out;
}

}  // namespace oracle
