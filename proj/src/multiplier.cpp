#include "episcan/multiplier.hpp"

#include "episcan/errors.hpp"

#include <cmath>
#include <cstdlib>

namespace episcan {

std::string to_string(KernelKind k) { return k == KernelKind::ExponentialAR ? "ar" : "ma"; }

KernelKind parse_kernel_kind(const std::string& text) {
    if (text == "ar") {
        return KernelKind::ExponentialAR;
    }
    if (text == "ma") {
        return KernelKind::BartlettMA;
    }
    throw ConfigError("kernel must be 'ar' or 'ma', got '" + text + "'");
}

void KernelSpec::validate() const {
    if (q < 1) {
        throw ConfigError("bandwidth q must be at least 1, got " + std::to_string(q));
    }
}

double kernel_value(const KernelSpec& spec, std::span<const std::int64_t> h) {
    spec.validate();
    const double q = static_cast<double>(spec.q);
    double w = 1.0;
    for (std::int64_t lag : h) {
        const double a = static_cast<double>(std::llabs(lag));
        if (spec.kind == KernelKind::ExponentialAR) {
            w *= std::exp(-a / q);
        } else {
            w *= std::max(0.0, 1.0 - a / (q + 1.0));
        }
    }
    return w;
}

std::int64_t ma_half_width(std::int64_t q) { return q / 2; }

std::int64_t ma_effective_bandwidth(std::int64_t q) { return 2 * ma_half_width(q); }

void separable_ar_filter(const LatticeShape& shape, double a, std::span<double> values) {
    if (!(std::abs(a) < 1.0)) {
        throw ConfigError("AR coefficient must satisfy |a| < 1");
    }
    const double innov = std::sqrt(1.0 - a * a);
    const Index d = shape.dim();
    for (Index axis = 0; axis < d; ++axis) {
        Index stride = 1;
        for (Index b = axis + 1; b < d; ++b) {
            stride *= shape.extent(b);
        }
        const Index ext = shape.extent(axis);
        const Index outer = shape.points() / (ext * stride);
        for (Index o = 0; o < outer; ++o) {
            double* base = values.data() + o * ext * stride;
            for (Index t = 1; t < ext; ++t) {
                double* cur = base + t * stride;
                const double* prev = cur - stride;
                for (Index s = 0; s < stride; ++s) {
                    cur[s] = a * prev[s] + innov * cur[s];
                }
            }
        }
    }
}

namespace {

void fill_normal(std::span<double> out, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : out) {
        v = normal(rng);
    }
}

}  // namespace

MultiplierField sample_ar_field(const LatticeShape& shape, std::int64_t q, Rng& rng) {
    const KernelSpec spec{KernelKind::ExponentialAR, q};
    spec.validate();
    MultiplierField f{shape, std::vector<double>(shape.points()), spec, 0};
    fill_normal(f.values, rng);
    separable_ar_filter(shape, std::exp(-1.0 / static_cast<double>(q)), f.values);
    return f;
}

MultiplierField sample_ma_field(const LatticeShape& shape, std::int64_t q, Rng& rng) {
    const KernelSpec spec{KernelKind::BartlettMA, q};
    spec.validate();
    const Index d = shape.dim();
    const auto h = static_cast<Index>(ma_half_width(q));
    const Index window = 2 * h + 1;

    // Innovations on the lattice padded by h on every side.
    IndexVec ext(shape.dims());
    Index total = 1;
    for (Index& e : ext) {
        e += 2 * h;
        total *= e;
    }
    std::vector<double> buf(total);
    fill_normal(buf, rng);

    // Separable box sums of width `window`; each pass shrinks one axis back to n_l.
    for (Index axis = 0; axis < d; ++axis) {
        Index stride = 1;
        for (Index b = axis + 1; b < d; ++b) {
            stride *= ext[b];
        }
        Index outer = 1;
        for (Index b = 0; b < axis; ++b) {
            outer *= ext[b];
        }
        const Index in_ext = ext[axis];
        const Index out_ext = shape.extent(axis);
        std::vector<double> next(outer * out_ext * stride, 0.0);
        for (Index o = 0; o < outer; ++o) {
            const double* src = buf.data() + o * in_ext * stride;
            double* dst = next.data() + o * out_ext * stride;
            for (Index t = 0; t < out_ext; ++t) {
                double* row = dst + t * stride;
                for (Index w = 0; w < window; ++w) {
                    const double* in = src + (t + w) * stride;
                    for (Index s = 0; s < stride; ++s) {
                        row[s] += in[s];
                    }
                }
            }
        }
        buf = std::move(next);
        ext[axis] = out_ext;
    }
    const double scale = std::pow(static_cast<double>(window), -0.5 * static_cast<double>(d));
    for (double& v : buf) {
        v *= scale;
    }
    return MultiplierField{shape, std::move(buf), spec, 0};
}

MultiplierField sample_multiplier(const KernelSpec& spec, const LatticeShape& shape, Rng& rng) {
    return spec.kind == KernelKind::ExponentialAR ? sample_ar_field(shape, spec.q, rng)
                                                  : sample_ma_field(shape, spec.q, rng);
}

MultiplierField sample_multiplier(const KernelSpec& spec, const LatticeShape& shape, std::uint64_t seed) {
    Rng rng(seed);
    MultiplierField f = sample_multiplier(spec, shape, rng);
    f.seed = seed;
    return f;
}

std::vector<double> multiplier_cov_samples(const KernelSpec& spec, const LatticeShape& shape,
                                           std::span<const std::int64_t> lag, Index replicates, Rng& rng) {
    if (replicates < 2) {
        throw ConfigError("need at least two replicates");
    }
    const Index d = shape.dim();
    if (lag.size() != d) {
        throw IndexError("lag dimension does not match the lattice");
    }
    for (Index l = 0; l < d; ++l) {
        if (static_cast<Index>(std::llabs(lag[l])) >= shape.extent(l)) {
            throw IndexError("lag " + std::to_string(lag[l]) + " on axis " + std::to_string(l) +
                             " leaves no pairs inside the lattice");
        }
    }
    std::vector<double> out;
    out.reserve(replicates);
    IndexVec idx(d);
    IndexVec partner(d);
    for (Index r = 0; r < replicates; ++r) {
        const MultiplierField f = sample_multiplier(spec, shape, rng);
        double sum = 0.0;
        Index count = 0;
        for (Index i = 0; i < shape.points(); ++i) {
            idx = shape.unflat(i);
            bool inside = true;
            for (Index l = 0; l < d; ++l) {
                const auto j = static_cast<std::int64_t>(idx[l]) + lag[l];
                if (j < 1 || j > static_cast<std::int64_t>(shape.extent(l))) {
                    inside = false;
                    break;
                }
                partner[l] = static_cast<Index>(j);
            }
            if (inside) {
                sum += f.values[i] * f.values[shape.flat(partner)];
                ++count;
            }
        }
        out.push_back(sum / static_cast<double>(count));
    }
    return out;
}

double empirical_multiplier_cov(const KernelSpec& spec, const LatticeShape& shape, std::span<const std::int64_t> lag,
                                Index replicates, Rng& rng) {
    const auto samples = multiplier_cov_samples(spec, shape, lag, replicates, rng);
    double s = 0.0;
    for (double v : samples) {
        s += v;
    }
    return s / static_cast<double>(samples.size());
}

bool bandwidth_too_large(const KernelSpec& spec, const LatticeShape& shape) {
    return static_cast<double>(spec.q) >= std::sqrt(static_cast<double>(shape.min_extent()));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(master) ^ mix(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace episcan
