#include "episcan/bootstrap.hpp"

#include "episcan/errors.hpp"
#include "episcan/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace episcan {

std::string to_string(StatisticKind k) { return k == StatisticKind::CvM ? "cvm" : "mean"; }

std::string to_string(MeanEstimator m) { return m == MeanEstimator::Global ? "global" : "adapted"; }

StatisticKind parse_statistic_kind(const std::string& text) {
    if (text == "cvm") {
        return StatisticKind::CvM;
    }
    if (text == "mean") {
        return StatisticKind::MeanChange;
    }
    throw ConfigError("statistic must be 'cvm' or 'mean', got '" + text + "'");
}

MeanEstimator parse_mean_estimator(const std::string& text) {
    if (text == "global") {
        return MeanEstimator::Global;
    }
    if (text == "adapted") {
        return MeanEstimator::Adapted;
    }
    throw ConfigError("mean estimator must be 'global' or 'adapted', got '" + text + "'");
}

StatisticConvention convention_of(StatisticKind k) {
    return k == StatisticKind::CvM ? StatisticConvention::SquaredNorm : StatisticConvention::Norm;
}

void TestConfig::validate(Index p) const {
    if (replicates < 1) {
        throw ConfigError("bootstrap replicates K must be at least 1");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("significance level alpha must lie in (0, 1)");
    }
    kernel.validate();
    if (size_bounds) {
        const auto& b = *size_bounds;
        if (!(b.eps1 >= 0.0 && b.eps2 >= 0.0 && b.eps1 + b.eps2 < 1.0)) {
            throw ConfigError("size bounds require eps1, eps2 >= 0 and eps1 + eps2 < 1");
        }
    }
    if (statistic == StatisticKind::CvM) {
        const WeightSpec w = effective_weight(p);
        w.validate();
        if (w.p() != p) {
            throw ConfigError("weight has " + std::to_string(w.p()) + " coordinates but observations have p=" +
                              std::to_string(p));
        }
    }
}

WeightSpec TestConfig::effective_weight(Index p) const {
    if (weight.coords.empty()) {
        return WeightSpec::simulation_default(p);
    }
    if (weight.coords.size() == 1 && p > 1) {
        return WeightSpec::uniform_product(weight.coords.front(), p);
    }
    return weight;
}

double bootstrap_statistic(const GramMatrix& centered, const MultiplierField& v, StatisticConvention convention,
                           const ScanOptions& options) {
    if (!(v.shape == centered.shape)) {
        throw ConfigError("multiplier field and Gram matrix live on different lattices");
    }
    GramScanner scanner(centered.shape, options);
    return scanner.scan(centered.entries, v.values, convention).statistic;
}

double bootstrap_statistic(const ObservationField& centered, const MultiplierField& v,
                           StatisticConvention convention, const ScanOptions& options) {
    if (!(v.shape == centered.shape())) {
        throw ConfigError("multiplier field and observations live on different lattices");
    }
    return scan_vector_field(centered, v.values, options, convention).statistic;
}

double bootstrap_quantile(std::span<const double> values, double alpha) {
    if (values.empty()) {
        throw ConfigError("bootstrap sample is empty");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("significance level alpha must lie in (0, 1)");
    }
    const auto k = static_cast<double>(values.size());
    // The 1e-9 guard keeps (1 - alpha) K from rounding up past an exact integer.
    auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * k - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    std::vector<double> sorted(values.begin(), values.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
    return sorted[rank - 1];
}

double bootstrap_p_value(std::span<const double> values, double statistic) {
    const auto exceed = std::count_if(values.begin(), values.end(), [&](double t) { return t >= statistic; });
    return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(values.size()) + 1.0);
}

namespace {

bool all_equal(std::span<const double> xs) {
    return std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) == xs.end();
}

ScanResult degenerate_scan(const LatticeShape& shape, const ScanOptions& options, StatisticConvention c) {
    BlockEnumerator it(shape, options.bounds);
    ScanResult r;
    if (!it.next(r.argmax)) {
        throw ConfigError("no block satisfies the configured volume bounds");
    }
    r.convention = c;
    return r;
}

}  // namespace

PreparedTest PreparedTest::prepare(const ObservationField& field, StatisticKind kind, const WeightSpec& weight,
                                   MeanEstimator mean, const ScanOptions& options, unsigned threads) {
    PreparedTest t;
    t.kind_ = kind;
    t.shape_ = field.shape();
    t.options_ = options;
    const auto convention = convention_of(kind);
    const MeanAssignment global = MeanAssignment::global(field.shape());

    if (kind == StatisticKind::CvM) {
        const GramMatrix g = gram_indicator_cvm(field, weight, threads);
        t.degenerate_ = all_equal(g.entries);
        if (t.degenerate_) {
            t.scan_ = degenerate_scan(t.shape_, options, convention);
            return t;
        }
        // Scanning the globally centered Gram yields the same objective with far
        // less cancellation than the raw one.
        GramMatrix centered = center_gram(g, global);
        GramScanner scanner(t.shape_, options);
        t.scan_ = scanner.scan(centered.entries, {}, convention);
        if (mean == MeanEstimator::Adapted) {
            centered = center_gram(g, MeanAssignment::two_group(t.shape_, t.scan_.argmax));
        }
        t.centered_gram_ = std::move(centered);
    } else {
        t.degenerate_ = field.is_constant();
        if (t.degenerate_) {
            t.scan_ = degenerate_scan(t.shape_, options, convention);
            return t;
        }
        t.scan_ = scan_mean_change(field, options);
        t.centered_field_ = center_field(field, mean == MeanEstimator::Adapted
                                                    ? MeanAssignment::two_group(t.shape_, t.scan_.argmax)
                                                    : global);
    }
    return t;
}

std::vector<double> PreparedTest::bootstrap_sample(const KernelSpec& kernel, Index replicates, std::uint64_t seed,
                                                   unsigned threads) const {
    kernel.validate();
    std::vector<double> out(replicates, 0.0);
    if (degenerate_) {
        return out;
    }
    const auto convention = convention_of(kind_);
    const unsigned workers = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(replicates)));
    if (kind_ == StatisticKind::CvM) {
        std::vector<GramScanner> scanners(workers, GramScanner(shape_, options_));
        parallel_for(replicates, workers, [&](std::size_t j, unsigned w) {
            const MultiplierField v = sample_multiplier(kernel, shape_, derive_seed(seed, j));
            out[j] = scanners[w].scan(centered_gram_.entries, v.values, convention).statistic;
        });
    } else {
        parallel_for(replicates, workers, [&](std::size_t j, unsigned) {
            const MultiplierField v = sample_multiplier(kernel, shape_, derive_seed(seed, j));
            out[j] = scan_vector_field(centered_field_, v.values, options_, convention).statistic;
        });
    }
    return out;
}

Decision decide(double statistic, std::span<const double> sample, double alpha, bool degenerate) {
    Decision d;
    d.threshold = bootstrap_quantile(sample, alpha);
    if (degenerate) {
        d.p_value = 1.0;
        d.reject = false;
        return d;
    }
    d.p_value = bootstrap_p_value(sample, statistic);
    d.reject = statistic >= d.threshold;
    return d;
}

TestReport run_test(const ObservationField& field, const TestConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    cfg.validate(field.p());

    ScanOptions options;
    options.memory_cap_bytes = cfg.memory_cap_bytes;
    if (cfg.size_bounds) {
        options.bounds = VolumeBounds::from_fractions(cfg.size_bounds->eps1, cfg.size_bounds->eps2, field.points());
    }
    const unsigned threads = cfg.threads == 0 ? default_threads() : cfg.threads;

    TestReport report;
    report.kind = cfg.statistic;
    report.alpha = cfg.alpha;
    report.replicates = cfg.replicates;
    report.kernel = cfg.kernel;
    report.mean = cfg.mean;
    report.seed = cfg.seed;
    report.size_bounds = cfg.size_bounds;
    if (cfg.statistic == StatisticKind::CvM) {
        report.weight = cfg.effective_weight(field.p());
    }
    if (bandwidth_too_large(cfg.kernel, field.shape())) {
        std::ostringstream os;
        os << "bandwidth q=" << cfg.kernel.q << " is at least sqrt(min n)=" << std::sqrt(field.shape().min_extent())
           << "; the bootstrap assumes q grows slower than sqrt(n)";
        report.warnings.push_back(os.str());
    }

    const PreparedTest prepared =
        PreparedTest::prepare(field, cfg.statistic, report.weight, cfg.mean, options, threads);
    if (prepared.scan().tiled) {
        report.warnings.push_back("pair prefix tensor exceeds the memory cap; using the slower tiled scan");
    }
    report.statistic = prepared.statistic();
    report.change_block = prepared.scan().argmax;
    report.degenerate = prepared.degenerate();

    const std::vector<double> sample = prepared.bootstrap_sample(cfg.kernel, cfg.replicates, cfg.seed, threads);
    const Decision d = decide(report.statistic, sample, cfg.alpha, report.degenerate);
    report.threshold = d.threshold;
    report.p_value = d.p_value;
    report.reject = d.reject;
    if (cfg.keep_bootstrap_sample) {
        report.bootstrap_sample = sample;
    }
    report.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace episcan
