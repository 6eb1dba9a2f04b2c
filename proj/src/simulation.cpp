#include "episcan/simulation.hpp"

#include "episcan/errors.hpp"
#include "episcan/parallel.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace episcan {

void FractionalBlock::validate() const {
    if (theta.size() != gamma.size() || theta.empty()) {
        throw ConfigError("change set needs matching, nonempty theta and gamma");
    }
    for (Index l = 0; l < theta.size(); ++l) {
        if (!(theta[l] > 0.0 && theta[l] < gamma[l] && gamma[l] <= 1.0)) {
            throw ConfigError("change set needs 0 < theta < gamma <= 1 on every axis");
        }
    }
}

Block FractionalBlock::to_block(const LatticeShape& shape) const {
    validate();
    if (theta.size() != shape.dim()) {
        throw ConfigError("change set dimension " + std::to_string(theta.size()) + " does not match lattice dimension " +
                          std::to_string(shape.dim()));
    }
    Block b{IndexVec(shape.dim()), IndexVec(shape.dim())};
    for (Index l = 0; l < shape.dim(); ++l) {
        const double n = static_cast<double>(shape.extent(l));
        // Products like 30 * 0.55 land a hair below the integer in binary.
        b.lo[l] = static_cast<Index>(std::floor(n * theta[l] + 1e-9));
        b.hi[l] = static_cast<Index>(std::floor(n * gamma[l] + 1e-9));
    }
    validate_block(shape, b);
    return b;
}

std::string FractionalBlock::to_string() const {
    std::ostringstream os;
    for (Index l = 0; l < theta.size(); ++l) {
        os << (l ? "," : "") << theta[l];
    }
    os << ':';
    for (Index l = 0; l < gamma.size(); ++l) {
        os << (l ? "," : "") << gamma[l];
    }
    return os.str();
}

FractionalBlock example_change_set(int example) {
    switch (example) {
    case 1:
        return {{0.2, 0.3}, {0.6, 0.55}};
    case 2:
        return {{0.1, 0.1}, {0.9, 0.85}};
    case 3:
        return {{0.05, 0.1}, {0.95, 1.0}};
    default:
        throw ConfigError("example change sets are numbered 1 to 3");
    }
}

FractionalBlock parse_fractional_block(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("change set must look like t1,t2:g1,g2, got '" + text + "'");
    }
    auto parse_list = [&](const std::string& part) {
        std::vector<double> out;
        std::stringstream ss(part);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                out.push_back(std::stod(item, &used));
                if (used != item.size()) {
                    throw std::invalid_argument(item);
                }
            } catch (const std::exception&) {
                throw ConfigError("change set coordinate '" + item + "' is not a number");
            }
        }
        return out;
    };
    FractionalBlock b{parse_list(text.substr(0, colon)), parse_list(text.substr(colon + 1))};
    b.validate();
    return b;
}

ObservationField gen_ar_field(const LatticeShape& shape, double a, Rng& rng) {
    if (!(std::abs(a) < 1.0)) {
        throw ConfigError("AR coefficient must satisfy |a| < 1");
    }
    ObservationField f(shape, 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : f.data()) {
        v = normal(rng);
    }
    separable_ar_filter(shape, a, f.data());
    return f;
}

ObservationField inject_mean_change(const ObservationField& field, double delta, const FractionalBlock& c) {
    const Block b = c.to_block(field.shape());
    ObservationField out = field;
    for (Index i = 0; i < field.points(); ++i) {
        if (b.contains(field.shape().unflat(i))) {
            for (double& x : out.at(i)) {
                x += delta;
            }
        }
    }
    return out;
}

ObservationField gen_skewness_change(const LatticeShape& shape, double a, const FractionalBlock& c, Rng& rng) {
    const ObservationField y = gen_ar_field(shape, a, rng);
    const ObservationField y2 = gen_ar_field(shape, a, rng);
    const bool has_change = !c.theta.empty();
    const Block b = has_change ? c.to_block(shape) : Block{};
    ObservationField out(shape, 1);
    for (Index i = 0; i < shape.points(); ++i) {
        const double s = y.at(i)[0] * y.at(i)[0] + y2.at(i)[0] * y2.at(i)[0];
        out.at(i)[0] = (has_change && b.contains(shape.unflat(i))) ? 4.0 - s : s;
    }
    return out;
}

std::string to_string(ScenarioKind s) {
    switch (s) {
    case ScenarioKind::Null:
        return "null";
    case ScenarioKind::MeanChange:
        return "mean";
    case ScenarioKind::SkewnessChange:
        return "skew";
    }
    return "null";
}

ScenarioKind parse_scenario(const std::string& text) {
    if (text == "null") {
        return ScenarioKind::Null;
    }
    if (text == "mean") {
        return ScenarioKind::MeanChange;
    }
    if (text == "skew") {
        return ScenarioKind::SkewnessChange;
    }
    throw ConfigError("scenario must be null, mean or skew, got '" + text + "'");
}

ObservationField generate_scenario_field(const LatticeShape& shape, double a, const Scenario& s, std::uint64_t seed) {
    Rng rng(seed);
    switch (s.kind) {
    case ScenarioKind::Null:
        return gen_ar_field(shape, a, rng);
    case ScenarioKind::MeanChange:
        return inject_mean_change(gen_ar_field(shape, a, rng), s.delta, s.change_set);
    case ScenarioKind::SkewnessChange:
        return gen_skewness_change(shape, a, s.change_set, rng);
    }
    throw ConfigError("unknown scenario");
}

void ExperimentConfig::validate() const {
    if (d < 1 || n < 1) {
        throw ConfigError("experiment needs d >= 1 and n >= 1");
    }
    if (!(std::abs(a) < 1.0)) {
        throw ConfigError("AR coefficient must satisfy |a| < 1");
    }
    if (runs < 1) {
        throw ConfigError("Monte Carlo runs N must be at least 1");
    }
    if (kernels.empty() || bandwidths.empty() || alphas.empty() || estimators.empty()) {
        throw ConfigError("experiment grid has an empty axis");
    }
    if (scenario.kind != ScenarioKind::Null) {
        scenario.change_set.validate();
        if (scenario.change_set.theta.size() != d) {
            throw ConfigError("change set dimension does not match d");
        }
    }
    for (std::int64_t q : bandwidths) {
        KernelSpec{KernelKind::ExponentialAR, q}.validate();
    }
    for (double alpha : alphas) {
        TestConfig t = test;
        t.alpha = alpha;
        t.validate(1);
    }
}

const RejectionCell& RejectionTable::cell(MeanEstimator e, KernelKind k, std::int64_t q, double alpha) const {
    for (const auto& c : cells) {
        if (c.estimator == e && c.kernel == k && c.q == q && c.alpha == alpha) {
            return c;
        }
    }
    throw ConfigError("no such cell in the rejection table");
}

RejectionTable run_experiment(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    cfg.validate();
    const LatticeShape shape = LatticeShape::cube(cfg.n, cfg.d);

    ScanOptions options;
    options.memory_cap_bytes = cfg.test.memory_cap_bytes;
    if (cfg.test.size_bounds) {
        options.bounds = VolumeBounds::from_fractions(cfg.test.size_bounds->eps1, cfg.test.size_bounds->eps2,
                                                      shape.points());
    }
    const WeightSpec weight = cfg.test.effective_weight(1);

    // Cell layout: estimator-major, then kernel, q, alpha.
    RejectionTable table;
    table.config = cfg;
    for (MeanEstimator e : cfg.estimators) {
        for (KernelKind k : cfg.kernels) {
            for (std::int64_t q : cfg.bandwidths) {
                for (double alpha : cfg.alphas) {
                    RejectionCell c;
                    c.scenario = cfg.scenario.kind;
                    c.estimator = e;
                    c.kernel = k;
                    c.a = cfg.a;
                    c.n = cfg.n;
                    c.q = q;
                    c.alpha = alpha;
                    c.runs = cfg.runs;
                    table.cells.push_back(c);
                }
            }
        }
    }

    // decisions[run * cells + cell]
    const Index ncells = table.cells.size();
    std::vector<char> decisions(cfg.runs * ncells, 0);
    const unsigned threads = cfg.threads == 0 ? default_threads() : cfg.threads;
    parallel_for(cfg.runs, threads, [&](std::size_t run, unsigned) {
        const ObservationField field =
            generate_scenario_field(shape, cfg.a, cfg.scenario, derive_seed(cfg.seed, 2 * run));
        const std::uint64_t boot_seed = derive_seed(cfg.seed, 2 * run + 1);
        Index cell = 0;
        for (MeanEstimator e : cfg.estimators) {
            const PreparedTest prepared = PreparedTest::prepare(field, cfg.test.statistic, weight, e, options, 1);
            for (KernelKind k : cfg.kernels) {
                for (std::int64_t q : cfg.bandwidths) {
                    const auto sample = prepared.bootstrap_sample(KernelSpec{k, q}, cfg.test.replicates, boot_seed, 1);
                    for (double alpha : cfg.alphas) {
                        const Decision d = decide(prepared.statistic(), sample, alpha, prepared.degenerate());
                        decisions[run * ncells + cell] = d.reject ? 1 : 0;
                        ++cell;
                    }
                }
            }
        }
    });
    for (Index run = 0; run < cfg.runs; ++run) {
        for (Index c = 0; c < ncells; ++c) {
            table.cells[c].rejections += static_cast<Index>(decisions[run * ncells + c]);
        }
    }
    table.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return table;
}

}  // namespace episcan
