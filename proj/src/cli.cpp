#include "episcan/cli.hpp"

#include "episcan/bootstrap.hpp"
#include "episcan/errors.hpp"
#include "episcan/io.hpp"
#include "episcan/simulation.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace episcan {

namespace {

struct TestArgs {
    std::string input;
    std::string stat = "cvm";
    std::string kernel = "ar";
    std::int64_t q = 6;
    Index reps = 199;
    double alpha = 0.05;
    std::string mu = "global";
    std::uint64_t seed = 0;
    std::vector<std::string> weights;
    std::string out;
    bool emit_bootstrap = false;
    std::optional<double> eps1;
    std::optional<double> eps2;
    unsigned threads = 0;
};

struct SimulateArgs {
    std::string scenario = "null";
    Index d = 2;
    Index n = 30;
    double a = 0.2;
    double delta = 0.5;
    std::string change_set;
    int example = 0;
    std::string stat = "cvm";
    std::vector<std::string> weights;
    std::vector<std::string> kernels{"ar"};
    std::vector<std::int64_t> q{6};
    std::vector<double> alpha{0.05};
    std::vector<std::string> mu{"global"};
    Index runs = 200;
    Index reps = 199;
    std::uint64_t seed = 0;
    std::optional<double> eps1;
    std::optional<double> eps2;
    std::string out = ".";
    unsigned threads = 0;
};

struct GenerateArgs {
    Index n = 30;
    Index d = 2;
    double a = 0.2;
    std::optional<double> delta;
    bool skew = false;
    std::string change_set;
    int example = 0;
    std::uint64_t seed = 0;
    std::string out;
};

WeightSpec parse_weights(const std::vector<std::string>& texts) {
    WeightSpec w;
    for (const auto& t : texts) {
        w.coords.push_back(parse_coordinate_weight(t));
    }
    return w;
}

std::optional<SizeBounds> size_bounds(const std::optional<double>& eps1, const std::optional<double>& eps2) {
    if (!eps1 && !eps2) {
        return std::nullopt;
    }
    return SizeBounds{eps1.value_or(0.0), eps2.value_or(0.0)};
}

FractionalBlock change_set_of(const std::string& text, int example, Index d) {
    if (!text.empty() && example != 0) {
        throw ConfigError("give either --change-set or --example, not both");
    }
    if (!text.empty()) {
        return parse_fractional_block(text);
    }
    if (example != 0) {
        return example_change_set(example);
    }
    if (d != 2) {
        throw ConfigError("--change-set is required when d != 2");
    }
    return example_change_set(2);
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) {
        std::cerr << "warning: " << w << '\n';
    }
}

int do_test(const TestArgs& args) {
    const ObservationField field = read_field(std::filesystem::path(args.input));
    TestConfig cfg;
    cfg.statistic = parse_statistic_kind(args.stat);
    cfg.weight = parse_weights(args.weights);
    cfg.kernel = KernelSpec{parse_kernel_kind(args.kernel), args.q};
    cfg.replicates = args.reps;
    cfg.alpha = args.alpha;
    cfg.mean = parse_mean_estimator(args.mu);
    cfg.size_bounds = size_bounds(args.eps1, args.eps2);
    cfg.seed = args.seed;
    cfg.keep_bootstrap_sample = args.emit_bootstrap;
    cfg.threads = args.threads;

    const TestReport report = run_test(field, cfg);
    print_warnings(report.warnings);
    const std::string text = report_to_json(report).dump(2) + "\n";
    if (args.out.empty()) {
        std::cout << text;
    } else {
        write_file_atomic(args.out, text);
    }
    return report.reject ? kExitReject : kExitRetain;
}

int do_simulate(const SimulateArgs& args) {
    ExperimentConfig cfg;
    cfg.d = args.d;
    cfg.n = args.n;
    cfg.a = args.a;
    cfg.scenario.kind = parse_scenario(args.scenario);
    if (cfg.scenario.kind != ScenarioKind::Null) {
        cfg.scenario.change_set = change_set_of(args.change_set, args.example, args.d);
    }
    cfg.scenario.delta = args.delta;
    cfg.test.statistic = parse_statistic_kind(args.stat);
    cfg.test.weight = parse_weights(args.weights);
    cfg.test.replicates = args.reps;
    cfg.test.size_bounds = size_bounds(args.eps1, args.eps2);
    cfg.kernels.clear();
    for (const auto& k : args.kernels) {
        cfg.kernels.push_back(parse_kernel_kind(k));
    }
    cfg.bandwidths = args.q;
    cfg.alphas = args.alpha;
    cfg.estimators.clear();
    for (const auto& m : args.mu) {
        cfg.estimators.push_back(parse_mean_estimator(m));
    }
    cfg.runs = args.runs;
    cfg.seed = args.seed;
    cfg.threads = args.threads;
    cfg.validate();

    const LatticeShape shape = LatticeShape::cube(cfg.n, cfg.d);
    for (std::int64_t q : cfg.bandwidths) {
        if (bandwidth_too_large(KernelSpec{KernelKind::ExponentialAR, q}, shape)) {
            std::cerr << "warning: bandwidth q=" << q << " is at least sqrt(n)\n";
        }
    }

    const RejectionTable table = run_experiment(cfg);
    const std::filesystem::path dir(args.out);
    std::filesystem::create_directories(dir);
    const std::string csv = rejection_table_csv(table);
    write_file_atomic(dir / "rejection_table.csv", csv);
    write_file_atomic(dir / "rejection_table.json", rejection_table_json(table).dump(2) + "\n");
    std::cout << csv;
    return kExitRetain;
}

int do_generate(const GenerateArgs& args) {
    const LatticeShape shape = LatticeShape::cube(args.n, args.d);
    Scenario s;
    if (args.skew && args.delta) {
        throw ConfigError("--skew and --delta are mutually exclusive");
    }
    if (args.skew) {
        s.kind = ScenarioKind::SkewnessChange;
        s.change_set = change_set_of(args.change_set, args.example, args.d);
    } else if (args.delta) {
        s.kind = ScenarioKind::MeanChange;
        s.delta = *args.delta;
        s.change_set = change_set_of(args.change_set, args.example, args.d);
    } else if (!args.change_set.empty() || args.example != 0) {
        throw ConfigError("a change set needs --delta or --skew");
    }
    const ObservationField field = generate_scenario_field(shape, args.a, s, args.seed);
    if (args.out.empty()) {
        write_field(std::cout, field);
    } else {
        write_field(std::filesystem::path(args.out), field);
    }
    return kExitRetain;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Epidemic change-set scan tests on lattice data"};
    app.set_config("--config", "", "TOML/INI file with option defaults; command-line flags take precedence");
    app.require_subcommand(1);

    TestArgs t;
    auto* test = app.add_subcommand("test", "Scan a field and calibrate the statistic with the wild bootstrap");
    test->add_option("--input", t.input, "Field CSV")->required();
    test->add_option("--stat", t.stat, "Statistic: cvm or mean")->capture_default_str();
    test->add_option("--kernel", t.kernel, "Multiplier kernel: ar or ma")->capture_default_str();
    test->add_option("--q", t.q, "Multiplier bandwidth")->capture_default_str();
    test->add_option("--reps", t.reps, "Bootstrap replicates K")->capture_default_str();
    test->add_option("--alpha", t.alpha, "Significance level")->capture_default_str();
    test->add_option("--mu", t.mu, "Mean estimator: global or adapted")->capture_default_str();
    test->add_option("--seed", t.seed, "Master seed")->capture_default_str();
    test->add_option("--weight", t.weights, "gaussian:LOC:SCALE or uniform:A:B, once per coordinate");
    test->add_option("--out", t.out, "Report JSON path (stdout if omitted)");
    test->add_flag("--emit-bootstrap", t.emit_bootstrap, "Include the bootstrap sample in the report");
    test->add_option("--eps1", t.eps1, "Smallest scanned volume fraction");
    test->add_option("--eps2", t.eps2, "Largest scanned volume fraction is 1 - eps2");
    test->add_option("--threads", t.threads, "Worker threads (0: EPISCAN_THREADS or all cores)");

    SimulateArgs s;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo rejection frequencies over a parameter grid");
    sim->add_option("--scenario", s.scenario, "null, mean or skew")->capture_default_str();
    sim->add_option("--d", s.d, "Lattice dimension")->capture_default_str();
    sim->add_option("--n", s.n, "Side length")->capture_default_str();
    sim->add_option("--a", s.a, "AR coefficient of the data")->capture_default_str();
    sim->add_option("--delta", s.delta, "Mean shift on the change set")->capture_default_str();
    sim->add_option("--change-set", s.change_set, "t1,t2:g1,g2");
    sim->add_option("--example", s.example, "Reference change set 1, 2 or 3");
    sim->add_option("--stat", s.stat, "Statistic: cvm or mean")->capture_default_str();
    sim->add_option("--weight", s.weights, "CvM weight per coordinate");
    sim->add_option("--kernel", s.kernels, "Kernel list")->delimiter(',')->capture_default_str();
    sim->add_option("--q", s.q, "Bandwidth list")->delimiter(',')->capture_default_str();
    sim->add_option("--alpha", s.alpha, "Significance level list")->delimiter(',')->capture_default_str();
    sim->add_option("--mu", s.mu, "Mean estimator list")->delimiter(',')->capture_default_str();
    sim->add_option("--runs", s.runs, "Monte Carlo runs N")->capture_default_str();
    sim->add_option("--reps", s.reps, "Bootstrap replicates K")->capture_default_str();
    sim->add_option("--seed", s.seed, "Master seed")->capture_default_str();
    sim->add_option("--eps1", s.eps1, "Smallest scanned volume fraction");
    sim->add_option("--eps2", s.eps2, "Largest scanned volume fraction is 1 - eps2");
    sim->add_option("--out", s.out, "Output directory")->capture_default_str();
    sim->add_option("--threads", s.threads, "Worker threads (0: EPISCAN_THREADS or all cores)");

    GenerateArgs g;
    auto* gen = app.add_subcommand("generate", "Write a simulated field CSV");
    gen->add_option("--n", g.n, "Side length")->capture_default_str();
    gen->add_option("--d", g.d, "Lattice dimension")->capture_default_str();
    gen->add_option("--a", g.a, "AR coefficient")->capture_default_str();
    gen->add_option("--delta", g.delta, "Mean shift on the change set");
    gen->add_flag("--skew", g.skew, "Skewness change on the change set");
    gen->add_option("--change-set", g.change_set, "t1,t2:g1,g2");
    gen->add_option("--example", g.example, "Reference change set 1, 2 or 3");
    gen->add_option("--seed", g.seed, "Seed")->capture_default_str();
    gen->add_option("--out", g.out, "Field CSV path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*test) {
            return do_test(t);
        }
        if (*sim) {
            return do_simulate(s);
        }
        return do_generate(g);
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
}

}  // namespace episcan
