#include "episcan/io.hpp"

#include "episcan/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace episcan {

std::string format_real(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

bool column_is(const std::string& name, char prefix, Index number) {
    return name == std::string(1, prefix) + std::to_string(number);
}

std::string row_label(Index row) { return "row " + std::to_string(row); }

}  // namespace

ObservationField read_field(std::istream& in) {
    std::string line;
    Index line_no = 0;
    // Skip leading blank lines.
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            break;
        }
    }
    const auto header = split_csv_line(line);
    Index d = 0;
    while (d < header.size() && column_is(header[d], 'i', d + 1)) {
        ++d;
    }
    Index p = 0;
    while (d + p < header.size() && column_is(header[d + p], 'x', p + 1)) {
        ++p;
    }
    if (d == 0 || p == 0 || d + p != header.size()) {
        throw DataError("malformed header on " + row_label(line_no) + ": expected i1,...,id,x1,...,xp");
    }

    struct Row {
        IndexVec idx;
        std::vector<double> x;
        Index line;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != d + p) {
            throw DataError(row_label(line_no) + " has " + std::to_string(cells.size()) + " columns, expected " +
                            std::to_string(d + p));
        }
        Row r{IndexVec(d), std::vector<double>(p), line_no};
        for (Index l = 0; l < d; ++l) {
            try {
                std::size_t used = 0;
                const long long v = std::stoll(cells[l], &used);
                if (used != cells[l].size() || v < 1) {
                    throw std::invalid_argument(cells[l]);
                }
                r.idx[l] = static_cast<Index>(v);
            } catch (const std::exception&) {
                throw DataError(row_label(line_no) + ": index '" + cells[l] + "' is not a positive integer");
            }
        }
        for (Index c = 0; c < p; ++c) {
            const std::string& cell = cells[d + c];
            double v = 0.0;
            try {
                std::size_t used = 0;
                v = std::stod(cell, &used);
                if (used != cell.size()) {
                    throw std::invalid_argument(cell);
                }
            } catch (const std::out_of_range&) {
                v = HUGE_VAL;
            } catch (const std::exception&) {
                throw DataError(row_label(line_no) + ": value '" + cell + "' is not a number");
            }
            if (!std::isfinite(v)) {
                throw DataError(row_label(line_no) + ": value '" + cell + "' is not finite");
            }
            r.x[c] = v;
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) {
        throw DataError("field file has no data rows");
    }

    IndexVec dims(d, 0);
    for (const auto& r : rows) {
        for (Index l = 0; l < d; ++l) {
            dims[l] = std::max(dims[l], r.idx[l]);
        }
    }
    const LatticeShape shape(dims);
    std::vector<double> data(shape.points() * p, 0.0);
    std::vector<Index> seen_at(shape.points(), 0);
    for (const auto& r : rows) {
        const Index f = shape.flat(r.idx);
        if (seen_at[f] != 0) {
            std::string where;
            for (Index l = 0; l < d; ++l) {
                where += (l ? "," : "") + std::to_string(r.idx[l]);
            }
            throw DataError(row_label(r.line) + ": duplicate lattice point (" + where + "), first seen on " +
                            row_label(seen_at[f]));
        }
        seen_at[f] = r.line;
        std::copy(r.x.begin(), r.x.end(), data.begin() + static_cast<std::ptrdiff_t>(f * p));
    }
    for (Index f = 0; f < shape.points(); ++f) {
        if (seen_at[f] == 0) {
            const IndexVec idx = shape.unflat(f);
            std::string where;
            for (Index l = 0; l < d; ++l) {
                where += (l ? "," : "") + std::to_string(idx[l]);
            }
            throw DataError("missing lattice point (" + where + ") in a lattice of " + std::to_string(shape.points()) +
                            " points");
        }
    }
    return ObservationField(shape, p, std::move(data));
}

ObservationField read_field(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open field file " + path.string());
    }
    return read_field(in);
}

void write_field(std::ostream& out, const ObservationField& field) {
    const LatticeShape& shape = field.shape();
    for (Index l = 0; l < shape.dim(); ++l) {
        out << (l ? "," : "") << 'i' << l + 1;
    }
    for (Index c = 0; c < field.p(); ++c) {
        out << ",x" << c + 1;
    }
    out << '\n';
    for (Index i = 0; i < field.points(); ++i) {
        const IndexVec idx = shape.unflat(i);
        for (Index l = 0; l < idx.size(); ++l) {
            out << (l ? "," : "") << idx[l];
        }
        for (double x : field.at(i)) {
            out << ',' << format_real(x);
        }
        out << '\n';
    }
}

void write_field(const std::filesystem::path& path, const ObservationField& field) {
    std::ostringstream os;
    write_field(os, field);
    write_file_atomic(path, os.str());
}

nlohmann::ordered_json report_to_json(const TestReport& r) {
    nlohmann::ordered_json j;
    j["statistic"] = r.statistic;
    j["statistic_kind"] = to_string(r.kind);
    j["change_block"] = {{"lo", r.change_block.lo}, {"hi", r.change_block.hi}};
    j["threshold"] = r.threshold;
    j["alpha"] = r.alpha;
    j["p_value"] = r.p_value;
    j["decision"] = r.reject ? "reject" : "retain";
    j["K"] = r.replicates;
    j["kernel"] = {{"kind", to_string(r.kernel.kind)}, {"q", r.kernel.q}};
    j["mean_estimator"] = to_string(r.mean);
    if (r.weight.coords.empty()) {
        j["weight"] = nullptr;
    } else {
        auto w = nlohmann::ordered_json::array();
        for (const auto& c : r.weight.coords) {
            w.push_back(to_string(c));
        }
        j["weight"] = w;
    }
    j["seed"] = r.seed;
    j["runtime_ms"] = r.runtime_ms;
    j["degenerate"] = r.degenerate;
    if (r.size_bounds) {
        j["size_bounds"] = {{"eps1", r.size_bounds->eps1}, {"eps2", r.size_bounds->eps2}};
    }
    if (!r.warnings.empty()) {
        j["warnings"] = r.warnings;
    }
    if (!r.bootstrap_sample.empty()) {
        j["bootstrap_sample"] = r.bootstrap_sample;
    }
    return j;
}

TestReport report_from_json(const nlohmann::json& j) {
    try {
        TestReport r;
        r.statistic = j.at("statistic").get<double>();
        r.kind = parse_statistic_kind(j.at("statistic_kind").get<std::string>());
        r.change_block.lo = j.at("change_block").at("lo").get<IndexVec>();
        r.change_block.hi = j.at("change_block").at("hi").get<IndexVec>();
        r.threshold = j.at("threshold").get<double>();
        r.alpha = j.at("alpha").get<double>();
        r.p_value = j.at("p_value").get<double>();
        const auto decision = j.at("decision").get<std::string>();
        if (decision != "reject" && decision != "retain") {
            throw DataError("decision must be 'reject' or 'retain'");
        }
        r.reject = decision == "reject";
        r.replicates = j.at("K").get<Index>();
        r.kernel.kind = parse_kernel_kind(j.at("kernel").at("kind").get<std::string>());
        r.kernel.q = j.at("kernel").at("q").get<std::int64_t>();
        r.mean = parse_mean_estimator(j.at("mean_estimator").get<std::string>());
        if (!j.at("weight").is_null()) {
            for (const auto& c : j.at("weight")) {
                r.weight.coords.push_back(parse_coordinate_weight(c.get<std::string>()));
            }
        }
        r.seed = j.at("seed").get<std::uint64_t>();
        r.runtime_ms = j.at("runtime_ms").get<double>();
        r.degenerate = j.at("degenerate").get<bool>();
        if (j.contains("size_bounds")) {
            r.size_bounds = SizeBounds{j["size_bounds"].at("eps1").get<double>(), j["size_bounds"].at("eps2").get<double>()};
        }
        if (j.contains("warnings")) {
            r.warnings = j["warnings"].get<std::vector<std::string>>();
        }
        if (j.contains("bootstrap_sample")) {
            r.bootstrap_sample = j["bootstrap_sample"].get<std::vector<double>>();
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    } catch (const ConfigError& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    }
}

std::string rejection_table_csv(const RejectionTable& t) {
    std::ostringstream os;
    os << "scenario,estimator,kernel,a,n,q,alpha,rejections,runs,frequency\n";
    for (const auto& c : t.cells) {
        os << to_string(c.scenario) << ',' << to_string(c.estimator) << ',' << to_string(c.kernel) << ','
           << format_real(c.a) << ',' << c.n << ',' << c.q << ',' << format_real(c.alpha) << ',' << c.rejections
           << ',' << c.runs << ',' << format_real(c.frequency()) << '\n';
    }
    return os.str();
}

nlohmann::ordered_json rejection_table_json(const RejectionTable& t) {
    const ExperimentConfig& cfg = t.config;
    nlohmann::ordered_json config;
    config["d"] = cfg.d;
    config["n"] = cfg.n;
    config["a"] = cfg.a;
    config["scenario"] = to_string(cfg.scenario.kind);
    if (cfg.scenario.kind == ScenarioKind::MeanChange) {
        config["delta"] = cfg.scenario.delta;
    }
    if (cfg.scenario.kind != ScenarioKind::Null) {
        config["change_set"] = {{"theta", cfg.scenario.change_set.theta}, {"gamma", cfg.scenario.change_set.gamma}};
    }
    config["statistic_kind"] = to_string(cfg.test.statistic);
    if (cfg.test.statistic == StatisticKind::CvM) {
        config["weight"] = cfg.test.effective_weight(1).to_string();
    }
    auto kernels = nlohmann::ordered_json::array();
    for (auto k : cfg.kernels) {
        kernels.push_back(to_string(k));
    }
    config["kernels"] = kernels;
    config["q"] = cfg.bandwidths;
    config["alpha"] = cfg.alphas;
    auto estimators = nlohmann::ordered_json::array();
    for (auto e : cfg.estimators) {
        estimators.push_back(to_string(e));
    }
    config["estimators"] = estimators;
    config["runs"] = cfg.runs;
    config["K"] = cfg.test.replicates;
    config["seed"] = cfg.seed;
    if (cfg.test.size_bounds) {
        config["size_bounds"] = {{"eps1", cfg.test.size_bounds->eps1}, {"eps2", cfg.test.size_bounds->eps2}};
    }

    nlohmann::ordered_json j;
    j["config"] = config;
    j["shared_data_across_grid"] = t.shared_data_across_grid;
    j["runtime_ms"] = t.runtime_ms;
    auto cells = nlohmann::ordered_json::array();
    for (const auto& c : t.cells) {
        cells.push_back({{"scenario", to_string(c.scenario)},
                         {"estimator", to_string(c.estimator)},
                         {"kernel", to_string(c.kernel)},
                         {"a", c.a},
                         {"n", c.n},
                         {"q", c.q},
                         {"alpha", c.alpha},
                         {"rejections", c.rejections},
                         {"runs", c.runs},
                         {"frequency", c.frequency()}});
    }
    j["cells"] = cells;
    return j;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write " + tmp.string());
        }
        out << contents;
        out.flush();
        if (!out) {
            throw DataError("write to " + tmp.string() + " failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

}  // namespace episcan
