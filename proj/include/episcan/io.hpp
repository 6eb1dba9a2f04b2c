#pragma once

#include "episcan/bootstrap.hpp"
#include "episcan/hilbert_gram.hpp"
#include "episcan/simulation.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

namespace episcan {

/// Field CSV: header `i1,...,id,x1,...,xp`, one row per lattice point, 1-based
/// indices, any row order, every point exactly once. Errors name the row.
ObservationField read_field(std::istream& in);
ObservationField read_field(const std::filesystem::path& path);

/// Writes rows in lattice order; values use format_real.
void write_field(std::ostream& out, const ObservationField& field);
void write_field(const std::filesystem::path& path, const ObservationField& field);

nlohmann::ordered_json report_to_json(const TestReport& r);
TestReport report_from_json(const nlohmann::json& j);

std::string rejection_table_csv(const RejectionTable& t);
nlohmann::ordered_json rejection_table_json(const RejectionTable& t);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Shortest text that parses back to the same double (at most 17 significant digits).
std::string format_real(double x);

}  // namespace episcan
