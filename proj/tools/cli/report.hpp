#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <tiltperm/permtest.hpp>
#include <tiltperm/simulate.hpp>

namespace tiltperm::cli {

using Json = nlohmann::ordered_json;

/// Shortest text that reads back to the same double; "inf", "-inf", "nan".
std::string format_real(double v);

/// A double as JSON; non-finite values become null.
Json real_json(double v);

Json tail_table_json(const TailTable& t);
Json unconditional_json(const UnconditionalResult& r);
Json power_json(const PowerResult& r);
Json test_result_json(const PermutationTestResult& r);

/// Long-format CSV: one line per (row, u).
void write_tail_table_csv(std::ostream& out, const TailTable& t);
void write_unconditional_csv(std::ostream& out, const UnconditionalResult& r);
void write_power_csv(std::ostream& out, const PowerResult& r);

}  // namespace tiltperm::cli
