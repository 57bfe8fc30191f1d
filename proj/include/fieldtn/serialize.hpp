#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fieldtn/catalog.hpp"
#include "fieldtn/cmpo.hpp"
#include "fieldtn/cmps.hpp"
#include "fieldtn/lattice.hpp"
#include "fieldtn/sector_state.hpp"
#include "fieldtn/unitarity.hpp"

namespace fieldtn {

using Json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

// Complex numbers are [re, im]; matrices are arrays of rows. Doubles are written
// with shortest round-trip formatting, so JSON output re-reads without loss.
Json to_json(Complex z);
Json to_json(const ComplexMatrix& m);
Json to_json(const Interval& d);
/// {"kind": ..., "domain": [a, b], ...}; SerializationError for callable leaves.
Json to_json(const MatrixFunction& f);
Json to_json(const Cmps& psi);
Json to_json(const Cmpo& O);
Json to_json(const SectorState& s);
Json to_json(const UnitarityReport& r);
Json to_json(const CmpuFamily& family);

Complex complex_from_json(const Json& j);
ComplexMatrix matrix_from_json(const Json& j);
Interval interval_from_json(const Json& j);
/// Children without "domain" inherit the parent's; a bare number or matrix is a constant.
MatrixFunction matrix_function_from_json(const Json& j,
                                         std::optional<Interval> default_domain = std::nullopt);
/// Also accepts {"type": "cmps", "builder": "vacuum" | "fock", ...}.
Cmps cmps_from_json(const Json& j);
/// Also accepts {"type": "catalog", "family": ..., "params": {...}, "interval": [a, b]}.
Cmpo cmpo_from_json(const Json& j);
SectorState sector_state_from_json(const Json& j);
UnitarityReport unitarity_report_from_json(const Json& j);
CmpuFamily family_from_json(const std::string& tag, const Json& params, const Interval& interval);
/// {"probes": [{"id": "p", "labels": "LA", "xs": [...]}, ...]} or a bare array.
std::vector<LatticeProbe> probes_from_json(const Json& j);

Json read_json_file(const std::string& path);
/// Two-space indented JSON followed by a newline.
std::string dump_json(const Json& j);
void write_text_file(const std::string& path, const std::string& text);

/// 12 significant digits.
std::string format_real(double v);
/// "re+imi" with 12 significant digits, e.g. "1+0i".
std::string format_complex(Complex z);

}  // namespace fieldtn
