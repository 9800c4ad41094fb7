// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "cef/trace.hpp"

namespace cef {

/// One JSON document per trace; see schemas/trace.schema.json.
std::string trace_to_json(const Trace& trace, int indent = -1);
/// Throws ContractError on malformed documents. Does not run validate_trace.
Trace trace_from_json(std::string_view text);

void save_trace(const std::string& path, const Trace& trace);
Trace load_trace(const std::string& path);

}  // namespace cef
