#pragma once

#include <string>

namespace qmeas {

// JSON request front-end shared by the C API and the command line tool.
// Commands: measure, wasserstein, state, groundstate, metric, verify, demo.
// Field names are listed in the README. Returns the report text (JSON, or
// CSV when the request has "format": "csv"). Malformed requests raise
// SchemaError.
std::string run_request(const std::string& command, const std::string& request_json);

}  // namespace qmeas
