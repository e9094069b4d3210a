#pragma once

#include <string>
#include <vector>

namespace msldp::cli {

std::string version();

/// Runs one command. Returns 0 on success, 1 on a domain error, 2 on a usage error.
int dispatch(int argc, const char* const* argv);
int dispatch(const std::vector<std::string>& args);

/// Resolves a model name or path against MSLDP_MODEL_PATH and the bundled directory.
std::string find_model(const std::string& name);
/// Bundled model names.
std::vector<std::string> bundled_models();

}  // namespace msldp::cli
