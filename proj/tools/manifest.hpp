#pragma once

#include <map>
#include <string>

namespace ineq::cli {

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

// Versions of the linked third-party libraries.
std::map<std::string, std::string> library_versions();

}  // namespace ineq::cli
