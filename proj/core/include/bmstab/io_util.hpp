#pragma once

#include <string>
#include <vector>

namespace bmstab {

// Shortest round-trip decimal representation; keeps report files
// byte-identical across reruns.
std::string fmt_double(double x);

std::string join_csv(const std::vector<std::string>& fields);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace bmstab
