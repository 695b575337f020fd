#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace qdkmc::csv {

/// Shortest decimal form that round-trips; "nan"/"inf" for non-finite values.
std::string format(double v);
std::string format(std::uint64_t v);

double parse_double(std::string_view s);
std::uint64_t parse_u64(std::string_view s);

std::vector<std::string> split(std::string_view line, char sep = ',');

/// Writes comma-separated rows; throws on any I/O failure.
class Writer {
public:
  Writer(const std::filesystem::path& path, std::initializer_list<std::string_view> header,
         bool append = false);
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header,
         bool append = false);

  void row(const std::vector<std::string>& fields);
  void flush();

private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

std::string join(const std::vector<std::string>& fields, char sep = ',');

}  // namespace qdkmc::csv
