#include "qdkmc/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace qdkmc::csv {

std::string format(double v)
{
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format(std::uint64_t v)
{
  return std::to_string(v);
}

double parse_double(std::string_view s)
{
  if (s == "nan")
    return std::nan("");
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("csv: not a number: '" + std::string(s) + "'");
  return v;
}

std::uint64_t parse_u64(std::string_view s)
{
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("csv: not an unsigned integer: '" + std::string(s) + "'");
  return v;
}

std::vector<std::string> split(std::string_view line, char sep)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& fields, char sep)
{
  std::string s;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0)
      s += sep;
    s += fields[i];
  }
  return s;
}

Writer::Writer(const std::filesystem::path& path, std::initializer_list<std::string_view> header,
               bool append)
    : Writer(path, std::vector<std::string>(header.begin(), header.end()), append)
{
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header,
               bool append)
    : path_(path), columns_(header.size())
{
  out_.open(path, append ? std::ios::app : std::ios::trunc);
  if (!out_)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (!append)
    out_ << join(header) << '\n';
}

void Writer::row(const std::vector<std::string>& fields)
{
  if (fields.size() != columns_)
    throw std::logic_error("csv: row width does not match header for " + path_.string());
  out_ << join(fields) << '\n';
  if (!out_)
    throw std::runtime_error("write failed: " + path_.string());
}

void Writer::flush()
{
  out_.flush();
  if (!out_)
    throw std::runtime_error("write failed: " + path_.string());
}

}  // namespace qdkmc::csv
