#include "clusterboot/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "clusterboot/error.hpp"

namespace cboot {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(Errc::malformed_input, "line " + std::to_string(line) + ": " + what);
}

} // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') {
    text.remove_prefix(1);
  }
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return v;
}

ClusterDataset read_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) {
    throw Error(Errc::malformed_input, "input is empty; expected header 'population_id,value'");
  }
  if (trim(line) != "population_id,value") {
    malformed(lineno, "expected header 'population_id,value'");
  }

  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<std::size_t> offsets{0};
  std::unordered_set<std::string> closed;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view row = trim(line);
    if (row.empty()) {
      continue;
    }
    const auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
      malformed(lineno, "expected two comma-separated fields");
    }
    const std::string id(trim(row.substr(0, comma)));
    if (id.empty()) {
      malformed(lineno, "empty population_id");
    }
    const auto value = parse_double(row.substr(comma + 1));
    if (!value || !std::isfinite(*value)) {
      malformed(lineno, "value is not a finite number");
    }
    if (ids.empty() || ids.back() != id) {
      if (!ids.empty()) {
        closed.insert(ids.back());
        offsets.push_back(values.size());
      }
      if (closed.count(id) != 0) {
        malformed(lineno, "rows of population '" + id + "' are not contiguous");
      }
      ids.push_back(id);
    }
    values.push_back(*value);
  }
  if (ids.empty()) {
    throw Error(Errc::malformed_input, "no data rows after the header");
  }
  offsets.push_back(values.size());
  return ClusterDataset(std::move(ids), std::move(values), std::move(offsets));
}

ClusterDataset read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::malformed_input, "cannot open '" + path.string() + "'");
  }
  return read_csv(in);
}

void write_csv(std::ostream& out, const ClusterDataset& data) {
  out << "population_id,value\n";
  for (std::size_t k = 0; k < data.K(); ++k) {
    for (double v : data.population(k)) {
      out << data.id(k) << ',' << format_double(v) << '\n';
    }
  }
}

void write_csv_file(const std::filesystem::path& path, const ClusterDataset& data) {
  std::ofstream out(path);
  if (!out) {
    throw Error(Errc::invalid_argument, "cannot write '" + path.string() + "'");
  }
  write_csv(out, data);
}

} // namespace cboot
