#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string_view>

#include "tasil/error.hpp"
#include "tasil/format.hpp"
#include "tasil/survival.hpp"

namespace tasil::survival {

std::optional<double> SurvivalRecord::covariate(const std::string& name) const {
  const auto it = covariates.find(name);
  if (it == covariates.end()) return std::nullopt;
  return it->second;
}

void Cohort::validate() const {
  std::set<std::string_view> ids;
  for (const auto& r : records) {
    if (!(r.time > 0.0) || !std::isfinite(r.time)) {
      throw DataError("cohort '" + name + "': case '" + r.case_id + "' has non-positive time");
    }
    if (!ids.insert(r.case_id).second) {
      throw DataError("cohort '" + name + "': duplicate case_id '" + r.case_id + "'");
    }
  }
}

CompleteCases complete_cases(std::span<const SurvivalRecord> records,
                             const std::vector<std::string>& names) {
  CompleteCases out;
  for (const auto& r : records) {
    bool ok = true;
    for (const auto& n : names) {
      if (!r.covariates.contains(n)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      out.records.push_back(r);
    } else {
      ++out.excluded;
    }
  }
  return out;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool parse_double(std::string_view s, double& out) {
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end && std::isfinite(out);
}

}  // namespace

Cohort read_cohort_csv(std::istream& in, std::string name, const std::string& source) {
  Cohort cohort;
  cohort.name = std::move(name);

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(source, 1, "empty cohort file");
  ++line_no;
  const auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "case_id" || header[1] != "time_months" ||
      header[2] != "event") {
    throw ParseError(source, 1, "header must start with 'case_id,time_months,event'");
  }
  std::set<std::string_view> seen;
  for (std::size_t i = 3; i < header.size(); ++i) {
    if (header[i].empty()) throw ParseError(source, 1, "empty covariate name in column " + std::to_string(i + 1));
    if (!seen.insert(header[i]).second) {
      throw ParseError(source, 1, "duplicate covariate column '" + std::string(header[i]) + "'");
    }
    cohort.covariate_names.emplace_back(header[i]);
  }

  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()));
    }
    SurvivalRecord r;
    r.case_id = std::string(fields[0]);
    if (r.case_id.empty()) throw ParseError(source, line_no, "empty case_id");
    if (!ids.insert(r.case_id).second) {
      throw ParseError(source, line_no, "duplicate case_id '" + r.case_id + "'");
    }
    if (!parse_double(fields[1], r.time) || !(r.time > 0.0)) {
      throw ParseError(source, line_no, "time_months must be a positive number");
    }
    if (fields[2] == "1") {
      r.event = true;
    } else if (fields[2] == "0") {
      r.event = false;
    } else {
      throw ParseError(source, line_no, "event must be 0 or 1");
    }
    for (std::size_t i = 3; i < fields.size(); ++i) {
      if (fields[i].empty()) continue;
      double v = 0.0;
      if (!parse_double(fields[i], v)) {
        throw ParseError(source, line_no,
                         "covariate '" + cohort.covariate_names[i - 3] + "' is not a number");
      }
      r.covariates.emplace(cohort.covariate_names[i - 3], v);
    }
    cohort.records.push_back(std::move(r));
  }
  return cohort;
}

Cohort load_cohort(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open cohort file '" + path.string() + "'");
  return read_cohort_csv(in, path.stem().string(), path.string());
}

void write_cohort_csv(std::ostream& out, const Cohort& cohort) {
  out << "case_id,time_months,event";
  for (const auto& n : cohort.covariate_names) out << ',' << n;
  out << '\n';
  for (const auto& r : cohort.records) {
    out << r.case_id << ',' << format_value(r.time) << ',' << (r.event ? '1' : '0');
    for (const auto& n : cohort.covariate_names) out << ',' << format_value(r.covariate(n));
    out << '\n';
  }
}

void save_cohort(const Cohort& cohort, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_cohort_csv(out, cohort);
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace tasil::survival
