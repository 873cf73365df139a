#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dpstat/errors.hpp"
#include "dpstat/format.hpp"
#include "dpstat/mechanisms.hpp"

namespace dpstat {

// One experiment row: `observed` is the quantity tested against
// `bound_value` (a coverage frequency, a worst-case error, a bin
// probability), with its standard error alongside.
struct ReportRow {
  std::string tag;
  double axis;
  double err_private;
  double err_nonprivate;
  double observed;
  double std_err;
  double bound_value;
  bool bound_satisfied;
};

struct ExperimentReport {
  std::string experiment_id;
  std::uint64_t root_seed;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::size_t trials;
  std::vector<ReportRow> rows;
  enum class Verdict { pass, fail, inconclusive } verdict;
  std::string notes;

  static const char* verdict_name(Verdict v) {
    switch (v) {
      case Verdict::pass: return "pass";
      case Verdict::fail: return "fail";
      case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
  }
};

// Single-record artifact (estimate / sensitivity / bounds commands).
struct RecordReport {
  std::string id;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<std::pair<std::string, std::string>> fields;
};

namespace detail {

inline void append_preamble(
    std::string& out, const std::string& id,
    const std::vector<std::pair<std::string, std::string>>& echo) {
  out += "# id = " + id + "\n";
  for (const auto& [k, v] : echo) out += "# " + k + " = " + v + "\n";
}

}  // namespace detail

inline std::string to_csv_string(const ExperimentReport& r) {
  std::string out;
  detail::append_preamble(out, r.experiment_id, r.config_echo);
  out += "# root_seed = " + format_count(r.root_seed) + "\n";
  out += "# trials = " + format_count(r.trials) + "\n";
  out += "# verdict = " + std::string(ExperimentReport::verdict_name(r.verdict)) + "\n";
  if (!r.notes.empty()) out += "# notes = " + r.notes + "\n";
  out +=
      "tag,axis,err_private,err_nonprivate,observed,std_err,bound_value,"
      "bound_satisfied\n";
  for (const ReportRow& row : r.rows) {
    out += csv_escape(row.tag) + "," + format_real(row.axis) + "," +
           format_real(row.err_private) + "," + format_real(row.err_nonprivate) +
           "," + format_real(row.observed) + "," + format_real(row.std_err) +
           "," + format_real(row.bound_value) + "," +
           format_bool(row.bound_satisfied) + "\n";
  }
  return out;
}

inline std::string to_csv_string(const RecordReport& r) {
  std::string out;
  detail::append_preamble(out, r.id, r.config_echo);
  std::string header, row;
  for (std::size_t i = 0; i < r.fields.size(); ++i) {
    if (i) {
      header += ",";
      row += ",";
    }
    header += csv_escape(r.fields[i].first);
    row += csv_escape(r.fields[i].second);
  }
  out += header + "\n" + row + "\n";
  return out;
}

inline nlohmann::ordered_json to_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["experiment_id"] = r.experiment_id;
  j["root_seed"] = r.root_seed;
  j["trials"] = r.trials;
  j["verdict"] = ExperimentReport::verdict_name(r.verdict);
  j["notes"] = r.notes;
  nlohmann::ordered_json cfg;
  for (const auto& [k, v] : r.config_echo) cfg[k] = v;
  j["config"] = cfg;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const ReportRow& row : r.rows) {
    nlohmann::ordered_json jr;
    jr["tag"] = row.tag;
    jr["axis"] = row.axis;
    jr["err_private"] = row.err_private;
    jr["err_nonprivate"] = row.err_nonprivate;
    jr["observed"] = row.observed;
    jr["std_err"] = row.std_err;
    jr["bound_value"] = row.bound_value;
    jr["bound_satisfied"] = row.bound_satisfied;
    rows.push_back(jr);
  }
  j["rows"] = rows;
  return j;
}

inline nlohmann::ordered_json to_json(const RecordReport& r) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["id"] = r.id;
  nlohmann::ordered_json cfg;
  for (const auto& [k, v] : r.config_echo) cfg[k] = v;
  j["config"] = cfg;
  nlohmann::ordered_json fields;
  for (const auto& [k, v] : r.fields) fields[k] = v;
  j["fields"] = fields;
  return j;
}

// Flat record of a single private release.  noise columns are empty on the
// exponential path, where no scale exists.
inline RecordReport estimate_record(const PrivateEstimate& e) {
  auto opt_real = [](double v) {
    return std::isnan(v) ? std::string() : format_real(v);
  };
  RecordReport r;
  r.id = "estimate";
  r.fields = {
      {"value", format_real(e.value)},
      {"nonprivate_value", format_real(e.nonprivate_value)},
      {"noise_scale", opt_real(e.noise_scale)},
      {"noise_draw", opt_real(e.noise_draw)},
      {"mechanism", PrivateEstimate::mechanism_name(e.mechanism)},
      {"alpha", format_real(e.params.alpha())},
      {"delta", format_real(e.params.delta())},
      {"seed", format_count(e.seed)},
  };
  return r;
}

// Write-to-temp plus rename, so failures leave no partial artifact behind.
inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw Error("write failed: " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("cannot rename into place: " + path);
  }
}

template <typename Report>
void write_report_csv(const Report& r, const std::string& path) {
  write_file_atomic(path, to_csv_string(r));
}

template <typename Report>
void write_report_json(const Report& r, const std::string& path) {
  write_file_atomic(path, to_json(r).dump(2) + "\n");
}

}  // namespace dpstat
