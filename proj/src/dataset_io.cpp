#include "hedgefair/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "hedgefair/hiring_scenario.hpp"

namespace hedgefair {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string where(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::uint64_t parse_unsigned(const std::string& s, std::size_t line, const char* what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError(where(line) + what + " must be an unsigned integer, got '" + s + "'");
  }
  return v;
}

double parse_loss(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError(where(line) + "loss must be a decimal, got '" + s + "'");
  }
  return v;
}

struct RawRow {
  std::size_t line;
  std::vector<std::string> f;
};

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, ptr);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "'");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

Dataset parse_dataset_csv(const std::string& text, const std::optional<SchemaSidecar>& sidecar) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<RawRow> rows;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!header_seen) {
      if (line != kDatasetHeader) {
        throw ValidationError("dataset header must be '" + std::string(kDatasetHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 8) {
      throw ValidationError(where(line_no) + "expected 8 fields, got " +
                            std::to_string(fields.size()));
    }
    rows.push_back({line_no, std::move(fields)});
  }
  if (!header_seen) throw ValidationError("dataset is missing its header row");

  std::vector<std::string> cities;
  std::map<std::string, std::string> zip_groups;
  if (sidecar) {
    cities = sidecar->cities;
    zip_groups = sidecar->zip_to_group;
  } else {
    cities = hiring::default_cities();
    std::vector<std::string> zips;
    std::set<std::string> seen_zip;
    for (const auto& r : rows) {
      if (std::find(cities.begin(), cities.end(), r.f[3]) == cities.end()) cities.push_back(r.f[3]);
      if (seen_zip.insert(r.f[4]).second) zips.push_back(r.f[4]);
    }
    zip_groups = hiring::leading_digit_groups(zips);
  }

  Dataset d;
  d.schema = hiring::make_schema(cities, zip_groups);
  for (const auto& r : rows) {
    const auto& f = r.f;
    const std::uint64_t id = parse_unsigned(f[0], r.line, "id");
    if (f[1] != "M" && f[1] != "F") {
      throw ValidationError(where(r.line) + "gender must be M or F, got '" + f[1] + "'");
    }
    const double school = static_cast<double>(parse_unsigned(f[2], r.line, "school"));
    Instance inst{id, {f[1], school, f[3], f[4]}};
    try {
      validate_instance(*d.schema, inst);
    } catch (const SchemaError& e) {
      throw ValidationError(where(r.line) + e.what());
    }
    d.instances.push_back(std::move(inst));
    const bool has_truth = !f[5].empty();
    if (has_truth != !f[6].empty() || has_truth != !f[7].empty()) {
      throw ValidationError(where(r.line) + "losses must be present iff truth is present");
    }
    if (has_truth) {
      if (f[5] != "0" && f[5] != "1") {
        throw ValidationError(where(r.line) + "truth must be 0, 1 or empty");
      }
      GroundTruthEntry e{id, f[5] == "1" ? Label::accept : Label::reject, parse_loss(f[6], r.line),
                         parse_loss(f[7], r.line)};
      try {
        validate_entry(e);
      } catch (const ValidationError& err) {
        throw ValidationError(where(r.line) + err.what());
      }
      d.truths[id] = e;
    }
  }
  d.validate();
  return d;
}

Dataset read_dataset_csv(const std::filesystem::path& path,
                         const std::optional<SchemaSidecar>& sidecar) {
  return parse_dataset_csv(read_text_file(path), sidecar);
}

std::string format_dataset_csv(const Dataset& data) {
  if (!data.schema) throw ValidationError("dataset has no schema");
  const auto& s = *data.schema;
  if (s.size() != 4 || s.at(hiring::kGender).name != "gender" ||
      s.at(hiring::kSchool).name != "school" || s.at(hiring::kCity).name != "city" ||
      s.at(hiring::kZip).name != "zip") {
    throw ValidationError("only the hiring schema has a CSV form");
  }
  std::ostringstream out;
  out << kDatasetHeader << '\n';
  for (const auto& inst : data.instances) {
    out << inst.id << ',' << inst.categorical(hiring::kGender) << ','
        << format_double(inst.numeric(hiring::kSchool)) << ',' << inst.categorical(hiring::kCity)
        << ',' << inst.categorical(hiring::kZip) << ',';
    if (const auto* t = data.truth_for(inst.id)) {
      out << to_int(t->desired) << ',' << format_double(t->loss_reject) << ','
          << format_double(t->loss_accept);
    } else {
      out << ",,";
    }
    out << '\n';
  }
  return out.str();
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  write_text_file(path, format_dataset_csv(data));
}

SchemaSidecar sidecar_from_schema(const AttributeSchema& schema) {
  SchemaSidecar sc;
  sc.cities = schema.at(schema.index_of("city")).values;
  const auto& zip = schema.at(schema.index_of("zip"));
  if (zip.grouping) {
    sc.zip_to_group = zip.grouping->group_of;
  } else {
    for (const auto& z : zip.values) sc.zip_to_group[z] = z;
  }
  return sc;
}

}  // namespace hedgefair
