#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "csv.hpp"
#include "randopt/expcli.hpp"
#include "randopt/instance_io.hpp"

namespace fs = std::filesystem;

namespace randopt::expcli {

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (ch == '\r' || ch == '\n') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += ch;
      any = true;
    }
  }
  if (quoted) throw IntegrityError("unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

nlohmann::ordered_json typed(const std::string& cell) {
  if (cell.empty()) return nullptr;
  std::size_t used = 0;
  try {
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  if (cell == "true") return true;
  if (cell == "false") return false;
  return cell;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TableSpec {
  const char* file;
  std::optional<std::size_t> expected;
};

TableSpec primary_table(const RunManifest& m) {
  const auto& c = m.config;
  const std::string cmd = c.at("command").get<std::string>();
  if (cmd == "gen") return {"instances.csv", c.at("count").get<std::size_t>()};
  if (cmd == "graphopt" || cmd == "spin") return {"results.csv", c.at("count").get<std::size_t>()};
  if (cmd == "ksat") return {"sat_curve.csv", c.at("densities").size()};
  if (cmd == "parisi") {
    const std::size_t classes = c.at("order_class").get<std::string>() == "both" ? 2 : 1;
    return {"values.csv", classes * (c.at("atoms").get<std::size_t>() + 1)};
  }
  if (c.value("ogp_mode", "") == "stability") return {"stability.csv", std::nullopt};
  if (c.value("ogp_mode", "") == "interpolation") return {"multioverlap.json", c.value("tuples", std::size_t{0})};
  return {"histogram.csv", c.value("bins", std::size_t{0})};
}

}  // namespace

Report emit_report(const fs::path& run_dir) {
  const fs::path manifest_path = run_dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw IntegrityError("no manifest in " + run_dir.string());
  nlohmann::json raw;
  try {
    raw = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("corrupt manifest: ") + e.what());
  }
  const RunManifest m = RunManifest::from_json(raw);

  Report rep;
  try {
    rep.command = m.config.at("command").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("corrupt manifest: ") + e.what());
  }
  for (const auto& o : m.outputs) {
    const fs::path p = run_dir / o.path;
    ++rep.checked;
    if (!fs::exists(p)) rep.missing.push_back(o.path);
    else if (sha256_file(p) != o.sha256) rep.mismatched.push_back(o.path);
  }

  const TableSpec spec = primary_table(m);
  const bool listed = std::any_of(m.outputs.begin(), m.outputs.end(), [&](const auto& o) { return o.path == spec.file; });
  const bool is_json = std::string_view(spec.file).ends_with(".json");
  if (listed && is_json && fs::exists(run_dir / spec.file)) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(run_dir / spec.file));
    } catch (const nlohmann::json::exception& e) {
      throw IntegrityError(std::string("corrupt ") + spec.file + ": " + e.what());
    }
    for (const auto& sample : doc.value("samples", nlohmann::json::array())) {
      const auto& q = sample.at("overlaps");
      double sum = 0.0;
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < q.size(); ++i)
        for (std::size_t j = i + 1; j < q.size(); ++j, ++cnt) sum += q[i][j].get<double>();
      nlohmann::ordered_json fields = nlohmann::ordered_json::object();
      fields["tuple"] = sample.at("tuple");
      fields["replicas"] = q.size();
      fields["failures"] = sample.at("failures").size();
      fields["mean_overlap"] = cnt ? sum / static_cast<double>(cnt) : 0.0;
      rep.rows.push_back({spec.file, std::move(fields)});
    }
  } else if (listed && fs::exists(run_dir / spec.file)) {
    const auto table = parse_csv(read_file(run_dir / spec.file));
    if (!table.empty()) {
      const auto& header = table.front();
      for (std::size_t r = 1; r < table.size(); ++r) {
        nlohmann::ordered_json fields = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < header.size() && i < table[r].size(); ++i) fields[header[i]] = typed(table[r][i]);
        rep.rows.push_back({spec.file, std::move(fields)});
      }
    }
  }
  rep.expected_rows = spec.expected;
  rep.row_count_ok = !spec.expected || rep.rows.size() == *spec.expected;

  std::ofstream(run_dir / "report.json") << rep.to_json().dump(2) << '\n';
  std::ofstream(run_dir / "report.txt", std::ios::binary) << rep.to_text();
  return rep;
}

nlohmann::json Report::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) rows_json.push_back({{"source", r.source}, {"fields", nlohmann::json::parse(r.fields.dump())}});
  return {{"command", command},
          {"integrity", {{"checked", checked}, {"mismatched", mismatched}, {"missing", missing},
                         {"flags", integrity_flags()}}},
          {"rows", rows_json},
          {"expected_rows", expected_rows ? nlohmann::json(*expected_rows) : nlohmann::json(nullptr)},
          {"row_count_ok", row_count_ok}};
}

std::string Report::to_text() const {
  std::string out = fmt::format("run: {}\noutputs checked: {}\nintegrity flags: {}\n", command, checked,
                                integrity_flags());
  for (const auto& p : mismatched) out += fmt::format("  digest mismatch: {}\n", p);
  for (const auto& p : missing) out += fmt::format("  missing: {}\n", p);
  out += fmt::format("rows: {}", rows.size());
  if (expected_rows) out += fmt::format(" (expected {}{})", *expected_rows, row_count_ok ? "" : ", MISMATCH");
  out += "\n";
  if (rows.empty()) return out;

  std::vector<std::string> cols;
  for (const auto& [key, _] : rows.front().fields.items()) cols.push_back(key);
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> width;
  for (const auto& c : cols) width.push_back(c.size());
  for (const auto& r : rows) {
    std::vector<std::string> line;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto v = r.fields.contains(cols[i]) ? r.fields.at(cols[i]) : nlohmann::ordered_json(nullptr);
      std::string s = v.is_null() ? "" : v.is_string() ? v.get<std::string>() : v.dump();
      if (v.is_number_float()) s = fmt::format("{:.6g}", v.get<double>());
      width[i] = std::max(width[i], s.size());
      line.push_back(std::move(s));
    }
    cells.push_back(std::move(line));
  }
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t i = 0; i < line.size(); ++i) out += fmt::format("{}{:>{}}", i ? "  " : "", line[i], width[i]);
    out += "\n";
  };
  emit(cols);
  for (const auto& line : cells) emit(line);
  return out;
}

}  // namespace randopt::expcli
