#include "paneldesign/panel.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "paneldesign/errors.hpp"
#include "paneldesign/rng.hpp"

namespace paneldesign {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

double parse_number(const std::string& cell, int row, int col) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end || cell.empty()) {
    throw DataError("non-numeric cell '" + cell + "' at data row " + std::to_string(row + 1) +
                    ", period column " + std::to_string(col + 1));
  }
  if (!std::isfinite(v)) {
    throw DataError("non-finite value at data row " + std::to_string(row + 1));
  }
  return v;
}

}  // namespace

Panel make_panel(std::vector<std::string> unit_ids, std::vector<std::string> period_ids,
                 Eigen::MatrixXd y, int t_pre) {
  const int n = static_cast<int>(y.rows());
  const int s = static_cast<int>(y.cols());
  if (static_cast<int>(unit_ids.size()) != n || static_cast<int>(period_ids.size()) != s) {
    throw DataError("label counts do not match outcome matrix dimensions");
  }
  if (n < 2) throw DataError("panel needs at least 2 units, got " + std::to_string(n));
  if (t_pre < 1 || t_pre > s) {
    throw DataError("t_pre=" + std::to_string(t_pre) + " out of range [1, " + std::to_string(s) + "]");
  }
  if (!y.allFinite()) throw DataError("panel contains missing or non-finite outcomes");
  std::unordered_set<std::string> seen;
  for (const auto& id : unit_ids) {
    if (!seen.insert(id).second) throw DataError("duplicate unit id '" + id + "'");
  }
  return Panel{std::move(unit_ids), std::move(period_ids), std::move(y), t_pre};
}

Panel load_panel_csv(const std::string& csv_text, int t_pre) {
  std::istringstream in(csv_text);
  std::string line;
  std::vector<std::string> period_ids;
  std::vector<std::string> unit_ids;
  std::vector<std::vector<double>> rows;
  bool have_header = false;
  int line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (!have_header) {
      if (cells.size() < 2) throw DataError("header row needs at least one period label");
      period_ids.assign(cells.begin() + 1, cells.end());
      have_header = true;
      continue;
    }
    if (cells.size() != period_ids.size() + 1) {
      throw DataError("ragged row at line " + std::to_string(line_no) + ": expected " +
                      std::to_string(period_ids.size() + 1) + " cells, got " +
                      std::to_string(cells.size()));
    }
    if (cells[0].empty()) throw DataError("empty unit id at line " + std::to_string(line_no));
    unit_ids.push_back(cells[0]);
    std::vector<double> row(period_ids.size());
    for (std::size_t c = 0; c < period_ids.size(); ++c) {
      row[c] = parse_number(cells[c + 1], static_cast<int>(rows.size()), static_cast<int>(c));
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw DataError("empty CSV input");
  if (rows.empty()) throw DataError("CSV has a header but no data rows");

  Eigen::MatrixXd y(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(period_ids.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < period_ids.size(); ++c) {
      y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return make_panel(std::move(unit_ids), std::move(period_ids), std::move(y), t_pre);
}

Panel load_panel_file(const std::string& path, int t_pre) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open panel file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_panel_csv(buf.str(), t_pre);
}

std::string panel_to_csv(const Panel& p) {
  std::ostringstream out;
  out << "unit";
  for (const auto& pid : p.period_ids) out << ',' << pid;
  out << '\n';
  char num[64];
  for (int i = 0; i < p.n_units(); ++i) {
    out << p.unit_ids[static_cast<std::size_t>(i)];
    for (int t = 0; t < p.n_periods(); ++t) {
      std::snprintf(num, sizeof(num), "%.17g", p.y(i, t));
      out << ',' << num;
    }
    out << '\n';
  }
  return out.str();
}

Panel subsample(const Panel& src, int n_units, int n_periods, int t_pre, std::uint64_t seed) {
  if (n_units < 2 || n_units > src.n_units()) {
    throw DataError("subsample units " + std::to_string(n_units) + " out of range [2, " +
                    std::to_string(src.n_units()) + "]");
  }
  if (n_periods < 1 || n_periods > src.n_periods()) {
    throw DataError("subsample periods " + std::to_string(n_periods) + " out of range [1, " +
                    std::to_string(src.n_periods()) + "]");
  }
  Rng rng(seed);
  const std::vector<int> units = rng.sample_without_replacement(src.n_units(), n_units);
  const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(src.n_periods() - n_periods + 1)));

  std::vector<std::string> uids;
  uids.reserve(static_cast<std::size_t>(n_units));
  Eigen::MatrixXd y(n_units, n_periods);
  for (int r = 0; r < n_units; ++r) {
    uids.push_back(src.unit_ids[static_cast<std::size_t>(units[static_cast<std::size_t>(r)])]);
    y.row(r) = src.y.row(units[static_cast<std::size_t>(r)]).segment(start, n_periods);
  }
  std::vector<std::string> pids(src.period_ids.begin() + start,
                                src.period_ids.begin() + start + n_periods);
  return make_panel(std::move(uids), std::move(pids), std::move(y), t_pre);
}

Panel apply_treatment(const Panel& p, const std::vector<int>& d, const TreatmentScenario& s) {
  if (static_cast<int>(d.size()) != p.n_units()) {
    throw DataError("treatment indicator length " + std::to_string(d.size()) +
                    " does not match panel with " + std::to_string(p.n_units()) + " units");
  }
  if (static_cast<int>(s.effects.size()) != p.n_units()) {
    throw DataError("effects vector length does not match panel");
  }
  if (s.treated_periods != p.n_post()) {
    throw DataError("scenario treated_periods=" + std::to_string(s.treated_periods) +
                    " but panel has " + std::to_string(p.n_post()) + " post periods");
  }
  if (s.treated_periods < 1) throw DataError("scenario needs at least one treated period");
  if (!s.effects.allFinite()) throw DataError("non-finite treatment effects");

  Panel out = p;
  for (int i = 0; i < p.n_units(); ++i) {
    if (d[static_cast<std::size_t>(i)] != 0) {
      out.y.row(i).tail(p.n_post()).array() += s.effects(i);
    }
  }
  return out;
}

}  // namespace paneldesign
