#include "gradctrl/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

namespace gradctrl {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view token, const char* what) {
  double value = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw std::runtime_error(std::string("could not parse ") + what + " from '" +
                             std::string(token) + "'");
  return value;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::vector<std::string_view> nonempty_lines(const std::string& text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) lines.push_back(std::string_view(text).substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,node_index,value\n";
  for (Index k = 0; k < traj.times.size(); ++k) {
    const std::string t = format_double(traj.times(k));
    for (Index i = 0; i < traj.states.rows(); ++i) {
      out += t;
      out += ',';
      out += std::to_string(i);
      out += ',';
      out += format_double(traj.states(i, k));
      out += '\n';
    }
  }
  return out;
}

Trajectory parse_trajectory_csv(const std::string& text) {
  const auto lines = nonempty_lines(text);
  if (lines.empty() || lines[0] != "t,node_index,value")
    throw std::runtime_error("trajectory csv must start with header t,node_index,value");
  std::vector<double> times;
  std::vector<std::vector<double>> columns;
  Index nodes = 0;
  for (size_t li = 1; li < lines.size(); ++li) {
    const auto cells = split_csv_line(lines[li]);
    if (cells.size() != 3) throw std::runtime_error("trajectory csv rows need 3 columns");
    const double t = parse_double(cells[0], "time");
    const Index i = static_cast<Index>(parse_double(cells[1], "node index"));
    const double v = parse_double(cells[2], "value");
    if (times.empty() || t != times.back()) {
      times.push_back(t);
      columns.emplace_back();
    }
    columns.back().push_back(v);
    nodes = std::max(nodes, i + 1);
  }
  Trajectory traj;
  traj.times = Eigen::Map<Vector>(times.data(), static_cast<Index>(times.size()));
  traj.states.resize(nodes, static_cast<Index>(columns.size()));
  for (size_t k = 0; k < columns.size(); ++k) {
    if (columns[k].size() != static_cast<size_t>(nodes))
      throw std::runtime_error("trajectory csv has ragged time blocks");
    for (Index i = 0; i < nodes; ++i) traj.states(i, static_cast<Index>(k)) = columns[k][i];
  }
  return traj;
}

std::string control_csv(const Control& u, const Vector& times) {
  if (times.size() != u.steps())
    throw std::invalid_argument("control csv needs one time per step");
  std::string out = "t,index,value\n";
  for (Index k = 0; k < u.steps(); ++k) {
    const std::string t = format_double(times(k));
    for (Index i = 0; i < u.rows(); ++i) {
      out += t;
      out += ',';
      out += std::to_string(i);
      out += ',';
      out += format_double(u.values(i, k));
      out += '\n';
    }
  }
  return out;
}

Control parse_control_csv(const std::string& text) {
  const auto lines = nonempty_lines(text);
  if (lines.empty() || lines[0] != "t,index,value")
    throw std::runtime_error("control csv must start with header t,index,value");
  std::vector<double> times;
  std::vector<std::vector<double>> columns;
  Index rows = 0;
  for (size_t li = 1; li < lines.size(); ++li) {
    const auto cells = split_csv_line(lines[li]);
    if (cells.size() != 3) throw std::runtime_error("control csv rows need 3 columns");
    const double t = parse_double(cells[0], "time");
    const Index i = static_cast<Index>(parse_double(cells[1], "index"));
    const double v = parse_double(cells[2], "value");
    if (times.empty() || t != times.back()) {
      times.push_back(t);
      columns.emplace_back();
    }
    columns.back().push_back(v);
    rows = std::max(rows, i + 1);
  }
  Control u = Control::zero(rows, static_cast<Index>(columns.size()));
  for (size_t k = 0; k < columns.size(); ++k) {
    if (columns[k].size() != static_cast<size_t>(rows))
      throw std::runtime_error("control csv has ragged time blocks");
    for (Index i = 0; i < rows; ++i) u.values(i, static_cast<Index>(k)) = columns[k][i];
  }
  return u;
}

namespace {

const char* multiplier_header(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::AvgInSpace: return "t,index,lambda,atom";
    case ConstraintKind::PointwiseQ: return "t,element,nu,atom";
    case ConstraintKind::Componentwise: return "t,index,nu_plus,nu_minus,atom";
    case ConstraintKind::ZeroOrderBox: return "t,node,mu_plus,mu_minus,atom";
    case ConstraintKind::None: return "t,index,lambda,atom";
  }
  return "t,index,lambda,atom";
}

}  // namespace

std::string multipliers_csv(const MultiplierSet& ms, const Vector& times) {
  std::string out = multiplier_header(ms.kind);
  out += '\n';
  if (ms.empty()) return out;
  const bool two_sided = ms.interior_lower.size() > 0;
  if (times.size() != ms.interior.cols())
    throw std::invalid_argument("multiplier csv needs one time per column");
  for (Index k = 0; k < ms.interior.cols(); ++k) {
    const std::string t = format_double(times(k));
    for (Index rr = 0; rr < ms.interior.rows(); ++rr) {
      out += t;
      out += ',';
      out += std::to_string(rr);
      out += ',';
      out += format_double(ms.interior(rr, k));
      if (two_sided) {
        out += ',';
        out += format_double(ms.interior_lower(rr, k));
      }
      out += ",0\n";
    }
  }
  const std::string t_end = format_double(times(times.size() - 1));
  for (Index rr = 0; rr < ms.terminal.size(); ++rr) {
    out += t_end;
    out += ',';
    out += std::to_string(rr);
    out += ',';
    out += format_double(ms.terminal(rr));
    if (two_sided) {
      out += ',';
      out += format_double(ms.terminal_lower(rr));
    }
    out += ",1\n";
  }
  return out;
}

MultiplierSet parse_multipliers_csv(const std::string& text, ConstraintKind kind) {
  const auto lines = nonempty_lines(text);
  if (lines.empty() || lines[0] != multiplier_header(kind))
    throw std::runtime_error("multiplier csv header does not match the constraint family");
  const bool two_sided =
      kind == ConstraintKind::Componentwise || kind == ConstraintKind::ZeroOrderBox;
  const size_t expected_cells = two_sided ? 5 : 4;

  struct Row {
    double t;
    Index index;
    double upper, lower;
    bool atom;
  };
  std::vector<Row> rows;
  std::vector<double> times;
  Index max_index = -1;
  for (size_t li = 1; li < lines.size(); ++li) {
    const auto cells = split_csv_line(lines[li]);
    if (cells.size() != expected_cells)
      throw std::runtime_error("multiplier csv row has the wrong number of columns");
    Row row;
    row.t = parse_double(cells[0], "time");
    row.index = static_cast<Index>(parse_double(cells[1], "index"));
    row.upper = parse_double(cells[2], "multiplier");
    row.lower = two_sided ? parse_double(cells[3], "multiplier") : 0.0;
    row.atom = parse_double(cells[expected_cells - 1], "atom flag") != 0.0;
    if (!row.atom && (times.empty() || row.t != times.back())) times.push_back(row.t);
    max_index = std::max(max_index, row.index);
    rows.push_back(row);
  }
  MultiplierSet ms;
  ms.kind = kind;
  const Index n_rows = max_index + 1;
  const Index n_times = static_cast<Index>(times.size());
  ms.interior = Matrix::Zero(n_rows, n_times);
  ms.terminal = Vector::Zero(n_rows);
  if (two_sided) {
    ms.interior_lower = Matrix::Zero(n_rows, n_times);
    ms.terminal_lower = Vector::Zero(n_rows);
  }
  std::map<double, Index> time_index;
  for (Index k = 0; k < n_times; ++k) time_index[times[k]] = k;
  for (const Row& row : rows) {
    if (row.atom) {
      ms.terminal(row.index) = row.upper;
      if (two_sided) ms.terminal_lower(row.index) = row.lower;
    } else {
      const Index k = time_index.at(row.t);
      ms.interior(row.index, k) = row.upper;
      if (two_sided) ms.interior_lower(row.index, k) = row.lower;
    }
  }
  return ms;
}

std::string history_csv(const std::vector<IterationRecord>& history) {
  std::string out = "iter,obj,penalty,viol,pg_residual,step\n";
  for (const IterationRecord& rec : history) {
    out += std::to_string(rec.iter);
    out += ',';
    out += format_double(rec.objective);
    out += ',';
    out += format_double(rec.penalty);
    out += ',';
    out += format_double(rec.violation);
    out += ',';
    out += format_double(rec.pg_residual);
    out += ',';
    out += format_double(rec.step_length);
    out += '\n';
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("could not open " + path.string() + " for writing");
  out << contents;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("could not open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace gradctrl
