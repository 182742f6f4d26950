#include "sgivens/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace sgivens {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

CsvData read_csv(std::istream& in) {
  CsvData out;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw CsvError("row " + std::to_string(lineno) + ": expected " + std::to_string(width) + " columns, found " +
                         std::to_string(cells.size()),
                     lineno, std::min(cells.size(), width) + 1);
    }
    std::vector<double> values(width);
    for (std::size_t c = 0; c < width; ++c) {
      if (parse_double(cells[c], values[c]) && std::isfinite(values[c])) continue;
      // a non-numeric first row is a header
      if (rows.empty() && out.header.empty()) {
        bool numeric_somewhere = false;
        double tmp;
        for (const auto& cell : cells) numeric_somewhere = numeric_somewhere || parse_double(cell, tmp);
        if (!numeric_somewhere) {
          out.header = cells;
          values.clear();
          break;
        }
      }
      throw CsvError("row " + std::to_string(lineno) + ", column " + std::to_string(c + 1) +
                         ": cannot parse \"" + cells[c] + "\" as a finite number",
                     lineno, c + 1);
    }
    if (!values.empty()) rows.push_back(std::move(values));
  }
  if (rows.empty()) throw CsvError("no data rows", lineno, 0);
  out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c)
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return out;
}

CsvData read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_csv(in);
}

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& header) {
  out << std::setprecision(17);
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
    out << '\n';
  }
}

void write_matrix_csv_file(const std::string& path, const Matrix& m, const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_matrix_csv(out, m, header);
}

nlohmann::json model_to_json(const Model& model) {
  nlohmann::json j;
  j["q"] = model.dim();
  j["rotators"] = nlohmann::json::array();
  for (const auto& r : model.rotators()) j["rotators"].push_back({{"i", r.pair.i}, {"j", r.pair.j}, {"angle", r.angle}});
  j["eigenvalues"] = std::vector<double>(model.eigenvalues().data(), model.eigenvalues().data() + model.dim());
  return j;
}

Model model_from_json(const nlohmann::json& j) {
  try {
    const int q = j.at("q").get<int>();
    std::vector<Rotator<double>> rot;
    for (const auto& r : j.at("rotators")) {
      rot.push_back({{r.at("i").get<int>(), r.at("j").get<int>()}, r.at("angle").get<double>()});
    }
    const auto ev = j.at("eigenvalues").get<std::vector<double>>();
    Vector d = Eigen::Map<const Vector>(ev.data(), static_cast<Eigen::Index>(ev.size()));
    return Model(q, std::move(rot), std::move(d));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed model file: ") + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sgivens
