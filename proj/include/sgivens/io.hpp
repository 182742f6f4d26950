// Data and model files.
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgivens/givens.hpp"

namespace sgivens {

/// Malformed CSV input; row and column are 1-based positions in the file.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t row, std::size_t column)
      : std::runtime_error(what), row_(row), column_(column) {}
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

struct CsvData {
  Matrix values;                    // n x q
  std::vector<std::string> header;  // empty when the file has no header row
};

/// Rectangular numeric CSV with an optional header row ('.' decimals, finite values).
CsvData read_csv(std::istream& in);
CsvData read_csv_file(const std::string& path);

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& header = {});
void write_matrix_csv_file(const std::string& path, const Matrix& m, const std::vector<std::string>& header = {});

/// {q, rotators: [{i, j, angle}], eigenvalues: [...]}
nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace sgivens
