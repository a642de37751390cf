#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tslt {

/// Locale-independent shortest round-trip formatting ("0.25", "1e-12").
std::string format_number(double value);
std::string format_number(std::uint64_t value);

/// Row-at-a-time CSV writer. Fields containing a comma, quote or newline are
/// quoted. Every row must have as many fields as the header.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);

  class Row {
   public:
    Row& add(std::string_view text);
    Row& add(const char* text) { return add(std::string_view(text)); }
    Row& add(const std::string& text) { return add(std::string_view(text)); }
    Row& add(double value) { return add(format_number(value)); }
    Row& add(std::size_t value) { return add(format_number(static_cast<std::uint64_t>(value))); }
    Row& add(int value) { return add(std::to_string(value)); }
    Row& add(bool value) { return add(value ? "1" : "0"); }

   private:
    friend class CsvWriter;
    std::vector<std::string> fields_;
  };

  Row row() const { return Row{}; }
  void write(const Row& row);
  std::size_t rows_written() const { return rows_; }

 private:
  void write_fields(const std::vector<std::string>& fields);
  std::ostream& out_;
  std::size_t columns_;
  std::size_t rows_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index; throws std::runtime_error naming the column if absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);
double parse_number(std::string_view text);

}  // namespace tslt
