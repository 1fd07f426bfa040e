#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vtm/core/system.hpp"

namespace vtm {

/// Shortest locale-independent form that round-trips (17 significant digits).
std::string format_double(double v);

/// Locale-independent parsing; throws InputError on garbage or trailing text.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split_whitespace(std::string_view text);
std::string_view trim(std::string_view text);

/// Flat key-value document with bracketed sections:
///
///     # comment
///     [section args]
///     key = value
///
/// Keys before the first section header belong to the unnamed section "".
/// Section and key order is preserved.
class KeyValueDocument {
 public:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    const std::string* find(std::string_view key) const;
    const std::string& at(std::string_view key) const;
  };

  static KeyValueDocument parse(std::istream& in);
  static KeyValueDocument load(const std::filesystem::path& path);

  Section& add_section(std::string name);
  void set(std::string_view section, std::string key, std::string value);

  const std::vector<Section>& sections() const { return sections_; }
  const Section* find(std::string_view section) const;
  const Section& at(std::string_view section) const;

  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<Section> sections_;
};

// Matrix Market coordinate format (real/integer, symmetric or general with
// symmetric content). Written files are symmetric, lower triangle, 1-based.
struct CoordinateMatrix {
  int dim = 0;
  std::vector<MatrixEntry> entries;  // upper triangle, 0-based
};

CoordinateMatrix read_matrix_market(std::istream& in);
void write_matrix_market(std::ostream& out, const SparseSymmetricSystem& sys);
void write_matrix_market(std::ostream& out, int dim,
                         std::span<const MatrixEntry> entries);

/// One value per line; blank lines and lines starting with '%' or '#' skipped.
std::vector<double> read_vector(std::istream& in);
void write_vector(std::ostream& out, std::span<const double> v);

SparseSymmetricSystem load_system(const std::filesystem::path& matrix,
                                  const std::filesystem::path& rhs);
void save_system(const SparseSymmetricSystem& sys,
                 const std::filesystem::path& matrix,
                 const std::filesystem::path& rhs);

std::vector<double> load_vector(const std::filesystem::path& path);
void save_vector(std::span<const double> v, const std::filesystem::path& path);

}  // namespace vtm
