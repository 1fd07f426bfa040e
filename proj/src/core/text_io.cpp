#include "vtm/core/text_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "vtm/core/errors.hpp"

namespace vtm {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), v,
                    std::chars_format::general, 17);
  if (ec != std::errc{}) throw InputError("cannot format value");
  return std::string(buf.data(), end);
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw InputError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

long long parse_int(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw InputError("not an integer: '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// KeyValueDocument

const std::string* KeyValueDocument::Section::find(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

const std::string& KeyValueDocument::Section::at(std::string_view key) const {
  if (const auto* v = find(key)) return *v;
  throw InputError("missing key '" + std::string(key) + "' in section [" +
                   name + "]");
}

KeyValueDocument KeyValueDocument::parse(std::istream& in) {
  KeyValueDocument doc;
  std::string line;
  int line_no = 0;
  Section* current = nullptr;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = trim(line);
    if (text.empty() || text.front() == '#' || text.front() == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']') {
        throw InputError("line " + std::to_string(line_no) +
                         ": unterminated section header");
      }
      current = &doc.add_section(std::string(trim(text.substr(1, text.size() - 2))));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("line " + std::to_string(line_no) +
                       ": expected 'key = value'");
    }
    if (current == nullptr) current = &doc.add_section("");
    current->entries.emplace_back(std::string(trim(text.substr(0, eq))),
                                  std::string(trim(text.substr(eq + 1))));
  }
  return doc;
}

KeyValueDocument KeyValueDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse(in);
}

KeyValueDocument::Section& KeyValueDocument::add_section(std::string name) {
  sections_.push_back({std::move(name), {}});
  return sections_.back();
}

void KeyValueDocument::set(std::string_view section, std::string key,
                           std::string value) {
  auto it = std::find_if(sections_.begin(), sections_.end(),
                         [&](const Section& s) { return s.name == section; });
  Section& s = it == sections_.end() ? add_section(std::string(section)) : *it;
  for (auto& [k, v] : s.entries) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  s.entries.emplace_back(std::move(key), std::move(value));
}

const KeyValueDocument::Section* KeyValueDocument::find(
    std::string_view section) const {
  for (const auto& s : sections_) {
    if (s.name == section) return &s;
  }
  return nullptr;
}

const KeyValueDocument::Section& KeyValueDocument::at(
    std::string_view section) const {
  if (const auto* s = find(section)) return *s;
  throw InputError("missing section [" + std::string(section) + "]");
}

void KeyValueDocument::write(std::ostream& out) const {
  bool first = true;
  for (const auto& s : sections_) {
    if (!s.name.empty()) {
      if (!first) out << '\n';
      out << '[' << s.name << "]\n";
    }
    for (const auto& [k, v] : s.entries) out << k << " = " << v << '\n';
    first = false;
  }
}

void KeyValueDocument::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write(out);
}

// ---------------------------------------------------------------------------
// Matrix Market

CoordinateMatrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty Matrix Market file");
  std::string lowered = line;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  auto header = split_whitespace(lowered);
  if (header.size() != 5 || header[0] != "%%matrixmarket" ||
      header[1] != "matrix") {
    throw InputError("missing %%MatrixMarket matrix header");
  }
  if (header[2] != "coordinate") {
    throw InputError("only coordinate Matrix Market files are supported");
  }
  if (header[3] != "real" && header[3] != "integer" && header[3] != "double") {
    throw InputError("unsupported Matrix Market field '" +
                     std::string(header[3]) + "'");
  }
  const bool symmetric = header[4] == "symmetric";
  if (!symmetric && header[4] != "general") {
    throw InputError("unsupported Matrix Market symmetry '" +
                     std::string(header[4]) + "'");
  }

  long long rows = -1, cols = -1, nnz = -1;
  while (std::getline(in, line)) {
    auto text = trim(line);
    if (text.empty() || text.front() == '%') continue;
    auto fields = split_whitespace(text);
    if (fields.size() != 3) throw InputError("malformed Matrix Market size line");
    rows = parse_int(fields[0]);
    cols = parse_int(fields[1]);
    nnz = parse_int(fields[2]);
    break;
  }
  if (rows < 0) throw InputError("Matrix Market size line missing");
  if (rows != cols) throw InputError("matrix is not square");
  if (rows < 1 || nnz < 0) throw InputError("invalid Matrix Market sizes");

  CoordinateMatrix m;
  m.dim = static_cast<int>(rows);
  std::vector<MatrixEntry> lower;  // general files: entries with row > col
  long long seen = 0;
  while (seen < nnz && std::getline(in, line)) {
    auto text = trim(line);
    if (text.empty() || text.front() == '%') continue;
    auto fields = split_whitespace(text);
    if (fields.size() != 3) throw InputError("malformed Matrix Market entry");
    long long i = parse_int(fields[0]) - 1;
    long long j = parse_int(fields[1]) - 1;
    double v = parse_double(fields[2]);
    if (i < 0 || j < 0 || i >= rows || j >= rows) {
      throw InputError("Matrix Market entry index out of range");
    }
    ++seen;
    MatrixEntry e{static_cast<VertexId>(std::min(i, j)),
                  static_cast<VertexId>(std::max(i, j)), v};
    if (!symmetric && i > j) {
      lower.push_back(e);
    } else {
      m.entries.push_back(e);
    }
  }
  if (seen != nnz) throw InputError("Matrix Market file ended early");

  if (!symmetric) {
    // A general file must hold a symmetric matrix: each strict lower entry
    // has to mirror an upper one.
    auto by_pair = [](const MatrixEntry& x, const MatrixEntry& y) {
      return x.row != y.row ? x.row < y.row : x.col < y.col;
    };
    std::sort(m.entries.begin(), m.entries.end(), by_pair);
    std::sort(lower.begin(), lower.end(), by_pair);
    std::vector<MatrixEntry> offdiag;
    for (const auto& e : m.entries) {
      if (e.row != e.col && e.value != 0.0) offdiag.push_back(e);
    }
    std::erase_if(lower, [](const MatrixEntry& e) { return e.value == 0.0; });
    if (offdiag != lower) {
      throw InputError("general Matrix Market file is not symmetric");
    }
  }
  return m;
}

void write_matrix_market(std::ostream& out, int dim,
                         std::span<const MatrixEntry> entries) {
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << dim << ' ' << dim << ' ' << entries.size() << '\n';
  for (const auto& e : entries) {
    // Lower triangle per Matrix Market symmetric convention.
    out << (e.col + 1) << ' ' << (e.row + 1) << ' ' << format_double(e.value)
        << '\n';
  }
}

void write_matrix_market(std::ostream& out, const SparseSymmetricSystem& sys) {
  write_matrix_market(out, sys.dim(), sys.entries());
}

std::vector<double> read_vector(std::istream& in) {
  std::vector<double> v;
  std::string line;
  while (std::getline(in, line)) {
    auto text = trim(line);
    if (text.empty() || text.front() == '%' || text.front() == '#') continue;
    v.push_back(parse_double(text));
  }
  return v;
}

void write_vector(std::ostream& out, std::span<const double> v) {
  for (double x : v) out << format_double(x) << '\n';
}

SparseSymmetricSystem load_system(const std::filesystem::path& matrix,
                                  const std::filesystem::path& rhs) {
  std::ifstream min(matrix);
  if (!min) throw InputError("cannot open matrix file " + matrix.string());
  auto coo = read_matrix_market(min);
  auto b = load_vector(rhs);
  return SparseSymmetricSystem(coo.dim, std::move(coo.entries), std::move(b));
}

void save_system(const SparseSymmetricSystem& sys,
                 const std::filesystem::path& matrix,
                 const std::filesystem::path& rhs) {
  std::ofstream mout(matrix);
  if (!mout) throw InputError("cannot write " + matrix.string());
  write_matrix_market(mout, sys);
  save_vector(sys.rhs(), rhs);
}

std::vector<double> load_vector(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open vector file " + path.string());
  return read_vector(in);
}

void save_vector(std::span<const double> v, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write_vector(out, v);
}

}  // namespace vtm
