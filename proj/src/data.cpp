#include "alle/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "alle/error.hpp"
#include "iris_table.hpp"

namespace alle {

namespace {

std::string default_name(Index j) { return "x" + std::to_string(j); }

std::vector<std::string> default_names(Index dims) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(dims));
  for (Index j = 0; j < dims; ++j) names.push_back(default_name(j));
  return names;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool parse_double(std::string_view text, double& value) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc{} && ptr == end;
}

std::string format_double(double value) {
  std::array<char, 32> buffer{};
  const auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), ptr);
}

int label_from_cell(double value, std::size_t line_number) {
  if (!(value >= 0.0) || value != std::floor(value) || value > 2147483647.0) {
    throw FormatError("line " + std::to_string(line_number) +
                      ": label cell is not a non-negative integer");
  }
  return static_cast<int>(value);
}

std::uint32_t read_be_u32(std::istream& in, const std::string& what) {
  std::array<unsigned char, 4> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), 4)) {
    throw FormatError(what + ": truncated header");
  }
  return (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
         (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

void DataMatrix::validate() const {
  if (values.rows() < 1 || values.cols() < 1) {
    throw ConfigError("data matrix must have at least one row and one column");
  }
  if (!values.allFinite()) throw ConfigError("data matrix contains non-finite values");
  if (labels) {
    if (static_cast<Index>(labels->size()) != rows()) {
      throw ConfigError("label count does not match row count");
    }
    if (std::any_of(labels->begin(), labels->end(), [](int l) { return l < 0; })) {
      throw ConfigError("labels must be non-negative");
    }
  }
  if (color && static_cast<Index>(color->size()) != rows()) {
    throw ConfigError("color column length does not match row count");
  }
  if (!feature_names.empty() && static_cast<Index>(feature_names.size()) != dims()) {
    throw ConfigError("feature name count does not match column count");
  }
}

DataMatrix generate_swiss_roll(Index n, double noise, std::uint64_t seed) {
  if (n < 1) throw ConfigError("swiss roll needs n >= 1");
  if (!(noise >= 0.0)) throw ConfigError("noise must be non-negative");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr double pi = std::numbers::pi;

  DataMatrix out;
  out.values.resize(n, 3);
  out.color.emplace(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double t = 1.5 * pi * (1.0 + 2.0 * unit(rng));
    const double h = 21.0 * unit(rng);
    out.values(i, 0) = t * std::cos(t);
    out.values(i, 1) = h;
    out.values(i, 2) = t * std::sin(t);
    (*out.color)[static_cast<std::size_t>(i)] = t;
  }
  if (noise > 0.0) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < 3; ++j) out.values(i, j) += noise * gauss(rng);
    }
  }
  out.feature_names = default_names(3);
  return out;
}

DataMatrix scale_features(const DataMatrix& data, std::span<const double> factors) {
  if (static_cast<Index>(factors.size()) != data.dims()) {
    throw ConfigError("scale factor count " + std::to_string(factors.size()) +
                      " does not match dimension " + std::to_string(data.dims()));
  }
  DataMatrix out = data;
  for (Index j = 0; j < data.dims(); ++j) {
    const double f = factors[static_cast<std::size_t>(j)];
    if (!(f > 0.0) || !std::isfinite(f)) throw ConfigError("scale factors must be positive");
    out.values.col(j) *= f;
  }
  return out;
}

DataMatrix read_csv(std::istream& in, const CsvOptions& options) {
  std::string line;
  std::size_t line_number = 0;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;

  while (std::getline(in, line)) {
    ++line_number;
    std::string_view view = line;
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (trim(view).empty()) continue;
    const auto fields = split_fields(view);
    if (options.has_header && header.empty() && rows.empty()) {
      for (auto f : fields) header.emplace_back(f);
      width = header.size();
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw FormatError("line " + std::to_string(line_number) + ": expected " +
                        std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row(width);
    for (std::size_t j = 0; j < width; ++j) {
      if (!parse_double(fields[j], row[j])) {
        throw FormatError("line " + std::to_string(line_number) + ", column " +
                          std::to_string(j) + ": not a number: '" + std::string(fields[j]) + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("CSV input has no data rows");

  auto label_column = options.label_column;
  auto color_column = options.color_column;
  if (options.named_columns && !header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (!label_column && header[j] == "label") label_column = static_cast<Index>(j);
      if (!color_column && header[j] == "color") color_column = static_cast<Index>(j);
    }
  }
  const auto in_range = [&](const std::optional<Index>& c) {
    return !c || (*c >= 0 && *c < static_cast<Index>(width));
  };
  if (!in_range(label_column)) throw ConfigError("label column out of range");
  if (!in_range(color_column)) throw ConfigError("color column out of range");
  if (label_column && color_column && *label_column == *color_column) {
    throw ConfigError("label and color columns must differ");
  }

  std::vector<std::size_t> feature_cols;
  for (std::size_t j = 0; j < width; ++j) {
    const auto idx = static_cast<Index>(j);
    if ((label_column && idx == *label_column) || (color_column && idx == *color_column)) continue;
    feature_cols.push_back(j);
  }
  if (feature_cols.empty()) throw FormatError("CSV input has no feature columns");

  const auto n = static_cast<Index>(rows.size());
  DataMatrix out;
  out.values.resize(n, static_cast<Index>(feature_cols.size()));
  if (label_column) out.labels.emplace();
  if (color_column) out.color.emplace();
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < feature_cols.size(); ++c) {
      out.values(i, static_cast<Index>(c)) = row[feature_cols[c]];
    }
    if (label_column) {
      out.labels->push_back(
          label_from_cell(row[static_cast<std::size_t>(*label_column)],
                          static_cast<std::size_t>(i) + (header.empty() ? 1 : 2)));
    }
    if (color_column) out.color->push_back(row[static_cast<std::size_t>(*color_column)]);
  }
  if (!header.empty()) {
    for (auto c : feature_cols) out.feature_names.push_back(header[c]);
  } else {
    out.feature_names = default_names(out.dims());
  }
  if (!out.values.allFinite()) throw FormatError("CSV input contains non-finite values");
  out.validate();
  return out;
}

DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in, options);
}

void write_csv(std::ostream& out, const DataMatrix& data, bool header) {
  const Index n = data.rows();
  const Index dims = data.dims();
  if (header) {
    for (Index j = 0; j < dims; ++j) {
      if (j > 0) out << ',';
      out << (data.feature_names.empty() ? default_name(j)
                                         : data.feature_names[static_cast<std::size_t>(j)]);
    }
    if (data.labels) out << ",label";
    if (data.color) out << ",color";
    out << '\n';
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < dims; ++j) {
      if (j > 0) out << ',';
      out << format_double(data.values(i, j));
    }
    if (data.labels) out << ',' << (*data.labels)[static_cast<std::size_t>(i)];
    if (data.color) out << ',' << format_double((*data.color)[static_cast<std::size_t>(i)]);
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const DataMatrix& data, bool header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(out, data, header);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

DataMatrix load_idx(const std::filesystem::path& images_path,
                    const std::optional<std::filesystem::path>& labels_path) {
  auto images = open_binary(images_path);
  const std::string what = images_path.string();
  const auto magic = read_be_u32(images, what);
  if (magic != 0x00000803u) {
    std::ostringstream msg;
    msg << what << ": bad image magic 0x" << std::hex << magic;
    throw FormatError(msg.str());
  }
  const auto count = read_be_u32(images, what);
  const auto height = read_be_u32(images, what);
  const auto width = read_be_u32(images, what);
  if (count == 0 || height == 0 || width == 0) throw FormatError(what + ": empty image set");

  const auto pixels = static_cast<std::size_t>(height) * width;
  std::vector<unsigned char> buffer(static_cast<std::size_t>(count) * pixels);
  if (!images.read(reinterpret_cast<char*>(buffer.data()),
                   static_cast<std::streamsize>(buffer.size()))) {
    throw FormatError(what + ": truncated image payload");
  }

  DataMatrix out;
  out.values.resize(count, static_cast<Index>(pixels));
  for (Index i = 0; i < out.values.rows(); ++i) {
    for (Index j = 0; j < out.values.cols(); ++j) {
      out.values(i, j) = buffer[static_cast<std::size_t>(i) * pixels + static_cast<std::size_t>(j)] / 255.0;
    }
  }
  out.feature_names = default_names(out.dims());

  if (labels_path) {
    auto labels = open_binary(*labels_path);
    const std::string lwhat = labels_path->string();
    const auto lmagic = read_be_u32(labels, lwhat);
    if (lmagic != 0x00000801u) {
      std::ostringstream msg;
      msg << lwhat << ": bad label magic 0x" << std::hex << lmagic;
      throw FormatError(msg.str());
    }
    const auto lcount = read_be_u32(labels, lwhat);
    if (lcount != count) {
      throw FormatError("image count " + std::to_string(count) + " does not match label count " +
                        std::to_string(lcount));
    }
    std::vector<unsigned char> lbuf(lcount);
    if (!labels.read(reinterpret_cast<char*>(lbuf.data()), static_cast<std::streamsize>(lcount))) {
      throw FormatError(lwhat + ": truncated label payload");
    }
    out.labels.emplace(lbuf.begin(), lbuf.end());
  }
  return out;
}

DataMatrix builtin_iris() {
  const auto& table = detail::kIrisTable;
  DataMatrix out;
  out.values.resize(static_cast<Index>(table.size()), 4);
  out.labels.emplace();
  out.labels->reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (Index j = 0; j < 4; ++j) {
      out.values(static_cast<Index>(i), j) = table[i].features[static_cast<std::size_t>(j)];
    }
    out.labels->push_back(table[i].label);
  }
  out.feature_names = {"sepal_length", "sepal_width", "petal_length", "petal_width"};
  return out;
}

DataMatrix select_rows(const DataMatrix& data, std::span<const Index> rows) {
  DataMatrix out;
  out.values.resize(static_cast<Index>(rows.size()), data.dims());
  if (data.labels) out.labels.emplace();
  if (data.color) out.color.emplace();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index i = rows[r];
    if (i < 0 || i >= data.rows()) throw ConfigError("row index out of range");
    out.values.row(static_cast<Index>(r)) = data.values.row(i);
    if (data.labels) out.labels->push_back((*data.labels)[static_cast<std::size_t>(i)]);
    if (data.color) out.color->push_back((*data.color)[static_cast<std::size_t>(i)]);
  }
  out.feature_names = data.feature_names;
  return out;
}

namespace {

std::vector<Index> filter_rows(const DataMatrix& data, const std::optional<std::set<int>>& classes) {
  std::vector<Index> candidates;
  if (classes) {
    if (!data.labels) throw ConfigError("class filter requires labeled data");
    for (Index i = 0; i < data.rows(); ++i) {
      if (classes->contains((*data.labels)[static_cast<std::size_t>(i)])) candidates.push_back(i);
    }
    if (candidates.empty()) throw ConfigError("class filter matches no rows");
  } else {
    candidates.resize(static_cast<std::size_t>(data.rows()));
    std::iota(candidates.begin(), candidates.end(), Index{0});
  }
  return candidates;
}

// Seeded partial Fisher-Yates: the first `count` entries become the sample.
void partial_shuffle(std::vector<Index>& items, std::size_t count, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
}

}  // namespace

DataMatrix subsample(const DataMatrix& data, Index n_out,
                     const std::optional<std::set<int>>& classes, std::uint64_t seed) {
  auto candidates = filter_rows(data, classes);
  if (n_out < 1 || n_out > static_cast<Index>(candidates.size())) {
    throw ConfigError("cannot draw " + std::to_string(n_out) + " rows from " +
                      std::to_string(candidates.size()));
  }
  std::mt19937_64 rng(seed);
  partial_shuffle(candidates, static_cast<std::size_t>(n_out), rng);
  candidates.resize(static_cast<std::size_t>(n_out));
  std::sort(candidates.begin(), candidates.end());
  return select_rows(data, candidates);
}

DataMatrix stratified_subsample(const DataMatrix& data, Index n_out,
                                const std::optional<std::set<int>>& classes,
                                std::uint64_t seed) {
  if (!data.labels) throw ConfigError("stratified sampling requires labeled data");
  const auto candidates = filter_rows(data, classes);
  if (n_out < 1 || n_out > static_cast<Index>(candidates.size())) {
    throw ConfigError("cannot draw " + std::to_string(n_out) + " rows from " +
                      std::to_string(candidates.size()));
  }
  std::map<int, std::vector<Index>> by_class;
  for (Index i : candidates) by_class[(*data.labels)[static_cast<std::size_t>(i)]].push_back(i);

  // Largest-remainder allocation of n_out across classes.
  const double total = static_cast<double>(candidates.size());
  std::vector<std::pair<double, int>> remainders;
  std::map<int, std::size_t> quota;
  Index assigned = 0;
  for (const auto& [label, members] : by_class) {
    const double exact = static_cast<double>(n_out) * static_cast<double>(members.size()) / total;
    const auto base = static_cast<std::size_t>(std::floor(exact));
    quota[label] = base;
    assigned += static_cast<Index>(base);
    remainders.emplace_back(exact - static_cast<double>(base), label);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < n_out; ++r, ++assigned) ++quota[remainders[r].second];

  std::mt19937_64 rng(seed);
  std::vector<Index> chosen;
  for (auto& [label, members] : by_class) {
    partial_shuffle(members, quota[label], rng);
    chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(quota[label]));
  }
  std::sort(chosen.begin(), chosen.end());
  return select_rows(data, chosen);
}

}  // namespace alle
