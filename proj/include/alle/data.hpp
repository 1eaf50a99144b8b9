#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "alle/types.hpp"

namespace alle {

/// n x D samples with optional integer labels and an optional real-valued
/// color column (e.g. the Swiss roll parameter, kept for plotting only).
struct DataMatrix {
  RowMatrix values;
  std::optional<std::vector<int>> labels;
  std::optional<std::vector<double>> color;
  std::vector<std::string> feature_names;

  Index rows() const { return values.rows(); }
  Index dims() const { return values.cols(); }

  /// Throws ConfigError unless n, D >= 1, all values finite, labels >= 0 and
  /// every parallel column has length n.
  void validate() const;
};

/// t ~ U[1.5 pi, 4.5 pi], h ~ U[0, 21], x = (t cos t, h, t sin t) + noise * N(0, I).
/// The roll parameter t is stored in `color`.
DataMatrix generate_swiss_roll(Index n, double noise, std::uint64_t seed);

/// Multiply column j by factors[j]. Labels and color are carried through.
DataMatrix scale_features(const DataMatrix& data, std::span<const double> factors);

struct CsvOptions {
  bool has_header = false;
  std::optional<Index> label_column;
  std::optional<Index> color_column;
  /// With a header row, columns literally named "label" / "color" are
  /// extracted when the corresponding index is not given explicitly.
  bool named_columns = false;
};

DataMatrix read_csv(std::istream& in, const CsvOptions& options = {});
DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes features (then `label`, then `color` when present) with a header row.
/// Values use the shortest round-trip representation, so read_csv recovers them exactly.
void write_csv(std::ostream& out, const DataMatrix& data, bool header = true);
void write_csv(const std::filesystem::path& path, const DataMatrix& data, bool header = true);

/// Big-endian IDX images (magic 0x00000803) with optional labels (0x00000801).
/// Images are flattened row-major and rescaled to [0, 1].
DataMatrix load_idx(const std::filesystem::path& images_path,
                    const std::optional<std::filesystem::path>& labels_path = std::nullopt);

/// Fisher's Iris table, 150 x 4, labels 0 (setosa), 1 (versicolor), 2 (virginica).
DataMatrix builtin_iris();

/// Uniform sample without replacement after an optional class filter.
/// Selected rows keep their original relative order.
DataMatrix subsample(const DataMatrix& data, Index n_out,
                     const std::optional<std::set<int>>& classes, std::uint64_t seed);

/// Like subsample, but allocates n_out across the filtered classes in
/// proportion to their sizes (largest remainder).
DataMatrix stratified_subsample(const DataMatrix& data, Index n_out,
                                const std::optional<std::set<int>>& classes,
                                std::uint64_t seed);

/// Row selection helper shared by the samplers and the CLI.
DataMatrix select_rows(const DataMatrix& data, std::span<const Index> rows);

}  // namespace alle
