#include "fsnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fsnet/rng.hpp"
#include "fsnet/text.hpp"

namespace fsnet {

Dataset::Dataset(Matrix x, std::vector<int> y, std::size_t classes,
                 std::vector<std::string> feature_names, std::vector<std::string> label_names)
    : x_(std::move(x)),
      y_(std::move(y)),
      classes_(classes),
      feature_names_(std::move(feature_names)),
      label_names_(std::move(label_names)) {
  if (y_.size() != x_.rows()) {
    throw std::invalid_argument("Dataset: " + std::to_string(y_.size()) + " labels for " +
                                std::to_string(x_.rows()) + " samples");
  }
  for (std::size_t i = 0; i < y_.size(); ++i) {
    if (y_[i] < 0 || static_cast<std::size_t>(y_[i]) >= classes_) {
      throw std::invalid_argument("Dataset: label " + std::to_string(y_[i]) + " of sample " +
                                  std::to_string(i) + " outside 0.." +
                                  std::to_string(classes_ == 0 ? 0 : classes_ - 1));
    }
  }
  if (!x_.all_finite()) throw std::invalid_argument("Dataset: non-finite feature value");
  if (!feature_names_.empty() && feature_names_.size() != x_.cols()) {
    throw std::invalid_argument("Dataset: feature name count does not match feature count");
  }
  if (!label_names_.empty() && label_names_.size() != classes_) {
    throw std::invalid_argument("Dataset: label name count does not match class count");
  }
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(classes_, 0);
  for (int label : y_) ++counts[static_cast<std::size_t>(label)];
  return counts;
}

void Dataset::require_all_classes() const {
  const auto counts = class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw std::invalid_argument("Dataset: class " + std::to_string(c) + " has no samples");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Matrix x(rows.size(), x_.cols());
  std::vector<int> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x_.rows()) throw std::out_of_range("Dataset::subset: row out of range");
    std::copy_n(x_.row(rows[i]).begin(), x_.cols(), x.row(i).begin());
    y[i] = y_[rows[i]];
  }
  return Dataset(std::move(x), std::move(y), classes_, feature_names_, label_names_);
}

Dataset Dataset::with_x(Matrix x) const {
  return Dataset(std::move(x), y_, classes_, feature_names_, label_names_);
}

Dataset Dataset::with_duplicated_columns(std::span<const std::size_t> columns) const {
  const std::size_t d = x_.cols();
  for (std::size_t c : columns)
    if (c >= d) throw std::out_of_range("with_duplicated_columns: column out of range");
  Matrix x(x_.rows(), d + columns.size());
  for (std::size_t r = 0; r < x_.rows(); ++r) {
    auto src = x_.row(r);
    auto dst = x.row(r);
    std::copy(src.begin(), src.end(), dst.begin());
    for (std::size_t i = 0; i < columns.size(); ++i) dst[d + i] = src[columns[i]];
  }
  std::vector<std::string> names = feature_names_;
  if (!names.empty())
    for (std::size_t c : columns) names.push_back(names[c] + "_copy");
  return Dataset(std::move(x), y_, classes_, std::move(names), label_names_);
}

// --- delimited text -----------------------------------------------------------

Dataset load_delimited(const std::filesystem::path& path, const DelimitedOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open data file '" + path.string() + "'");

  std::vector<std::string> header;
  std::vector<double> values;
  std::vector<std::string> raw_labels;
  std::size_t fields = 0;
  std::size_t label_col = 0;
  std::size_t rows = 0;
  bool have_shape = false;

  auto resolve_shape = [&](std::size_t count, std::size_t line_no) {
    fields = count;
    const long long lc = options.label_column < 0
                             ? static_cast<long long>(count) + options.label_column
                             : options.label_column;
    if (count < 2 || lc < 0 || lc >= static_cast<long long>(count)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": label column " + std::to_string(options.label_column) +
                               " not available in a row of " + std::to_string(count) + " fields");
    }
    label_col = static_cast<std::size_t>(lc);
    have_shape = true;
  };

  std::string line;
  std::size_t line_no = 0;
  bool header_pending = options.header;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto cells = text::split(line, options.delimiter);
    if (!have_shape) resolve_shape(cells.size(), line_no);
    if (cells.size() != fields) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(fields) + " fields, found " +
                               std::to_string(cells.size()) + " (ragged row)");
    }
    if (header_pending) {
      for (std::size_t c = 0; c < cells.size(); ++c)
        if (c != label_col) header.emplace_back(text::trim(cells[c]));
      header_pending = false;
      continue;
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col) {
        auto label = text::trim(cells[c]);
        if (label.empty()) {
          throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": column " +
                                   std::to_string(c + 1) + ": missing label");
        }
        raw_labels.emplace_back(label);
        continue;
      }
      auto v = text::parse_double(cells[c]);
      if (!v || !std::isfinite(*v)) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": column " +
                                 std::to_string(c + 1) + ": non-numeric value '" +
                                 std::string(text::trim(cells[c])) + "'");
      }
      values.push_back(*v);
    }
    ++rows;
  }
  if (rows == 0) throw std::runtime_error(path.string() + ": no data rows");

  std::map<std::string, int> codes;
  std::vector<std::string> label_names;
  std::vector<int> y;
  y.reserve(raw_labels.size());
  for (const auto& label : raw_labels) {
    auto [it, inserted] = codes.emplace(label, static_cast<int>(label_names.size()));
    if (inserted) label_names.push_back(label);
    y.push_back(it->second);
  }
  Matrix x(rows, fields - 1, std::move(values));
  const std::size_t classes = label_names.size();
  Dataset data(std::move(x), std::move(y), classes, std::move(header), std::move(label_names));
  data.require_all_classes();
  return data;
}

void write_delimited(const std::filesystem::path& path, const Dataset& data,
                     const DelimitedOptions& options) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  const char sep = options.delimiter;
  if (options.header) {
    for (std::size_t j = 0; j < data.features(); ++j) {
      out << (data.feature_names().empty() ? "f" + std::to_string(j) : data.feature_names()[j])
          << sep;
    }
    out << "label\n";
  }
  for (std::size_t i = 0; i < data.samples(); ++i) {
    for (double v : data.x().row(i)) out << text::format_double(v) << sep;
    const int label = data.y()[i];
    if (data.label_names().empty()) {
      out << label;
    } else {
      out << data.label_names()[static_cast<std::size_t>(label)];
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

// --- standardization ------------------------------------------------------------

Standardizer::Standardizer(std::vector<double> mean, std::vector<double> scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != scale_.size()) {
    throw std::invalid_argument("Standardizer: mean/scale length mismatch");
  }
}

Standardizer Standardizer::fit(const Matrix& x) {
  if (x.rows() == 0) throw std::invalid_argument("Standardizer::fit: empty training data");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  std::vector<double> mean(d, 0.0);
  std::vector<double> scale(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += x(i, j);
    const double m = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (x(i, j) - m) * (x(i, j) - m);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    mean[j] = m;
    scale[j] = sd > 1e-12 * std::max(1.0, std::abs(m)) ? 1.0 / sd : 0.0;
  }
  return Standardizer(std::move(mean), std::move(scale));
}

Standardizer Standardizer::identity(std::size_t features) {
  return Standardizer(std::vector<double>(features, 0.0), std::vector<double>(features, 1.0));
}

double Standardizer::apply_one(std::size_t feature, double value) const {
  return (value - mean_.at(feature)) * scale_[feature];
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  if (x.size() != mean_.size()) {
    throw std::invalid_argument("Standardizer: sample has " + std::to_string(x.size()) +
                                " features, transform expects " + std::to_string(mean_.size()));
  }
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean_[j]) * scale_[j];
  return out;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean_.size()) {
    throw std::invalid_argument("Standardizer: data is " + x.shape_string() + ", transform expects " +
                                std::to_string(mean_.size()) + " features");
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto src = x.row(i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) dst[j] = (src[j] - mean_[j]) * scale_[j];
  }
  return out;
}

Standardized standardize(const Dataset& train, const Dataset& test) {
  Standardizer t = Standardizer::fit(train.x());
  return Standardized{train.with_x(t.apply(train.x())), test.with_x(t.apply(test.x())), t};
}

// --- splitting ------------------------------------------------------------------

SplitIndices split_indices(const Dataset& data, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw std::invalid_argument("split: train fraction must lie in (0, 1)");
  }
  const std::size_t n = data.samples();
  if (n < 2) throw std::invalid_argument("split: need at least 2 samples");
  Rng rng(spec.seed);
  SplitIndices out;

  if (!spec.stratified) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    shuffle(idx, rng);
    auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    out.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  } else {
    const std::size_t classes = data.classes();
    std::vector<std::vector<std::size_t>> members(classes);
    for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(data.y()[i])].push_back(i);

    // Largest-remainder allocation of round(fraction * n) training slots across classes.
    std::vector<std::size_t> quota(classes, 0);
    std::vector<double> remainder(classes, 0.0);
    std::size_t allocated = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      if (members[c].size() == 1) {
        throw std::invalid_argument("split: class " + std::to_string(c) +
                                    " has a single sample; stratified split impossible");
      }
      const double exact = spec.train_fraction * static_cast<double>(members[c].size());
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      remainder[c] = exact - std::floor(exact);
      allocated += quota[c];
    }
    const auto target = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    std::vector<std::size_t> order(classes);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; allocated < target && i < order.size(); ++i) {
      if (members[order[i]].empty()) continue;
      ++quota[order[i]];
      ++allocated;
    }
    for (std::size_t c = 0; c < classes; ++c) {
      if (members[c].empty()) continue;
      quota[c] = std::clamp<std::size_t>(quota[c], 1, members[c].size() - 1);
      shuffle(members[c], rng);
      out.train.insert(out.train.end(), members[c].begin(),
                       members[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
      out.test.insert(out.test.end(), members[c].begin() + static_cast<std::ptrdiff_t>(quota[c]),
                      members[c].end());
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec) {
  const SplitIndices idx = split_indices(data, spec);
  return {data.subset(idx.train), data.subset(idx.test)};
}

// --- synthetic benchmark --------------------------------------------------------

SyntheticDataset make_synthetic(std::size_t n, std::size_t d, std::size_t k_star,
                                std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("make_synthetic: need n >= 2");
  if (k_star < 1 || k_star > d) {
    throw std::invalid_argument("make_synthetic: k_star must satisfy 1 <= k_star <= d");
  }
  Rng rng(seed);
  std::vector<std::size_t> features(d);
  std::iota(features.begin(), features.end(), 0);
  shuffle(features, rng);
  std::vector<std::size_t> planted(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(k_star));
  std::sort(planted.begin(), planted.end());

  Matrix x(n, d);
  for (double& v : x.values()) v = rng.normal();

  std::vector<double> score(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : planted) score[i] += std::sin(x(i, j)) + x(i, j) * x(i, j);

  std::vector<double> sorted = score;
  std::sort(sorted.begin(), sorted.end());
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = score[i] > median ? 1 : 0;

  std::vector<std::string> names(d);
  for (std::size_t j = 0; j < d; ++j) names[j] = "f" + std::to_string(j);

  SyntheticDataset out{Dataset(std::move(x), std::move(y), 2, std::move(names), {"0", "1"}),
                       std::move(planted), n, d, k_star, seed};
  out.data.require_all_classes();
  return out;
}

void write_planted(const std::filesystem::path& path, const SyntheticDataset& synthetic) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "n=" << synthetic.n << "\n"
      << "d=" << synthetic.d << "\n"
      << "k_star=" << synthetic.k_star << "\n"
      << "seed=" << synthetic.seed << "\n"
      << "planted=";
  for (std::size_t i = 0; i < synthetic.planted.size(); ++i)
    out << (i ? "," : "") << synthetic.planted[i];
  out << "\n";
}

std::vector<std::size_t> read_planted(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("planted=", 0) != 0) continue;
    std::vector<std::size_t> out;
    const std::string_view rest = std::string_view(line).substr(8);
    if (text::trim(rest).empty()) return out;
    for (auto cell : text::split(rest, ',')) {
      auto v = text::parse_integer(cell);
      if (!v || *v < 0) throw std::runtime_error(path.string() + ": bad planted index");
      out.push_back(static_cast<std::size_t>(*v));
    }
    return out;
  }
  throw std::runtime_error(path.string() + ": no planted= line");
}

}  // namespace fsnet
