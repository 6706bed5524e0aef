#include "hwnas/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hwnas/errors.hpp"
#include "hwnas/text.hpp"

namespace hwnas {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.emplace_back(trim(std::string_view(line).substr(start)));
      break;
    }
    fields.emplace_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

Dataset finalize_labels(Dataset ds, const std::vector<std::int64_t>& raw_labels) {
  std::vector<std::int64_t> distinct = raw_labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::map<std::int64_t, int> remap;
  for (std::size_t i = 0; i < distinct.size(); ++i) {
    remap[distinct[i]] = static_cast<int>(i);
  }
  ds.labels.reserve(raw_labels.size());
  for (std::int64_t raw : raw_labels) ds.labels.push_back(remap.at(raw));
  ds.num_classes = static_cast<int>(distinct.size());
  ds.class_values = std::move(distinct);
  return ds;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError("empty dataset file: " + path);
  const std::vector<std::string> header = split_fields(line);

  std::size_t label_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) label_idx = i;
  }
  if (label_idx == header.size()) {
    throw ConfigError("label column '" + label_column + "' not found in " + path);
  }

  Dataset ds;
  ds.num_features = header.size() - 1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i != label_idx) ds.feature_names.push_back(header[i]);
  }

  std::vector<std::int64_t> raw_labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw IoError(path + ": line " + std::to_string(line_no) + " has " +
                    std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(header.size()));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      double value = 0.0;
      if (!parse_double(fields[i], value) || !std::isfinite(value)) {
        throw IoError(path + ": line " + std::to_string(line_no) + ", column '" + header[i] +
                      "': not a finite number: '" + fields[i] + "'");
      }
      if (i == label_idx) {
        const double rounded = std::nearbyint(value);
        if (std::abs(value - rounded) > 1e-9) {
          throw IoError(path + ": line " + std::to_string(line_no) + ", column '" + header[i] +
                        "': label is not an integer: '" + fields[i] + "'");
        }
        raw_labels.push_back(static_cast<std::int64_t>(rounded));
      } else {
        ds.features.push_back(static_cast<float>(value));
      }
    }
    ++ds.num_rows;
  }
  if (ds.num_rows == 0) throw IoError("dataset has no data rows: " + path);
  return finalize_labels(std::move(ds), raw_labels);
}

Normalizer fit_normalizer(const Dataset& train) {
  const std::size_t d = train.num_features;
  std::vector<double> mean(d, 0.0);
  std::vector<double> sq(d, 0.0);
  for (std::size_t r = 0; r < train.num_rows; ++r) {
    const float* x = train.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      mean[j] += x[j];
      sq[j] += static_cast<double>(x[j]) * x[j];
    }
  }
  Normalizer norm;
  norm.mean.resize(d);
  norm.scale.resize(d);
  const double n = static_cast<double>(train.num_rows);
  for (std::size_t j = 0; j < d; ++j) {
    const double mu = mean[j] / n;
    const double var = std::max(0.0, sq[j] / n - mu * mu);
    const double sd = std::sqrt(var);
    norm.mean[j] = static_cast<float>(mu);
    norm.scale[j] = sd > 1e-12 ? static_cast<float>(sd) : 1.0f;
  }
  return norm;
}

Dataset apply_normalizer(const Normalizer& norm, const Dataset& ds) {
  Dataset out = ds;
  for (std::size_t r = 0; r < out.num_rows; ++r) {
    float* x = out.features.data() + r * out.num_features;
    for (std::size_t j = 0; j < out.num_features; ++j) {
      x[j] = (x[j] - norm.mean[j]) / norm.scale[j];
    }
  }
  return out;
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.num_rows = rows.size();
  out.num_features = ds.num_features;
  out.num_classes = ds.num_classes;
  out.feature_names = ds.feature_names;
  out.class_values = ds.class_values;
  out.features.reserve(rows.size() * ds.num_features);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    const float* x = ds.row(r);
    out.features.insert(out.features.end(), x, x + ds.num_features);
    out.labels.push_back(ds.labels[r]);
  }
  return out;
}

}  // namespace

Splits split(const Dataset& ds, const SplitFractions& fractions, std::uint64_t seed) {
  const double f[3] = {fractions.train, fractions.val, fractions.test};
  for (double fi : f) {
    if (fi < 0.0 || !std::isfinite(fi)) throw ConfigError("split fractions must be non-negative");
  }
  if (f[0] <= 0.0) throw ConfigError("train split fraction must be positive");
  if (f[0] + f[1] + f[2] > 1.0 + 1e-9) throw ConfigError("split fractions must sum to at most 1");

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
  for (std::size_t r = 0; r < ds.num_rows; ++r) {
    by_class[static_cast<std::size_t>(ds.labels[r])].push_back(r);
  }

  Rng rng(seed);
  std::vector<std::size_t> part[3];
  for (auto& rows : by_class) {
    rng.shuffle(rows);
    const double nc = static_cast<double>(rows.size());
    std::size_t bounds[4] = {0, 0, 0, rows.size()};
    double cum = 0.0;
    for (int s = 0; s < 3; ++s) {
      cum += f[s];
      bounds[s + 1] = static_cast<std::size_t>(std::llround(nc * std::min(cum, 1.0)));
    }
    // Rows beyond the last fraction boundary are dropped when fractions sum
    // below 1; the final bound is clamped to the class size otherwise.
    bounds[3] = std::min(bounds[3], rows.size());
    bounds[2] = std::min(bounds[2], bounds[3]);
    bounds[1] = std::min(bounds[1], bounds[2]);
    for (int s = 0; s < 3; ++s) {
      part[s].insert(part[s].end(), rows.begin() + static_cast<std::ptrdiff_t>(bounds[s]),
                     rows.begin() + static_cast<std::ptrdiff_t>(bounds[s + 1]));
    }
  }
  for (auto& rows : part) std::sort(rows.begin(), rows.end());
  return Splits{take_rows(ds, part[0]), take_rows(ds, part[1]), take_rows(ds, part[2])};
}

Dataset synth_blobs(int n_per_class, int dim, int classes, double separation, std::uint64_t seed) {
  if (n_per_class <= 0 || dim <= 0 || classes <= 0 || separation <= 0.0) {
    throw ConfigError("synth_blobs arguments must be positive");
  }
  Dataset ds;
  ds.num_features = static_cast<std::size_t>(dim);
  ds.num_classes = classes;
  ds.num_rows = static_cast<std::size_t>(n_per_class) * static_cast<std::size_t>(classes);
  ds.features.resize(ds.num_rows * ds.num_features);
  ds.labels.resize(ds.num_rows);
  for (int j = 0; j < dim; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  for (int c = 0; c < classes; ++c) ds.class_values.push_back(c);

  Rng rng(seed);
  std::size_t row = 0;
  for (int c = 0; c < classes; ++c) {
    // Centers sit on coordinate axes at growing multiples of the separation;
    // any two are at least `separation` apart (same axis: differing
    // multiples; different axes: hypotenuse of two offsets >= separation).
    const int axis = c % dim;
    const double magnitude = (1.0 + static_cast<double>(c / dim)) * separation;
    for (int k = 0; k < n_per_class; ++k, ++row) {
      float* x = ds.features.data() + row * ds.num_features;
      for (int j = 0; j < dim; ++j) {
        x[j] = static_cast<float>(rng.normal() + (j == axis ? magnitude : 0.0));
      }
      ds.labels[row] = c;
    }
  }
  return ds;
}

}  // namespace hwnas
