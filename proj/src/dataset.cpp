#include "mixent/dataset.hpp"

#include <cmath>

#include "mixent/errors.hpp"

namespace mixent {

void validate_dataset(const Dataset& dataset) {
  if (dataset.features.rows() != dataset.labels.size()) {
    throw InvalidInput("dataset has " + std::to_string(dataset.features.rows()) +
                       " feature rows but " + std::to_string(dataset.labels.size()) +
                       " labels");
  }
  if (dataset.features.cols() < 1) throw InvalidInput("dataset needs at least one feature");
  if (dataset.num_labels < 1) throw InvalidInput("label alphabet is empty");
  for (Eigen::Index i = 0; i < dataset.labels.size(); ++i) {
    const int y = dataset.labels(i);
    if (y < 0 || y >= dataset.num_labels) {
      throw InvalidInput("label id " + std::to_string(y) + " at row " + std::to_string(i) +
                         " outside [0, " + std::to_string(dataset.num_labels) + ")");
    }
  }
  if (!dataset.features.allFinite()) throw InvalidInput("dataset has a non-finite feature");
}

Dataset make_dataset(PointSet features, LabelVector labels) {
  Dataset out;
  out.features = std::move(features);
  out.labels = std::move(labels);
  out.num_labels = out.labels.size() > 0 ? out.labels.maxCoeff() + 1 : 0;
  if (out.labels.size() > 0 && out.labels.minCoeff() < 0) {
    throw InvalidInput("label ids must be nonnegative");
  }
  validate_dataset(out);
  for (const auto count : label_counts(out)) {
    if (count == 0) throw InvalidInput("label alphabet has an id that never occurs");
  }
  for (int y = 0; y < out.num_labels; ++y) out.label_names.push_back(std::to_string(y));
  return out;
}

std::vector<Eigen::Index> label_counts(const Dataset& dataset) {
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(dataset.num_labels), 0);
  for (Eigen::Index i = 0; i < dataset.labels.size(); ++i) {
    ++counts[static_cast<std::size_t>(dataset.labels(i))];
  }
  return counts;
}

PointSet rows_with_label(const Dataset& dataset, int label) {
  Eigen::Index count = (dataset.labels.array() == label).count();
  PointSet out(count, dataset.dimension());
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    if (dataset.labels(i) == label) out.row(row++) = dataset.features.row(i);
  }
  return out;
}

Dataset project_column(const Dataset& dataset, Eigen::Index column) {
  if (column < 0 || column >= dataset.dimension()) {
    throw InvalidInput("feature column " + std::to_string(column) + " out of range");
  }
  Dataset out = dataset;
  out.features = dataset.features.col(column);
  if (static_cast<std::size_t>(column) < dataset.feature_names.size()) {
    out.feature_names = {dataset.feature_names[static_cast<std::size_t>(column)]};
  }
  return out;
}

}  // namespace mixent
