#pragma once

#include <string>
#include <vector>

#include "mixent/types.hpp"

namespace mixent {

/// Mixed sample: n feature vectors in R^d with one categorical label each.
/// Label ids live in [0, num_labels); label_names[id] is the external name.
struct Dataset {
  PointSet features;
  LabelVector labels;
  int num_labels = 0;
  std::vector<std::string> label_names;
  std::vector<std::string> feature_names;  ///< may be empty

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dimension() const { return features.cols(); }
};

/// Wraps features and label ids, taking the alphabet size from the data
/// (max id + 1). Throws InvalidInput if shapes disagree, ids are negative, an
/// id in [0, m) never occurs, or a feature is non-finite.
Dataset make_dataset(PointSet features, LabelVector labels);

/// Checks shapes, label range and finiteness; alphabet size is taken as given.
void validate_dataset(const Dataset& dataset);

/// Per-label counts, length num_labels.
std::vector<Eigen::Index> label_counts(const Dataset& dataset);

/// Rows of `features` whose label equals `label`, in original order.
PointSet rows_with_label(const Dataset& dataset, int label);

/// The dataset restricted to the single feature column `column`.
Dataset project_column(const Dataset& dataset, Eigen::Index column);

}  // namespace mixent
