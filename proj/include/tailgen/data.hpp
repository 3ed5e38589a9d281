#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tailgen/clustering.hpp"
#include "tailgen/matrix.hpp"

namespace tailgen {

enum class DataKind { gaussian_mixture, rings };

struct Component {
    std::vector<double> center;
    double scale = 1.0;
    double weight = 1.0;
};

struct DistributionSpec {
    DataKind kind = DataKind::gaussian_mixture;
    long dim = 2;
    std::vector<Component> components;
    std::uint64_t seed = 0;

    void validate() const;  // weights sum to 1 (within 1e-9), centers match dim

    /// The reference fixture: three isotropic components at (0,0), (8,0), (0,8),
    /// scale 0.7, equal weights. Supports are disjoint by a wide margin.
    static DistributionSpec tri_gauss(std::uint64_t seed);
};

/// n labeled samples; the label is the component of origin. Component counts
/// are allocated deterministically from the weights (largest remainder, every
/// component gets at least one sample), so all K labels appear whenever n >= K.
ClusteredDataset generate(const DistributionSpec& spec, long n);

/// Split each class into train/holdout parts at the given fraction (seeded
/// shuffle within each class). Returns {train, holdout}.
std::pair<ClusteredDataset, ClusteredDataset> split_holdout(const ClusteredDataset& ds,
                                                            double holdout_fraction,
                                                            std::uint64_t seed);

/// Remove class k: the remaining classes re-index densely in order; the
/// removed class's samples come back as the anomaly matrix.
std::pair<ClusteredDataset, Matrix> leave_one_out(const ClusteredDataset& ds, long k);

enum class OodMode { shift, uniform_box };

/// Out-of-distribution stand-ins derived from a dataset:
///   shift       - every sample translated by magnitude along one seeded
///                 random direction (magnitude 0 returns the data unchanged)
///   uniform_box - n uniform samples over the data bounding box inflated by
///                 magnitude on every side
/// n = 0 means "as many rows as the dataset has".
Matrix make_ood(const ClusteredDataset& ds, OodMode mode, double magnitude, long n = 0,
                std::uint64_t seed = 0);

/// IDX image + label pair (big-endian, magic 0x00000803 / 0x00000801).
/// Pixels scale to [0, 1] and flatten row-major; labels group rows into
/// classes. Malformed input raises FormatError naming the byte offset.
ClusteredDataset load_idx(const std::string& images_path, const std::string& labels_path);

// CSV: datasets carry a label column ahead of the coordinates; plain matrices
// carry coordinates only. Floats are written with 17 significant digits.
void save_dataset_csv(const std::string& path, const ClusteredDataset& ds);
ClusteredDataset load_dataset_csv(const std::string& path);
void save_matrix_csv(const std::string& path, const Matrix& m);
Matrix load_matrix_csv(const std::string& path);

}  // namespace tailgen
