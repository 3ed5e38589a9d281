#pragma once

#include <span>
#include <vector>

#include "tailgen/matrix.hpp"

namespace tailgen {

/// Labeled samples grouped into K classes with dense indices 0..K-1.
/// Per-class sample counts may differ.
struct ClusteredDataset {
    long dim = 0;
    std::vector<Matrix> classes;

    long num_classes() const { return static_cast<long>(classes.size()); }
    long total() const {
        long n = 0;
        for (const auto& c : classes) n += c.rows;
        return n;
    }
    /// All samples stacked, class blocks in order.
    Matrix flatten() const;
    std::vector<long> labels() const;

    void validate() const;  // finite samples, consistent width, no empty class
};

double p_norm_dist(std::span<const double> a, std::span<const double> b, double p);

/// min over class members of ||y - x_{i,j}||_p.
double point_to_class_dist(std::span<const double> y, const ClusteredDataset& ds, long cls,
                           double p);

/// Index of the class minimizing point_to_class_dist; ties break to the
/// lowest class index.
long assign_cluster(std::span<const double> y, const ClusteredDataset& ds, double p);

/// Distance from y to the assigned (or given) class: identical to
/// point_to_class_dist at that class.
double boundary_radius(std::span<const double> y, const ClusteredDataset& ds, long cls, double p);

enum class FloorRule {
    all_pairs,     // min over classes i != k of min over ALL cross pairs (j, j')
    shared_index,  // literal single shared j, min over j up to the shorter class
};

/// Smallest distance from class k to any other class. The all_pairs rule is
/// the default: it is invariant under within-class sample permutations. The
/// shared_index rule pairs the j-th samples of both classes as written and is
/// kept for fidelity experiments.
double inter_class_floor(const ClusteredDataset& ds, long cls, double p,
                         FloorRule rule = FloorRule::all_pairs);

struct ProximityResult {
    long cls = -1;
    double radius = 0.0;
    double floor = 0.0;
    bool satisfied = false;  // radius < floor, strict
    double margin = 0.0;     // |radius - floor|
};

/// Assigns y to a class, compares its boundary radius against the inter-class
/// floor, and reports how decisively the proximity inequality holds.
ProximityResult check_proximity(std::span<const double> y, const ClusteredDataset& ds, double p,
                                FloorRule rule = FloorRule::all_pairs);

}  // namespace tailgen
