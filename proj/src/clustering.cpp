#include "tailgen/clustering.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace tailgen {

Matrix ClusteredDataset::flatten() const {
    Matrix out(total(), dim);
    long r = 0;
    for (const auto& c : classes) {
        for (long i = 0; i < c.rows; ++i) {
            std::memcpy(out[r++], c[i], sizeof(double) * dim);
        }
    }
    return out;
}

std::vector<long> ClusteredDataset::labels() const {
    std::vector<long> out;
    out.reserve(total());
    for (long k = 0; k < num_classes(); ++k) {
        for (long i = 0; i < classes[k].rows; ++i) out.push_back(k);
    }
    return out;
}

void ClusteredDataset::validate() const {
    if (dim < 1) throw InputError("dataset: dim must be >= 1");
    for (long k = 0; k < num_classes(); ++k) {
        if (classes[k].rows == 0) {
            throw InputError("dataset: class " + std::to_string(k) + " is empty");
        }
        if (classes[k].cols != dim) {
            throw InputError("dataset: class " + std::to_string(k) + " width mismatch");
        }
        require_finite({classes[k].data.data(), classes[k].data.size()}, "dataset samples");
    }
}

double p_norm_dist(std::span<const double> a, std::span<const double> b, double p) {
    if (a.size() != b.size()) throw InputError("p_norm_dist: length mismatch");
    if (p == 2.0) {
        double acc = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double t = a[k] - b[k];
            acc += t * t;
        }
        return std::sqrt(acc);
    }
    if (p == 1.0) {
        double acc = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(a[k] - b[k]);
        return acc;
    }
    if (!(p >= 1.0)) throw InputError("p_norm_dist: p must be >= 1");
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += std::pow(std::abs(a[k] - b[k]), p);
    return std::pow(acc, 1.0 / p);
}

double point_to_class_dist(std::span<const double> y, const ClusteredDataset& ds, long cls,
                           double p) {
    if (cls < 0 || cls >= ds.num_classes()) {
        throw InputError("point_to_class_dist: class " + std::to_string(cls) + " does not exist");
    }
    const Matrix& c = ds.classes[cls];
    if (c.rows == 0) throw InputError("point_to_class_dist: class is empty");
    double best = std::numeric_limits<double>::infinity();
    for (long j = 0; j < c.rows; ++j) {
        const double dist = p_norm_dist(y, c.row(j), p);
        if (dist < best) best = dist;
    }
    return best;
}

long assign_cluster(std::span<const double> y, const ClusteredDataset& ds, double p) {
    if (ds.num_classes() < 1) throw InputError("assign_cluster: dataset has no classes");
    long best_k = 0;
    double best = point_to_class_dist(y, ds, 0, p);
    for (long k = 1; k < ds.num_classes(); ++k) {
        const double dist = point_to_class_dist(y, ds, k, p);
        if (dist < best) {  // strict: ties keep the lowest index
            best = dist;
            best_k = k;
        }
    }
    return best_k;
}

double boundary_radius(std::span<const double> y, const ClusteredDataset& ds, long cls, double p) {
    return point_to_class_dist(y, ds, cls, p);
}

double inter_class_floor(const ClusteredDataset& ds, long cls, double p, FloorRule rule) {
    if (ds.num_classes() < 2) throw InputError("inter_class_floor: need at least 2 classes");
    if (cls < 0 || cls >= ds.num_classes()) {
        throw InputError("inter_class_floor: class " + std::to_string(cls) + " does not exist");
    }
    const Matrix& ck = ds.classes[cls];
    double best = std::numeric_limits<double>::infinity();
    for (long i = 0; i < ds.num_classes(); ++i) {
        if (i == cls) continue;
        const Matrix& ci = ds.classes[i];
        if (rule == FloorRule::all_pairs) {
            for (long a = 0; a < ci.rows; ++a) {
                for (long b = 0; b < ck.rows; ++b) {
                    const double dist = p_norm_dist(ci.row(a), ck.row(b), p);
                    if (dist < best) best = dist;
                }
            }
        } else {
            const long L = std::min(ci.rows, ck.rows);
            for (long j = 0; j < L; ++j) {
                const double dist = p_norm_dist(ci.row(j), ck.row(j), p);
                if (dist < best) best = dist;
            }
        }
    }
    return best;
}

ProximityResult check_proximity(std::span<const double> y, const ClusteredDataset& ds, double p,
                                FloorRule rule) {
    ProximityResult r;
    r.cls = assign_cluster(y, ds, p);
    r.radius = boundary_radius(y, ds, r.cls, p);
    r.floor = inter_class_floor(ds, r.cls, p, rule);
    r.satisfied = r.radius < r.floor;
    r.margin = std::abs(r.radius - r.floor);
    return r;
}

}  // namespace tailgen
