#include "tailgen/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "tailgen/rng.hpp"

namespace tailgen {

void DistributionSpec::validate() const {
    if (dim < 1) throw ConfigError("data: dim must be >= 1");
    if (components.empty()) throw ConfigError("data: at least one component required");
    double wsum = 0.0;
    for (const auto& c : components) {
        if (static_cast<long>(c.center.size()) != dim) {
            throw ConfigError("data: component center length != dim");
        }
        if (!(c.scale > 0.0)) throw ConfigError("data: component scale must be > 0");
        if (!(c.weight >= 0.0)) throw ConfigError("data: component weight must be >= 0");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw ConfigError("data: component weights must sum to 1");
    if (kind == DataKind::rings && dim < 2) throw ConfigError("data: rings need dim >= 2");
}

DistributionSpec DistributionSpec::tri_gauss(std::uint64_t seed) {
    DistributionSpec spec;
    spec.kind = DataKind::gaussian_mixture;
    spec.dim = 2;
    spec.seed = seed;
    const double third = 1.0 / 3.0;
    spec.components = {{{0.0, 0.0}, 0.7, third}, {{8.0, 0.0}, 0.7, third}, {{0.0, 8.0}, 0.7, third}};
    return spec;
}

namespace {
// Largest-remainder allocation of n samples to weights, at least one each.
std::vector<long> allocate_counts(const std::vector<Component>& comps, long n) {
    const long k = static_cast<long>(comps.size());
    std::vector<long> counts(k, 0);
    std::vector<std::pair<double, long>> rema(k);
    long used = 0;
    for (long i = 0; i < k; ++i) {
        const double exact = comps[i].weight * static_cast<double>(n);
        counts[i] = static_cast<long>(std::floor(exact));
        rema[i] = {exact - std::floor(exact), i};
        used += counts[i];
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (long r = 0; used < n; ++r, ++used) counts[rema[r % k].second] += 1;
    // Every component contributes at least one sample.
    for (long i = 0; i < k; ++i) {
        while (counts[i] == 0) {
            long donor = static_cast<long>(
                std::max_element(counts.begin(), counts.end()) - counts.begin());
            counts[donor] -= 1;
            counts[i] += 1;
        }
    }
    return counts;
}
}  // namespace

ClusteredDataset generate(const DistributionSpec& spec, long n) {
    spec.validate();
    const long k = static_cast<long>(spec.components.size());
    if (n < k) throw ConfigError("generate: n must be >= number of components");

    const std::vector<long> counts = allocate_counts(spec.components, n);
    ClusteredDataset ds;
    ds.dim = spec.dim;
    Rng rng(spec.seed);
    for (long c = 0; c < k; ++c) {
        const Component& comp = spec.components[c];
        Matrix m(counts[c], spec.dim);
        for (long i = 0; i < counts[c]; ++i) {
            if (spec.kind == DataKind::gaussian_mixture) {
                for (long j = 0; j < spec.dim; ++j) {
                    m[i][j] = comp.center[j] + comp.scale * rng.normal();
                }
            } else {
                // Ring in the first two coordinates, Gaussian radial jitter of
                // a tenth of the radius; remaining coordinates get the jitter.
                const double theta = rng.uniform(0.0, 6.283185307179586476925286766559);
                const double radius = comp.scale + 0.1 * comp.scale * rng.normal();
                m[i][0] = comp.center[0] + radius * std::cos(theta);
                m[i][1] = comp.center[1] + radius * std::sin(theta);
                for (long j = 2; j < spec.dim; ++j) {
                    m[i][j] = comp.center[j] + 0.1 * comp.scale * rng.normal();
                }
            }
        }
        ds.classes.push_back(std::move(m));
    }
    return ds;
}

std::pair<ClusteredDataset, ClusteredDataset> split_holdout(const ClusteredDataset& ds,
                                                            double holdout_fraction,
                                                            std::uint64_t seed) {
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
        throw InputError("split_holdout: fraction must be in [0, 1)");
    }
    ClusteredDataset train, holdout;
    train.dim = holdout.dim = ds.dim;
    Rng rng(seed);
    for (const Matrix& c : ds.classes) {
        std::vector<long> order(c.rows);
        std::iota(order.begin(), order.end(), 0);
        for (long i = c.rows - 1; i > 0; --i) {
            const long j = static_cast<long>(rng.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[i], order[j]);
        }
        const long n_hold = static_cast<long>(std::floor(holdout_fraction * c.rows));
        Matrix h(n_hold, ds.dim), t(c.rows - n_hold, ds.dim);
        for (long i = 0; i < n_hold; ++i) std::memcpy(h[i], c[order[i]], sizeof(double) * ds.dim);
        for (long i = n_hold; i < c.rows; ++i) {
            std::memcpy(t[i - n_hold], c[order[i]], sizeof(double) * ds.dim);
        }
        train.classes.push_back(std::move(t));
        holdout.classes.push_back(std::move(h));
    }
    return {std::move(train), std::move(holdout)};
}

std::pair<ClusteredDataset, Matrix> leave_one_out(const ClusteredDataset& ds, long k) {
    if (ds.num_classes() < 2) throw InputError("leave_one_out: need at least 2 classes");
    if (k < 0 || k >= ds.num_classes()) {
        throw InputError("leave_one_out: class " + std::to_string(k) + " does not exist");
    }
    ClusteredDataset normal;
    normal.dim = ds.dim;
    for (long i = 0; i < ds.num_classes(); ++i) {
        if (i != k) normal.classes.push_back(ds.classes[i]);
    }
    return {std::move(normal), ds.classes[k]};
}

Matrix make_ood(const ClusteredDataset& ds, OodMode mode, double magnitude, long n,
                std::uint64_t seed) {
    if (magnitude < 0.0) throw InputError("make_ood: magnitude must be >= 0");
    const Matrix all = ds.flatten();
    if (all.rows == 0) throw InputError("make_ood: dataset is empty");
    if (n <= 0) n = all.rows;

    Rng rng(seed);
    if (mode == OodMode::shift) {
        // One seeded direction, unit length, shared by every sample.
        std::vector<double> dir(ds.dim);
        double norm = 0.0;
        do {
            norm = 0.0;
            for (long j = 0; j < ds.dim; ++j) {
                dir[j] = rng.normal();
                norm += dir[j] * dir[j];
            }
            norm = std::sqrt(norm);
        } while (norm == 0.0);
        Matrix out(all.rows, ds.dim);
        for (long i = 0; i < all.rows; ++i) {
            for (long j = 0; j < ds.dim; ++j) {
                out[i][j] = all[i][j] + magnitude * dir[j] / norm;
            }
        }
        return out;
    }

    std::vector<double> lo(ds.dim, std::numeric_limits<double>::infinity());
    std::vector<double> hi(ds.dim, -std::numeric_limits<double>::infinity());
    for (long i = 0; i < all.rows; ++i) {
        for (long j = 0; j < ds.dim; ++j) {
            lo[j] = std::min(lo[j], all[i][j]);
            hi[j] = std::max(hi[j], all[i][j]);
        }
    }
    Matrix out(n, ds.dim);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < ds.dim; ++j) {
            out[i][j] = rng.uniform(lo[j] - magnitude, hi[j] + magnitude);
        }
    }
    return out;
}

namespace {
std::uint32_t read_be32(std::ifstream& f, const std::string& path, long offset) {
    unsigned char buf[4];
    f.read(reinterpret_cast<char*>(buf), 4);
    if (f.gcount() != 4) {
        throw FormatError(path + ": truncated at byte " + std::to_string(offset));
    }
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}
}  // namespace

ClusteredDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw FormatError(images_path + ": cannot open");
    const std::uint32_t img_magic = read_be32(img, images_path, 0);
    if (img_magic != 0x00000803u) {
        throw FormatError(images_path + ": bad magic at byte 0 (expected 0x00000803)");
    }
    const std::uint32_t n_images = read_be32(img, images_path, 4);
    const std::uint32_t n_rows = read_be32(img, images_path, 8);
    const std::uint32_t n_cols = read_be32(img, images_path, 12);
    const long pixels = static_cast<long>(n_rows) * n_cols;
    if (pixels <= 0) throw FormatError(images_path + ": zero image dimensions");

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw FormatError(labels_path + ": cannot open");
    const std::uint32_t lab_magic = read_be32(lab, labels_path, 0);
    if (lab_magic != 0x00000801u) {
        throw FormatError(labels_path + ": bad magic at byte 0 (expected 0x00000801)");
    }
    const std::uint32_t n_labels = read_be32(lab, labels_path, 4);
    if (n_labels != n_images) {
        throw FormatError(labels_path + ": label count " + std::to_string(n_labels) +
                          " does not match image count " + std::to_string(n_images));
    }

    std::vector<std::uint8_t> labels(n_labels);
    lab.read(reinterpret_cast<char*>(labels.data()), n_labels);
    if (lab.gcount() != static_cast<std::streamsize>(n_labels)) {
        throw FormatError(labels_path + ": truncated at byte " +
                          std::to_string(8 + lab.gcount()));
    }

    int max_label = -1;
    for (std::uint8_t l : labels) max_label = std::max(max_label, static_cast<int>(l));
    if (max_label < 0) throw FormatError(labels_path + ": no labels");

    std::vector<std::vector<std::vector<double>>> grouped(max_label + 1);
    std::vector<std::uint8_t> raw(pixels);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        img.read(reinterpret_cast<char*>(raw.data()), pixels);
        if (img.gcount() != static_cast<std::streamsize>(pixels)) {
            throw FormatError(images_path + ": truncated at byte " +
                              std::to_string(16 + static_cast<long>(i) * pixels + img.gcount()));
        }
        std::vector<double> row(pixels);
        for (long p = 0; p < pixels; ++p) row[p] = static_cast<double>(raw[p]) / 255.0;
        grouped[labels[i]].push_back(std::move(row));
    }

    ClusteredDataset ds;
    ds.dim = pixels;
    for (auto& group : grouped) {
        if (group.empty()) continue;  // absent labels do not create empty classes
        Matrix m(static_cast<long>(group.size()), pixels);
        for (long i = 0; i < m.rows; ++i) {
            std::memcpy(m[i], group[i].data(), sizeof(double) * pixels);
        }
        ds.classes.push_back(std::move(m));
    }
    if (ds.classes.empty()) throw FormatError(images_path + ": no images");
    return ds;
}

namespace {
std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}
}  // namespace

void save_dataset_csv(const std::string& path, const ClusteredDataset& ds) {
    std::ofstream f(path);
    if (!f) throw FormatError(path + ": cannot open for writing");
    f << "label";
    for (long j = 0; j < ds.dim; ++j) f << ",x" << j;
    f << "\n";
    for (long k = 0; k < ds.num_classes(); ++k) {
        const Matrix& c = ds.classes[k];
        for (long i = 0; i < c.rows; ++i) {
            f << k;
            for (long j = 0; j < ds.dim; ++j) f << "," << fmt17(c[i][j]);
            f << "\n";
        }
    }
}

ClusteredDataset load_dataset_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError(path + ": cannot open");
    std::string line;
    if (!std::getline(f, line)) throw FormatError(path + ": empty file");
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "label") {
        throw FormatError(path + ": expected 'label' as the first CSV column");
    }
    const long dim = static_cast<long>(header.size()) - 1;
    if (dim < 1) throw FormatError(path + ": no coordinate columns");

    std::vector<std::vector<std::vector<double>>> grouped;
    long line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (static_cast<long>(cells.size()) != dim + 1) {
            throw FormatError(path + ": line " + std::to_string(line_no) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(dim + 1));
        }
        long label;
        try {
            label = std::stol(cells[0]);
        } catch (...) {
            throw FormatError(path + ": line " + std::to_string(line_no) + ": bad label");
        }
        if (label < 0) throw FormatError(path + ": negative label");
        if (label >= static_cast<long>(grouped.size())) grouped.resize(label + 1);
        std::vector<double> row(dim);
        for (long j = 0; j < dim; ++j) {
            try {
                row[j] = std::stod(cells[j + 1]);
            } catch (...) {
                throw FormatError(path + ": line " + std::to_string(line_no) + ": bad number");
            }
        }
        grouped[label].push_back(std::move(row));
    }

    ClusteredDataset ds;
    ds.dim = dim;
    for (std::size_t k = 0; k < grouped.size(); ++k) {
        if (grouped[k].empty()) {
            throw FormatError(path + ": label " + std::to_string(k) +
                              " is missing (labels must be dense)");
        }
        Matrix m(static_cast<long>(grouped[k].size()), dim);
        for (long i = 0; i < m.rows; ++i) {
            std::memcpy(m[i], grouped[k][i].data(), sizeof(double) * dim);
        }
        ds.classes.push_back(std::move(m));
    }
    if (ds.classes.empty()) throw FormatError(path + ": no data rows");
    return ds;
}

void save_matrix_csv(const std::string& path, const Matrix& m) {
    std::ofstream f(path);
    if (!f) throw FormatError(path + ": cannot open for writing");
    for (long j = 0; j < m.cols; ++j) f << (j ? ",x" : "x") << j;
    f << "\n";
    for (long i = 0; i < m.rows; ++i) {
        for (long j = 0; j < m.cols; ++j) {
            if (j) f << ",";
            f << fmt17(m[i][j]);
        }
        f << "\n";
    }
}

Matrix load_matrix_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError(path + ": cannot open");
    std::string line;
    if (!std::getline(f, line)) throw FormatError(path + ": empty file");
    auto header = split_csv_line(line);
    long dim = static_cast<long>(header.size());
    long skip = 0;
    if (!header.empty() && header[0] == "label") {
        // Dataset exports load fine as plain matrices; the label column drops.
        dim -= 1;
        skip = 1;
    }
    if (dim < 1) throw FormatError(path + ": no coordinate columns");

    std::vector<std::vector<double>> rows;
    long line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (static_cast<long>(cells.size()) != dim + skip) {
            throw FormatError(path + ": line " + std::to_string(line_no) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(dim + skip));
        }
        std::vector<double> row(dim);
        for (long j = 0; j < dim; ++j) {
            try {
                row[j] = std::stod(cells[j + skip]);
            } catch (...) {
                throw FormatError(path + ": line " + std::to_string(line_no) + ": bad number");
            }
        }
        rows.push_back(std::move(row));
    }
    Matrix m(static_cast<long>(rows.size()), dim);
    for (long i = 0; i < m.rows; ++i) std::memcpy(m[i], rows[i].data(), sizeof(double) * dim);
    return m;
}

}  // namespace tailgen
