#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "tailgen/clustering.hpp"
#include "tailgen/data.hpp"

using namespace tailgen;
using namespace tailgen::testing;

namespace {

// Independent IDX serializer for fixtures: raw big-endian bytes by hand.
void put_be32(std::ofstream& f, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

void write_idx_fixture(const std::string& img_path, const std::string& lab_path,
                       const std::vector<std::vector<std::uint8_t>>& images,
                       const std::vector<std::uint8_t>& labels, long rows, long cols,
                       bool corrupt_magic = false, bool truncate = false,
                       long label_count_override = -1) {
    std::ofstream img(img_path, std::ios::binary);
    put_be32(img, corrupt_magic ? 0x00000899u : 0x00000803u);
    put_be32(img, static_cast<std::uint32_t>(images.size()));
    put_be32(img, static_cast<std::uint32_t>(rows));
    put_be32(img, static_cast<std::uint32_t>(cols));
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& im = images[i];
        if (truncate && i + 1 == images.size()) {
            img.write(reinterpret_cast<const char*>(im.data()),
                      static_cast<std::streamsize>(im.size() / 2));
        } else {
            img.write(reinterpret_cast<const char*>(im.data()),
                      static_cast<std::streamsize>(im.size()));
        }
    }
    img.close();

    std::ofstream lab(lab_path, std::ios::binary);
    put_be32(lab, 0x00000801u);
    put_be32(lab, static_cast<std::uint32_t>(
                      label_count_override >= 0 ? label_count_override : labels.size()));
    lab.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

std::string tmp(const std::string& name) { return "/tmp/tailgen_test_" + name; }

}  // namespace

TEST_SUITE("data") {

TEST_CASE("single-component sample mean obeys the law of large numbers") {
    DistributionSpec spec;
    spec.dim = 2;
    spec.seed = 401;
    spec.components = {{{0.0, 0.0}, 1.0, 1.0}};
    const ClusteredDataset ds = generate(spec, 10000);
    REQUIRE(ds.num_classes() == 1);
    double mean[2] = {0, 0};
    const Matrix& m = ds.classes[0];
    for (long i = 0; i < m.rows; ++i) {
        mean[0] += m[i][0];
        mean[1] += m[i][1];
    }
    // 3 sigma / sqrt(n) = 0.03 for n = 1e4; assert the stated 0.05 bound.
    CHECK(std::abs(mean[0] / m.rows) < 0.05);
    CHECK(std::abs(mean[1] / m.rows) < 0.05);
}

TEST_CASE("every component label appears") {
    const ClusteredDataset ds = generate(DistributionSpec::tri_gauss(403), 3000);
    CHECK(ds.num_classes() == 3);
    for (const Matrix& c : ds.classes) CHECK(c.rows > 0);
    CHECK(ds.total() == 3000);
}

TEST_CASE("generation is bit-reproducible per seed") {
    const ClusteredDataset a = generate(DistributionSpec::tri_gauss(405), 500);
    const ClusteredDataset b = generate(DistributionSpec::tri_gauss(405), 500);
    for (long k = 0; k < 3; ++k) CHECK(a.classes[k].data == b.classes[k].data);
}

TEST_CASE("n below the component count is rejected") {
    CHECK_THROWS_AS(generate(DistributionSpec::tri_gauss(1), 2), ConfigError);
}

TEST_CASE("ring datasets put samples near the stated radius") {
    DistributionSpec spec;
    spec.kind = DataKind::rings;
    spec.dim = 2;
    spec.seed = 407;
    spec.components = {{{0.0, 0.0}, 3.0, 1.0}};
    const ClusteredDataset ds = generate(spec, 400);
    for (long i = 0; i < ds.classes[0].rows; ++i) {
        const double r = std::hypot(ds.classes[0][i][0], ds.classes[0][i][1]);
        CHECK(std::abs(r - 3.0) < 3.0 * 0.6);  // radial jitter is 0.1 * scale
    }
}

TEST_CASE("leave-one-out re-indexes densely and conserves counts") {
    const ClusteredDataset ds = generate(DistributionSpec::tri_gauss(409), 900);
    auto [normal, anomaly] = leave_one_out(ds, 1);
    CHECK(normal.num_classes() == 2);
    CHECK(normal.classes[0].data == ds.classes[0].data);
    CHECK(normal.classes[1].data == ds.classes[2].data);
    CHECK(anomaly.data == ds.classes[1].data);
    CHECK(normal.total() + anomaly.rows == ds.total());
}

TEST_CASE("leave-one-out sweeps partition the dataset") {
    const ClusteredDataset ds = generate(DistributionSpec::tri_gauss(411), 600);
    long anomaly_total = 0;
    for (long k = 0; k < ds.num_classes(); ++k) {
        auto [normal, anomaly] = leave_one_out(ds, k);
        anomaly_total += anomaly.rows;
        CHECK(anomaly.data == ds.classes[k].data);
    }
    CHECK(anomaly_total == ds.total());
    CHECK_THROWS_AS(leave_one_out(ds, 7), InputError);
}

TEST_CASE("zero-magnitude shift returns the data unchanged") {
    const ClusteredDataset ds = generate(DistributionSpec::tri_gauss(413), 300);
    const Matrix shifted = make_ood(ds, OodMode::shift, 0.0, 0, 99);
    CHECK(shifted.data == ds.flatten().data);
}

TEST_CASE("shift distance obeys the triangle-inequality bound") {
    DistributionSpec spec;
    spec.dim = 2;
    spec.seed = 415;
    spec.components = {{{0.0, 0.0}, 1.0, 0.5}, {{20.0, 0.0}, 1.0, 0.5}};
    const ClusteredDataset ds = generate(spec, 400);
    const Matrix base = ds.flatten();
    const Matrix shifted = make_ood(ds, OodMode::shift, 10.0, 0, 417);
    // Every shifted point moved exactly 10 from its source, so its distance
    // to the original cloud is at least 10 - 6 * scale (numerical check).
    double worst = std::numeric_limits<double>::infinity();
    for (long i = 0; i < shifted.rows; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (long j = 0; j < base.rows; ++j) {
            best = std::min(best, p_norm_dist(shifted.row(i), base.row(j), 2.0));
        }
        worst = std::min(worst, best);
    }
    CHECK(worst >= 10.0 - 6.0 * 1.0);
}

TEST_CASE("uniform box samples stay inside the stated box") {
    const ClusteredDataset ds = generate(DistributionSpec::tri_gauss(419), 300);
    const Matrix base = ds.flatten();
    double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
    for (long i = 0; i < base.rows; ++i) {
        for (int j = 0; j < 2; ++j) {
            lo[j] = std::min(lo[j], base[i][j]);
            hi[j] = std::max(hi[j], base[i][j]);
        }
    }
    const double mag = 2.5;
    const Matrix box = make_ood(ds, OodMode::uniform_box, mag, 1000, 421);
    CHECK(box.rows == 1000);
    for (long i = 0; i < box.rows; ++i) {
        for (int j = 0; j < 2; ++j) {
            CHECK(box[i][j] >= lo[j] - mag);
            CHECK(box[i][j] <= hi[j] + mag);
        }
    }
}

TEST_CASE("disjoint preset has a positive inter-class floor") {
    const ClusteredDataset ds = generate(DistributionSpec::tri_gauss(423), 3000);
    for (long k = 0; k < ds.num_classes(); ++k) {
        CHECK(inter_class_floor(ds, k, 2.0) > 0.0);
    }
}

TEST_CASE("split_holdout conserves and separates rows") {
    const ClusteredDataset ds = generate(DistributionSpec::tri_gauss(425), 1000);
    auto [train, holdout] = split_holdout(ds, 0.25, 427);
    CHECK(train.total() + holdout.total() == ds.total());
    for (long k = 0; k < 3; ++k) {
        CHECK(holdout.classes[k].rows == ds.classes[k].rows / 4);
    }
}

TEST_CASE("idx fixture round-trips exact pixel values") {
    const std::vector<std::vector<std::uint8_t>> images{{0, 128, 255, 64, 32, 16},
                                                        {255, 0, 1, 2, 3, 4}};
    const std::vector<std::uint8_t> labels{1, 0};
    write_idx_fixture(tmp("img"), tmp("lab"), images, labels, 2, 3);
    const ClusteredDataset ds = load_idx(tmp("img"), tmp("lab"));
    REQUIRE(ds.num_classes() == 2);
    REQUIRE(ds.dim == 6);
    // Label 0 holds the second image, label 1 the first.
    for (int p = 0; p < 6; ++p) {
        CHECK(ds.classes[0][0][p] == doctest::Approx(images[1][p] / 255.0).epsilon(1e-15));
        CHECK(ds.classes[1][0][p] == doctest::Approx(images[0][p] / 255.0).epsilon(1e-15));
    }
}

TEST_CASE("idx rejects an empty file") {
    std::ofstream(tmp("empty"), std::ios::binary).close();
    std::ofstream(tmp("empty_lab"), std::ios::binary).close();
    CHECK_THROWS_AS(load_idx(tmp("empty"), tmp("empty_lab")), FormatError);
}

TEST_CASE("idx rejects a bad magic number") {
    write_idx_fixture(tmp("badmagic"), tmp("badmagic_lab"), {{0, 0, 0, 0, 0, 0}}, {0}, 2, 3,
                      /*corrupt_magic=*/true);
    CHECK_THROWS_AS(load_idx(tmp("badmagic"), tmp("badmagic_lab")), FormatError);
}

TEST_CASE("idx rejects image/label count mismatch") {
    write_idx_fixture(tmp("mismatch"), tmp("mismatch_lab"), {{0, 0, 0, 0, 0, 0}}, {0}, 2, 3,
                      false, false, /*label_count_override=*/3);
    CHECK_THROWS_AS(load_idx(tmp("mismatch"), tmp("mismatch_lab")), FormatError);
}

TEST_CASE("idx reports truncation with a byte offset") {
    write_idx_fixture(tmp("trunc"), tmp("trunc_lab"), {{9, 9, 9, 9, 9, 9}, {7, 7, 7, 7, 7, 7}},
                      {0, 1}, 2, 3, false, /*truncate=*/true);
    try {
        load_idx(tmp("trunc"), tmp("trunc_lab"));
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
}

TEST_CASE("dataset csv round-trips bit-exactly") {
    const ClusteredDataset ds = generate(DistributionSpec::tri_gauss(429), 120);
    save_dataset_csv(tmp("ds.csv"), ds);
    const ClusteredDataset back = load_dataset_csv(tmp("ds.csv"));
    REQUIRE(back.num_classes() == ds.num_classes());
    for (long k = 0; k < ds.num_classes(); ++k) CHECK(back.classes[k].data == ds.classes[k].data);
}

TEST_CASE("matrix csv round-trips and tolerates a label column") {
    const Matrix m = gaussian_blob(50, 2, std::vector<double>{1, 2}, 3.0, 431);
    save_matrix_csv(tmp("m.csv"), m);
    CHECK(load_matrix_csv(tmp("m.csv")).data == m.data);

    const ClusteredDataset ds = generate(DistributionSpec::tri_gauss(433), 60);
    save_dataset_csv(tmp("ds2.csv"), ds);
    const Matrix flat = load_matrix_csv(tmp("ds2.csv"));
    CHECK(flat.data == ds.flatten().data);
}

TEST_CASE("csv loader reports malformed rows") {
    {
        std::ofstream f(tmp("bad.csv"));
        f << "label,x0,x1\n0,1.0\n";
    }
    CHECK_THROWS_AS(load_dataset_csv(tmp("bad.csv")), FormatError);
    {
        std::ofstream f(tmp("bad2.csv"));
        f << "x0,x1\n1.0,oops\n";
    }
    CHECK_THROWS_AS(load_matrix_csv(tmp("bad2.csv")), FormatError);
}

TEST_CASE("spec validation") {
    DistributionSpec spec;
    spec.components = {{{0.0, 0.0}, 1.0, 0.7}};  // weights do not sum to 1
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = DistributionSpec::tri_gauss(1);
    spec.components[0].scale = 0.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

}  // TEST_SUITE
