#include <doctest.h>

#include <fstream>
#include <vector>

#include "helpers.hpp"
#include "tailgen/checkpoint.hpp"

using namespace tailgen;
using namespace tailgen::testing;

namespace {
std::string tmp(const std::string& name) { return "/tmp/tailgen_ckpt_" + name; }
}

TEST_SUITE("checkpoint") {

TEST_CASE("flow checkpoints round-trip bit-exactly") {
    FlowConfig cfg;
    cfg.num_layers = 3;
    cfg.hidden = 16;
    FlowModel m = perturbed_flow(cfg, 0.2, 501);
    save_flow_checkpoint(tmp("flow.ckpt"), m);
    const FlowModel back = load_flow_checkpoint(tmp("flow.ckpt"));
    CHECK(back.params() == m.params());
    CHECK(back.config().num_layers == 3);
    const std::vector<double> probe{0.37, -1.9};
    CHECK(back.log_density(probe) == m.log_density(probe));
    CHECK(back.forward(probe) == m.forward(probe));
}

TEST_CASE("tail checkpoints round-trip for every architecture") {
    FlowModel flow = perturbed_flow(FlowConfig{}, 0.15, 503);
    const TailNet coupling = init_tail(flow, TailInit::from_density, 0);

    TailConfig ff;
    ff.arch = TailArch::feed_forward;
    const TailNet feed = TailNet::random_init(ff, 505);

    TailConfig res;
    res.arch = TailArch::residual;
    res.num_layers = 2;
    const TailNet residual = TailNet::random_init(res, 507);

    int idx = 0;
    for (const TailNet* t : {&coupling, &feed, &residual}) {
        const std::string path = tmp("tail" + std::to_string(idx++) + ".ckpt");
        save_tail_checkpoint(path, *t);
        const TailNet back = load_tail_checkpoint(path);
        CHECK(back.params() == t->params());
        CHECK(back.arch() == t->arch());
        const std::vector<double> probe{1.1, -0.6};
        CHECK(back.forward(probe) == t->forward(probe));
    }
}

TEST_CASE("unknown versions are rejected") {
    FlowModel m(FlowConfig{}, 1);
    save_flow_checkpoint(tmp("v2.ckpt"), m);
    // Bump the version banner.
    std::ifstream in(tmp("v2.ckpt"));
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    content.replace(content.find("v1"), 2, "v2");
    std::ofstream out(tmp("v2.ckpt"));
    out << content;
    out.close();
    CHECK_THROWS_AS(load_flow_checkpoint(tmp("v2.ckpt")), FormatError);
}

TEST_CASE("type tags distinguish flow and tail files") {
    FlowModel m(FlowConfig{}, 1);
    save_flow_checkpoint(tmp("astype.ckpt"), m);
    CHECK_THROWS_AS(load_tail_checkpoint(tmp("astype.ckpt")), FormatError);

    const TailNet t = init_tail(m, TailInit::from_density, 0);
    save_tail_checkpoint(tmp("astype2.ckpt"), t);
    CHECK_THROWS_AS(load_flow_checkpoint(tmp("astype2.ckpt")), FormatError);
}

TEST_CASE("truncated files fail cleanly") {
    FlowModel m(FlowConfig{}, 1);
    save_flow_checkpoint(tmp("trunc.ckpt"), m);
    std::ifstream in(tmp("trunc.ckpt"));
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(tmp("trunc.ckpt"));
    out << content.substr(0, content.size() / 2);
    out.close();
    CHECK_THROWS_AS(load_flow_checkpoint(tmp("trunc.ckpt")), FormatError);

    std::ofstream empty(tmp("empty.ckpt"));
    empty.close();
    CHECK_THROWS_AS(load_flow_checkpoint(tmp("empty.ckpt")), FormatError);
    CHECK_THROWS_AS(load_flow_checkpoint("/nonexistent/nope.ckpt"), FormatError);
}

}  // TEST_SUITE
