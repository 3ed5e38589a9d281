#include "tailgen/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace tailgen {

namespace {

constexpr const char* kBanner = "tailgen-checkpoint v1";

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_params_block(std::ofstream& f, const double* p, long count) {
    f << "params " << count << "\n";
    for (long i = 0; i < count; ++i) {
        f << fmt17(p[i]) << ((i % 4 == 3 || i == count - 1) ? "\n" : " ");
    }
}

struct Reader {
    std::ifstream f;
    std::string path;
    long line_no = 0;

    explicit Reader(const std::string& p) : f(p), path(p) {
        if (!f) throw FormatError(p + ": cannot open");
    }

    std::string next_line() {
        std::string line;
        while (std::getline(f, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return line;
        }
        throw FormatError(path + ": unexpected end of file after line " + std::to_string(line_no));
    }

    [[noreturn]] void fail(const std::string& msg) {
        throw FormatError(path + ": line " + std::to_string(line_no) + ": " + msg);
    }

    std::string expect_field(const std::string& key) {
        const std::string line = next_line();
        if (line.rfind(key + " ", 0) != 0) fail("expected '" + key + "', got '" + line + "'");
        return line.substr(key.size() + 1);
    }

    long expect_long(const std::string& key) {
        try {
            return std::stol(expect_field(key));
        } catch (const FormatError&) {
            throw;
        } catch (...) {
            fail("bad integer for '" + key + "'");
        }
    }

    double expect_double(const std::string& key) {
        try {
            return std::stod(expect_field(key));
        } catch (const FormatError&) {
            throw;
        } catch (...) {
            fail("bad number for '" + key + "'");
        }
    }

    void read_params(std::vector<double>& out, long count) {
        long got = 0;
        while (got < count) {
            const std::string line = next_line();
            std::istringstream ss(line);
            double v;
            while (ss >> v) {
                if (got >= count) fail("more parameter values than declared");
                out.push_back(v);
                ++got;
            }
            if (!ss.eof()) fail("bad parameter value");
        }
    }
};

void check_banner_and_type(Reader& r, const std::string& want_type) {
    const std::string banner = r.next_line();
    if (banner.rfind("tailgen-checkpoint", 0) != 0) r.fail("not a tailgen checkpoint");
    if (banner != kBanner) r.fail("unsupported checkpoint version '" + banner + "'");
    const std::string type = r.expect_field("type");
    if (type != want_type) {
        r.fail("checkpoint type is '" + type + "', expected '" + want_type + "'");
    }
}

void write_mask_line(std::ofstream& f, const std::uint8_t* mask, long dim) {
    f << "mask";
    for (long j = 0; j < dim; ++j) f << " " << int(mask[j]);
    f << "\n";
}

void verify_mask(Reader& r, const std::string& field, const std::uint8_t* expect, long dim) {
    std::istringstream ss(field);
    for (long j = 0; j < dim; ++j) {
        int v;
        if (!(ss >> v) || (v != 0 && v != 1)) r.fail("bad mask entry");
        if (v != int(expect[j])) r.fail("unsupported mask pattern (expected alternating masks)");
    }
}

}  // namespace

void save_flow_checkpoint(const std::string& path, const FlowModel& model) {
    std::ofstream f(path);
    if (!f) throw FormatError(path + ": cannot open for writing");
    const FlowConfig& cfg = model.config();
    f << kBanner << "\n";
    f << "type flow\n";
    f << "dim " << cfg.dim << "\n";
    f << "layers " << cfg.num_layers << "\n";
    f << "hidden " << cfg.hidden << "\n";
    f << "scale_cap " << fmt17(cfg.scale_cap) << "\n";
    const long per = model.stack().params_per_layer();
    for (long k = 0; k < cfg.num_layers; ++k) {
        f << "layer " << k << "\n";
        write_mask_line(f, model.stack().mask(k), cfg.dim);
        write_params_block(f, model.params().data() + k * per, per);
    }
    f << "end\n";
}

FlowModel load_flow_checkpoint(const std::string& path) {
    Reader r(path);
    check_banner_and_type(r, "flow");
    FlowConfig cfg;
    cfg.dim = r.expect_long("dim");
    cfg.num_layers = r.expect_long("layers");
    cfg.hidden = r.expect_long("hidden");
    cfg.scale_cap = r.expect_double("scale_cap");
    cfg.validate();

    CouplingStack stack(cfg.dim, cfg.num_layers, cfg.hidden, cfg.scale_cap);
    std::vector<double> params;
    params.reserve(stack.total_params());
    for (long k = 0; k < cfg.num_layers; ++k) {
        const long idx = r.expect_long("layer");
        if (idx != k) r.fail("layer blocks out of order");
        verify_mask(r, r.expect_field("mask"), stack.mask(k), cfg.dim);
        const long count = r.expect_long("params");
        if (count != stack.params_per_layer()) r.fail("unexpected per-layer parameter count");
        r.read_params(params, count);
    }
    if (r.next_line() != "end") r.fail("missing 'end'");
    return FlowModel(cfg, std::move(params));
}

void save_tail_checkpoint(const std::string& path, const TailNet& tail) {
    std::ofstream f(path);
    if (!f) throw FormatError(path + ": cannot open for writing");
    const TailConfig& cfg = tail.config();
    f << kBanner << "\n";
    f << "type tail\n";
    const char* arch = cfg.arch == TailArch::coupling       ? "coupling"
                       : cfg.arch == TailArch::feed_forward ? "feed_forward"
                                                            : "residual";
    f << "arch " << arch << "\n";
    f << "dim " << cfg.dim << "\n";
    f << "layers " << cfg.num_layers << "\n";
    f << "hidden " << cfg.hidden << "\n";
    if (cfg.arch == TailArch::coupling) {
        f << "scale_cap " << fmt17(cfg.scale_cap) << "\n";
        CouplingStack stack(cfg.dim, cfg.num_layers, cfg.hidden, cfg.scale_cap);
        const long per = stack.params_per_layer();
        for (long k = 0; k < cfg.num_layers; ++k) {
            f << "layer " << k << "\n";
            write_mask_line(f, stack.mask(k), cfg.dim);
            write_params_block(f, tail.params().data() + k * per, per);
        }
    } else {
        write_params_block(f, tail.params().data(), tail.param_count());
    }
    f << "end\n";
}

TailNet load_tail_checkpoint(const std::string& path) {
    Reader r(path);
    check_banner_and_type(r, "tail");
    const std::string arch = r.expect_field("arch");
    TailConfig cfg;
    if (arch == "coupling") {
        cfg.arch = TailArch::coupling;
    } else if (arch == "feed_forward") {
        cfg.arch = TailArch::feed_forward;
    } else if (arch == "residual") {
        cfg.arch = TailArch::residual;
    } else {
        r.fail("unknown tail architecture '" + arch + "'");
    }
    cfg.dim = r.expect_long("dim");
    cfg.num_layers = r.expect_long("layers");
    cfg.hidden = r.expect_long("hidden");

    std::vector<double> params;
    if (cfg.arch == TailArch::coupling) {
        cfg.scale_cap = r.expect_double("scale_cap");
        CouplingStack stack(cfg.dim, cfg.num_layers, cfg.hidden, cfg.scale_cap);
        params.reserve(stack.total_params());
        for (long k = 0; k < cfg.num_layers; ++k) {
            const long idx = r.expect_long("layer");
            if (idx != k) r.fail("layer blocks out of order");
            verify_mask(r, r.expect_field("mask"), stack.mask(k), cfg.dim);
            const long count = r.expect_long("params");
            if (count != stack.params_per_layer()) r.fail("unexpected per-layer parameter count");
            r.read_params(params, count);
        }
    } else {
        const long count = r.expect_long("params");
        if (count < 0) r.fail("negative parameter count");
        params.reserve(count);
        r.read_params(params, count);
    }
    if (r.next_line() != "end") r.fail("missing 'end'");
    return make_tail_from_parts(cfg, std::move(params));
}

}  // namespace tailgen
