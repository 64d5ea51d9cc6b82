#include "epitwin/calib/calibnet.hpp"

#include "epitwin/ad/ops.hpp"
#include "epitwin/util/error.hpp"
#include "epitwin/util/fs.hpp"
#include "epitwin/util/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

namespace epitwin::calib {

using ad::Tensor;

const char* cell_name(CellKind c)
{
    return c == CellKind::gru ? "gru" : "mgu";
}

CellKind cell_from(const std::string& s)
{
    if (s == "gru")
        return CellKind::gru;
    if (s == "mgu")
        return CellKind::mgu;
    raise(Errc::config_error, "cell must be 'gru' or 'mgu', got '" + s + "'");
}

namespace {

constexpr char kMagic[9] = "EPTWCKPT";

Tensor init_weight(Rng& rng, std::size_t rows, std::size_t cols)
{
    double scale = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<double> vals(rows * cols);
    for (auto& v : vals)
        v = rng.uniform(-scale, scale);
    return Tensor::from({rows, cols}, std::move(vals));
}

} // namespace

CalibNet::CalibNet(NetConfig cfg) : cfg_(cfg)
{
    require(cfg_.input_dim >= 1, Errc::contract_error, "CalibNet needs at least one feature");
    require(cfg_.hidden >= 1, Errc::contract_error, "CalibNet needs a positive hidden size");

    const std::size_t d = cfg_.input_dim, h = cfg_.hidden;
    Rng rng = Rng(cfg_.seed).stream(0xCA11B);
    auto push = [&](const std::string& name, std::size_t rows, std::size_t cols, bool zero) {
        names_.push_back(name);
        weights_.push_back(zero ? Tensor::zeros({rows, cols}) : init_weight(rng, rows, cols));
    };

    push("embed_w", d, h, false);
    push("embed_b", 1, h, true);
    if (cfg_.cell == CellKind::gru) {
        for (const char* gate : {"z", "r", "h"}) {
            push(std::string("gru_w") + gate, h, h, false);
            push(std::string("gru_u") + gate, h, h, false);
            push(std::string("gru_b") + gate, 1, h, true);
        }
    } else {
        for (const char* gate : {"f", "h"}) {
            push(std::string("mgu_w") + gate, h, h, false);
            push(std::string("mgu_u") + gate, h, h, false);
            push(std::string("mgu_b") + gate, 1, h, true);
        }
    }
    push("head_w", h, 8, false);
    push("head_b", 1, 8, true);

    mean_.assign(d, 0.0);
    std_.assign(d, 1.0);
}

void CalibNet::fit_normalizer(const eval::Dataset& data)
{
    require(data.d == cfg_.input_dim, Errc::contract_error,
            "dataset feature width " + std::to_string(data.d) + " does not match the net input " +
                std::to_string(cfg_.input_dim));
    const double n = static_cast<double>(data.L * data.T);
    for (std::size_t f = 0; f < data.d; ++f) {
        double acc = 0.0;
        for (std::size_t l = 0; l < data.L; ++l)
            for (std::size_t t = 0; t < data.T; ++t)
                acc += data.at(l, t, f);
        double mean = acc / n;
        double var = 0.0;
        for (std::size_t l = 0; l < data.L; ++l)
            for (std::size_t t = 0; t < data.T; ++t) {
                double r = data.at(l, t, f) - mean;
                var += r * r;
            }
        mean_[f] = mean;
        std_[f] = std::sqrt(var / n);
        if (std_[f] < 1e-8)
            std_[f] = 1.0; // constant feature; leave it centred
    }
}

sim::ParamField CalibNet::forward(const eval::Dataset& data, std::size_t steps, ad::Tape* tape,
                                  std::vector<ad::Tensor>* tracked_out) const
{
    require(data.d == cfg_.input_dim, Errc::contract_error,
            "dataset feature width " + std::to_string(data.d) + " does not match the net input " +
                std::to_string(cfg_.input_dim));
    require(data.T >= 1, Errc::contract_error, "forward needs a nonempty window");
    require(steps >= 1, Errc::contract_error, "forward needs steps >= 1");

    std::vector<Tensor> w;
    w.reserve(weights_.size());
    for (const auto& t : weights_)
        w.push_back(tape ? tape->var(t) : t);
    if (tracked_out)
        *tracked_out = w;
    auto weight = [&](const char* name) -> const Tensor& {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name)
                return w[i];
        raise(Errc::contract_error, std::string("unknown weight '") + name + "'");
    };

    const std::size_t L = data.L, d = data.d, h = cfg_.hidden;

    // Bounds rows for the scaled sigmoid head.
    std::vector<double> lo(8), range(8);
    for (std::size_t c = 0; c < 8; ++c) {
        lo[c] = cfg_.bounds[c].lo;
        range[c] = cfg_.bounds[c].hi - cfg_.bounds[c].lo;
    }
    Tensor lo_row = Tensor::from({1, 8}, lo);
    Tensor range_row = Tensor::from({1, 8}, range);

    Tensor hidden = Tensor::zeros({L, h});
    Tensor one = Tensor::scalar(1.0);
    std::vector<Tensor> per_step;
    per_step.reserve(steps);
    Tensor held;

    const std::size_t observed = std::min(steps, data.T);
    for (std::size_t t = 0; t < observed; ++t) {
        std::vector<double> row(L * d);
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t f = 0; f < d; ++f)
                row[l * d + f] = (data.at(l, t, f) - mean_[f]) / std_[f];
        Tensor x = Tensor::from({L, d}, std::move(row));

        Tensor embedded = ad::tanh(ad::add(ad::matmul(x, weight("embed_w")), weight("embed_b")));
        if (cfg_.cell == CellKind::gru) {
            Tensor z = ad::sigmoid(ad::add(
                ad::add(ad::matmul(embedded, weight("gru_wz")), ad::matmul(hidden, weight("gru_uz"))),
                weight("gru_bz")));
            Tensor r = ad::sigmoid(ad::add(
                ad::add(ad::matmul(embedded, weight("gru_wr")), ad::matmul(hidden, weight("gru_ur"))),
                weight("gru_br")));
            Tensor candidate = ad::tanh(ad::add(
                ad::add(ad::matmul(embedded, weight("gru_wh")),
                        ad::matmul(ad::mul(r, hidden), weight("gru_uh"))),
                weight("gru_bh")));
            hidden = ad::add(ad::mul(ad::sub(one, z), hidden), ad::mul(z, candidate));
        } else {
            Tensor f = ad::sigmoid(ad::add(
                ad::add(ad::matmul(embedded, weight("mgu_wf")), ad::matmul(hidden, weight("mgu_uf"))),
                weight("mgu_bf")));
            Tensor candidate = ad::tanh(ad::add(
                ad::add(ad::matmul(embedded, weight("mgu_wh")),
                        ad::matmul(ad::mul(f, hidden), weight("mgu_uh"))),
                weight("mgu_bh")));
            hidden = ad::add(ad::mul(ad::sub(one, f), hidden), ad::mul(f, candidate));
        }

        Tensor head = ad::add(ad::matmul(hidden, weight("head_w")), weight("head_b"));
        Tensor theta = ad::add(lo_row, ad::mul(range_row, ad::sigmoid(head))); // (L, 8)
        per_step.push_back(theta);
        held = theta;
    }
    // Forecast regime: hold the final head output beyond the window.
    for (std::size_t t = observed; t < steps; ++t)
        per_step.push_back(held);

    Tensor stacked = ad::stack(per_step);          // (steps, L, 8)
    Tensor field = ad::transpose01(stacked);       // (L, steps, 8)
    return sim::ParamField::from_tensor(field, cfg_.bounds);
}

sim::ParamField predict_params(const CalibNet& net, const eval::Dataset& data, std::size_t steps,
                               ad::Tape* tape)
{
    return net.forward(data, steps, tape);
}

void CalibNet::save(const std::filesystem::path& path) const
{
    nlohmann::ordered_json header;
    header["config"] = {{"input_dim", cfg_.input_dim},
                        {"hidden", cfg_.hidden},
                        {"cell", cell_name(cfg_.cell)},
                        {"seed", cfg_.seed}};
    nlohmann::ordered_json bounds = nlohmann::ordered_json::array();
    for (const auto& b : cfg_.bounds)
        bounds.push_back({b.lo, b.hi});
    header["bounds"] = bounds;
    header["normalizer"] = {{"mean", mean_}, {"std", std_}};
    nlohmann::ordered_json shapes = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < weights_.size(); ++i)
        shapes.push_back({{"name", names_[i]}, {"shape", weights_[i].shape()}});
    header["weights"] = shapes;
    std::string head = header.dump();

    std::string blob;
    blob.append(kMagic, 8);
    std::uint64_t len = head.size();
    blob.append(reinterpret_cast<const char*>(&len), sizeof(len));
    blob.append(head);
    for (const auto& t : weights_) {
        auto v = t.values();
        blob.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    }
    atomic_write_file(path, blob);
}

CalibNet CalibNet::load(const std::filesystem::path& path)
{
    std::string blob = read_file(path);
    require(blob.size() > 16 && std::memcmp(blob.data(), kMagic, 8) == 0, Errc::io_error,
            "not a checkpoint file: " + path.string());
    std::uint64_t len = 0;
    std::memcpy(&len, blob.data() + 8, sizeof(len));
    require(blob.size() >= 16 + len, Errc::io_error, "truncated checkpoint header");
    nlohmann::json header = nlohmann::json::parse(blob.substr(16, len));

    NetConfig cfg;
    cfg.input_dim = header["config"]["input_dim"].get<std::size_t>();
    cfg.hidden = header["config"]["hidden"].get<std::size_t>();
    cfg.cell = cell_from(header["config"]["cell"].get<std::string>());
    cfg.seed = header["config"]["seed"].get<std::uint64_t>();
    auto bounds = header["bounds"];
    for (std::size_t c = 0; c < 8; ++c)
        cfg.bounds[c] = {bounds[c][0].get<double>(), bounds[c][1].get<double>()};

    CalibNet net(cfg);
    net.mean_ = header["normalizer"]["mean"].get<std::vector<double>>();
    net.std_ = header["normalizer"]["std"].get<std::vector<double>>();

    std::size_t offset = 16 + len;
    for (std::size_t i = 0; i < net.weights_.size(); ++i) {
        auto span = net.weights_[i].values_mut();
        std::size_t bytes = span.size() * sizeof(double);
        require(offset + bytes <= blob.size(), Errc::io_error, "truncated checkpoint payload");
        std::memcpy(span.data(), blob.data() + offset, bytes);
        offset += bytes;
    }
    require(offset == blob.size(), Errc::io_error, "checkpoint payload has trailing bytes");
    return net;
}

} // namespace epitwin::calib
