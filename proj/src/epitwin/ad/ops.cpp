#include "epitwin/ad/ops.hpp"

#include "epitwin/kern/kernels.hpp"
#include "epitwin/util/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace epitwin::ad {

namespace {

enum class Bc { same, a_scalar, b_scalar, a_lead, b_lead };

struct BinPlan {
    Bc kind;
    Shape out;
    std::size_t inner; // repeated block size for *_lead
};

BinPlan plan_binary(const Tensor& a, const Tensor& b)
{
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa == sb)
        return {Bc::same, sa, 0};
    if (a.size() == 1)
        return {Bc::a_scalar, sb, 0};
    if (b.size() == 1)
        return {Bc::b_scalar, sa, 0};
    if (sa.size() == sb.size() && !sa.empty()) {
        bool tail_equal = std::equal(sa.begin() + 1, sa.end(), sb.begin() + 1);
        if (tail_equal && sa[0] == 1)
            return {Bc::a_lead, sb, a.size()};
        if (tail_equal && sb[0] == 1)
            return {Bc::b_lead, sa, b.size()};
    }
    raise(Errc::shape_error,
          "shapes " + shape_str(sa) + " and " + shape_str(sb) + " do not conform");
}

template <class F>
Tensor ew_forward(const Tensor& a, const Tensor& b, const BinPlan& plan, F f)
{
    Tensor out = Tensor::uninit(plan.out);
    const double* pa = a.values().data();
    const double* pb = b.values().data();
    double* po = out.values_mut().data();
    const std::size_t n = out.size();
    auto id = [](std::size_t i) { return i; };
    auto zero = [](std::size_t) { return std::size_t{0}; };
    switch (plan.kind) {
    case Bc::same:
        kern::map2(pa, pb, po, n, f, id, id);
        break;
    case Bc::a_scalar:
        kern::map2(pa, pb, po, n, f, zero, id);
        break;
    case Bc::b_scalar:
        kern::map2(pa, pb, po, n, f, id, zero);
        break;
    case Bc::a_lead:
        kern::map2(pa, pb, po, n, f, [m = plan.inner](std::size_t i) { return i % m; }, id);
        break;
    case Bc::b_lead:
        kern::map2(pa, pb, po, n, f, id, [m = plan.inner](std::size_t i) { return i % m; });
        break;
    }
    return out;
}

// Sum a gradient of the broadcast output shape back down to the
// operand shape. Plain (untracked) arithmetic.
Tensor reduce_to(const Tensor& g, const Shape& target)
{
    if (g.shape() == target)
        return detached(g);
    const std::size_t tn = shape_size(target);
    Tensor out = Tensor::zeros(target);
    double* po = out.values_mut().data();
    const double* pg = g.values().data();
    if (tn == 1) {
        po[0] = kern::reduce_sum(pg, g.size());
        return out;
    }
    // Leading-axis broadcast: fold the outer repetitions.
    const std::size_t reps = g.size() / tn;
    for (std::size_t r = 0; r < reps; ++r)
        kern::add_inplace(po, pg + r * tn, tn);
    return out;
}

template <class F>
Tensor unary_forward(const Tensor& x, F f)
{
    Tensor out = Tensor::uninit(x.shape());
    kern::map1(x.values().data(), out.values_mut().data(), x.size(), f);
    return out;
}

// g_out[i] = g[i] * d[i] where d comes from a captured tensor.
Tensor mul_raw(const Tensor& g, const Tensor& d)
{
    BinPlan plan = plan_binary(g, d);
    return ew_forward(g, d, plan, [](double a, double b) { return a * b; });
}

void bind_if(Tensor& out, Tape* tape, Tape::BackFn fn)
{
    if (tape)
        tape->bind(out, tape->record(std::move(fn)));
}

} // namespace

Tensor detached(const Tensor& x)
{
    return x.detach();
}

Tensor add(const Tensor& a, const Tensor& b)
{
    BinPlan plan = plan_binary(a, b);
    Tensor out = ew_forward(a, b, plan, [](double x, double y) { return x + y; });
    if (Tape* tape = common_tape(a, b)) {
        int na = a.tracked() ? a.node() : -1;
        int nb = b.tracked() ? b.node() : -1;
        Shape sa = a.shape(), sb = b.shape();
        bind_if(out, tape, [na, nb, sa, sb](const Tensor& g, Accum& acc) {
            if (na >= 0)
                acc.add(na, reduce_to(g, sa));
            if (nb >= 0)
                acc.add(nb, reduce_to(g, sb));
        });
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b)
{
    BinPlan plan = plan_binary(a, b);
    Tensor out = ew_forward(a, b, plan, [](double x, double y) { return x - y; });
    if (Tape* tape = common_tape(a, b)) {
        int na = a.tracked() ? a.node() : -1;
        int nb = b.tracked() ? b.node() : -1;
        Shape sa = a.shape(), sb = b.shape();
        bind_if(out, tape, [na, nb, sa, sb](const Tensor& g, Accum& acc) {
            if (na >= 0)
                acc.add(na, reduce_to(g, sa));
            if (nb >= 0) {
                Tensor gn = unary_forward(g, [](double v) { return -v; });
                acc.add(nb, reduce_to(gn, sb));
            }
        });
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b)
{
    BinPlan plan = plan_binary(a, b);
    Tensor out = ew_forward(a, b, plan, [](double x, double y) { return x * y; });
    if (Tape* tape = common_tape(a, b)) {
        int na = a.tracked() ? a.node() : -1;
        int nb = b.tracked() ? b.node() : -1;
        Tensor ad = detached(a), bd = detached(b);
        bind_if(out, tape, [na, nb, ad, bd](const Tensor& g, Accum& acc) {
            if (na >= 0)
                acc.add(na, reduce_to(mul_raw(g, bd), ad.shape()));
            if (nb >= 0)
                acc.add(nb, reduce_to(mul_raw(g, ad), bd.shape()));
        });
    }
    return out;
}

Tensor div(const Tensor& a, const Tensor& b)
{
    for (double v : b.values())
        require(std::fabs(v) >= div_guard, Errc::numeric_guard_error,
                "divisor magnitude below " + std::to_string(div_guard));
    BinPlan plan = plan_binary(a, b);
    Tensor out = ew_forward(a, b, plan, [](double x, double y) { return x / y; });
    if (Tape* tape = common_tape(a, b)) {
        int na = a.tracked() ? a.node() : -1;
        int nb = b.tracked() ? b.node() : -1;
        Shape sa = a.shape();
        Tensor bd = detached(b), qd = detached(out);
        bind_if(out, tape, [na, nb, sa, bd, qd](const Tensor& g, Accum& acc) {
            BinPlan p = plan_binary(g, bd);
            Tensor gb = ew_forward(g, bd, p, [](double x, double y) { return x / y; });
            if (na >= 0)
                acc.add(na, reduce_to(gb, sa));
            if (nb >= 0) {
                // d(a/b)/db = -q/b with q the forward quotient.
                Tensor gq = mul_raw(gb, qd);
                Tensor gneg = unary_forward(gq, [](double v) { return -v; });
                acc.add(nb, reduce_to(gneg, bd.shape()));
            }
        });
    }
    return out;
}

Tensor neg(const Tensor& x)
{
    Tensor out = unary_forward(x, [](double v) { return -v; });
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        bind_if(out, tape, [nx](const Tensor& g, Accum& acc) {
            acc.add(nx, unary_forward(g, [](double v) { return -v; }));
        });
    }
    return out;
}

Tensor scale(const Tensor& x, double c)
{
    Tensor out = unary_forward(x, [c](double v) { return c * v; });
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        bind_if(out, tape, [nx, c](const Tensor& g, Accum& acc) {
            acc.add(nx, unary_forward(g, [c](double v) { return c * v; }));
        });
    }
    return out;
}

Tensor add_scalar(const Tensor& x, double c)
{
    Tensor out = unary_forward(x, [c](double v) { return v + c; });
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        bind_if(out, tape, [nx](const Tensor& g, Accum& acc) { acc.add(nx, detached(g)); });
    }
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b)
{
    require(a.rank() == 2 && b.rank() == 2, Errc::shape_error,
            "matmul expects rank-2 operands, got " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    const std::size_t m = a.shape()[0], k = a.shape()[1];
    require(b.shape()[0] == k, Errc::shape_error,
            "matmul inner extents differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    const std::size_t n = b.shape()[1];
    Tensor out = Tensor::uninit({m, n});
    kern::matmul_nn(a.values().data(), b.values().data(), out.values_mut().data(), m, k, n);
    if (Tape* tape = common_tape(a, b)) {
        int na = a.tracked() ? a.node() : -1;
        int nb = b.tracked() ? b.node() : -1;
        Tensor ad = detached(a), bd = detached(b);
        bind_if(out, tape, [na, nb, ad, bd, m, k, n](const Tensor& g, Accum& acc) {
            if (na >= 0) {
                Tensor ga = Tensor::uninit({m, k});
                kern::matmul_nt(g.values().data(), bd.values().data(), ga.values_mut().data(), m, n, k);
                acc.add(na, ga);
            }
            if (nb >= 0) {
                Tensor gb = Tensor::uninit({k, n});
                kern::matmul_tn(ad.values().data(), g.values().data(), gb.values_mut().data(), m, k, n);
                acc.add(nb, gb);
            }
        });
    }
    return out;
}

Tensor sum(const Tensor& x)
{
    Tensor out = Tensor::scalar(kern::reduce_sum(x.values().data(), x.size()));
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        Shape sx = x.shape();
        bind_if(out, tape, [nx, sx](const Tensor& g, Accum& acc) {
            acc.add(nx, Tensor::full(sx, g.item()));
        });
    }
    return out;
}

Tensor mean(const Tensor& x)
{
    require(x.size() > 0, Errc::contract_error, "mean of an empty tensor");
    const double n = static_cast<double>(x.size());
    Tensor out = Tensor::scalar(kern::reduce_sum(x.values().data(), x.size()) / n);
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        Shape sx = x.shape();
        bind_if(out, tape, [nx, sx, n](const Tensor& g, Accum& acc) {
            acc.add(nx, Tensor::full(sx, g.item() / n));
        });
    }
    return out;
}

Tensor stack(std::span<const Tensor> parts)
{
    require(!parts.empty(), Errc::contract_error, "stack of zero tensors");
    const Shape& s0 = parts[0].shape();
    for (const auto& p : parts)
        require(p.shape() == s0, Errc::shape_error, "stack parts must share a shape");
    const std::size_t inner = parts[0].size();
    Shape out_shape;
    out_shape.reserve(s0.size() + 1);
    out_shape.push_back(parts.size());
    out_shape.insert(out_shape.end(), s0.begin(), s0.end());
    Tensor out = Tensor::uninit(out_shape);
    double* po = out.values_mut().data();
    for (std::size_t i = 0; i < parts.size(); ++i)
        std::memcpy(po + i * inner, parts[i].values().data(), inner * sizeof(double));
    if (Tape* tape = common_tape(parts)) {
        std::vector<int> nodes(parts.size(), -1);
        for (std::size_t i = 0; i < parts.size(); ++i)
            if (parts[i].tracked())
                nodes[i] = parts[i].node();
        bind_if(out, tape, [nodes, inner, s0](const Tensor& g, Accum& acc) {
            const double* pg = g.values().data();
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                if (nodes[i] < 0)
                    continue;
                Tensor gi = Tensor::from(
                    s0, std::vector<double>(pg + i * inner, pg + (i + 1) * inner));
                acc.add(nodes[i], gi);
            }
        });
    }
    return out;
}

namespace {

struct AxisSplit {
    std::size_t outer, mid, inner;
};

AxisSplit split_at(const Shape& s, std::size_t axis)
{
    AxisSplit sp{1, s[axis], 1};
    for (std::size_t i = 0; i < axis; ++i)
        sp.outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i)
        sp.inner *= s[i];
    return sp;
}

} // namespace

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t len)
{
    require(axis < x.rank(), Errc::shape_error, "slice axis out of range");
    require(start + len <= x.shape()[axis], Errc::shape_error, "slice range out of bounds");
    AxisSplit sp = split_at(x.shape(), axis);
    Shape out_shape = x.shape();
    out_shape[axis] = len;
    Tensor out = Tensor::uninit(out_shape);
    const double* px = x.values().data();
    double* po = out.values_mut().data();
    for (std::size_t o = 0; o < sp.outer; ++o)
        std::memcpy(po + o * len * sp.inner,
                    px + (o * sp.mid + start) * sp.inner,
                    len * sp.inner * sizeof(double));
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        Shape sx = x.shape();
        bind_if(out, tape, [nx, sx, sp, start, len](const Tensor& g, Accum& acc) {
            Tensor gx = Tensor::zeros(sx);
            double* pg = gx.values_mut().data();
            const double* pi = g.values().data();
            for (std::size_t o = 0; o < sp.outer; ++o)
                std::memcpy(pg + (o * sp.mid + start) * sp.inner,
                            pi + o * len * sp.inner,
                            len * sp.inner * sizeof(double));
            acc.add(nx, gx);
        });
    }
    return out;
}

Tensor select(const Tensor& x, std::size_t axis, std::size_t index)
{
    require(axis < x.rank(), Errc::shape_error, "select axis out of range");
    require(index < x.shape()[axis], Errc::shape_error, "select index out of bounds");
    Tensor sl = slice(x, axis, index, 1);
    Shape out_shape;
    for (std::size_t i = 0; i < x.rank(); ++i)
        if (i != axis)
            out_shape.push_back(x.shape()[i]);
    return reshape(sl, out_shape);
}

Tensor reshape(const Tensor& x, Shape shape)
{
    require(shape_size(shape) == x.size(), Errc::shape_error,
            "reshape " + shape_str(x.shape()) + " -> " + shape_str(shape) + " changes size");
    Tensor out = Tensor::from(shape, std::vector<double>(x.values().begin(), x.values().end()));
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        Shape sx = x.shape();
        bind_if(out, tape, [nx, sx](const Tensor& g, Accum& acc) {
            acc.add(nx, Tensor::from(sx, std::vector<double>(g.values().begin(), g.values().end())));
        });
    }
    return out;
}

namespace {

Tensor transpose01_raw(const Tensor& x)
{
    const Shape& s = x.shape();
    const std::size_t d0 = s[0], d1 = s[1];
    std::size_t inner = 1;
    for (std::size_t i = 2; i < s.size(); ++i)
        inner *= s[i];
    Shape out_shape = s;
    std::swap(out_shape[0], out_shape[1]);
    Tensor out = Tensor::uninit(out_shape);
    const double* px = x.values().data();
    double* po = out.values_mut().data();
    for (std::size_t i = 0; i < d0; ++i)
        for (std::size_t j = 0; j < d1; ++j)
            std::memcpy(po + (j * d0 + i) * inner, px + (i * d1 + j) * inner, inner * sizeof(double));
    return out;
}

} // namespace

Tensor transpose01(const Tensor& x)
{
    require(x.rank() >= 2, Errc::shape_error, "transpose01 needs rank >= 2");
    Tensor out = transpose01_raw(x);
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        bind_if(out, tape, [nx](const Tensor& g, Accum& acc) {
            acc.add(nx, transpose01_raw(g));
        });
    }
    return out;
}

Tensor sigmoid(const Tensor& x)
{
    Tensor out = unary_forward(x, [](double v) {
        return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    });
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        Tensor sd = detached(out);
        bind_if(out, tape, [nx, sd](const Tensor& g, Accum& acc) {
            BinPlan p = plan_binary(g, sd);
            acc.add(nx, ew_forward(g, sd, p, [](double gv, double sv) { return gv * sv * (1.0 - sv); }));
        });
    }
    return out;
}

Tensor softplus(const Tensor& x)
{
    Tensor out = unary_forward(x, [](double v) {
        return std::fmax(v, 0.0) + std::log1p(std::exp(-std::fabs(v)));
    });
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        Tensor xd = detached(x);
        bind_if(out, tape, [nx, xd](const Tensor& g, Accum& acc) {
            BinPlan p = plan_binary(g, xd);
            acc.add(nx, ew_forward(g, xd, p, [](double gv, double xv) {
                double s = xv >= 0 ? 1.0 / (1.0 + std::exp(-xv)) : std::exp(xv) / (1.0 + std::exp(xv));
                return gv * s;
            }));
        });
    }
    return out;
}

Tensor tanh(const Tensor& x)
{
    Tensor out = unary_forward(x, [](double v) { return std::tanh(v); });
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        Tensor td = detached(out);
        bind_if(out, tape, [nx, td](const Tensor& g, Accum& acc) {
            BinPlan p = plan_binary(g, td);
            acc.add(nx, ew_forward(g, td, p, [](double gv, double tv) { return gv * (1.0 - tv * tv); }));
        });
    }
    return out;
}

Tensor relu(const Tensor& x)
{
    Tensor out = unary_forward(x, [](double v) { return v > 0 ? v : 0.0; });
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        Tensor xd = detached(x);
        bind_if(out, tape, [nx, xd](const Tensor& g, Accum& acc) {
            BinPlan p = plan_binary(g, xd);
            acc.add(nx, ew_forward(g, xd, p, [](double gv, double xv) { return xv > 0 ? gv : 0.0; }));
        });
    }
    return out;
}

Tensor clamp(const Tensor& x, double lo, double hi)
{
    require(lo <= hi, Errc::contract_error, "clamp lo > hi");
    Tensor out = unary_forward(x, [lo, hi](double v) { return std::clamp(v, lo, hi); });
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        Tensor xd = detached(x);
        bind_if(out, tape, [nx, xd, lo, hi](const Tensor& g, Accum& acc) {
            BinPlan p = plan_binary(g, xd);
            acc.add(nx, ew_forward(g, xd, p, [lo, hi](double gv, double xv) {
                return (xv > lo && xv < hi) ? gv : 0.0;
            }));
        });
    }
    return out;
}

Tensor minimum(const Tensor& a, const Tensor& b)
{
    BinPlan plan = plan_binary(a, b);
    Tensor out = ew_forward(a, b, plan, [](double x, double y) { return x <= y ? x : y; });
    if (Tape* tape = common_tape(a, b)) {
        int na = a.tracked() ? a.node() : -1;
        int nb = b.tracked() ? b.node() : -1;
        Tensor ad = detached(a), bd = detached(b);
        bind_if(out, tape, [na, nb, ad, bd](const Tensor& g, Accum& acc) {
            BinPlan p = plan_binary(ad, bd);
            Tensor mask = ew_forward(ad, bd, p, [](double x, double y) { return x <= y ? 1.0 : 0.0; });
            if (na >= 0)
                acc.add(na, reduce_to(mul_raw(g, mask), ad.shape()));
            if (nb >= 0) {
                Tensor inv = unary_forward(mask, [](double v) { return 1.0 - v; });
                acc.add(nb, reduce_to(mul_raw(g, inv), bd.shape()));
            }
        });
    }
    return out;
}

Tensor maximum(const Tensor& a, const Tensor& b)
{
    BinPlan plan = plan_binary(a, b);
    Tensor out = ew_forward(a, b, plan, [](double x, double y) { return x >= y ? x : y; });
    if (Tape* tape = common_tape(a, b)) {
        int na = a.tracked() ? a.node() : -1;
        int nb = b.tracked() ? b.node() : -1;
        Tensor ad = detached(a), bd = detached(b);
        bind_if(out, tape, [na, nb, ad, bd](const Tensor& g, Accum& acc) {
            BinPlan p = plan_binary(ad, bd);
            Tensor mask = ew_forward(ad, bd, p, [](double x, double y) { return x >= y ? 1.0 : 0.0; });
            if (na >= 0)
                acc.add(na, reduce_to(mul_raw(g, mask), ad.shape()));
            if (nb >= 0) {
                Tensor inv = unary_forward(mask, [](double v) { return 1.0 - v; });
                acc.add(nb, reduce_to(mul_raw(g, inv), bd.shape()));
            }
        });
    }
    return out;
}

Tensor sqrt(const Tensor& x)
{
    Tensor out = unary_forward(x, [](double v) { return std::sqrt(v); });
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        Tensor sd = detached(out);
        bind_if(out, tape, [nx, sd](const Tensor& g, Accum& acc) {
            BinPlan p = plan_binary(g, sd);
            acc.add(nx, ew_forward(g, sd, p, [](double gv, double sv) {
                return gv * 0.5 / std::fmax(sv, div_guard);
            }));
        });
    }
    return out;
}

Tensor square(const Tensor& x)
{
    Tensor out = unary_forward(x, [](double v) { return v * v; });
    if (Tape* tape = common_tape(x)) {
        int nx = x.node();
        Tensor xd = detached(x);
        bind_if(out, tape, [nx, xd](const Tensor& g, Accum& acc) {
            BinPlan p = plan_binary(g, xd);
            acc.add(nx, ew_forward(g, xd, p, [](double gv, double xv) { return gv * 2.0 * xv; }));
        });
    }
    return out;
}

} // namespace epitwin::ad
