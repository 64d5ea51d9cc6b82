#pragma once

// Seeded generator of random tracked computation graphs plus a central
// finite-difference oracle. Used by the unit suite and the acceptance
// suite; independent of the tape's backward implementation.

#include "epitwin/ad/ops.hpp"
#include "epitwin/ad/tensor.hpp"
#include "epitwin/util/rng.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace epitwin::testsupport {

struct GraphProgram {
    struct Step {
        int kind;        // index into the op table
        int a = -1;      // operand slots
        int b = -1;
        int c = -1;
        double p0 = 0.0; // op parameters (scale factor, clamp bounds, slice start...)
        double p1 = 0.0;
    };
    std::vector<ad::Shape> leaf_shapes;
    std::vector<std::vector<double>> leaf_values;
    std::vector<Step> steps;
};

namespace detail {

inline ad::Tensor apply_step(const GraphProgram::Step& s, const std::vector<ad::Tensor>& nodes)
{
    using namespace ad;
    const Tensor& a = nodes[static_cast<std::size_t>(s.a)];
    switch (s.kind) {
    case 0: return add(a, nodes[static_cast<std::size_t>(s.b)]);
    case 1: return sub(a, nodes[static_cast<std::size_t>(s.b)]);
    case 2: return mul(a, nodes[static_cast<std::size_t>(s.b)]);
    case 3: // guarded division: denominator bounded away from zero and smooth
        return div(a, add_scalar(square(nodes[static_cast<std::size_t>(s.b)]), 1.0));
    case 4: return sigmoid(a);
    case 5: return softplus(a);
    case 6: return tanh(a);
    case 7: return relu(add_scalar(a, s.p0));
    case 8: return clamp(a, s.p0, s.p1);
    case 9: return sqrt(add_scalar(square(a), 1.0));
    case 10: return square(a);
    case 11: return neg(a);
    case 12: return scale(a, s.p0);
    case 13: return minimum(a, nodes[static_cast<std::size_t>(s.b)]);
    case 14: return maximum(a, nodes[static_cast<std::size_t>(s.b)]);
    case 15: return add_scalar(a, s.p0);
    case 16: return mul(a, sigmoid(nodes[static_cast<std::size_t>(s.b)]));
    default: return a;
    }
}

} // namespace detail

/// Evaluate the program to its scalar root. When `tape` is non-null the
/// leaves are registered as tracked variables and returned via `leaves`.
inline ad::Tensor eval_graph(const GraphProgram& prog,
                             const std::vector<std::vector<double>>& leaf_values,
                             ad::Tape* tape,
                             std::vector<ad::Tensor>* leaves_out = nullptr)
{
    using namespace ad;
    std::vector<Tensor> nodes;
    nodes.reserve(prog.leaf_shapes.size() + prog.steps.size());
    for (std::size_t i = 0; i < prog.leaf_shapes.size(); ++i) {
        Tensor v = Tensor::from(prog.leaf_shapes[i], leaf_values[i]);
        if (tape) {
            Tensor leaf = tape->var(v);
            if (leaves_out)
                leaves_out->push_back(leaf);
            nodes.push_back(leaf);
        } else {
            nodes.push_back(v);
        }
    }
    for (const auto& s : prog.steps)
        nodes.push_back(detail::apply_step(s, nodes));
    return mean(nodes.back());
}

/// Sample a program whose tensors have at most `max_elems` elements.
inline GraphProgram sample_graph(Rng& rng, std::size_t max_elems = 16)
{
    GraphProgram prog;
    const std::size_t n_leaves = 1 + rng.below(3);
    for (std::size_t i = 0; i < n_leaves; ++i) {
        ad::Shape shape;
        switch (rng.below(3)) {
        case 0: shape = {}; break;
        case 1: shape = {1 + rng.below(max_elems)}; break;
        default: {
            std::size_t r = 1 + rng.below(4);
            std::size_t c = 1 + rng.below(max_elems / r);
            shape = {r, c};
            break;
        }
        }
        std::vector<double> vals(ad::shape_size(shape));
        for (auto& v : vals)
            v = rng.uniform(-2.0, 2.0);
        prog.leaf_shapes.push_back(shape);
        prog.leaf_values.push_back(std::move(vals));
    }

    // Track node shapes so binary ops pick conforming operands.
    std::vector<ad::Shape> shapes = prog.leaf_shapes;
    const std::size_t n_steps = 3 + rng.below(8);
    for (std::size_t i = 0; i < n_steps; ++i) {
        GraphProgram::Step s;
        s.kind = static_cast<int>(rng.below(17));
        s.a = static_cast<int>(rng.below(shapes.size()));
        const ad::Shape& sa = shapes[static_cast<std::size_t>(s.a)];
        bool needs_b = s.kind <= 3 || s.kind == 13 || s.kind == 14 || s.kind == 16;
        if (needs_b) {
            // Prefer an equal-shaped operand; fall back to a scalar.
            std::vector<int> candidates;
            for (std::size_t j = 0; j < shapes.size(); ++j)
                if (shapes[j] == sa || ad::shape_size(shapes[j]) == 1)
                    candidates.push_back(static_cast<int>(j));
            s.b = candidates[rng.below(candidates.size())];
        }
        if (s.kind == 7)
            s.p0 = rng.uniform(-0.5, 0.5);
        if (s.kind == 8) {
            s.p0 = rng.uniform(-1.5, 0.0);
            s.p1 = s.p0 + rng.uniform(0.5, 2.0);
        }
        if (s.kind == 12)
            s.p0 = rng.uniform(-3.0, 3.0);
        if (s.kind == 15)
            s.p0 = rng.uniform(-1.0, 1.0);
        // Result shape: broadcast of operands.
        ad::Shape out = sa;
        if (needs_b) {
            const ad::Shape& sb = shapes[static_cast<std::size_t>(s.b)];
            out = ad::shape_size(sa) >= ad::shape_size(sb) ? sa : sb;
        }
        shapes.push_back(out);
        prog.steps.push_back(s);
    }
    return prog;
}

struct FdCheck {
    bool ok = true;
    double worst_rel = 0.0;
    std::string detail;
};

/// Central finite differences with h, compared against tape gradients
/// at rel_tol (abs_tol near zero).
inline FdCheck check_gradients_fd(const GraphProgram& prog,
                                  double h = 1e-5,
                                  double rel_tol = 1e-5,
                                  double abs_tol = 1e-7)
{
    using namespace ad;
    FdCheck res;
    Tape tape;
    std::vector<Tensor> leaves;
    Tensor root = eval_graph(prog, prog.leaf_values, &tape, &leaves);
    Gradients grads = tape.backward(root);

    for (std::size_t li = 0; li < leaves.size(); ++li) {
        const Tensor& g = grads.at(leaves[li]);
        for (std::size_t j = 0; j < g.size(); ++j) {
            auto perturbed = prog.leaf_values;
            perturbed[li][j] += h;
            double up = eval_graph(prog, perturbed, nullptr).item();
            perturbed[li][j] -= 2.0 * h;
            double down = eval_graph(prog, perturbed, nullptr).item();
            double fd = (up - down) / (2.0 * h);
            double got = g.at(j);
            double err = std::fabs(got - fd);
            double scale = std::fmax(std::fabs(fd), std::fabs(got));
            double rel = scale > 0 ? err / scale : 0.0;
            if (scale < 1e-4 ? err > abs_tol : rel > rel_tol) {
                res.ok = false;
                res.detail = "leaf " + std::to_string(li) + "[" + std::to_string(j) +
                             "]: tape " + std::to_string(got) + " vs fd " + std::to_string(fd);
                return res;
            }
            res.worst_rel = std::fmax(res.worst_rel, rel);
        }
    }
    return res;
}

} // namespace epitwin::testsupport
