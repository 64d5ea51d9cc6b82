#pragma once

#include "epitwin/ad/tensor.hpp"

namespace epitwin::ad {

/// Divisors with magnitude below this raise NUMERIC_GUARD_ERROR. The
/// DSL's mandatory max(d, 1e-8) guard keeps verified models clear of it.
inline constexpr double div_guard = 1e-12;

/// Elementwise ops accept equal shapes, a size-1 operand against
/// anything, or equal-rank shapes where one operand has extent 1 on
/// axis 0 (broadcast along the leading axis only). Results are
/// recorded on the operands' tape when any operand is tracked.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& x);
Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);

/// 2-D only: (m x k) * (k x n).
Tensor matmul(const Tensor& a, const Tensor& b);

/// Full reductions to a rank-0 scalar.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Stack equal-shaped parts along a new leading axis.
Tensor stack(std::span<const Tensor> parts);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t len);
/// Remove `axis` at position `index`.
Tensor select(const Tensor& x, std::size_t axis, std::size_t index);
Tensor reshape(const Tensor& x, Shape shape);
/// Swap the two leading axes (rank >= 2).
Tensor transpose01(const Tensor& x);

Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor tanh(const Tensor& x);
/// Subgradient 0 at x == 0.
Tensor relu(const Tensor& x);
/// Local gradient 1 strictly inside (lo, hi), 0 at and outside the bounds.
Tensor clamp(const Tensor& x, double lo, double hi);
/// Ties route the gradient to the first argument.
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);
/// Domain x >= 0; backward floors the denominator at div_guard.
Tensor sqrt(const Tensor& x);
Tensor square(const Tensor& x);

/// Same buffer and shape, not tracked. Backward closures capture
/// detached operands so replay never re-records on the tape.
Tensor detached(const Tensor& x);

} // namespace epitwin::ad
