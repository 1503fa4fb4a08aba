#pragma once

#include <vector>

#include "cemb/graph.hpp"
#include "cemb/rng.hpp"

namespace cemb {

// Differentiable ops over Graph nodes. Each op validates shapes, checks the
// result for NaN/Inf (NumericalError), and registers its gradient rule.
// Binary elementwise ops broadcast a scalar {1} or a row vector [c] against
// a matrix [r x c]; gradients are reduced back over the broadcast extents.

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);

Var abs(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);  // DomainError unless all inputs are > 0
Var tanh(const Var& a);
Var gelu(const Var& a);  // exact erf form
Var clamp_min(const Var& a, double lo);

Var concat(const std::vector<Var>& parts);      // along the last axis
Var stack_rows(const std::vector<Var>& rows);   // rank-1 rows -> rank-2
Var gather_rows(const Var& a, std::vector<int> indices);

Var mean(const Var& a, int axis);
Var sum(const Var& a);  // all elements -> scalar
Var dot(const Var& a, const Var& b);
Var l2_normalize(const Var& a);  // along the last axis; DomainError on zero norm

Var softmax(const Var& a, double temperature);  // last axis, max-subtracted
Var logsumexp(const Var& a);                    // rank-1 -> scalar, max-subtracted

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
Var dropout(const Var& a, double rate, Rng& rng, bool train_mode);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(const Var& a, double c) { return scale(a, c); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

}  // namespace cemb
