"""Gauss sums of quadratic forms over GF(2) and their Z4 refinements.

The island-averaged Ising trace needs two exact exponential sums over
binary occupation parities m in {0,1}^n:

* the sign coefficient T = 2^(-n) S(Q) with S(Q) = sum of (-1)^Q(m),
  Q(m) = sum_(i<j) tau_ij m_i m_j purely off-diagonal over GF(2);
* the full averaged trace 2^(-n) S(q) with a Z4-valued refinement
  q(m) = sum_i c_i m_i + 2 Q(m) (mod 4) and S(q) = sum of i^q(m), where
  the linear coefficients c_i carry the quarter phases (-i)^(l_i / 2) of
  islands whose linking numbers survive the parity average.

S(Q) is 0 or +-2^(n-h) with 2h the rank of the associated alternating
bilinear form; the sign is the Arf invariant of the nondegenerate part and
can be negative even without linear terms (the complete graph on four
variables gives S = -4), so the fast evaluator below runs the full
substitution algorithm instead of assuming a positive sum.  S(q) is always
a Gaussian integer (it is a finite sum of fourth roots of unity) and both
evaluators here keep it exact: brute force over all 2^n assignments
(vectorized, guarded) and the substitution algorithm, which repeatedly
isolates a hyperbolic pair x_i x_j by invertible changes of variables
x_a -> x_a + x_b and multiplies out its closed 2x2 factor, finishing on
decoupled variables whose local factors are 1 + i^c.
"""

from __future__ import annotations

import numpy as np

from .errors import GuardLimitError

__all__ = [
    "canonical_terms",
    "brute_force_gauss_sum",
    "quadratic_gauss_sum",
    "brute_force_z4_sum",
    "z4_gauss_sum",
]

BRUTE_FORCE_GUARD = 20


def canonical_terms(terms) -> frozenset[tuple[int, int]]:
    """Reduce a term multiset mod 2 and normalize index order."""
    out: set[tuple[int, int]] = set()
    for i, j in terms:
        if i == j:
            raise ValueError("diagonal terms are not allowed (x^2 = x is linear)")
        key = (min(i, j), max(i, j))
        if key[0] < 0:
            raise ValueError(f"negative variable index in term {key}")
        out.symmetric_difference_update({key})
    return frozenset(out)


def brute_force_gauss_sum(n: int, terms) -> int:
    """S(Q) by direct summation over all 2^n assignments."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > BRUTE_FORCE_GUARD:
        raise GuardLimitError(f"brute force limited to n <= {BRUTE_FORCE_GUARD}, got {n}")
    cleaned = canonical_terms(terms)
    if any(j >= n for _, j in cleaned):
        raise ValueError("term index out of range")
    idx = np.arange(1 << n, dtype=np.uint32)
    q = np.zeros(1 << n, dtype=np.uint8)
    for i, j in cleaned:
        q ^= ((idx >> i) & (idx >> j) & 1).astype(np.uint8)
    return (1 << n) - 2 * int(q.sum())


def quadratic_gauss_sum(n: int, terms) -> int:
    """S(Q) by hyperbolic-pair extraction; exact for any n."""
    if n < 0:
        raise ValueError("n must be >= 0")
    cleaned = canonical_terms(terms)
    if any(j >= n for _, j in cleaned):
        raise ValueError("term index out of range")
    adj = [0] * n
    for i, j in cleaned:
        adj[i] |= 1 << j
        adj[j] |= 1 << i
    linear = 0
    active = (1 << n) - 1
    sign = 1
    exp2 = 0

    def subst(a: int, b: int) -> None:
        """Replace x_a by x_a + x_b everywhere (invertible)."""
        nonlocal linear
        row = adj[a]
        if (row >> b) & 1:
            # x_a x_b -> x_a x_b + x_b since x_b^2 = x_b
            linear ^= 1 << b
        others = row & ~(1 << b)
        m = others
        while m:
            k = (m & -m).bit_length() - 1
            m &= m - 1
            adj[b] ^= 1 << k
            adj[k] ^= 1 << b
        if (linear >> a) & 1:
            linear ^= 1 << b

    while True:
        pivot = -1
        for i in range(n):
            if (active >> i) & 1 and adj[i]:
                pivot = i
                break
        if pivot < 0:
            break
        i = pivot
        j = (adj[i] & -adj[i]).bit_length() - 1
        # leave x_i paired with x_j only
        others = adj[i] & ~(1 << j)
        m = others
        while m:
            k = (m & -m).bit_length() - 1
            m &= m - 1
            subst(j, k)
        assert adj[i] == 1 << j
        others = adj[j] & ~(1 << i)
        m = others
        while m:
            k = (m & -m).bit_length() - 1
            m &= m - 1
            subst(i, k)
        assert adj[j] == 1 << i
        # sum out the hyperbolic pair: 2 * (-1)^(alpha beta)
        if (linear >> i) & 1 and (linear >> j) & 1:
            sign = -sign
        exp2 += 1
        adj[i] = adj[j] = 0
        linear &= ~((1 << i) | (1 << j))
        active &= ~((1 << i) | (1 << j))

    if linear & active:
        return 0
    return sign * (1 << (exp2 + bin(active).count("1")))


def _check_z4_inputs(n: int, linear) -> tuple[list[int], int]:
    if n < 0:
        raise ValueError("n must be >= 0")
    lin = [int(c) % 4 for c in linear]
    if len(lin) != n:
        raise ValueError(f"need exactly {n} linear coefficients, got {len(lin)}")
    return lin, n


def brute_force_z4_sum(n: int, linear, terms) -> complex:
    """S(q) = sum over {0,1}^n of i^(L + 2Q) by direct summation."""
    lin, n = _check_z4_inputs(n, linear)
    if n > BRUTE_FORCE_GUARD:
        raise GuardLimitError(f"brute force limited to n <= {BRUTE_FORCE_GUARD}, got {n}")
    cleaned = canonical_terms(terms)
    if any(j >= n for _, j in cleaned):
        raise ValueError("term index out of range")
    idx = np.arange(1 << n, dtype=np.uint32)
    q = np.zeros(1 << n, dtype=np.uint8)
    for i, c in enumerate(lin):
        q += (c * ((idx >> i) & 1)).astype(np.uint8)
    for i, j in cleaned:
        q += (2 * ((idx >> i) & (idx >> j) & 1)).astype(np.uint8)
    counts = np.bincount(q & 3, minlength=4)
    return complex(int(counts[0]) - int(counts[2]), int(counts[1]) - int(counts[3]))


def z4_gauss_sum(n: int, linear, terms) -> complex:
    """S(q) by variable retirement and hyperbolic-pair extraction.

    Exact for any n; the value is built as a product of Gaussian-integer
    factors.  Substituting x_a -> x_a + x_b acts on the Z4 form with one
    twist absent over GF(2): an odd linear coefficient c_a produces
    -2 c_a x_a x_b, toggling the coupling of the substituted pair.  The
    twist is an asset, not a hazard, if odd-linear variables go first:
    substituting such a variable against each of its neighbours strips all
    its couplings (c x + 2 x y = c (x + y) - c y mod 4), so it retires
    with local factor 1 +- i.  Once every coupled variable has an even
    coefficient the twist is dormant and plain GF(2)-style isolation sums
    out hyperbolic pairs (factors +-2); leftover decoupled variables
    contribute 1 + i^c, where c = 2 annihilates the whole sum.
    """
    lin, n = _check_z4_inputs(n, linear)
    cleaned = canonical_terms(terms)
    if any(j >= n for _, j in cleaned):
        raise ValueError("term index out of range")
    adj = [0] * n
    for i, j in cleaned:
        adj[i] |= 1 << j
        adj[j] |= 1 << i
    active = (1 << n) - 1
    fac_re, fac_im = 1, 0
    exp2 = 0

    def mul_factor(re: int, im: int) -> None:
        nonlocal fac_re, fac_im
        fac_re, fac_im = fac_re * re - fac_im * im, fac_re * im + fac_im * re

    def subst(a: int, b: int) -> None:
        """Replace x_a by x_a + x_b everywhere (invertible)."""
        row = adj[a]
        if (row >> b) & 1:
            # x_a x_b -> x_a x_b + x_b since x_b^2 = x_b
            lin[b] = (lin[b] + 2) % 4
        m = row & ~(1 << b)
        while m:
            k = (m & -m).bit_length() - 1
            m &= m - 1
            adj[b] ^= 1 << k
            adj[k] ^= 1 << b
        if lin[a] % 2:
            # c_a x_a -> c_a x_a + c_a x_b - 2 c_a x_a x_b
            adj[a] ^= 1 << b
            adj[b] ^= 1 << a
        lin[b] = (lin[b] + lin[a]) % 4

    # retire coupled variables with odd linear coefficient
    progress = True
    while progress:
        progress = False
        for a in range(n):
            if not ((active >> a) & 1) or lin[a] % 2 == 0 or not adj[a]:
                continue
            m = adj[a]
            while m:
                k = (m & -m).bit_length() - 1
                m &= m - 1
                subst(a, k)
            assert adj[a] == 0
            mul_factor(*((1, 1) if lin[a] == 1 else (1, -1)))
            active &= ~(1 << a)
            progress = True

    # isolate and sum out hyperbolic pairs (all couplings now even-linear)
    while True:
        pivot = -1
        for i in range(n):
            if (active >> i) & 1 and adj[i]:
                pivot = i
                break
        if pivot < 0:
            break
        i = pivot
        j = (adj[i] & -adj[i]).bit_length() - 1
        # leave x_i paired with x_j only
        m = adj[i] & ~(1 << j)
        while m:
            k = (m & -m).bit_length() - 1
            m &= m - 1
            subst(j, k)
        assert adj[i] == 1 << j and lin[i] % 2 == 0
        m = adj[j] & ~(1 << i)
        while m:
            k = (m & -m).bit_length() - 1
            m &= m - 1
            subst(i, k)
        assert adj[j] == 1 << i and lin[j] % 2 == 0
        # sum out the pair: 1 + i^ci + i^cj + i^(ci + cj + 2) = +-2
        mul_factor(-2 if lin[i] == 2 and lin[j] == 2 else 2, 0)
        adj[i] = adj[j] = 0
        active &= ~((1 << i) | (1 << j))

    m = active
    while m:
        k = (m & -m).bit_length() - 1
        m &= m - 1
        c = lin[k]
        if c == 2:
            return 0j
        if c == 0:
            exp2 += 1
        else:
            mul_factor(*((1, 1) if c == 1 else (1, -1)))
    return complex(fac_re * (1 << exp2), fac_im * (1 << exp2))
