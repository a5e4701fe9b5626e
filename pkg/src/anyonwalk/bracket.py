"""Kauffman bracket evaluation for braid closures at the Ising point.

Braid words live in the braid group B_r on ``strands`` strands.  A crossing
is a pair ``(pos, sign)`` with ``1 <= pos <= strands - 1``: the strand at
position ``pos`` crosses the strand at ``pos + 1``, over for ``sign = +1``
and under for ``sign = -1``.  Words are read left to right in application
order (earliest crossing first, i.e. bottom to top of the diagram).  The
link attached to a word is its Markov closure: top endpoint ``i`` is joined
to bottom endpoint ``i`` around the braid axis.

The raw bracket of a diagram is the Kauffman state sum

    <D>_raw = sum over smoothings of A^(#A - #B) * delta^(#loops),

where a positive crossing resolves into ``A * (identity smoothing)
+ A^(-1) * (cup-cap smoothing)`` and a closed loop contributes the loop
value ``delta = -A^2 - A^(-2)``.  The raw bracket is invariant under
regular isotopy (Reidemeister II and III) but not under kinks, so it is a
framed invariant; all callers here evaluate it on the specific diagram the
walk produces and never normalize the framing away.

Evaluation point.  Fusion traces of Ising anyons correspond to the bracket
at a primitive root with A^4 = -i (the variable of the associated Jones
polynomial is then t = A^(-4) = i).  There are four such fourth roots and
the literature convention A = exp(-i pi / 8) has loop value -sqrt(2),
which breaks the trace normalization trace = <L> / d^(strands - 1) with
the quantum dimension d = +sqrt(2): the identity word on an even number of
strands would get trace -1.  ``calibrate_root`` therefore selects, at
startup, the first candidate root whose loop value reproduces all three
calibration targets:

    * identity word on r strands -> trace 1       (r = 1, 2, 3)
    * Hopf word sigma_1^2        -> trace 0
    * quarter twist sigma_1^4    -> trace -i

The winner is A = exp(i 3 pi / 8) with loop value +sqrt(2) = d.  The
selected root is reported in run manifests.

Two interchangeable evaluation routes are provided and tested against each
other: an iterative Temperley-Lieb state sum over planar matchings
(production route, ``method="tl"``) and a literal skein recursion over
smoothing choices with union-find loop counting at the leaves (audit
route, ``method="skein"``).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import CalibrationError, GuardLimitError

__all__ = [
    "BraidWord",
    "BracketRoot",
    "QUANTUM_DIMENSION",
    "CANDIDATE_ROOTS",
    "SKEIN_CROSSING_GUARD",
    "TL_CROSSING_GUARD",
    "calibrate_root",
    "calibration_report",
    "kauffman_bracket",
    "markov_trace",
    "closure_components",
]

#: Quantum dimension of the Ising anyon; fixed by the fusion theory, not by
#: the choice of bracket root.
QUANTUM_DIMENSION = math.sqrt(2.0)

#: Fourth roots of -i, starting from the textbook choice exp(-i pi / 8).
CANDIDATE_ROOTS = tuple(
    cmath.exp(1j * (-math.pi / 8 + k * math.pi / 2)) for k in range(4)
)

SKEIN_CROSSING_GUARD = 24
TL_CROSSING_GUARD = 40

_CAL_TOL = 1e-10


@dataclass(frozen=True)
class BraidWord:
    """A word in the braid group B_strands.

    Attributes:
        strands: number of strands r >= 1.
        crossings: tuple of (position, sign) pairs, position in
            [1, strands - 1], sign in {+1, -1}, application order.
    """

    strands: int
    crossings: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.strands < 1:
            raise ValueError(f"strand count must be >= 1, got {self.strands}")
        for pos, sign in self.crossings:
            if not 1 <= pos <= self.strands - 1:
                raise ValueError(
                    f"crossing position {pos} outside [1, {self.strands - 1}]"
                )
            if sign not in (-1, 1):
                raise ValueError(f"crossing sign must be +-1, got {sign}")

    @property
    def writhe(self) -> int:
        return sum(sign for _, sign in self.crossings)

    def inverse(self) -> "BraidWord":
        return BraidWord(
            self.strands,
            tuple((pos, -sign) for pos, sign in reversed(self.crossings)),
        )

    def free_reduced(self) -> "BraidWord":
        """Cancel adjacent inverse crossings (Reidemeister II)."""
        stack: list[tuple[int, int]] = []
        for c in self.crossings:
            if stack and stack[-1][0] == c[0] and stack[-1][1] == -c[1]:
                stack.pop()
            else:
                stack.append(c)
        return BraidWord(self.strands, tuple(stack))

    def reduced_for_closure(self) -> "BraidWord":
        """Free reduction plus cyclic cancellation.

        Valid when only the Markov closure of the word matters: rotating
        the word around the braid axis is a planar isotopy of the closure,
        so leading/trailing inverse pairs cancel as well.
        """
        word = self.free_reduced()
        cs = list(word.crossings)
        while len(cs) >= 2 and cs[0][0] == cs[-1][0] and cs[0][1] == -cs[-1][1]:
            cs = cs[1:-1]
            # interior may now expose new adjacent inverses at the seam
            stack: list[tuple[int, int]] = []
            for c in cs:
                if stack and stack[-1][0] == c[0] and stack[-1][1] == -c[1]:
                    stack.pop()
                else:
                    stack.append(c)
            cs = stack
        return BraidWord(self.strands, tuple(cs))

    def permutation(self) -> tuple[int, ...]:
        """perm[i] = final position of the strand starting at position i (0-based)."""
        perm = list(range(self.strands))
        # position -> strand occupying it
        occupant = list(range(self.strands))
        for pos, _ in self.crossings:
            a = pos - 1
            occupant[a], occupant[a + 1] = occupant[a + 1], occupant[a]
        for final_pos, strand in enumerate(occupant):
            perm[strand] = final_pos
        return tuple(perm)


@dataclass(frozen=True)
class BracketRoot:
    """A bracket evaluation point: the variable A and its loop value."""

    a: complex
    loop: float


def _loop_value(a: complex) -> float:
    v = -(a * a) - 1.0 / (a * a)
    assert abs(v.imag) < 1e-12, "loop value of a fourth root of -i must be real"
    return v.real


def _identity_match(r: int) -> tuple[int, ...]:
    # points 0..r-1 are the bottom boundary, r..2r-1 the open top boundary
    return tuple(list(range(r, 2 * r)) + list(range(r)))


def _stack_cup(match: tuple[int, ...], a: int, r: int) -> tuple[tuple[int, ...], int]:
    """Stack the cup-cap tangle e_(a+1) on top of a planar matching.

    Returns the new matching and the number of loops closed (0 or 1).
    """
    ta, tb = r + a, r + a + 1
    pa, pb = match[ta], match[tb]
    m = list(match)
    loops = 0
    if pa == tb:
        loops = 1
    else:
        m[pa] = pb
        m[pb] = pa
    m[ta] = tb
    m[tb] = ta
    return tuple(m), loops


def _closure_loops(match: tuple[int, ...], r: int) -> int:
    seen = [False] * (2 * r)
    loops = 0
    for start in range(2 * r):
        if seen[start]:
            continue
        loops += 1
        x = start
        while not seen[x]:
            seen[x] = True
            y = match[x]
            seen[y] = True
            x = y + r if y < r else y - r
    return loops


def _tl_bracket_raw(word: BraidWord, root: BracketRoot) -> complex:
    """Temperley-Lieb state sum: evolve a sparse combination of matchings."""
    a_val = root.a
    a_inv = 1.0 / a_val
    delta = root.loop
    r = word.strands
    states: dict[tuple[int, ...], complex] = {_identity_match(r): 1.0 + 0.0j}
    for pos, sign in word.crossings:
        c_id = a_val if sign > 0 else a_inv
        c_e = a_inv if sign > 0 else a_val
        new: dict[tuple[int, ...], complex] = {}
        for match, coeff in states.items():
            new[match] = new.get(match, 0j) + coeff * c_id
            em, closed = _stack_cup(match, pos - 1, r)
            add = coeff * c_e * (delta if closed else 1.0)
            new[em] = new.get(em, 0j) + add
        states = new
    total = 0j
    for match, coeff in states.items():
        total += coeff * delta ** _closure_loops(match, r)
    return total


def _skein_bracket_raw(word: BraidWord, root: BracketRoot) -> complex:
    """Audit route: recursion over smoothing choices of each crossing.

    Arc bookkeeping is deliberately independent of the TL route: arcs get
    integer ids (bottom strands 0..r-1, the cap of crossing i gets id r+i)
    and loop counting happens at each leaf as the cyclomatic number of the
    join graph, via union-find.
    """
    a_val = root.a
    a_inv = 1.0 / a_val
    delta = root.loop
    r = word.strands
    crossings = word.crossings
    n_nodes = r + len(crossings)

    def leaf(front: tuple[int, ...], pairs: tuple[tuple[int, int], ...]) -> float:
        parent = list(range(n_nodes))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        loops = 0
        closure = tuple((front[j], j) for j in range(r))
        for x, y in pairs + closure:
            rx, ry = find(x), find(y)
            if rx == ry:
                loops += 1
            else:
                parent[rx] = ry
        return delta**loops

    def go(i: int, front: tuple[int, ...], pairs: tuple[tuple[int, int], ...]) -> complex:
        if i == len(crossings):
            return complex(leaf(front, pairs))
        pos, sign = crossings[i]
        a = pos - 1
        value = (a_val if sign > 0 else a_inv) * go(i + 1, front, pairs)
        cap = r + i
        front_b = front[:a] + (cap, cap) + front[a + 2 :]
        pairs_b = pairs + ((front[a], front[a + 1]),)
        value += (a_inv if sign > 0 else a_val) * go(i + 1, front_b, pairs_b)
        return value

    return go(0, tuple(range(r)), ())


_ROUTES = {"tl": _tl_bracket_raw, "skein": _skein_bracket_raw}
_GUARDS = {"tl": TL_CROSSING_GUARD, "skein": SKEIN_CROSSING_GUARD}

# calibration results keyed by the candidate tuple actually used, so a
# monkeypatched candidate list never sees a stale cache entry
_CALIBRATION_CACHE: dict[tuple[complex, ...], tuple[BracketRoot, tuple]] = {}


def _calibration_checks(root: BracketRoot) -> tuple[tuple[str, complex, complex], ...]:
    """(name, value, target) triples for the calibration targets."""
    d = QUANTUM_DIMENSION
    checks = []
    for r in (1, 2, 3):
        raw = _tl_bracket_raw(BraidWord(r, ()), root)
        value = raw / root.loop / d ** (r - 1)
        checks.append((f"identity-{r}-strands", value, 1.0 + 0j))
    hopf = BraidWord(2, ((1, 1), (1, 1)))
    raw = _tl_bracket_raw(hopf, root)
    checks.append(("hopf", raw / root.loop / d, 0j))
    quarter = BraidWord(2, ((1, 1),) * 4)
    raw = _tl_bracket_raw(quarter, root)
    checks.append(("quarter-twist", raw / root.loop / d, -1j))
    return tuple(checks)


def calibrate_root() -> BracketRoot:
    """Select the bracket root passing all calibration targets.

    Candidates are tried in the order of ``CANDIDATE_ROOTS``.  Raises
    ``CalibrationError`` with the per-candidate residuals if none passes.
    """
    key = CANDIDATE_ROOTS
    hit = _CALIBRATION_CACHE.get(key)
    if hit is not None:
        return hit[0]
    residuals = {}
    for a in key:
        root = BracketRoot(a, _loop_value(a))
        checks = _calibration_checks(root)
        worst = max(abs(value - target) for _, value, target in checks)
        residuals[repr(a)] = worst
        if worst <= _CAL_TOL:
            _CALIBRATION_CACHE[key] = (root, checks)
            return root
    raise CalibrationError(
        "no candidate bracket root passed calibration", diagnostics=residuals
    )


def calibration_report() -> dict:
    """Manifest-ready description of the calibrated root and its checks."""
    root = calibrate_root()
    _, checks = _CALIBRATION_CACHE[CANDIDATE_ROOTS]
    return {
        "root": {"re": root.a.real, "im": root.a.imag},
        "loop_value": root.loop,
        "quantum_dimension": QUANTUM_DIMENSION,
        "checks": [
            {
                "name": name,
                "value": {"re": value.real, "im": value.imag},
                "target": {"re": target.real, "im": target.imag},
                "residual": abs(value - target),
            }
            for name, value, target in checks
        ],
    }


def kauffman_bracket(
    word: BraidWord, method: str = "tl", root: BracketRoot | None = None
) -> complex:
    """Bracket of the Markov closure, normalized so <unknot> = 1.

    The word is freely and cyclically reduced first; both moves are regular
    isotopies of the closure, so the value is unchanged while the crossing
    guard applies to the reduced word.

    Args:
        word: braid word whose closure is evaluated.
        method: "tl" (state sum, default) or "skein" (audit recursion).
        root: evaluation point; defaults to the calibrated root.

    Raises:
        GuardLimitError: reduced crossing count exceeds the route's guard.
    """
    if method not in _ROUTES:
        raise ValueError(f"unknown bracket method {method!r}")
    if root is None:
        root = calibrate_root()
    reduced = word.reduced_for_closure()
    guard = _GUARDS[method]
    if len(reduced.crossings) > guard:
        raise GuardLimitError(
            f"{len(reduced.crossings)} crossings after reduction exceeds the "
            f"{method} guard of {guard}"
        )
    raw = _ROUTES[method](reduced, root)
    return raw / root.loop


def markov_trace(
    word: BraidWord, method: str = "tl", root: BracketRoot | None = None
) -> complex:
    """Normalized Markov trace <L> / d^(strands - 1) of the closure.

    This is the fusion-trace normalization: the identity word on any number
    of strands gets trace exactly 1 at the calibrated root.
    """
    value = kauffman_bracket(word, method=method, root=root)
    return value / QUANTUM_DIMENSION ** (word.strands - 1)


def closure_components(word: BraidWord) -> int:
    """Number of components of the Markov closure of the word."""
    perm = word.permutation()
    seen = [False] * word.strands
    cycles = 0
    for i in range(word.strands):
        if seen[i]:
            continue
        cycles += 1
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
    return cycles
