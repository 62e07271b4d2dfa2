"""Exact higher-order partial derivatives via truncated Taylor (jet) arithmetic.

A :class:`Jet` is a multivariate Taylor polynomial truncated by per-group
total-degree caps.  Seeding chart coordinates ``x`` and fiber coordinates ``y``
as jet variables and evaluating a smooth scalar field on them yields every
mixed partial derivative up to the caps, exact to rounding for fields composed
of arithmetic, powers, sqrt, exp, log and trigonometric functions.

An independent central-difference engine with Richardson extrapolation
(:func:`fd_partial`) serves as the cross-validation oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "EvaluationError",
    "UnsupportedOrderError",
    "MultiOrder",
    "PartialTable",
    "JetAlgebra",
    "Jet",
    "algebra",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "tan",
    "taylor_eval",
    "fd_partial",
    "cross_check",
    "CrossCheckReport",
    "X_ORDER_CAP",
    "Y_ORDER_CAP",
]

# Highest derivative orders the toolkit ever requests: third y-derivatives of
# spray coefficients embed fifth y-derivatives of the squared norm mixed with
# one x-derivative.
X_ORDER_CAP = 1
Y_ORDER_CAP = 5


class DomainError(ValueError):
    """Evaluation requested outside a field's domain (e.g. at the zero fiber)."""


class UnsupportedOrderError(ValueError):
    """A requested derivative order exceeds the supported caps."""


class EvaluationError(ArithmeticError):
    """A field evaluation produced a non-finite intermediate value."""


@dataclass(frozen=True)
class MultiOrder:
    """A mixed partial-derivative request: orders per x- and per y-coordinate."""

    x_orders: tuple[int, ...]
    y_orders: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "x_orders", tuple(int(k) for k in self.x_orders))
        object.__setattr__(self, "y_orders", tuple(int(k) for k in self.y_orders))
        if any(k < 0 for k in self.x_orders + self.y_orders):
            raise UnsupportedOrderError("derivative orders must be nonnegative")
        if sum(self.x_orders) > X_ORDER_CAP:
            raise UnsupportedOrderError(
                f"total x-order {sum(self.x_orders)} exceeds cap {X_ORDER_CAP}"
            )
        if sum(self.y_orders) > Y_ORDER_CAP:
            raise UnsupportedOrderError(
                f"total y-order {sum(self.y_orders)} exceeds cap {Y_ORDER_CAP}"
            )

    @property
    def total(self) -> int:
        return sum(self.x_orders) + sum(self.y_orders)

    def __repr__(self):
        return f"MultiOrder(x={self.x_orders}, y={self.y_orders})"


@dataclass
class PartialTable:
    """Requested partial derivatives of one field at one (x, y) pair."""

    entries: dict[MultiOrder, float]
    method: str  # "jet" or "finite_difference"
    error_estimate: dict[MultiOrder, float] = field(default_factory=dict)

    def __getitem__(self, order: MultiOrder) -> float:
        return self.entries[order]


# ---------------------------------------------------------------------------
# Jet algebra


_ALGEBRA_CACHE: dict[tuple, "JetAlgebra"] = {}


def algebra(group_sizes, group_caps) -> "JetAlgebra":
    """Return the cached algebra for variable groups with total-degree caps."""
    key = (tuple(group_sizes), tuple(group_caps))
    alg = _ALGEBRA_CACHE.get(key)
    if alg is None:
        alg = JetAlgebra(group_sizes, group_caps)
        _ALGEBRA_CACHE[key] = alg
    return alg


def _group_monomials(size: int, cap: int):
    """All exponent tuples of length `size` with total degree <= cap."""
    if size == 0:
        return [()]
    out = []
    for total in range(cap + 1):
        for combo in itertools.combinations_with_replacement(range(size), total):
            e = [0] * size
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


class JetAlgebra:
    """Monomial basis and multiplication table for group-capped polynomials.

    Variables are grouped (e.g. x-coordinates and y-coordinates) and each
    group carries its own total-degree cap; a monomial is kept iff every
    group's partial degree respects that group's cap.  The truncated product
    is a sparse index-triple table evaluated with ``np.bincount``.
    """

    def __init__(self, group_sizes, group_caps):
        self.group_sizes = tuple(int(s) for s in group_sizes)
        self.group_caps = tuple(int(c) for c in group_caps)
        if len(self.group_sizes) != len(self.group_caps):
            raise ValueError("group_sizes and group_caps must have equal length")
        self.nvars = sum(self.group_sizes)
        self.max_total = sum(
            c for s, c in zip(self.group_sizes, self.group_caps) if s > 0
        )

        per_group = [
            _group_monomials(s, c) for s, c in zip(self.group_sizes, self.group_caps)
        ]
        monos = [sum(parts, ()) for parts in itertools.product(*per_group)]
        monos.sort(key=lambda e: (sum(e), e))
        self.monomials = monos
        self.size = len(monos)
        self.index = {e: i for i, e in enumerate(monos)}

        slices = []
        start = 0
        for s in self.group_sizes:
            slices.append(slice(start, start + s))
            start += s
        self.group_slices = slices

        ii, jj, kk = [], [], []
        degrees = [sum(e) for e in monos]
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                if degrees[i] + degrees[j] > self.max_total:
                    continue
                s = tuple(p + q for p, q in zip(a, b))
                k = self.index.get(s)
                if k is not None:
                    ii.append(i)
                    jj.append(j)
                    kk.append(k)
        self._mi = np.asarray(ii, dtype=np.intp)
        self._mj = np.asarray(jj, dtype=np.intp)
        self._mk = np.asarray(kk, dtype=np.intp)

        # factorial weight per monomial: coefficient -> partial derivative
        self._fact = np.array(
            [math.prod(math.factorial(k) for k in e) for e in monos], dtype=float
        )

    def constant(self, value: float) -> "Jet":
        c = np.zeros(self.size)
        c[0] = value
        return Jet(self, c)

    def variable(self, var_index: int, value: float) -> "Jet":
        c = np.zeros(self.size)
        c[0] = value
        e = [0] * self.nvars
        e[var_index] = 1
        c[self.index[tuple(e)]] = 1.0
        return Jet(self, c)

    def variables(self, values) -> list["Jet"]:
        return [self.variable(i, v) for i, v in enumerate(values)]


class Jet:
    """Element of a :class:`JetAlgebra`: a truncated Taylor polynomial."""

    __slots__ = ("alg", "c")

    def __init__(self, alg: JetAlgebra, coeffs: np.ndarray):
        self.alg = alg
        self.c = coeffs

    @property
    def value(self) -> float:
        return float(self.c[0])

    def partial(self, exponents) -> float:
        """Partial derivative with the given per-variable orders, at the base point."""
        idx = self.alg.index.get(tuple(int(k) for k in exponents))
        if idx is None:
            raise UnsupportedOrderError(f"orders {exponents} outside algebra caps")
        return float(self.c[idx] * self.alg._fact[idx])

    def formal_partial(self, var_index: int) -> "Jet":
        """Formal d/d(var): exact for coefficients of total degree < cap."""
        alg = self.alg
        out = np.zeros(alg.size)
        for i, e in enumerate(alg.monomials):
            k = e[var_index]
            if k == 0:
                continue
            lowered = list(e)
            lowered[var_index] -= 1
            out[alg.index[tuple(lowered)]] = k * self.c[i]
        return Jet(alg, out)

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.alg is not self.alg:
                raise ValueError("jets from different algebras")
            return other
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is not None:
            return Jet(self.alg, self.c + o.c)
        c = self.c.copy()
        c[0] += other
        return Jet(self.alg, c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.alg, -self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return Jet(self.alg, self.c * other)
        alg = self.alg
        prod = self.c[alg._mi] * o.c[alg._mj]
        return Jet(alg, np.bincount(alg._mk, weights=prod, minlength=alg.size))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return Jet(self.alg, self.c / other)
        return self * o._reciprocal()

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, int):
            if p == 0:
                return self.alg.constant(1.0)
            if p < 0:
                return self._reciprocal() ** (-p)
            out = self
            for _ in range(p - 1):
                out = out * self
            return out
        return self._compose_power(float(p))

    def __rpow__(self, base):
        if base <= 0:
            raise EvaluationError("jet exponent requires a positive base")
        return (self * math.log(base)).exp()

    # -- univariate composition ---------------------------------------------

    def _compose(self, derivs) -> "Jet":
        """Sum_k derivs[k]/k! * (self - value)^k by Horner's scheme."""
        alg = self.alg
        w = Jet(alg, self.c.copy())
        w.c[0] = 0.0
        d = len(derivs) - 1
        acc = alg.constant(derivs[d] / math.factorial(d))
        for k in range(d - 1, -1, -1):
            acc = acc * w + derivs[k] / math.factorial(k)
        return acc

    def _outer_orders(self) -> int:
        return self.alg.max_total

    def _reciprocal(self) -> "Jet":
        u0 = self.value
        if u0 == 0.0:
            raise EvaluationError("division by a jet with zero value")
        d = self._outer_orders()
        derivs = [(-1.0) ** k * math.factorial(k) / u0 ** (k + 1) for k in range(d + 1)]
        return self._compose(derivs)

    def _compose_power(self, p: float) -> "Jet":
        u0 = self.value
        if u0 <= 0.0:
            raise EvaluationError(f"jet power {p} requires a positive value, got {u0}")
        d = self._outer_orders()
        derivs = []
        coeff = 1.0
        for k in range(d + 1):
            derivs.append(coeff * u0 ** (p - k))
            coeff *= p - k
        return self._compose(derivs)

    def sqrt(self) -> "Jet":
        return self._compose_power(0.5)

    def exp(self) -> "Jet":
        e0 = math.exp(self.value)
        return self._compose([e0] * (self._outer_orders() + 1))

    def log(self) -> "Jet":
        u0 = self.value
        if u0 <= 0.0:
            raise EvaluationError(f"jet log requires a positive value, got {u0}")
        d = self._outer_orders()
        derivs = [math.log(u0)]
        derivs += [(-1.0) ** (k - 1) * math.factorial(k - 1) / u0**k for k in range(1, d + 1)]
        return self._compose(derivs)

    def sin(self) -> "Jet":
        u0 = self.value
        s, c = math.sin(u0), math.cos(u0)
        cycle = [s, c, -s, -c]
        d = self._outer_orders()
        return self._compose([cycle[k % 4] for k in range(d + 1)])

    def cos(self) -> "Jet":
        u0 = self.value
        s, c = math.sin(u0), math.cos(u0)
        cycle = [c, -s, -c, s]
        d = self._outer_orders()
        return self._compose([cycle[k % 4] for k in range(d + 1)])

    def tan(self) -> "Jet":
        return self.sin() / self.cos()

    def __repr__(self):
        terms = [
            f"{self.c[i]:+.6g}*{e}"
            for i, e in enumerate(self.alg.monomials)
            if self.c[i] != 0.0
        ]
        return "Jet(" + " ".join(terms[:8]) + (" ..." if len(terms) > 8 else "") + ")"


# Dispatch helpers so the same field closure runs on floats, numpy arrays and
# jets alike.


def sqrt(v):
    return v.sqrt() if isinstance(v, Jet) else np.sqrt(v)


def exp(v):
    return v.exp() if isinstance(v, Jet) else np.exp(v)


def log(v):
    return v.log() if isinstance(v, Jet) else np.log(v)


def sin(v):
    return v.sin() if isinstance(v, Jet) else np.sin(v)


def cos(v):
    return v.cos() if isinstance(v, Jet) else np.cos(v)


def tan(v):
    return v.tan() if isinstance(v, Jet) else np.tan(v)


# ---------------------------------------------------------------------------
# taylor_eval


def _check_fiber(fiber) -> None:
    arr = np.asarray(fiber, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("fiber vector has non-finite entries")
    if np.all(arr == 0.0):
        raise DomainError("derivative base point at the zero fiber is rejected")


def taylor_eval(field, base, fiber, orders) -> PartialTable:
    """Evaluate exact mixed partials of ``field(x, y)`` by jet arithmetic.

    Parameters
    ----------
    field : callable
        ``field(x, y) -> scalar`` where ``x`` and ``y`` are sequences whose
        entries support arithmetic (floats or jets).  Must be smooth at the
        evaluation point and composed of operations the jet algebra covers.
    base, fiber : sequences of float
        Chart point and (nonzero) fiber vector.
    orders : iterable of MultiOrder
        Requested derivatives; the union of active coordinates determines
        which variables are seeded.

    Returns
    -------
    PartialTable with method ``"jet"``; entries are exact up to rounding.
    """
    orders = list(orders)
    if not orders:
        raise ValueError("no derivative orders requested")
    base = [float(v) for v in base]
    fiber = [float(v) for v in fiber]
    _check_fiber(fiber)
    for o in orders:
        if len(o.x_orders) != len(base) or len(o.y_orders) != len(fiber):
            raise ValueError(f"order {o} does not match point dimensions")

    x_cap = max(sum(o.x_orders) for o in orders)
    y_cap = max(sum(o.y_orders) for o in orders)
    active_x = sorted({i for o in orders for i, k in enumerate(o.x_orders) if k})
    active_y = sorted({i for o in orders for i, k in enumerate(o.y_orders) if k})

    alg = algebra((len(active_x), len(active_y)), (x_cap, y_cap))
    xpos = {ci: vi for vi, ci in enumerate(active_x)}
    ypos = {ci: len(active_x) + vi for vi, ci in enumerate(active_y)}
    xs = [alg.variable(xpos[i], v) if i in xpos else v for i, v in enumerate(base)]
    ys = [alg.variable(ypos[i], v) if i in ypos else v for i, v in enumerate(fiber)]

    val = field(xs, ys)
    if not isinstance(val, Jet):
        val = alg.constant(float(val))
    if not np.all(np.isfinite(val.c)):
        bad = [
            o
            for o in orders
            if not math.isfinite(_extract(val, o, xpos, ypos, check=False))
        ]
        raise EvaluationError(f"non-finite jet coefficients; affected orders: {bad}")

    entries = {o: _extract(val, o, xpos, ypos) for o in orders}
    return PartialTable(entries=entries, method="jet")


def _extract(val: Jet, order: MultiOrder, xpos, ypos, check=True) -> float:
    e = [0] * val.alg.nvars
    for i, k in enumerate(order.x_orders):
        if k:
            e[xpos[i]] = k
    for i, k in enumerate(order.y_orders):
        if k:
            e[ypos[i]] = k
    v = val.partial(e)
    if check and not math.isfinite(v):
        raise EvaluationError(f"non-finite derivative for order {order}")
    return v


# ---------------------------------------------------------------------------
# Finite-difference oracle


_STENCILS: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _central_stencil(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric central-difference offsets and weights, O(h^2) accurate."""
    got = _STENCILS.get(order)
    if got is not None:
        return got
    m = (order + 1) // 2
    offsets = np.arange(-m, m + 1, dtype=float)
    npts = offsets.size
    vander = np.vstack([offsets**p for p in range(npts)])
    rhs = np.zeros(npts)
    rhs[order] = math.factorial(order)
    weights = np.linalg.solve(vander, rhs)
    _STENCILS[order] = (offsets, weights)
    return offsets, weights


def default_fd_step(order: MultiOrder, base, fiber) -> float:
    """Step balancing truncation against rounding for the given total order.

    Low orders use the classic 1e-3 scale; for orders >= 3 the stencil
    denominator h^k forces progressively larger steps to keep rounding noise
    below the Richardson truncation level.
    """
    coords = [base[i] for i, k in enumerate(order.x_orders) if k]
    coords += [fiber[i] for i, k in enumerate(order.y_orders) if k]
    scale = max([1.0] + [abs(c) for c in coords])
    base_step = {0: 1e-3, 1: 1e-3, 2: 1e-3, 3: 8e-3, 4: 3e-2, 5: 8e-2, 6: 1.5e-1}
    return base_step[min(order.total, 6)] * scale


def fd_partial(field, base, fiber, order: MultiOrder, step: float | None = None,
               richardson_levels: int = 2) -> tuple[float, float]:
    """Central-difference estimate of one mixed partial with Richardson refinement.

    Returns ``(value, error_estimate)`` where the estimate is the difference
    between the last two extrapolation levels.  Raises :class:`DomainError`
    if any stencil point leaves the slit fiber space.
    """
    if richardson_levels < 0:
        raise ValueError("richardson_levels must be >= 0")
    base = [float(v) for v in base]
    fiber = [float(v) for v in fiber]
    _check_fiber(fiber)
    if step is None:
        step = default_fd_step(order, base, fiber)
    if step <= 0:
        raise ValueError("step must be positive")

    active = [("x", i, k) for i, k in enumerate(order.x_orders) if k]
    active += [("y", i, k) for i, k in enumerate(order.y_orders) if k]

    def estimate(h: float) -> float:
        grids = [_central_stencil(k) for (_, _, k) in active]
        total = 0.0
        for combo in itertools.product(*(range(offs.size) for offs, _ in grids)):
            x = list(base)
            y = list(fiber)
            w = 1.0
            for (kind, ci, k), (offs, wts), j in zip(active, grids, combo):
                if kind == "x":
                    x[ci] += offs[j] * h
                else:
                    y[ci] += offs[j] * h
                w *= wts[j] / h**k
            if all(v == 0.0 for v in y):
                raise DomainError("finite-difference stencil crossed the zero fiber")
            val = field(x, y)
            if not math.isfinite(val):
                raise DomainError("finite-difference stencil left the field domain")
            total += w * val
        return total

    if not active:
        v = field(base, fiber)
        return float(v), 0.0

    # Richardson table for an O(h^2) base scheme; like Ridders' scheme, the
    # returned entry is the one with the smallest estimated error, so exact
    # stencils are not polluted by extrapolating rounding noise.
    rows = [[estimate(step / 2**lev)] for lev in range(richardson_levels + 1)]
    if richardson_levels == 0:
        return float(rows[0][0]), abs(rows[0][0]) * 1e-7 + 1e-12
    best = None
    best_err = math.inf
    for lev in range(1, richardson_levels + 1):
        for j in range(1, lev + 1):
            fac = 4.0**j
            rows[lev].append(
                (fac * rows[lev][j - 1] - rows[lev - 1][j - 1]) / (fac - 1.0)
            )
        for j in range(lev + 1):
            cand = rows[lev][j]
            neighbors = [rows[lev][j - 1]] if j >= 1 else []
            if j < len(rows[lev - 1]):
                neighbors.append(rows[lev - 1][j])
            if j - 1 >= 0 and j - 1 < len(rows[lev - 1]):
                neighbors.append(rows[lev - 1][j - 1])
            err = max(abs(cand - nb) for nb in neighbors)
            if err < best_err:
                best, best_err = cand, err
    return float(best), float(best_err)


@dataclass
class CrossCheckReport:
    """Agreement summary between the jet engine and the FD oracle."""

    max_rel_discrepancy: float
    worst_sample: int
    worst_order: MultiOrder | None
    n_entries: int
    rel_tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_discrepancy < self.rel_tol


def cross_check(field, samples, orders, rel_tol: float) -> CrossCheckReport:
    """Compare jet partials against the FD oracle over sample (x, y) pairs.

    Relative discrepancy uses a ``max(|a|, |b|, 1)`` denominator.  Evaluation
    failures propagate with the sample index attached.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("cross_check requires at least one sample")
    orders = list(orders)
    worst = -1.0
    worst_sample = -1
    worst_order = None
    count = 0
    for si, (base, fiber) in enumerate(samples):
        try:
            table = taylor_eval(field, base, fiber, orders)
            for o in orders:
                fd_val, _ = fd_partial(field, base, fiber, o)
                a = table[o]
                rel = abs(a - fd_val) / max(abs(a), abs(fd_val), 1.0)
                count += 1
                if rel > worst:
                    worst, worst_sample, worst_order = rel, si, o
        except (DomainError, EvaluationError) as err:
            raise type(err)(f"sample {si}: {err}") from err
    return CrossCheckReport(
        max_rel_discrepancy=worst,
        worst_sample=worst_sample,
        worst_order=worst_order,
        n_entries=count,
        rel_tol=rel_tol,
    )
