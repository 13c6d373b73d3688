"""State-space realizations, relative degree and zero multisets."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, UndefinedRelativeDegree
from .linalg import DEFAULT_TOL, as_matrix, solve_or_invert


@dataclass(frozen=True, eq=False)
class StateSpaceRealization:
    """The quadruple ``(A, B, C, D)`` of ``dx = Ax + Bu, y = Cx + Du``.

    ``D`` may be omitted and is then taken as zero.  Matrices are stored as
    read-only float arrays; construction fails with `InvalidInputError`
    naming the offending matrix when shapes disagree.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray | None = None
    name: str | None = None

    def __post_init__(self):
        mats = {}
        for key in "ABC":
            mats[key] = as_matrix(getattr(self, key), key)
        nx = mats["A"].shape[0]
        if mats["A"].shape != (nx, nx):
            raise InvalidInputError(f"A: must be square, got shape {mats['A'].shape}")
        if nx < 1:
            raise InvalidInputError("A: system needs at least one state")
        if mats["B"].shape[0] != nx:
            raise InvalidInputError(f"B: expected {nx} rows to match A, got {mats['B'].shape[0]}")
        if mats["C"].shape[1] != nx:
            raise InvalidInputError(f"C: expected {nx} columns to match A, got {mats['C'].shape[1]}")
        nu, ny = mats["B"].shape[1], mats["C"].shape[0]
        if nu < 1:
            raise InvalidInputError("B: system needs at least one input")
        if ny < 1:
            raise InvalidInputError("C: system needs at least one output")
        if self.D is None:
            mats["D"] = np.zeros((ny, nu))
        else:
            mats["D"] = as_matrix(self.D, "D")
            if mats["D"].shape != (ny, nu):
                raise InvalidInputError(f"D: expected shape {(ny, nu)}, got {mats['D'].shape}")
        for key, value in mats.items():
            if np.iscomplexobj(value):
                raise InvalidInputError(f"{key}: complex realizations are not supported")
            value = np.array(value, dtype=float)
            value.setflags(write=False)
            object.__setattr__(self, key, value)

    @property
    def n_states(self):
        return self.A.shape[0]

    @property
    def n_inputs(self):
        return self.B.shape[1]

    @property
    def n_outputs(self):
        return self.C.shape[0]

    @property
    def dims(self):
        """``(l_x, l_u, l_y)``."""
        return self.n_states, self.n_inputs, self.n_outputs

    @property
    def is_square(self):
        return self.n_inputs == self.n_outputs

    @property
    def has_feedthrough(self):
        return bool(np.any(self.D != 0))

    @property
    def kind(self):
        if self.n_inputs == self.n_outputs:
            return "square"
        return "tall" if self.n_outputs > self.n_inputs else "wide"

    def replace(self, **changes):
        fields_ = dict(A=self.A, B=self.B, C=self.C, D=self.D, name=self.name)
        fields_.update(changes)
        return StateSpaceRealization(**fields_)

    def __repr__(self):
        nx, nu, ny = self.dims
        label = f" {self.name!r}" if self.name else ""
        return f"<StateSpaceRealization{label} states={nx} inputs={nu} outputs={ny}>"


@dataclass(frozen=True)
class ValidationReport:
    dims: tuple
    kind: str
    zero_feedthrough: bool

    @property
    def is_square(self):
        return self.kind == "square"


def validate(sys):
    """Check a realization and summarise its shape.

    Accepts a `StateSpaceRealization` or a mapping with keys ``A``, ``B``,
    ``C`` and optionally ``D``.
    """
    if not isinstance(sys, StateSpaceRealization):
        try:
            sys = StateSpaceRealization(sys["A"], sys["B"], sys["C"], sys.get("D"))
        except KeyError as exc:
            raise InvalidInputError(f"missing matrix {exc.args[0]!r}") from None
    return ValidationReport(sys.dims, sys.kind, not sys.has_feedthrough)


@dataclass(frozen=True)
class RelativeDegreeProfile:
    """Per-output relative degrees; 0 marks an output with direct feedthrough."""

    per_output: tuple

    @property
    def total(self):
        return int(sum(self.per_output))

    @property
    def has_feedthrough(self):
        return any(r == 0 for r in self.per_output)

    def __iter__(self):
        return iter(self.per_output)

    def __len__(self):
        return len(self.per_output)


def relative_degree(sys, tol=None):
    """Relative degree of every output.

    ``rho_i`` is the smallest ``k >= 1`` with ``C_i A^(k-1) B`` nonzero,
    judged against ``threshold * |C_i| |A|^(k-1) |B|``, or 0 when row ``i``
    of ``D`` is nonzero.
    """
    tol = DEFAULT_TOL if tol is None else tol
    nx, nu, _ = sys.dims
    thr = tol.threshold((nx, max(nx, nu)))
    normA = np.linalg.norm(sys.A, 2)
    normB = np.linalg.norm(sys.B, 2)
    degrees = []
    for i, (c, d) in enumerate(zip(sys.C, sys.D)):
        normc = np.linalg.norm(c)
        if np.linalg.norm(d) > thr * normc * normB:
            degrees.append(0)
            continue
        row = c.copy()
        scale = normc * normB
        for k in range(1, nx + 1):
            if scale > 0 and np.linalg.norm(row @ sys.B) > thr * scale:
                degrees.append(k)
                break
            row = row @ sys.A
            scale *= normA
        else:
            raise UndefinedRelativeDegree(
                f"output {i} is not affected by any input (C_i A^k B = 0 for k < {nx})", i)
    return RelativeDegreeProfile(tuple(degrees))


def similarity_transform(sys, P):
    """Realization in coordinates ``z = P x``: ``(P A P^-1, P B, C P^-1, D)``."""
    P = as_matrix(P, "P")
    if P.shape != (sys.n_states, sys.n_states):
        raise InvalidInputError(f"P: expected shape {(sys.n_states,) * 2}, got {P.shape}")
    Pinv, _ = solve_or_invert(P)
    return sys.replace(A=P @ sys.A @ Pinv, B=P @ sys.B, C=sys.C @ Pinv)


# -- zero multisets ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ZeroMultiset:
    """Invariant zeros with repetition, provenance and verification flags.

    ``values`` repeats a zero once per multiplicity; `grouped` collapses
    numerically coincident entries into ``(value, multiplicity)`` pairs.
    ``verified`` is ``None`` until a rank-drop check has been run.
    """

    values: np.ndarray
    method: str = "unknown"
    verified: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).reshape(-1)
        object.__setattr__(self, "values", vals)
        if self.verified is not None:
            flags = np.asarray(self.verified, dtype=bool).reshape(-1)
            if flags.shape != vals.shape:
                raise InvalidInputError("verified flags must match the number of zeros")
            object.__setattr__(self, "verified", flags)

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)

    @property
    def all_verified(self):
        return self.verified is not None and bool(np.all(self.verified))

    def with_verification(self, flags, **info):
        merged = dict(self.info)
        merged.update(info)
        return ZeroMultiset(self.values, self.method, flags, merged)

    def subset(self, mask, method=None):
        mask = np.asarray(mask, dtype=bool)
        flags = None if self.verified is None else self.verified[mask]
        return ZeroMultiset(self.values[mask], method or self.method, flags, dict(self.info))

    def sorted(self):
        order = np.lexsort((self.values.imag, self.values.real))
        flags = None if self.verified is None else self.verified[order]
        return ZeroMultiset(self.values[order], self.method, flags, dict(self.info))

    def grouped(self, atol=1e-6, rtol=1e-6):
        """List of ``(value, multiplicity, verified)`` with coincident zeros merged."""
        out = []
        used = np.zeros(len(self), dtype=bool)
        ordered = self.sorted()
        for i, z in enumerate(ordered.values):
            if used[i]:
                continue
            close = ~used & (np.abs(ordered.values - z) <= atol + rtol * abs(z))
            used |= close
            flag = None if ordered.verified is None else bool(np.all(ordered.verified[close]))
            out.append((complex(np.mean(ordered.values[close])), int(close.sum()), flag))
        return out

    def __repr__(self):
        body = ", ".join(f"{z:.6g}" for z in self.sorted().values)
        return f"ZeroMultiset[{self.method}]({{{body}}})"


def _as_values(zs):
    if isinstance(zs, ZeroMultiset):
        return zs.values
    return np.asarray(list(zs) if not isinstance(zs, np.ndarray) else zs, dtype=complex).reshape(-1)


@dataclass(frozen=True)
class MultisetMatch:
    matched: bool
    pairs: tuple
    max_error: float
    unmatched_left: tuple
    unmatched_right: tuple


def match_multisets(left, right, atol=1e-6, rtol=1e-6):
    """Greedy nearest-pair matching of two zero multisets.

    Pairs are accepted in order of increasing distance when within
    ``atol + rtol * max(|a|, |b|)``.  ``matched`` is true only when every
    element on both sides is paired.
    """
    a, b = _as_values(left), _as_values(right)
    candidates = []
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            d = abs(x - y)
            if d <= atol + rtol * max(abs(x), abs(y)):
                candidates.append((d, i, j))
    candidates.sort()
    used_a, used_b, pairs = set(), set(), []
    max_err = 0.0
    for d, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((i, j))
        max_err = max(max_err, d)
    left_out = tuple(i for i in range(a.size) if i not in used_a)
    right_out = tuple(j for j in range(b.size) if j not in used_b)
    return MultisetMatch(
        matched=not left_out and not right_out,
        pairs=tuple(sorted(pairs)),
        max_error=float(max_err),
        unmatched_left=left_out,
        unmatched_right=right_out,
    )


def multisets_equal(left, right, atol=1e-6, rtol=1e-6):
    return match_multisets(left, right, atol, rtol).matched


def common_zeros(left, right, atol=1e-4, rtol=0.0):
    """Values of `left` that pair with an element of `right` (multiset intersection)."""
    a = _as_values(left)
    m = match_multisets(a, right, atol, rtol)
    idx = [i for i, _ in m.pairs]
    return a[idx]


# -- random test systems ----------------------------------------------------


def _well_conditioned(rng, n, spread=2.0):
    """Random ``n x n`` matrix with condition number at most ``spread**2``."""
    if n == 0:
        return np.zeros((0, 0))
    q1, _ = np.linalg.qr(rng.normal(size=(n, n)))
    q2, _ = np.linalg.qr(rng.normal(size=(n, n)))
    scales = np.exp(rng.uniform(-np.log(spread), np.log(spread), size=n))
    return (q1 * scales) @ q2


def _real_block(zeros):
    """Real block-diagonal matrix with the given (conjugate-closed) spectrum.

    Returns the matrix and, per zero, the slice of coordinates spanning its
    real invariant subspace.
    """
    zeros = list(zeros)
    blocks, spans, used = [], [], [False] * len(zeros)
    pos = 0
    for i, z in enumerate(zeros):
        if used[i]:
            continue
        used[i] = True
        if abs(z.imag) <= 1e-12 * max(1.0, abs(z)):
            blocks.append(np.array([[z.real]]))
            spans.append(slice(pos, pos + 1))
            pos += 1
            continue
        for j in range(i + 1, len(zeros)):
            if not used[j] and abs(zeros[j] - z.conjugate()) <= 1e-12 * max(1.0, abs(z)):
                used[j] = True
                break
        else:
            raise InvalidInputError(f"planted zero {z} has no conjugate partner")
        a, b = z.real, abs(z.imag)
        blocks.append(np.array([[a, b], [-b, a]]))
        spans.append(slice(pos, pos + 2))
        pos += 2
    n = sum(blk.shape[0] for blk in blocks)
    J = np.zeros((n, n))
    for blk, sl in zip(blocks, spans):
        J[sl, sl] = blk
    return J, spans


def _split_rho(rng, rho, m):
    """Random composition of `rho` into `m` positive parts."""
    cuts = np.sort(rng.choice(np.arange(1, rho), size=m - 1, replace=False)) if m > 1 else []
    edges = np.concatenate([[0], cuts, [rho]])
    return tuple(int(x) for x in np.diff(edges))


def _zero_form(rng, n_states, profile, zeros, n_planted):
    """Square system already in invariant zero form with the given zeros.

    Returns ``(A, B, C, planted_basis)`` where the columns of
    `planted_basis` span the real invariant subspace of the planted zeros
    inside the zero dynamics coordinates.
    """
    m = len(profile)
    rho = sum(profile)
    l_eta = n_states - rho
    J, spans = _real_block(zeros)
    W = _well_conditioned(rng, l_eta)
    A_eta = W @ J @ np.linalg.inv(W) if l_eta else J
    planted_idx = []
    # spans cover planted zeros first; conjugate pairs share one span
    counted = 0
    for sl in spans:
        if counted >= n_planted:
            break
        planted_idx.extend(range(sl.start, sl.stop))
        counted += sl.stop - sl.start
    planted_basis = W[:, planted_idx] if l_eta else np.zeros((0, 0))

    A = np.zeros((n_states, n_states))
    A[:l_eta, :l_eta] = A_eta
    A[:l_eta, l_eta:] = rng.normal(size=(l_eta, rho))
    B = np.zeros((n_states, m))
    C = np.zeros((m, n_states))
    G = _well_conditioned(rng, m)
    start = l_eta
    for i, r in enumerate(profile):
        for k in range(r - 1):
            A[start + k, start + k + 1] = 1.0
        last = start + r - 1
        A[last, :] = rng.normal(size=n_states)
        B[last, :] = G[i]
        C[i, start] = 1.0
        start += r
    return A, B, C, planted_basis


def random_system(n_states, n_inputs, n_outputs, seed=None, *, planted_zeros=None,
                  rho=None, feedthrough=False, spread=2.0):
    """Random real realization, optionally with prescribed invariant zeros.

    Without `planted_zeros` or `rho` the matrices are dense Gaussian (``A``
    scaled by ``1/sqrt(n_states)``); `feedthrough` adds a random ``D``.

    With planting, the system is built in invariant zero form (zero dynamics
    block with the prescribed spectrum, sparse input/output coupling) and
    moved to random coordinates with a similarity of condition at most
    ``spread**2``.  `rho` is the total relative degree or a per-output
    tuple; it defaults to ``n_states - len(planted_zeros)``.  When fewer
    zeros than ``n_states - rho`` are planted the remainder is filled with
    random real zeros in ``[-3, -0.5]``.  Nonsquare systems keep exactly the
    planted zeros: extra outputs (or, dually, inputs) are drawn orthogonal to
    the planted zero directions only.
    """
    rng = np.random.default_rng(seed)
    nx, nu, ny = int(n_states), int(n_inputs), int(n_outputs)
    if min(nx, nu, ny) < 1:
        raise InvalidInputError("dimensions must all be at least 1")

    if planted_zeros is None and rho is None:
        A = rng.normal(size=(nx, nx)) / np.sqrt(nx)
        B = rng.normal(size=(nx, nu))
        C = rng.normal(size=(ny, nx))
        D = rng.normal(size=(ny, nu)) if feedthrough else None
        return StateSpaceRealization(A, B, C, D)

    if feedthrough:
        raise InvalidInputError("planting zeros requires D = 0")
    if nu != ny and max(nu, ny) > nx - len(planted_zeros or []):
        # the extra rows (columns) must avoid the planted zero directions
        # and still have full rank
        raise InvalidInputError(
            f"{len(planted_zeros or [])} planted zeros leave too few directions for "
            f"{max(nu, ny)} independent channels in {nx} states")
    if nu > ny:
        # dual construction: a wide system is the transpose of a tall one
        tall = random_system(nx, ny, nu, seed=rng, planted_zeros=planted_zeros,
                             rho=rho, spread=spread)
        return StateSpaceRealization(tall.A.T, tall.C.T, tall.B.T)

    planted = [complex(z) for z in (planted_zeros or [])]
    m = nu
    if rho is None:
        total = nx - len(planted)
        profile = None
    elif np.ndim(rho) == 0:
        total = int(rho)
        profile = None
    else:
        profile = tuple(int(r) for r in rho)
        total = sum(profile)
        if len(profile) != m or min(profile) < 1:
            raise InvalidInputError(f"rho profile needs {m} positive entries, got {profile}")
    if total < m or total > nx:
        raise InvalidInputError(
            f"infeasible relative degree {total} for {nx} states and {m} channels")
    if len(planted) > nx - total:
        raise InvalidInputError(
            f"{len(planted)} planted zeros exceed n_states - rho = {nx - total}")
    if profile is None:
        profile = _split_rho(rng, total, m)

    filler = list(-rng.uniform(0.5, 3.0, size=nx - total - len(planted)))
    zeros = planted + [complex(z) for z in filler]
    A, B, C, planted_basis = _zero_form(rng, nx, profile, zeros, len(planted))

    if ny > nu:
        l_eta = nx - total
        extra = rng.normal(size=(ny - nu, nx))
        if planted_basis.size:
            Q, _ = np.linalg.qr(planted_basis)
            extra[:, :l_eta] -= (extra[:, :l_eta] @ Q) @ Q.T
        C = np.vstack([C, extra])

    form = StateSpaceRealization(A, B, C)
    return similarity_transform(form, _well_conditioned(rng, nx, spread))
