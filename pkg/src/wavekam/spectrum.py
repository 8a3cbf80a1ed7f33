"""Spectrum clusters of sqrt(-Laplacian) on the torus and truncated Fourier data.

The zero-average spectrum on T^d consists of the values alpha = |j| over the
nonzero lattice j in Z^d.  Clusters are keyed by the exact integer alpha^2:
floating alpha would merge or split clusters through rounding, and cluster
identity is load-bearing for every block structure downstream.

Torus functions are trigonometric polynomials truncated to |ell|_inf <= ell_max
(angles) and |j| <= j_max (space, Euclidean).  All integrals use the
normalized measure dphi/(2pi)^nu, dx/(2pi)^d, so pairings are plain
coefficient sums.
"""

import itertools
import math

import numpy as np

from .errors import DiophantineViolation, LipschitzQuotientError, ParameterError

__all__ = [
    "ClusterIndex",
    "SpectralLattice",
    "enumerate_clusters",
    "AngleFunction",
    "SpaceTimeFunction",
    "OmegaGrid",
    "sobolev_norm",
    "weighted_lip_norm",
    "omega_dphi_inverse",
    "diophantine_check",
    "default_s0",
]


def default_s0(nu, d):
    """s0 = [(nu+d)/2] + 1, the low regularity index entering constants."""
    return (nu + d) // 2 + 1


class ClusterIndex:
    """One eigenvalue cluster: all lattice points j with |j|^2 = alpha_sq.

    Points are sorted lexicographically so every run enumerates identically.
    """

    __slots__ = ("alpha_sq", "points", "n_alpha", "index_of", "neg_perm")

    def __init__(self, alpha_sq, points):
        self.alpha_sq = int(alpha_sq)
        self.points = sorted(tuple(int(x) for x in p) for p in points)
        self.n_alpha = len(self.points)
        self.index_of = {p: i for i, p in enumerate(self.points)}
        # permutation realizing j -> -j inside the cluster
        self.neg_perm = np.array(
            [self.index_of[tuple(-x for x in p)] for p in self.points], dtype=int
        )

    @property
    def alpha(self):
        return math.sqrt(self.alpha_sq)

    def __repr__(self):
        return f"ClusterIndex(alpha_sq={self.alpha_sq}, n_alpha={self.n_alpha})"


class SpectralLattice:
    """Clusters of the zero-average spectrum up to radius j_max."""

    def __init__(self, d, j_max, clusters):
        self.d = int(d)
        self.j_max = int(j_max)
        self.clusters = clusters
        self.alpha_sqs = [c.alpha_sq for c in clusters]
        self.by_alpha_sq = {c.alpha_sq: c for c in clusters}
        self.cluster_of_point = {}
        for c in clusters:
            for p in c.points:
                self.cluster_of_point[p] = c.alpha_sq

    def cluster(self, alpha_sq):
        return self.by_alpha_sq[alpha_sq]

    def alpha(self, alpha_sq):
        return math.sqrt(alpha_sq)

    @property
    def n_points(self):
        return sum(c.n_alpha for c in self.clusters)

    def all_points(self):
        for c in self.clusters:
            yield from c.points

    def cluster_gap_constant(self):
        """Brute-force C with |alpha - beta| >= C (alpha^-1 + beta^-1) on the truncation."""
        best = math.inf
        for ca, cb in itertools.combinations(self.clusters, 2):
            a, b = ca.alpha, cb.alpha
            best = min(best, abs(a - b) / (1.0 / a + 1.0 / b))
        return best

    def to_json(self):
        return [
            {"alpha_sq": c.alpha_sq, "points": [list(p) for p in c.points]}
            for c in self.clusters
        ]

    def __eq__(self, other):
        return (
            isinstance(other, SpectralLattice)
            and self.d == other.d
            and self.j_max == other.j_max
        )

    def __repr__(self):
        return (
            f"SpectralLattice(d={self.d}, j_max={self.j_max}, "
            f"{len(self.clusters)} clusters, {self.n_points} points)"
        )


def enumerate_clusters(d, j_max):
    """Partition {j in Z^d \\ 0 : |j| <= j_max} into clusters of constant |j|^2."""
    if d < 1 or j_max < 1:
        raise ParameterError(f"need d >= 1 and j_max >= 1, got d={d}, j_max={j_max}")
    groups = {}
    rng = range(-j_max, j_max + 1)
    for j in itertools.product(rng, repeat=d):
        n2 = sum(x * x for x in j)
        if 0 < n2 <= j_max * j_max:
            groups.setdefault(n2, []).append(j)
    clusters = [ClusterIndex(a2, pts) for a2, pts in sorted(groups.items())]
    return SpectralLattice(d, j_max, clusters)


# ---------------------------------------------------------------------------
# truncated Fourier series on T^nu
# ---------------------------------------------------------------------------


class AngleFunction:
    """Truncated Fourier series on T^nu, coefficients on the box |ell|_inf <= ell_max.

    Stored as a dense complex array of shape (2*ell_max+1,)*nu with index
    offset ell_max, which keeps convolutions and FFT sampling vectorized.
    """

    __slots__ = ("nu", "ell_max", "coeffs")

    def __init__(self, nu, ell_max, coeffs=None):
        self.nu = int(nu)
        self.ell_max = int(ell_max)
        shape = (2 * self.ell_max + 1,) * self.nu
        if coeffs is None:
            self.coeffs = np.zeros(shape, dtype=complex)
        else:
            coeffs = np.asarray(coeffs, dtype=complex)
            if coeffs.shape != shape:
                raise ParameterError(f"coefficient shape {coeffs.shape} != {shape}")
            self.coeffs = coeffs

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, nu, ell_max):
        return cls(nu, ell_max)

    @classmethod
    def constant(cls, nu, ell_max, value):
        f = cls(nu, ell_max)
        f[(0,) * nu] = value
        return f

    @classmethod
    def from_modes(cls, nu, ell_max, modes):
        """modes: dict ell-tuple -> complex coefficient."""
        f = cls(nu, ell_max)
        for ell, v in modes.items():
            f[ell] = v
        return f

    @classmethod
    def cosine(cls, nu, ell_max, ell, amplitude=1.0):
        """amplitude * cos(ell . phi)."""
        f = cls(nu, ell_max)
        ell = tuple(int(x) for x in ell)
        f[ell] = f[ell] + amplitude / 2.0
        nell = tuple(-x for x in ell)
        f[nell] = f[nell] + amplitude / 2.0
        return f

    # -- indexing -----------------------------------------------------------
    def _key(self, ell):
        return tuple(int(x) + self.ell_max for x in ell)

    def __getitem__(self, ell):
        return self.coeffs[self._key(ell)]

    def __setitem__(self, ell, value):
        self.coeffs[self._key(ell)] = value

    def modes(self):
        """Yield (ell, coefficient) over nonzero modes, deterministic order."""
        idx = np.argwhere(self.coeffs != 0)
        for raw in sorted(map(tuple, idx)):
            ell = tuple(int(x) - self.ell_max for x in raw)
            yield ell, self.coeffs[raw]

    # -- algebra ------------------------------------------------------------
    def copy(self):
        return AngleFunction(self.nu, self.ell_max, self.coeffs.copy())

    def __add__(self, other):
        self._check(other)
        return AngleFunction(self.nu, self.ell_max, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return AngleFunction(self.nu, self.ell_max, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return AngleFunction(self.nu, self.ell_max, self.coeffs * scalar)

    __rmul__ = __mul__

    def _check(self, other):
        if self.nu != other.nu or self.ell_max != other.ell_max:
            raise ParameterError("angle function truncation mismatch")

    def product(self, other):
        """Pointwise product, re-truncated to the box; discarded mass is exact
        convolution tail (returned as second value)."""
        self._check(other)
        full = _convolve_full(self.coeffs, other.coeffs)
        out, lost = _crop_center(full, self.ell_max)
        return AngleFunction(self.nu, self.ell_max, out), lost

    def mean(self):
        return complex(self[(0,) * self.nu])

    def conj(self):
        """Pointwise complex conjugate in phi: hat(ell) -> conj(hat(-ell))."""
        flipped = np.conj(self.coeffs[(slice(None, None, -1),) * self.nu])
        return AngleFunction(self.nu, self.ell_max, flipped)

    def is_real(self, tol=1e-13):
        return self.distance(self.conj()) <= tol * max(1.0, self.linf_bound())

    def distance(self, other):
        return float(np.max(np.abs(self.coeffs - other.coeffs)))

    def linf_bound(self):
        return float(np.sum(np.abs(self.coeffs)))

    def omega_dphi(self, omega):
        """omega . d/dphi, exact on coefficients."""
        grid = _ell_grid(self.nu, self.ell_max)
        phase = 1j * np.tensordot(np.asarray(omega, dtype=float), grid, axes=(0, 0))
        return AngleFunction(self.nu, self.ell_max, self.coeffs * phase)

    def sobolev_norm(self, s):
        w = _bracket_ell(self.nu, self.ell_max) ** (2.0 * s)
        return math.sqrt(math.fsum((w * np.abs(self.coeffs) ** 2).ravel().tolist()))

    # -- evaluation ---------------------------------------------------------
    def sample(self, grid_n):
        """Values on the uniform grid (2pi k / grid_n), shape (grid_n,)*nu."""
        if grid_n < 2 * self.ell_max + 1:
            raise ParameterError("sampling grid too small for exact evaluation")
        spec = np.zeros((grid_n,) * self.nu, dtype=complex)
        L = self.ell_max
        it = np.ndindex(*self.coeffs.shape)
        for raw in it:
            c = self.coeffs[raw]
            if c != 0:
                ell = tuple((x - L) % grid_n for x in raw)
                spec[ell] += c
        return np.fft.ifftn(spec) * grid_n**self.nu

    @classmethod
    def from_samples(cls, values, ell_max):
        """Project grid values back to the box; returns (function, alias mass)."""
        values = np.asarray(values, dtype=complex)
        nu = values.ndim
        grid_n = values.shape[0]
        spec = np.fft.fftn(values) / grid_n**nu
        total = math.fsum((np.abs(spec) ** 2).ravel().tolist())
        f = cls(nu, ell_max)
        kept = 0.0
        for raw in np.ndindex(*spec.shape):
            c = spec[raw]
            if c == 0:
                continue
            ell = tuple(x if x <= grid_n // 2 else x - grid_n for x in raw)
            if all(abs(x) <= ell_max for x in ell):
                f[ell] = c
                kept += abs(c) ** 2
        alias = math.sqrt(max(total - kept, 0.0))
        return f, alias

    def eval_at(self, points):
        """Evaluate at arbitrary angles; points shape (n, nu)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        idx = np.argwhere(self.coeffs != 0)
        if len(idx) == 0:
            return np.zeros(points.shape[0], dtype=complex)
        ells = idx - self.ell_max
        cs = self.coeffs[tuple(idx.T)]
        phases = np.exp(1j * points @ ells.T)
        return phases @ cs


def _ell_grid(nu, ell_max):
    ax = np.arange(-ell_max, ell_max + 1)
    return np.stack(np.meshgrid(*([ax] * nu), indexing="ij"), axis=0)


def _bracket_ell(nu, ell_max):
    grid = _ell_grid(nu, ell_max)
    return np.maximum(1.0, np.sqrt(np.sum(grid.astype(float) ** 2, axis=0)))


def _convolve_full(a, b):
    """Full linear convolution of two equal-shape dense coefficient arrays.

    Direct summation when the data is sparse (exact), FFT otherwise.
    """
    nu = a.ndim
    n = a.shape[0]
    out_n = 2 * n - 1
    ia = np.argwhere(a != 0)
    ib = np.argwhere(b != 0)
    if len(ia) * len(ib) <= 16384:
        out = np.zeros((out_n,) * nu, dtype=complex)
        for ka in ia:
            va = a[tuple(ka)]
            for kb in ib:
                out[tuple(ka + kb)] += va * b[tuple(kb)]
        return out
    fa = np.fft.fftn(a, s=(out_n,) * nu)
    fb = np.fft.fftn(b, s=(out_n,) * nu)
    out = np.fft.ifftn(fa * fb)
    # inputs are exact trig polynomials; kill fft noise below the double floor
    scale = np.max(np.abs(out)) if out.size else 0.0
    if scale > 0:
        out[np.abs(out) < 1e-15 * scale] = 0.0
    return out


def _crop_center(full, ell_max):
    n_full = full.shape[0]
    center = (n_full - 1) // 2
    sl = tuple(
        slice(center - ell_max, center + ell_max + 1) for _ in range(full.ndim)
    )
    kept = full[sl].copy()
    total = math.fsum((np.abs(full) ** 2).ravel().tolist())
    inside = math.fsum((np.abs(kept) ** 2).ravel().tolist())
    return kept, math.sqrt(max(total - inside, 0.0))


# ---------------------------------------------------------------------------
# space-time functions on T^(nu+d)
# ---------------------------------------------------------------------------


class SpaceTimeFunction:
    """Truncated Fourier series u(phi, x) with zero average in x.

    Coefficients are stored per space mode j (a tuple) as a dense angle array,
    which suits the finite-rank data of the problem: a handful of j modes,
    full angle boxes.
    """

    __slots__ = ("nu", "ell_max", "d", "comps")

    def __init__(self, nu, ell_max, d, comps=None):
        self.nu = int(nu)
        self.ell_max = int(ell_max)
        self.d = int(d)
        self.comps = {}
        if comps:
            for j, f in comps.items():
                self._store(j, f)

    def _store(self, j, f):
        j = tuple(int(x) for x in j)
        if all(x == 0 for x in j):
            raise ParameterError("space mode j = 0 violates the zero-average contract")
        if len(j) != self.d:
            raise ParameterError(f"space mode {j} has wrong dimension")
        self.comps[j] = f

    @classmethod
    def zero(cls, nu, ell_max, d):
        return cls(nu, ell_max, d)

    @classmethod
    def from_modes(cls, nu, ell_max, d, modes):
        """modes: dict (ell-tuple, j-tuple) -> complex."""
        u = cls(nu, ell_max, d)
        for (ell, j), v in modes.items():
            u.set_coeff(ell, j, v)
        return u

    def set_coeff(self, ell, j, value):
        j = tuple(int(x) for x in j)
        if j not in self.comps:
            self._store(j, AngleFunction(self.nu, self.ell_max))
        self.comps[j][ell] = value

    def coeff(self, ell, j):
        j = tuple(int(x) for x in j)
        if j not in self.comps:
            return 0j
        return complex(self.comps[j][ell])

    def space_modes(self):
        return sorted(self.comps.keys())

    def angle_part(self, j):
        j = tuple(int(x) for x in j)
        return self.comps.get(j, AngleFunction(self.nu, self.ell_max))

    def copy(self):
        return SpaceTimeFunction(
            self.nu, self.ell_max, self.d, {j: f.copy() for j, f in self.comps.items()}
        )

    def __add__(self, other):
        out = self.copy()
        for j, f in other.comps.items():
            if j in out.comps:
                out.comps[j] = out.comps[j] + f
            else:
                out.comps[j] = f.copy()
        return out

    def __mul__(self, scalar):
        return SpaceTimeFunction(
            self.nu, self.ell_max, self.d,
            {j: f * scalar for j, f in self.comps.items()},
        )

    __rmul__ = __mul__

    def mul_angle(self, g):
        """Multiply by an x-independent function g(phi); reports truncation loss."""
        out = SpaceTimeFunction(self.nu, self.ell_max, self.d)
        lost = 0.0
        for j, f in self.comps.items():
            prod, l = f.product(g)
            out.comps[j] = prod
            lost += l * l
        return out, math.sqrt(lost)

    def apply_D_power(self, p):
        """|D|^p: scale mode j by |j|^p (j never 0 here)."""
        out = SpaceTimeFunction(self.nu, self.ell_max, self.d)
        for j, f in self.comps.items():
            out.comps[j] = f * (math.sqrt(sum(x * x for x in j)) ** p)
        return out

    def conj(self):
        """Complex conjugate of the function: hat(-ell,-j) conjugated."""
        out = SpaceTimeFunction(self.nu, self.ell_max, self.d)
        for j, f in self.comps.items():
            out.comps[tuple(-x for x in j)] = f.conj()
        return out

    def is_real(self, tol=1e-13):
        c = self.conj()
        scale = max(self.linf_bound(), 1.0)
        keys = set(self.comps) | set(c.comps)
        return all(
            self.angle_part(j).distance(c.angle_part(j)) <= tol * scale for j in keys
        )

    def linf_bound(self):
        return sum(f.linf_bound() for f in self.comps.values())

    def compose_angles(self, shifted_points, grid_shape, ell_max=None):
        """Replace phi by the given angles pointwise and re-project.

        shifted_points: array (n_grid_points, nu) of target angles laid out in
        the row-major order of the uniform grid with shape grid_shape.
        Returns (function, alias mass).
        """
        ell_max = self.ell_max if ell_max is None else ell_max
        out = SpaceTimeFunction(self.nu, ell_max, self.d)
        alias = 0.0
        for j, f in self.comps.items():
            vals = f.eval_at(shifted_points).reshape(grid_shape)
            g, a = AngleFunction.from_samples(vals, ell_max)
            out.comps[j] = g
            alias += a * a
        return out, math.sqrt(alias)

    def pairing(self, other):
        """<g, h> = normalized integral of g*h over x, per phi: an AngleFunction.

        In coefficients: sum_j ghat_{-j}(.) conv hhat_j(.).
        """
        acc = AngleFunction(self.nu, self.ell_max)
        for j, f in other.comps.items():
            mj = tuple(-x for x in j)
            if mj in self.comps:
                prod, _ = self.comps[mj].product(f)
                acc = acc + prod
        return acc

    def x_coeffs_at_phi(self, phi):
        """dict j -> u_j(phi)."""
        phi = np.asarray(phi, dtype=float).reshape(1, -1)
        return {j: complex(f.eval_at(phi)[0]) for j, f in self.comps.items()}

    def sobolev_norm(self, s):
        terms = []
        for j, f in self.comps.items():
            nj = math.sqrt(sum(x * x for x in j))
            w = np.maximum(_bracket_ell(self.nu, self.ell_max), nj) ** (2.0 * s)
            terms.extend((w * np.abs(f.coeffs) ** 2).ravel().tolist())
        return math.sqrt(math.fsum(terms))

    def to_rows(self):
        rows = []
        for j in self.space_modes():
            for ell, c in self.comps[j].modes():
                rows.append((list(ell), list(j), float(c.real), float(c.imag)))
        return rows


def sobolev_norm(u, s):
    """Truncated Sobolev norm of an AngleFunction or SpaceTimeFunction."""
    if s < 0:
        raise ParameterError("s must be >= 0")
    return u.sobolev_norm(s)


# ---------------------------------------------------------------------------
# parameter grid and weighted Lipschitz norm
# ---------------------------------------------------------------------------


class OmegaGrid:
    """Rectangular grid of frequency samples in a box of R^nu."""

    def __init__(self, box, counts, gamma, tau):
        self.box = [(float(lo), float(hi)) for lo, hi in box]
        self.counts = [int(c) for c in counts]
        if not 0 < gamma < 1:
            raise ParameterError("gamma must lie in (0, 1)")
        self.gamma = float(gamma)
        self.tau = float(tau)
        axes = [
            np.linspace(lo, hi, c) if c > 1 else np.array([(lo + hi) / 2.0])
            for (lo, hi), c in zip(self.box, self.counts)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        self.samples = np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def nu(self):
        return len(self.box)

    def __len__(self):
        return self.samples.shape[0]

    def adjacent_pairs(self):
        """Index pairs of neighbors along each axis (the declared pairing)."""
        shape = tuple(self.counts)
        flat = np.arange(int(np.prod(shape))).reshape(shape)
        pairs = []
        for ax in range(len(shape)):
            if shape[ax] < 2:
                continue
            a = np.take(flat, range(shape[ax] - 1), axis=ax).ravel()
            b = np.take(flat, range(1, shape[ax]), axis=ax).ravel()
            pairs.extend(zip(a.tolist(), b.tolist()))
        return pairs


def weighted_lip_norm(values, grid, s=None, norm=None):
    """sup-norm plus gamma times the adjacent-pair Lipschitz quotient.

    values: list of objects indexed like grid.samples.  If ``norm`` is given it
    maps an object to a float and differences are formed with '-'; otherwise
    objects must be functions and ``s`` selects the Sobolev norm.  The
    finite-difference seminorm over adjacent grid pairs is a lower bound of
    the true Lipschitz seminorm (documented approximation).
    """
    if norm is None:
        norm = lambda f: f.sobolev_norm(s)  # noqa: E731
    sup = max(norm(v) for v in values)
    lip = 0.0
    for i, k in grid.adjacent_pairs():
        dist = float(np.linalg.norm(grid.samples[i] - grid.samples[k]))
        dnorm = norm(values[i] - values[k])
        if dist == 0.0:
            if dnorm > 0.0:
                raise LipschitzQuotientError(
                    f"coincident samples {i}, {k} with unequal values"
                )
            continue
        lip = max(lip, dnorm / dist)
    return sup + grid.gamma * lip


# ---------------------------------------------------------------------------
# small divisors
# ---------------------------------------------------------------------------


def _ell_iter(nu, ell_max):
    for ell in itertools.product(range(-ell_max, ell_max + 1), repeat=nu):
        if any(ell):
            yield ell


def omega_dphi_inverse(h, omega, gamma=None, tau=None, floor=None):
    """(omega . d/dphi)^{-1} on a mean-free AngleFunction.

    The ell = 0 mode is annihilated by convention; the input must be mean
    free.  Division is refused (DiophantineViolation) whenever the divisor
    falls below the floor, by default gamma/|ell|^tau; silent regularization
    would corrupt every convergence diagnostic built on top of this.
    """
    if abs(h.mean()) > 1e-14 * max(1.0, h.linf_bound()):
        raise ParameterError("omega_dphi_inverse requires a mean-free input")
    omega = np.asarray(omega, dtype=float)
    out = AngleFunction(h.nu, h.ell_max)
    for ell, c in h.modes():
        if not any(ell):
            continue
        div = float(np.dot(omega, ell))
        if floor is not None:
            this_floor = floor
        elif gamma is not None and tau is not None:
            this_floor = gamma / np.linalg.norm(ell) ** tau
        else:
            this_floor = 0.0
        if abs(div) <= this_floor or div == 0.0:
            raise DiophantineViolation(ell, abs(div), this_floor)
        out[ell] = c / (1j * div)
    return out


def diophantine_check(omega, gamma, tau, ell_max):
    """Check |omega . ell| >= gamma/|ell|^tau for 0 < |ell|_inf <= ell_max.

    Returns (ok, worst margin) with margin = min over ell of
    |omega.ell| |ell|^tau / gamma.
    """
    if ell_max < 1:
        raise ParameterError("ell_max must be >= 1")
    omega = np.asarray(omega, dtype=float)
    worst = math.inf
    for ell in _ell_iter(omega.size, ell_max):
        div = abs(float(np.dot(omega, ell)))
        margin = div * np.linalg.norm(ell) ** tau / gamma
        worst = min(worst, margin)
    return worst >= 1.0, worst
