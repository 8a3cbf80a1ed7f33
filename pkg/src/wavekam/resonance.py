"""Resonant-set classification of sampled frequencies and the measure proxy.

A frequency is accepted when every eigenvalue-difference condition

    |omega.ell + lambda_k - lambda_j| >= 2 gamma / (<ell>^tau alpha^dd beta^dd)

(excluding (0, alpha, alpha)) and every eigenvalue-sum condition

    |omega.ell + lambda_k + lambda_j| >= 2 gamma (alpha + beta) / <ell>^tau

holds on the truncation.  Lebesgue measure is approximated by the sample
fraction on a declared grid; the analytic Fubini argument is replaced by this
sampling, which is the honest numerical counterpart.

Note alpha + beta >= 2 on the spectrum, so the bracketed and unbracketed
forms of the sum threshold coincide; and the difference-certificates at
(ell, alpha, alpha) with k = j subsume the Diophantine condition
|omega.ell| >= gamma/|ell|^tau up to the scan box, since
2 gamma / <ell>^tau >= gamma / |ell|^tau.  Verdicts are floating point with
declared slack, not interval proofs.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

__all__ = [
    "EigenData",
    "ResonanceReport",
    "classify_omega",
    "classify_grid",
    "measure_sweep",
    "eigenvalue_lipschitz_audit",
]


@dataclass
class EigenData:
    """Per-cluster eigenvalue table used by the classifier.

    ``tables[alpha_sq]`` is a 1d array of eigenvalues.  Pre-screening mode
    uses the unperturbed mu_alpha = m alpha + c(alpha) (one value per
    cluster); post-iteration mode uses the final sorted eigenvalue lists.
    """

    lattice: object
    tables: dict
    m: float = 1.0

    @classmethod
    def unperturbed(cls, lattice, m=1.0, c=None):
        tables = {}
        for i, cl in enumerate(lattice.clusters):
            shift = 0.0 if c is None else float(c[i])
            tables[cl.alpha_sq] = np.array([m * cl.alpha + shift])
        return cls(lattice, tables, m)

    @classmethod
    def from_blocks(cls, lattice, d_blocks, m=1.0):
        return cls(
            lattice,
            {a: np.linalg.eigvalsh(mat) for a, mat in d_blocks.items()},
            m,
        )

    def correction_bound(self):
        """max |lambda - m alpha| over the table."""
        worst = 0.0
        for cl in self.lattice.clusters:
            lam = self.tables[cl.alpha_sq]
            worst = max(worst, float(np.max(np.abs(lam - self.m * cl.alpha))))
        return worst


@dataclass
class ResonanceReport:
    omega: np.ndarray
    accepted: bool
    certificates: list = field(default_factory=list)

    def to_json(self):
        return {
            "omega": [float(x) for x in self.omega],
            "accepted": self.accepted,
            "certificates": self.certificates,
        }


def _ell_list(nu, ell_max):
    return [
        ell
        for ell in itertools.product(range(-ell_max, ell_max + 1), repeat=nu)
    ]


def classify_omega(omega, eigen, gamma, tau, dd, ell_max, prune=True,
                   first_only=True, slack=0.0):
    """Verdict for one frequency; certificates carry the failing inequality.

    Pruning (validated against the full scan in tests): a difference
    condition can only fail when m|alpha-beta| <= |omega||ell| + 2 gamma
    + 2 r_max, and a sum condition only when (m - small)(alpha+beta) <=
    |omega||ell| + 2 r_max; the (0, alpha, beta != alpha) and (0, +)-sets are
    empty for small gamma, which the same bounds detect.
    """
    omega = np.asarray(omega, dtype=float)
    nu = omega.size
    lat = eigen.lattice
    m = eigen.m
    r_max = eigen.correction_bound()
    omega_norm = float(np.linalg.norm(omega))
    certs = []
    for ell in _ell_list(nu, ell_max):
        wl = float(np.dot(omega, ell))
        ell_norm = float(np.linalg.norm(ell))
        bracket = max(1.0, ell_norm)
        budget = omega_norm * ell_norm + 2.0 * gamma + 2.0 * r_max
        for ca in lat.clusters:
            for cb in lat.clusters:
                a, b = ca.alpha, cb.alpha
                # difference condition
                skip_diag = ca.alpha_sq == cb.alpha_sq and not any(ell)
                if not skip_diag and (not prune or m * abs(a - b) <= budget):
                    thr = 2.0 * gamma / (bracket**tau * (a * b) ** dd)
                    la = eigen.tables[ca.alpha_sq]
                    lb = eigen.tables[cb.alpha_sq]
                    gap = np.abs(wl + la[:, None] - lb[None, :])
                    kmin = np.unravel_index(np.argmin(gap), gap.shape)
                    if gap[kmin] < thr - slack:
                        certs.append(_certificate(
                            "R", ell, ca, cb, kmin, float(gap[kmin]), thr
                        ))
                        if first_only:
                            return ResonanceReport(omega, False, certs)
                # sum condition
                margin_m = m - 2.0 * gamma / bracket**tau
                if not prune or margin_m * (a + b) <= omega_norm * ell_norm + 2.0 * r_max:
                    thr = 2.0 * gamma * (a + b) / bracket**tau
                    la = eigen.tables[ca.alpha_sq]
                    lb = eigen.tables[cb.alpha_sq]
                    gap = np.abs(wl + la[:, None] + lb[None, :])
                    kmin = np.unravel_index(np.argmin(gap), gap.shape)
                    if gap[kmin] < thr - slack:
                        certs.append(_certificate(
                            "Q", ell, ca, cb, kmin, float(gap[kmin]), thr
                        ))
                        if first_only:
                            return ResonanceReport(omega, False, certs)
    return ResonanceReport(omega, not certs, certs)


def _certificate(kind, ell, ca, cb, kmin, value, thr):
    return {
        "kind": kind,
        "ell": list(ell),
        "alpha_sq": ca.alpha_sq,
        "beta_sq": cb.alpha_sq,
        "k": int(kmin[0]),
        "j": int(kmin[1]),
        "value": value,
        "threshold": thr,
    }


def recheck_certificate(omega, eigen, cert):
    """Re-evaluate the certificate inequality (reproducibility contract)."""
    omega = np.asarray(omega, dtype=float)
    wl = float(np.dot(omega, cert["ell"]))
    la = eigen.tables[cert["alpha_sq"]][cert["k"]]
    lb = eigen.tables[cert["beta_sq"]][cert["j"]]
    value = abs(wl + la - lb) if cert["kind"] == "R" else abs(wl + la + lb)
    return value < cert["threshold"], value


def classify_grid(samples, eigen, gamma, tau, dd, ell_max):
    """Vectorized verdicts for a whole sample array (pre-screen scale).

    Returns a boolean acceptance mask.  Scans each (ell, alpha, beta) against
    all samples at once; identical verdict family as classify_omega (tested).
    """
    samples = np.asarray(samples, dtype=float)
    lat = eigen.lattice
    m = eigen.m
    r_max = eigen.correction_bound()
    omega_max = float(np.max(np.linalg.norm(samples, axis=1)))
    accepted = np.ones(samples.shape[0], dtype=bool)
    nu = samples.shape[1]
    clusters = lat.clusters
    for ell in _ell_list(nu, ell_max):
        ell_norm = float(np.linalg.norm(ell))
        bracket = max(1.0, ell_norm)
        wl = samples @ np.asarray(ell, dtype=float)
        budget = omega_max * ell_norm + 2.0 * gamma + 2.0 * r_max
        for ca in clusters:
            for cb in clusters:
                a, b = ca.alpha, cb.alpha
                la = eigen.tables[ca.alpha_sq]
                lb = eigen.tables[cb.alpha_sq]
                skip_diag = ca.alpha_sq == cb.alpha_sq and not any(ell)
                if not skip_diag and m * abs(a - b) <= budget:
                    thr = 2.0 * gamma / (bracket**tau * (a * b) ** dd)
                    diffs = (la[:, None] - lb[None, :]).ravel()
                    gap = np.min(
                        np.abs(wl[:, None] + diffs[None, :]), axis=1
                    )
                    accepted &= gap >= thr
                margin_m = m - 2.0 * gamma / bracket**tau
                if margin_m * (a + b) <= omega_max * ell_norm + 2.0 * r_max:
                    thr = 2.0 * gamma * (a + b) / bracket**tau
                    sums = (la[:, None] + lb[None, :]).ravel()
                    gap = np.min(
                        np.abs(wl[:, None] + sums[None, :]), axis=1
                    )
                    accepted &= gap >= thr
    return accepted


def measure_sweep(samples, eigen, gamma_list, tau, dd, ell_max):
    """Excluded fraction per gamma plus the linear fit of fraction vs gamma.

    Degenerate grids (single sample or zero spread in the fractions) are
    flagged instead of fitted.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise ParameterError("samples must be an (n, nu) array")
    rows = []
    fractions = []
    for gamma in gamma_list:
        mask = classify_grid(samples, eigen, gamma, tau, dd, ell_max)
        frac = float(np.mean(~mask))
        fractions.append(frac)
        rows.append(
            {
                "gamma": float(gamma),
                "n_samples": int(samples.shape[0]),
                "n_excluded": int(np.sum(~mask)),
                "fraction": frac,
            }
        )
    gammas = np.asarray(gamma_list, dtype=float)
    fractions = np.asarray(fractions)
    fit = {"degenerate": True, "slope": math.nan, "intercept": math.nan,
           "r2": math.nan}
    if samples.shape[0] > 1 and len(gammas) >= 2 and np.ptp(fractions) > 0:
        coeffs = np.polyfit(gammas, fractions, 1)
        pred = np.polyval(coeffs, gammas)
        ss_res = float(np.sum((fractions - pred) ** 2))
        ss_tot = float(np.sum((fractions - np.mean(fractions)) ** 2))
        fit = {
            "degenerate": False,
            "slope": float(coeffs[0]),
            "intercept": float(coeffs[1]),
            "r2": 1.0 - ss_res / ss_tot if ss_tot > 0 else math.nan,
        }
    for row in rows:
        row["fit_slope"] = fit["slope"]
        row["fit_r2"] = fit["r2"]
    return rows, fit


def eigenvalue_lipschitz_audit(grid, blocks_per_omega, lattice, slack=1e-10):
    """Check |lambda_k(w1) - lambda_k(w2)| <= ||D(w1) - D(w2)||_HS per cluster.

    Sorted-eigenvalue differences on adjacent grid pairs against the
    Hilbert-Schmidt quotient of the blocks; violations beyond the rounding
    slack are reported.
    """
    if len(grid) < 2:
        raise ParameterError("need at least two grid points")
    violations = []
    quotients = []
    for i, k in grid.adjacent_pairs():
        dist = float(np.linalg.norm(grid.samples[i] - grid.samples[k]))
        if dist == 0.0:
            continue
        for cl in lattice.clusters:
            a_sq = cl.alpha_sq
            m1 = np.asarray(blocks_per_omega[i][a_sq])
            m2 = np.asarray(blocks_per_omega[k][a_sq])
            lam1 = np.linalg.eigvalsh(m1)
            lam2 = np.linalg.eigvalsh(m2)
            lhs = float(np.max(np.abs(lam1 - lam2)))
            rhs = float(np.linalg.norm(m1 - m2, "fro"))
            quotients.append((lhs / dist, rhs / dist))
            if lhs > rhs + slack:
                violations.append(
                    {
                        "pair": (int(i), int(k)),
                        "alpha_sq": a_sq,
                        "eig_quotient": lhs / dist,
                        "hs_quotient": rhs / dist,
                    }
                )
    return {"violations": violations, "quotients": quotients}
