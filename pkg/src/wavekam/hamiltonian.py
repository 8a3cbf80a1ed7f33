"""Real and complex Hamiltonian structure: J, the complexification, predicates.

Real vector fields act on (v, psi) as a 2x2 matrix of block operators; the
Hamiltonian ones are J G with G symmetric.  In complex coordinates every
Hamiltonian field is a paired operator whose top row (r1, r2) satisfies
r1* = -r1 and r2^T = r2 (equivalently, the field is i(H1 H2; -conj H2
-conj H1) with H1 self-adjoint, H2 symmetric).
"""

import math

import numpy as np

from .blockop import BlockOperator, PairedBlockOperator, compose
from .errors import ContractViolation, InversionError
from .spectrum import AngleFunction

__all__ = [
    "BlockMatrix2",
    "RealVectorField",
    "ExpMap",
    "complexify",
    "push_forward",
    "symplectic_check",
]

_SQRT2 = math.sqrt(2.0)


class BlockMatrix2:
    """General 2x2 arrangement of block operators (no conjugate-row constraint)."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d):
        self.a, self.b, self.c, self.d = a, b, c, d

    @classmethod
    def zero(cls, lattice, nu, ell_max):
        z = lambda: BlockOperator(lattice, nu, ell_max)  # noqa: E731
        return cls(z(), z(), z(), z())

    @classmethod
    def identity(cls, lattice, nu, ell_max):
        eye = BlockOperator.identity(lattice, nu, ell_max)
        zero = BlockOperator(lattice, nu, ell_max)
        return cls(eye, zero.copy(), zero.copy(), eye.copy())

    @classmethod
    def J(cls, lattice, nu, ell_max):
        eye = BlockOperator.identity(lattice, nu, ell_max)
        zero = BlockOperator(lattice, nu, ell_max)
        return cls(zero.copy(), eye, eye * (-1.0), zero.copy())

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def __add__(self, other):
        return BlockMatrix2(
            self.a + other.a, self.b + other.b, self.c + other.c, self.d + other.d
        )

    def __sub__(self, other):
        return BlockMatrix2(
            self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d
        )

    def __mul__(self, scalar):
        return BlockMatrix2(
            self.a * scalar, self.b * scalar, self.c * scalar, self.d * scalar
        )

    __rmul__ = __mul__

    def compose(self, o):
        return BlockMatrix2(
            compose(self.a, o.a) + compose(self.b, o.c),
            compose(self.a, o.b) + compose(self.b, o.d),
            compose(self.c, o.a) + compose(self.d, o.c),
            compose(self.c, o.b) + compose(self.d, o.d),
        )

    def transpose(self):
        return BlockMatrix2(
            self.a.transpose(), self.c.transpose(),
            self.b.transpose(), self.d.transpose(),
        )

    def omega_dphi(self, omega):
        return BlockMatrix2(*(e.omega_dphi(omega) for e in self.entries()))

    def apply_pair(self, u1, u2):
        return (
            self.a.apply(u1) + self.b.apply(u2),
            self.c.apply(u1) + self.d.apply(u2),
        )

    def hs_total(self):
        return math.sqrt(math.fsum(e.hs_total() ** 2 for e in self.entries()))

    def per_mode_frobenius(self):
        """dict ell -> Frobenius norm of the full coefficient matrix at that mode."""
        acc = {}
        for e in self.entries():
            for (ell, _, _), mat in e.blocks.items():
                acc[ell] = acc.get(ell, 0.0) + float(np.sum(np.abs(mat) ** 2))
        return {ell: math.sqrt(v) for ell, v in acc.items()}

    def decay_norm(self, s):
        return math.fsum(e.decay_norm(s) for e in self.entries())


def _paired_as_matrix2(p):
    return BlockMatrix2(p.r1, p.r2, p.r2.conj(), p.r1.conj())


def _as_matrix2(x):
    if isinstance(x, BlockMatrix2):
        return x
    if isinstance(x, PairedBlockOperator):
        return _paired_as_matrix2(x)
    raise ContractViolation(f"cannot view {type(x).__name__} as a 2x2 block matrix")


class RealVectorField(BlockMatrix2):
    """2x2 block field on (v, psi) with reality and Hamiltonian predicates."""

    def is_real(self, tol=1e-12):
        return all(e.is_real(tol) for e in self.entries())

    def hamiltonian_residual(self):
        """Residual of X = J G with G symmetric: needs b = b^T, c = c^T, a^T = -d."""
        r1 = (self.b - self.b.transpose()).hs_total()
        r2 = (self.c - self.c.transpose()).hs_total()
        r3 = (self.a.transpose() + self.d).hs_total()
        return r1 + r2 + r3

    def is_hamiltonian(self, tol=1e-10):
        scale = max(self.hs_total(), 1.0)
        return self.hamiltonian_residual() <= tol * scale


def complexify(x, tol=1e-12):
    """Conjugate a real 2x2 field by the complexification C.

    Returns the paired operator with top row
    r1 = (A + D - i(B - C))/2,  r2 = (A - D + i(B + C))/2.
    """
    if not isinstance(x, BlockMatrix2):
        raise ContractViolation("complexify expects a 2x2 block field")
    for name, e in zip("abcd", x.entries()):
        if not e.is_real(tol):
            raise ContractViolation(f"entry {name} violates the reality predicate")
    r1 = (x.a + x.d) * 0.5 + (x.b - x.c) * (-0.5j)
    r2 = (x.a - x.d) * 0.5 + (x.b + x.c) * (0.5j)
    return PairedBlockOperator(r1, r2)


class ExpMap:
    """Invertible map exp(Psi) carrying its exact inverse exp(-Psi)."""

    def __init__(self, forward, inverse):
        self.forward = forward
        self.inverse = inverse

    @classmethod
    def from_generator(cls, psi, **kw):
        from .blockop import operator_exponential

        return cls(operator_exponential(psi, **kw), operator_exponential(psi * (-1.0), **kw))

    @classmethod
    def identity(cls, lattice, nu, ell_max):
        eye = PairedBlockOperator.identity(lattice, nu, ell_max)
        return cls(eye, eye.copy())

    def then(self, other):
        """Composite map: apply self first, then other (operator product other o self...).

        Convention: as operators on functions, (self.then(other)).forward =
        self.forward composed with other.forward acting after, i.e.
        forward = self.forward @ other.forward matches the transformation
        chains Phi_0 o Phi_1 o ... used in the iteration.
        """
        return ExpMap(
            self.forward.compose(other.forward),
            other.inverse.compose(self.inverse),
        )


def _neumann_inverse(phi, max_terms=60, tol=1e-14):
    if isinstance(phi, PairedBlockOperator):
        ident = PairedBlockOperator.identity(phi.lattice, phi.r1.nu, phi.r1.ell_max)
    else:
        ident = BlockMatrix2.identity(phi.a.lattice, phi.a.nu, phi.a.ell_max)
    m = phi - ident
    size = m.decay_norm(0.0)
    if size >= 1.0:
        raise InversionError(
            f"map is not a small perturbation of the identity (|Phi - Id| = {size:.3e})"
        )
    out = ident
    term = ident
    for _ in range(max_terms):
        term = term.compose(m) * (-1.0)
        out = out + term
        if term.decay_norm(0.0) < tol:
            return out
    raise InversionError("Neumann inverse did not converge")


def push_forward(x, phi, omega, phi_inverse=None):
    """Transformed field Phi^{-1}(X Phi - omega . dphi Phi).

    ``phi`` may be an ExpMap (exact inverse) or a bare operator close to the
    identity (Neumann inverse).  Works for paired operators and for general
    2x2 block matrices.
    """
    if isinstance(phi, ExpMap):
        fwd, inv = phi.forward, phi.inverse
    else:
        fwd = phi
        inv = phi_inverse if phi_inverse is not None else _neumann_inverse(phi)
    if isinstance(fwd, PairedBlockOperator) and not isinstance(
        x, PairedBlockOperator
    ):
        fwd, inv = _as_matrix2(fwd), _as_matrix2(inv)
    if isinstance(x, PairedBlockOperator) and not isinstance(fwd, PairedBlockOperator):
        x = _as_matrix2(x)
    lot = x.compose(fwd) - fwd.omega_dphi(omega)
    return inv.compose(lot)


def symplectic_check(phi):
    """Max over stored phi-modes of the Frobenius norm of Phi^T J Phi - J."""
    m = _as_matrix2(phi)
    lattice = m.a.lattice
    j = BlockMatrix2.J(lattice, m.a.nu, m.a.ell_max)
    residual = m.transpose().compose(j.compose(m)) - j
    per_mode = residual.per_mode_frobenius()
    return max(per_mode.values(), default=0.0)
