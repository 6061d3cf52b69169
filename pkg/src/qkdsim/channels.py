"""Quantum channels in Kraus form and classical-quantum ensembles.

A channel is stored as a list of Kraus operators K_i with
sum_i K_i^dagger K_i = I, which makes trace preservation checkable and
tensor powers mechanical. Channels whose output splits as H_B (x) H_E carry
that split in ``out_factorization`` so the receiver/adversary marginals can
be formed.

A global dimension budget (default 2^12 complex dimensions) guards tensor
powers: this package does exact desk-scale simulation and fails fast beyond
it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch, ValidationError
from .states import DensityOperator, TensorFactorization, tensor

DEFAULT_DIM_BUDGET = 2**12
TRACE_PRESERVATION_ATOL = 1e-9
# Above this many Kraus products a tensor power is applied slot by slot
# instead of materializing the full Kronecker family.
KRAUS_MATERIALIZE_LIMIT = 10_000


class QuantumChannel:
    """A completely positive trace-preserving map in Kraus form.

    Parameters
    ----------
    kraus : sequence of array-like
        Kraus operators, each of shape (out_dim, in_dim).
    out_factorization : TensorFactorization or sequence of int, optional
        Tensor structure of the output space, e.g. (dim_B, dim_E) for a
        channel into a receiver/adversary pair.
    """

    __slots__ = ("_kraus", "out_factorization", "in_dim", "out_dim", "_power")

    def __init__(self, kraus, out_factorization=None, _power=None):
        if _power is not None:
            # Internal lazy form produced by tensor_power: (base, n).
            base, n = _power
            self._kraus = None
            self._power = (base, n)
            self.in_dim = base.in_dim**n
            self.out_dim = base.out_dim**n
        else:
            ops = [np.asarray(k, dtype=complex) for k in kraus]
            if not ops:
                raise ValidationError("kraus", "channel needs at least one Kraus operator")
            out_dim, in_dim = ops[0].shape
            if any(k.shape != (out_dim, in_dim) for k in ops):
                raise ValidationError("kraus", "Kraus operators must share one shape")
            gram = sum(k.conj().T @ k for k in ops)
            err = float(np.abs(gram - np.eye(in_dim)).max())
            if err > TRACE_PRESERVATION_ATOL:
                raise ValidationError(
                    "trace-preserving", f"max |sum K^dagger K - I| = {err:.3e}"
                )
            for k in ops:
                k.flags.writeable = False
            self._kraus = tuple(ops)
            self._power = None
            self.in_dim = in_dim
            self.out_dim = out_dim
        if out_factorization is not None:
            if not isinstance(out_factorization, TensorFactorization):
                out_factorization = TensorFactorization(tuple(out_factorization))
            out_factorization.check_dim(self.out_dim)
        self.out_factorization = out_factorization

    @property
    def kraus(self) -> tuple[np.ndarray, ...]:
        if self._kraus is None:
            base, n = self._power
            raise BudgetExceeded(
                len(base.kraus) ** n,
                KRAUS_MATERIALIZE_LIMIT,
                f"materializing {len(base.kraus)}^{n} Kraus operators",
            )
        return self._kraus

    def apply_matrix(self, matrix: np.ndarray) -> np.ndarray:
        """Linear action sum_i K_i M K_i^dagger on a raw matrix."""
        if matrix.shape != (self.in_dim, self.in_dim):
            raise DimensionMismatch(
                f"matrix dim {matrix.shape[0]} != channel input dim {self.in_dim}"
            )
        if self._kraus is not None:
            out = np.zeros((self.out_dim, self.out_dim), dtype=complex)
            for k in self._kraus:
                out += k @ matrix @ k.conj().T
            return out
        base, n = self._power
        # Apply the base channel slot by slot; slots already processed live
        # on the output space, the rest still on the input space.
        cur = matrix
        for slot in range(n):
            left = base.out_dim**slot
            right = base.in_dim ** (n - slot - 1)
            d_out = left * base.out_dim * right
            t = cur.reshape(left, base.in_dim, right, left, base.in_dim, right)
            out = np.zeros(
                (left, base.out_dim, right, left, base.out_dim, right), dtype=complex
            )
            for k in base.kraus:
                out += np.einsum("oi,aibcjd,pj->aobcpd", k, t, k.conj())
            cur = out.reshape(d_out, d_out)
        return cur

    def __repr__(self) -> str:
        nk = "lazy" if self._kraus is None else str(len(self._kraus))
        return f"QuantumChannel(in={self.in_dim}, out={self.out_dim}, kraus={nk})"


def apply(c: QuantumChannel, rho: DensityOperator) -> DensityOperator:
    """Send a state through a channel."""
    if rho.dim != c.in_dim:
        raise DimensionMismatch(f"state dim {rho.dim} != channel input dim {c.in_dim}")
    return DensityOperator(c.apply_matrix(rho.matrix))


def tensor_power(
    c: QuantumChannel, n: int, budget: int = DEFAULT_DIM_BUDGET
) -> QuantumChannel:
    """The n-fold product channel acting independently on each slot."""
    n = int(n)
    if n < 1:
        raise ValidationError("power", f"tensor power needs n >= 1, got {n}")
    worst = max(c.in_dim, c.out_dim) ** n
    if worst > budget:
        raise BudgetExceeded(worst, budget, f"tensor power n={n}")
    if c.out_factorization is not None:
        out_f = TensorFactorization(c.out_factorization.dims * n)
    else:
        out_f = TensorFactorization((c.out_dim,) * n)
    if n == 1:
        return QuantumChannel(c.kraus, out_factorization=out_f)
    if len(c.kraus) ** n > KRAUS_MATERIALIZE_LIMIT:
        return QuantumChannel((), out_factorization=out_f, _power=(c, n))
    ops = [
        reduce(np.kron, combo)
        for combo in itertools.product(c.kraus, repeat=n)
    ]
    return QuantumChannel(ops, out_factorization=out_f)


def marginal(c: QuantumChannel, side: str) -> QuantumChannel:
    """Reduce a channel into H_B (x) H_E to one of its output legs.

    ``side`` is "B" (keep the first factor) or "E" (keep the second). The
    marginal of Theta is Tr over the discarded leg, realized in Kraus form
    by slicing each operator along that leg's basis.
    """
    if c.out_factorization is None or len(c.out_factorization) != 2:
        raise ValidationError(
            "output-factorization",
            "marginal requires an output factorization with exactly two factors",
        )
    d_b, d_e = c.out_factorization.dims
    side = str(side).upper()
    if side not in ("B", "E"):
        raise ValidationError("side", f"side must be 'B' or 'E', got {side!r}")
    ops = []
    for k in c.kraus:
        t = k.reshape(d_b, d_e, c.in_dim)
        if side == "B":
            ops.extend(t[:, e, :] for e in range(d_e))
        else:
            ops.extend(t[b, :, :] for b in range(d_b))
    return QuantumChannel(ops)


@dataclass(frozen=True)
class Codeword:
    """A finite sequence of input letters."""

    letters: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(a) for a in self.letters))

    def __len__(self) -> int:
        return len(self.letters)


class CqEnsemble:
    """A finite input alphabet with a prior and a state per letter.

    Letters are 0..size-1; ``states[a]`` is the state the encoder emits for
    letter ``a`` and ``prior`` is the distribution the ensemble carries.
    """

    __slots__ = ("prior", "states")

    def __init__(self, prior, states):
        p = np.asarray(prior, dtype=float).ravel()
        states = tuple(states)
        if p.size != len(states) or p.size < 1:
            raise ValidationError(
                "prior", f"prior length {p.size} != number of states {len(states)}"
            )
        if p.min() < 0 or abs(p.sum() - 1.0) > 1e-10:
            raise ValidationError(
                "prior", f"prior must be nonnegative and sum to 1, got sum {p.sum()!r}"
            )
        if any(not isinstance(s, DensityOperator) for s in states):
            raise ValidationError("states", "ensemble states must be DensityOperator values")
        dim = states[0].dim
        if any(s.dim != dim for s in states):
            raise DimensionMismatch("ensemble states must share one dimension")
        p.flags.writeable = False
        self.prior = p
        self.states = states

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def __repr__(self) -> str:
        return f"CqEnsemble(size={self.size}, dim={self.dim})"


def encode(e: CqEnsemble, w: Codeword) -> DensityOperator:
    """Product state xi(a_1) (x) ... (x) xi(a_n) of a codeword."""
    if not len(w):
        raise ValidationError("letters", "codeword must have at least one letter")
    for a in w.letters:
        if a < 0 or a >= e.size:
            raise ValidationError("letter", f"letter {a} not in alphabet of size {e.size}")
    return reduce(tensor, (e.states[a] for a in w.letters))


def push_through(e: CqEnsemble, c: QuantumChannel) -> CqEnsemble:
    """Compose the ensemble with a channel: states become c(xi(a))."""
    if e.dim != c.in_dim:
        raise DimensionMismatch(f"ensemble dim {e.dim} != channel input dim {c.in_dim}")
    return CqEnsemble(e.prior, tuple(apply(c, s) for s in e.states))


def identity_channel(dim: int, out_factorization=None) -> QuantumChannel:
    """The identity map on a dim-dimensional space."""
    return QuantumChannel([np.eye(dim)], out_factorization=out_factorization)


def depolarizing_channel(lam: float) -> QuantumChannel:
    """Qubit depolarizing channel rho -> (1-lam) rho + lam I/2."""
    if not 0.0 <= lam <= 1.0:
        raise ValidationError("parameter", f"depolarizing strength must be in [0,1], got {lam}")
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    i = np.eye(2, dtype=complex)
    return QuantumChannel(
        [
            np.sqrt(1 - 3 * lam / 4) * i,
            np.sqrt(lam / 4) * x,
            np.sqrt(lam / 4) * y,
            np.sqrt(lam / 4) * z,
        ]
    )
