"""The weighting matrices ``H`` that govern contraction, in factored form.

Every scheme in the package contracts in a norm ``||w||_H^2 = w'Hw`` for a
symmetric positive definite ``H`` built from the problem data and the
solver parameters. ``MetricH`` evaluates ``w'Hw`` and ``Hw`` from the
factors (``A``, ``r``, ``Q``) and never assembles the dense matrix.

Kinds and their matrices (``w = (x; lam)`` or ``(x; y)``)::

    palm, npdhg1   [[r A'A + Q, A'], [A, I/r]]
    block          [[diag(r_i A_i'A_i + Q_i), A_i'], [A_i, sum(1/r_i) I]]
    dual_primal    [[diag(Q_i + s_i I), -A_i'], [-A_i, sum(1/r_i) I]]
    npdhg2         [[r I, A'], [A, AA'/r + Q]]
"""

from dataclasses import dataclass

import numpy as np

from ._validation import ParameterError, check_matrix, check_positive

__all__ = ["ProxForm", "ExplicitQ", "MetricH", "KINDS"]

KINDS = ("palm", "block", "dual_primal", "npdhg1", "npdhg2")


@dataclass(frozen=True)
class ProxForm:
    """``Q`` chosen so that the proximal block of ``H`` is ``tau I``.

    For the ``palm``/``block``/``npdhg1`` kinds this is ``Q = tau I - r A'A``;
    for ``npdhg2`` it is ``Q = tau I - AA'/r``.
    """

    tau: float

    def __post_init__(self):
        check_positive(self.tau, "tau")


@dataclass(frozen=True, eq=False)
class ExplicitQ:
    Q: np.ndarray

    def __post_init__(self):
        Q = check_matrix(self.Q, "Q")
        if Q.shape[0] != Q.shape[1]:
            raise ParameterError("Q must be square")
        object.__setattr__(self, "Q", Q)


@dataclass(frozen=True, eq=False)
class _Block:
    A: np.ndarray
    r: float
    q: object
    s: float = 0.0


class MetricH:
    """Factored symmetric positive definite metric.

    Use the classmethod constructors (:meth:`palm`, :meth:`block`,
    :meth:`dual_primal`, :meth:`npdhg1`, :meth:`npdhg2`); vectors are
    stacked as ``(x_1; ...; x_p; lam)``.
    """

    def __init__(self, kind, blocks):
        if kind not in KINDS:
            raise ParameterError(f"unknown metric kind {kind!r}")
        self.kind = kind
        self.blocks = tuple(blocks)
        ms = {b.A.shape[0] for b in self.blocks}
        if len(ms) != 1:
            raise ParameterError("all blocks must share the same number of rows")
        self.m = ms.pop()
        self.sizes = [b.A.shape[1] for b in self.blocks]
        self.n = sum(self.sizes)
        self.dim = self.n + self.m
        ends = np.cumsum(self.sizes)
        self._slices = [slice(e - k, e) for e, k in zip(ends, self.sizes)]
        # weight on the dual block for the block kinds
        self.dual_weight = sum(1.0 / b.r for b in self.blocks)

    @staticmethod
    def _make(A, r, q, s=0.0):
        A = check_matrix(A)
        r = check_positive(r, "r")
        if not isinstance(q, (ProxForm, ExplicitQ)):
            raise ParameterError("q must be ProxForm or ExplicitQ")
        return _Block(A, r, q, float(s))

    @classmethod
    def palm(cls, A, r, q):
        return cls("palm", [cls._make(A, r, q)])

    @classmethod
    def npdhg1(cls, A, r, q):
        return cls("npdhg1", [cls._make(A, r, q)])

    @classmethod
    def npdhg2(cls, A, r, q):
        return cls("npdhg2", [cls._make(A, r, q)])

    @classmethod
    def block(cls, entries):
        """``entries`` is a list of ``(r_i, q_i, A_i)``."""
        return cls("block", [cls._make(A, r, q) for r, q, A in entries])

    @classmethod
    def dual_primal(cls, entries):
        """``entries`` is a list of ``(r_i, q_i, s_i, A_i)``; ``q_i`` must be explicit."""
        out = []
        for r, q, s, A in entries:
            if not isinstance(q, ExplicitQ):
                raise ParameterError("dual_primal metric needs explicit Q_i")
            out.append(cls._make(A, r, q, check_positive(s, "s")))
        return cls("dual_primal", out)

    def split(self, w):
        """Block views of ``w``; a 2-D ``w`` is a stack of row vectors."""
        w = np.asarray(w, dtype=float)
        if w.ndim not in (1, 2) or w.shape[-1] != self.dim:
            raise ParameterError(f"expected vectors of length {self.dim}, got shape {w.shape}")
        return [w[..., sl] for sl in self._slices], w[..., self.n:]

    @staticmethod
    def _dot(u, v):
        # row-wise inner product for stacks, plain dot for vectors
        return np.einsum("...i,...i->...", u, v)

    def _qx(self, blk, x, Ax):
        """``x'Qx`` for the primal-side ``Q`` of the palm-like kinds."""
        if isinstance(blk.q, ProxForm):
            return blk.q.tau * self._dot(x, x) - blk.r * self._dot(Ax, Ax)
        return self._dot(x @ blk.q.Q, x)

    def quadratic_form(self, w):
        """``w'Hw`` from the sum-of-squares decomposition of ``H``.

        ``w`` may be one vector (returns a float) or a stack of row vectors
        (returns one value per row).
        """
        xs, lam = self.split(w)
        dot = self._dot
        if self.kind == "npdhg2":
            blk, x = self.blocks[0], xs[0]
            r = blk.r
            ATl = lam @ blk.A
            z = np.sqrt(r) * x + ATl / np.sqrt(r)
            if isinstance(blk.q, ProxForm):
                qy = blk.q.tau * dot(lam, lam) - dot(ATl, ATl) / r
            else:
                qy = dot(lam @ blk.q.Q, lam)
            total = dot(z, z) + qy
        else:
            total = 0.0
            sign = -1.0 if self.kind == "dual_primal" else 1.0
            for blk, x in zip(self.blocks, xs):
                Ax = x @ blk.A.T
                z = np.sqrt(blk.r) * Ax + sign * lam / np.sqrt(blk.r)
                total = total + dot(z, z)
                if self.kind == "dual_primal":
                    total = total + (blk.s * dot(x, x) + dot(x @ blk.q.Q, x)
                                     - blk.r * dot(Ax, Ax))
                else:
                    total = total + self._qx(blk, x, Ax)
        total = np.maximum(total, 0.0)
        return float(total) if np.ndim(total) == 0 else total

    def norm(self, w):
        return float(np.sqrt(self.quadratic_form(w)))

    def apply(self, w):
        """``Hw`` computed block by block (``w`` a single vector)."""
        w = np.asarray(w, dtype=float)
        if w.ndim != 1:
            raise ParameterError("apply takes a single vector")
        xs, lam = self.split(w)
        if self.kind == "npdhg2":
            blk, x = self.blocks[0], xs[0]
            A, r = blk.A, blk.r
            ATl = A.T @ lam
            top = r * x + ATl
            if isinstance(blk.q, ProxForm):
                bottom = A @ x + blk.q.tau * lam
            else:
                bottom = A @ x + (A @ ATl) / r + blk.q.Q @ lam
            return np.concatenate([top, bottom])
        tops = []
        bottom = self.dual_weight * lam
        for blk, x in zip(self.blocks, xs):
            A, r = blk.A, blk.r
            Ax = A @ x
            if self.kind == "dual_primal":
                tops.append(blk.q.Q @ x + blk.s * x - A.T @ lam)
                bottom = bottom - Ax
                continue
            if isinstance(blk.q, ProxForm):
                top = blk.q.tau * x
            else:
                top = r * (A.T @ Ax) + blk.q.Q @ x
            tops.append(top + A.T @ lam)
            bottom = bottom + Ax
        return np.concatenate(tops + [bottom])

    def step_stats(self, dw):
        """``(||dw||_H, ||primal rows of H dw||)`` from a single product with ``H``."""
        Hdw = self.apply(dw)
        return float(np.sqrt(max(dw @ Hdw, 0.0))), float(np.linalg.norm(Hdw[: self.n]))

    def primal_row(self, w):
        """The primal rows of ``Hw``; for a step ``w^t - w^{t-1}`` this is ``s^t``."""
        return self.apply(w)[: self.n]

    def __repr__(self):
        return f"MetricH(kind={self.kind!r}, sizes={self.sizes}, m={self.m})"
