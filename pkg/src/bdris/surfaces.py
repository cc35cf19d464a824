"""
Beyond-diagonal RIS phase-response matrices.

A surface with K phase-response elements is described by one or more complex
matrices, constrained by the circuit topology (architecture) and the serving
mode:

- single-connected: diagonal matrices (each element tuned independently)
- fully-connected:  one dense matrix over all K elements
- group-connected:  block-diagonal, G blocks of K/G elements each

- reflective / transmissive: one matrix, unitary per block
- hybrid:       a reflect/transmit pair with Phi_r^H Phi_r + Phi_t^H Phi_t = I
- multi-sector: S matrices of size (K/S)x(K/S) with sum_s Phi_s^H Phi_s = I

Every combination reduces to the same algebraic statement: partition the
matrix dimension into blocks, stack the per-block sub-matrices of all slots
vertically, and require the stacked tall matrix to be an isometry (A^H A = I).
Single-connected is the block-size-1 case, where the isometry condition is
per-element unit modulus (or a per-element power split for hybrid and
multi-sector). Validation, random generation, and Frobenius-nearest
projection all go through this one formulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

ARCHITECTURES = ("single", "full", "group")
MODES = ("reflective", "transmissive", "hybrid", "multisector")

# Matrices stored dense; block structure is enforced by validation rather
# than a sparse representation, since K stays small at desk scale.


class DimensionError(ValueError):
    """Matrix shapes (or mode/slot structure) disagree with the RisSpec."""


@dataclass(frozen=True)
class RisSpec:
    """Architecture, mode, and element count of one surface.

    group_count is read only when architecture == 'group'; sector_count only
    when mode == 'multisector'. For multi-sector surfaces each sector matrix
    acts on a (K/S)-dimensional space and the group partition applies inside
    it, so group_count must divide K/S.
    """

    num_elements: int                 # K
    architecture: str = "full"
    mode: str = "reflective"
    group_count: int = 1              # G
    sector_count: int = 2             # S

    def __post_init__(self):
        if not isinstance(self.num_elements, int) or self.num_elements < 1:
            raise ValueError(f"num_elements must be a positive integer, got {self.num_elements}")
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "multisector":
            if self.sector_count < 2:
                raise ValueError("multisector mode needs sector_count >= 2")
            if self.num_elements % self.sector_count != 0:
                raise ValueError(
                    f"sector_count {self.sector_count} must divide num_elements {self.num_elements}"
                )
        if self.architecture == "group":
            if self.group_count < 1:
                raise ValueError("group_count must be >= 1")
            if self.matrix_dim % self.group_count != 0:
                raise ValueError(
                    f"group_count {self.group_count} must divide the matrix dimension {self.matrix_dim}"
                )

    @property
    def matrix_dim(self) -> int:
        """Side length of each stored matrix (K, or K/S for multi-sector)."""
        if self.mode == "multisector":
            return self.num_elements // self.sector_count
        return self.num_elements

    @property
    def stack_depth(self) -> int:
        """Number of matrix slots stacked into the isometry constraint."""
        if self.mode == "hybrid":
            return 2
        if self.mode == "multisector":
            return self.sector_count
        return 1

    @property
    def block_size(self) -> int:
        if self.architecture == "single":
            return 1
        if self.architecture == "full":
            return self.matrix_dim
        return self.matrix_dim // self.group_count

    @property
    def num_blocks(self) -> int:
        return self.matrix_dim // self.block_size


@dataclass(frozen=True)
class PhaseResponse:
    """The matrices realizing one surface configuration.

    matrices holds one slot for reflective/transmissive (Phi), two for hybrid
    (Phi_r, Phi_t), and S for multi-sector (Phi_1 .. Phi_S).
    """

    mode: str
    matrices: tuple

    @classmethod
    def reflective(cls, phi: np.ndarray) -> "PhaseResponse":
        return cls("reflective", (np.asarray(phi, dtype=complex),))

    @classmethod
    def transmissive(cls, phi: np.ndarray) -> "PhaseResponse":
        return cls("transmissive", (np.asarray(phi, dtype=complex),))

    @classmethod
    def hybrid(cls, phi_r: np.ndarray, phi_t: np.ndarray) -> "PhaseResponse":
        return cls("hybrid", (np.asarray(phi_r, dtype=complex),
                              np.asarray(phi_t, dtype=complex)))

    @classmethod
    def multisector(cls, mats) -> "PhaseResponse":
        return cls("multisector", tuple(np.asarray(m, dtype=complex) for m in mats))

    @property
    def phi(self) -> np.ndarray:
        return self.matrices[0]

    @property
    def phi_r(self) -> np.ndarray:
        return self.matrices[0]

    @property
    def phi_t(self) -> np.ndarray:
        return self.matrices[1]


@dataclass(frozen=True)
class FeasibilityReport:
    is_feasible: bool
    max_violation: float
    violated_constraint: str     # 'none' when feasible


def _check_shapes(pr: PhaseResponse, spec: RisSpec) -> None:
    if pr.mode != spec.mode:
        raise DimensionError(f"phase response mode {pr.mode!r} does not match spec mode {spec.mode!r}")
    if len(pr.matrices) != spec.stack_depth:
        raise DimensionError(
            f"expected {spec.stack_depth} matrix slot(s) for mode {spec.mode!r}, got {len(pr.matrices)}"
        )
    dim = spec.matrix_dim
    for i, m in enumerate(pr.matrices):
        if m.shape != (dim, dim):
            raise DimensionError(f"matrix slot {i} has shape {m.shape}, expected ({dim}, {dim})")


def _block_support_mask(dim: int, block_size: int) -> np.ndarray:
    idx = np.arange(dim) // block_size
    return idx[:, None] == idx[None, :]


def validate(pr: PhaseResponse, spec: RisSpec, eps_feas: float = 1e-9) -> FeasibilityReport:
    """Check a phase response against its architecture/mode constraint set.

    Parameters
    ----------
    pr : PhaseResponse
    spec : RisSpec
    eps_feas : float
        Largest tolerated absolute residual of any constraint equality.

    Returns
    -------
    FeasibilityReport
        max_violation is the worst entrywise residual across the off-block
        support check and all per-block stacked-isometry checks; at block
        size 1 the isometry residual is | sum_slots |phi_k|^2 - 1 |, i.e.
        unit modulus for one slot and the power split for hybrid/multi-sector.

    Raises
    ------
    DimensionError
        If the mode or matrix shapes disagree with the spec.
    """
    if eps_feas <= 0:
        raise ValueError("eps_feas must be positive")
    _check_shapes(pr, spec)
    dim, bs = spec.matrix_dim, spec.block_size

    off_viol = 0.0
    if bs < dim:
        mask = _block_support_mask(dim, bs)
        off_viol = max(float(np.max(np.abs(m[~mask]))) for m in pr.matrices)

    if bs == 1:
        diags = np.stack([np.diagonal(m) for m in pr.matrices])      # (depth, dim)
        iso_viol = float(np.max(np.abs(np.sum(np.abs(diags) ** 2, axis=0) - 1.0)))
    else:
        iso_viol = 0.0
        eye = np.eye(bs)
        for b in range(spec.num_blocks):
            sl = slice(b * bs, (b + 1) * bs)
            stacked = np.vstack([m[sl, sl] for m in pr.matrices])
            resid = stacked.conj().T @ stacked - eye
            iso_viol = max(iso_viol, float(np.max(np.abs(resid))))

    max_violation = max(off_viol, iso_viol)
    if max_violation <= eps_feas:
        label = "none"
    elif off_viol >= iso_viol:
        label = "off_block_support"
    else:
        label = "block_isometry"
    return FeasibilityReport(max_violation <= eps_feas, max_violation, label)


def _haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    a = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(a)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _dirichlet_columns(depth: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """(depth, n) nonnegative array with unit column sums, uniform on the simplex."""
    e = rng.exponential(1.0, size=(depth, n))
    return e / np.sum(e, axis=0, keepdims=True)


def random_feasible(spec: RisSpec, seed) -> PhaseResponse:
    """Draw a random feasible phase response.

    Distribution choices: diagonal sets draw i.i.d. uniform phases;
    full blocks draw Haar unitaries (QR of a complex Gaussian); hybrid splits
    per-column power as (cos b, sin b) with b ~ U(0, pi/2); multi-sector
    scales per-sector unitaries by a uniform random power split of 1.

    seed may be an integer or a numpy Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dim, bs, depth = spec.matrix_dim, spec.block_size, spec.stack_depth

    if bs == 1:
        if spec.mode == "hybrid":
            beta = rng.uniform(0.0, np.pi / 2.0, dim)
            mags = np.stack([np.cos(beta), np.sin(beta)])
        elif spec.mode == "multisector":
            mags = np.sqrt(_dirichlet_columns(depth, dim, rng))
        else:
            mags = np.ones((1, dim))
        phases = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, (depth, dim)))
        mats = tuple(np.diag(mags[s] * phases[s]) for s in range(depth))
        return PhaseResponse(spec.mode, mats)

    mats = [np.zeros((dim, dim), dtype=complex) for _ in range(depth)]
    for b in range(spec.num_blocks):
        sl = slice(b * bs, (b + 1) * bs)
        if spec.mode == "hybrid":
            beta = rng.uniform(0.0, np.pi / 2.0, bs)
            mats[0][sl, sl] = _haar_unitary(bs, rng) * np.cos(beta)
            mats[1][sl, sl] = _haar_unitary(bs, rng) * np.sin(beta)
        elif spec.mode == "multisector":
            split = _dirichlet_columns(depth, bs, rng)
            for s in range(depth):
                mats[s][sl, sl] = _haar_unitary(bs, rng) * np.sqrt(split[s])
        else:
            mats[0][sl, sl] = _haar_unitary(bs, rng)
    return PhaseResponse(spec.mode, tuple(mats))


def _nearest_stacked_isometry(a: np.ndarray) -> np.ndarray:
    """Frobenius-nearest isometry to a tall (rows >= cols) matrix.

    Full-rank inputs get the polar factor U V^H. Rank-deficient inputs are
    completed deterministically: each null input direction is mapped through
    the stacked identity (first slot I, other slots 0) and orthonormalized
    against the range, falling back to the LAPACK singular basis and then to
    canonical basis vectors if those degenerate.
    """
    rows, cols = a.shape
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s.size and s[0] > 0.0:
        tol = rows * np.finfo(float).eps * s[0]
    else:
        tol = 0.0
    rank = int(np.sum(s > tol))
    if rank == cols:
        return u @ vh

    w = u[:, :rank] @ vh[:rank]
    held = [u[:, i] for i in range(rank)]
    extra = []
    candidates = []
    for j in range(rank, cols):
        v = vh[j].conj()
        lifted = np.zeros(rows, dtype=complex)
        lifted[:cols] = v                      # stacked-identity image of the null direction
        candidates.append(lifted)
    candidates.extend(u[:, j] for j in range(rank, cols))
    candidates.extend(np.eye(rows, dtype=complex)[:, j] for j in range(rows))

    for cand in candidates:
        if len(extra) == cols - rank:
            break
        vec = cand.astype(complex)
        for other in held + extra:
            vec = vec - (other.conj() @ vec) * other
        norm = np.linalg.norm(vec)
        if norm > 1e-10:
            extra.append(vec / norm)
    for j, vec in enumerate(extra):
        w = w + np.outer(vec, vh[rank + j])
    return w


def project_feasible(m, spec: RisSpec) -> PhaseResponse:
    """Project arbitrary matrices onto the feasible set (Frobenius-nearest).

    Off-block entries are zeroed; each per-block stacked sub-matrix is
    replaced by its nearest isometry, i.e. the polar factor
    A (A^H A)^{-1/2}. At block size 1 this is entrywise normalization
    (a zero stack maps to 1 in the first slot). Accepts a PhaseResponse,
    a single matrix, or a sequence of matrices.
    """
    if isinstance(m, PhaseResponse):
        mats_in = m.matrices
    elif isinstance(m, np.ndarray):
        mats_in = (m,)
    else:
        mats_in = tuple(m)
    mats_in = tuple(np.asarray(x, dtype=complex) for x in mats_in)
    _check_shapes(PhaseResponse(spec.mode, mats_in), spec)
    dim, bs, depth = spec.matrix_dim, spec.block_size, spec.stack_depth

    if bs == 1:
        cols = np.stack([np.diagonal(x) for x in mats_in])           # (depth, dim)
        norms = np.sqrt(np.sum(np.abs(cols) ** 2, axis=0))
        safe = norms > 0.0
        out = np.zeros_like(cols)
        out[:, safe] = cols[:, safe] / norms[safe]
        out[0, ~safe] = 1.0                    # zero stack: identity alignment
        mats = tuple(np.diag(out[s]) for s in range(depth))
        return PhaseResponse(spec.mode, mats)

    mats = [np.zeros((dim, dim), dtype=complex) for _ in range(depth)]
    for b in range(spec.num_blocks):
        sl = slice(b * bs, (b + 1) * bs)
        stacked = np.vstack([x[sl, sl] for x in mats_in])
        iso = _nearest_stacked_isometry(stacked)
        for s in range(depth):
            mats[s][sl, sl] = iso[s * bs:(s + 1) * bs, :]
    return PhaseResponse(spec.mode, tuple(mats))


def hardware_complexity(spec: RisSpec):
    """Tunable impedance-component count of the surface.

    Single-connected: K (reflective/transmissive), (3/2)K (hybrid),
    (S+1)K/2 (multi-sector). Fully-connected: (K+1)K/2, any mode.
    Group-connected: (K/G+1)K/2, any mode.

    Returns a builtin int when the count is integral; otherwise the exact
    Fraction is returned as the flagged non-integral case (e.g. hybrid
    single-connected with odd K).
    """
    k = spec.num_elements
    if spec.architecture == "single":
        if spec.mode == "hybrid":
            count = Fraction(3, 2) * k
        elif spec.mode == "multisector":
            count = Fraction(spec.sector_count + 1) * k / 2
        else:
            count = Fraction(k)
    elif spec.architecture == "full":
        count = Fraction(k + 1) * k / 2
    else:
        count = (Fraction(k, spec.group_count) + 1) * k / 2
    return int(count) if count.denominator == 1 else count
