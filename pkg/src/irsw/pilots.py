"""IRS training phase matrices, activation patterns and the LS-MSE objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CONDITION_LIMIT = 1e12


@dataclass
class PhaseMatrix:
    """An M x B training matrix with unit-modulus (or masked-to-zero) entries."""

    values: np.ndarray
    kind: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 2:
            raise ValueError("phase matrix must be 2-dimensional")
        mags = np.abs(self.values)
        on = np.isclose(mags, 1.0, atol=1e-9)
        off = mags == 0.0
        if not np.all(on | off):
            raise ValueError("phase matrix entries must have magnitude 1 (active) or 0 (masked)")

    @property
    def m(self):
        return self.values.shape[0]

    @property
    def b(self):
        return self.values.shape[1]

    def gram(self):
        return self.values @ self.values.conj().T


def dft_matrix(n):
    """DFT design: entry (i, k) = exp(-j 2 pi i k / n); Gram is n*I."""
    if n < 1:
        raise ValueError("order must be >= 1")
    idx = np.arange(n)
    return PhaseMatrix(np.exp(-2j * np.pi * np.outer(idx, idx) / n), "dft")


def hadamard_matrix(n):
    """Sylvester Hadamard design (+-1 entries); n must be a power of 2."""
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"Hadamard order {n} is not a power of 2; use the DFT design instead")
    h = np.ones((1, 1))
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return PhaseMatrix(h.astype(np.complex128), "hadamard")


def random_unimodular(m, b, rng):
    """i.i.d. unit-modulus entries with phases uniform on [0, 2*pi)."""
    if m < 1 or b < 1:
        raise ValueError("matrix dims must be >= 1")
    return PhaseMatrix(np.exp(2j * np.pi * rng.uniform(0.0, 1.0, (m, b))), "random_unimodular")


def quantize_phases(psi, bits):
    """Snap active phases to the nearest of 2**bits uniform grid points."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    step = 2.0 * np.pi / (2 ** bits)
    mags = np.abs(psi.values)
    snapped = np.round(np.mod(np.angle(psi.values), 2.0 * np.pi) / step) * step
    return PhaseMatrix(mags * np.exp(1j * snapped), f"quantized({bits})")


def ls_mse_objective(psi, n_t, sigma_n2):
    """LS estimation MSE of a design: N_t * sigma_n^2 * tr{(Psi Psi^H)^-1}."""
    gram = psi.gram()
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise np.linalg.LinAlgError(
            f"design Gram matrix is singular or ill-conditioned (cond={cond:.3g}); invalid for LS"
        )
    trace_inv = np.trace(np.linalg.inv(gram)).real
    return float(n_t * sigma_n2 * trace_inv)


@dataclass
class ActivationPattern:
    """Binary on/off mask over the IRS grid selecting the B active elements."""

    rows: int
    cols: int
    mask: np.ndarray  # bool, shape (rows, cols)
    kind: str

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != (self.rows, self.cols):
            raise ValueError("mask shape must match the grid")

    @property
    def b(self):
        return int(self.mask.sum())

    @property
    def m(self):
        return self.rows * self.cols

    def active_indices(self):
        """Row-major element indices of active cells, ascending."""
        return np.flatnonzero(self.mask.reshape(-1))


def make_pattern(kind, grid_rows, grid_cols, b, rng=None):
    """Build one of the four activation patterns over a grid.

    column: the first b/grid_rows columns fully active.
    row:    the first b/grid_cols rows fully active.
    random: b cells uniform without replacement (needs rng).
    proposed: column 0 fully active; the remaining b - grid_rows cells are
        spread one per row along a wrapping diagonal through the other
        columns, so extras load rows and columns as evenly as possible.
    """
    m = grid_rows * grid_cols
    if not 1 <= b <= m:
        raise ValueError(f"b={b} out of range for a {grid_rows}x{grid_cols} grid")
    mask = np.zeros((grid_rows, grid_cols), dtype=bool)

    if kind == "column":
        if b % grid_rows != 0:
            raise ValueError("column pattern needs b divisible by grid_rows")
        mask[:, : b // grid_rows] = True
    elif kind == "row":
        if b % grid_cols != 0:
            raise ValueError("row pattern needs b divisible by grid_cols")
        mask[: b // grid_cols, :] = True
    elif kind == "random":
        if rng is None:
            raise ValueError("random pattern needs an rng")
        chosen = rng.choice(m, size=b, replace=False)
        mask.reshape(-1)[chosen] = True
    elif kind == "proposed":
        if b < grid_rows:
            raise ValueError("proposed pattern needs b >= grid_rows for the full first column")
        mask[:, 0] = True
        extras = b - grid_rows
        if extras > 0 and grid_cols == 1:
            raise ValueError("no free columns for extras on a single-column grid")
        full_passes, remainder = divmod(extras, grid_rows)
        row_order = []
        for _ in range(full_passes):
            row_order.extend(range(grid_rows))
        if remainder:
            row_order.extend(int(i * grid_rows / remainder) for i in range(remainder))
        for pass_idx, r in enumerate(row_order):
            c = 1 + (r + pass_idx // grid_rows) % (grid_cols - 1)
            while mask[r, c]:
                c = 1 + (c % (grid_cols - 1))
            mask[r, c] = True
    else:
        raise ValueError(f"unknown pattern kind {kind!r}")

    assert int(mask.sum()) == b
    return ActivationPattern(rows=grid_rows, cols=grid_cols, mask=mask, kind=kind)


def reduce_psi(base, pattern):
    """Lift a B x B active design to M x B, zero rows at deactivated elements.

    Active element rows (ascending element index) carry the base rows in
    order; a deactivated element reflects nothing, hence its all-zero row.
    """
    active = pattern.active_indices()
    if base.values.shape != (active.size, active.size):
        raise ValueError(
            f"base design is {base.values.shape}, pattern has {active.size} active elements"
        )
    out = np.zeros((pattern.m, active.size), dtype=np.complex128)
    out[active, :] = base.values
    return PhaseMatrix(out, base.kind)


def compress_rows(psi, pattern):
    """Inverse of reduce_psi: gather the active-element rows back into B x B."""
    active = pattern.active_indices()
    if psi.values.shape[0] != pattern.m:
        raise ValueError("matrix row count does not match the pattern grid")
    return PhaseMatrix(psi.values[active, :], psi.kind)


def export_pattern(pattern, path):
    """Write the pattern as text: one 'row,col,active' line per element."""
    lines = [f"# pattern kind={pattern.kind} b={pattern.b}"]
    for r in range(pattern.rows):
        for c in range(pattern.cols):
            lines.append(f"{r},{c},{1 if pattern.mask[r, c] else 0}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
