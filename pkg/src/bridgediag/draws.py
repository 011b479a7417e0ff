"""Posterior draw containers: CSV ingestion, half-splitting, block reshuffling.

Draws keep their chain structure (chains x iterations x dimensions) because
the downstream denominator-ESS computation needs to know which contiguous
segments came from the same Markov chain.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import BridgeDiagError, DimensionError
from .numerics import RngStream


@dataclass(frozen=True)
class DrawsMatrix:
    """Posterior draws in unconstrained space, shape (chains, iters, dim)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 3:
            raise DimensionError(f"draws must be 3-d (chains, iters, dim), got {arr.shape}")
        c, t, d = arr.shape
        if c < 1 or t < 1 or d < 1:
            raise BridgeDiagError(f"need chains >= 1, iters >= 1, dim >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise BridgeDiagError("non-finite draw")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def chains(self) -> int:
        return self.data.shape[0]

    @property
    def iters(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]

    def pooled(self) -> np.ndarray:
        """All draws stacked chain-major, shape (chains * iters, dim)."""
        return self.data.reshape(self.chains * self.iters, self.dim)


@dataclass(frozen=True)
class HalfSplit:
    """Per-chain first/second halves: one half feeds the estimator's posterior
    sum, the other half is used only to fit the proposal distribution."""

    estimation_half: DrawsMatrix
    fit_half: DrawsMatrix


@dataclass(frozen=True)
class BlockPlan:
    """Contiguous within-chain blocks covering every draw exactly once."""

    block_len: int
    blocks: tuple[tuple[int, int, int], ...]  # (chain, start, length)


def split_halves(draws: DrawsMatrix) -> HalfSplit:
    """Split each chain into its first floor(T/2) and remaining iterations.

    The first half becomes the estimation half (the posterior-draw sum),
    the second the proposal-fit half. Order within each half is preserved,
    and the two halves partition the input.
    """
    t = draws.iters
    if t < 4:
        raise BridgeDiagError("too few iterations")
    t1 = t // 2
    return HalfSplit(
        estimation_half=DrawsMatrix(draws.data[:, :t1, :]),
        fit_half=DrawsMatrix(draws.data[:, t1:, :]),
    )


def default_block_len(iters: int) -> int:
    """ceil(sqrt(T)): the standard dependent-bootstrap block-length rate."""
    return int(math.ceil(math.sqrt(iters)))


def make_block_plan(draws: DrawsMatrix, block_len: int) -> BlockPlan:
    if not 1 <= block_len <= draws.iters:
        raise BridgeDiagError(
            f"block_len must be in [1, {draws.iters}], got {block_len}"
        )
    blocks = []
    for c in range(draws.chains):
        for start in range(0, draws.iters, block_len):
            blocks.append((c, start, min(block_len, draws.iters - start)))
    return BlockPlan(block_len=block_len, blocks=tuple(blocks))


def block_reshuffle(rng: RngStream, draws: DrawsMatrix, plan: BlockPlan) -> DrawsMatrix:
    """Permute the plan's blocks globally and re-cut into pseudo-chains.

    The permutation is uniform over block orderings; the concatenated result
    is cut back into the original (chains, iters) layout, so the multiset of
    draws is exactly preserved while local within-block autocorrelation
    survives everywhere except at block boundaries.
    """
    covered = sum(length for _, _, length in plan.blocks)
    if covered != draws.chains * draws.iters:
        raise BridgeDiagError("block plan does not cover the draws")
    order = rng.generator().permutation(len(plan.blocks))
    pieces = []
    for idx in order:
        chain, start, length = plan.blocks[idx]
        pieces.append(draws.data[chain, start : start + length, :])
    flat = np.concatenate(pieces, axis=0)
    return DrawsMatrix(flat.reshape(draws.chains, draws.iters, draws.dim))


def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise BridgeDiagError(f"non-numeric cell at row {row}, column {col}: {text!r}") from None
    if not math.isfinite(value):
        raise BridgeDiagError(f"non-finite draw at row {row}, column {col}")
    return value


def read_draws_csv(path, *, no_chain_cols: bool = False) -> DrawsMatrix:
    """Read draws from CSV with columns ``chain,iteration,theta.1..theta.d``.

    With ``no_chain_cols`` a bare numeric matrix (optionally with a header
    line) is read as a single chain. Chains must all have the same length.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise BridgeDiagError(f"empty draws file: {path}")

    if no_chain_cols:
        start = 0
        try:
            [float(cell) for cell in rows[0]]
        except ValueError:
            start = 1  # header line
        if start == len(rows):
            raise BridgeDiagError(f"no data rows in {path}")
        width = len(rows[start])
        data = np.empty((len(rows) - start, width))
        for i, row in enumerate(rows[start:]):
            if len(row) != width:
                raise BridgeDiagError(f"ragged row {start + i + 1}: {len(row)} cells, expected {width}")
            for j, cell in enumerate(row):
                data[i, j] = _parse_cell(cell, start + i + 1, j + 1)
        return DrawsMatrix(data[None, :, :])

    header = [h.strip() for h in rows[0]]
    if len(header) < 3 or header[0] != "chain" or header[1] != "iteration":
        raise BridgeDiagError(
            "expected header 'chain,iteration,theta.1,...'; got " + ",".join(header)
        )
    dim = len(header) - 2
    by_chain: dict[int, list[list[float]]] = {}
    chain_order: list[int] = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != dim + 2:
            raise BridgeDiagError(f"ragged row {i}: {len(row)} cells, expected {dim + 2}")
        try:
            chain_id = int(float(row[0]))
        except ValueError:
            raise BridgeDiagError(f"non-numeric cell at row {i}, column 1: {row[0]!r}") from None
        point = [_parse_cell(cell, i, j + 3) for j, cell in enumerate(row[2:])]
        if chain_id not in by_chain:
            by_chain[chain_id] = []
            chain_order.append(chain_id)
        by_chain[chain_id].append(point)

    lengths = {len(by_chain[c]) for c in chain_order}
    if len(lengths) != 1:
        raise BridgeDiagError("unbalanced chains")
    data = np.array([by_chain[c] for c in chain_order], dtype=float)
    return DrawsMatrix(data)


def write_draws_csv(path, draws: DrawsMatrix) -> None:
    """Write the standard schema with 17 significant digits (lossless round trip)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["chain", "iteration"] + [f"theta.{j + 1}" for j in range(draws.dim)])
        for c in range(draws.chains):
            for t in range(draws.iters):
                writer.writerow(
                    [c + 1, t + 1] + [f"{v:.17g}" for v in draws.data[c, t, :]]
                )
