"""Real-coordinate embedding of block-Hermitian matrix spaces.

Every builtin non-polytope model represents a system as a direct sum of
Hermitian matrix blocks (complex, or real symmetric for real quantum
systems).  A block of complex dimension n is embedded isometrically into
n^2 real coordinates: the n diagonal entries first, then for every upper
pair (i, j), i < j, in row-major order the two numbers sqrt(2)*Re H_ij and
sqrt(2)*Im H_ij.  Real blocks drop the imaginary coordinate.  Under this
embedding the trace inner product <A, B> = tr(AB) becomes the Euclidean
dot product, which is what makes states and their dagger effects share
coordinates downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class BlockStructure:
    """Direct sum of Hermitian blocks: complex dims plus the scalar field."""

    dims: tuple[int, ...]
    field: str = "C"  # 'C' complex Hermitian, 'R' real symmetric

    def __post_init__(self):
        if self.field not in ("C", "R"):
            raise ValueError(f"unknown field {self.field!r}")
        if not self.dims or any(n < 1 for n in self.dims):
            raise ValueError("block dims must be positive")

    @property
    def block_count(self) -> int:
        return len(self.dims)

    def block_coord_dim(self, n: int) -> int:
        if self.field == "C":
            return n * n
        return n * (n + 1) // 2

    @property
    def coord_dim(self) -> int:
        return sum(self.block_coord_dim(n) for n in self.dims)

    @property
    def hilbert_dim(self) -> int:
        return sum(self.dims)

    def coord_offsets(self) -> list[int]:
        offs, acc = [], 0
        for n in self.dims:
            offs.append(acc)
            acc += self.block_coord_dim(n)
        return offs

    def hilbert_offsets(self) -> list[int]:
        offs, acc = [], 0
        for n in self.dims:
            offs.append(acc)
            acc += n
        return offs


def herm_to_vec(H: np.ndarray, field: str = "C") -> np.ndarray:
    """Embed one Hermitian (or real symmetric) block into real coordinates."""
    H = np.asarray(H)
    n = H.shape[0]
    if field == "C":
        out = np.empty(n * n)
    else:
        out = np.empty(n * (n + 1) // 2)
    out[:n] = H.diagonal().real
    k = n
    for i in range(n):
        for j in range(i + 1, n):
            out[k] = _SQRT2 * H[i, j].real
            k += 1
            if field == "C":
                out[k] = _SQRT2 * H[i, j].imag
                k += 1
    return out


def vec_to_herm(x: np.ndarray, n: int, field: str = "C") -> np.ndarray:
    """Inverse of herm_to_vec for a single block of dimension n."""
    x = np.asarray(x, dtype=float)
    dtype = complex if field == "C" else float
    H = np.zeros((n, n), dtype=dtype)
    np.fill_diagonal(H, x[:n])
    k = n
    for i in range(n):
        for j in range(i + 1, n):
            re = x[k] / _SQRT2
            k += 1
            if field == "C":
                im = x[k] / _SQRT2
                k += 1
                H[i, j] = re + 1j * im
                H[j, i] = re - 1j * im
            else:
                H[i, j] = re
                H[j, i] = re
    return H


def blocks_to_vec(blocks: list[np.ndarray], structure: BlockStructure) -> np.ndarray:
    if len(blocks) != structure.block_count:
        raise ValueError("block count mismatch")
    parts = []
    for B, n in zip(blocks, structure.dims):
        if B.shape != (n, n):
            raise ValueError("block shape mismatch")
        parts.append(herm_to_vec(B, structure.field))
    return np.concatenate(parts)


def vec_to_blocks(x: np.ndarray, structure: BlockStructure) -> list[np.ndarray]:
    x = np.asarray(x, dtype=float)
    if x.shape != (structure.coord_dim,):
        raise ValueError("coordinate length mismatch")
    blocks, pos = [], 0
    for n in structure.dims:
        w = structure.block_coord_dim(n)
        blocks.append(vec_to_herm(x[pos : pos + w], n, structure.field))
        pos += w
    return blocks


def vec_to_total(x: np.ndarray, structure: BlockStructure) -> np.ndarray:
    """Full Hilbert-space matrix: blocks on the diagonal, zeros across blocks."""
    dtype = complex if structure.field == "C" else float
    DH = structure.hilbert_dim
    M = np.zeros((DH, DH), dtype=dtype)
    for B, off, n in zip(
        vec_to_blocks(x, structure), structure.hilbert_offsets(), structure.dims
    ):
        M[off : off + n, off : off + n] = B
    return M


def total_to_vec(M: np.ndarray, structure: BlockStructure, check_tol: float | None = None):
    """Project a Hilbert-space matrix back to block coordinates.

    When check_tol is given, also return the off-block residual so callers can
    detect superselection violations instead of silently discarding them.
    """
    blocks = []
    mask = np.zeros(M.shape, dtype=bool)
    for off, n in zip(structure.hilbert_offsets(), structure.dims):
        blocks.append(M[off : off + n, off : off + n])
        mask[off : off + n, off : off + n] = True
    x = blocks_to_vec([np.asarray(b) for b in blocks], structure)
    if check_tol is None:
        return x
    residual = float(np.abs(M[~mask]).max()) if (~mask).any() else 0.0
    return x, residual


def conjugation_matrix(kraus: list[np.ndarray], structure: BlockStructure) -> np.ndarray:
    """Real coordinate matrix of X -> sum_k K X K† for block-structured X.

    The Kraus operators act on the total Hilbert space; the image is projected
    back onto the block structure (operators used here must preserve it).
    """
    D = structure.coord_dim
    M = np.empty((D, D))
    for j in range(D):
        e = np.zeros(D)
        e[j] = 1.0
        X = vec_to_total(e, structure)
        Y = sum(K @ X @ K.conj().T for K in kraus)
        M[:, j] = total_to_vec(np.asarray(Y), structure)
    return M


def block_eigh(x: np.ndarray, structure: BlockStructure):
    """Eigendecompose coordinates block by block.

    Returns a list of (block_index, eigenvalue, unit_vector) triples, one per
    Hilbert-space dimension, with vectors living inside their own block.
    """
    out = []
    for b, B in enumerate(vec_to_blocks(x, structure)):
        w, V = np.linalg.eigh(B)
        for i in range(len(w)):
            out.append((b, float(w[i]), V[:, i].copy()))
    return out


def pure_block_vec(structure: BlockStructure, block: int, psi: np.ndarray) -> np.ndarray:
    """Coordinates of the rank-one state |psi><psi| supported in one block."""
    psi = np.asarray(psi)
    n = structure.dims[block]
    if psi.shape != (n,):
        raise ValueError("vector does not fit the block")
    nrm = np.linalg.norm(psi)
    if nrm < 1e-15:
        raise ValueError("zero vector")
    psi = psi / nrm
    P = np.outer(psi, psi.conj())
    if structure.field == "R":
        P = P.real
    blocks = [np.zeros((m, m), dtype=complex if structure.field == "C" else float)
              for m in structure.dims]
    blocks[block] = P
    return blocks_to_vec(blocks, structure)
