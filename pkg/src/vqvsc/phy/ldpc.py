"""Quasi-cyclic LDPC code (IEEE 802.11n, n=648, rate 3/4) with belief-propagation decoding."""

from functools import lru_cache
from importlib import resources
from typing import NamedTuple

import numpy as np

from ..exceptions import BadLength
from ..validation import check_bits

N_CODE = 648
K_INFO = 486
LLR_CLIP = 30.0
MIN_SUM_SCALE = 0.8
MAX_ITERS = 50
ALIST = "ieee80211n_648_r34.alist"
_TANH_LIMIT = 1.0 - 1e-12


def read_alist(text):
    """Parse MacKay's alist format into a dense 0/1 parity-check matrix."""
    lines = [ln.split() for ln in text.strip().splitlines()]
    n, m = int(lines[0][0]), int(lines[0][1])
    H = np.zeros((m, n), dtype=np.uint8)
    for col, line in enumerate(lines[4 : 4 + n]):
        for entry in line:
            if int(entry):
                H[int(entry) - 1, col] = 1
    return H


def gf2_inv(A):
    """Inverse of a square binary matrix by Gauss-Jordan elimination."""
    A = np.asarray(A, dtype=np.uint8) % 2
    n = A.shape[0]
    aug = np.concatenate([A, np.eye(n, dtype=np.uint8)], axis=1)
    for c in range(n):
        rows = np.flatnonzero(aug[c:, c])
        if rows.size == 0:
            raise np.linalg.LinAlgError("matrix is singular over GF(2)")
        r = rows[0] + c
        if r != c:
            aug[[c, r]] = aug[[r, c]]
        hit = aug[:, c].astype(bool)
        hit[c] = False
        aug[hit] ^= aug[c]
    return aug[:, n:]


class DecodeResult(NamedTuple):
    info: np.ndarray
    parity_ok: np.ndarray
    iterations: np.ndarray


class LdpcCode:
    """Systematic encoder and belief-propagation decoder for a parity-check matrix.

    The parity part (last ``m`` columns) of ``H`` must be invertible; the
    generator is derived once as ``parity = inv(H_p) @ H_i @ info``.
    """

    def __init__(self, H):
        self.H = np.asarray(H, dtype=np.uint8)
        self.m, self.n = self.H.shape
        self.k = self.n - self.m
        hp_inv = gf2_inv(self.H[:, self.k :])
        self._parity_map = (hp_inv.astype(np.int64) @ self.H[:, : self.k]) % 2
        self._build_graph()

    @classmethod
    def from_alist(cls, text):
        return cls(read_alist(text))

    def _build_graph(self):
        rows, cols = np.nonzero(self.H)  # sorted by row
        self.edge_row, self.edge_col = rows, cols
        n_edges = rows.size
        row_deg = np.bincount(rows, minlength=self.m)
        col_deg = np.bincount(cols, minlength=self.n)
        # padded check view: edge ids per check row, pad with n_edges
        self._cview = np.full((self.m, row_deg.max()), n_edges)
        starts = np.concatenate([[0], np.cumsum(row_deg)[:-1]])
        for r in range(self.m):
            self._cview[r, : row_deg[r]] = np.arange(starts[r], starts[r] + row_deg[r])
        # padded variable view
        self._vview = np.full((self.n, col_deg.max()), n_edges)
        fill = np.zeros(self.n, dtype=np.int64)
        for e, c in enumerate(cols):
            self._vview[c, fill[c]] = e
            fill[c] += 1
        self._cmask = self._cview < n_edges
        self.n_edges = n_edges

    def encode(self, info):
        """Encode one block (shape ``(k,)``) or a batch (shape ``(b, k)``)."""
        info = np.asarray(info)
        single = info.ndim == 1
        batch = np.atleast_2d(info)
        if batch.shape[1] != self.k:
            raise BadLength(f"expected {self.k} info bits, got {batch.shape[1]}")
        check_bits(batch)
        batch = batch.astype(np.int64)
        parity = (batch @ self._parity_map.T) % 2
        code = np.concatenate([batch, parity], axis=1).astype(np.uint8)
        return code[0] if single else code

    def syndrome(self, words):
        words = np.atleast_2d(np.asarray(words, dtype=np.int64))
        return (words @ self.H.T.astype(np.int64)) % 2

    def _check_update(self, v2c, algorithm, scale):
        """Check-to-variable messages on the padded check view, shape ``(b, m, dc)``."""
        b = v2c.shape[0]
        msg = np.concatenate([v2c, np.full((b, 1), np.inf)], axis=1)[:, self._cview]
        if algorithm == "min_sum":
            mag = np.abs(msg)
            neg = np.where(self._cmask, msg < 0, False)
            parity = np.logical_xor.reduce(neg, axis=2)
            order = np.argsort(mag, axis=2)
            min1 = np.take_along_axis(mag, order[:, :, :1], axis=2)
            min2 = np.take_along_axis(mag, order[:, :, 1:2], axis=2)
            pos = np.arange(mag.shape[2])[None, None, :]
            out_mag = np.where(pos == order[:, :, :1], min2, min1)
            return scale * np.where(parity[:, :, None] ^ neg, -out_mag, out_mag)
        # sum-product: leave-one-out tanh products via prefix/suffix products
        t = np.tanh(msg / 2.0)
        ones = np.ones(t.shape[:2] + (1,))
        prefix = np.cumprod(np.concatenate([ones, t[:, :, :-1]], axis=2), axis=2)
        suffix = np.cumprod(np.concatenate([ones, t[:, :, :0:-1]], axis=2), axis=2)[:, :, ::-1]
        ext = np.clip(prefix * suffix, -_TANH_LIMIT, _TANH_LIMIT)
        return 2.0 * np.arctanh(ext)

    def decode(self, llr, max_iters=MAX_ITERS, algorithm="sum_product", scale=MIN_SUM_SCALE):
        """Belief-propagation decoding; positive LLR favours bit 0.

        ``algorithm`` is ``"sum_product"`` (default) or ``"min_sum"``
        (normalised by ``scale``). Accepts one block or a batch. Each block
        stops as soon as its hard decision satisfies every check;
        ``iterations`` counts the rounds run. Blocks that never converge
        report the decision that violated the fewest checks.
        """
        if algorithm not in ("sum_product", "min_sum"):
            raise ValueError(f"unknown decoding algorithm {algorithm!r}")
        llr = np.asarray(llr, dtype=np.float64)
        single = llr.ndim == 1
        llr = np.atleast_2d(llr)
        if llr.shape[1] != self.n:
            raise BadLength(f"expected {self.n} LLRs, got {llr.shape[1]}")
        llr = np.clip(np.nan_to_num(llr), -LLR_CLIP, LLR_CLIP)
        n_blocks = llr.shape[0]
        hard = (llr < 0).astype(np.uint8)
        best = hard.copy()
        best_weight = self.syndrome(hard).sum(axis=1)
        iterations = np.zeros(n_blocks, dtype=np.int64)
        ok = np.zeros(n_blocks, dtype=bool)
        active = np.arange(n_blocks)
        v2c = llr[:, self.edge_col].copy()
        for it in range(1, max_iters + 1):
            if active.size == 0:
                break
            view = self._check_update(v2c[active], algorithm, scale)
            c2v = np.zeros((active.size, self.n_edges + 1))
            np.put_along_axis(
                c2v,
                np.broadcast_to(self._cview.reshape(1, -1), (active.size, self._cview.size)),
                view.reshape(active.size, -1),
                axis=1,
            )
            c2v[:, -1] = 0.0
            total = llr[active] + c2v[:, self._vview].sum(axis=2)
            v2c[active] = total[:, self.edge_col] - c2v[:, :-1]
            hard[active] = (total < 0).astype(np.uint8)
            iterations[active] = it
            weight = self.syndrome(hard[active]).sum(axis=1)
            better = weight < best_weight[active]
            best[active[better]] = hard[active[better]]
            best_weight[active[better]] = weight[better]
            done = weight == 0
            ok[active[done]] = True
            active = active[~done]
        info = np.where(ok[:, None], hard, best)[:, : self.k]
        if single:
            return DecodeResult(info[0], bool(ok[0]), int(iterations[0]))
        return DecodeResult(info, ok, iterations)


@lru_cache(maxsize=1)
def default_code() -> LdpcCode:
    text = resources.files("vqvsc.phy").joinpath("data", ALIST).read_text()
    return LdpcCode.from_alist(text)


def ldpc_encode(info):
    return default_code().encode(info)


def ldpc_decode(llr, **kwargs):
    return default_code().decode(llr, **kwargs)
