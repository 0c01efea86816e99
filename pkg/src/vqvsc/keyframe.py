"""Adaptive key-frame scheduling.

Transmitter side: per-frame importance scores, the SNR -> key-frame-ratio
polynomial model, top-M mask selection and retransmission budgeting.
Receiver side: gap computation and the seam that stitches key and
interpolated frames back together.
"""

import math
import warnings

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import metrics
from .exceptions import BadConfig, BudgetUnderflow, CountMismatch, NonPositiveSnr, SingularSystem
from .interp import Interpolator, reconstruct_midframe
from .validation import check_sequence

MAX_SCORE = 1e9
REGULARIZERS = ("none", "L1", "L2")
CD_TOL = 1e-10
CD_MAX_ITER = 10_000


def db_to_linear(gamma_db):
    return np.power(10.0, np.asarray(gamma_db, dtype=np.float64) / 10.0)


def importance_scores(seq, kind=None, metric="one_minus_ssim"):
    """How hard each frame is to rebuild from its two neighbours.

    Endpoints get :data:`MAX_SCORE` so they always win top-M selection.
    """
    seq = check_sequence(seq)
    kind = kind or Interpolator()
    if metric == "one_minus_ssim":
        score = lambda rec, ref: 1.0 - metrics.ssim(rec, ref)  # noqa: E731
    elif metric == "mse":
        score = metrics.mse
    else:
        raise BadConfig(f"unknown importance metric {metric!r}")
    n = seq.shape[0]
    beta = np.empty(n, dtype=np.float64)
    beta[0] = beta[-1] = MAX_SCORE
    for i in range(1, n - 1):
        beta[i] = score(reconstruct_midframe(seq[i - 1], seq[i + 1], kind), seq[i])
    return beta


def _design(log_gamma, degree):
    return np.vander(np.asarray(log_gamma, dtype=np.float64), degree + 1, increasing=True)


def _soft(x, thresh):
    return math.copysign(max(abs(x) - thresh, 0.0), x)


def _solve(X, rho, reg, upsilon):
    if upsilon < 0:
        raise BadConfig("regularisation weight must be >= 0")
    if reg not in REGULARIZERS:
        raise BadConfig(f"unknown regulariser {reg!r}")
    n_coef = X.shape[1]
    if reg == "none" or upsilon == 0:
        if np.linalg.matrix_rank(X) < n_coef:
            raise SingularSystem("design matrix is rank deficient and unregularised")
        return np.linalg.lstsq(X, rho, rcond=None)[0]
    if reg == "L2":
        return np.linalg.solve(X.T @ X + upsilon * np.eye(n_coef), X.T @ rho)
    # L1: cyclic coordinate descent on sum(err^2) + upsilon * |a|_1
    a = np.zeros(n_coef)
    col_sq = (X * X).sum(axis=0)
    resid = rho - X @ a
    for _ in range(CD_MAX_ITER):
        max_step = 0.0
        for i in range(n_coef):
            if col_sq[i] == 0.0:
                continue
            old = a[i]
            partial = X[:, i] @ resid + col_sq[i] * old
            a[i] = _soft(partial, upsilon / 2.0) / col_sq[i]
            if a[i] != old:
                resid -= X[:, i] * (a[i] - old)
                max_step = max(max_step, abs(a[i] - old))
        if max_step < CD_TOL:
            break
    return a


class RateModel(RegressorMixin, BaseEstimator):
    """Polynomial map from channel SNR to key-frame ratio.

    The model is ``rho = sum_i a_i * ln(gamma)**i`` with ``gamma`` the linear
    SNR. The estimator surface takes SNR in dB (``fit(snr_db, rho)``);
    :func:`fit_rate_model` and :func:`predict_rho` take linear SNR.

    Parameters
    ----------
    degree : int
        Polynomial degree ``I``.
    reg : {"none", "L1", "L2"}
        Penalty on the coefficients.
    upsilon : float
        Penalty weight.
    """

    def __init__(self, degree=2, reg="L2", upsilon=0.0):
        self.degree = degree
        self.reg = reg
        self.upsilon = upsilon

    def fit(self, X, y):
        snr_db = np.asarray(X, dtype=np.float64).ravel()
        rho = np.asarray(y, dtype=np.float64).ravel()
        if snr_db.size != rho.size:
            raise BadConfig("SNR and ratio sample counts differ")
        if snr_db.size < self.degree + 1:
            raise BadConfig(f"need at least {self.degree + 1} samples for degree {self.degree}")
        log_gamma = snr_db * (math.log(10.0) / 10.0)
        self.coef_ = _solve(_design(log_gamma, self.degree), rho, self.reg, float(self.upsilon))
        return self

    def _raw(self, log_gamma):
        check_is_fitted(self, "coef_")
        return _design(log_gamma, len(self.coef_) - 1) @ self.coef_

    def predict(self, X):
        """Unclamped model output for SNR values in dB."""
        snr_db = np.asarray(X, dtype=np.float64).ravel()
        return self._raw(snr_db * (math.log(10.0) / 10.0))

    @classmethod
    def from_coefficients(cls, coef, reg="none", upsilon=0.0):
        model = cls(degree=len(coef) - 1, reg=reg, upsilon=upsilon)
        model.coef_ = np.asarray(coef, dtype=np.float64)
        return model

    def save(self, path):
        check_is_fitted(self, "coef_")
        lines = [f"{len(self.coef_) - 1} {self.reg} {float(self.upsilon)!r}"]
        lines += [repr(float(c)) for c in self.coef_]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        degree, reg, upsilon = lines[0].split()
        coef = [float(v) for v in lines[1:]]
        if len(coef) != int(degree) + 1:
            raise BadConfig(f"{path}: expected {int(degree) + 1} coefficients, got {len(coef)}")
        return cls.from_coefficients(coef, reg=reg, upsilon=float(upsilon))


def fit_rate_model(gamma, rho, degree, reg="none", upsilon=0.0):
    """Fit a :class:`RateModel` from linear SNR samples."""
    gamma = np.atleast_1d(np.asarray(gamma, dtype=np.float64))
    if np.any(gamma <= 0):
        raise NonPositiveSnr("linear SNR samples must be positive")
    return RateModel(degree=degree, reg=reg, upsilon=upsilon).fit(10.0 * np.log10(gamma), rho)


def predict_rho(model, gamma, n_frames):
    """Key-frame ratio for linear SNR ``gamma``, clamped to ``[2/N, 1]``."""
    if gamma <= 0:
        raise NonPositiveSnr("linear SNR must be positive")
    raw = float(model._raw(np.array([math.log(gamma)]))[0])
    return min(max(raw, 2.0 / n_frames), 1.0)


def keyframe_count(rho, n_frames):
    return int(min(max(math.floor(rho * n_frames + 0.5), 2), n_frames))


def select_keyframes(beta, rho):
    """Mark the ``M = clamp(round(rho*N), 2, N)`` highest-scoring frames."""
    beta = np.asarray(beta, dtype=np.float64)
    n = beta.size
    m = keyframe_count(rho, n)
    order = np.argsort(-beta, kind="stable")
    v = np.zeros(n, dtype=np.uint8)
    v[order[:m]] = 1
    return v


def gaps_from_mask(v):
    idx = np.flatnonzero(np.asarray(v))
    return np.diff(idx) - 1


def extract_keyframes(seq, v):
    return np.asarray(seq)[np.asarray(v).astype(bool)]


def seam(keys, fills, v):
    """Interleave key frames and filler frames according to mask ``v``."""
    v = np.asarray(v).astype(bool)
    keys = list(keys)
    fills = list(fills)
    if len(keys) != int(v.sum()) or len(fills) != int((~v).sum()):
        raise CountMismatch(
            f"mask wants {int(v.sum())} keys and {int((~v).sum())} fills, "
            f"got {len(keys)} and {len(fills)}"
        )
    key_iter, fill_iter = iter(keys), iter(fills)
    return np.stack([next(key_iter) if bit else next(fill_iter) for bit in v])


def schedule_retransmissions(beta, v, gamma, rho_ref, model):
    """Per-key-frame transmission counts under a fixed frame budget.

    The budget is ``floor(rho_ref * N)`` frame payloads, i.e. what the
    non-adaptive scheme would send. Each key frame is sent once; spare slots
    go round-robin to key frames in descending importance, each capped at
    ``floor(rho_ref / rho(gamma))`` copies.
    """
    beta = np.asarray(beta, dtype=np.float64)
    v = np.asarray(v).astype(bool)
    n = v.size
    key_idx = np.flatnonzero(v)
    m = key_idx.size
    counts = np.ones(m, dtype=np.int64)
    rho = predict_rho(model, gamma, n)
    if rho_ref < rho:
        warnings.warn(
            f"reference ratio {rho_ref} below predicted ratio {rho}; no retransmissions",
            BudgetUnderflow,
            stacklevel=2,
        )
        return counts
    cap = math.floor(rho_ref / rho + 1e-9)
    extras = max(math.floor(rho_ref * n + 1e-9) - m, 0)
    order = np.argsort(-beta[key_idx], kind="stable")
    while extras > 0:
        granted = False
        for k in order:
            if extras == 0:
                break
            if counts[k] < cap:
                counts[k] += 1
                extras -= 1
                granted = True
        if not granted:
            break
    return counts


class KeyFrameExtractor(TransformerMixin, BaseEstimator):
    """Adaptive key-frame extractor.

    ``fit`` scores a video; ``transform`` returns its key frames. The ratio
    comes from ``rate_model`` at ``snr_db`` when both are given, otherwise
    from the fixed ``rho``.
    """

    def __init__(self, interpolator=None, metric="one_minus_ssim", rate_model=None, rho=0.5, snr_db=None):
        self.interpolator = interpolator
        self.metric = metric
        self.rate_model = rate_model
        self.rho = rho
        self.snr_db = snr_db

    def fit(self, X, y=None):
        seq = check_sequence(X)
        self.importance_scores_ = importance_scores(seq, self.interpolator, self.metric)
        self.n_frames_ = seq.shape[0]
        self.ratio_ = self._ratio()
        self.mask_ = select_keyframes(self.importance_scores_, self.ratio_)
        return self

    def _ratio(self):
        if self.rate_model is not None and self.snr_db is not None:
            return predict_rho(self.rate_model, float(db_to_linear(self.snr_db)), self.n_frames_)
        return float(self.rho)

    def transform(self, X):
        check_is_fitted(self, "mask_")
        seq = check_sequence(X)
        if seq.shape[0] != self.n_frames_:
            raise CountMismatch("sequence length differs from the fitted one")
        return extract_keyframes(seq, self.mask_)
