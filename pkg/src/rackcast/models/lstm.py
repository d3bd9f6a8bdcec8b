"""Single-layer LSTM regressor with a linear head, trained by backpropagation
through time and Adam.

Tabular rows become sequences per series: the input for a row is the window
of the last ``window`` feature vectors of its group ending at that row, and
the target is that row's sales. Windows that reach before the earliest known
period are left-padded with the earliest vector.
"""

from __future__ import annotations

import numpy as np

from ..config import LstmParams
from ..errors import TrainingDataError
from ..features import FeatureMatrix
from .base import ModelId, RackModel, check_columns

PARAM_NAMES = ("Wx", "Wh", "b", "Wy", "by")


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def init_weights(n_inputs: int, hidden: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    bound = 1.0 / np.sqrt(hidden)
    shapes = {"Wx": (n_inputs, 4 * hidden), "Wh": (hidden, 4 * hidden), "b": (4 * hidden,),
              "Wy": (hidden,), "by": (1,)}
    return {name: rng.uniform(-bound, bound, shapes[name]) for name in PARAM_NAMES}


def forward(weights, X):
    """X has shape (batch, time, features). Returns predictions and a cache."""
    B, T, _ = X.shape
    H = weights["Wh"].shape[0]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    cache = []
    for t in range(T):
        x = X[:, t, :]
        z = x @ weights["Wx"] + h @ weights["Wh"] + weights["b"]
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H:2 * H])
        o = sigmoid(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c_prev, h_prev = c, h
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        cache.append((x, h_prev, c_prev, i, f, o, g, tc))
    yhat = h @ weights["Wy"] + weights["by"][0]
    return yhat, (cache, h)


def loss_and_grad(weights, X, y):
    """Half mean squared error and its gradient for every weight array."""
    yhat, (cache, h_last) = forward(weights, X)
    B = len(y)
    diff = yhat - y
    loss = 0.5 * float(np.mean(diff * diff))
    dy = diff / B
    grads = {name: np.zeros_like(w) for name, w in weights.items()}
    grads["Wy"] = h_last.T @ dy
    grads["by"] = np.array([dy.sum()])
    dh = np.outer(dy, weights["Wy"])
    dc = np.zeros_like(dh)
    Wh = weights["Wh"]
    for x, h_prev, c_prev, i, f, o, g, tc in reversed(cache):
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        dz = np.hstack([
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            do * o * (1.0 - o),
            dc * i * (1.0 - g * g),
        ])
        grads["Wx"] += x.T @ dz
        grads["Wh"] += h_prev.T @ dz
        grads["b"] += dz.sum(axis=0)
        dh = dz @ Wh.T
        dc = dc * f
    return loss, grads


class Adam:
    def __init__(self, weights, lr, beta1, beta2, eps):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in weights.items()}
        self.v = {k: np.zeros_like(v) for k, v in weights.items()}
        self.t = 0

    def step(self, weights, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k in weights:
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * grads[k]
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * grads[k] ** 2
            weights[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def _window(vectors: np.ndarray, end: int, width: int) -> np.ndarray:
    start = end - width + 1
    if start >= 0:
        return vectors[start:end + 1]
    pad = np.repeat(vectors[:1], -start, axis=0)
    return np.vstack([pad, vectors[:end + 1]])


def training_windows(X: np.ndarray, rows: FeatureMatrix, width: int):
    """Full windows from groups with at least ``width + 1`` rows."""
    seqs, targets, skipped = [], [], 0
    for idx in rows.groups().values():
        if len(idx) < width + 1:
            skipped += 1
            continue
        vecs = X[idx]
        for j in range(width - 1, len(idx)):
            seqs.append(vecs[j - width + 1:j + 1])
            targets.append(rows.target[idx[j]])
    return seqs, targets, skipped


class LstmModel(RackModel):
    model_id = ModelId.LSTM

    def __init__(self, columns, params, weights, target_range, context,
                 loss_history=(), skipped_groups=0, scaler=None):
        super().__init__(columns, params, scaler)
        self.weights = weights
        self.target_range = (float(target_range[0]), float(target_range[1]))
        # group -> (periods, scaled vectors), the training tail used as left context
        self.context = context
        self.loss_history = list(loss_history)
        self.skipped_groups = skipped_groups

    def _unscale_target(self, z):
        lo, hi = self.target_range
        return z * (hi - lo) + lo

    def _predict(self, X, rows, history):
        pool: dict[tuple, dict[int, np.ndarray]] = {}
        for group, (periods, vecs) in self.context.items():
            pool[group] = dict(zip(periods.tolist(), vecs))
        if history is not None and len(history):
            check_columns(self.columns, history.column_names)
            HX = self._scale(history.rows)
            for key, vec in zip(history.row_keys, HX):
                pool.setdefault(key.group, {})[key.period] = vec
        for key, vec in zip(rows.row_keys, X):
            pool.setdefault(key.group, {})[key.period] = vec

        W = self.params.window
        seqs = np.empty((len(rows), W, X.shape[1]))
        sorted_pool = {}
        for n, key in enumerate(rows.row_keys):
            if key.group not in sorted_pool:
                entries = pool[key.group]
                periods = np.array(sorted(entries))
                sorted_pool[key.group] = (periods, np.array([entries[p] for p in periods]))
            periods, vecs = sorted_pool[key.group]
            end = int(np.searchsorted(periods, key.period))
            seqs[n] = _window(vecs, end, W)
        out = np.empty(len(rows))
        for start in range(0, len(rows), 512):
            out[start:start + 512], _ = forward(self.weights, seqs[start:start + 512])
        return self._unscale_target(out)

    def state(self):
        groups = list(self.context)
        arrays = {f"w_{k}": v for k, v in self.weights.items()}
        arrays["target_range"] = np.array(self.target_range)
        arrays["loss_history"] = np.array(self.loss_history, dtype=float)
        gidx, periods, vecs = [], [], []
        for g, (p, v) in enumerate(self.context.values()):
            gidx += [g] * len(p)
            periods += list(p)
            vecs += list(v)
        arrays["context_group"] = np.array(gidx, dtype=int)
        arrays["context_period"] = np.array(periods, dtype=int)
        arrays["context_vectors"] = np.array(vecs, dtype=float).reshape(len(vecs), len(self.columns))
        meta = {"context_groups": [list(g) for g in groups], "skipped_groups": self.skipped_groups}
        return meta, arrays

    @classmethod
    def from_state(cls, columns, params, scaler, meta, arrays):
        weights = {k: arrays[f"w_{k}"].astype(float) for k in PARAM_NAMES}
        groups = [tuple(g) for g in meta["context_groups"]]
        context = {}
        gidx = arrays["context_group"]
        for g, group in enumerate(groups):
            sel = gidx == g
            context[group] = (arrays["context_period"][sel].astype(int), arrays["context_vectors"][sel])
        return cls(columns, params, weights, arrays["target_range"], context,
                   arrays["loss_history"].tolist(), meta["skipped_groups"], scaler)


def fit_lstm(train: FeatureMatrix, params: LstmParams = LstmParams()) -> LstmModel:
    X = train.rows
    W = params.window
    seqs, targets, skipped = training_windows(X, train, W)
    if not seqs:
        raise TrainingDataError(f"no group has the {W + 1} periods an LSTM window needs")
    S = np.array(seqs)
    y = np.array(targets, dtype=float)
    lo, hi = (float(y.min()), float(y.max())) if params.scale_target else (0.0, 1.0)
    span = hi - lo
    ys = (y - lo) / span if span > 0 else np.zeros_like(y)

    rng = np.random.default_rng(params.seed)
    weights = init_weights(X.shape[1], params.hidden_size, rng)
    opt = Adam(weights, params.learning_rate, params.beta1, params.beta2, params.epsilon)
    history = []
    for _ in range(params.epochs):
        perm = rng.permutation(len(ys))
        total = 0.0
        for start in range(0, len(ys), params.batch_size):
            batch = perm[start:start + params.batch_size]
            loss, grads = loss_and_grad(weights, S[batch], ys[batch])
            opt.step(weights, grads)
            total += loss * len(batch)
        history.append(total / len(ys))

    context = {}
    for group, idx in train.groups().items():
        tail = idx[-(W - 1):] if W > 1 else []
        context[group] = (np.array([train.row_keys[i].period for i in tail], dtype=int),
                          X[tail].reshape(len(tail), X.shape[1]))
    return LstmModel(train.column_names, params, weights, (lo, hi), context, history, skipped)
