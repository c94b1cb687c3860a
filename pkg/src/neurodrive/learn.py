"""Learning blocks: [-1, 1] feature scaling, PCA, an extreme learning machine
with triangular-basis activation, and a two-layer LSTM trained with
SGD-with-momentum through full backpropagation through time.

Every model is deterministic given its seed and serialises to versioned JSON
with bit-exact weight round-trips.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, DimensionMismatchError, SingleClassError

ELM_DEFAULT_HIDDEN = 170
ELM_RIDGE = 1e-6
LSTM_DEFAULT_WIDTHS = (200, 100)


# ---------------------------------------------------------------------------
# feature scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Scaler:
    """Columnwise linear map sending training minima to -1 and maxima to +1.

    Constant training columns map to 0; unseen values may leave [-1, 1].
    """

    mins: np.ndarray
    maxs: np.ndarray


def scaler_fit(x_train: np.ndarray) -> Scaler:
    x = np.asarray(x_train, dtype=np.float64)
    if x.ndim != 2 or x.size == 0:
        raise DataError("scaler needs a non-empty 2-D matrix")
    return Scaler(x.min(axis=0), x.max(axis=0))


def scaler_apply(scaler: Scaler, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != scaler.mins.shape[0]:
        raise DimensionMismatchError(
            f"{x.shape[-1]} columns vs scaler fitted on {scaler.mins.shape[0]}"
        )
    span = scaler.maxs - scaler.mins
    out = np.zeros_like(x)
    ok = span > 0
    out[..., ok] = 2.0 * (x[..., ok] - scaler.mins[ok]) / span[ok] - 1.0
    return out


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray          # (k, d), rows orthonormal
    explained_variance_share: np.ndarray


def pca_fit(x: np.ndarray, k: int) -> PcaModel:
    """Top-k principal directions of the covariance, via SVD of centred data.

    Sign convention: each component's largest-magnitude coordinate is
    positive, which makes the fit deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("PCA needs an (n >= 2, d) matrix")
    n, d = x.shape
    if not 1 <= k <= min(n - 1, d):
        raise ConfigError(f"k={k} must be in [1, min(n-1, d)] = [1, {min(n - 1, d)}]")
    mean = x.mean(axis=0)
    centred = x - mean
    _, s, vt = np.linalg.svd(centred, full_matrices=False)
    comps = vt[:k].copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    total = float(np.sum(s**2))
    shares = (s[:k] ** 2) / total if total > 0 else np.zeros(k)
    return PcaModel(mean, comps, shares)


def pca_transform(model: PcaModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.mean.shape[0]:
        raise DimensionMismatchError(
            f"{x.shape[-1]} columns vs PCA fitted on {model.mean.shape[0]}"
        )
    return (x - model.mean) @ model.components.T


# ---------------------------------------------------------------------------
# extreme learning machine
# ---------------------------------------------------------------------------

def tribas(z: np.ndarray) -> np.ndarray:
    """Triangular basis activation max(0, 1 - |z|)."""
    return np.maximum(0.0, 1.0 - np.abs(z))


@dataclass(frozen=True, eq=False)
class ElmModel:
    input_weights: np.ndarray   # (n_hidden, d)
    biases: np.ndarray          # (n_hidden,)
    output_weights: np.ndarray  # (n_hidden,)
    seed: int
    ridge: float = ELM_RIDGE


def _check_binary_labels(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    if not np.all(np.isin(y, (0, 1))):
        raise DataError("labels must be 0 or 1")
    if np.unique(y).size < 2:
        raise SingleClassError("training labels contain a single class")
    return y.astype(np.int64)


def elm_train(
    x: np.ndarray,
    y: np.ndarray,
    n_hidden: int = ELM_DEFAULT_HIDDEN,
    seed: int = 0,
    ridge: float = ELM_RIDGE,
) -> ElmModel:
    """Random hidden layer + ridge least-squares output weights.

    Hidden weights and biases are uniform in [-1, 1] from the seed; targets
    are coded -1/+1 and output weights solve
    min ||H beta - t||^2 + ridge * ||beta||^2.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("ELM needs an (n >= 2, d) matrix")
    y = _check_binary_labels(y)
    if y.shape[0] != x.shape[0]:
        raise DimensionMismatchError("labels and rows disagree")
    rng = np.random.default_rng(seed)
    w = rng.uniform(-1.0, 1.0, (n_hidden, x.shape[1]))
    b = rng.uniform(-1.0, 1.0, n_hidden)
    h = tribas(x @ w.T + b)
    t = 2.0 * y - 1.0
    beta = np.linalg.solve(h.T @ h + ridge * np.eye(n_hidden), h.T @ t)
    if not np.all(np.isfinite(beta)):
        raise DataError("ELM solve produced non-finite weights")
    return ElmModel(w, b, beta, int(seed), float(ridge))


def elm_scores(model: ElmModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.input_weights.shape[1]:
        raise DimensionMismatchError(
            f"{x.shape[1]} features vs model trained on {model.input_weights.shape[1]}"
        )
    return tribas(x @ model.input_weights.T + model.biases) @ model.output_weights


def elm_predict(model: ElmModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(scores, labels); the decision rule is label = 1 iff score > 0."""
    scores = elm_scores(model, x)
    return scores, (scores > 0).astype(np.int64)


# ---------------------------------------------------------------------------
# two-layer LSTM
# ---------------------------------------------------------------------------

@dataclass
class LstmConfig:
    widths: tuple[int, ...] = LSTM_DEFAULT_WIDTHS
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 100
    seed: int = 0


@dataclass(eq=False)
class LstmModel:
    """Stacked LSTM with a 2-class softmax head on the last timestep."""

    input_dim: int
    widths: tuple[int, ...]
    layers: list[dict]          # per layer: W (4h, p), U (4h, h), b (4h,)
    head_w: np.ndarray          # (2, h_last)
    head_b: np.ndarray          # (2,)
    seed: int
    loss_history: list[float] = field(default_factory=list)

    @classmethod
    def init(cls, input_dim: int, widths: tuple[int, ...], seed: int) -> "LstmModel":
        rng = np.random.default_rng(seed)
        layers = []
        p = input_dim
        for h in widths:
            k = 1.0 / np.sqrt(h)
            b = np.zeros(4 * h)
            b[h : 2 * h] = 1.0  # forget-gate bias
            layers.append({
                "W": rng.uniform(-k, k, (4 * h, p)),
                "U": rng.uniform(-k, k, (4 * h, h)),
                "b": b,
            })
            p = h
        k = 1.0 / np.sqrt(p)
        return cls(input_dim, tuple(widths), layers, rng.uniform(-k, k, (2, p)),
                   np.zeros(2), int(seed))

    @classmethod
    def zeros(cls, input_dim: int, widths: tuple[int, ...]) -> "LstmModel":
        model = cls.init(input_dim, widths, seed=0)
        for layer in model.layers:
            for key in layer:
                layer[key] = np.zeros_like(layer[key])
        model.head_w = np.zeros_like(model.head_w)
        model.head_b = np.zeros_like(model.head_b)
        return model

    # -- parameter vector helpers (finite-difference checks, serialisation)

    def _param_items(self):
        for li, layer in enumerate(self.layers):
            for key in ("W", "U", "b"):
                yield f"layer{li}.{key}", layer, key
        yield "head_w", self.__dict__, "head_w"
        yield "head_b", self.__dict__, "head_b"

    def flat_params(self) -> np.ndarray:
        return np.concatenate([np.asarray(obj[key]).ravel() for _, obj, key in self._param_items()])

    def set_flat_params(self, vec: np.ndarray) -> None:
        pos = 0
        for _, obj, key in self._param_items():
            arr = np.asarray(obj[key])
            obj[key] = vec[pos : pos + arr.size].reshape(arr.shape).copy()
            pos += arr.size
        if pos != vec.size:
            raise DimensionMismatchError("parameter vector length mismatch")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _lstm_forward(model: LstmModel, x: np.ndarray):
    """Run the stack over x (B, T, p); returns (probs, caches, last_hidden)."""
    batch, steps, _ = x.shape
    caches = []
    inp = x
    for layer in model.layers:
        h_dim = layer["U"].shape[1]
        h = np.zeros((batch, h_dim))
        c = np.zeros((batch, h_dim))
        steps_cache = []
        outs = np.empty((batch, steps, h_dim))
        for t in range(steps):
            z = inp[:, t] @ layer["W"].T + h @ layer["U"].T + layer["b"]
            i = _sigmoid(z[:, :h_dim])
            f = _sigmoid(z[:, h_dim : 2 * h_dim])
            g = np.tanh(z[:, 2 * h_dim : 3 * h_dim])
            o = _sigmoid(z[:, 3 * h_dim :])
            c_new = f * c + i * g
            tc = np.tanh(c_new)
            h_new = o * tc
            steps_cache.append((inp[:, t], h, c, i, f, g, o, tc))
            h, c = h_new, c_new
            outs[:, t] = h
        caches.append((layer, steps_cache, outs))
        inp = outs
    logits = inp[:, -1] @ model.head_w.T + model.head_b
    return _softmax(logits), caches, inp[:, -1]


def _lstm_backward(model: LstmModel, caches, probs, y, last_hidden):
    """Full BPTT; returns grads keyed like the parameter items."""
    batch = y.shape[0]
    dlogits = probs.copy()
    dlogits[np.arange(batch), y] -= 1.0
    dlogits /= batch
    grads = {
        "head_w": dlogits.T @ last_hidden,
        "head_b": dlogits.sum(axis=0),
    }
    steps = caches[0][2].shape[1]
    # gradient flowing into each layer's output sequence
    dh_ext = np.zeros_like(caches[-1][2])
    dh_ext[:, -1] = dlogits @ model.head_w
    for li in range(len(model.layers) - 1, -1, -1):
        layer, steps_cache, _ = caches[li]
        h_dim = layer["U"].shape[1]
        d_w = np.zeros_like(layer["W"])
        d_u = np.zeros_like(layer["U"])
        d_b = np.zeros_like(layer["b"])
        dx_seq = np.empty((batch, steps, layer["W"].shape[1]))
        dh_rec = np.zeros((batch, h_dim))
        dc_rec = np.zeros((batch, h_dim))
        for t in range(steps - 1, -1, -1):
            x_t, h_prev, c_prev, i, f, g, o, tc = steps_cache[t]
            dh = dh_ext[:, t] + dh_rec
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_rec
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dz = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            d_w += dz.T @ x_t
            d_u += dz.T @ h_prev
            d_b += dz.sum(axis=0)
            dh_rec = dz @ layer["U"]
            dc_rec = dc * f
            dx_seq[:, t] = dz @ layer["W"]
        grads[f"layer{li}.W"] = d_w
        grads[f"layer{li}.U"] = d_u
        grads[f"layer{li}.b"] = d_b
        dh_ext = dx_seq
    return grads


def lstm_loss(model: LstmModel, sequences: np.ndarray, y: np.ndarray) -> float:
    probs, _, _ = _lstm_forward(model, sequences)
    eps = 1e-12
    return float(-np.mean(np.log(probs[np.arange(y.shape[0]), y] + eps)))


def lstm_gradients(model: LstmModel, sequences: np.ndarray, y: np.ndarray) -> dict:
    probs, caches, last_hidden = _lstm_forward(model, sequences)
    return _lstm_backward(model, caches, probs, y, last_hidden)


def _stack_sequences(sequences) -> np.ndarray:
    arrs = [np.asarray(s, dtype=np.float64) for s in sequences]
    shapes = {a.shape for a in arrs}
    if len(shapes) != 1 or arrs[0].ndim != 2:
        raise DataError("all sequences must share one (T, p) shape")
    return np.stack(arrs)


def lstm_train(sequences, labels, config: LstmConfig | None = None) -> LstmModel:
    """Full-batch SGDM training of the stacked LSTM.

    Update rule per parameter: v <- momentum * v - lr * grad; theta <- theta + v.
    """
    config = config or LstmConfig()
    x = _stack_sequences(sequences)
    y = _check_binary_labels(labels)
    if y.shape[0] != x.shape[0]:
        raise DimensionMismatchError("labels and sequences disagree")
    model = LstmModel.init(x.shape[2], tuple(config.widths), config.seed)
    velocity = {name: np.zeros_like(np.asarray(obj[key]))
                for name, obj, key in model._param_items()}
    for _ in range(config.epochs):
        probs, caches, last_hidden = _lstm_forward(model, x)
        eps = 1e-12
        loss = float(-np.mean(np.log(probs[np.arange(y.shape[0]), y] + eps)))
        model.loss_history.append(loss)
        grads = _lstm_backward(model, caches, probs, y, last_hidden)
        for name, obj, key in model._param_items():
            v = velocity[name]
            v *= config.momentum
            v -= config.learning_rate * grads[name]
            obj[key] = obj[key] + v
    return model


def lstm_predict(model: LstmModel, sequence: np.ndarray) -> np.ndarray:
    """Class probabilities (2,) for one (T, p) sequence; ties favour class 0."""
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[1] != model.input_dim:
        raise DimensionMismatchError(
            f"expected (T, {model.input_dim}) sequence, got {seq.shape}"
        )
    probs, _, _ = _lstm_forward(model, seq[None])
    return probs[0]


def lstm_predict_batch(model: LstmModel, sequences) -> np.ndarray:
    probs, _, _ = _lstm_forward(model, _stack_sequences(sequences))
    return probs


# ---------------------------------------------------------------------------
# JSON serialisation (bit-exact on weights: json floats round-trip via repr)
# ---------------------------------------------------------------------------

def _arr(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _unarr(d: dict) -> np.ndarray:
    return np.asarray(d["data"], dtype=np.float64).reshape(d["shape"])


def model_to_dict(model) -> dict:
    if isinstance(model, Scaler):
        return {"model": "scaler", "version": 1,
                "mins": _arr(model.mins), "maxs": _arr(model.maxs)}
    if isinstance(model, PcaModel):
        return {"model": "pca", "version": 1, "mean": _arr(model.mean),
                "components": _arr(model.components),
                "explained_variance_share": _arr(model.explained_variance_share)}
    if isinstance(model, ElmModel):
        return {"model": "elm", "version": 1, "seed": model.seed, "ridge": model.ridge,
                "input_weights": _arr(model.input_weights), "biases": _arr(model.biases),
                "output_weights": _arr(model.output_weights)}
    if isinstance(model, LstmModel):
        return {"model": "lstm", "version": 1, "seed": model.seed,
                "input_dim": model.input_dim, "widths": list(model.widths),
                "layers": [{k: _arr(layer[k]) for k in ("W", "U", "b")}
                           for layer in model.layers],
                "head_w": _arr(model.head_w), "head_b": _arr(model.head_b)}
    raise ConfigError(f"cannot serialise {type(model).__name__}")


def model_from_dict(d: dict):
    kind = d.get("model")
    if kind == "scaler":
        return Scaler(_unarr(d["mins"]), _unarr(d["maxs"]))
    if kind == "pca":
        return PcaModel(_unarr(d["mean"]), _unarr(d["components"]),
                        _unarr(d["explained_variance_share"]))
    if kind == "elm":
        return ElmModel(_unarr(d["input_weights"]), _unarr(d["biases"]),
                        _unarr(d["output_weights"]), int(d["seed"]), float(d["ridge"]))
    if kind == "lstm":
        model = LstmModel(int(d["input_dim"]), tuple(d["widths"]),
                          [{k: _unarr(layer[k]) for k in ("W", "U", "b")}
                           for layer in d["layers"]],
                          _unarr(d["head_w"]), _unarr(d["head_b"]), int(d["seed"]))
        return model
    raise ConfigError(f"unknown model kind {kind!r}")


def save_model(path, model) -> None:
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f, sort_keys=True)
        f.write("\n")


def load_model(path):
    with open(path) as f:
        return model_from_dict(json.load(f))
