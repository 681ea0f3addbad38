"""Supervised parameter estimators trained on simulated elections.

Three estimators map election features back to model parameters:

* logistic-regression bisection: a binary classifier ("is the true parameter
  above y'?") retrained on relabeled data at each step halves the feasible
  interval, independently per parameter dimension;
* a small dense network (two hidden layers, scaled-exponential-linear units,
  inverted dropout, adaptive-moment updates) regressing parameters directly;
* the hybrid: either regressor supplies a single seed for the local
  Gaussian refinement stage of the rejection sampler.

The fixed feature layout (dimension 4K + 9) compresses the per-district
spread to its top five values so one regressor serves any district count:

    seats(K), mean_frac(K), std_frac(K), spread top-5 (5),
    margin_mean, margin_std, theta(K), log10(electors), log10(districts)
"""

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .core import ElectionConfig, IOFailure, ValidationError
from .generators import params_from_values, simulate, task_seed_sequence
from .inference import ParamVector, PriorSpec, exploit_phase
from .summaries import summarize

LAYOUT_VERSION = 1
SPREAD_TOP = 5

SELU_SCALE = 1.0507009873554804934193349852946
SELU_ALPHA = 1.6732632423543772848170429916717

HIDDEN_SIZES = (33, 38)
DROPOUT_RATE = 0.2


def feature_dim(n_parties):
    # seats, mean_frac, std_frac, theta (K each) + spread top-5 + margins + logs
    return 4 * n_parties + SPREAD_TOP + 4


def feature_names(n_parties):
    names = [f"seats_{k + 1}" for k in range(n_parties)]
    names += [f"mean_frac_{k + 1}" for k in range(n_parties)]
    names += [f"std_frac_{k + 1}" for k in range(n_parties)]
    names += [f"spread_{i + 1}" for i in range(SPREAD_TOP)]
    names += ["margin_mean", "margin_std"]
    names += [f"theta_{k + 1}" for k in range(n_parties)]
    names += ["log10_electors", "log10_districts"]
    return names


def features_from_stats(stats, theta, n_electors, n_districts):
    """Build the fixed-layout feature vector; masked components become NaN."""
    spread = stats.district_spread
    if spread.shape[0] >= SPREAD_TOP:
        top = spread[:SPREAD_TOP]
    else:
        top = np.concatenate([spread, np.zeros(SPREAD_TOP - spread.shape[0])])
    masked = np.where(stats.mask, stats.vector(), np.nan)
    k = stats.n_parties
    seats = masked[:k]
    mean_frac = masked[k:2 * k]
    std_frac = masked[2 * k:3 * k]
    spread_mask = stats.mask[3 * k:3 * k + stats.n_districts]
    if not spread_mask.all():
        top = np.full(SPREAD_TOP, np.nan)
    return np.concatenate(
        [
            seats,
            mean_frac,
            std_frac,
            top,
            masked[-2:],
            np.asarray(theta, dtype=np.float64),
            [np.log10(n_electors), np.log10(n_districts)],
        ]
    )


@dataclass(frozen=True)
class ConfigRanges:
    """Sampling ranges for election structure in training-set generation.

    District and elector counts draw uniformly on their (inclusive) ranges,
    electors uniformly in log10. theta draws uniformly on the simplex unless
    fixed here.
    """

    districts: tuple = (100, 100)
    electors: tuple = (100000, 100000)
    n_parties: int = 2
    theta: object = None

    def sample(self, rng):
        s_lo, s_hi = self.districts
        n_lo, n_hi = self.electors
        n_districts = int(rng.integers(s_lo, s_hi + 1))
        n_electors = int(round(10 ** rng.uniform(np.log10(n_lo), np.log10(n_hi))))
        n_electors = max(n_electors, n_districts)
        if self.theta is None:
            theta = rng.dirichlet(np.ones(self.n_parties))
        else:
            theta = np.asarray(self.theta, dtype=np.float64)
        return ElectionConfig.build(n_districts, n_electors, theta)

    def to_dict(self):
        return {
            "districts": list(self.districts),
            "electors": list(self.electors),
            "n_parties": self.n_parties,
            "theta": None if self.theta is None else list(map(float, self.theta)),
        }


@dataclass
class TrainingSet:
    """Simulated (features, parameters) pairs with frozen feature scaling."""

    model: str
    features: np.ndarray
    targets: np.ndarray
    prior: PriorSpec
    feature_mean: np.ndarray = None
    feature_std: np.ndarray = None
    layout_version: int = LAYOUT_VERSION

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.features.shape[0] != self.targets.shape[0]:
            raise ValidationError("features and targets disagree on row count")
        if self.features.shape[0] < 100:
            raise ValidationError(
                f"training sets need at least 100 rows, got {self.features.shape[0]}"
            )
        out_of_range = (self.targets < self.prior.lows) | (self.targets > self.prior.highs)
        if out_of_range.any():
            raise ValidationError("training targets must lie inside the prior ranges")
        if self.feature_mean is None:
            self.feature_mean = self.features.mean(axis=0)
            self.feature_std = np.maximum(self.features.std(axis=0, ddof=0), 1e-6)
        else:
            self.feature_mean = np.asarray(self.feature_mean, dtype=np.float64)
            self.feature_std = np.maximum(np.asarray(self.feature_std, dtype=np.float64), 1e-6)

    @property
    def n_rows(self):
        return int(self.features.shape[0])

    def scale(self, rows):
        """Apply the frozen feature scaling (round-trips with unscale)."""
        return (np.asarray(rows, dtype=np.float64) - self.feature_mean) / self.feature_std

    def unscale(self, rows):
        return np.asarray(rows, dtype=np.float64) * self.feature_std + self.feature_mean

    def write_csv(self, path):
        """CSV of rows plus a `<path>.meta.json` sidecar of scaling/layout."""
        n_parties = (self.features.shape[1] - SPREAD_TOP - 4) // 4
        header = feature_names(n_parties) + [f"target_{n}" for n in self.prior.names]
        try:
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                for x, y in zip(self.features, self.targets):
                    writer.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in y])
            with open(f"{path}.meta.json", "w") as fh:
                json.dump(
                    {
                        "layout_version": self.layout_version,
                        "model": self.model,
                        "prior": self.prior.to_dict(),
                        "feature_mean": self.feature_mean.tolist(),
                        "feature_std": self.feature_std.tolist(),
                    },
                    fh,
                    sort_keys=True,
                    indent=2,
                )
        except OSError as exc:
            raise IOFailure(f"cannot write training set to {path}: {exc}") from exc

    @classmethod
    def read_csv(cls, path):
        try:
            with open(f"{path}.meta.json") as fh:
                meta = json.load(fh)
            with open(path, newline="") as fh:
                reader = csv.reader(fh)
                next(reader)
                rows = [[float(v) for v in row] for row in reader if row]
        except OSError as exc:
            raise IOFailure(f"cannot read training set from {path}: {exc}") from exc
        prior = PriorSpec(
            model=meta["prior"]["model"],
            lows=meta["prior"]["lows"],
            highs=meta["prior"]["highs"],
            log10=meta["prior"]["log10"],
            names=tuple(meta["prior"]["names"]),
        )
        data = np.asarray(rows)
        p = prior.dim
        return cls(
            model=meta["model"],
            features=data[:, :-p],
            targets=data[:, -p:],
            prior=prior,
            feature_mean=np.asarray(meta["feature_mean"]),
            feature_std=np.asarray(meta["feature_std"]),
            layout_version=int(meta["layout_version"]),
        )


def generate_training_set(model, config_ranges, prior=None, n=1000, seed=0, n_jobs=1):
    """Simulate n (configuration, parameter) pairs and featurize the results.

    Rows are independent tasks keyed by (seed, row index); the merge is
    order-independent, so parallel generation is reproducible.
    """
    if n < 100:
        raise ValidationError(f"training sets need at least 100 rows, got {n}")
    prior = prior or PriorSpec.for_model(model, config_ranges.n_parties)

    def make_row(i):
        rng = np.random.default_rng(task_seed_sequence(seed, 10, i))
        config = config_ranges.sample(rng)
        values = prior.sample(rng, 1)[0]
        params = params_from_values(model, values, config.n_parties)
        votes = simulate(model, config, params, task_seed_sequence(seed, 11, i))
        stats = summarize(votes, config)
        features = features_from_stats(
            stats, config.vote_shares, config.n_electors, config.n_districts
        )
        return features, values

    if n_jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(make_row, range(n)))
    else:
        rows = [make_row(i) for i in range(n)]
    features = np.vstack([r[0] for r in rows])
    targets = np.vstack([r[1] for r in rows])
    return TrainingSet(model=model, features=features, targets=targets, prior=prior)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _fit_logistic(X, y, l2=1e-3, lr=0.5, iters=200):
    """L2-regularized logistic classifier, plain gradient descent, zero init."""
    Xb = np.hstack([np.ones((X.shape[0], 1)), X])
    w = np.zeros(Xb.shape[1])
    n = Xb.shape[0]
    for _ in range(iters):
        p = _sigmoid(Xb @ w)
        grad = Xb.T @ (p - y) / n + l2 * w
        w -= lr * grad
    return w


def _predict_logistic(w, x):
    return float(_sigmoid(np.concatenate([[1.0], x]) @ w))


def bisection_estimate(train, observed, tol=1e-3, max_iter=60,
                       l2=1e-3, lr=0.5, iters=200):
    """Classifier-guided bisection over each parameter dimension.

    At each step the training rows are relabeled by whether their true
    parameter exceeds the current midpoint, a logistic classifier is fit on
    scaled features, and the interval half indicated for `observed` is kept.
    Runs in log10 space for log-scaled dimensions (tol applies there).

    `observed` may contain NaN for unavailable components; those feature
    columns are dropped for both training and classification.
    """
    observed = np.asarray(observed, dtype=np.float64)
    if observed.shape[0] != train.features.shape[1]:
        raise ValidationError(
            f"observed feature length {observed.shape[0]} does not match "
            f"training layout {train.features.shape[1]}"
        )
    if tol <= 0:
        raise ValidationError("tol must be positive")
    cols = np.isfinite(observed)
    if not cols.any():
        raise ValidationError("observed features are entirely unavailable")
    X = train.scale(train.features)[:, cols]
    x_obs = train.scale(observed)[cols]
    prior = train.prior
    lo, hi = prior.search_bounds()
    lo, hi = lo.copy(), hi.copy()
    targets_z = np.vstack([prior.to_search(t) for t in train.targets])
    estimate = np.empty(prior.dim)
    for d in range(prior.dim):
        d_lo, d_hi = lo[d], hi[d]
        for _step in range(max_iter):
            if d_hi - d_lo < tol:
                break
            mid = 0.5 * (d_lo + d_hi)
            labels = (targets_z[:, d] > mid).astype(np.float64)
            if labels.min() == labels.max():
                # every training target sits on one side; follow it
                warnings.warn(
                    f"degenerate relabeling at {prior.names[d]}={mid:.4g}; "
                    "stepping without a classifier",
                    RuntimeWarning,
                    stacklevel=2,
                )
                above = labels[0] > 0.5
            else:
                w = _fit_logistic(X, labels, l2=l2, lr=lr, iters=iters)
                above = _predict_logistic(w, x_obs) >= 0.5
            if above:
                d_lo = mid
            else:
                d_hi = mid
        estimate[d] = 0.5 * (d_lo + d_hi)
    return ParamVector(train.model, prior.from_search(estimate))


def _selu(z):
    return SELU_SCALE * np.where(z > 0, z, SELU_ALPHA * (np.exp(np.minimum(z, 0.0)) - 1.0))


def _selu_grad(z):
    return SELU_SCALE * np.where(z > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(z, 0.0)))


@dataclass
class MlpModel:
    """Dense regressor with frozen feature scaling and output clamping."""

    model: str
    weights: list
    biases: list
    feature_mean: np.ndarray
    feature_std: np.ndarray
    prior: PriorSpec
    layout_version: int = LAYOUT_VERSION

    def forward(self, X):
        h = np.asarray(X, dtype=np.float64)
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W + b
            if i < len(self.weights) - 1:
                h = _selu(h)
        return h

    def to_json(self, indent=None):
        return json.dumps(
            {
                "model": self.model,
                "layout_version": self.layout_version,
                "layer_sizes": [int(w.shape[0]) for w in self.weights]
                + [int(self.weights[-1].shape[1])],
                "weights": [w.tolist() for w in self.weights],
                "biases": [b.tolist() for b in self.biases],
                "feature_mean": self.feature_mean.tolist(),
                "feature_std": self.feature_std.tolist(),
                "prior": self.prior.to_dict(),
            },
            sort_keys=True,
            indent=indent,
        )

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        prior = PriorSpec(
            model=obj["prior"]["model"],
            lows=obj["prior"]["lows"],
            highs=obj["prior"]["highs"],
            log10=obj["prior"]["log10"],
            names=tuple(obj["prior"]["names"]),
        )
        return cls(
            model=obj["model"],
            weights=[np.asarray(w) for w in obj["weights"]],
            biases=[np.asarray(b) for b in obj["biases"]],
            feature_mean=np.asarray(obj["feature_mean"]),
            feature_std=np.asarray(obj["feature_std"]),
            prior=prior,
            layout_version=int(obj["layout_version"]),
        )


def _init_layers(sizes, rng):
    """Normal init with variance 1/fan-in (self-normalizing activations)."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _mlp_loss_grads(weights, biases, X, y, dropout_masks=None):
    """Mean-squared-error loss and analytic gradients for the dense net.

    dropout_masks, when given, multiply each hidden activation (inverted
    dropout: masks carry the 1/keep factor).
    """
    acts = [X]
    pre = []
    h = X
    n_layers = len(weights)
    for i in range(n_layers):
        z = h @ weights[i] + biases[i]
        pre.append(z)
        if i < n_layers - 1:
            h = _selu(z)
            if dropout_masks is not None:
                h = h * dropout_masks[i]
        else:
            h = z
        acts.append(h)
    out = acts[-1]
    diff = out - y
    loss = float(np.mean(diff * diff))
    grad_out = 2.0 * diff / diff.size
    w_grads = [None] * n_layers
    b_grads = [None] * n_layers
    delta = grad_out
    for i in range(n_layers - 1, -1, -1):
        w_grads[i] = acts[i].T @ delta
        b_grads[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ weights[i].T
            if dropout_masks is not None:
                delta = delta * dropout_masks[i - 1]
            delta = delta * _selu_grad(pre[i - 1])
    return loss, w_grads, b_grads


def mlp_train(train, epochs=200, batch=64, learning_rate=1e-3, seed=0,
              dropout=DROPOUT_RATE, beta1=0.9, beta2=0.999, eps=1e-8):
    """Train the fixed-architecture regressor with adaptive-moment updates.

    Dropout applies to hidden activations during training only. Raises
    ValidationError if the loss turns non-finite (learning-rate blow-up);
    guarantees final full-batch loss <= initial loss.
    """
    if epochs < 1:
        raise ValidationError("epochs must be at least 1")
    X = train.scale(train.features)
    if not np.isfinite(X).all():
        raise ValidationError("training features must be finite")
    y = train.targets
    rng = np.random.default_rng(task_seed_sequence(seed, 20))
    sizes = (X.shape[1],) + HIDDEN_SIZES + (y.shape[1],)
    weights, biases = _init_layers(sizes, rng)
    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    initial_loss, _, _ = _mlp_loss_grads(weights, biases, X, y)
    keep = 1.0 - dropout
    step = 0
    n = X.shape[0]
    for _epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            rows = order[start:start + batch]
            xb, yb = X[rows], y[rows]
            masks = None
            if dropout > 0:
                masks = [
                    (rng.random((xb.shape[0], h)) < keep) / keep for h in HIDDEN_SIZES
                ]
            loss, w_grads, b_grads = _mlp_loss_grads(weights, biases, xb, yb, masks)
            if not np.isfinite(loss):
                raise ValidationError(
                    f"training loss became non-finite at step {step}; "
                    "lower the learning rate"
                )
            step += 1
            correct1 = 1.0 - beta1 ** step
            correct2 = 1.0 - beta2 ** step
            for i in range(len(weights)):
                m_w[i] = beta1 * m_w[i] + (1 - beta1) * w_grads[i]
                v_w[i] = beta2 * v_w[i] + (1 - beta2) * w_grads[i] ** 2
                weights[i] -= learning_rate * (m_w[i] / correct1) / (
                    np.sqrt(v_w[i] / correct2) + eps
                )
                m_b[i] = beta1 * m_b[i] + (1 - beta1) * b_grads[i]
                v_b[i] = beta2 * v_b[i] + (1 - beta2) * b_grads[i] ** 2
                biases[i] -= learning_rate * (m_b[i] / correct1) / (
                    np.sqrt(v_b[i] / correct2) + eps
                )
    final_loss, _, _ = _mlp_loss_grads(weights, biases, X, y)
    if not np.isfinite(final_loss) or final_loss > initial_loss:
        raise ValidationError(
            f"training failed to reduce the loss ({initial_loss:.4g} -> {final_loss:.4g})"
        )
    return MlpModel(
        model=train.model,
        weights=weights,
        biases=biases,
        feature_mean=train.feature_mean.copy(),
        feature_std=train.feature_std.copy(),
        prior=train.prior,
    )


def mlp_predict(model, observed):
    """Deterministic forward pass (no dropout), clamped into the prior box."""
    observed = np.asarray(observed, dtype=np.float64)
    if observed.ndim == 1:
        observed = observed[None, :]
    if observed.shape[1] != model.weights[0].shape[0]:
        raise ValidationError(
            f"observed feature length {observed.shape[1]} does not match the "
            f"model input size {model.weights[0].shape[0]}"
        )
    if not np.isfinite(observed).all():
        raise ValidationError("the dense regressor needs fully observed features")
    scaled = (observed - model.feature_mean) / model.feature_std
    raw = model.forward(scaled)
    clipped = np.vstack([model.prior.clip(r) for r in raw])
    if clipped.shape[0] == 1:
        return ParamVector(model.model, clipped[0])
    return [ParamVector(model.model, r) for r in clipped]


def hybrid_estimate(seed_params, observed, model, config, proposal_cov=None,
                    n_exploit=300, accept_quantile=0.05, seed=0, prior=None,
                    bins=20, sims_per_proposal=1, n_jobs=1):
    """Refine a regression estimate with the local rejection stage.

    `seed_params` (a ParamVector inside the prior box) replaces the whole
    explore phase; everything else matches the explore-exploit sampler.
    """
    prior = prior or PriorSpec.for_model(model, config.n_parties)
    if not prior.contains(seed_params.values):
        raise ValidationError("the regression seed lies outside the prior ranges")
    return exploit_phase(
        observed, model, config, [seed_params.values], seed,
        prior=prior, proposal_cov=proposal_cov, n_exploit=n_exploit,
        accept_quantile=accept_quantile, bins=bins,
        sims_per_proposal=sims_per_proposal, n_jobs=n_jobs,
        provenance={"method": "hybrid", "seed_params": seed_params.to_list()},
    )
