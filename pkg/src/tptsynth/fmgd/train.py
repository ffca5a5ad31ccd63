"""Gradient-descent training loop with the optimization heuristics.

Runs are batched: ``train_batch`` optimizes B independent restarts at once,
each with its own random streams, and stops each restart as soon as it has
converged (or stalled). The batch axis never mixes information between
restarts, so a batched run and B separate runs give identical results.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from tptsynth.fmgd.engine import Engine, Logits, entropy_grad
from tptsynth.interp import check_consistency
from tptsynth.ir.graph import GatedFactorGraph

OPTIMIZERS = ("sgd", "rmsprop")


@dataclass(frozen=True)
class FmgdHyperparams:
    alpha: float = 1.0
    optimizer: str = "rmsprop"
    learning_rate: float = 0.1
    clip_norm: Optional[float] = None
    noise_eta: float = 0.0
    noise_gamma: float = 0.55
    entropy_rho: float = 0.0
    entropy_decay: float = 1.0
    epsilon: float = 1e-12
    max_epochs: int = 2000
    loss_threshold: float = 1e-3
    rmsprop_decay: float = 0.9
    rmsprop_eps: float = 1e-10
    patience: Optional[int] = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive or None")
        if self.noise_eta < 0 or self.noise_gamma < 0 or self.entropy_rho < 0:
            raise ValueError("noise and entropy coefficients must be non-negative")
        if not 0 < self.entropy_decay <= 1:
            raise ValueError("entropy_decay must lie in (0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FmgdHyperparams":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


VANILLA = FmgdHyperparams()


@dataclass
class TrainResult:
    status: str  # converged | stalled | epoch-limit | numeric-error
    final_loss: float
    epochs: int
    loss_trace: np.ndarray
    grad_norm_trace: np.ndarray
    logits: Logits
    assignment: dict
    consistent: bool
    extra: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "loss", "grad_norm"])
        for t, (l, gn) in enumerate(zip(self.loss_trace, self.grad_norm_trace)):
            w.writerow([t, repr(float(l)), repr(float(gn))])
        return buf.getvalue()


def run_streams(master_seed: int, setting: int, seed: int):
    """Seed sequences for one run.

    Initialization depends only on ``(master_seed, seed)`` so that every
    hyperparameter setting starts seed ``j`` from the same uniform draw;
    gradient noise additionally depends on the setting index.
    """
    init = np.random.SeedSequence([int(master_seed), int(seed)])
    noise = np.random.SeedSequence([int(master_seed), int(setting), int(seed), 1])
    return init, noise


def _dirichlet_logits(rng: np.random.Generator, alpha: float, n: int, p: int) -> np.ndarray:
    # Draw through Gamma variates so tiny alphas cannot produce log(0).
    g = rng.standard_gamma(alpha, size=(p, n))
    g = np.maximum(g, np.finfo(float).tiny)
    return np.log(g / g.sum(axis=-1, keepdims=True))


def init_logits(engine: Engine, alpha: float, seed_seqs: Sequence) -> Logits:
    """Batched Dirichlet(alpha) initialization, one seed sequence per batch row."""
    rngs = [np.random.default_rng(s) for s in seed_seqs]
    data = []
    for n, vars_ in engine.groups:
        data.append(np.stack([_dirichlet_logits(r, alpha, n, len(vars_)) for r in rngs]) if rngs else np.zeros((0, len(vars_), n)))
    return Logits(engine.groups, data)


def init_params(graph: GatedFactorGraph, alpha: float, rng_seed: int, engine: Optional[Engine] = None) -> Logits:
    """``m_p = log Dirichlet(alpha, ..., alpha)`` independently per free parameter cell."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    engine = engine or Engine(graph)
    init, _ = run_streams(rng_seed, 0, 0)
    return init_logits(engine, alpha, [init])


def discretize(logits: Logits, graph: GatedFactorGraph, b: int = 0) -> dict:
    """Argmax per parameter cell (ties go to the smallest value); pins keep their value."""
    out = {}
    for (n, vars_), d in zip(logits.groups, logits.data):
        am = np.argmax(d[b], axis=-1)
        for j, v in enumerate(vars_):
            out[v] = int(am[j])
    out.update({v: int(val) for v, val in graph.pins})
    return {v: out[v] for v in graph.params if v in out}


def train_batch(
    graph: GatedFactorGraph,
    hypers: FmgdHyperparams,
    streams: Sequence,
    engine: Optional[Engine] = None,
    init: Optional[Logits] = None,
) -> list:
    """Train ``len(streams)`` restarts; ``streams[b] = (init_seq, noise_seq)``."""
    engine = engine or Engine(graph, hypers.epsilon)
    if engine.epsilon != hypers.epsilon:
        engine = Engine(graph, hypers.epsilon)
    B = len(streams)
    logits = init.copy() if init is not None else init_logits(engine, hypers.alpha, [s[0] for s in streams])
    noise_rngs = [np.random.default_rng(s[1]) for s in streams]
    flat = logits.flat()
    D = flat.shape[1]
    ms = np.zeros_like(flat)
    active = np.ones(B, dtype=bool)
    status = ["epoch-limit"] * B
    epochs = np.full(B, hypers.max_epochs)
    assignment: list = [None] * B
    consistent = np.zeros(B, dtype=bool)
    best = np.full(B, np.inf)
    best_epoch = np.zeros(B, dtype=int)
    losses = []
    gnorms = []
    final_loss = np.full(B, np.nan)

    for t in range(hypers.max_epochs + 1):
        cur = logits.unflat(flat)
        tape = engine.forward(cur, check_finite=False)
        loss = tape.loss
        bad = ~np.isfinite(loss) & active
        for b in np.nonzero(bad)[0]:
            status[b] = "numeric-error"
            epochs[b] = t
            active[b] = False
        final_loss = np.where(active, loss, final_loss)
        # Convergence check before the update, so solved starts finish at epoch 0.
        for b in np.nonzero(active & (loss < hypers.loss_threshold))[0]:
            a = discretize(cur, graph, b)
            if check_consistency(graph, a):
                status[b] = "converged"
                epochs[b] = t
                active[b] = False
                assignment[b] = a
                consistent[b] = True
        if hypers.patience is not None:
            improved = loss < best - 1e-7
            best = np.where(improved, loss, best)
            best_epoch = np.where(improved, t, best_epoch)
            stall = active & (t - best_epoch >= hypers.patience)
            for b in np.nonzero(stall)[0]:
                status[b] = "stalled"
                epochs[b] = t
                active[b] = False
        if not active.any() or t == hypers.max_epochs:
            losses.append(loss)
            gnorms.append(np.zeros(B))
            break
        extra = None
        rho_t = hypers.entropy_rho * hypers.entropy_decay**t
        if rho_t > 0:
            extra = [-rho_t * entropy_grad(m, hypers.epsilon) for m in tape.mu]
        grads = Logits(cur.groups, engine.backward(tape, extra)).flat()
        grads = np.where(np.isfinite(grads), grads, 0.0)
        norm = np.sqrt((grads**2).sum(axis=1))
        losses.append(loss)
        gnorms.append(norm)
        if hypers.clip_norm is not None:
            scale = np.minimum(1.0, hypers.clip_norm / np.maximum(norm, 1e-300))
            grads = grads * scale[:, None]
        if hypers.noise_eta > 0:
            sigma = np.sqrt(hypers.noise_eta / (1.0 + t) ** hypers.noise_gamma)
            noise = np.stack([r.normal(0.0, sigma, size=D) for r in noise_rngs])
            grads = grads + noise
        if hypers.optimizer == "sgd":
            step = hypers.learning_rate * grads
        else:
            ms = np.where(active[:, None], hypers.rmsprop_decay * ms + (1 - hypers.rmsprop_decay) * grads**2, ms)
            step = hypers.learning_rate * grads / (np.sqrt(ms) + hypers.rmsprop_eps)
        flat = np.where(active[:, None], flat - step, flat)

    final = logits.unflat(flat)
    loss_arr = np.array(losses)
    gn_arr = np.array(gnorms)
    results = []
    for b in range(B):
        n_ep = int(epochs[b])
        a = assignment[b] if assignment[b] is not None else discretize(final, graph, b)
        cons = bool(consistent[b]) or (status[b] != "numeric-error" and check_consistency(graph, a))
        results.append(
            TrainResult(
                status=status[b],
                final_loss=float(final_loss[b]),
                epochs=n_ep,
                loss_trace=loss_arr[: n_ep + 1, b].copy(),
                grad_norm_trace=gn_arr[: n_ep + 1, b].copy(),
                logits=final.select(b),
                assignment=a,
                consistent=cons,
            )
        )
    return results


def train(graph: GatedFactorGraph, hypers: FmgdHyperparams = VANILLA, rng_seed: int = 0, engine=None, init=None) -> TrainResult:
    """One training run; seed ``s`` uses the same streams as seed index 0 of master seed ``s``."""
    return train_batch(graph, hypers, [run_streams(rng_seed, 0, 0)], engine=engine, init=init)[0]


def train_seeds(graph, hypers, master_seed: int, seeds: Sequence[int], setting: int = 0, engine=None) -> list:
    return train_batch(graph, hypers, [run_streams(master_seed, setting, s) for s in seeds], engine=engine)


def with_overrides(hypers: FmgdHyperparams, **kw) -> FmgdHyperparams:
    return replace(hypers, **kw)
