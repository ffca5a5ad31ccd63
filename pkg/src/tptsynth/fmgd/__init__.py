"""Forward-marginals gradient descent back-end."""

from tptsynth.fmgd.engine import Engine, Logits, Tape, softmax
from tptsynth.fmgd.train import (
    VANILLA,
    FmgdHyperparams,
    TrainResult,
    discretize,
    init_params,
    run_streams,
    train,
    train_batch,
    train_seeds,
)


def forward(graph, logits, engine=None) -> dict:
    """Propagate marginals; returns ``{"loss", "tape", "outputs"}`` for batch row 0."""
    engine = engine or Engine(graph)
    tape = engine.forward(logits)
    return {"loss": float(tape.loss[0]), "tape": tape, "outputs": {v: m[0] for v, m in engine.output_marginals(tape).items()}}


def gradient(graph, logits, engine=None) -> dict:
    """Exact gradient of the loss; returns ``{"loss", "grad"}`` with ``grad`` shaped like ``logits``."""
    engine = engine or Engine(graph)
    loss, grad, _ = engine.loss_and_grad(logits)
    return {"loss": float(loss[0]), "grad": grad}


from tptsynth.fmgd.search import SearchReport, load_distribution, random_search, sample_hypers  # noqa: E402

__all__ = [
    "Engine",
    "Logits",
    "Tape",
    "softmax",
    "FmgdHyperparams",
    "VANILLA",
    "TrainResult",
    "init_params",
    "forward",
    "gradient",
    "train",
    "train_batch",
    "train_seeds",
    "run_streams",
    "discretize",
    "random_search",
    "sample_hypers",
    "load_distribution",
    "SearchReport",
]
