"""Random search over training hyperparameters.

A distribution maps each :class:`FmgdHyperparams` field to either a plain
value, ``{"choice": [...]}`` or ``{"log_uniform": [lo, hi]}``. Setting ``s``
is drawn from its own seed sequence, and seed ``j`` of every setting starts
from the same initialization, so rows of the report are directly comparable.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from tptsynth.fmgd.train import FmgdHyperparams, train_seeds

DEFAULT_CONFIG = "search_default.json"


def load_distribution(path: Optional[str] = None) -> dict:
    """Read a distribution file; ``None`` loads the shipped default."""
    if path is None:
        text = resources.files("tptsynth.configs").joinpath(DEFAULT_CONFIG).read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    dist = json.loads(text)
    dist.pop("version", None)
    dist.pop("description", None)
    return dist


def sample_hypers(dist: dict, rng: np.random.Generator) -> FmgdHyperparams:
    values = {}
    for name in sorted(dist):
        spec = dist[name]
        if isinstance(spec, dict) and "choice" in spec:
            opts = spec["choice"]
            values[name] = opts[int(rng.integers(len(opts)))]
        elif isinstance(spec, dict) and "log_uniform" in spec:
            lo, hi = spec["log_uniform"]
            values[name] = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
        elif isinstance(spec, dict) and "uniform" in spec:
            lo, hi = spec["uniform"]
            values[name] = float(rng.uniform(lo, hi))
        else:
            values[name] = spec
    return FmgdHyperparams.from_dict(values)


@dataclass
class SearchReport:
    settings: list  # FmgdHyperparams per setting
    fractions: list  # success fraction per setting
    successes: list  # per setting, list of bools per seed
    best_index: int
    best_fraction: float
    average_fraction: float
    extra: dict = field(default_factory=dict)

    @property
    def best_setting(self) -> FmgdHyperparams:
        return self.settings[self.best_index]

    def to_dict(self) -> dict:
        return {
            "best_index": self.best_index,
            "best_fraction": self.best_fraction,
            "average_fraction": self.average_fraction,
            "best_setting": self.best_setting.to_dict(),
            "fractions": list(self.fractions),
        }


def _setting_rng(master_seed: int, setting: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(setting), 0x5EA5C4]))


def _run_setting(args):
    graph, hypers, master_seed, setting, n_seeds = args
    results = train_seeds(graph, hypers, master_seed, list(range(n_seeds)), setting=setting)
    return [r.converged for r in results]


def random_search(
    graph,
    hyper_distribution: dict,
    n_settings: int,
    n_seeds_per_setting: int,
    master_seed: int,
    jobs: Optional[int] = 1,
    first_setting: int = 1,
) -> SearchReport:
    """Evaluate ``n_settings`` sampled settings with ``n_seeds_per_setting`` runs each.

    Setting indices start at ``first_setting`` (index 0 is reserved for the
    vanilla baseline so its noise streams never collide with a search row).
    Results do not depend on ``jobs``.
    """
    settings = [
        sample_hypers(hyper_distribution, _setting_rng(master_seed, first_setting + i)) for i in range(n_settings)
    ]
    tasks = [(graph, h, master_seed, first_setting + i, n_seeds_per_setting) for i, h in enumerate(settings)]
    jobs = jobs or os.cpu_count() or 1
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as ex:
            successes = list(ex.map(_run_setting, tasks))
    else:
        successes = [_run_setting(t) for t in tasks]
    fractions = [sum(s) / len(s) if s else 0.0 for s in successes]
    best = int(np.argmax(fractions)) if fractions else 0
    total = sum(len(s) for s in successes)
    avg = sum(sum(s) for s in successes) / total if total else 0.0
    return SearchReport(settings, fractions, successes, best, fractions[best] if fractions else 0.0, avg)
