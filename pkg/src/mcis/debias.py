"""Bias elimination and coarse-to-fine calibration of the trade-off weights.

The debiased score is ``factual - (lambda_hat * label_cf + lambda_tilde *
context_cf)``. The two weights are calibrated once per validation set by
maximizing weighted F1 over a coarse lattice (default step 0.5 on
[-2, 2]^2), then a fine lattice (default step 0.1) around the coarse
argmax. Ties break toward the smallest lambda_hat, then lambda_tilde.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateValidation

ABLATION_MODES = ("full", "no_label_elim", "no_context_elim", "no_gss")


@dataclass
class LambdaPair:
    lambda_hat: float
    lambda_tilde: float

    def to_dict(self):
        return {"lambda_hat": self.lambda_hat, "lambda_tilde": self.lambda_tilde}


@dataclass
class SearchConfig:
    interval: tuple = (-2.0, 2.0)
    coarse_step: float = 0.5
    fine_step: float = 0.1
    fine_radius: float = None  # defaults to coarse_step

    def __post_init__(self):
        a, b = self.interval
        if not a < b:
            raise ValueError("interval must be nonempty")
        if self.coarse_step <= 0 or self.fine_step <= 0:
            raise ValueError("steps must be positive")
        if self.fine_step > self.coarse_step:
            raise ValueError("fine_step must not exceed coarse_step")
        if self.fine_radius is None:
            self.fine_radius = self.coarse_step


@dataclass
class PredictionTriple:
    factual: float
    label_cf: float
    context_cf: float
    gold: float


@dataclass
class SearchResult:
    pair: LambdaPair
    best_metric: float
    trace: list            # (lambda_hat, lambda_tilde, metric, stage)
    coarse_cells: int
    fine_cells: int
    exhaustive_best: float = None
    exhaustive_gap: float = None

    @property
    def n_cells(self):
        return len(self.trace)


def debiased_score(triple, lambdas):
    """factual - (lambda_hat * label_cf + lambda_tilde * context_cf)."""
    return triple.factual - (lambdas.lambda_hat * triple.label_cf
                             + lambdas.lambda_tilde * triple.context_cf)


def apply_debias(triples, lambdas):
    return [debiased_score(t, lambdas) for t in triples]


def lattice_values(lo, hi, step):
    """lo + k*step up to and including an exact-hi endpoint."""
    n = int(np.floor((hi - lo) / step + 1e-9))
    vals = [round(lo + k * step, 9) for k in range(n + 1)]
    if vals[-1] < hi - 1e-9:
        vals.append(hi)
    vals[-1] = hi
    return vals


def _check_polarities(golds, drop_zero):
    g = np.asarray(golds, dtype=np.float64)
    if drop_zero:
        g = g[g != 0.0]
        if g.size == 0:
            raise DegenerateValidation("all gold labels are zero")
        pos, neg = (g > 0).any(), (g < 0).any()
    else:
        pos, neg = (g >= 0).any(), (g < 0).any()
    if not (pos and neg):
        raise DegenerateValidation("validation golds lack one polarity")


def _eval_cells(arrays, cells, drop_zero):
    factual, label_cf, context_cf, gold = arrays
    lh = np.array([c[0] for c in cells])
    lt = np.array([c[1] for c in cells])
    return kernels.lattice_weighted_f1(factual, label_cf, context_cf, gold,
                                       lh, lt, drop_zero)


def _argmax(trace):
    # Max metric first, then lexicographic smallest (lambda_hat, lambda_tilde).
    best = None
    for lh, lt, m, _ in trace:
        if best is None or m > best[2] or (m == best[2] and (lh, lt) < (best[0], best[1])):
            best = (lh, lt, m)
    return best


def grid_search(valid_triples, config=None, metric="weighted_f1",
                drop_zero_gold=True, exhaustive=False, fixed_hat=None,
                fixed_tilde=None):
    """Coarse-to-fine lattice maximization of validation weighted F1.

    ``fixed_hat``/``fixed_tilde`` pin one axis (the single-elimination
    ablations search a 1-D lattice on the other). ``exhaustive``
    additionally evaluates the full fine-step lattice as an oracle and
    records the coarse-to-fine gap.
    """
    if metric != "weighted_f1":
        raise ValueError(f"unsupported search metric {metric!r}")
    if not valid_triples:
        raise DegenerateValidation("empty validation set")
    config = config or SearchConfig()
    arrays = (np.array([t.factual for t in valid_triples]),
              np.array([t.label_cf for t in valid_triples]),
              np.array([t.context_cf for t in valid_triples]),
              np.array([t.gold for t in valid_triples]))
    _check_polarities(arrays[3], drop_zero_gold)
    lo, hi = config.interval

    def axis_values(step, fixed, center=None):
        if fixed is not None:
            return [fixed]
        if center is None:
            return lattice_values(lo, hi, step)
        return lattice_values(max(lo, center - config.fine_radius),
                              min(hi, center + config.fine_radius), step)

    coarse_cells = [(h, t) for h in axis_values(config.coarse_step, fixed_hat)
                    for t in axis_values(config.coarse_step, fixed_tilde)]
    scores = _eval_cells(arrays, coarse_cells, drop_zero_gold)
    trace = [(h, t, float(s), "coarse") for (h, t), s in zip(coarse_cells, scores)]
    c_h, c_t, _ = _argmax(trace)

    fine_cells = [(h, t)
                  for h in axis_values(config.fine_step, fixed_hat, center=c_h)
                  for t in axis_values(config.fine_step, fixed_tilde, center=c_t)]
    fine_cells = [c for c in fine_cells if c not in set(coarse_cells)]
    if fine_cells:
        scores = _eval_cells(arrays, fine_cells, drop_zero_gold)
        trace += [(h, t, float(s), "fine") for (h, t), s in zip(fine_cells, scores)]

    lh, lt, best = _argmax(trace)
    result = SearchResult(LambdaPair(lh, lt), best, trace,
                          coarse_cells=len(coarse_cells),
                          fine_cells=len(trace) - len(coarse_cells))
    if exhaustive:
        full_cells = [(h, t) for h in axis_values(config.fine_step, fixed_hat)
                      for t in axis_values(config.fine_step, fixed_tilde)]
        full_scores = _eval_cells(arrays, full_cells, drop_zero_gold)
        result.exhaustive_best = float(full_scores.max())
        result.exhaustive_gap = result.exhaustive_best - best
    return result


def ablate(mode, valid_triples=None, config=None, drop_zero_gold=True,
           exhaustive=False):
    """Effective lambda policy for the elimination/search ablations."""
    if mode not in ABLATION_MODES:
        raise ValueError(f"unknown ablation mode {mode!r}")
    if mode == "no_gss":
        return SearchResult(LambdaPair(1.0, 1.0), None, [], 0, 0)
    fixed = {"full": {}, "no_label_elim": {"fixed_hat": 0.0},
             "no_context_elim": {"fixed_tilde": 0.0}}[mode]
    return grid_search(valid_triples, config, drop_zero_gold=drop_zero_gold,
                       exhaustive=exhaustive, **fixed)


def triples_from_records(records):
    return [PredictionTriple(r["factual"], r["label_cf"], r["context_cf"], r["gold"])
            for r in records]
