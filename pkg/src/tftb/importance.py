"""Loss-based sample importance: score history, ranking, subset selection.

Each sample's importance is derived from its recent training losses: the
effective score is ``mean + lambda_var * std`` over a sliding window, so
samples the model still struggles with rank high, and samples whose loss
swings between passes get an extra push to stay in the pool.  Ranking is
descending by score with ascending-id tie-breaks, and the active subset keeps
the top ``(1 - alpha)`` fraction, either globally or per class.

Samples outside the active subset receive no new losses; their history (and
hence their score) goes stale until the full universe is merged and re-ranked,
at which point a stale-but-high score wins back a slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data.dataset import Dataset
from .errors import ConfigError, LedgerError, SelectionError


def round_half_up(x: float) -> int:
    # tiny nudge so values like 0.7 * 50000 = 34999.999999999996 land right
    return int(math.floor(x + 0.5 + 1e-9))


def subset_size(n: int, alpha: float) -> int:
    """|X_s| for a dataset of n samples at sampling ratio alpha."""
    return round_half_up((1.0 - alpha) * n)


class ImportanceLedger:
    """Per-sample loss history over a sliding window of the last W passes."""

    def __init__(self, sample_ids: Iterable[int], window: int):
        if window < 1:
            raise ConfigError(f"score window must be >= 1, got {window}")
        self.window = window
        self._history: dict[int, list[float]] = {int(i): [] for i in sample_ids}
        self.last_observed_epoch: dict[int, int] = {}
        if not self._history:
            raise LedgerError("ledger needs at least one sample id")

    def __len__(self) -> int:
        return len(self._history)

    @property
    def ids(self) -> list[int]:
        return list(self._history)

    def history(self, sample_id: int) -> tuple[float, ...]:
        try:
            return tuple(self._history[sample_id])
        except KeyError:
            raise LedgerError(f"unknown sample id {sample_id}") from None

    def observation_counts(self) -> dict[int, int]:
        return {i: len(h) for i, h in self._history.items()}

    def record_losses(self, observations: Sequence[tuple[int, float]], epoch: int) -> None:
        """Append one loss per (id, loss) pair, evicting beyond the window."""
        for sample_id, loss in observations:
            sample_id = int(sample_id)
            hist = self._history.get(sample_id)
            if hist is None:
                raise LedgerError(f"unknown sample id {sample_id}")
            loss = float(loss)
            if not math.isfinite(loss) or loss < 0.0:
                raise LedgerError(f"sample {sample_id}: loss must be finite and >= 0, got {loss}")
            hist.append(loss)
            if len(hist) > self.window:
                del hist[: len(hist) - self.window]
            self.last_observed_epoch[sample_id] = epoch

    def effective_scores(self, lambda_var: float) -> dict[int, float]:
        """mean + lambda_var * population std over each sample's window.

        Every id must have at least one observation; selection before the
        warm-up pass has finished is a caller bug.
        """
        scores: dict[int, float] = {}
        for sample_id, hist in self._history.items():
            if not hist:
                raise LedgerError(
                    f"sample {sample_id} has no observed losses; warm-up must precede selection"
                )
            arr = np.asarray(hist)
            scores[sample_id] = float(arr.mean() + lambda_var * arr.std())
        return scores


def rank(scores: Mapping[int, float]) -> list[int]:
    """Ids in descending score order; ties broken by ascending id."""
    if not scores:
        raise LedgerError("cannot rank an empty score map")
    for sample_id, score in scores.items():
        if math.isnan(score):
            raise LedgerError(f"NaN score for sample id {sample_id}")
    return sorted(scores, key=lambda i: (-scores[i], i))


@dataclass(frozen=True)
class SubsetPlan:
    """The current selected/excluded partition and the alpha that produced it."""

    selected_ids: tuple[int, ...]
    excluded_ids: tuple[int, ...]
    alpha: float
    epoch: int
    per_class_counts: dict[int, int]

    def __post_init__(self):
        overlap = set(self.selected_ids) & set(self.excluded_ids)
        if overlap:
            raise SelectionError(f"selected/excluded overlap: {sorted(overlap)[:5]}")

    @property
    def all_ids(self) -> frozenset[int]:
        return frozenset(self.selected_ids) | frozenset(self.excluded_ids)


def _stratified_quotas(class_sizes: dict[int, int], alpha: float, total_target: int) -> dict[int, int]:
    exact = {c: (1.0 - alpha) * n for c, n in class_sizes.items()}
    quotas = {c: round_half_up(v) for c, v in exact.items()}
    for c, q in quotas.items():
        if q == 0:
            raise SelectionError(
                f"alpha={alpha} leaves class {c} (size {class_sizes[c]}) with no retainable samples"
            )
    diff = total_target - sum(quotas.values())
    if diff == 0:
        return quotas
    # push the remainder onto the largest classes first, preferring classes
    # whose quota was rounded the opposite way so every class stays within
    # one sample of exact proportionality
    by_size = sorted(class_sizes, key=lambda c: (-class_sizes[c], c))
    if diff > 0:
        preferred = [c for c in by_size if quotas[c] <= exact[c] and quotas[c] < class_sizes[c]]
        fallback = [c for c in by_size if c not in preferred and quotas[c] < class_sizes[c]]
        for c in (preferred + fallback)[:diff]:
            quotas[c] += 1
        diff = total_target - sum(quotas.values())
    if diff < 0:
        preferred = [c for c in by_size if quotas[c] >= exact[c] and quotas[c] > 1]
        fallback = [c for c in by_size if c not in preferred and quotas[c] > 1]
        for c in (preferred + fallback)[: -diff]:
            quotas[c] -= 1
        diff = total_target - sum(quotas.values())
    if diff != 0:
        raise SelectionError(
            f"cannot hit subset size {total_target} with class sizes {class_sizes} at alpha={alpha}"
        )
    return quotas


def select_subset(
    scores: Mapping[int, float],
    dataset: Dataset,
    alpha: float,
    stratified: bool,
    epoch: int = 0,
) -> SubsetPlan:
    """Keep the top (1 - alpha) fraction by score, globally or per class."""
    if not 0.0 <= alpha < 1.0:
        raise ConfigError(f"alpha must be in [0, 1), got {alpha}")
    if len(dataset) == 0:
        raise SelectionError("cannot select a subset of an empty dataset")
    ids = dataset.ids
    missing = [i for i in ids if i not in scores]
    if missing:
        raise LedgerError(f"no score for sample ids {missing[:5]} (and possibly more)")

    total_target = subset_size(len(ids), alpha)
    if stratified:
        tags = dataset.class_tags()
        by_class: dict[int, list[int]] = {}
        for i in ids:
            by_class.setdefault(tags[i], []).append(i)
        quotas = _stratified_quotas({c: len(v) for c, v in by_class.items()}, alpha, total_target)
        selected: list[int] = []
        for c, members in by_class.items():
            ordered = rank({i: scores[i] for i in members})
            selected.extend(ordered[: quotas[c]])
    else:
        selected = rank({i: scores[i] for i in ids})[:total_target]

    selected_set = set(selected)
    excluded = [i for i in ids if i not in selected_set]
    tags = dataset.class_tags()
    per_class: dict[int, int] = {}
    for i in selected:
        per_class[tags[i]] = per_class.get(tags[i], 0) + 1
    return SubsetPlan(
        selected_ids=tuple(sorted(selected)),
        excluded_ids=tuple(sorted(excluded)),
        alpha=alpha,
        epoch=epoch,
        per_class_counts=per_class,
    )


def merge_and_reselect(
    ledger: ImportanceLedger,
    previous: SubsetPlan,
    dataset: Dataset,
    alpha: float,
    lambda_var: float,
    stratified: bool,
    epoch: int = 0,
) -> SubsetPlan:
    """Re-rank the full id universe (stale scores included) and re-partition."""
    if previous.all_ids != frozenset(dataset.ids):
        raise SelectionError("previous subset plan does not partition this dataset's ids")
    scores = ledger.effective_scores(lambda_var)
    return select_subset(scores, dataset, alpha, stratified, epoch=epoch)


@dataclass(frozen=True)
class AlphaSchedule:
    """Convergence-driven alpha adjustment; off by default.

    Over a window of recent losses, relative improvement below ``eps_slow``
    shrinks alpha (admit more diverse samples); improvement above
    ``eps_fast`` grows it (focus on high-impact samples).
    """

    enabled: bool = False
    window: int = 3
    eps_slow: float = 0.01
    eps_fast: float = 0.10
    delta_alpha: float = 0.05
    alpha_min: float = 0.0
    alpha_max: float = 0.9

    def __post_init__(self):
        if self.window < 2:
            raise ConfigError(f"alpha schedule window must be >= 2, got {self.window}")
        if self.eps_slow >= self.eps_fast:
            raise ConfigError("alpha schedule needs eps_slow < eps_fast")
        if not 0.0 <= self.alpha_min <= self.alpha_max < 1.0:
            raise ConfigError("alpha schedule needs 0 <= alpha_min <= alpha_max < 1")


def adapt_alpha(current_alpha: float, loss_history: Sequence[float], cfg: AlphaSchedule) -> float:
    """New alpha from recent loss improvement, clamped to the schedule bounds."""
    if len(loss_history) < cfg.window:
        raise ConfigError(
            f"need at least {cfg.window} loss entries to adapt alpha, got {len(loss_history)}"
        )
    first = loss_history[-cfg.window]
    last = loss_history[-1]
    improvement = (first - last) / max(abs(first), 1e-12)
    if improvement < cfg.eps_slow:
        new_alpha = current_alpha - cfg.delta_alpha
    elif improvement > cfg.eps_fast:
        new_alpha = current_alpha + cfg.delta_alpha
    else:
        new_alpha = current_alpha
    return min(max(new_alpha, cfg.alpha_min), cfg.alpha_max)


def ledger_rows(
    ledger: ImportanceLedger, plan: SubsetPlan, lambda_var: float, epoch: int
) -> list[tuple[int, int, float, float, float, int]]:
    """Rows (epoch, sample_id, mean, std, effective_score, selected) for a CSV dump."""
    selected = set(plan.selected_ids)
    rows = []
    for sample_id in sorted(ledger.ids):
        hist = np.asarray(ledger.history(sample_id))
        mean = float(hist.mean()) if hist.size else float("nan")
        std = float(hist.std()) if hist.size else float("nan")
        rows.append(
            (
                epoch,
                sample_id,
                mean,
                std,
                mean + lambda_var * std,
                1 if sample_id in selected else 0,
            )
        )
    return rows
