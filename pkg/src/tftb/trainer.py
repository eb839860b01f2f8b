"""Training engine: budgeted selective training and its random-sampling baseline.

The selective mode follows one fixed shape: warm up for ``warmup_epochs``
passes over the full dataset while recording every sample's loss and the
batch time, rank samples by effective score, keep the top ``(1 - alpha)``
fraction, then loop epoch-equivalents on the active subset -- re-scoring what
it trains on, merging the full id universe, and re-selecting every
``rerank_period`` epochs -- until the time budget, the planned iteration
count, the epoch cap, or early stopping ends the run.

An epoch-equivalent always exposes the model to as many samples as one full
pass over the complete dataset, cycling and reshuffling the active subset as
needed, so baseline and selective runs are comparable per epoch index.
Batch order within the subset is shuffled: selection is by importance,
ordering stays random.

Both modes share the loop.  The baseline trains on the full dataset with
fresh random shuffles each epoch and identical optimizer, losses, budget
enforcement, and early stopping.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Callable

import numpy as np

from .budget import BudgetClock, WallClock
from .data.dataset import Dataset
from .errors import BudgetError, ConfigError, NonFiniteError, TrainingAbort
from .importance import (
    AlphaSchedule,
    ImportanceLedger,
    SubsetPlan,
    adapt_alpha,
    ledger_rows,
    merge_and_reselect,
    select_subset,
)
from .manifest import EpochReport, RunManifest
from .nn.adam import init_adam_state, adam_step
from .nn.models import LOSS_KINDS, ModelParams, loss_and_grad, per_sample_losses

MODES = ("baseline", "tftb")


@dataclass
class TrainConfig:
    mode: str = "baseline"
    alpha: float = 0.3
    warmup_epochs: int = 1
    batch_size: int = 32
    lr: float = 1e-2
    loss_kind: str = "cross_entropy"
    budget_seconds: float | None = None
    max_epochs: int | None = 20
    rerank_period: int = 1
    lambda_var: float = 1.0
    score_window: int = 5
    stratified: bool = True
    early_stop_patience: int = 5
    seed: int = 0
    adaptive_alpha: AlphaSchedule = field(default_factory=AlphaSchedule)
    refresh_excluded_period: int = 0  # 0 disables forward-only score refreshes

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.warmup_epochs < 1:
            raise ConfigError(f"warmup_epochs must be >= 1, got {self.warmup_epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.loss_kind not in LOSS_KINDS:
            raise ConfigError(f"loss_kind must be one of {LOSS_KINDS}, got {self.loss_kind!r}")
        if self.budget_seconds is not None and self.budget_seconds <= 0:
            raise ConfigError(f"budget_seconds must be positive, got {self.budget_seconds}")
        if self.max_epochs is not None and self.max_epochs < self.warmup_epochs:
            raise ConfigError(
                f"max_epochs ({self.max_epochs}) smaller than warmup_epochs ({self.warmup_epochs})"
            )
        if self.budget_seconds is None and self.max_epochs is None:
            raise ConfigError("either budget_seconds or max_epochs must be set")
        if self.rerank_period < 1:
            raise ConfigError(f"rerank_period must be >= 1, got {self.rerank_period}")
        if self.lambda_var < 0:
            raise ConfigError(f"lambda_var must be >= 0, got {self.lambda_var}")
        if self.score_window < 1:
            raise ConfigError(f"score_window must be >= 1, got {self.score_window}")
        if self.early_stop_patience < 1:
            raise ConfigError(f"early_stop_patience must be >= 1, got {self.early_stop_patience}")
        if self.refresh_excluded_period < 0:
            raise ConfigError(
                f"refresh_excluded_period must be >= 0, got {self.refresh_excluded_period}"
            )

    def to_dict(self) -> dict:
        return asdict(self)


def epoch_equivalent_batches(dataset_size: int, batch_size: int) -> int:
    """Batches per epoch-equivalent: one full-dataset exposure."""
    if dataset_size < 1 or batch_size < 1:
        raise ConfigError(
            f"dataset_size and batch_size must be >= 1, got {dataset_size}, {batch_size}"
        )
    return math.ceil(dataset_size / batch_size)


def early_stop_check(val_losses, patience: int) -> bool:
    """True iff the best loss has not improved (by > 1e-9) for `patience` epochs."""
    if patience < 1:
        raise ConfigError(f"patience must be >= 1, got {patience}")
    best = math.inf
    stale = 0
    for v in val_losses:
        if v < best - 1e-9:
            best = v
            stale = 0
        else:
            stale += 1
    return stale >= patience


def _epoch_batch_sizes(n_total: int, batch_size: int) -> list[int]:
    n_batches = epoch_equivalent_batches(n_total, batch_size)
    tail = n_total - batch_size * (n_batches - 1)
    return [batch_size] * (n_batches - 1) + [tail]


def _epoch_batch_ids(
    pool: list[int], sizes: list[int], rng: np.random.Generator
) -> list[list[int]]:
    """Cut one epoch-equivalent of batches from the pool, cycling with reshuffles."""
    needed = sum(sizes)
    order: list[int] = []
    while len(order) < needed:
        perm = np.asarray(pool, dtype=np.int64)
        rng.shuffle(perm)
        order.extend(perm.tolist())
    batches: list[list[int]] = []
    at = 0
    for size in sizes:
        batches.append(order[at : at + size])
        at += size
    return batches


def _stack_dataset(dataset: Dataset, loss_kind: str):
    feats = np.stack([s.features for s in dataset.samples])
    if loss_kind == "cross_entropy":
        targets = np.asarray([s.target for s in dataset.samples], dtype=np.int64)
    else:
        targets = np.stack([s.target for s in dataset.samples])
    return feats, targets, dataset.ids


def _mean_eval_loss(params, feats, targets, loss_kind, batch_size) -> float:
    total = 0.0
    n = len(feats)
    for lo in range(0, n, batch_size):
        hi = min(lo + batch_size, n)
        total += float(per_sample_losses(params, feats[lo:hi], targets[lo:hi], loss_kind).sum())
    return total / n


def train_tftb(
    params: ModelParams,
    train_set: Dataset,
    val_set: Dataset,
    cfg: TrainConfig,
    clock=None,
    ledger_writer: Callable | None = None,
) -> tuple[ModelParams, RunManifest]:
    """Budgeted selective training; returns the trained params and manifest."""
    if cfg.mode != "tftb":
        raise ConfigError(f"train_tftb requires mode='tftb', got {cfg.mode!r}")
    return _run(params, train_set, val_set, cfg, clock or WallClock(), ledger_writer)


def train_baseline(
    params: ModelParams,
    train_set: Dataset,
    val_set: Dataset,
    cfg: TrainConfig,
    clock=None,
) -> tuple[ModelParams, RunManifest]:
    """Random-sampling baseline under the same loop, budget, and early stopping."""
    if cfg.mode != "baseline":
        raise ConfigError(f"train_baseline requires mode='baseline', got {cfg.mode!r}")
    return _run(params, train_set, val_set, cfg, clock or WallClock(), None)


def _run(params, train_set, val_set, cfg, clock, ledger_writer):
    cfg.validate()
    if len(train_set) == 0:
        raise ConfigError("training set is empty")
    selective = cfg.mode == "tftb"

    rng = np.random.default_rng(cfg.seed)
    budget = BudgetClock(cfg.budget_seconds)
    budget.start(clock.now())
    adam_state = init_adam_state(params)

    feats, targets, ids_in_order = _stack_dataset(train_set, cfg.loss_kind)
    row_of = {sid: i for i, sid in enumerate(ids_in_order)}
    have_val = len(val_set) > 0
    if have_val:
        val_feats, val_targets, _ = _stack_dataset(val_set, cfg.loss_kind)
        n_val_batches = epoch_equivalent_batches(len(val_set), cfg.batch_size)

    n = len(train_set)
    sizes = _epoch_batch_sizes(n, cfg.batch_size)
    n_b = len(sizes)
    all_ids_sorted = sorted(train_set.ids)

    ledger = ImportanceLedger(train_set.ids, cfg.score_window) if selective else None
    plan: SubsetPlan | None = None
    alpha_now = cfg.alpha

    reports: list[EpochReport] = []
    val_losses: list[float] = []
    train_loss_hist: list[float] = []
    stop_reason: str | None = None
    epoch = 0
    executed_batches = 0
    planned_initial: int | None = None

    def batch_step(batch_ids):
        rows = [row_of[i] for i in batch_ids]
        result = loss_and_grad(
            params, feats[rows], targets[rows], cfg.loss_kind, sample_ids=batch_ids
        )
        adam_step(params, result.grad_weights, result.grad_biases, adam_state, cfg.lr)
        if ledger is not None:
            ledger.record_losses(
                list(zip(batch_ids, result.per_sample_losses.tolist())), epoch
            )
        return result

    def run_validation():
        if not have_val:
            return None, False
        if budget.tb is not None and not budget.fits(budget.tb * n_val_batches):
            return None, True  # no room left; let the caller stop on budget
        with clock.measure("validation") as span:
            loss = _mean_eval_loss(params, val_feats, val_targets, cfg.loss_kind, cfg.batch_size)
        budget.charge(span.elapsed)
        return loss, False

    def assemble_manifest(reason, error=None):
        budget_trace = budget.trace()
        budget_trace.update(
            {
                "planned_batches_initial": planned_initial,
                "executed_batches": executed_batches,
                "epoch_equivalent_batches": n_b,
            }
        )
        return RunManifest(
            mode=cfg.mode,
            seed=cfg.seed,
            config={"train": cfg.to_dict()},
            dataset={
                "train_fingerprint": train_set.fingerprint(),
                "val_fingerprint": val_set.fingerprint() if have_val else None,
                "n_train": n,
                "n_val": len(val_set),
                "num_classes": train_set.num_classes,
                "feature_shape": list(train_set.feature_shape),
                "meta": train_set.meta,
            },
            epochs=[r.to_dict() for r in reports],
            budget=budget_trace,
            final_metrics={
                "final_val_loss": val_losses[-1] if val_losses else None,
                "best_val_loss": min(val_losses) if val_losses else None,
                "final_train_loss": train_loss_hist[-1] if train_loss_hist else None,
            },
            stop_reason=reason,
            error=error,
            created_at=(
                datetime.now(timezone.utc).isoformat() if getattr(clock, "is_wall", False) else None
            ),
        )

    try:
        # ---- warm-up: full-dataset epochs; measures tb, seeds the ledger ----
        warm_elapsed = 0.0
        warm_batches = 0
        for _ in range(cfg.warmup_epochs):
            epoch += 1
            loss_weighted = 0.0
            samples_seen = 0
            epoch_wall = 0.0
            with clock.measure("shuffle") as span:
                warmup_batch_lists = _epoch_batch_ids(all_ids_sorted, sizes, rng)
            warm_elapsed += span.elapsed  # folded into the tb measurement window
            epoch_wall += span.elapsed
            for batch_ids in warmup_batch_lists:
                with clock.measure("batch") as span:
                    result = batch_step(batch_ids)
                warm_batches += 1
                warm_elapsed += span.elapsed
                epoch_wall += span.elapsed
                samples_seen += len(batch_ids)
                loss_weighted += result.mean_loss * len(batch_ids)
                if cfg.budget_seconds is not None:
                    if warm_batches == 1:
                        projected = span.elapsed * n_b * cfg.warmup_epochs
                        if projected > cfg.budget_seconds:
                            raise BudgetError(
                                f"budget {cfg.budget_seconds}s smaller than projected "
                                f"warm-up cost {projected:.3f}s "
                                f"({n_b * cfg.warmup_epochs} batches at {span.elapsed:.4f}s)"
                            )
                    if warm_elapsed + budget.consumed > cfg.budget_seconds:
                        raise BudgetError(
                            f"budget {cfg.budget_seconds}s exhausted during warm-up "
                            f"({warm_elapsed:.3f}s elapsed after {warm_batches} batches)"
                        )
            val_loss, _ = run_validation()
            if val_loss is not None:
                val_losses.append(val_loss)
            mean_train = loss_weighted / samples_seen
            train_loss_hist.append(mean_train)
            reports.append(
                EpochReport(
                    epoch=epoch,
                    phase="warmup",
                    mean_train_loss=mean_train,
                    val_loss=val_loss,
                    selected_size=n,
                    alpha=0.0,
                    samples_seen=samples_seen,
                    batches=n_b,
                    wall_seconds=epoch_wall,
                    consumed_seconds=budget.consumed + warm_elapsed,
                )
            )
            if early_stop_check(val_losses, cfg.early_stop_patience):
                stop_reason = "early_stop"
                break
        budget.measure_warmup(warm_batches, warm_elapsed)

        # ---- initial ranking and subset selection ----
        if selective and stop_reason is None:
            with clock.measure("rank") as span:
                scores = ledger.effective_scores(cfg.lambda_var)
                plan = select_subset(scores, train_set, alpha_now, cfg.stratified, epoch=epoch)
            budget.charge(span.elapsed)
            if ledger_writer is not None:
                ledger_writer(ledger_rows(ledger, plan, cfg.lambda_var, epoch))
        planned_initial = budget.plan_iterations()

        # ---- main loop: one epoch-equivalent per iteration ----
        while stop_reason is None:
            if cfg.max_epochs is not None and epoch >= cfg.max_epochs:
                stop_reason = "epoch_cap"
                break
            if budget.should_stop():
                stop_reason = "budget_exhausted"
                break
            planned = budget.plan_iterations()
            if planned == 0:
                stop_reason = "budget_exhausted"
                break

            epoch += 1
            pool = list(plan.selected_ids) if selective else all_ids_sorted
            with clock.measure("shuffle") as span:
                batch_id_lists = _epoch_batch_ids(pool, sizes, rng)
            budget.charge(span.elapsed)
            cap = n_b if planned is None else min(n_b, planned)

            loss_weighted = 0.0
            samples_seen = 0
            epoch_wall = 0.0
            ran = 0
            stopped_mid_epoch = False
            for batch_ids in batch_id_lists[:cap]:
                if budget.should_stop():
                    stopped_mid_epoch = True
                    break
                with clock.measure("batch") as span:
                    result = batch_step(batch_ids)
                budget.observe_batch(span.elapsed)
                epoch_wall += span.elapsed
                ran += 1
                samples_seen += len(batch_ids)
                loss_weighted += result.mean_loss * len(batch_ids)
            executed_batches += ran
            if ran == 0:
                epoch -= 1
                stop_reason = "budget_exhausted"
                break

            val_loss = None
            no_room_for_val = False
            if not stopped_mid_epoch:
                val_loss, no_room_for_val = run_validation()
            if val_loss is not None:
                val_losses.append(val_loss)

            mean_train = loss_weighted / samples_seen
            train_loss_hist.append(mean_train)
            reports.append(
                EpochReport(
                    epoch=epoch,
                    phase="selective" if selective else "full",
                    mean_train_loss=mean_train,
                    val_loss=val_loss,
                    selected_size=len(pool),
                    alpha=alpha_now if selective else 0.0,
                    samples_seen=samples_seen,
                    batches=ran,
                    wall_seconds=epoch_wall,
                    consumed_seconds=budget.consumed,
                )
            )

            if stopped_mid_epoch or no_room_for_val:
                stop_reason = "budget_exhausted"
            elif ran < n_b:
                stop_reason = "planned_iterations_exhausted"
            elif early_stop_check(val_losses, cfg.early_stop_patience):
                stop_reason = "early_stop"
            if stop_reason is not None:
                break

            if selective:
                schedule = cfg.adaptive_alpha
                if schedule.enabled and len(train_loss_hist) >= schedule.window:
                    alpha_now = adapt_alpha(alpha_now, train_loss_hist, schedule)
                if (
                    cfg.refresh_excluded_period
                    and (epoch - cfg.warmup_epochs) % cfg.refresh_excluded_period == 0
                    and plan.excluded_ids
                ):
                    est = (budget.tb or 0.0) * epoch_equivalent_batches(
                        len(plan.excluded_ids), cfg.batch_size
                    )
                    if budget.fits(est):
                        with clock.measure("refresh") as span:
                            _refresh_excluded(
                                params, feats, targets, row_of, plan.excluded_ids,
                                cfg, ledger, epoch,
                            )
                        budget.charge(span.elapsed)
                if (epoch - cfg.warmup_epochs) % cfg.rerank_period == 0:
                    with clock.measure("rank") as span:
                        plan = merge_and_reselect(
                            ledger, plan, train_set, alpha_now,
                            lambda_var=cfg.lambda_var,
                            stratified=cfg.stratified,
                            epoch=epoch,
                        )
                    budget.charge(span.elapsed)
                    if ledger_writer is not None:
                        ledger_writer(ledger_rows(ledger, plan, cfg.lambda_var, epoch))
    except NonFiniteError as exc:
        manifest = assemble_manifest(
            "non_finite_abort",
            error={"message": str(exc), "sample_id": exc.sample_id},
        )
        raise TrainingAbort(str(exc), manifest=manifest) from exc

    return params, assemble_manifest(stop_reason or "epoch_cap")


def _refresh_excluded(params, feats, targets, row_of, excluded_ids, cfg, ledger, epoch):
    """Forward-only loss pass over excluded samples to un-stale their scores."""
    ids = list(excluded_ids)
    for lo in range(0, len(ids), cfg.batch_size):
        chunk = ids[lo : lo + cfg.batch_size]
        rows = [row_of[i] for i in chunk]
        losses = per_sample_losses(params, feats[rows], targets[rows], cfg.loss_kind)
        ledger.record_losses(list(zip(chunk, losses.tolist())), epoch)
