"""Budget accounting: warm-up measurement, iteration planning, hard stops."""

import numpy as np
import pytest

from tftb.budget import BudgetClock, VirtualClock, WallClock
from tftb.errors import BudgetError
from tftb.trainer import epoch_equivalent_batches


def test_measure_warmup_direct_formula():
    clock = BudgetClock(total_budget=100.0)
    clock.measure_warmup(batches_processed=20, elapsed=4.0)  # B=10, m=2
    assert clock.tb == pytest.approx(0.2)
    assert clock.consumed == pytest.approx(4.0)

    small = BudgetClock(total_budget=1.0)
    small.measure_warmup(batches_processed=1, elapsed=0.05)  # B=1, m=1
    assert small.tb == pytest.approx(0.05)
    assert small.consumed == pytest.approx(0.05)


def test_measure_warmup_rejects_zero_batches():
    clock = BudgetClock(total_budget=10.0)
    with pytest.raises(BudgetError):
        clock.measure_warmup(batches_processed=0, elapsed=1.0)


def test_plan_iterations_arithmetic():
    clock = BudgetClock(total_budget=10.0)
    clock.measure_warmup(batches_processed=10, elapsed=2.0)  # tb = 0.2, consumed = 2
    assert clock.plan_iterations() == 40

    exhausted = BudgetClock(total_budget=5.0)
    exhausted.measure_warmup(batches_processed=10, elapsed=2.0)
    exhausted.charge(3.5)
    assert exhausted.plan_iterations() == 0


def test_plan_iterations_in_epoch_equivalents():
    clock = BudgetClock(total_budget=10.0)
    clock.measure_warmup(batches_processed=10, elapsed=2.0)  # tb = 0.2, 40 batches left
    batches = clock.plan_iterations()
    per_epoch = epoch_equivalent_batches(320, 32)
    assert batches / per_epoch == pytest.approx(4.0)


def test_plan_iterations_monotone_in_consumed():
    clock = BudgetClock(total_budget=10.0)
    clock.measure_warmup(batches_processed=10, elapsed=1.0)
    previous = clock.plan_iterations()
    for _ in range(40):
        clock.charge(0.17)
        now = clock.plan_iterations()
        assert now <= previous
        previous = now


def test_should_stop_overrun_avoidance_rule():
    clock = BudgetClock(total_budget=10.0)
    clock.measure_warmup(batches_processed=10, elapsed=2.0)  # tb = 0.2
    clock.charge(10.0 - clock.consumed - 0.1)  # consumed = T - 0.5 * tb
    assert clock.should_stop()

    fresh = BudgetClock(total_budget=10.0)
    fresh.tb = 0.2
    assert not fresh.should_stop()


def test_should_stop_flips_exactly_when_next_batch_no_longer_fits():
    durations = [0.3, 0.3, 0.3, 0.3]
    clock = BudgetClock(total_budget=1.0)
    clock.measure_warmup(batches_processed=1, elapsed=0.3)
    ran = 0
    while not clock.should_stop():
        clock.observe_batch(durations[ran])
        ran += 1
    # 0.3 warm-up + two more 0.3 batches fit; a third would overrun
    assert ran == 2
    assert clock.consumed == pytest.approx(0.9)


def test_charge_identity_and_additivity():
    clock = BudgetClock(total_budget=10.0)
    clock.charge(0.0)
    assert clock.consumed == 0.0
    clock.charge(1.5)
    clock.charge(1.5)
    assert clock.consumed == pytest.approx(3.0)
    with pytest.raises(BudgetError):
        clock.charge(-0.1)


def test_randomized_schedules_never_overrun_by_more_than_one_batch():
    rng = np.random.default_rng(13)
    for _ in range(200):
        total = float(rng.uniform(0.5, 5.0))
        clock = BudgetClock(total_budget=total)
        clock.measure_warmup(batches_processed=1, elapsed=float(rng.uniform(0.01, 0.2)))
        max_duration = clock.tb
        while not clock.should_stop():
            duration = float(rng.uniform(0.005, 0.4))
            clock.observe_batch(duration)
            max_duration = max(max_duration, duration)
        assert clock.consumed <= total + max_duration + 1e-9
        assert clock.tb_max == pytest.approx(max_duration)


def test_consumed_never_decreases():
    clock = BudgetClock(total_budget=50.0)
    clock.measure_warmup(batches_processed=4, elapsed=1.0)
    seen = [clock.consumed]
    rng = np.random.default_rng(0)
    for _ in range(100):
        if rng.uniform() < 0.5:
            clock.observe_batch(float(rng.uniform(0, 0.3)))
        else:
            clock.charge(float(rng.uniform(0, 0.1)))
        assert clock.consumed >= seen[-1]
        seen.append(clock.consumed)


def test_budget_none_disables_enforcement_but_keeps_accounting():
    clock = BudgetClock(total_budget=None)
    clock.measure_warmup(batches_processed=2, elapsed=0.0)  # allowed when unbudgeted
    clock.observe_batch(1.0)
    assert not clock.should_stop()
    assert clock.plan_iterations() is None
    assert clock.trace()["consumed_total"] == pytest.approx(1.0)


def test_budgeted_zero_warmup_elapsed_is_an_error():
    clock = BudgetClock(total_budget=5.0)
    with pytest.raises(BudgetError, match="zero elapsed"):
        clock.measure_warmup(batches_processed=2, elapsed=0.0)


def test_plan_iterations_requires_a_measured_batch_time():
    clock = BudgetClock(total_budget=5.0)
    with pytest.raises(BudgetError, match="warm-up"):
        clock.plan_iterations()


def test_ewma_tracks_batch_time_drift():
    clock = BudgetClock(total_budget=1000.0)
    clock.measure_warmup(batches_processed=1, elapsed=0.1)
    for _ in range(200):
        clock.observe_batch(0.4)
    assert clock.tb == pytest.approx(0.4, rel=1e-3)
    assert clock.tb_initial == pytest.approx(0.1)


def test_virtual_clock_replays_scripted_sequences():
    clock = VirtualClock(costs={"batch": 0.5}, sequences={"batch": [0.1, 0.2]})
    elapsed = []
    for _ in range(4):
        with clock.measure("batch") as span:
            pass
        elapsed.append(span.elapsed)
    assert elapsed == [0.1, 0.2, 0.5, 0.5]  # sequence first, then the fixed cost
    assert clock.now() == pytest.approx(1.3)
    with clock.measure("other") as span:
        pass
    assert span.elapsed == 0.0


def test_wall_clock_measures_real_time():
    clock = WallClock()
    t0 = clock.now()
    with clock.measure("work") as span:
        sum(range(10000))
    assert span.elapsed >= 0.0
    assert clock.now() >= t0
